"""Stochastic-gradient optimizers over the parameter partition.

Four optimizers share one epoch loop:

* ``sg``: every step updates the full parameter vector.
* ``sat_sg``: each iteration updates the shared block on one sampled batch,
  then the task-specific block on a second, independently sampled batch,
  evaluated at the intermediate point.
* ``ate_sg``: alternates whole phases (measured in epochs of sampled
  batches) between shared-only and task-specific-only updates.
* ``ate_sg_implemented``: the same alternation, but each epoch re-splits the
  training set into consecutive shuffled mini-batches (a final partial
  batch included) instead of sampling each batch independently.

Epochs are numbered from 0.  A run derives two child generators from its
seed, in order: one for parameter initialization, one for batching.  This
derivation is part of the contract so that external replays can reproduce
a run exactly.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .data import batches_per_epoch, epoch_split, sample_batch
from .losses import aggregate_head_deltas, aggregate_loss
from .metrics import TaskScores, confusion_matrix, weighted_scores
from .model import forward, init_params
from .model import backward as model_backward
from .rng import Rng
from .verify import scope_slice

OPTIMIZER_KINDS = ("sg", "sat_sg", "ate_sg", "ate_sg_implemented")
SCHEDULE_KINDS = ("constant", "power_decay", "plateau_driven")
STOP_REASONS = ("completed", "early_stop", "non_finite")


class TrainingDiverged(RuntimeError):
    """Raised when a loss or gradient stops being finite."""


@dataclass(frozen=True)
class Schedule:
    """Learning-rate stream.

    ``constant`` and ``plateau_driven`` return the start rate for every
    step; plateau-driven rates are additionally scaled down by the plateau
    callback during a run.  ``power_decay`` returns start / (1+i)**power.
    """

    kind: str
    start: float
    power: float = None

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if not (math.isfinite(self.start) and self.start > 0):
            raise ValueError("start rate must be positive and finite")
        if self.kind == "power_decay":
            if self.power is None or not math.isfinite(self.power):
                raise ValueError("power_decay needs a finite power")
        elif self.power is not None:
            raise ValueError(f"{self.kind} does not take a power")

    def rate(self, i):
        if self.kind == "power_decay":
            return self.start / (1.0 + i) ** self.power
        return self.start


@dataclass(frozen=True)
class CycleConfig:
    """Alternation geometry: epochs per shared phase, epochs per
    task-specific phase, steps per epoch, batch size, total epoch budget."""

    shared_epochs: int
    task_epochs: int
    steps_per_epoch: int
    batch_size: int
    epoch_budget: int

    def __post_init__(self):
        for name in ("shared_epochs", "task_epochs", "steps_per_epoch", "batch_size", "epoch_budget"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ValueError(f"{name} must be an integer >= 1")


@dataclass
class ReduceOnPlateau:
    """Multiply the rate by ``factor`` after ``patience`` consecutive
    epochs without improvement; improvement means dropping below
    best - min_delta.  The wait counter resets after a drop."""

    patience: int = 50
    factor: float = 0.75
    min_delta: float = 1e-4
    best: float = math.inf
    wait: int = 0

    def __post_init__(self):
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if not 0.0 < self.factor < 1.0:
            raise ValueError("factor must be in (0, 1)")
        if self.min_delta < 0.0:
            raise ValueError("min_delta must be >= 0")

    def update(self, value):
        """True exactly when the rate should drop after this epoch."""
        if value < self.best - self.min_delta:
            self.best = value
            self.wait = 0
            return False
        self.wait += 1
        if self.wait >= self.patience:
            self.wait = 0
            return True
        return False


@dataclass
class EarlyStopping:
    """Stop after ``patience`` consecutive epochs without a new best
    validation loss; keeps a snapshot of the best weights."""

    patience: int = 350
    best: float = math.inf
    wait: int = 0
    best_params: object = None
    best_epoch: int = -1

    def __post_init__(self):
        if self.patience < 1:
            raise ValueError("patience must be >= 1")

    def update(self, value, params, epoch):
        """True exactly when training should stop after this epoch."""
        if value < self.best:
            self.best = value
            self.best_params = params.copy()
            self.best_epoch = epoch
            self.wait = 0
            return False
        self.wait += 1
        return self.wait >= self.patience


@dataclass(frozen=True)
class CallbackConfig:
    """Callback settings; a None patience disables that callback."""

    plateau_patience: int = 50
    plateau_factor: float = 0.75
    plateau_min_delta: float = 1e-4
    early_stop_patience: int = 350

    def make(self):
        plateau = (
            ReduceOnPlateau(self.plateau_patience, self.plateau_factor, self.plateau_min_delta)
            if self.plateau_patience is not None
            else None
        )
        early = (
            EarlyStopping(self.early_stop_patience)
            if self.early_stop_patience is not None
            else None
        )
        return plateau, early


NO_CALLBACKS = CallbackConfig(None, None, None, None)


@dataclass(frozen=True)
class TrainingProblem:
    """Architecture plus loss configuration, with the head pairing checked."""

    arch: object
    losses: object

    def __post_init__(self):
        if self.losses.task_count != self.arch.task_count:
            raise ValueError("one loss per task branch required")
        for k, (kind, branch) in enumerate(zip(self.losses.kinds, self.arch.branches), start=1):
            head = branch[-1]
            if kind == "categorical_cross_entropy":
                if head.activation != "softmax" or head.output_width < 2:
                    raise ValueError(f"task {k}: categorical loss needs a softmax head of width >= 2")
            elif kind == "binary_cross_entropy_from_logits":
                if head.activation != "linear" or head.output_width != 1:
                    raise ValueError(f"task {k}: binary-logit loss needs a linear head of width 1")
            elif head.activation == "softmax":
                raise ValueError(f"task {k}: mse cannot sit on a softmax head")

    def outputs(self, params, inputs):
        return forward(self.arch, params, inputs).outputs

    def evaluate(self, params, batch):
        trace = forward(self.arch, params, batch.inputs)
        _check_finite_outputs(trace.outputs)
        return aggregate_loss(self.losses, trace.outputs, batch)

    def gradient(self, params, batch, scope="full"):
        trace = forward(self.arch, params, batch.inputs)
        _check_finite_outputs(trace.outputs)
        total, per_task = aggregate_loss(self.losses, trace.outputs, batch)
        deltas = aggregate_head_deltas(self.losses, trace.outputs, batch)
        grad, counter = model_backward(self.arch, params, trace, deltas, scope)
        return grad, counter, total, per_task


def _check_finite_outputs(outputs):
    for k, out in enumerate(outputs, start=1):
        if not np.isfinite(out).all():
            raise TrainingDiverged(f"non-finite model outputs on task {k}")


def _check_rate(rate):
    if not (math.isfinite(rate) and rate > 0):
        raise ValueError(f"learning rate must be positive and finite, got {rate!r}")


def scoped_step(problem, params, batch, scope, rate):
    """One gradient step on one scope; blocks outside the scope keep their
    exact bit patterns.  Returns (new params, batch loss, per-task losses)."""
    _check_rate(rate)
    grad, _counter, total, per_task = problem.gradient(params, batch, scope)
    if not math.isfinite(total) or not np.isfinite(grad).all():
        raise TrainingDiverged(f"non-finite loss or gradient (batch loss {total!r})")
    new_values = params.values.copy()
    sl = scope_slice(problem.arch, scope)
    new_values[sl] -= rate * grad
    return type(params)(problem.arch, new_values), total, per_task


def sg_step(problem, params, batch, rate):
    """Plain stochastic-gradient step on the full parameter vector."""
    return scoped_step(problem, params, batch, "full", rate)[0]


def sat_sg_step(problem, params, store, batch_size, shared_rate, task_rate, rng):
    """One simultaneous-alternation iteration: shared block first on a
    sampled batch, then the task block on a second, independent batch,
    with the gradient taken at the intermediate point."""
    first = sample_batch(store, batch_size, rng)
    midpoint, _, _ = scoped_step(problem, params, first, "shared_only", shared_rate)
    second = sample_batch(store, batch_size, rng)
    final, _, _ = scoped_step(problem, midpoint, second, "task_specific_only", task_rate)
    return final


@dataclass(frozen=True)
class CycleRecord:
    """Step indices covered by one alternation cycle."""

    shared_iterations: tuple
    task_iterations: tuple

    @property
    def end_iteration(self):
        last = (self.task_iterations or self.shared_iterations)[-1]
        return last + 1


def ate_sg_cycle(
    problem,
    params,
    store,
    cycle,
    shared_schedule,
    task_schedule=None,
    rng=None,
    start_iteration=0,
):
    """One full alternation cycle with independently sampled batches.

    shared_epochs epochs of shared-only steps, then task_epochs epochs of
    task-specific-only steps, steps_per_epoch steps each.  Rates come from
    the schedules at the global step index, which starts at
    ``start_iteration``."""
    task_schedule = task_schedule or shared_schedule
    i = start_iteration
    shared_steps, task_steps = [], []
    for _ in range(cycle.shared_epochs * cycle.steps_per_epoch):
        batch = sample_batch(store, cycle.batch_size, rng)
        params, _, _ = scoped_step(problem, params, batch, "shared_only", shared_schedule.rate(i))
        shared_steps.append(i)
        i += 1
    for _ in range(cycle.task_epochs * cycle.steps_per_epoch):
        batch = sample_batch(store, cycle.batch_size, rng)
        params, _, _ = scoped_step(problem, params, batch, "task_specific_only", task_schedule.rate(i))
        task_steps.append(i)
        i += 1
    return params, CycleRecord(tuple(shared_steps), tuple(task_steps))


@dataclass(frozen=True)
class EpochRow:
    epoch: int
    phase: str
    train_loss: float
    val_loss: float
    train_task_losses: tuple
    val_task_losses: tuple
    rate: float


@dataclass
class RunHistory:
    """Everything one training run produced."""

    optimizer: str
    seed: int
    rows: list
    stop_reason: str
    test_scores: tuple = None
    best_epoch: int = None
    final_val_loss: float = None
    total_steps: int = 0
    diagnostic: str = None

    @property
    def epochs_run(self):
        return len(self.rows)


def _phase_plan(kind, cycle):
    if kind == "sg":
        return lambda epoch: "full"
    if kind == "sat_sg":
        return lambda epoch: "sat_pair"
    period = cycle.shared_epochs + cycle.task_epochs

    def plan(epoch):
        return "shared_only" if epoch % period < cycle.shared_epochs else "task_specific_only"

    return plan


def batching_regime(kind):
    """sampled (independent batches per step) or split (epoch reshuffle)."""
    if kind in ("sg", "ate_sg_implemented"):
        return "split"
    return "sampled"


def _task_scores(problem, params, store):
    outputs = problem.outputs(params, store.batch().inputs)
    scores = []
    for kind, out, labels in zip(problem.losses.kinds, outputs, store.labels):
        if kind == "mse":
            scores.append(None)
            continue
        if not np.isfinite(out).all():
            return None
        scores.append(weighted_scores(confusion_matrix(out, labels)))
    return tuple(scores)


def _run_loop(problem, stores, cycle, shared_schedule, task_schedule, callbacks, seed, kind):
    train_store, val_store, test_store = stores
    regime = batching_regime(kind)
    expected = batches_per_epoch(train_store.size, cycle.batch_size, regime)
    if cycle.steps_per_epoch != expected:
        raise ValueError(
            f"steps_per_epoch {cycle.steps_per_epoch} does not match the {regime} "
            f"regime on {train_store.size} rows (expected {expected})"
        )
    plan = _phase_plan(kind, cycle)
    plateau, early = (callbacks or NO_CALLBACKS).make()
    root = Rng(seed)
    init_rng = root.spawn()
    data_rng = root.spawn()
    params = init_params(problem.arch, init_rng)
    scale = 1.0
    rows = []
    stop_reason = "completed"
    diagnostic = None
    step_index = 0
    val_batch = val_store.batch()

    def effective(schedule, i):
        r = schedule.rate(i)
        return r * scale if schedule.kind == "plateau_driven" else r

    for epoch in range(cycle.epoch_budget):
        mode = plan(epoch)
        batches = epoch_split(train_store, cycle.batch_size, data_rng) if regime == "split" else None
        epoch_rate = effective(shared_schedule, step_index)
        totals, per_tasks = [], []
        try:
            for t in range(cycle.steps_per_epoch):
                if mode == "sat_pair":
                    batch = sample_batch(train_store, cycle.batch_size, data_rng)
                    params, total, per_task = scoped_step(
                        problem, params, batch, "shared_only", effective(shared_schedule, step_index)
                    )
                    second = sample_batch(train_store, cycle.batch_size, data_rng)
                    params, _, _ = scoped_step(
                        problem, params, second, "task_specific_only", effective(task_schedule, step_index)
                    )
                else:
                    batch = batches[t] if batches is not None else sample_batch(
                        train_store, cycle.batch_size, data_rng
                    )
                    schedule = task_schedule if mode == "task_specific_only" else shared_schedule
                    params, total, per_task = scoped_step(
                        problem, params, batch, mode, effective(schedule, step_index)
                    )
                totals.append(total)
                per_tasks.append(per_task)
                step_index += 1
            val_total, val_per_task = problem.evaluate(params, val_batch)
            if not math.isfinite(val_total):
                raise TrainingDiverged(f"non-finite validation loss {val_total!r}")
        except TrainingDiverged as exc:
            stop_reason = "non_finite"
            diagnostic = f"epoch {epoch}, step {step_index}: {exc}"
            break
        rows.append(
            EpochRow(
                epoch=epoch,
                phase=mode,
                train_loss=float(np.mean(totals)),
                val_loss=val_total,
                train_task_losses=tuple(np.mean(np.array(per_tasks), axis=0)),
                val_task_losses=val_per_task,
                rate=epoch_rate,
            )
        )
        if plateau is not None and plateau.update(val_total):
            scale *= plateau.factor
        if early is not None and early.update(val_total, params, epoch):
            stop_reason = "early_stop"
            params = early.best_params
            break

    best_epoch = early.best_epoch if (early is not None and early.best_epoch >= 0) else None
    if stop_reason == "non_finite":
        test_scores = None
        final_val = None
    else:
        test_scores = _task_scores(problem, params, test_store)
        final_val = problem.evaluate(params, val_batch)[0]
    return RunHistory(
        optimizer=kind,
        seed=seed,
        rows=rows,
        stop_reason=stop_reason,
        test_scores=test_scores,
        best_epoch=best_epoch,
        final_val_loss=final_val,
        total_steps=step_index,
        diagnostic=diagnostic,
    )


def train_sg(problem, stores, cycle, schedule, callbacks, seed):
    """Full-vector SG with the epoch-split batching regime."""
    return _run_loop(problem, stores, cycle, schedule, schedule, callbacks, seed, "sg")


def train_implemented_ate(problem, stores, cycle, schedule, callbacks, seed):
    """Alternating phases over epoch-split batches, single rate stream."""
    return _run_loop(problem, stores, cycle, schedule, schedule, callbacks, seed, "ate_sg_implemented")


def train_sat_sg(problem, stores, cycle, shared_schedule, task_schedule=None, callbacks=None, seed=0):
    """Simultaneous two-block iterations over independently sampled batches."""
    task_schedule = task_schedule or shared_schedule
    return _run_loop(problem, stores, cycle, shared_schedule, task_schedule, callbacks, seed, "sat_sg")


def train_ate_sg(problem, stores, cycle, shared_schedule, task_schedule=None, callbacks=None, seed=0):
    """Alternating phases over independently sampled batches."""
    task_schedule = task_schedule or shared_schedule
    return _run_loop(problem, stores, cycle, shared_schedule, task_schedule, callbacks, seed, "ate_sg")


TRAINERS = {
    "sg": train_sg,
    "ate_sg_implemented": train_implemented_ate,
    "sat_sg": train_sat_sg,
    "ate_sg": train_ate_sg,
}


@dataclass(frozen=True)
class ScheduleReport:
    """Outcome of the summability checks; None means undecidable."""

    conditions: dict
    simultaneous_ok: bool = None
    alternating_ok: bool = None
    notes: tuple = ()

    @property
    def ok(self):
        return self.simultaneous_ok is True and self.alternating_ok is True


def _decay_exponent(schedule):
    if schedule.kind == "power_decay":
        return schedule.power
    if schedule.kind == "constant":
        return 0.0
    return None


def validate_schedule(shared_schedule, task_schedule=None, cycle=None):
    """Check the divergence/summability conditions both training styles
    need for convergence.

    A rate stream a/(1+i)^p has a divergent sum iff p <= 1 and a summable
    square iff p > 1/2; constants behave like p = 0.  The alternation
    geometry only thins each stream to an index subset of positive
    density, which changes neither property, so the verdicts do not depend
    on ``cycle``.  Plateau-driven rates depend on observed losses and are
    reported as undecidable (None)."""
    task_schedule = task_schedule or shared_schedule
    e_shared = _decay_exponent(shared_schedule)
    e_task = _decay_exponent(task_schedule)
    names = (
        "sim_min_rate_sum_diverges",
        "sim_max_rate_squares_summable",
        "alt_shared_phase_rates_diverge",
        "alt_task_phase_rates_diverge",
        "alt_rate_squares_summable",
        "alt_cycle_min_rates_diverge",
    )
    if e_shared is None or e_task is None:
        return ScheduleReport(
            conditions={n: None for n in names},
            notes=("plateau-driven rates are data-dependent; conditions are undecidable in advance",),
        )
    slow, fast = min(e_shared, e_task), max(e_shared, e_task)
    conditions = {
        # The pointwise-min stream decays like the faster exponent,
        # the pointwise-max stream like the slower one.
        "sim_min_rate_sum_diverges": fast <= 1.0,
        "sim_max_rate_squares_summable": 2.0 * slow > 1.0,
        "alt_shared_phase_rates_diverge": e_shared <= 1.0,
        "alt_task_phase_rates_diverge": e_task <= 1.0,
        "alt_rate_squares_summable": 2.0 * slow > 1.0,
        "alt_cycle_min_rates_diverge": fast <= 1.0,
    }
    notes = []
    if shared_schedule.kind == "constant" and task_schedule.kind == "constant":
        notes.append(
            "constant rates: the square-summability conditions fail; only the "
            "fixed-rate regime (bounded average squared gradient) applies"
        )
    sim_ok = conditions["sim_min_rate_sum_diverges"] and conditions["sim_max_rate_squares_summable"]
    alt_ok = all(
        conditions[n]
        for n in (
            "alt_shared_phase_rates_diverge",
            "alt_task_phase_rates_diverge",
            "alt_rate_squares_summable",
            "alt_cycle_min_rates_diverge",
        )
    )
    return ScheduleReport(conditions, sim_ok, alt_ok, tuple(notes))
