"""Experiment driver: seed sweeps across optimizers plus file outputs.

The dataset is built once per experiment from ``dataset.seed``: the
generator draws the points first, then the splitter consumes the same
stream.  The scaler is fitted on the training split only and applied to
all three splits.  Each training run then derives its own generators
from its run seed, so runs are independent of sweep order.

All output files are deterministic: re-running the same configuration
overwrites them with byte-identical content.
"""

import json
import os

from .data import batches_per_epoch, fit_scaler, generate_store, load_csv, split_store
from .optim import TRAINERS, CycleConfig, batching_regime
from .rng import Rng
from .verify import audit_costs, render_cost_report


def prepare_stores(config):
    """(train, val, test) stores, standardized with train-split statistics."""
    rng = Rng(config.dataset_seed)
    if config.dataset_kind == "synthetic":
        store = generate_store(config.dataset_size, rng)
    else:
        store = load_csv(config.dataset_path)
    train, val, test = split_store(store, config.split_ratios, rng)
    scaler = fit_scaler(train.inputs)
    return scaler.transform_store(train), scaler.transform_store(val), scaler.transform_store(test)


def check_store_matches(problem, store):
    """Reject runs whose dataset schema cannot feed the architecture."""
    arch = problem.arch
    if store.inputs.shape[1] != arch.input_width:
        raise ValueError(
            f"dataset has {store.inputs.shape[1]} input columns, "
            f"architecture expects {arch.input_width}"
        )
    if len(store.labels) != arch.task_count:
        raise ValueError(
            f"dataset has {len(store.labels)} label blocks, "
            f"architecture has {arch.task_count} branches"
        )
    for k, (block, width) in enumerate(zip(store.labels, arch.task_output_widths), start=1):
        if block.shape[1] != width:
            raise ValueError(
                f"task {k} labels have width {block.shape[1]}, head produces {width}"
            )


def cycle_for(config, kind, train_size):
    steps = batches_per_epoch(train_size, config.batch_size, batching_regime(kind))
    return CycleConfig(
        shared_epochs=config.shared_epochs,
        task_epochs=config.task_epochs,
        steps_per_epoch=steps,
        batch_size=config.batch_size,
        epoch_budget=config.epoch_budget,
    )


def run_experiment(config, progress=None):
    """All runs of the sweep plus their summary.

    Runs every (optimizer kind, seed) pair.  Divergent runs are recorded
    with stop_reason ``non_finite`` and kept in the result; they never
    abort the sweep."""
    stores = prepare_stores(config)
    problem = config.problem()
    check_store_matches(problem, stores[0])
    schedule = config.schedule()
    histories = []
    for kind in config.optimizer_kinds:
        cycle = cycle_for(config, kind, stores[0].size)
        trainer = TRAINERS[kind]
        for seed in config.seeds:
            history = trainer(
                problem, stores, cycle, schedule, callbacks=config.callbacks, seed=seed
            )
            histories.append(history)
            if progress is not None:
                progress(
                    f"{kind} seed {seed}: {history.stop_reason} "
                    f"after {history.epochs_run} epochs"
                )
    summary = summarize(histories, problem, config.batch_size)
    return histories, summary


def _median(values):
    ordered = sorted(values)
    n = len(ordered)
    mid = n // 2
    if n % 2 == 1:
        return ordered[mid]
    return 0.5 * (ordered[mid - 1] + ordered[mid])


def _mean(values):
    return sum(values) / len(values)


def _std(values):
    m = _mean(values)
    return (_mean([(v - m) ** 2 for v in values])) ** 0.5


def loss_envelopes(histories):
    """Per-epoch min/median/max of train and validation loss over the runs
    still alive at that epoch."""
    rows = []
    depth = max(h.epochs_run for h in histories)
    for epoch in range(depth):
        train = [h.rows[epoch].train_loss for h in histories if epoch < h.epochs_run]
        val = [h.rows[epoch].val_loss for h in histories if epoch < h.epochs_run]
        rows.append(
            {
                "epoch": epoch,
                "train_min": min(train),
                "train_median": _median(train),
                "train_max": max(train),
                "val_min": min(val),
                "val_median": _median(val),
                "val_max": max(val),
            }
        )
    return rows


def mean_test_metrics(histories):
    """Per-task mean of each classification score over the non-divergent
    runs; None for regression tasks.  Also reports how many runs were
    excluded as divergent."""
    scored = [h for h in histories if h.test_scores is not None]
    excluded = len(histories) - len(scored)
    if not scored:
        return {"included": 0, "excluded": excluded, "tasks": []}
    task_count = len(scored[0].test_scores)
    tasks = []
    for k in range(task_count):
        if scored[0].test_scores[k] is None:
            tasks.append(None)
            continue
        per_metric = {}
        for name in ("precision", "recall", "f1", "accuracy"):
            per_metric[name] = _mean([getattr(h.test_scores[k], name) for h in scored])
        tasks.append(per_metric)
    return {"included": len(scored), "excluded": excluded, "tasks": tasks}


def val_loss_oscillation(history):
    """Standard deviation of validation loss over the final half of the
    recorded epochs (rounded up), or None for short or divergent runs."""
    n = history.epochs_run
    if n < 2:
        return None
    tail = [row.val_loss for row in history.rows[n - (n + 1) // 2 :]]
    return _std(tail)


def summarize(histories, problem, batch_size):
    """Sweep summary grouped by optimizer kind."""
    if not histories:
        raise ValueError("no runs to summarize")
    kinds = []
    for h in histories:
        if h.optimizer not in kinds:
            kinds.append(h.optimizer)
    optimizers = {}
    for kind in kinds:
        group = [h for h in histories if h.optimizer == kind]
        oscillations = {h.seed: val_loss_oscillation(h) for h in group}
        defined = [v for v in oscillations.values() if v is not None]
        optimizers[kind] = {
            "envelopes": loss_envelopes(group),
            "metrics": mean_test_metrics(group),
            "val_loss_std_final_half": {
                "per_seed": oscillations,
                "median": _median(defined) if defined else None,
            },
        }
    audit = audit_costs(problem.arch, batch_size)
    return {"optimizers": optimizers, "cost_report": render_cost_report(audit)}


def format_float(value):
    return "%.17g" % value


HISTORY_FIELDS = ("epoch", "train_loss", "val_loss")


def history_header(task_count):
    names = ["epoch", "train_loss", "val_loss"]
    names += [f"train_loss_task{k}" for k in range(1, task_count + 1)]
    names += [f"val_loss_task{k}" for k in range(1, task_count + 1)]
    names.append("lr")
    return ",".join(names)


def render_history_csv(history):
    if not history.rows:
        return history_header(0) + "\n"
    task_count = len(history.rows[0].train_task_losses)
    lines = [history_header(task_count)]
    for row in history.rows:
        cells = [str(row.epoch), format_float(row.train_loss), format_float(row.val_loss)]
        cells += [format_float(v) for v in row.train_task_losses]
        cells += [format_float(v) for v in row.val_task_losses]
        cells.append(format_float(row.rate))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def load_history_csv(path):
    """Numeric history rows from a history CSV, as dictionaries keyed by
    the column names.  17-digit floats round-trip exactly."""
    with open(path, "r", encoding="utf-8") as handle:
        lines = handle.read().splitlines()
    if not lines:
        raise ValueError(f"{path}: empty history file")
    names = lines[0].split(",")
    rows = []
    for line in lines[1:]:
        cells = line.split(",")
        if len(cells) != len(names):
            raise ValueError(f"{path}: row width does not match the header")
        row = {name: float(cell) for name, cell in zip(names, cells)}
        row["epoch"] = int(cells[0])
        rows.append(row)
    return rows


def render_run_metrics(history):
    scores = None
    if history.test_scores is not None:
        scores = {
            f"task{k}": (s.as_dict() if s is not None else None)
            for k, s in enumerate(history.test_scores, start=1)
        }
    payload = {
        "optimizer": history.optimizer,
        "seed": history.seed,
        "stop_reason": history.stop_reason,
        "epochs_run": history.epochs_run,
        "total_steps": history.total_steps,
        "best_epoch": history.best_epoch,
        "final_val_loss": history.final_val_loss,
        "diagnostic": history.diagnostic,
        "test": scores,
    }
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


SUMMARY_HEADER = "optimizer,epoch,train_min,train_median,train_max,val_min,val_median,val_max"


def render_summary_csv(summary):
    lines = [SUMMARY_HEADER]
    for kind, group in summary["optimizers"].items():
        for row in group["envelopes"]:
            cells = [kind, str(row["epoch"])]
            cells += [
                format_float(row[name])
                for name in ("train_min", "train_median", "train_max", "val_min", "val_median", "val_max")
            ]
            lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def render_summary_metrics(summary):
    payload = {}
    for kind, group in summary["optimizers"].items():
        oscillation = group["val_loss_std_final_half"]
        payload[kind] = {
            "metrics": group["metrics"],
            "val_loss_std_final_half": {
                "per_seed": {str(seed): v for seed, v in oscillation["per_seed"].items()},
                "median": oscillation["median"],
            },
        }
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def emit_outputs(histories, summary, out_dir):
    """Write every artifact of a sweep under ``out_dir``.

    Files: one history CSV and one metrics JSON per run, plus
    ``summary.csv`` (loss envelopes), ``summary_metrics.json``, and
    ``cost_audit.txt``.  Returns the written paths in order."""
    if not histories:
        raise ValueError("no run histories to write")
    os.makedirs(out_dir, exist_ok=True)
    written = []

    def emit(name, text):
        path = os.path.join(out_dir, name)
        with open(path, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        written.append(path)

    for history in histories:
        stem = f"{history.optimizer}_{history.seed}"
        emit(f"history_{stem}.csv", render_history_csv(history))
        emit(f"metrics_{stem}.json", render_run_metrics(history))
    emit("summary.csv", render_summary_csv(summary))
    emit("summary_metrics.json", render_summary_metrics(summary))
    emit("cost_audit.txt", summary["cost_report"])
    return written
