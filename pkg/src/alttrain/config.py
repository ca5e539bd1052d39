"""Experiment configuration: a flat ``key = value`` text format.

Keys are sectioned with dots (``optimizer.kind``, ``schedule.start_lr``).
Blank lines and lines starting with ``#`` are ignored.  Unknown keys,
duplicate keys, and missing required keys are all rejected before any
run starts.

Layer lists are comma-separated ``activation:width`` items, for example
``arch.trunk = relu:64,relu:64,relu:64``.  Branches are numbered from 1
(``arch.branch.1``, ``arch.branch.2``, ...) and must be consecutive.
"""

import re
from dataclasses import dataclass, replace

from .losses import LOSS_KINDS, LossConfig
from .model import ACTIVATIONS, LayerSpec, MtnnArchitecture
from .optim import OPTIMIZER_KINDS, SCHEDULE_KINDS, CallbackConfig, Schedule, TrainingProblem

# Both dataset formats carry two coordinates per row.
INPUT_WIDTH = 2

DATASET_KINDS = ("synthetic", "csv")

_BRANCH_KEY = re.compile(r"arch\.branch\.([1-9][0-9]*)")

_KNOWN_KEYS = frozenset(
    (
        "dataset.kind",
        "dataset.size",
        "dataset.seed",
        "dataset.path",
        "split.ratios",
        "arch.trunk",
        "loss.kinds",
        "loss.weights",
        "optimizer.kind",
        "optimizer.shared_epochs",
        "optimizer.task_epochs",
        "optimizer.epochs",
        "optimizer.batch_size",
        "schedule.kind",
        "schedule.start_lr",
        "schedule.power",
        "callbacks.plateau_patience",
        "callbacks.plateau_factor",
        "callbacks.plateau_min_delta",
        "callbacks.early_stop_patience",
        "seeds",
        "output_dir",
    )
)

_REQUIRED_KEYS = (
    "arch.trunk",
    "arch.branch.1",
    "loss.kinds",
    "optimizer.kind",
    "optimizer.epochs",
    "optimizer.batch_size",
    "schedule.kind",
    "schedule.start_lr",
    "seeds",
    "output_dir",
)


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment description; one instance drives a full sweep."""

    dataset_kind: str
    dataset_size: int
    dataset_seed: int
    dataset_path: str
    split_ratios: tuple
    trunk: tuple
    branches: tuple
    loss_kinds: tuple
    loss_weights: tuple
    optimizer_kinds: tuple
    shared_epochs: int
    task_epochs: int
    epoch_budget: int
    batch_size: int
    schedule_kind: str
    start_rate: float
    power: float
    callbacks: CallbackConfig
    seeds: tuple
    output_dir: str

    def __post_init__(self):
        if self.dataset_kind not in DATASET_KINDS:
            raise ValueError(f"dataset.kind must be one of {DATASET_KINDS}")
        if self.dataset_kind == "synthetic" and not self.dataset_size >= 2:
            raise ValueError("dataset.size must be at least 2 for synthetic data")
        if self.dataset_kind == "csv" and not self.dataset_path:
            raise ValueError("dataset.path is required when dataset.kind = csv")
        if len(self.split_ratios) != 3:
            raise ValueError("split.ratios needs exactly three values")
        if any(not 0.0 < r < 1.0 for r in self.split_ratios):
            raise ValueError("split.ratios entries must lie strictly between 0 and 1")
        if abs(sum(self.split_ratios) - 1.0) > 1e-9:
            raise ValueError("split.ratios must sum to 1")
        if not self.optimizer_kinds:
            raise ValueError("optimizer.kind needs at least one entry")
        if len(set(self.optimizer_kinds)) != len(self.optimizer_kinds):
            raise ValueError("optimizer.kind entries must be distinct")
        for kind in self.optimizer_kinds:
            if kind not in OPTIMIZER_KINDS:
                raise ValueError(f"unknown optimizer kind {kind!r}")
        if self.schedule_kind not in SCHEDULE_KINDS:
            raise ValueError(f"unknown schedule kind {self.schedule_kind!r}")
        if not self.seeds:
            raise ValueError("seeds needs at least one entry")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError("seeds must be distinct")
        if len(self.loss_kinds) != len(self.branches):
            raise ValueError("one loss kind per branch required")
        if self.schedule_kind == "plateau_driven" and self.callbacks.plateau_patience is None:
            raise ValueError("plateau_driven schedule requires the plateau callback")
        # Construct the derived objects once so bad values fail here.
        self.problem()
        self.schedule()

    def architecture(self):
        layers = []
        width = INPUT_WIDTH
        for activation, out in self.trunk:
            layers.append(LayerSpec(width, out, activation))
            width = out
        trunk = tuple(layers)
        branches = []
        for branch in self.branches:
            layers = []
            width = trunk[-1].output_width
            for activation, out in branch:
                layers.append(LayerSpec(width, out, activation))
                width = out
            branches.append(tuple(layers))
        return MtnnArchitecture(trunk=trunk, branches=tuple(branches))

    def losses(self):
        return LossConfig(kinds=self.loss_kinds, weights=self.loss_weights)

    def problem(self):
        return TrainingProblem(self.architecture(), self.losses())

    def schedule(self):
        return Schedule(self.schedule_kind, self.start_rate, power=self.power)


def parse_config_text(text):
    """Raw ``key = value`` entries from config text, with duplicates and
    unknown keys rejected."""
    entries = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not sep or not key or not value:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        if key in entries:
            raise ValueError(f"line {lineno}: duplicate key {key!r}")
        if key not in _KNOWN_KEYS and not _BRANCH_KEY.fullmatch(key):
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        entries[key] = value
    return entries


def _parse_int(entries, key, default=None, minimum=None):
    if key not in entries:
        return default
    try:
        value = int(entries[key])
    except ValueError:
        raise ValueError(f"{key}: expected an integer, got {entries[key]!r}") from None
    if minimum is not None and value < minimum:
        raise ValueError(f"{key}: must be at least {minimum}")
    return value


def _parse_float(entries, key, default=None):
    if key not in entries:
        return default
    try:
        return float(entries[key])
    except ValueError:
        raise ValueError(f"{key}: expected a number, got {entries[key]!r}") from None


def _parse_optional_int(entries, key, default, minimum):
    """Integer or the word ``none`` to disable."""
    if key not in entries:
        return default
    if entries[key] == "none":
        return None
    return _parse_int(entries, key, minimum=minimum)


def _split_list(value):
    items = [item.strip() for item in value.split(",")]
    if any(not item for item in items):
        raise ValueError(f"empty entry in list {value!r}")
    return items


def _parse_layers(key, value):
    layers = []
    for item in _split_list(value):
        activation, sep, width = item.partition(":")
        if not sep:
            raise ValueError(f"{key}: expected 'activation:width', got {item!r}")
        if activation not in ACTIVATIONS:
            raise ValueError(f"{key}: unknown activation {activation!r}")
        try:
            width = int(width)
        except ValueError:
            raise ValueError(f"{key}: bad width in {item!r}") from None
        if width < 1:
            raise ValueError(f"{key}: width must be positive in {item!r}")
        layers.append((activation, width))
    return tuple(layers)


def _parse_branches(entries):
    numbers = sorted(
        int(m.group(1)) for key in entries if (m := _BRANCH_KEY.fullmatch(key))
    )
    if numbers != list(range(1, len(numbers) + 1)):
        raise ValueError("arch.branch keys must be numbered consecutively from 1")
    return tuple(
        _parse_layers(f"arch.branch.{n}", entries[f"arch.branch.{n}"]) for n in numbers
    )


def config_from_entries(entries):
    for key in _REQUIRED_KEYS:
        if key not in entries:
            raise ValueError(f"missing required key {key!r}")
    dataset_kind = entries.get("dataset.kind", "synthetic")
    if dataset_kind == "synthetic" and "dataset.size" not in entries:
        raise ValueError("missing required key 'dataset.size'")
    if dataset_kind == "csv" and "dataset.path" not in entries:
        raise ValueError("missing required key 'dataset.path'")

    ratios = entries.get("split.ratios", "0.56,0.14,0.30")
    split_ratios = tuple(float(r) for r in _split_list(ratios))

    loss_kinds = tuple(_split_list(entries["loss.kinds"]))
    for kind in loss_kinds:
        if kind not in LOSS_KINDS:
            raise ValueError(f"loss.kinds: unknown loss kind {kind!r}")
    if "loss.weights" in entries:
        loss_weights = tuple(float(w) for w in _split_list(entries["loss.weights"]))
    else:
        loss_weights = None

    plateau_patience = _parse_optional_int(entries, "callbacks.plateau_patience", 50, 1)
    if plateau_patience is None:
        for key in ("callbacks.plateau_factor", "callbacks.plateau_min_delta"):
            if key in entries:
                raise ValueError(f"{key} set but the plateau callback is disabled")
        plateau_factor = None
        plateau_min_delta = None
    else:
        plateau_factor = _parse_float(entries, "callbacks.plateau_factor", 0.75)
        plateau_min_delta = _parse_float(entries, "callbacks.plateau_min_delta", 1e-4)
    callbacks = CallbackConfig(
        plateau_patience=plateau_patience,
        plateau_factor=plateau_factor,
        plateau_min_delta=plateau_min_delta,
        early_stop_patience=_parse_optional_int(entries, "callbacks.early_stop_patience", 350, 1),
    )

    try:
        seeds = tuple(int(s) for s in _split_list(entries["seeds"]))
    except ValueError:
        raise ValueError(f"seeds: expected integers, got {entries['seeds']!r}") from None

    return ExperimentConfig(
        dataset_kind=dataset_kind,
        dataset_size=_parse_int(entries, "dataset.size", default=0, minimum=2),
        dataset_seed=_parse_int(entries, "dataset.seed", default=0, minimum=0),
        dataset_path=entries.get("dataset.path", ""),
        split_ratios=split_ratios,
        trunk=_parse_layers("arch.trunk", entries["arch.trunk"]),
        branches=_parse_branches(entries),
        loss_kinds=loss_kinds,
        loss_weights=loss_weights,
        optimizer_kinds=tuple(_split_list(entries["optimizer.kind"])),
        shared_epochs=_parse_int(entries, "optimizer.shared_epochs", default=1, minimum=1),
        task_epochs=_parse_int(entries, "optimizer.task_epochs", default=1, minimum=1),
        epoch_budget=_parse_int(entries, "optimizer.epochs", minimum=1),
        batch_size=_parse_int(entries, "optimizer.batch_size", minimum=1),
        schedule_kind=entries["schedule.kind"],
        start_rate=_parse_float(entries, "schedule.start_lr"),
        power=_parse_float(entries, "schedule.power"),
        callbacks=callbacks,
        seeds=seeds,
        output_dir=entries["output_dir"],
    )


def load_config(path):
    with open(path, "r", encoding="utf-8") as handle:
        return config_from_entries(parse_config_text(handle.read()))


def with_overrides(config, seeds=None, optimizer_kinds=None, output_dir=None):
    """A copy of ``config`` with command-line overrides applied."""
    changes = {}
    if seeds is not None:
        changes["seeds"] = tuple(seeds)
    if optimizer_kinds is not None:
        changes["optimizer_kinds"] = tuple(optimizer_kinds)
    if output_dir is not None:
        changes["output_dir"] = str(output_dir)
    return replace(config, **changes) if changes else config
