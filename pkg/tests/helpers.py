"""Shared builders for randomized model/loss test cases."""

import numpy as np

from alttrain.losses import LabeledBatch, LossConfig
from alttrain.model import LayerSpec, MtnnArchitecture, forward, init_params


def random_architecture(rng, max_params=500, input_width=None):
    """Random trunk (2-3 layers) + 1-3 branches, capped at max_params.

    Head kinds are chosen per task: softmax (width >= 2), or linear with
    width 1 (binary-logit style) or small width (regression style)."""
    while True:
        n_in = input_width or 2 + rng.integer(3)
        n_trunk = 2 + rng.integer(2)
        trunk = []
        width_in = n_in
        for _ in range(n_trunk):
            width_out = 2 + rng.integer(5)
            trunk.append(LayerSpec(width_in, width_out, "relu"))
            width_in = width_out
        n_tasks = 1 + rng.integer(3)
        branches = []
        kinds = []
        for _ in range(n_tasks):
            depth = 1 + rng.integer(2)
            layers = []
            b_in = width_in
            for _ in range(depth - 1):
                b_out = 2 + rng.integer(5)
                layers.append(LayerSpec(b_in, b_out, "relu"))
                b_in = b_out
            head = rng.integer(3)
            if head == 0:
                m = 2 + rng.integer(3)
                layers.append(LayerSpec(b_in, m, "softmax"))
                kinds.append("categorical_cross_entropy")
            elif head == 1:
                layers.append(LayerSpec(b_in, 1, "linear"))
                kinds.append("binary_cross_entropy_from_logits")
            else:
                m = 1 + rng.integer(3)
                layers.append(LayerSpec(b_in, m, "linear"))
                kinds.append("mse")
            branches.append(tuple(layers))
        arch = MtnnArchitecture(tuple(trunk), tuple(branches))
        if arch.total_param_count <= max_params:
            return arch, tuple(kinds)


def random_labels(rng, kind, rows, width):
    if kind == "categorical_cross_entropy":
        classes = np.minimum((rng.uniform01(rows) * width).astype(int), width - 1)
        block = np.zeros((rows, width))
        block[np.arange(rows), classes] = 1.0
        return block
    if kind == "binary_cross_entropy_from_logits":
        return (rng.uniform01(rows) < 0.5).astype(np.float64).reshape(rows, 1)
    return rng.uniform(-1.0, 1.0, rows * width).reshape(rows, width)


def random_problem(rng, max_params=500, rows=None, unit_weights=False, input_width=None):
    """(arch, loss_config, batch) triple with consistent shapes."""
    arch, kinds = random_architecture(rng, max_params, input_width)
    rows = rows or 2 + rng.integer(5)
    inputs = rng.uniform(-1.5, 1.5, rows * arch.input_width).reshape(rows, arch.input_width)
    labels = tuple(
        random_labels(rng, kind, rows, width)
        for kind, width in zip(kinds, arch.task_output_widths)
    )
    if unit_weights:
        weights = (1.0,) * len(kinds)
    else:
        weights = tuple(0.5 + 2.0 * u for u in rng.uniform01(len(kinds)))
    return arch, LossConfig(kinds, weights), LabeledBatch(inputs, labels)


def relu_margin(arch, params, batch):
    """Smallest |pre-activation| across all relu layers.

    Finite-difference gradient checks are only valid away from relu kinks;
    a healthy margin keeps the active masks constant under perturbation."""
    trace = forward(arch, params, batch.inputs)
    margins = []
    for layer, pre in zip(arch.trunk, trace.trunk_pre):
        if layer.activation == "relu":
            margins.append(np.abs(pre).min())
    for branch, pres in zip(arch.branches, trace.branch_pre):
        for layer, pre in zip(branch, pres):
            if layer.activation == "relu":
                margins.append(np.abs(pre).min())
    return float(min(margins)) if margins else np.inf


def smooth_random_problem(rng, max_params=500, rows=None, unit_weights=False, margin=1e-3):
    """random_problem plus initialized params, resampled until every relu
    pre-activation clears the kink margin."""
    while True:
        arch, cfg, batch = random_problem(rng, max_params, rows, unit_weights)
        params = init_params(arch, rng.spawn())
        if relu_margin(arch, params, batch) > margin:
            return arch, cfg, batch, params
