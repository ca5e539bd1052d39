"""Hard-parameter-sharing multi-task network.

A network is a shared trunk of dense layers followed by one dense branch
per task.  All parameters live in one flat float64 vector partitioned as
[shared trunk | branch 1 | ... | branch K]; within a block each layer
contributes its weight matrix in row-major order followed by its bias.

``backward`` supports three scopes: the full gradient, the shared-trunk
block only, or the task-specific blocks only.  Scoped calls materialize
only the requested parameter-gradient entries and skip the matrix products
that feed none of them.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg

ACTIVATIONS = ("relu", "linear", "softmax")
SCOPES = ("full", "shared_only", "task_specific_only")


@dataclass(frozen=True)
class LayerSpec:
    """One dense layer: output = activation(input @ W + b)."""

    input_width: int
    output_width: int
    activation: str

    def __post_init__(self):
        if self.input_width < 1 or self.output_width < 1:
            raise ValueError("layer widths must be >= 1")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")

    @property
    def param_count(self):
        return (self.input_width + 1) * self.output_width


@dataclass(frozen=True)
class MtnnArchitecture:
    """Shared trunk plus one branch per task."""

    trunk: tuple
    branches: tuple

    def __post_init__(self):
        object.__setattr__(self, "trunk", tuple(self.trunk))
        object.__setattr__(self, "branches", tuple(tuple(b) for b in self.branches))
        if not self.trunk:
            raise ValueError("trunk must have at least one layer")
        if not self.branches:
            raise ValueError("need at least one task branch")
        chains = [self.trunk] + [(self.trunk[-1],) + b for b in self.branches]
        for chain in chains:
            if any(not isinstance(l, LayerSpec) for l in chain):
                raise TypeError("layers must be LayerSpec instances")
            for prev, cur in zip(chain, chain[1:]):
                if prev.output_width != cur.input_width:
                    raise ValueError(
                        f"width mismatch: {prev.output_width} feeds {cur.input_width}"
                    )
        for layer in self.trunk:
            if layer.activation == "softmax":
                raise ValueError("softmax is only allowed at the end of a branch")
        for branch in self.branches:
            if not branch:
                raise ValueError("branches must have at least one layer")
            for layer in branch[:-1]:
                if layer.activation == "softmax":
                    raise ValueError("softmax is only allowed at the end of a branch")

    @property
    def input_width(self):
        return self.trunk[0].input_width

    @property
    def trunk_output_width(self):
        return self.trunk[-1].output_width

    @property
    def task_count(self):
        return len(self.branches)

    @property
    def task_output_widths(self):
        return tuple(b[-1].output_width for b in self.branches)

    @property
    def shared_param_count(self):
        return sum(l.param_count for l in self.trunk)

    @property
    def branch_param_counts(self):
        return tuple(sum(l.param_count for l in b) for b in self.branches)

    @property
    def task_param_count(self):
        return sum(self.branch_param_counts)

    @property
    def total_param_count(self):
        return self.shared_param_count + self.task_param_count

    @property
    def block_offsets(self):
        """Start offset of the shared block and of each branch block."""
        offs = [0, self.shared_param_count]
        for c in self.branch_param_counts[:-1]:
            offs.append(offs[-1] + c)
        return tuple(offs)


def _layer_views(layers, flat, offset):
    """(W, b) views into flat storage for a chain of layers."""
    views = []
    for layer in layers:
        w_end = offset + layer.input_width * layer.output_width
        w = flat[offset:w_end].reshape(layer.input_width, layer.output_width)
        b = flat[w_end : w_end + layer.output_width]
        views.append((w, b))
        offset = w_end + layer.output_width
    return views, offset


def parameter_views(arch, flat):
    """Per-layer (W, b) views: (trunk_views, [branch_views per task])."""
    trunk_views, offset = _layer_views(arch.trunk, flat, 0)
    branch_views = []
    for branch in arch.branches:
        views, offset = _layer_views(branch, flat, offset)
        branch_views.append(views)
    return trunk_views, branch_views


@dataclass
class ParamVector:
    """Flat parameter vector with named block views.

    ``branch(k)`` and all task indexing are 1-based, matching the task
    numbering used in histories and reports.
    """

    arch: MtnnArchitecture
    values: np.ndarray

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.values.ndim != 1 or len(self.values) != self.arch.total_param_count:
            raise ValueError(
                f"expected {self.arch.total_param_count} parameters, got shape {self.values.shape}"
            )

    @classmethod
    def zeros(cls, arch):
        return cls(arch, np.zeros(arch.total_param_count))

    @property
    def shared(self):
        return self.values[: self.arch.shared_param_count]

    @property
    def task_specific(self):
        return self.values[self.arch.shared_param_count :]

    def branch(self, k):
        if not 1 <= k <= self.arch.task_count:
            raise ValueError(f"task index {k} out of range 1..{self.arch.task_count}")
        offs = self.arch.block_offsets
        start = offs[k]
        end = offs[k + 1] if k + 1 < len(offs) else self.arch.total_param_count
        return self.values[start:end]

    def copy(self):
        return ParamVector(self.arch, self.values.copy())


def init_params(arch, rng):
    """Glorot-uniform weights, zero biases.

    Draw order is fixed: trunk layers first, then branches in task order;
    each layer draws its weight entries in row-major order (biases draw
    nothing).  Equal seeds therefore give bit-identical parameters.
    """
    flat = np.zeros(arch.total_param_count)
    trunk_views, branch_views = parameter_views(arch, flat)
    for views in [trunk_views] + branch_views:
        for w, _b in views:
            fan_in, fan_out = w.shape
            limit = math.sqrt(6.0 / (fan_in + fan_out))
            w[...] = rng.uniform(-limit, limit, fan_in * fan_out).reshape(w.shape)
    return ParamVector(arch, flat)


def _apply_activation(name, z):
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "linear":
        return z
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


@dataclass
class ForwardTrace:
    """Everything backward needs: inputs, pre-activations, activations."""

    inputs: np.ndarray
    trunk_pre: list
    trunk_act: list
    branch_pre: list
    branch_act: list

    @property
    def outputs(self):
        """Per-task output matrices (softmax probabilities or raw values)."""
        return tuple(acts[-1] for acts in self.branch_act)

    @property
    def batch_size(self):
        return self.inputs.shape[0]


def forward(arch, params, inputs):
    """Run the network; returns a ForwardTrace."""
    x = linalg.as_matrix(inputs)
    if x.shape[1] != arch.input_width:
        raise ValueError(f"expected {arch.input_width} input columns, got {x.shape[1]}")
    if x.shape[0] < 1:
        raise ValueError("need at least one input row")
    trunk_views, branch_views = parameter_views(arch, params.values)
    trunk_pre, trunk_act = [], []
    for layer, (w, b) in zip(arch.trunk, trunk_views):
        z = linalg.matmul(x, w) + b
        x = _apply_activation(layer.activation, z)
        trunk_pre.append(z)
        trunk_act.append(x)
    branch_pre, branch_act = [], []
    for branch, views in zip(arch.branches, branch_views):
        bx = trunk_act[-1]
        pres, acts = [], []
        for layer, (w, b) in zip(branch, views):
            z = linalg.matmul(bx, w) + b
            bx = _apply_activation(layer.activation, z)
            pres.append(z)
            acts.append(bx)
        branch_pre.append(pres)
        branch_act.append(acts)
    return ForwardTrace(linalg.as_matrix(inputs), trunk_pre, trunk_act, branch_pre, branch_act)


@dataclass(frozen=True)
class WorkCounter:
    """Cost of one backward call.

    ``macs`` counts multiply-accumulate operations of the matrix products
    (the dominant dense-layer cost; bias sums and activation masks are not
    counted).  ``gradient_entries`` is the number of parameter-gradient
    floats materialized, i.e. the length of the returned gradient block.
    """

    macs: int
    gradient_entries: int


def _activation_backward(name, delta, pre):
    """Pull a gradient back through an activation given its pre-activation."""
    if name == "relu":
        return delta * (pre > 0.0)
    if name == "linear":
        return delta
    raise ValueError(f"cannot backpropagate through activation {name!r} here")


def backward(arch, params, trace, head_deltas, scope="full"):
    """Scoped gradient of a scalar loss.

    ``head_deltas[k]`` must hold the loss gradient with respect to task
    k+1's final-layer PRE-activation (softmax or sigmoid already folded in
    by the loss module), including any task weight.  Returns the gradient
    restricted to the scope and a WorkCounter.
    """
    if scope not in SCOPES:
        raise ValueError(f"unknown scope {scope!r}")
    if len(head_deltas) != arch.task_count:
        raise ValueError("one head delta per task required")
    rows = trace.batch_size
    for k, (d, width) in enumerate(zip(head_deltas, arch.task_output_widths)):
        if d.shape != (rows, width):
            raise ValueError(f"head delta {k + 1} has shape {d.shape}, expected {(rows, width)}")

    trunk_views, branch_views = parameter_views(arch, params.values)
    want_shared = scope in ("full", "shared_only")
    want_task = scope in ("full", "task_specific_only")

    if scope == "full":
        grad = np.zeros(arch.total_param_count)
        trunk_grads, branch_grads = parameter_views(arch, grad)
    elif scope == "shared_only":
        grad = np.zeros(arch.shared_param_count)
        trunk_grads, _ = _layer_views(arch.trunk, grad, 0)
        branch_grads = None
    else:
        grad = np.zeros(arch.task_param_count)
        branch_grads = []
        offset = 0
        for branch in arch.branches:
            views, offset = _layer_views(branch, grad, offset)
            branch_grads.append(views)
        trunk_grads = None

    macs = 0
    trunk_out_delta = np.zeros_like(trace.trunk_act[-1]) if want_shared else None

    for k, branch in enumerate(arch.branches):
        delta = head_deltas[k]
        for l in range(len(branch) - 1, -1, -1):
            x_in = trace.branch_act[k][l - 1] if l > 0 else trace.trunk_act[-1]
            w, _b = branch_views[k][l]
            if want_task:
                gw, gb = branch_grads[k][l]
                gw[...] = linalg.matmul_tn(x_in, delta)
                gb[...] = delta.sum(axis=0)
                macs += x_in.shape[1] * rows * delta.shape[1]
            if l > 0:
                dx = linalg.matmul_nt(delta, w)
                macs += rows * delta.shape[1] * w.shape[0]
                delta = _activation_backward(branch[l - 1].activation, dx, trace.branch_pre[k][l - 1])
            elif want_shared:
                dx = linalg.matmul_nt(delta, w)
                macs += rows * delta.shape[1] * w.shape[0]
                trunk_out_delta += dx

    if want_shared:
        delta = _activation_backward(
            arch.trunk[-1].activation, trunk_out_delta, trace.trunk_pre[-1]
        )
        for l in range(len(arch.trunk) - 1, -1, -1):
            x_in = trace.trunk_act[l - 1] if l > 0 else trace.inputs
            w, _b = trunk_views[l]
            gw, gb = trunk_grads[l]
            gw[...] = linalg.matmul_tn(x_in, delta)
            gb[...] = delta.sum(axis=0)
            macs += x_in.shape[1] * rows * delta.shape[1]
            if l > 0:
                dx = linalg.matmul_nt(delta, w)
                macs += rows * delta.shape[1] * w.shape[0]
                delta = _activation_backward(arch.trunk[l - 1].activation, dx, trace.trunk_pre[l - 1])

    return grad, WorkCounter(macs, len(grad))
