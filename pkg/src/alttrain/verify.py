"""Independent numerical checks: finite-difference gradients and cost audits."""

from dataclasses import dataclass

import numpy as np

from .model import SCOPES, ParamVector, WorkCounter, backward, forward


def scope_slice(arch, scope):
    """Index range of a scope's block inside the flat parameter vector."""
    if scope == "full":
        return slice(0, arch.total_param_count)
    if scope == "shared_only":
        return slice(0, arch.shared_param_count)
    if scope == "task_specific_only":
        return slice(arch.shared_param_count, arch.total_param_count)
    raise ValueError(f"unknown scope {scope!r}")


def fd_gradient(loss_fn, params, scope="full", step=1e-5):
    """Central-difference gradient of ``loss_fn`` over one scope.

    ``loss_fn`` maps a flat parameter array to a float.  Coordinates
    outside the scope are never perturbed."""
    if scope not in SCOPES:
        raise ValueError(f"unknown scope {scope!r}")
    if not step > 0:
        raise ValueError("step must be positive")
    base = params.values
    sl = scope_slice(params.arch, scope)
    grad = np.empty(sl.stop - sl.start)
    work = base.copy()
    for out_i, i in enumerate(range(sl.start, sl.stop)):
        saved = work[i]
        work[i] = saved + step
        up = loss_fn(work)
        work[i] = saved - step
        down = loss_fn(work)
        work[i] = saved
        grad[out_i] = (up - down) / (2.0 * step)
    return grad


def gradient_relative_error(analytic, numeric):
    """max |a - n| / max(1, ||a||_inf); the floor keeps tiny-gradient
    comparisons from exploding."""
    analytic = np.asarray(analytic)
    numeric = np.asarray(numeric)
    if analytic.shape != numeric.shape:
        raise ValueError("gradient shapes differ")
    denom = max(1.0, float(np.abs(analytic).max(initial=0.0)))
    return float(np.abs(analytic - numeric).max(initial=0.0)) / denom


@dataclass(frozen=True)
class CostAudit:
    """Work and storage of one backward pass per scope."""

    shared_params: int
    task_params: int
    total_params: int
    batch_rows: int
    scope_costs: dict

    @property
    def shared_fraction(self):
        return self.shared_params / self.total_params

    @property
    def task_fraction(self):
        return self.task_params / self.total_params


def audit_costs(arch, batch_size=1):
    """Measure backward cost in every scope on a synthetic batch.

    Parameter values do not affect the counters, so zeros are used."""
    params = ParamVector.zeros(arch)
    inputs = np.ones((batch_size, arch.input_width))
    trace = forward(arch, params, inputs)
    deltas = [np.ones((batch_size, w)) for w in arch.task_output_widths]
    costs = {}
    for scope in SCOPES:
        _grad, counter = backward(arch, params, trace, deltas, scope)
        costs[scope] = counter
    return CostAudit(
        shared_params=arch.shared_param_count,
        task_params=arch.task_param_count,
        total_params=arch.total_param_count,
        batch_rows=batch_size,
        scope_costs=costs,
    )


def render_cost_report(audit):
    """Plain-text cost report: parameter partition, per-scope gradient
    storage and multiply-accumulate counts, and the storage ratios."""
    lines = [
        "backward-pass cost audit",
        f"batch rows: {audit.batch_rows}",
        "",
        f"shared parameters:        {audit.shared_params}",
        f"task-specific parameters: {audit.task_params}",
        f"total parameters:         {audit.total_params}",
        "",
        f"{'scope':<24}{'gradient entries':>18}{'multiply-accumulates':>22}",
    ]
    for scope, counter in audit.scope_costs.items():
        lines.append(f"{scope:<24}{counter.gradient_entries:>18}{counter.macs:>22}")
    lines += [
        "",
        "gradient-storage ratios:",
        f"shared/full        = {audit.shared_params}/{audit.total_params}"
        f" = {audit.shared_fraction:.6f}",
        f"task-specific/full = {audit.task_params}/{audit.total_params}"
        f" = {audit.task_fraction:.6f}",
        "",
    ]
    return "\n".join(lines)
