"""Reverse-mode gradients through the unrolled solver.

The map from cost matrix to averaged assignment is piecewise affine: each
outer step is a linear gradient step followed by Dykstra cycles whose three
projections become affine once their active sets (capped columns, zeroed
entries) are frozen. The backward pass replays the active sets recorded on a
tape during the forward pass. Each projection's linear part is symmetric as
an operator on matrices, so its vector-Jacobian product is the same formula
applied to the cotangent:

  rows:  G -> G - rowsum(G) / m
  caps:  G -> G - colsum(G) / n   on recorded over-cap columns only
  sign:  G -> G restricted to the recorded positive support

Dykstra's correction updates (q = A - P(A)) are plain linear bookkeeping and
are reversed alongside.
"""

from dataclasses import dataclass

import numpy as np

from . import matcher
from .validation import check_matrix

# Forward-pass branch slacks below this are considered kink-adjacent; the
# finite-difference comparison reports them but exclusion itself is decided
# by comparing branch patterns (see `gradcheck`).
SLACK_FLOOR = 1e-6

# Denominator floor for relative gradient errors: below this scale the
# comparison degrades to an absolute one, since the forward map is piecewise
# affine and its finite differences carry ~1e-11 of roundoff that would
# otherwise be divided by a near-zero gradient.
REL_ERROR_FLOOR = 1e-6


@dataclass
class GradientResult:
    """Gradient of a linear probe of the solver output.

    grad             dloss/dC, same shape as C
    loss             probe value at the forward solution
    branch_min_slack min distance of any forward branch decision from its
                     boundary (small values flag kink-adjacent instances)
    """

    grad: np.ndarray
    loss: float
    branch_min_slack: float


def _vjp_rows(G):
    return G - G.sum(axis=1, keepdims=True) / G.shape[1]


def _vjp_cols(G, over):
    return G - np.where(over, G.sum(axis=0) / G.shape[0], 0.0)


def _backward_cycle(rec, g_out, g_q1, g_q2, g_q3):
    # Reverses one Dykstra cycle. g_out is the cotangent of the cycle output,
    # g_q* are the cotangents of the corrections it left behind. Returns the
    # cotangents of the cycle input and of the corrections it received.
    g_y3 = g_out - g_q3
    g_a3 = g_q3 + np.where(rec.pos, g_y3, 0.0)
    g_y2 = g_a3 - g_q2
    g_a2 = g_q2 + _vjp_cols(g_y2, rec.col_over)
    g_y1 = g_a2 - g_q1
    g_a1 = g_q1 + _vjp_rows(g_y1)
    return g_a1, g_a1, g_a2, g_a3


def _backward_step(step_tape, g_step_out):
    """Cotangent of one outer step's pre-projection matrix.

    Corrections are zero-initialized at the start of every outer step, so
    their incoming cotangents are discarded at the loop boundary.
    """
    g = g_step_out
    g_q1 = np.zeros_like(g)
    g_q2 = np.zeros_like(g)
    g_q3 = np.zeros_like(g)
    for rec in reversed(step_tape):
        g, g_q1, g_q2, g_q3 = _backward_cycle(rec, g, g_q1, g_q2, g_q3)
    return g


def tape_min_slack(tape):
    return min(
        min(rec.col_slack, rec.pos_slack) for step in tape for rec in step
    )


def tape_signature(tape, extra=b""):
    """Bytes identifying the branch pattern a forward pass took."""
    chunks = [extra]
    for step_tape in tape:
        for rec in step_tape:
            chunks.append(np.packbits(rec.col_over).tobytes())
            chunks.append(np.packbits(rec.pos.ravel()).tobytes())
    return b"".join(chunks)


def _probe(report, loss_weights, probe_masked):
    target = report.masked_assignment if probe_masked else report.assignment
    return float((loss_weights * target).sum())


def solve_with_grad(C, config=None, loss_weights=None, X_init=None,
                    probe_masked=False):
    """Solve and differentiate a linear probe of the output exactly.

    loss = sum(loss_weights * assignment), with all-ones weights by default.
    The forward pass is `matcher.solve` verbatim (the returned report is
    bitwise what `solve` produces); the gradient is with respect to C, the
    initial point held fixed. With probe_masked=True the probe reads the
    masked assignment instead and the gradient flows only through the kept
    entries (the argmax pattern is frozen, matching the forward rounding).

    Returns (report, GradientResult).
    """
    if config is None:
        config = matcher.SolverConfig()
    tape = []
    report = matcher.solve(C, config, X_init=X_init, tape=tape)
    n, m = report.assignment.shape
    if loss_weights is None:
        loss_weights = np.ones((n, m))
    else:
        loss_weights = check_matrix(loss_weights, "loss_weights")
        if loss_weights.shape != (n, m):
            raise ValueError(
                f"loss_weights shape {loss_weights.shape} does not match "
                f"assignment shape {(n, m)}"
            )
    loss = _probe(report, loss_weights, probe_masked)

    # dloss/d(averaged assignment), then distributed over the averaging
    # window. The initial point is in the window under include-init but is
    # constant with respect to C, so it contributes nothing.
    if probe_masked:
        g_hat = np.where(report.masked_assignment > 0, loss_weights, 0.0)
    else:
        g_hat = loss_weights
    terms = config.n_grad + (1 if config.average_mode == "include-init" else 0)
    per_iterate = g_hat / terms

    grad = np.zeros_like(report.assignment)
    carry = np.zeros_like(report.assignment)
    for step_tape in reversed(tape):
        g_pre = _backward_step(step_tape, carry + per_iterate)
        grad += -config.learning_rate * g_pre
        carry = g_pre
    return report, GradientResult(
        grad=grad,
        loss=loss,
        branch_min_slack=tape_min_slack(tape),
    )


def finite_diff_grad(C, config=None, loss_weights=None, step=1e-5,
                     X_init=None, probe_masked=False):
    """Central-difference gradient of the same probe loss.

    The oracle counterpart to `solve_with_grad`: 2 n m full solves, no reuse
    of anything from the reverse pass.
    """
    if not step > 0:
        raise ValueError(f"step must be positive, got {step!r}")
    C = np.asarray(C, dtype=float)
    if config is None:
        config = matcher.SolverConfig()
    if loss_weights is None:
        loss_weights = np.ones(C.shape)

    def loss_at(Cp):
        report = matcher.solve(Cp, config, X_init=X_init)
        return _probe(report, loss_weights, probe_masked)

    grad = np.zeros(C.shape)
    for i in range(C.shape[0]):
        for j in range(C.shape[1]):
            up = C.copy()
            up[i, j] += step
            down = C.copy()
            down[i, j] -= step
            grad[i, j] = (loss_at(up) - loss_at(down)) / (2.0 * step)
    return grad


@dataclass
class GradcheckReport:
    """Entrywise comparison of reverse-mode and central-difference gradients.

    Coordinates whose perturbed forward passes cross a branch boundary are
    excluded: central differences straddle a kink there and do not estimate
    either one-sided derivative.
    """

    max_rel_error: float
    n_checked: int
    n_excluded: int
    excluded: np.ndarray
    analytic: np.ndarray
    numeric: np.ndarray
    base_min_slack: float

    @property
    def passed(self):
        return self.max_rel_error <= 1e-4


def _mask_pattern(report, probe_masked):
    if not probe_masked:
        return b""
    return np.packbits(report.masked_assignment.ravel() > 0).tobytes()


def gradcheck(C, config=None, loss_weights=None, step=1e-5,
              probe_masked=False):
    """Check `solve_with_grad` against central differences coordinatewise."""
    if not step > 0:
        raise ValueError(f"step must be positive, got {step!r}")
    C = np.asarray(C, dtype=float)
    if config is None:
        config = matcher.SolverConfig()
    if loss_weights is None:
        loss_weights = np.ones(C.shape)

    base_tape = []
    base_report = matcher.solve(C, config, tape=base_tape)
    base_sig = tape_signature(base_tape, _mask_pattern(base_report, probe_masked))
    _, result = solve_with_grad(
        C, config, loss_weights=loss_weights, probe_masked=probe_masked
    )

    numeric = np.zeros(C.shape)
    excluded = np.zeros(C.shape, dtype=bool)
    for i in range(C.shape[0]):
        for j in range(C.shape[1]):
            losses = []
            same_branch = True
            for delta in (step, -step):
                Cp = C.copy()
                Cp[i, j] += delta
                tape = []
                report = matcher.solve(Cp, config, tape=tape)
                sig = tape_signature(tape, _mask_pattern(report, probe_masked))
                same_branch = same_branch and sig == base_sig
                losses.append(_probe(report, loss_weights, probe_masked))
            numeric[i, j] = (losses[0] - losses[1]) / (2.0 * step)
            excluded[i, j] = not same_branch

    diff = np.abs(result.grad - numeric)
    denom = np.maximum(
        np.maximum(np.abs(result.grad), np.abs(numeric)), REL_ERROR_FLOOR
    )
    rel = np.where(excluded, 0.0, diff / denom)
    n_checked = int((~excluded).sum())
    max_rel = float(rel.max()) if n_checked else 0.0
    return GradcheckReport(
        max_rel_error=max_rel,
        n_checked=n_checked,
        n_excluded=int(excluded.sum()),
        excluded=excluded,
        analytic=result.grad,
        numeric=numeric,
        base_min_slack=result.branch_min_slack,
    )
