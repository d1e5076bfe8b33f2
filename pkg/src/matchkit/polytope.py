"""Projections onto the relaxed matching polytope.

The feasible set for an n x m relaxed assignment (n rows to match into m
columns, n <= m) is the intersection of three convex sets:

  rows:  X 1 = 1      every row distributes exactly unit weight
  caps:  X^T 1 <= 1   no column absorbs more than unit weight
  sign:  X >= 0

Each set has a closed-form Euclidean projection. `dykstra_project` cycles
through them with Dykstra correction terms, which makes the cycle converge to
the exact projection onto the intersection rather than merely to some
feasible point.
"""

from dataclasses import dataclass

import numpy as np

from .validation import check_matrix, check_wide

# Feasibility tolerance for exact constructions (vertices, reference
# projections) and the looser one accepted from iterative solver output.
TAU_FEAS = 1e-9
SOLVER_FEAS_TOL = 1e-3

# Cycle budget treated as "converged" when a high-accuracy projection is
# needed, e.g. for distance estimates.
REFERENCE_CYCLES = 1000


def project_rows(X):
    """Project onto the set of matrices whose rows each sum to 1."""
    X = check_matrix(X, "X")
    m = X.shape[1]
    return X - (X.sum(axis=1, keepdims=True) - 1.0) / m


def project_cols(X):
    """Project onto the set of matrices whose columns each sum to at most 1.

    Columns already at or under the cap are untouched. A violating column has
    its excess spread evenly over its entries, the projection onto that
    column's half-space.
    """
    X = check_matrix(X, "X")
    n = X.shape[0]
    col = X.sum(axis=0, keepdims=True)
    return X - np.where(col > 1.0, (col - 1.0) / n, 0.0)


def project_nonneg(X):
    """Entrywise clip to the nonnegative orthant."""
    X = check_matrix(X, "X")
    return np.maximum(X, 0.0)


@dataclass(frozen=True)
class CycleRecord:
    """Branch bookkeeping for one Dykstra cycle.

    Consumed by reverse-mode differentiation: once these active sets are
    frozen, every projection in the cycle is affine.

    col_over   (m,) bool, columns clipped by the cap projection
    pos        (n, m) bool, entries kept by the sign projection
    col_slack  min over columns of |column sum - 1| at the cap input
    pos_slack  min over entries of |value| at the sign input
    """

    col_over: np.ndarray
    pos: np.ndarray
    col_slack: float
    pos_slack: float


def dykstra_project(X, n_proj, tape=None):
    """Approximately project X onto the polytope with n_proj Dykstra cycles.

    Returns (Y, residual_trace). residual_trace has one entry per cycle: the
    Frobenius distance between consecutive cycle outputs, with the input
    playing the role of cycle zero. Correction terms start at zero.

    When `tape` is a list, one CycleRecord per cycle is appended to it.
    """
    X = check_matrix(X, "X")
    check_wide(X, "X")
    if not isinstance(n_proj, (int, np.integer)) or n_proj < 1:
        raise ValueError(f"n_proj must be a positive integer, got {n_proj!r}")
    n, m = X.shape

    q1 = np.zeros_like(X)
    q2 = np.zeros_like(X)
    q3 = np.zeros_like(X)
    Y = X
    prev = X
    trace = []
    for _ in range(n_proj):
        A1 = Y + q1
        Y1 = A1 - (A1.sum(axis=1, keepdims=True) - 1.0) / m
        q1 = A1 - Y1

        A2 = Y1 + q2
        col = A2.sum(axis=0)
        over = col > 1.0
        Y2 = A2 - np.where(over, (col - 1.0) / n, 0.0)
        q2 = A2 - Y2

        A3 = Y2 + q3
        Y3 = np.maximum(A3, 0.0)
        q3 = A3 - Y3

        if tape is not None:
            tape.append(CycleRecord(
                col_over=over,
                pos=A3 > 0.0,
                col_slack=float(np.abs(col - 1.0).min()),
                pos_slack=float(np.abs(A3).min()),
            ))
        trace.append(float(np.linalg.norm(Y3 - prev)))
        prev = Y3
        Y = Y3
    return Y, trace


@dataclass(frozen=True)
class Residuals:
    """Cheap per-matrix constraint violations (no projection involved)."""

    row_residual: float
    col_violation: float
    negativity: float

    @property
    def max_violation(self):
        return max(self.row_residual, self.col_violation, self.negativity)


def residuals(X):
    """Worst row-sum error, column-cap excess, and negative entry of X."""
    X = check_matrix(X, "X")
    row = float(np.abs(X.sum(axis=1) - 1.0).max())
    col = float(np.maximum(X.sum(axis=0) - 1.0, 0.0).max())
    neg = float(np.maximum(-X, 0.0).max())
    return Residuals(row, col, neg)


@dataclass(frozen=True)
class FeasibilityReport:
    """Constraint violations plus an estimated Euclidean distance to the set.

    The distance comes from a reference projection (many Dykstra cycles), so
    it is an estimate whose own error is far below the tolerances used here.
    """

    row_residual: float
    col_violation: float
    negativity: float
    distance_estimate: float

    @property
    def max_violation(self):
        return max(self.row_residual, self.col_violation, self.negativity)

    def within(self, tol=TAU_FEAS):
        return self.max_violation <= tol


def feasibility(X, reference_cycles=REFERENCE_CYCLES):
    """Measure how far X is from the polytope."""
    X = check_matrix(X, "X")
    check_wide(X, "X")
    r = residuals(X)
    Y, _ = dykstra_project(X, reference_cycles)
    dist = float(np.linalg.norm(X - Y))
    return FeasibilityReport(r.row_residual, r.col_violation, r.negativity, dist)
