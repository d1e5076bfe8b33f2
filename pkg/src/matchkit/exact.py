"""Exact and greedy baselines for the hard assignment problem."""

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .validation import check_cost_matrix, check_matrix, check_wide

# Hard ceiling on the number of candidate assignments brute force will touch.
BRUTE_FORCE_LIMIT = 10_000_000


@dataclass(frozen=True)
class HardAssignment:
    """An injective row-to-column map and its total cost.

    column_of[i] is the column matched to row i, or None when row i is left
    unmatched (only `greedy` with a threshold produces None).
    """

    column_of: tuple
    objective: float


def _objective_of(C, cols):
    # Row-order summation, shared by all producers so equal assignments give
    # bitwise-equal objectives.
    return float(sum(C[i, j] for i, j in enumerate(cols) if j is not None))


def hungarian(C):
    """Minimum-cost assignment of every row to a distinct column.

    The n x m cost matrix (n <= m) is padded with zero-cost dummy rows to a
    square m x m problem, solved exactly, and the dummies dropped, so the
    result is the true optimum of the rectangular problem. Tie-breaking among
    equally optimal assignments is implementation-defined.
    """
    C = check_cost_matrix(C)
    check_wide(C, "C")
    n, m = C.shape
    padded = np.zeros((m, m))
    padded[:n] = C
    _, cols = linear_sum_assignment(padded)
    column_of = tuple(int(cols[i]) for i in range(n))
    return HardAssignment(column_of, _objective_of(C, column_of))


def brute_force(C):
    """Exhaustive minimum over all injective row-to-column maps.

    Candidates are enumerated in lexicographic column order and the first
    minimizer is kept, so ties resolve to the lexicographically smallest
    assignment. Refuses instances with more than 10_000_000 candidates.
    """
    C = check_cost_matrix(C)
    check_wide(C, "C")
    n, m = C.shape
    count = math.perm(m, n)
    if count > BRUTE_FORCE_LIMIT:
        raise ValueError(
            f"brute force would enumerate {count} assignments "
            f"(limit {BRUTE_FORCE_LIMIT})"
        )
    best_cols = None
    best = math.inf
    for cols in itertools.permutations(range(m), n):
        value = _objective_of(C, cols)
        if value < best:
            best = value
            best_cols = cols
    return HardAssignment(tuple(best_cols), best)


def greedy(C, threshold=None):
    """Row-by-row cheapest-available-column baseline.

    Rows are visited top to bottom; each takes its cheapest column not yet
    taken, lowest column index winning ties. With a threshold, a row whose
    best available cost exceeds it is left unmatched (column None) and its
    cost contributes nothing.
    """
    C = check_cost_matrix(C)
    check_wide(C, "C")
    n, m = C.shape
    taken = np.zeros(m, dtype=bool)
    column_of = []
    for i in range(n):
        masked = np.where(taken, np.inf, C[i])
        j = int(np.argmin(masked))
        if threshold is not None and masked[j] > threshold:
            column_of.append(None)
            continue
        column_of.append(j)
        taken[j] = True
    column_of = tuple(column_of)
    return HardAssignment(column_of, _objective_of(C, column_of))


def round_to_hard(X, cost=None):
    """Nearest hard assignment to a relaxed one (maximum-weight rounding).

    Solves the assignment problem on -X, so the rounding maximizes the total
    selected relaxed weight. The reported objective is that selected weight;
    when `cost` is given, the induced assignment is evaluated against it
    instead.
    """
    X = check_matrix(X, "X")
    check_wide(X, "X")
    column_of = hungarian(-X).column_of
    if cost is not None:
        cost = check_cost_matrix(cost, "cost")
        if cost.shape != X.shape:
            raise ValueError(
                f"cost shape {cost.shape} does not match X shape {X.shape}"
            )
        return HardAssignment(column_of, _objective_of(cost, column_of))
    return HardAssignment(column_of, _objective_of(X, column_of))
