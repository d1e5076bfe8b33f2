"""Scikit-learn style front end for the relaxed matching solver."""

from dataclasses import asdict

from sklearn.base import BaseEstimator

from .matcher import SolverConfig, PRESETS, solve


class MatchingSolver(BaseEstimator):
    """Relaxed linear-assignment matching with a fit/fit_transform surface.

    Calling `fit(C)` minimizes Tr(C X^T) over the relaxed matching polytope
    (rows sum to 1, column sums capped at 1, nonnegative entries) and stores
    the solver's outputs as trailing-underscore attributes. Like other
    non-inductive estimators the result is tied to the fitted matrix, so
    there is no separate `transform`; use `fit_transform`.

    Parameters mirror `SolverConfig`:

    n_grad : int, default=40
        Outer gradient steps.
    n_proj : int, default=5
        Dykstra projection cycles per outer step.
    learning_rate : float, default=0.1
        Step size on the cost gradient.
    init : str, default="uniform"
        "uniform", "random-feasible", or "custom" (pass X_init to fit).
    average_mode : str, default="exclude-init"
        Which iterates the reported assignment averages over.
    seed : int, default=0
        Seed for the random-feasible initializer.

    Attributes
    ----------
    assignment_ : ndarray of shape (n, m)
        Averaged relaxed assignment.
    masked_assignment_ : ndarray of shape (n, m)
        Assignment with all but each row's best entry zeroed.
    objective_trace_ : list of float
    feasibility_trace_ : list of Residuals
    wall_time_ : float
    report_ : SolveReport
        The full solver report backing the attributes above.
    """

    def __init__(self, n_grad=40, n_proj=5, learning_rate=0.1, init="uniform",
                 average_mode="exclude-init", seed=0):
        self.n_grad = n_grad
        self.n_proj = n_proj
        self.learning_rate = learning_rate
        self.init = init
        self.average_mode = average_mode
        self.seed = seed

    @classmethod
    def from_preset(cls, name, **overrides):
        """Build an estimator from a named preset, with optional overrides."""
        if name not in PRESETS:
            raise ValueError(
                f"unknown preset {name!r}, choose from {sorted(PRESETS)}"
            )
        params = {**asdict(PRESETS[name]), **overrides}
        return cls(**params)

    def _config(self):
        # Parameter validation happens here (at fit time, per sklearn custom).
        return SolverConfig(
            n_grad=self.n_grad,
            n_proj=self.n_proj,
            learning_rate=self.learning_rate,
            init=self.init,
            average_mode=self.average_mode,
            seed=self.seed,
        )

    def fit(self, C, y=None, X_init=None):
        """Solve the relaxed assignment for cost matrix C and store results."""
        report = solve(C, self._config(), X_init=X_init)
        self.report_ = report
        self.assignment_ = report.assignment
        self.masked_assignment_ = report.masked_assignment
        self.objective_trace_ = report.objective_trace
        self.feasibility_trace_ = report.feasibility_trace
        self.wall_time_ = report.wall_time
        return self

    def fit_transform(self, C, y=None, X_init=None):
        """Fit on C and return the averaged relaxed assignment."""
        return self.fit(C, y=y, X_init=X_init).assignment_
