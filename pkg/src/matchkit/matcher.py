"""Averaged projected descent over the relaxed matching polytope.

The solver minimizes the linear objective Tr(C X^T) over the polytope in
`polytope`: each outer step takes a gradient step X - lr * C, then re-projects
with a fixed budget of Dykstra cycles. The reported output is the average of
the post-projection iterates, which is the quantity the averaged-descent
convergence guarantee speaks about.
"""

import math
import time
from dataclasses import dataclass, replace

import numpy as np

from . import polytope
from .validation import check_cost_matrix, check_matrix, check_wide

INIT_MODES = ("uniform", "random-feasible", "custom")
AVERAGE_MODES = ("exclude-init", "include-init")


@dataclass(frozen=True)
class SolverConfig:
    """Hyper-parameters for `solve`. Defaults match the fast preset.

    n_grad         outer gradient steps
    n_proj         Dykstra cycles per outer step
    learning_rate  step size on the cost gradient
    init           "uniform", "random-feasible", or "custom" (caller passes
                   X_init to `solve`)
    average_mode   "exclude-init" averages the n_grad post-projection
                   iterates; "include-init" also counts the initial point
    seed           seed for the random-feasible initializer
    """

    n_grad: int = 40
    n_proj: int = 5
    learning_rate: float = 0.1
    init: str = "uniform"
    average_mode: str = "exclude-init"
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.n_grad, (int, np.integer)) or self.n_grad < 1:
            raise ValueError(f"n_grad must be a positive integer, got {self.n_grad!r}")
        if not isinstance(self.n_proj, (int, np.integer)) or self.n_proj < 1:
            raise ValueError(f"n_proj must be a positive integer, got {self.n_proj!r}")
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate!r}")
        if self.init not in INIT_MODES:
            raise ValueError(f"init must be one of {INIT_MODES}, got {self.init!r}")
        if self.average_mode not in AVERAGE_MODES:
            raise ValueError(
                f"average_mode must be one of {AVERAGE_MODES}, got {self.average_mode!r}"
            )
        if not isinstance(self.seed, (int, np.integer)) or self.seed < 0:
            raise ValueError(f"seed must be a non-negative integer, got {self.seed!r}")


PRESETS = {
    "paper-fast": SolverConfig(n_grad=40, n_proj=5, learning_rate=0.1),
    "paper-converged": SolverConfig(n_grad=400, n_proj=50, learning_rate=0.01),
}


def preset(name, **overrides):
    """A named preset config, optionally with fields overridden."""
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}, choose from {sorted(PRESETS)}")
    return replace(PRESETS[name], **overrides)


@dataclass
class SolveReport:
    """Everything `solve` produces.

    assignment         averaged relaxed assignment, the solver's output
    masked_assignment  assignment with all but each row's best entry zeroed
    objective_trace    Tr(C X^T) of the post-projection iterate, per step
    feasibility_trace  cheap constraint residuals of the iterate, per step
    wall_time          seconds spent in `solve`
    """

    assignment: np.ndarray
    masked_assignment: np.ndarray
    objective_trace: list
    feasibility_trace: list
    wall_time: float


def objective(C, X):
    """Tr(C X^T), the total cost selected by a relaxed assignment."""
    return float((np.asarray(C) * np.asarray(X)).sum())


def make_rng(seed):
    """The package-wide seeded generator: Philox, a counter-based 64-bit
    generator with a stable bit stream for a fixed seed."""
    return np.random.Generator(np.random.Philox(seed))


def initial_assignment(shape, mode="uniform", rng=None, seed=0):
    """Starting point for the solver.

    "uniform" spreads each row evenly (1/m everywhere, always feasible).
    "random-feasible" draws uniform noise from the seeded generator and
    projects it onto the polytope with a reference-accuracy projection.
    """
    n, m = shape
    if mode == "uniform":
        return np.full((n, m), 1.0 / m)
    if mode == "random-feasible":
        if rng is None:
            rng = make_rng(seed)
        noise = rng.random((n, m))
        X0, _ = polytope.dykstra_project(noise, polytope.REFERENCE_CYCLES)
        return X0
    raise ValueError(f"no initializer for mode {mode!r}")


def confidence_mask(X):
    """Zero all but the largest entry in each row (lowest column wins ties)."""
    X = check_matrix(X, "X")
    keep = np.zeros(X.shape, dtype=bool)
    keep[np.arange(X.shape[0]), np.argmax(X, axis=1)] = True
    return np.where(keep, X, 0.0)


def solve(C, config=None, X_init=None, tape=None, inner_trace=None):
    """Minimize Tr(C X^T) over the polytope by averaged projected descent.

    X_init overrides the configured initializer and must match C's shape
    (config.init == "custom" requires it). The run is deterministic for a
    fixed config: random draws happen only in the random-feasible
    initializer, which uses config.seed.

    `tape` (a list) collects per-step lists of CycleRecord for reverse-mode
    use; `inner_trace` (a list) collects each step's Dykstra residual trace.
    """
    start = time.perf_counter()
    C = check_cost_matrix(C)
    check_wide(C, "C")
    if config is None:
        config = SolverConfig()

    if X_init is not None:
        X = check_matrix(X_init, "X_init")
        if X.shape != C.shape:
            raise ValueError(
                f"X_init shape {X.shape} does not match C shape {C.shape}"
            )
        X = X.copy()
    elif config.init == "custom":
        raise ValueError('config.init is "custom" but no X_init was given')
    else:
        X = initial_assignment(C.shape, config.init, seed=config.seed)

    include_init = config.average_mode == "include-init"
    total = X.copy() if include_init else np.zeros_like(X)
    terms = 1 if include_init else 0

    objective_trace = []
    feasibility_trace = []
    for _ in range(config.n_grad):
        X = X - config.learning_rate * C
        step_tape = [] if tape is not None else None
        X, res_trace = polytope.dykstra_project(X, config.n_proj, tape=step_tape)
        if tape is not None:
            tape.append(step_tape)
        if inner_trace is not None:
            inner_trace.append(res_trace)
        objective_trace.append(objective(C, X))
        feasibility_trace.append(polytope.residuals(X))
        total += X
        terms += 1

    averaged = total / terms
    return SolveReport(
        assignment=averaged,
        masked_assignment=confidence_mask(averaged),
        objective_trace=objective_trace,
        feasibility_trace=feasibility_trace,
        wall_time=time.perf_counter() - start,
    )


@dataclass(frozen=True)
class TheoremBounds:
    """Convergence-certificate quantities for one instance.

    initial_distance  Frobenius distance from the start to the optimum
    step_bound        outer steps after which the averaged iterate is
                      epsilon-optimal, at a valid step size
    step_size_max     supremum of valid step sizes
    contraction_rate / contraction_scale
                      geometric fit residual_j ~ scale * rate^(j+1) to an
                      observed inner residual trace (None without a usable
                      trace)
    min_inner_cycles  cycles per step the certificate asks for at the fitted
                      constants; values <= 0 mean one cycle already suffices
                      (None when the fit is unavailable or does not contract)
    """

    initial_distance: float
    step_bound: int
    step_size_max: float
    contraction_rate: float = None
    contraction_scale: float = None
    min_inner_cycles: int = None


def theorem_bounds(C, X_init, X_opt, step_size, epsilon, inner_residuals=None):
    """Evaluate the solver's convergence certificate on a concrete instance.

    epsilon is the target objective suboptimality, in (0, 1). When an
    observed inner residual trace is given, its geometric decay is fitted by
    least squares on the log residuals (nonpositive entries are dropped; at
    least two points are needed) and the required inner cycle count is
    derived from the fitted constants.
    """
    C = check_cost_matrix(C)
    X_init = check_matrix(X_init, "X_init")
    X_opt = check_matrix(X_opt, "X_opt")
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon!r}")
    if not step_size > 0:
        raise ValueError(f"step_size must be positive, got {step_size!r}")

    r0 = float(np.linalg.norm(X_init - X_opt))
    step_bound = math.ceil(6.0 * r0 * r0 / (step_size * epsilon))
    cost_norm = float(np.linalg.norm(C))
    step_size_max = min(15.0 * r0, r0 / cost_norm) if cost_norm > 0 else 15.0 * r0

    rate = scale = cycles = None
    if inner_residuals is not None:
        res = np.asarray(inner_residuals, dtype=float)
        cycle_index = np.arange(1, res.size + 1)
        keep = res > 0
        if keep.sum() >= 2:
            design = np.stack([np.ones(keep.sum()), cycle_index[keep]], axis=1)
            coef, *_ = np.linalg.lstsq(design, np.log(res[keep]), rcond=None)
            scale = float(np.exp(coef[0]))
            rate = float(np.exp(coef[1]))
            if rate < 1.0:
                target = scale * math.sqrt(15.0 * step_bound / (step_size * epsilon))
                if target > 0 and math.isfinite(target):
                    cycles = math.ceil(math.log(target) / math.log(1.0 / rate))
    return TheoremBounds(
        initial_distance=r0,
        step_bound=step_bound,
        step_size_max=step_size_max,
        contraction_rate=rate,
        contraction_scale=scale,
        min_inner_cycles=cycles,
    )
