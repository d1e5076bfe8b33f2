"""Command line interface.

Subcommands:

  solve       read a cost file, run the solver, emit a result document
  bench       solver vs exact baselines on seeded random instances (CSV)
  converge    objective and inner-residual series over a config sweep (CSV)
  gradcheck   compare reverse-mode gradients against central differences
  synth-cost  build a cost matrix from synthetic masks and features

Exit codes: 0 success, 1 unreadable or unparseable input, 2 shape or domain
violation, 3 failed gradient check.

Every command is deterministic for a fixed seed. Random draws come from a
Philox counter-based generator; each command documents its draw order in its
help text.
"""

import argparse
import statistics
import sys
import time
from dataclasses import dataclass, replace

import numpy as np

from . import autodiff, cost, exact, formats, matcher, polytope

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_SHAPE = 2
EXIT_GRADCHECK = 3

_INIT_FLAG_TO_MODE = {"uniform": "uniform", "random": "random-feasible"}


@dataclass(frozen=True)
class BenchRecord:
    """One (instance, method) row of a benchmark table."""

    instance_id: int
    method: str
    objective: float
    hard_objective: float
    feasibility_distance: float
    wall_time_s: float

    def row(self):
        return (
            self.instance_id,
            self.method,
            repr(self.objective),
            repr(self.hard_objective),
            repr(self.feasibility_distance),
            repr(self.wall_time_s),
        )


BENCH_HEADER = (
    "instance_id", "method", "objective", "hard_objective",
    "feasibility_distance", "wall_time_s",
)
CONVERGE_HEADER = (
    "config", "init", "outer_step", "objective", "inner_cycle",
    "inner_residual",
)


def _add_solver_flags(sp, default_preset):
    sp.add_argument("--preset", choices=sorted(matcher.PRESETS),
                    default=default_preset,
                    help=f"named config (default: {default_preset})")
    sp.add_argument("--n-grad", type=int, default=None,
                    help="outer gradient steps (overrides preset)")
    sp.add_argument("--n-proj", type=int, default=None,
                    help="projection cycles per step (overrides preset)")
    sp.add_argument("--lr", type=float, default=None,
                    help="step size (overrides preset)")
    sp.add_argument("--init", choices=sorted(_INIT_FLAG_TO_MODE),
                    default=None, help="starting point (default: uniform)")
    sp.add_argument("--average", choices=list(matcher.AVERAGE_MODES),
                    default=None,
                    help="iterate window for the reported assignment")
    sp.add_argument("--seed", type=int, default=0,
                    help="seed for every random draw this command makes")


def _config_from_args(args):
    overrides = {"seed": args.seed}
    if args.n_grad is not None:
        overrides["n_grad"] = args.n_grad
    if args.n_proj is not None:
        overrides["n_proj"] = args.n_proj
    if args.lr is not None:
        overrides["learning_rate"] = args.lr
    if args.init is not None:
        overrides["init"] = _INIT_FLAG_TO_MODE[args.init]
    if args.average is not None:
        overrides["average_mode"] = args.average
    return replace(matcher.PRESETS[args.preset], **overrides)


def _emit(text, out_path):
    if out_path is None:
        sys.stdout.write(text)
    else:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _require_positive(**named):
    for name, value in named.items():
        if value < 1:
            raise ValueError(f"--{name} must be at least 1, got {value}")


def cmd_solve(args):
    C = formats.read_cost_file(args.cost_file)
    config = _config_from_args(args)
    report = matcher.solve(C, config)
    if args.format == "csv":
        header = [f"c{j}" for j in range(C.shape[1])]
        rows = [[repr(float(v)) for v in row] for row in report.assignment]
        text = formats.csv_text(header, rows)
    else:
        text = formats.format_result(
            report, config, matcher.objective(C, report.assignment)
        )
    _emit(text, args.out)
    return EXIT_OK


def cmd_bench(args):
    _require_positive(rows=args.rows, cols=args.cols, trials=args.trials)
    config = _config_from_args(args)
    rng = matcher.make_rng(args.seed)
    records = []
    # Draw order per trial: the cost matrix, then (only under --init random)
    # the init noise.
    for t in range(args.trials):
        C = rng.random((args.rows, args.cols))
        X0 = None
        if config.init == "random-feasible":
            X0 = matcher.initial_assignment(C.shape, "random-feasible", rng=rng)
        report = matcher.solve(C, config, X_init=X0)
        hard = exact.round_to_hard(report.assignment, cost=C)
        dist = polytope.feasibility(report.assignment).distance_estimate
        records.append(BenchRecord(
            t, "pgd", matcher.objective(C, report.assignment),
            hard.objective, dist, report.wall_time,
        ))

        t0 = time.perf_counter()
        h = exact.hungarian(C)
        records.append(BenchRecord(
            t, "hungarian", h.objective, h.objective, 0.0,
            time.perf_counter() - t0,
        ))

        t0 = time.perf_counter()
        g = exact.greedy(C, threshold=args.threshold)
        records.append(BenchRecord(
            t, "greedy", g.objective, g.objective, 0.0,
            time.perf_counter() - t0,
        ))

    for method in ("pgd", "hungarian", "greedy"):
        med = statistics.median(
            r.wall_time_s for r in records if r.method == method
        )
        print(f"median_wall_time_s {method}: {med:.6f}", file=sys.stderr)

    if args.format == "kv":
        blocks = []
        for r in records:
            blocks.append("\n".join([
                f"instance_id: {r.instance_id}",
                f"method: {r.method}",
                f"objective: {repr(r.objective)}",
                f"hard_objective: {repr(r.hard_objective)}",
                f"feasibility_distance: {repr(r.feasibility_distance)}",
                f"wall_time_s: {repr(r.wall_time_s)}",
            ]))
        text = "\n\n".join(blocks) + "\n"
    else:
        text = formats.csv_text(BENCH_HEADER, [r.row() for r in records])
    _emit(text, args.out)
    return EXIT_OK


def cmd_converge(args):
    _require_positive(rows=args.rows, cols=args.cols, inits=args.inits)
    n_grads = args.n_grad or [400]
    n_projs = args.n_proj or [50]
    rates = args.lr or [0.01]
    rng = matcher.make_rng(args.seed)
    # Draw order: the cost matrix, then the init points (shared across every
    # config so sweeps compare like against like).
    C = rng.random((args.rows, args.cols))
    init_points = []
    for _ in range(args.inits):
        if args.init == "uniform" and args.inits == 1:
            init_points.append(matcher.initial_assignment(C.shape, "uniform"))
        else:
            init_points.append(
                matcher.initial_assignment(C.shape, "random-feasible", rng=rng)
            )

    keyed = []
    for n_grad in n_grads:
        for n_proj in n_projs:
            for rate in rates:
                config = matcher.SolverConfig(
                    n_grad=n_grad, n_proj=n_proj,
                    learning_rate=rate, init="custom",
                )
                label = f"ngrad={n_grad};nproj={n_proj};lr={repr(float(rate))}"
                for j, X0 in enumerate(init_points):
                    inner = []
                    report = matcher.solve(
                        C, config, X_init=X0, inner_trace=inner
                    )
                    for k, obj in enumerate(report.objective_trace, start=1):
                        keyed.append((
                            (label, j, k, 0, 0),
                            (label, j, k, repr(float(obj)), "", ""),
                        ))
                    for k, trace in enumerate(inner, start=1):
                        for c, res in enumerate(trace, start=1):
                            keyed.append((
                                (label, j, k, 1, c),
                                (label, j, k, "", c, repr(float(res))),
                            ))
    # Deterministic emission order regardless of how the sweep is expressed.
    keyed.sort(key=lambda pair: pair[0])
    text = formats.csv_text(CONVERGE_HEADER, [row for _, row in keyed])
    _emit(text, args.out)
    return EXIT_OK


def cmd_gradcheck(args):
    _require_positive(rows=args.rows, cols=args.cols)
    config = _config_from_args(args)
    if args.h < 1e-8:
        print(
            f"warning: step {args.h!r} is small enough that floating-point "
            "cancellation may dominate the differences; results may be noise",
            file=sys.stderr,
        )
    rng = matcher.make_rng(args.seed)
    # Draw order: the cost matrix, then the probe weights.
    C = rng.random((args.rows, args.cols))
    weights = rng.normal(size=(args.rows, args.cols))
    report = autodiff.gradcheck(C, config, loss_weights=weights, step=args.h)
    lines = [
        f"rows: {args.rows}",
        f"cols: {args.cols}",
        f"step: {repr(float(args.h))}",
        f"max_relative_error: {repr(report.max_rel_error)}",
        f"coordinates_checked: {report.n_checked}",
        f"coordinates_excluded: {report.n_excluded}",
        f"branch_min_slack: {repr(report.base_min_slack)}",
        f"status: {'pass' if report.passed else 'fail'}",
    ]
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK if report.passed else EXIT_GRADCHECK


def cmd_synth_cost(args):
    _require_positive(rows=args.rows, cols=args.cols,
                      height=args.height, width=args.width)
    rng = matcher.make_rng(args.seed)

    # Draw order: template rectangles, template features, proposal
    # rectangles, proposal features.
    def draw_rects(count):
        rects = []
        for _ in range(count):
            x = int(rng.integers(0, args.width))
            y = int(rng.integers(0, args.height))
            w = int(rng.integers(1, max(2, args.width // 2 + 1)))
            h = int(rng.integers(1, max(2, args.height // 2 + 1)))
            rects.append((x, y, w, h))
        return rects

    t_masks = cost.synth_masks(draw_rects(args.rows), args.height, args.width)
    t_feats = cost.synth_features(args.rows, args.feature_dim, rng)
    p_masks = cost.synth_masks(draw_rects(args.cols), args.height, args.width)
    p_feats = cost.synth_features(args.cols, args.feature_dim, rng)
    C = cost.build_cost(t_masks, t_feats, p_masks, p_feats,
                        iou_weight=args.iou_weight)
    _emit(formats.format_cost_text(C), args.out)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="matchkit",
        description="Relaxed linear-assignment matching: solver, exact "
                    "baselines, benchmarks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", help="solve one cost matrix from a file")
    sp.add_argument("cost_file", help="plain-text matrix, one row per line")
    _add_solver_flags(sp, "paper-fast")
    sp.add_argument("--out", default=None, help="write here instead of stdout")
    sp.add_argument("--format", choices=["kv", "csv"], default="kv",
                    help="kv result document, or the assignment as CSV")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser(
        "bench", help="solver vs hungarian vs greedy on random instances"
    )
    sp.add_argument("--rows", type=int, default=5)
    sp.add_argument("--cols", type=int, default=100)
    sp.add_argument("--trials", type=int, default=3)
    _add_solver_flags(sp, "paper-converged")
    sp.add_argument("--threshold", type=float, default=None,
                    help="greedy baseline leaves a row unmatched when its "
                         "best available cost exceeds this")
    sp.add_argument("--out", default=None)
    sp.add_argument("--format", choices=["csv", "kv"], default="csv")
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser(
        "converge",
        help="emit objective and inner-residual series over a config sweep",
    )
    sp.add_argument("--rows", type=int, default=5)
    sp.add_argument("--cols", type=int, default=100)
    sp.add_argument("--n-grad", type=int, action="append", default=None,
                    help="outer steps, repeatable (default: 400)")
    sp.add_argument("--n-proj", type=int, action="append", default=None,
                    help="cycles per step, repeatable (default: 50)")
    sp.add_argument("--lr", type=float, action="append", default=None,
                    help="step size, repeatable (default: 0.01)")
    sp.add_argument("--init", choices=sorted(_INIT_FLAG_TO_MODE),
                    default="uniform",
                    help="with --inits 1 only; more inits are always random")
    sp.add_argument("--inits", type=int, default=1,
                    help="number of starting points shared across configs")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", default=None)
    sp.add_argument("--format", choices=["csv"], default="csv")
    sp.set_defaults(func=cmd_converge)

    sp = sub.add_parser(
        "gradcheck",
        help="reverse-mode gradient vs central differences on a random "
             "instance (exit 3 on failure)",
    )
    sp.add_argument("--rows", type=int, default=3)
    sp.add_argument("--cols", type=int, default=6)
    _add_solver_flags(sp, "paper-fast")
    sp.add_argument("--h", type=float, default=1e-5,
                    help="finite-difference step")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_gradcheck)

    sp = sub.add_parser(
        "synth-cost",
        help="generate a cost matrix from synthetic masks and features",
    )
    sp.add_argument("--rows", type=int, default=4,
                    help="number of templates")
    sp.add_argument("--cols", type=int, default=12,
                    help="number of proposals")
    sp.add_argument("--height", type=int, default=32)
    sp.add_argument("--width", type=int, default=32)
    sp.add_argument("--feature-dim", type=int, default=16)
    sp.add_argument("--lambda", dest="iou_weight", type=float, default=0.3,
                    help="overlap weight in (0, 1]")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_synth_cost)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except formats.ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SHAPE


if __name__ == "__main__":
    sys.exit(main())
