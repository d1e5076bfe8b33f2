"""Plain-text formats used by the CLI.

Three formats live here:

* cost files: one matrix row per line, whitespace-separated decimal reals;
  blank lines and "#" comments are skipped.
* result documents: "key: value" lines plus "key:" blocks whose lines are
  indented by two spaces. Floats are written in shortest round-trip form, so
  parsing a document reproduces the matrices bit for bit.
* CSV tables: UTF-8, header row, LF line endings.
"""

import csv
import io

import numpy as np


class ParseError(ValueError):
    """An input file or document does not conform to its format."""


def _float(token, where):
    try:
        return float(token)
    except ValueError:
        raise ParseError(f"bad number {token!r} in {where}") from None


def parse_cost_text(text, where="cost data"):
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        rows.append([_float(tok, f"{where} line {lineno}") for tok in line.split()])
    if not rows:
        raise ParseError(f"{where} contains no matrix rows")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ParseError(f"{where} has ragged rows")
    return np.array(rows, dtype=float)


def read_cost_file(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read cost file {path}: {exc}") from None
    return parse_cost_text(text, where=str(path))


def write_cost_file(path, C):
    C = np.asarray(C, dtype=float)
    lines = [" ".join(repr(float(v)) for v in row) for row in C]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def format_cost_text(C):
    C = np.asarray(C, dtype=float)
    return "\n".join(" ".join(repr(float(v)) for v in row) for row in C) + "\n"


def _matrix_block(X):
    return ["  " + " ".join(repr(float(v)) for v in row) for row in np.asarray(X)]


def format_result(report, config, objective):
    """Serialize a solve run as a result document (a string).

    `objective` is the objective value of the averaged assignment; it needs
    the cost matrix, so the caller supplies it.
    """
    n, m = report.assignment.shape
    lines = [
        f"rows: {n}",
        f"cols: {m}",
        f"n_grad: {config.n_grad}",
        f"n_proj: {config.n_proj}",
        f"learning_rate: {repr(float(config.learning_rate))}",
        f"init: {config.init}",
        f"average_mode: {config.average_mode}",
        f"seed: {config.seed}",
        f"objective: {repr(float(objective))}",
        f"final_step_objective: {repr(float(report.objective_trace[-1]))}",
        f"wall_time_s: {repr(float(report.wall_time))}",
        "assignment:",
        *_matrix_block(report.assignment),
        "masked_assignment:",
        *_matrix_block(report.masked_assignment),
        "objective_trace:",
        *[f"  {repr(float(v))}" for v in report.objective_trace],
        "feasibility_trace:",
        *[
            "  " + " ".join(
                repr(float(v))
                for v in (r.row_residual, r.col_violation, r.negativity)
            )
            for r in report.feasibility_trace
        ],
    ]
    return "\n".join(lines) + "\n"


def parse_result(text):
    """Parse a result document back into a dict of scalars and arrays."""
    scalars = {}
    blocks = {}
    current = None
    for raw in text.splitlines():
        if not raw.strip():
            continue
        if raw.startswith("  "):
            if current is None:
                raise ParseError("indented line outside any block")
            blocks[current].append(
                [_float(tok, "result document") for tok in raw.split()]
            )
            continue
        if ":" not in raw:
            raise ParseError(f"malformed line {raw!r}")
        key, _, value = raw.partition(":")
        key = key.strip()
        value = value.strip()
        if value:
            scalars[key] = value
            current = None
        else:
            blocks[key] = []
            current = key

    out = {}
    for key in ("rows", "cols", "n_grad", "n_proj", "seed"):
        if key in scalars:
            out[key] = int(scalars[key])
    for key in ("learning_rate", "objective", "final_step_objective",
                "wall_time_s"):
        if key in scalars:
            out[key] = _float(scalars[key], "result document")
    for key in ("init", "average_mode"):
        if key in scalars:
            out[key] = scalars[key]
    for key, rows in blocks.items():
        if key == "objective_trace":
            out[key] = np.array([r[0] for r in rows], dtype=float)
        else:
            out[key] = np.array(rows, dtype=float)
    return out


def write_csv(path_or_handle, header, rows):
    """CSV with a header, UTF-8, LF newlines. Accepts a path or a handle."""
    if hasattr(path_or_handle, "write"):
        _write_csv_to(path_or_handle, header, rows)
        return
    with open(path_or_handle, "w", encoding="utf-8", newline="") as fh:
        _write_csv_to(fh, header, rows)


def _write_csv_to(fh, header, rows):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)


def csv_text(header, rows):
    buf = io.StringIO()
    _write_csv_to(buf, header, rows)
    return buf.getvalue()
