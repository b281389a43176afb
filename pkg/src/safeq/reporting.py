"""CSV emission for trajectories and sweep summaries."""

from pathlib import Path

import numpy as np

from .exceptions import IoError
from .harness import REFERENCE_TABLE


def _num(v):
    return format(float(v), ".12g")


def trajectory_header(n, m, p):
    cols = ["t"]
    cols += [f"x{i}" for i in range(1, n + 1)]
    cols += [f"u{j}" for j in range(1, m + 1)]
    cols += ["norm_x", "B_s", "e_c", "margin"]
    cols += [f"Wc_{k}" for k in range(1, p + 1)]
    cols += [f"Wa_{i}{j}" for i in range(1, n + 1) for j in range(1, m + 1)]
    return cols


def _write(path, lines):
    try:
        Path(path).write_text("\n".join(lines) + "\n", newline="\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def emit_csv(log, path):
    if len(log) == 0:
        raise IoError("empty trajectory log")
    n, m = log.x.shape[1], log.u.shape[1]
    p = log.critic.shape[1]
    table = np.column_stack([
        log.t, log.x, log.u, log.norm_x, log.barrier, log.td_error, log.margin,
        log.critic, log.actor.reshape(len(log), n * m),
    ])
    lines = [",".join(trajectory_header(n, m, p))]
    lines += [",".join(_num(v) for v in row) for row in table]
    _write(path, lines)


def read_csv(path):
    """Return ``(header, rows)`` of a trajectory CSV as a float array."""
    text = Path(path).read_text().splitlines()
    header = text[0].split(",")
    rows = np.array([[float(tok) for tok in line.split(",")] for line in text[1:] if line])
    return header, rows


SUMMARY_HEADER = "k_sb,total_cost,peak_control,min_margin,actor_error,safety_violated"


def emit_summary(rows, path):
    """Write ``(k_sb, RunMetrics)`` rows plus the reference table as ``#ref,`` lines."""
    rows = list(rows)
    if not rows:
        raise IoError("no sweep rows to write")
    lines = [SUMMARY_HEADER]
    for k_sb, met in rows:
        lines.append(",".join([
            _num(k_sb), _num(met.total_cost), _num(met.peak_control), _num(met.min_margin),
            _num(met.actor_error), "true" if met.safety_violated else "false",
        ]))
    lines += [f"#ref,{k:g},{cost:g},{peak:g}" for k, cost, peak in REFERENCE_TABLE]
    _write(path, lines)
