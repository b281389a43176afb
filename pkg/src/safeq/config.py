"""Flat ``key = value`` experiment configuration files.

Matrices are written with explicit dimensions, row-major::

    A = 2x2: 0, 1, 1.6, 2.8
    x0 = 1, 1
    k_sb = 0.2

Blank lines and ``#`` comments are ignored; missing keys take the
benchmark defaults.
"""

import re
from dataclasses import replace
from pathlib import Path

import numpy as np

from .barrier import BarrierSpec
from .exceptions import InvariantViolation, ParseError
from .harness import ExperimentConfig
from .riccati import SystemModel, benchmark_system

MATRIX_KEYS = ("A", "B", "M", "R")
FLOAT_KEYS = {
    "c": ("spec", "c"),
    "gamma0": ("spec", "gamma0"),
    "eta_a": ("gains", "eta_a"),
    "eta_c": ("gains", "eta_c"),
    "k_sb": ("gains", "k_sb"),
    "T": ("gains", "T"),
    "Wa_bound": ("gains", "Wa_bound"),
    "dt": ("integ", "dt"),
    "t_end": ("integ", "t_end"),
    "noise_amplitude": ("noise", "amplitude"),
    "noise_freq_lo": ("noise", "freq_lo"),
    "noise_freq_hi": ("noise", "freq_hi"),
    "noise_t_off": ("noise", "t_off"),
}
INT_KEYS = {"noise_tones": ("noise", "num_tones"), "seed": (None, "seed")}
OTHER_KEYS = ("x0", "hold", "baseline")
_MATRIX_RE = re.compile(r"^\s*(\d+)\s*[xX]\s*(\d+)\s*:(.*)$")


def _floats(text, line):
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ParseError(f"bad number in {text.strip()!r}", line) from exc


def _matrix(text, line):
    match = _MATRIX_RE.match(text)
    if not match:
        raise ParseError("matrix must be written as '<rows>x<cols>: v1, v2, ...'", line)
    rows, cols = int(match.group(1)), int(match.group(2))
    values = _floats(match.group(3), line)
    if len(values) != rows * cols:
        raise ParseError(f"{rows}x{cols} matrix needs {rows * cols} entries, got {len(values)}", line)
    return np.array(values).reshape(rows, cols)


def parse_text(text):
    """Parse configuration text into raw typed values keyed by name."""
    known = set(MATRIX_KEYS) | set(FLOAT_KEYS) | set(INT_KEYS) | set(OTHER_KEYS)
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError("expected 'key = value'", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in known:
            raise ParseError(f"unknown key {key!r}", lineno)
        if key in values:
            raise ParseError(f"duplicate key {key!r}", lineno)
        if key in MATRIX_KEYS:
            values[key] = _matrix(value, lineno)
        elif key in FLOAT_KEYS:
            numbers = _floats(value, lineno)
            if len(numbers) != 1:
                raise ParseError(f"{key} takes one number", lineno)
            values[key] = numbers[0]
        elif key in INT_KEYS:
            try:
                values[key] = int(value)
            except ValueError as exc:
                raise ParseError(f"{key} must be an integer", lineno) from exc
        elif key == "x0":
            values[key] = np.array(_floats(value, lineno))
        elif key == "hold":
            values[key] = value
        elif key == "baseline":
            if value.lower() not in ("true", "false", "1", "0"):
                raise ParseError("baseline must be true or false", lineno)
            values[key] = value.lower() in ("true", "1")
    return values


def build_config(values):
    """Assemble an :class:`ExperimentConfig`, mapping invariant failures to InvariantViolation."""
    base = ExperimentConfig()
    default_sys = benchmark_system()
    groups = {
        "spec": {},
        "gains": {},
        "integ": {},
        "noise": {},
    }
    top = {}
    for key, (group, attr) in {**FLOAT_KEYS, **INT_KEYS}.items():
        if key in values:
            (groups[group] if group else top)[attr] = values[key]
    if "hold" in values:
        groups["integ"]["hold"] = values["hold"]
    if "baseline" in values:
        top["baseline"] = values["baseline"]
    try:
        sys = SystemModel(**{k: values.get(k, getattr(default_sys, k)) for k in MATRIX_KEYS})
        spec = BarrierSpec(**groups["spec"])
        gains = replace(base.gains, **groups["gains"])
        integ = replace(base.integ, **groups["integ"])
        noise = replace(base.noise, **groups["noise"])
        x0 = values.get("x0", base.x0)
        return ExperimentConfig(sys=sys, spec=spec, gains=gains, integ=integ, x0=x0, noise=noise, **top)
    except InvariantViolation:
        raise
    except (ValueError, TypeError) as exc:
        raise InvariantViolation(type(exc).__name__, str(exc)) from exc


def parse_config(path):
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    return build_config(parse_text(path.read_text()))


def _fmt_matrix(a):
    a = np.atleast_2d(a)
    return f"{a.shape[0]}x{a.shape[1]}: " + ", ".join(repr(float(v)) for v in a.ravel())


def format_config(cfg):
    """Serialise a configuration; ``parse_config`` reads it back unchanged."""
    lines = [f"{k} = {_fmt_matrix(getattr(cfg.sys, k))}" for k in MATRIX_KEYS]
    for key, (group, attr) in {**FLOAT_KEYS, **INT_KEYS}.items():
        owner = getattr(cfg, group) if group else cfg
        lines.append(f"{key} = {getattr(owner, attr)!r}")
    lines.append("x0 = " + ", ".join(repr(float(v)) for v in cfg.x0))
    lines.append(f"hold = {cfg.integ.hold}")
    lines.append(f"baseline = {str(cfg.baseline).lower()}")
    return "\n".join(lines) + "\n"
