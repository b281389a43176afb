"""Command-line entry point: ``safeq run|sweep|compare|oracle|verify``."""

import argparse
import sys
from pathlib import Path

import numpy as np

from .config import parse_config
from .exceptions import SafeQError
from .harness import REFERENCE_KSB, ExperimentConfig, compare_baseline, run_episode, sweep_ksb
from .reporting import emit_csv, emit_summary
from .riccati import solve_care


def load_config(path):
    return parse_config(path) if path else ExperimentConfig()


def _outdir(path):
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _print_metrics(label, met):
    print(f"{label}: cost={met.total_cost:.6g} peak={met.peak_control:.6g} "
          f"min_margin={met.min_margin:.6g} actor_error={met.actor_error:.6g} "
          f"safety_violated={str(met.safety_violated).lower()}")


def cmd_run(args):
    cfg = load_config(args.config)
    log, met = run_episode(cfg)
    path = _outdir(args.output) / "trajectory.csv"
    emit_csv(log, path)
    _print_metrics("run", met)
    print(f"wrote {path}")
    return 0


def parse_ksb(text):
    try:
        values = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad gain list {text!r}") from exc
    if len(values) < 2:
        raise argparse.ArgumentTypeError("a sweep needs at least two gains")
    return values


def cmd_sweep(args):
    cfg = load_config(args.config)
    rows = sweep_ksb(cfg, args.ksb)
    path = _outdir(args.output) / "summary.csv"
    emit_summary(rows, path)
    for k, met in rows:
        _print_metrics(f"k_sb={k:g}", met)
    print(f"wrote {path}")
    return 0


def cmd_compare(args):
    cfg = load_config(args.config)
    (log, met), (base_log, base_met) = compare_baseline(cfg)
    out = _outdir(args.output)
    emit_csv(log, out / "proposed.csv")
    emit_csv(base_log, out / "baseline.csv")
    _print_metrics("proposed", met)
    _print_metrics("baseline", base_met)
    print(f"wrote {out / 'proposed.csv'} and {out / 'baseline.csv'}")
    return 0


def cmd_oracle(args):
    cfg = load_config(args.config)
    sol = solve_care(cfg.sys)
    with np.printoptions(precision=10, suppress=True):
        print("P =")
        print(sol.P)
        print("W_a =")
        print(sol.Wa)
        print("W_c =")
        print(sol.Wc)
    print(f"ARE residual = {sol.residual:.3e}")
    return 0


def cmd_verify(args):
    from .verify import run_properties

    cfg = load_config(args.config)
    results = run_properties(cfg, fault=args.inject_fault)
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} properties passed")
    return 1 if failed else 0


def build_parser():
    parser = argparse.ArgumentParser(prog="safeq", description="Safe model-free Q-learning experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text, output=True):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("-c", "--config", help="key = value config file (defaults if omitted)")
        if output:
            p.add_argument("-o", "--output", default="out", help="output directory (created if absent)")
        p.set_defaults(func=func)
        return p

    add("run", cmd_run, "one learning episode, trajectory CSV")
    sweep = add("sweep", cmd_sweep, "safety-gain sweep, summary CSV")
    sweep.add_argument("--ksb", type=parse_ksb, default=list(REFERENCE_KSB), help="comma-separated gains")
    add("compare", cmd_compare, "proposed controller against unconstrained Q-learning")
    add("oracle", cmd_oracle, "print the Riccati solution and ideal weights", output=False)
    verify = add("verify", cmd_verify, "run the numerical property suite", output=False)
    verify.add_argument("--inject-fault", choices=["are"], help=argparse.SUPPRESS)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SafeQError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
