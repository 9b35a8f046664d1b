"""Command line entry point: ``llgbubble run|sweep|bisect|asymptotics``.

Exit codes: 0 success, 2 precondition failure (bad config or bracket),
3 solver failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import harness
from .config import ConfigError, ExperimentConfig

EXIT_OK, EXIT_PRECONDITION, EXIT_SOLVER = 0, 2, 3


def _floats(text: str) -> list:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="llgbubble", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="single simulation")
    r.add_argument("--config", required=True)
    r.add_argument("--out", help="run directory (default: output.dir)")

    s = sub.add_parser("sweep", help="one run per gamma")
    s.add_argument("--config", required=True)
    s.add_argument("--gamma", required=True, type=_floats)
    s.add_argument("--out")

    b = sub.add_parser("bisect", help="bisection on the rotation sign")
    b.add_argument("--config", required=True)
    b.add_argument("--lo", required=True, type=float)
    b.add_argument("--hi", required=True, type=float)
    b.add_argument("--tol", required=True, type=float)
    b.add_argument("--out")

    a = sub.add_parser("asymptotics", help="reduced-model tables")
    a.add_argument("--n-max", required=True, type=int)
    a.add_argument("--attach", help="run directory to compare against")
    a.add_argument("--out", default="asymptotics")
    return p


def _run(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    rec = harness.run(cfg, args.out)
    print(f"{rec.status} reason={rec.reason} outcome={rec.outcome} peak_grad={rec.peak_grad:.6g} "
          f"t={rec.t_final:.6g}")
    return EXIT_OK if rec.status == "ok" else EXIT_SOLVER


def _sweep(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    recs = harness.sweep(cfg, args.gamma, args.out)
    for g, rec in zip(args.gamma, recs):
        print(f"gamma={g:g} {rec.status} outcome={rec.outcome} peak_grad={rec.peak_grad:.6g}")
    return EXIT_OK if all(r.status == "ok" for r in recs) else EXIT_SOLVER


def _bisect(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    res = harness.bisect(cfg, args.lo, args.hi, args.tol, args.out)
    print(f"gamma_star={res.gamma_star:.10g} bracket=[{res.lo:.10g}, {res.hi:.10g}] "
          f"iterations={res.iterations}")
    return EXIT_OK


def _asymptotics(args) -> int:
    if args.attach is not None and not (Path(args.attach) / "summary.json").is_file():
        raise harness.PreconditionError(f"no summary.json in {args.attach}")
    files = harness.report_asymptotics(args.n_max, args.out, args.attach)
    for name, path in files.items():
        print(f"{name}: {Path(args.out) / path}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"run": _run, "sweep": _sweep, "bisect": _bisect, "asymptotics": _asymptotics}[args.command]
    try:
        return handler(args)
    except (ConfigError, harness.PreconditionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except harness.SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
