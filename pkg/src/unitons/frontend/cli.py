"""Command line entry point: ``unitons {factorize,deform,verify,sweep}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .config import DEFAULT_TOLERANCES, ConfigError, load_config
from .drivers import emit_outputs, run_deform, run_factorize, run_sweep, run_verify
from .expr import ParseError

EXIT_OK, EXIT_CHECK, EXIT_INPUT = 0, 1, 2


class InputError(ValueError):
    pass


def _complex_arg(text: str) -> complex:
    try:
        re_s, im_s = text.split(",")
        return complex(float(re_s), float(im_s))
    except ValueError:
        raise InputError(f"--mu expects RE,IM, got {text!r}") from None


def _tol_arg(items) -> dict:
    out = {}
    for item in items or ():
        key, sep, val = item.partition("=")
        if not sep or key not in DEFAULT_TOLERANCES:
            raise InputError(f"--tol-override expects KEY=VAL with KEY in "
                             f"{sorted(DEFAULT_TOLERANCES)}, got {item!r}")
        try:
            out[key] = float(val)
        except ValueError:
            raise InputError(f"--tol-override {key}: {val!r} is not a number") from None
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="experiment config (JSON)")
    common.add_argument("--mu", help="single deformation parameter RE,IM")
    common.add_argument("--grid", type=int, help="grid points per axis")
    common.add_argument("--out", help="output directory (default: config 'out')")
    common.add_argument("--tol-override", action="append", metavar="KEY=VAL",
                        help="override a tolerance; may repeat")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="unitons", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("factorize", parents=[common], help="standard factorization of the loop at z0")
    sub.add_parser("deform", parents=[common], help="deformed loop and unitons at z0 for one μ")
    sub.add_parser("verify", parents=[common], help="residual suite at h and h/2")
    sw = sub.add_parser("sweep", parents=[common], help="deform over the μ grid and write the table")
    sw.add_argument("--workers", type=int, default=1, help="processes for the μ loop")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        mu = _complex_arg(args.mu) if args.mu else None
        tols = _tol_arg(args.tol_override)
        cfg = load_config(args.config).with_overrides(grid=args.grid, mu=mu, out=args.out,
                                                      tolerances=tols)
    except (InputError, ConfigError, ParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    try:
        if args.command == "factorize":
            report = run_factorize(cfg)
        elif args.command == "deform":
            report = run_deform(cfg, mu)
        elif args.command == "verify":
            report = run_verify(cfg)
        else:
            report = run_sweep(cfg, workers=max(args.workers, 1))
    except ValueError as exc:
        # rank drops, singular Gram matrices and similar input-driven failures
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    paths = emit_outputs(report, cfg.out)
    for c in report.checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name} = {c.value:.3e} "
              f"(threshold {json.dumps(c.threshold)})")
    print(f"wrote {paths['report']} and {paths['table']}")
    return EXIT_OK if report.passed else EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
