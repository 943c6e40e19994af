"""Command line entry point: ``condensate-lab <command> [options]``.

Exit codes: 0 success, 1 usage or config error, 2 numerical failure,
3 failed checks.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from .counting import report_json
from .experiments import (ConfigError, ScatterConfig, SweepConfig, SCATTER_COLUMNS, run_checks,
                          run_convergence, run_meanfield, scatter_sweep, write_csv, write_report)
from .meanfield import BlowUpError
from .manybody import KrylovError
from .scattering import BracketError, ResonanceError

log = logging.getLogger("condensate_lab")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_CHECKS = 0, 1, 2, 3
NUMERIC_ERRORS = (BlowUpError, KrylovError, ResonanceError, BracketError, FloatingPointError,
                  ArithmeticError)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_CONFIG)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML config file")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--seed", type=int, help="random seed (overrides config)")
    common.add_argument("--quiet", action="store_true")

    p = _Parser(prog="condensate-lab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("checks", parents=[common], help="projector identities and lattice invariants")
    sub.add_parser("scatter", parents=[common], help="scattering microstructure sweep")
    sub.add_parser("meanfield", parents=[common], help="single mean-field run")
    sub.add_parser("converge", parents=[common], help="many-body vs mean-field sweep over N")
    sub.add_parser("report", parents=[common], help="envelope and condition tables")
    return p


def _load(args) -> SweepConfig:
    cfg = SweepConfig.from_toml(args.config) if args.config else SweepConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def _say(args, msg):
    if not args.quiet:
        print(msg)


def cmd_checks(args) -> int:
    seed = args.seed if args.seed is not None else (_load(args).seed if args.config else 0)
    report = run_checks(seed)
    text = report_json(report)
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "checks.json").write_text(text)
    elif not args.quiet:
        sys.stdout.write(text)
    status = "PASS" if report["passed"] else "FAIL"
    _say(args, f"checks {status}: max identity residual {report['max_identity_residual']:.3e}, "
               f"{report['inequality_violations']} inequality violations")
    return EXIT_OK if report["passed"] else EXIT_CHECKS


def cmd_scatter(args) -> int:
    cfg = _load(args)
    scfg = ScatterConfig.from_dict(cfg.scatter)
    rows = scatter_sweep(scfg)
    out = args.out or Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "scatter.csv", SCATTER_COLUMNS, rows)
    bad = [r for r in rows if not (r["pointwise_ok"] and r["l2_g"] <= r["bound_l2"]
                                   and r["l1_g"] <= r["bound_l1"])]
    _say(args, f"scatter: {len(rows)} rows -> {out / 'scatter.csv'}; {len(bad)} bound failures")
    return EXIT_OK


def cmd_meanfield(args) -> int:
    cfg = _load(args)
    out = args.out or Path(cfg.out)
    traj = run_meanfield(cfg, out)
    _say(args, f"meanfield: {len(traj.orbitals)} samples -> {out / 'trajectory.csv'}")
    return EXIT_OK


def cmd_converge(args) -> int:
    cfg = _load(args)
    out = args.out or Path(cfg.out)
    t0 = time.perf_counter()
    records = run_convergence(cfg, out)
    log.info("converge wall time %.2f s", time.perf_counter() - t0)
    for rec in records:
        if rec.ok:
            _say(args, f"N={rec.N:3d}  alpha_T={rec.alpha_T:.6e}  envelope_T={rec.envelope_T:.6e}"
                       f"  C={rec.C_fit:.4f}")
        else:
            _say(args, f"N={rec.N:3d}  failed: {rec.error}")
    return EXIT_OK if all(r.ok for r in records) else EXIT_NUMERIC


def cmd_report(args) -> int:
    cfg = _load(args)
    out = args.out or Path(cfg.out)
    env, cond = write_report(cfg, out)
    if not args.quiet:
        for row in cond:
            print(json.dumps(row, sort_keys=True))
        print(f"report -> {out}")
    return EXIT_OK


COMMANDS = {"checks": cmd_checks, "scatter": cmd_scatter, "meanfield": cmd_meanfield,
            "converge": cmd_converge, "report": cmd_report}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERIC_ERRORS as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
