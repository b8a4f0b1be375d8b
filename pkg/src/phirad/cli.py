"""phirad command line: validate, solve, classify, sweep.

Exit codes
  0  success (validation passed / converged / rule matched)
  1  I/O, parse or configuration error
  2  a structural condition on the data failed
  3  iteration cap reached without convergence
  4  blow-up detected inside [0, R]
  5  no classification rule matched
"""
from __future__ import annotations

import argparse
import io
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import expr
from .classify import ClassificationError, classify, finite_envelope
from .config import ConfigError, build_config, read_raw, with_value
from .functionals import FunctionalError, build_tables, probe_limits
from .models import ModelError
from .problem import ProblemError, validate
from .quadrature import RadialGrid
from .solver import refined_residual, residual, solve, verify_bounds

EXIT_OK, EXIT_IO, EXIT_CONDITION, EXIT_CAP, EXIT_BLOWUP, EXIT_NORULE = range(6)
BOUNDED_TYPES = {"Bounded"}


class _Fail(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _fmt(x) -> str:
    return format(float(x), ".12g")


def write_csv(path: Path, header, columns):
    buf = io.StringIO(newline="")
    buf.write(",".join(header) + "\n")
    for row in zip(*columns):
        buf.write(",".join(_fmt(x) if not isinstance(x, str) else x for x in row) + "\n")
    path.write_bytes(buf.getvalue().encode("ascii"))


def write_json(path: Path, obj):
    text = json.dumps(obj, indent=2, sort_keys=True, default=_json_default, allow_nan=True)
    path.write_bytes((text + "\n").encode("utf-8"))


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


def _load(raw, args):
    try:
        return build_config(raw, args.theta_mode, args.punder_variant)
    except (ModelError, ProblemError) as err:
        raise _Fail(EXIT_CONDITION, f"condition failure: {err}") from None
    except (ConfigError, expr.ParseError, ValueError, TypeError) as err:
        raise _Fail(EXIT_IO, f"configuration error: {err}") from None


def _read(args):
    try:
        return read_raw(args.config)
    except OSError as err:
        raise _Fail(EXIT_IO, f"cannot read {args.config}: {err}") from None
    except Exception as err:  # tomllib.TOMLDecodeError and friends
        raise _Fail(EXIT_IO, f"cannot parse {args.config}: {err}") from None


def _outdir(args) -> Path:
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise _Fail(EXIT_IO, f"cannot create {out}: {err}") from None
    return out


def _print_validation(rep, verbose):
    for c in rep.checks:
        if verbose or not c.passed:
            line = f"{'ok  ' if c.passed else 'FAIL'} {c.name}"
            if c.detail:
                line += f": {c.detail}"
            if c.witness:
                line += " witness " + ", ".join(f"{k}={v:.6g}" for k, v in c.witness.items())
            print(line)
    print("validation: " + ("pass" if rep.ok else
                            "pass without (C2)" if rep.solvable else "fail"))


def _validated(cfg, verbose):
    rep = validate(cfg.spec)
    _print_validation(rep, verbose)
    if not rep.solvable:
        raise _Fail(EXIT_CONDITION, "data violate the positivity/monotonicity conditions")
    return rep


# ------------------------------------------------------------------ commands

def cmd_validate(args) -> int:
    cfg = _load(_read(args), args)
    rep = validate(cfg.spec)
    _print_validation(rep, args.verbose)
    out = Path(args.out) if args.out else None
    if out is not None:
        write_json(_outdir(args) / cfg.output.report, {"validation": rep.as_dict()})
    return EXIT_OK if rep.ok else EXIT_CONDITION


def _solve_outputs(cfg, rep):
    spec = cfg.spec
    sol, diag = solve(spec)
    report = {"validation": rep.as_dict(), "solve": diag.as_dict()}
    if not diag.blew_up:
        ru, rv = residual(spec, sol)
        report["residual"] = {"u": ru, "v": rv}
        tables = build_tables(spec, sol.grid, with_h=rep.c2_ok)
        report["bounds"] = verify_bounds(spec, sol, tables, c2_ok=rep.c2_ok).as_dict()
    return sol, diag, report


def cmd_solve(args) -> int:
    cfg = _load(_read(args), args)
    rep = _validated(cfg, args.verbose)
    out = _outdir(args)
    sol, diag, report = _solve_outputs(cfg, rep)
    write_csv(out / cfg.output.solution, ("r", "u", "v", "du", "dv"),
              (sol.r, sol.u, sol.v, sol.du, sol.dv))
    write_json(out / cfg.output.report, report)
    if diag.blew_up:
        print(f"blow-up: values exceed {cfg.spec.numerics.overflow:g} "
              f"at r = {diag.blowup_radius:.6g} (node {diag.blowup_node})")
        return EXIT_BLOWUP
    print(f"iterations: {diag.iterations}, final difference {diag.final_difference:.3g}, "
          f"residual {max(report['residual'].values()):.3g}")
    for b in report["bounds"]:
        if args.verbose or b["status"] == "fail":
            print(f"bound {b['bound']}: {b['status']}")
    if not diag.converged:
        print(f"iteration cap {cfg.spec.numerics.max_iter} reached")
        return EXIT_CAP
    return EXIT_OK


def _classification(cfg, rep):
    spec = cfg.spec
    verdicts, _ = probe_limits(spec, c2_ok=rep.c2_ok)
    report = classify(verdicts)
    grid = RadialGrid(spec.numerics.R, spec.numerics.n, spec.numerics.grading)
    tables = build_tables(spec, grid, with_h=rep.c2_ok)
    if report.matched and BOUNDED_TYPES & {report.u_type, report.v_type}:
        try:
            report.envelope = finite_envelope(report, tables)
        except ClassificationError as err:
            report.notes.append(f"no envelope: {err}")
    return report, tables


def cmd_classify(args) -> int:
    cfg = _load(_read(args), args)
    rep = _validated(cfg, args.verbose)
    out = _outdir(args)
    report, tables = _classification(cfg, rep)
    cols = [tables.grid.nodes, *tables.P]
    nan = np.full(len(tables.grid), np.nan)
    cols += [c if c is not None else nan for c in tables.Pbar] + list(tables.Punder)
    write_csv(out / cfg.output.functionals,
              ("r", "P1", "P2", "Pbar1", "Pbar2", "Punder1", "Punder2"), cols)
    write_json(out / cfg.output.report, {"validation": rep.as_dict(), "classification": report.as_dict()})
    for name, v in report.verdicts.items():
        print(f"{name}(inf): {v}")
    print(f"rule: {report.rule}")
    if report.matched:
        both = report.u_type == report.v_type
        print(f"prediction: both {report.u_type}" if both
              else f"prediction: u {report.u_type}, v {report.v_type}")
    for w in report.warnings:
        print(f"warning: {w}")
    for n in report.notes:
        print(f"note: {n}")
    return EXIT_OK if report.matched else EXIT_NORULE


def _sweep_one(job):
    raw, key, value, theta, punder = job
    ns = argparse.Namespace(theta_mode=theta, punder_variant=punder)
    try:
        cfg = _load(with_value(raw, key, value), ns)
        rep = validate(cfg.spec)
        if not rep.solvable:
            return (value, "InvalidData", "Unknown", "Unknown", float("nan"))
        report, _ = _classification(cfg, rep)
        sol, diag = solve(cfg.spec)
        res = float("inf") if diag.blew_up else refined_residual(cfg.spec, sol)
        return (value, report.rule, report.u_type, report.v_type, res)
    except _Fail:
        return (value, "ConfigError", "Unknown", "Unknown", float("nan"))


def cmd_sweep(args) -> int:
    raw = _read(args)
    cfg = _load(raw, args)
    if not cfg.sweep.key:
        raise _Fail(EXIT_IO, "config has no [sweep] key")
    if not cfg.sweep.values:
        raise _Fail(EXIT_IO, "sweep value list is empty")
    out = _outdir(args)
    jobs = [(raw, cfg.sweep.key, v, args.theta_mode, args.punder_variant) for v in cfg.sweep.values]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_sweep_one, jobs))
    else:
        rows = [_sweep_one(j) for j in jobs]
    cols = list(zip(*rows))
    write_csv(out / cfg.output.sweep, ("value", "rule", "u_type", "v_type", "residual"),
              [[float(x) for x in cols[0]], *cols[1:4], [float(x) for x in cols[4]]])
    for row in rows:
        print(f"{cfg.sweep.key}={_fmt(row[0])}: {row[1]} (u {row[2]}, v {row[3]})")
    return EXIT_OK


COMMANDS = {"validate": cmd_validate, "solve": cmd_solve,
            "classify": cmd_classify, "sweep": cmd_sweep}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="phirad",
        description="Radial solutions of quasilinear phi-Laplacian systems.",
        epilog="Exit codes: 0 ok, 1 I/O or config error, 2 condition failure, "
               "3 iteration cap, 4 blow-up, 5 no classification rule.",
    )
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, help="TOML run configuration")
    ap.add_argument("--out", default=None,
                    help="output directory (default: current directory; validate writes nothing without it)")
    ap.add_argument("--jobs", type=int, default=1, help="parallel sweep workers (default: 1)")
    ap.add_argument("--theta-mode", choices=("o4", "o3"), default=None,
                    help="exponents of the comparison functions (default: config, else o4)")
    ap.add_argument("--punder-variant", choices=("notation", "proof"), default=None,
                    help="constant inside the lower functional Punder2 (default: config, else notation)")
    ap.add_argument("--verbose", action="store_true", help="print every check and bound, with debug logging")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_IO
    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_IO
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.out is None and args.command != "validate":
        args.out = "."
    try:
        return COMMANDS[args.command](args)
    except _Fail as err:
        print(f"error: {err}", file=sys.stderr)
        return err.code
    except (FunctionalError, ModelError, expr.EvalError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONDITION


if __name__ == "__main__":
    sys.exit(main())
