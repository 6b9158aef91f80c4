"""evoeq command line: expected, table, bounds, density, mc, verify.

Exit codes: 0 success, 1 convergence failure (or failed verify check),
2 usage / unsupported dimensions, 3 internal consistency failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from . import density2, kostlan, oracle, verify
from .estimate import ConvergenceError, EstimateReport, UnsupportedDimensionError
from .game_model import GameSpec
from .quad import QuadConfig

log = logging.getLogger("evoeq")

DEFAULT_SEED = 20160101
EXIT_OK, EXIT_CONVERGENCE, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3
MC_MAX_D = 30
MC_MAX_N = 6


class UsageError(Exception):
    pass


class InternalError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    n_list: list[int] = field(default_factory=list)
    d_range: tuple[int, int] = (2, 2)
    quad: QuadConfig = field(default_factory=QuadConfig)
    method: str = "auto"
    samples: int = 100_000
    seed: int = DEFAULT_SEED
    sigma: float = 1.0
    threads: int = 1
    out: Optional[Path] = None
    fmt: str = "csv"
    verbosity: int = 0
    extra: dict[str, Any] = field(default_factory=dict)


# ------------------------------------------------------------------ compute

def expected_report(n: int, d: int, quad: QuadConfig = QuadConfig(), method: str = "auto") -> EstimateReport:
    """E(n, d) with the cheapest exact-enough route unless ``method`` forces one."""
    spec = GameSpec(n, d)
    if method == "closed-form":
        if spec.d != 2:
            raise UsageError("a closed form exists only for d = 2")
        return kostlan.e_nd(n, 2)
    if method == "quadrature":
        if n == 2:
            return density2.e2d(d, quad)
        return kostlan.e_nd_quadrature(n, d, quad)
    if spec.d == 2:
        return kostlan.e_nd(n, 2)
    if n == 2:
        return density2.e2d(d, quad)
    return kostlan.e_nd(n, d, quad)


def table_reports(n_list: Sequence[int], d_values: Sequence[int], quad: QuadConfig = QuadConfig()) -> list[EstimateReport]:
    return [expected_report(n, d, quad) for n in n_list for d in d_values]


def bounds_rows(d_min: int, d_max: int, quad: QuadConfig = QuadConfig()) -> list[dict[str, Any]]:
    rows = []
    for d in range(d_min, d_max + 1):
        lower, upper = density2.bounds_e2d(d)
        rep = density2.e2d(d, quad)
        if not lower <= rep.value <= upper:
            raise InternalError(f"sandwich violated at d={d}: {lower} <= {rep.value} <= {upper} fails")
        rows.append({"d": d, "lower": lower, "E": rep.value, "upper": upper,
                     "method": rep.method, "err_estimate": rep.err_estimate})
    return rows


def density_rows(d: int, grid: int, t_max: float) -> list[dict[str, Any]]:
    t = np.linspace(0.0, t_max, grid)
    f = np.atleast_1d(density2.density_f(density2.density_context(d), t))
    return [{"t": float(a), "f": float(b)} for a, b in zip(t, f)]


def mc_payload(n: int, d: int, samples: int, seed: int, sigma: float = 1.0, threads: int = 1) -> dict[str, Any]:
    if n == 2 and d <= MC_MAX_D:
        rep = oracle.mc_e2d(d, samples, seed, sigma, threads)
        ref = kostlan.e_nd(2, 2) if d == 2 else density2.e2d(d)
    elif d == 2 and n <= MC_MAX_N:
        rep = oracle.mc_en2(n, samples, seed, sigma, threads)
        ref = kostlan.e_nd(n, 2)
    else:
        raise UsageError(f"Monte Carlo supports n=2 with d<={MC_MAX_D} or d=2 with n<={MC_MAX_N}; got n={n}, d={d}")
    out = rep.to_dict()
    out["method"] = "monte-carlo"
    z = (rep.mean_count - ref.value) / rep.std_err if rep.std_err > 0 else float("nan")
    out["reference"] = {"value": ref.value, "method": ref.method, "err_estimate": ref.err_estimate,
                        "z_score": z}
    return out


# ------------------------------------------------------------------ output

def _format_rows(rows: list[dict[str, Any]], fmt: str) -> str:
    if fmt == "json":
        return json.dumps(rows, indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)  # floats are written with repr, so they round-trip
    return buf.getvalue()


def _emit(text: str, out: Optional[Path]) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)
        log.info("wrote %s", out)


def _report_row(rep: EstimateReport) -> dict[str, Any]:
    return {"n": rep.n, "d": rep.d, "value": rep.value, "method": rep.method,
            "err_estimate": rep.err_estimate, "evaluations": rep.evaluations}


def sidecar_path(out: Path) -> Path:
    return out.with_name(out.stem + ".full" + (out.suffix or ".csv"))


def table_display(reports: list[EstimateReport], n_list: Sequence[int], d_values: Sequence[int]) -> str:
    cells = {(r.n, r.d): r.value for r in reports}
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["n"] + [f"d={d}" for d in d_values])
    for n in n_list:
        writer.writerow([n] + [f"{cells[(n, d)]:.2f}" for d in d_values])
    return buf.getvalue()


# ------------------------------------------------------------------ commands

def cmd_expected(cfg: RunConfig) -> int:
    n, d = cfg.n_list[0], cfg.d_range[0]
    rep = expected_report(n, d, cfg.quad, cfg.method)
    if cfg.fmt == "json":
        _emit(json.dumps(rep.to_dict(), indent=2) + "\n", cfg.out)
    else:
        _emit(_format_rows([_report_row(rep)], "csv"), cfg.out)
    return EXIT_OK


def cmd_table(cfg: RunConfig) -> int:
    d_values = list(range(cfg.d_range[0], cfg.d_range[1] + 1))
    reports = table_reports(cfg.n_list, d_values, cfg.quad)
    full = _format_rows([_report_row(r) for r in reports], cfg.fmt)
    if cfg.fmt == "json":
        _emit(full, cfg.out)
        return EXIT_OK
    display = table_display(reports, cfg.n_list, d_values)
    if cfg.out is None:
        sys.stdout.write(display + "\n" + full)
    else:
        _emit(display, cfg.out)
        _emit(full, sidecar_path(cfg.out))
    return EXIT_OK


def cmd_bounds(cfg: RunConfig) -> int:
    _emit(_format_rows(bounds_rows(cfg.d_range[0], cfg.d_range[1], cfg.quad), cfg.fmt), cfg.out)
    return EXIT_OK


def cmd_density(cfg: RunConfig) -> int:
    rows = density_rows(cfg.d_range[0], cfg.extra["grid"], cfg.extra["t_max"])
    _emit(_format_rows(rows, cfg.fmt), cfg.out)
    return EXIT_OK


def cmd_mc(cfg: RunConfig) -> int:
    payload = mc_payload(cfg.n_list[0], cfg.d_range[0], cfg.samples, cfg.seed, cfg.sigma, cfg.threads)
    _emit(json.dumps(payload, indent=2) + "\n", cfg.out)
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    results = verify.run_checks(cfg.extra["level"])
    if cfg.fmt == "json":
        text = json.dumps([r.__dict__ for r in results], indent=2) + "\n"
    else:
        text = "".join(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<28} {r.seconds:7.2f}s  {r.detail}\n"
                       for r in results)
        failed = sum(not r.passed for r in results)
        text += f"{len(results) - failed}/{len(results)} checks passed\n"
    _emit(text, cfg.out)
    return EXIT_OK if all(r.passed for r in results) else EXIT_CONVERGENCE


COMMANDS = {"expected": cmd_expected, "table": cmd_table, "bounds": cmd_bounds,
            "density": cmd_density, "mc": cmd_mc, "verify": cmd_verify}


# ------------------------------------------------------------------ parsing

def _int_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, help="write to this file instead of stdout")
    common.add_argument("--format", choices=("csv", "json"), default="csv", dest="fmt")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("-v", "--verbose", action="count", default=0)

    quad = argparse.ArgumentParser(add_help=False)
    q = QuadConfig()
    quad.add_argument("--rel-tol", type=float, default=q.rel_tol, help="1D adaptive relative tolerance")
    quad.add_argument("--abs-tol", type=float, default=q.abs_tol)
    quad.add_argument("--max-depth", type=int, default=q.max_depth)
    quad.add_argument("--nodes", type=int, default=q.nodes_per_dim, help="cubature nodes per dimension")
    quad.add_argument("--verify-nodes", type=int, default=q.verify_nodes_per_dim,
                      help="coarser rule used for the cubature error estimate")
    quad.add_argument("--cubature-tol", type=float, default=q.cubature_rel_tol,
                      help="max relative gap between the two cubature levels")

    p = _Parser(prog="evoeq", description="Expected numbers of internal equilibria in random evolutionary games.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("expected", parents=[common, quad], help="E(n, d) for one game size")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--d", type=int, required=True)
    how = s.add_mutually_exclusive_group()
    how.add_argument("--closed-form", dest="method", action="store_const", const="closed-form")
    how.add_argument("--quadrature", dest="method", action="store_const", const="quadrature")

    s = sub.add_parser("table", parents=[common, quad], help="grid of E(n, d), rows n, columns d")
    s.add_argument("--n", type=_int_list, default=[2, 3, 4])
    s.add_argument("--d-min", type=int, default=2)
    s.add_argument("--d-max", type=int, required=True)

    s = sub.add_parser("bounds", parents=[common, quad], help="lower bound, E(2, d), upper bound")
    s.add_argument("--d-min", type=int, default=2)
    s.add_argument("--d-max", type=int, default=20)

    s = sub.add_parser("density", parents=[common], help="root density f(t) of two-strategy games")
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--grid", type=int, default=201)
    s.add_argument("--t-max", type=float, default=10.0)

    s = sub.add_parser("mc", parents=[common], help="Monte Carlo root counts with histogram")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--samples", type=int, default=100_000)
    s.add_argument("--seed", type=int, default=DEFAULT_SEED)
    s.add_argument("--sigma", type=float, default=1.0)

    s = sub.add_parser("verify", parents=[common], help="run the self-check suite")
    s.add_argument("level", choices=("quick", "full"), nargs="?", default="quick")
    return p


def config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(command=args.command, out=args.out, fmt=args.fmt, threads=args.threads,
                    verbosity=args.verbose)
    if cfg.threads < 1:
        raise UsageError("--threads must be >= 1")
    if hasattr(args, "rel_tol"):
        try:
            cfg.quad = QuadConfig(rel_tol=args.rel_tol, abs_tol=args.abs_tol, max_depth=args.max_depth,
                                  nodes_per_dim=args.nodes, verify_nodes_per_dim=args.verify_nodes,
                                  cubature_rel_tol=args.cubature_tol, threads=args.threads)
        except ValueError as exc:
            raise UsageError(str(exc))
    cmd = args.command
    if cmd in ("expected", "mc", "density"):
        if cmd != "density":
            cfg.n_list = [args.n]
        cfg.d_range = (args.d, args.d)
    if cmd == "expected":
        cfg.method = args.method or "auto"
    elif cmd == "table":
        cfg.n_list = args.n
        cfg.d_range = (args.d_min, args.d_max)
    elif cmd == "bounds":
        cfg.d_range = (args.d_min, args.d_max)
    elif cmd == "density":
        if args.grid < 2 or not args.t_max > 0:
            raise UsageError("--grid must be >= 2 and --t-max > 0")
        cfg.extra = {"grid": args.grid, "t_max": args.t_max}
    elif cmd == "mc":
        if args.samples < 1 or not args.sigma > 0:
            raise UsageError("--samples must be >= 1 and --sigma > 0")
        cfg.samples, cfg.seed, cfg.sigma = args.samples, args.seed, args.sigma
    elif cmd == "verify":
        cfg.extra = {"level": args.level}
    if any(n < 2 for n in cfg.n_list) or (cmd != "verify" and min(cfg.d_range) < 2):
        raise UsageError("n and d must be >= 2")
    if cfg.d_range[0] > cfg.d_range[1]:
        raise UsageError("--d-min exceeds --d-max")
    return cfg


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(message)s")
    try:
        cfg = config_from_args(args)
        return COMMANDS[cfg.command](cfg)
    except (UsageError, UnsupportedDimensionError) as exc:
        print(f"evoeq: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConvergenceError as exc:
        print(f"evoeq: did not converge: {exc} (best value {exc.value!r}, error estimate {exc.err_estimate!r})",
              file=sys.stderr)
        return EXIT_CONVERGENCE
    except InternalError as exc:
        print(f"evoeq: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
