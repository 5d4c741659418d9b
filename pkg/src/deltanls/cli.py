"""Command line entry point: ``deltanls <subcommand> CONFIG [options]``.

Exit codes: 0 success, 1 solver error, 2 configuration or usage error.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, build_initial, build_nonlinearity, load_config
from .diagnostics import (
    charge,
    convergence_study,
    energy_point,
    holder_exponent,
    record,
)
from .io import (
    atomic_write,
    format_float,
    provenance,
    write_diag_csv,
    write_snapshot,
    write_table_csv,
    write_trace_csv,
)
from .mollified import solve_mollified, tau_epsilon
from .trace_solver import (
    TraceSolverError,
    contraction_time,
    picard_iterate,
    reconstruct_grid,
    solve_trace,
)

EXIT_OK, EXIT_SOLVER, EXIT_CONFIG = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError([f"usage: {message}"])


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="deltanls", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"deltanls {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    def add(name: str, help: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help)
        p.add_argument("config", help="INI run configuration")
        p.add_argument("--out", help="output directory (overrides output.dir)")
        p.add_argument("--seed", type=int, help="seed for randomized initial data")
        return p

    add("trace", "solve the boundary-trace equation and reconstruct snapshots")
    p = add("mollified", "run the mollified split-step solver")
    p.add_argument("--epsilon", type=float, help="mollifier width (default: smallest study epsilon)")
    add("compare", "epsilon sweep against the trace solution")
    add("conserve", "charge and energy drift of both solvers")
    p = add("picard", "Picard iterates on the contraction interval")
    p.add_argument("--kmax", type=int, default=8)
    add("holder", "Hoelder exponent of the boundary trace")
    add("check-config", "validate a configuration and exit")
    return parser


# {{{ subcommands


class _Context:
    def __init__(self, cfg: RunConfig, args):
        self.cfg = cfg
        self.phi = build_initial(cfg, seed=args.seed)
        self.nl = build_nonlinearity(cfg, self.phi)
        self.out = Path(args.out if args.out else cfg.output.dir)
        if not self.out.is_absolute() and not args.out and cfg.source:
            self.out = Path(cfg.source).parent / self.out
        self.written: list[Path] = []

    @property
    def csv(self) -> bool:
        return "csv" in self.cfg.output.formats

    @property
    def snapshots(self) -> bool:
        return "snapshot" in self.cfg.output.formats

    def write(self, path: Path) -> None:
        self.written.append(path)


def _snapshot_times(cfg: RunConfig) -> list[float]:
    times = sorted(set(cfg.time.snapshot_times) | {cfg.time.T})
    return times


def cmd_trace(ctx: _Context) -> str:
    cfg = ctx.cfg
    g = solve_trace(ctx.phi, ctx.nl, cfg.time.T, cfg.time.h)
    records = []
    for t in _snapshot_times(cfg):
        psi = reconstruct_grid(ctx.phi, g, ctx.nl, t)
        records.append(record(psi, t, ctx.nl))
        if ctx.snapshots:
            ctx.write(write_snapshot(psi, t, ctx.out / f"trace_t{t:g}.dnls"))
    if ctx.csv:
        ctx.write(write_trace_csv(g, ctx.out / "trace.csv", cfg.sha256))
        ctx.write(write_diag_csv(records, ctx.out / "trace_diagnostics.csv", cfg.sha256))
    return f"trace: {len(g)} steps, |g(T)| = {abs(g.values[-1]):.6g}"


def cmd_mollified(ctx: _Context, epsilon: float | None) -> str:
    cfg = ctx.cfg
    eps = epsilon if epsilon is not None else min(cfg.study.epsilons, default=0.05)
    run = solve_mollified(ctx.phi, eps, ctx.nl, cfg.time.T, cfg.time.h,
                          snapshot_times=cfg.time.snapshot_times,
                          record_every=max(1, int(round(0.01 / cfg.time.h))))
    if ctx.csv:
        ctx.write(write_diag_csv(run.diagnostics, ctx.out / f"mollified_eps{eps:g}.csv", cfg.sha256))
    if ctx.snapshots:
        for t, psi in sorted(run.snapshots.items()):
            ctx.write(write_snapshot(psi, t, ctx.out / f"mollified_eps{eps:g}_t{t:g}.dnls"))
    d = run.diagnostics
    return (f"mollified: eps = {eps:g}, tau_eps = {tau_epsilon(ctx.nl, run.rho):.4g}, "
            f"Q drift = {abs(d[-1].Q - d[0].Q) / d[0].Q:.3e}, flagged = {len(run.flagged)}")


def _study_tau(ctx: _Context) -> float:
    h = ctx.cfg.time.h
    tau = ctx.cfg.study.tau if ctx.cfg.study.tau is not None else contraction_time(ctx.nl)
    steps = int(math.floor(tau / h + 1e-9))
    if steps < 8:
        raise ValueError(f"tau = {tau:.4g} spans fewer than 8 steps of h = {h}")
    return steps * h


def cmd_compare(ctx: _Context) -> str:
    cfg = ctx.cfg
    tau = _study_tau(ctx)
    steps = int(round(tau / cfg.time.h))
    table = convergence_study(ctx.phi, ctx.nl, cfg.study.epsilons, cfg.study.R, tau, cfg.time.h,
                              record_every=max(1, steps // 40))
    if ctx.csv:
        ctx.write(write_table_csv(table, ctx.out / "convergence.csv", cfg.sha256))
    d = table.distances
    return (f"compare: tau = {tau:.4g}, distances = [{', '.join(f'{x:.3e}' for x in d)}], "
            f"monotone = {table.is_monotone()}, reduction = {table.reduction:.3f}")


def cmd_conserve(ctx: _Context) -> str:
    cfg = ctx.cfg
    T, h = cfg.time.T, cfg.time.h
    g = solve_trace(ctx.phi, ctx.nl, T, h)
    mid = round(T / (2 * h)) * h  # midpoint snapped to the step grid
    recs = [record(reconstruct_grid(ctx.phi, g, ctx.nl, t), t, ctx.nl) for t in (0.0, mid, T)]
    eps = min(cfg.study.epsilons, default=0.05)
    run = solve_mollified(ctx.phi, eps, ctx.nl, T, h, record_every=max(1, int(round(0.01 / h))))
    if ctx.csv:
        ctx.write(write_diag_csv(recs, ctx.out / "conserve_trace.csv", cfg.sha256))
        ctx.write(write_diag_csv(run.diagnostics, ctx.out / "conserve_mollified.csv", cfg.sha256))

    def drift(rs, attr):
        v = np.array([getattr(r, attr) for r in rs])
        return float(np.max(np.abs(v - v[0])) / max(abs(v[0]), 1e-300))

    return (f"conserve: trace dQ = {drift(recs, 'Q'):.3e}, dH = {drift(recs, 'H'):.3e}; "
            f"mollified(eps = {eps:g}) dQ = {drift(run.diagnostics, 'Q'):.3e}, "
            f"dH = {drift(run.diagnostics, 'H'):.3e}")


def cmd_picard(ctx: _Context, kmax: int) -> str:
    if kmax < 2:
        raise ConfigError([f"--kmax: need at least 2 iterates, got {kmax}"])
    its = picard_iterate(ctx.phi, ctx.nl, ctx.cfg.time.h, kmax)
    d = [dk for _, dk in its[:-1]]
    ratios = [b / a if a > 0 else 0.0 for a, b in zip(d, d[1:])]
    if ctx.csv:
        lines = [provenance(ctx.cfg.sha256), "k,distance,ratio"]
        for k, dk in enumerate(d):
            ratio = format_float(ratios[k - 1]) if k else ""
            lines.append(f"{k},{format_float(dk)},{ratio}")
        path = ctx.out / "picard.csv"
        ctx.write(atomic_write(path, ("\n".join(lines) + "\n").encode("ascii")))
    return (f"picard: tau = {contraction_time(ctx.nl):.4g}, "
            f"max ratio = {max(ratios, default=0.0):.3f}")


def cmd_holder(ctx: _Context) -> str:
    g = solve_trace(ctx.phi, ctx.nl, ctx.cfg.time.T, ctx.cfg.time.h)
    est = holder_exponent(g)
    if ctx.csv:
        ctx.write(write_trace_csv(g, ctx.out / "trace.csv", ctx.cfg.sha256))
    tag = " (degenerate)" if est.degenerate else ""
    return f"holder: alpha = {est.alpha:.4f}{tag}"


def cmd_check(ctx: _Context) -> str:
    c = ctx.cfg
    return (f"config ok: L = {c.domain.L:g}, n = {c.domain.n}, T = {c.time.T:g}, h = {c.time.h:g}, "
            f"nonlinearity = {ctx.nl.name}, Q(phi) = {charge(ctx.phi):.6g}, "
            f"H(phi) = {energy_point(ctx.phi, ctx.nl):.6g}")


# }}}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = load_config(args.config)
        ctx = _Context(cfg, args)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.command == "trace":
            summary = cmd_trace(ctx)
        elif args.command == "mollified":
            summary = cmd_mollified(ctx, args.epsilon)
        elif args.command == "compare":
            summary = cmd_compare(ctx)
        elif args.command == "conserve":
            summary = cmd_conserve(ctx)
        elif args.command == "picard":
            summary = cmd_picard(ctx, args.kmax)
        elif args.command == "holder":
            summary = cmd_holder(ctx)
        else:
            summary = cmd_check(ctx)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (TraceSolverError, FloatingPointError, ValueError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER

    print(summary)
    for path in ctx.written:
        print(f"  wrote {path}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
