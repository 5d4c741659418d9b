"""Conserved functionals, a priori bounds and the verification studies."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .model import (
    Mollifier,
    Nonlinearity,
    TraceSeries,
    Wavefunction,
    check_same_grid,
    eval_U,
    h1_norm_squared,
    mean_field,
)

BOUNDARY_MASS_LIMIT = 1e-6


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    Q: float
    H: float
    h1: float
    boundary_mass: float
    kind: str = "point"
    flags: tuple[str, ...] = ()


# {{{ functionals


def charge(psi: Wavefunction) -> float:
    """``Q = 1/2 int |psi|^2`` (rectangle rule, exact for periodic trig data)."""
    return 0.5 * psi.grid.dx * float(np.sum(np.abs(psi.values) ** 2))


def gradient_norm_squared(psi: Wavefunction) -> float:
    grid = psi.grid
    fhat = np.fft.fft(psi.values)
    return float(grid.dx / grid.n * np.sum(grid.k**2 * np.abs(fhat) ** 2))


def h1_norm(psi: Wavefunction) -> float:
    return math.sqrt(h1_norm_squared(psi.grid, psi.values))


def energy_point(psi: Wavefunction, nl: Nonlinearity) -> float:
    """``1/2 ||psi'||^2 + U(psi(0))``."""
    return 0.5 * gradient_norm_squared(psi) + eval_U(nl, psi.at_origin)


def energy_mollified(psi: Wavefunction, rho: Mollifier, nl: Nonlinearity) -> float:
    """``1/2 ||psi'||^2 + U(<rho_eps, psi>)``."""
    return 0.5 * gradient_norm_squared(psi) + eval_U(nl, mean_field(rho, psi))


def boundary_mass(psi: Wavefunction) -> float:
    """Fraction of the charge within ``L/4`` of the periodic boundary."""
    grid = psi.grid
    dens = np.abs(psi.values) ** 2
    total = float(np.sum(dens))
    if total == 0:
        return 0.0
    edge = np.abs(grid.x) >= 0.75 * grid.L
    return float(np.sum(dens[edge])) / total


def lambda_bound(nl: Nonlinearity, Q: float, H: float) -> float:
    """H^1 ceiling ``sqrt((8 B^2 + 2) Q + 4 H - 4 A)``."""
    radicand = (8.0 * nl.B**2 + 2.0) * Q + 4.0 * H - 4.0 * nl.A
    if radicand < 0:
        raise ValueError(f"inconsistent (Q,H,A,B): radicand {radicand:.6g} < 0")
    return math.sqrt(radicand)


def sobolev_check(psi: Wavefunction, B: float) -> tuple[float, float, bool]:
    """Compare ``B |psi(0)|^2`` with ``B^2 ||psi||^2 + ||psi'||^2 / 4``."""
    if not B > 0:
        raise ValueError(f"B must be positive: {B}")
    lhs = B * abs(psi.at_origin) ** 2
    rhs = B * B * 2.0 * charge(psi) + 0.25 * gradient_norm_squared(psi)
    return lhs, rhs, lhs <= rhs * (1.0 + 1e-10)


def uniform_distance(a: Wavefunction, b: Wavefunction, R: float) -> float:
    """``max |a - b|`` over grid points with ``|x| <= R``."""
    check_same_grid(a, b)
    if not R < a.grid.L:
        raise ValueError(f"window R = {R} must be smaller than L = {a.grid.L}")
    sel = np.abs(a.grid.x) <= R
    return float(np.max(np.abs(a.values[sel] - b.values[sel])))


def record(psi: Wavefunction, t: float, nl: Nonlinearity, rho: Mollifier | None = None,
           ceiling: float | None = None) -> DiagnosticsRecord:
    """Evaluate every functional at one time and flag violated guards."""
    if rho is None:
        H, kind = energy_point(psi, nl), "point"
    else:
        H, kind = energy_mollified(psi, rho, nl), "mollified"
    h1 = h1_norm(psi)
    bm = boundary_mass(psi)
    flags = []
    if ceiling is not None and h1 > ceiling * (1.0 + 1e-6):
        flags.append("h1_bound")
    if bm > BOUNDARY_MASS_LIMIT:
        flags.append("boundary_mass")
    return DiagnosticsRecord(t, charge(psi), H, h1, bm, kind, tuple(flags))


# }}}


# {{{ epsilon -> 0 study


@dataclass(frozen=True)
class ConvergenceRow:
    epsilon: float
    sup_distance: float
    R: float
    tau: float


@dataclass(frozen=True)
class ConvergenceTable:
    rows: tuple[ConvergenceRow, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        eps = [r.epsilon for r in self.rows]
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ValueError(f"epsilons must be strictly decreasing: {eps}")

    @property
    def distances(self) -> np.ndarray:
        return np.array([r.sup_distance for r in self.rows])

    def is_monotone(self, slack: float = 0.1) -> bool:
        d = self.distances
        return bool(np.all(d[1:] <= d[:-1] * (1.0 + slack)))

    @property
    def reduction(self) -> float:
        """Last-row over first-row distance."""
        d = self.distances
        return float(d[-1] / d[0]) if d[0] > 0 else 0.0


def convergence_study(phi: Wavefunction, nl: Nonlinearity, epsilons, R: float, tau: float,
                      h: float, record_every: int = 1, pad: int | None = None) -> ConvergenceTable:
    """Distance between mollified runs and the point-coupled reference.

    The reference is the trace solution reconstructed on ``|x| <= R``; both
    are compared at every ``record_every``-th step up to ``tau``.
    """
    from .mollified import solve_mollified
    from .trace_solver import DEFAULT_PAD, contraction_time, reconstruct_grid, solve_trace

    pad = DEFAULT_PAD if pad is None else pad
    epsilons = [float(e) for e in epsilons]
    if any(b >= a for a, b in zip(epsilons, epsilons[1:])):
        raise ValueError(f"epsilons must be strictly decreasing: {epsilons}")
    if tau > contraction_time(nl) * (1 + 1e-12):
        raise ValueError(f"tau = {tau} exceeds 1/(4 U2^2) = {contraction_time(nl):.4g}")
    nsteps = int(round(tau / h))
    if abs(nsteps * h - tau) > 1e-9 * tau:
        raise ValueError("tau must be a multiple of h")
    steps = list(range(record_every, nsteps + 1, record_every))
    times = [j * h for j in steps]

    g = solve_trace(phi, nl, tau, h, pad=pad)
    refs = [reconstruct_grid(phi, g, nl, t, pad=pad, window=R) for t in times]

    rows = []
    for eps in epsilons:
        run = solve_mollified(phi, eps, nl, tau, h, snapshot_times=times)
        dist = max(uniform_distance(run.snapshots[t], ref, R) for t, ref in zip(times, refs))
        rows.append(ConvergenceRow(eps, dist, R, tau))
    return ConvergenceTable(tuple(rows))


# }}}


# {{{ Hoelder exponent


class HolderEstimate(NamedTuple):
    alpha: float
    degenerate: bool
    lags: np.ndarray
    increments: np.ndarray


def holder_exponent(g: TraceSeries, lags=(1, 2, 4, 8, 16)) -> HolderEstimate:
    """Fit ``max_n |g(t_{n+l}) - g(t_n)| ~ C (l h)^alpha`` over dyadic lags."""
    lags = np.asarray(sorted(int(l) for l in lags))
    if lags.size < 4 or lags[0] < 1 or lags[-1] >= len(g):
        raise ValueError(f"need >= 4 lags inside a series of length {len(g)}")
    v = g.values
    inc = np.array([np.max(np.abs(v[l:] - v[:-l])) for l in lags])
    scale = np.max(np.abs(v)) if v.size else 0.0
    if np.any(inc <= 1e-14 * max(scale, 1e-300)):
        return HolderEstimate(1.5, True, lags, inc)
    slope = np.polyfit(np.log(lags * g.h), np.log(inc), 1)[0]
    return HolderEstimate(float(np.clip(slope, 0.0, 1.5)), False, lags, inc)


# }}}
