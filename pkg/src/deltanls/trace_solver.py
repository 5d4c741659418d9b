"""Boundary-trace solver for the point-coupled equation.

Evaluating the Duhamel formula at ``x = 0`` gives a closed Volterra equation
for ``g(t) = psi(0, t)``::

    g(t) = f(t) + lam * int_0^t (t - s)^{-1/2} F(g(s)) ds,
    f(t) = (W_t phi)(0),   lam = i (4 pi i)^{-1/2} = exp(i pi/4) / sqrt(4 pi).

It is discretized by product integration: ``F(g)`` is interpolated linearly
between nodes and the Abel kernel is integrated exactly on each panel.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import wofz

from .model import (
    Nonlinearity,
    TraceSeries,
    Wavefunction,
    eval_F,
)
from .propagator import free_evolve, free_trace

LAMBDA_COEF = cmath.exp(0.25j * math.pi) / math.sqrt(4.0 * math.pi)

DEFAULT_PAD = 4


class TraceSolverError(RuntimeError):
    """The implicit step failed to converge or produced non-finite values."""

    def __init__(self, message: str, step: int | None = None, residual: float | None = None):
        super().__init__(message)
        self.step = step
        self.residual = residual


# {{{ Abel weights


def _panel_integrals(p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Hat-function integrals of ``(p - s)^{-1/2}`` over ``s in [0, 1]``.

    Returns the weights of the left (``s = 0``) and right (``s = 1``) panel
    ends. Both are written without cancellation: with ``a = sqrt(p)``,
    ``b = sqrt(p - 1)`` they are ``2/3 (a + 2b)/(a + b)^2`` and
    ``2/3 (2a + b)/(a + b)^2``.
    """
    a = np.sqrt(p)
    b = np.sqrt(p - 1.0)
    d = 3.0 * (a + b) ** 2
    return 2.0 * (a + 2.0 * b) / d, 2.0 * (2.0 * a + b) / d


@dataclass(frozen=True, eq=False)
class AbelWeights:
    """Product-trapezoidal weights for ``int_0^{t_n} (t_n - s)^{-1/2} phi(s) ds``.

    The weights are Toeplitz apart from the two ends, so only the panel
    tables are stored: for panel ``p`` (``sigma = t_n - s`` in
    ``[(p-1)h, p h]``) ``far[p-1]`` weighs the older node and ``near[p-1]``
    the newer one.
    """

    h: float
    m: int
    far: np.ndarray
    near: np.ndarray

    def row(self, n: int) -> np.ndarray:
        """Weights ``w_{n,j}``, ``j = 0..n``."""
        if not 0 <= n < self.m:
            raise IndexError(n)
        w = np.zeros(n + 1)
        if n == 0:
            return w
        j = np.arange(n + 1)
        w[:n] += self.far[n - j[:n] - 1]
        w[1:] += self.near[n - j[1:]]
        return math.sqrt(self.h) * w

    def matrix(self) -> np.ndarray:
        """Dense lower-triangular ``(m, m)`` weight matrix."""
        out = np.zeros((self.m, self.m))
        for n in range(self.m):
            out[n, : n + 1] = self.row(n)
        return out

    @property
    def history(self) -> np.ndarray:
        """Interior weights by lag ``q = n - j >= 1`` (excluding ``j = 0``), unscaled."""
        out = np.zeros(self.m)
        out[1 : self.m - 1] = self.far[: self.m - 2] + self.near[1 : self.m - 1]
        return out


def abel_weights(m: int, h: float) -> AbelWeights:
    """Weights for ``m`` nodes ``t_j = j h``."""
    if m < 1 or not h > 0:
        raise ValueError(f"need m >= 1 and h > 0, got m = {m}, h = {h}")
    far, near = _panel_integrals(np.arange(1, max(m, 2), dtype=np.float64))
    return AbelWeights(h, m, far, near)


# }}}


# {{{ Volterra solve


@dataclass(frozen=True, eq=False)
class TraceProblem:
    forcing: TraceSeries
    nl: Nonlinearity
    lambda_coef: complex = LAMBDA_COEF

    @property
    def h(self) -> float:
        return self.forcing.h

    @property
    def T(self) -> float:
        return self.forcing.h * (len(self.forcing) - 1)


def step_contraction(nl: Nonlinearity, h: float) -> float:
    """Contraction constant ``|lam| w_nn U2`` of the implicit step."""
    return abs(LAMBDA_COEF) * (4.0 / 3.0) * math.sqrt(h) * nl.U2


def solve_volterra(problem: TraceProblem, tol: float = 1e-14, maxiter: int = 100) -> TraceSeries:
    """Time-step the trace equation for a given forcing series."""
    f = problem.forcing.values
    h = problem.h
    nl = problem.nl
    lam = problem.lambda_coef
    q = step_contraction(nl, h)
    if not q <= 0.5:
        raise ValueError(
            f"step too large: |lam| w_nn U2 = {q:.3g} > 0.5 (truncate the "
            "nonlinearity or reduce h)"
        )

    m = f.size
    weights = abel_weights(m, h)
    kernel = weights.history
    far = weights.far
    sqh = math.sqrt(h)
    diag = lam * sqh * weights.near[0]

    g = np.empty(m, dtype=np.complex128)
    Fg = np.empty(m, dtype=np.complex128)
    g[0] = f[0]
    Fg[0] = eval_F(nl, g[0])
    du = nl.du
    for n in range(1, m):
        hist = far[n - 1] * Fg[0] + np.dot(kernel[n - 1 : 0 : -1], Fg[1:n])
        c = f[n] + lam * sqh * hist
        z = g[n - 1]
        damping = 1.0
        prev = math.inf
        for _ in range(maxiter):
            target = c - 2.0 * diag * float(du(z.real**2 + z.imag**2)) * z
            step = target - z
            res = abs(step)
            if not math.isfinite(res):
                raise TraceSolverError(f"non-finite iterate at step {n}", n, res)
            if res > prev:
                damping *= 0.5
            z = z + damping * step
            if res <= tol * max(1.0, abs(z)):
                break
            prev = res
        else:
            raise TraceSolverError(
                f"implicit step {n} did not converge (residual {res:.3e})", n, res
            )
        g[n] = z
        Fg[n] = -2.0 * float(du(z.real**2 + z.imag**2)) * z
    return TraceSeries(problem.forcing.t0, h, g)


def solve_trace(phi: Wavefunction, nl: Nonlinearity, T: float, h: float,
                pad: int = DEFAULT_PAD) -> TraceSeries:
    """Trace ``g(t_n) = psi(0, t_n)`` on ``t_n = n h <= T``."""
    if not T > 0:
        raise ValueError(f"horizon must be positive: T = {T}")
    if not 0 < h <= T / 8:
        raise ValueError(f"need 0 < h <= T/8, got h = {h}, T = {T}")
    m = int(math.floor(T / h + 1e-9)) + 1
    forcing = free_trace(phi, 0.0, h, m, pad=pad)
    return solve_volterra(TraceProblem(forcing, nl))


def contraction_time(nl: Nonlinearity) -> float:
    """``tau = 1 / (4 U2^2)``."""
    if not (nl.U2 > 0 and math.isfinite(nl.U2)):
        raise ValueError(f"contraction time needs finite positive U2, got {nl.U2}")
    return 1.0 / (4.0 * nl.U2**2)


def picard_iterate(phi: Wavefunction, nl: Nonlinearity, h: float, kmax: int,
                   pad: int = DEFAULT_PAD) -> list[tuple[TraceSeries, float]]:
    """Picard iterates of the discrete trace equation on ``[0, tau]``.

    Returns ``(g_k, d_k)`` pairs with ``d_k = max |g_{k+1} - g_k|``; the last
    pair holds the final iterate and ``nan``.
    """
    tau = contraction_time(nl)
    m = int(math.floor(tau / h + 1e-9)) + 1
    if m < 2:
        raise ValueError(f"h = {h} exceeds the contraction time {tau:.3g}")
    f = free_trace(phi, 0.0, h, m, pad=pad).values
    W = LAMBDA_COEF * abel_weights(m, h).matrix()
    g = f.copy()
    out = []
    for _ in range(kmax):
        nxt = f + W @ eval_F(nl, g)
        out.append((TraceSeries(0.0, h, g), float(np.max(np.abs(nxt - g)))))
        g = nxt
    out.append((TraceSeries(0.0, h, g), math.nan))
    return out


# }}}


# {{{ reconstruction off the origin


def kernel_moments(sigma, x) -> tuple[np.ndarray, np.ndarray]:
    """``int_0^sigma K_s(x) ds`` and ``int_0^sigma s K_s(x) ds``.

    Obtained from the heat-kernel antiderivatives continued to imaginary
    time; the complementary error function is evaluated through the
    Faddeeva function to avoid overflow of ``exp(-z^2)``.
    """
    sigma, x = np.broadcast_arrays(np.asarray(sigma, dtype=np.float64),
                                   np.asarray(x, dtype=np.float64))
    G0 = np.zeros(sigma.shape, dtype=np.complex128)
    G1 = np.zeros(sigma.shape, dtype=np.complex128)
    pos = sigma > 0
    s = sigma[pos]
    a = 0.25 * x[pos] ** 2
    ra = np.sqrt(a)
    rs = np.sqrt(s)
    eiq = cmath.exp(0.25j * math.pi)
    phase = np.exp(1j * (a / s))
    # heat antiderivative H0 at imaginary time i*sigma
    H0 = phase * (eiq * rs / math.sqrt(math.pi) - ra * wofz(eiq * ra / rs))
    H1 = (2.0 / 3.0) * (
        (eiq**3) * s * rs / math.sqrt(4.0 * math.pi) * phase - a * H0
    )
    G0[pos] = -1j * H0
    G1[pos] = -H1
    return G0, G1


def correction_weights(N: int, h: float, x) -> np.ndarray:
    """Weights ``c_j(x)`` with ``int_0^{t_N} K_{t_N - s}(x) F(s) ds ~ sum_j c_j F_j``.

    Shape ``(N + 1,) + shape(x)``; index ``j`` is the node ``t_j``.
    """
    x = np.asarray(x, dtype=np.float64)
    sig = h * np.arange(N + 1, dtype=np.float64)
    G0, G1 = kernel_moments(sig.reshape((-1,) + (1,) * x.ndim), x)
    dG0 = np.diff(G0, axis=0)
    dG1 = np.diff(G1, axis=0) / h
    p = np.arange(1, N + 1, dtype=np.float64).reshape((-1,) + (1,) * x.ndim)
    newer = p * dG0 - dG1          # node at sigma = (p-1) h, i.e. j = N - p + 1
    older = dG1 - (p - 1.0) * dG0  # node at sigma = p h, i.e. j = N - p
    w = np.zeros((N + 1,) + x.shape, dtype=np.complex128)
    w[N : 0 : -1] += newer
    w[N - 1 :: -1] += older
    return w


def _check_reconstruct(phi: Wavefunction, g: TraceSeries, t: float) -> int:
    N = g.index_of(t)
    if g.t0 != 0:
        raise ValueError("reconstruction expects a trace starting at t0 = 0")
    return N


def reconstruct(phi: Wavefunction, g: TraceSeries, nl: Nonlinearity, t: float, xs,
                pad: int = DEFAULT_PAD) -> np.ndarray:
    """``psi(x, t) = (W_t phi)(x) + i int_0^t K_{t-s}(x) F(g(s)) ds`` at points ``xs``."""
    from .propagator import evaluate_spectral

    N = _check_reconstruct(phi, g, t)
    xs = np.atleast_1d(np.asarray(xs, dtype=np.float64))
    if np.any(np.abs(xs) > phi.grid.L):
        raise ValueError("reconstruction points must lie in [-L, L]")
    free = evaluate_spectral(free_evolve(phi.padded(pad), t), xs)
    if N == 0:
        return free
    Fg = eval_F(nl, g.values[: N + 1])
    w = correction_weights(N, g.h, xs)
    return free + 1j * np.tensordot(Fg, w, axes=(0, 0))


def reconstruct_grid(phi: Wavefunction, g: TraceSeries, nl: Nonlinearity, t: float,
                     pad: int = DEFAULT_PAD, window: float | None = None) -> Wavefunction:
    """Reconstruct ``psi(., t)`` on the grid of ``phi``.

    With ``window`` set only points ``|x| <= window`` are filled; the rest
    keep the free evolution alone.
    """
    N = _check_reconstruct(phi, g, t)
    grid = phi.grid
    big = free_evolve(phi.padded(pad), t).values
    start = grid.padded(pad).origin - grid.origin
    values = big[start : start + grid.n].copy()
    if N == 0:
        return phi.with_values(values)
    Fg = eval_F(nl, g.values[: N + 1])
    ax = np.abs(grid.x)
    sel = np.ones(grid.n, bool) if window is None else ax <= window
    uniq, inv = np.unique(ax[sel], return_inverse=True)
    corr = np.empty(uniq.size, dtype=np.complex128)
    block = max(1, (1 << 22) // (N + 1))
    for s in range(0, uniq.size, block):
        w = correction_weights(N, g.h, uniq[s : s + block])
        corr[s : s + block] = Fg @ w
    values[sel] += 1j * corr[inv]
    return phi.with_values(values)


# }}}
