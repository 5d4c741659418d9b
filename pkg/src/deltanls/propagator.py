"""Free Schroedinger group ``W_t`` for ``i psi_t = -psi_xx``.

Mode ``k`` is multiplied by ``exp(-i k^2 t)``; the matching whole-line kernel
is ``K_t(x) = (4 pi i t)^{-1/2} exp(i x^2 / (4 t))``.
"""

from __future__ import annotations

import cmath
import math
from functools import lru_cache

import numpy as np

from .model import Grid, TraceSeries, Wavefunction

# elements per block when tabulating exp(-i k^2 t) over many times
_BLOCK = 1 << 21


class FreePropagator:
    """Spectral free evolution on one grid. Immutable after construction."""

    def __init__(self, grid: Grid):
        self.grid = grid
        self._k2 = grid.k**2
        self._k2.setflags(write=False)

    def multiplier(self, t: float) -> np.ndarray:
        return np.exp(-1j * self._k2 * t)

    def evolve_values(self, values: np.ndarray, t: float) -> np.ndarray:
        if t == 0:
            return np.array(values, dtype=np.complex128)
        return np.fft.ifft(np.fft.fft(values) * self.multiplier(t))

    def evolve(self, psi: Wavefunction, t: float) -> Wavefunction:
        return psi.with_values(self.evolve_values(psi.values, t))


@lru_cache(maxsize=32)
def propagator_for(grid: Grid) -> FreePropagator:
    return FreePropagator(grid)


def free_evolve(psi: Wavefunction, t: float) -> Wavefunction:
    return propagator_for(psi.grid).evolve(psi, t)


def free_kernel_at(x, t: float):
    """Whole-line kernel ``K_t(x)``; ``t`` must be positive."""
    if not t > 0:
        raise ValueError(f"kernel needs t > 0, got {t}")
    pref = cmath.exp(-0.25j * math.pi) / math.sqrt(4.0 * math.pi * t)
    out = pref * np.exp(1j * np.asarray(x, dtype=np.float64) ** 2 / (4.0 * t))
    return complex(out) if np.ndim(out) == 0 else out


def origin_modes(psi: Wavefunction) -> tuple[np.ndarray, np.ndarray]:
    """Coefficients ``c`` and squared wavenumbers ``q`` with
    ``(W_t psi)(0) = sum(c * exp(-i q t))``.

    Modes ``+k`` and ``-k`` share ``k^2`` and are merged.
    """
    grid = psi.grid
    n = grid.n
    # x = 0 sits at index n/2, so exp(i k x_{n/2}) contributes (-1)^j
    c = np.fft.fft(psi.values) / n
    c[1::2] *= -1.0
    half = n // 2
    merged = np.empty(half + 1, dtype=np.complex128)
    merged[0] = c[0]
    merged[1:half] = c[1:half] + c[n - 1 : half : -1]
    merged[half] = c[half]
    q = grid.k[: half + 1] ** 2
    q[half] = (math.pi / grid.dx) ** 2
    return merged, q


def free_trace(phi: Wavefunction, t0: float, h: float, m: int, pad: int = 1) -> TraceSeries:
    """Sample ``(W_t phi)(0)`` at ``t = t0 + j h``, ``j = 0..m-1``.

    ``pad > 1`` evaluates on the zero-extended domain ``pad`` times wider,
    which delays periodic wrap-around of fast radiation.
    """
    if not h > 0:
        raise ValueError(f"time step must be positive: h = {h}")
    c, q = origin_modes(phi.padded(pad))
    t = t0 + h * np.arange(m)
    out = np.empty(m, dtype=np.complex128)
    rows = max(1, _BLOCK // q.size)
    for s in range(0, m, rows):
        phase = np.exp(-1j * np.outer(t[s : s + rows], q))
        out[s : s + rows] = phase @ c
    if m and t0 == 0:
        out[0] = phi.at_origin
    return TraceSeries(t0, h, out)


def evaluate_spectral(psi: Wavefunction, xs) -> np.ndarray:
    """Evaluate the trigonometric interpolant of ``psi`` at arbitrary points."""
    grid = psi.grid
    xs = np.atleast_1d(np.asarray(xs, dtype=np.float64))
    c = np.fft.fft(psi.values) / grid.n
    n = grid.n
    # symmetric treatment of the Nyquist mode keeps real data real
    k = grid.k
    nyq = c[n // 2] / 2
    c[n // 2] = nyq
    phase = np.exp(1j * np.outer(xs + grid.L, k))
    extra = nyq * np.exp(-1j * (xs + grid.L) * k[n // 2])
    return phase @ c + extra
