"""Initial data generators."""

from __future__ import annotations

import math

import numpy as np

from .model import Grid, Nonlinearity, Wavefunction


def gaussian(grid: Grid, amplitude: float = 1.0, width: float = 1.0, center: float = 0.0,
             k0: float = 0.0) -> Wavefunction:
    """``amplitude * exp(-(x - center)^2 / (2 width^2) + i k0 x)``."""
    if not width > 0:
        raise ValueError(f"width must be positive: {width}")
    return Wavefunction.from_function(
        grid,
        lambda x: amplitude * np.exp(-((x - center) ** 2) / (2.0 * width**2) + 1j * k0 * x),
    )


def exp_kink(grid: Grid, amplitude: float = 1.0, kappa: float = 1.0,
             bump: float = 0.0) -> Wavefunction:
    """``amplitude * exp(-kappa |x|) * (1 + bump x^2 exp(-x^2))``.

    The bump factor is flat to second order at the origin, so the derivative
    jump ``-2 kappa amplitude`` does not depend on ``bump``.
    """
    if not kappa > 0:
        raise ValueError(f"kappa must be positive: {kappa}")
    return Wavefunction.from_function(
        grid,
        lambda x: amplitude * np.exp(-kappa * np.abs(x)) * (1.0 + bump * x**2 * np.exp(-(x**2))),
    )


def compatible_kappa(nl: Nonlinearity, amplitude: float) -> float:
    """Decay rate making ``amplitude * exp(-kappa |x|)`` satisfy the jump condition.

    The jump ``psi'(0+) - psi'(0-) = -F(psi(0))`` gives ``kappa = -u'(C^2)``;
    the standing-wave frequency is then ``kappa^2``.
    """
    kappa = -float(nl.du(float(amplitude) ** 2))
    if not kappa > 0:
        raise ValueError(
            f"no decaying standing wave for {nl.name} at amplitude {amplitude}: "
            f"-u'(C^2) = {kappa:.6g}"
        )
    return kappa


def rough(grid: Grid, seed: int = 0, exponent: float = 0.8, envelope: float = 8.0,
          charge: float = 0.5) -> Wavefunction:
    """Random-phase field with ``|hat phi(k)| ~ (1 + k^2)^(-exponent)``.

    The field lies in H^s for ``s < 2 exponent - 1/2``, so H^1 needs
    ``exponent > 3/4``; the default sits just above that.

    A Gaussian envelope ``exp(-x^2 / envelope)`` keeps the field away from
    the periodic boundary; the result is scaled to the requested charge.
    """
    if not charge > 0:
        raise ValueError(f"charge must be positive: {charge}")
    rng = np.random.default_rng(seed)
    spectrum = (1.0 + grid.k**2) ** (-exponent) * np.exp(2j * np.pi * rng.random(grid.n))
    values = np.fft.ifft(spectrum) * np.exp(-grid.x**2 / envelope)
    q = 0.5 * grid.dx * float(np.sum(np.abs(values) ** 2))
    return Wavefunction(grid, values * math.sqrt(charge / q))


def random_band_limited(grid: Grid, rng: np.random.Generator, kmax: float = 8.0,
                        envelope: float = 4.0) -> Wavefunction:
    """Smooth random field: Gaussian-weighted modes below ``kmax`` times a window."""
    k = grid.k
    coef = (rng.standard_normal(grid.n) + 1j * rng.standard_normal(grid.n)) * np.exp(
        -((k / kmax) ** 2)
    )
    values = np.fft.ifft(coef) * grid.n * np.exp(-grid.x**2 / envelope) / math.sqrt(grid.n)
    return Wavefunction(grid, values * rng.uniform(0.1, 3.0))
