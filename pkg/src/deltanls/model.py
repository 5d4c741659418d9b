"""Domain types and the nonlinearity algebra.

Fields live on a uniform periodic grid covering ``[-L, L)`` with ``x = 0`` at
index ``n // 2``. Nonlinearities are U(1)-symmetric potentials
``U(z) = u(|z|^2)`` with force ``F(z) = -2 u'(|z|^2) z``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

RadialFunction = Callable[[np.ndarray], np.ndarray]


# {{{ grid / fields


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on ``[-L, L)`` with ``n`` points."""

    L: float
    n: int

    def __post_init__(self) -> None:
        if not (self.L > 0 and math.isfinite(self.L)):
            raise ValueError(f"domain half-width must be positive: L = {self.L}")
        n = int(self.n)
        if n != self.n or n < 8 or n & (n - 1):
            raise ValueError(f"n must be a power of two >= 8: n = {self.n}")

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.n

    @property
    def origin(self) -> int:
        """Index of the grid point ``x = 0``."""
        return self.n // 2

    @cached_property
    def x(self) -> np.ndarray:
        x = -self.L + self.dx * np.arange(self.n)
        x.setflags(write=False)
        return x

    @cached_property
    def k(self) -> np.ndarray:
        """Angular wavenumbers in FFT order, multiples of ``pi / L``."""
        k = 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.dx)
        k.setflags(write=False)
        return k

    def padded(self, factor: int) -> Grid:
        """Grid with the same spacing on a domain ``factor`` times wider."""
        return Grid(self.L * factor, self.n * factor)


@dataclass(frozen=True, eq=False)
class Wavefunction:
    """Complex samples of a field on a :class:`Grid`."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.complex128)
        if values.shape != (self.grid.n,):
            raise ValueError(
                f"expected {self.grid.n} samples, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("wavefunction samples must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable[[np.ndarray], np.ndarray]) -> Wavefunction:
        return cls(grid, fn(grid.x))

    @property
    def at_origin(self) -> complex:
        return complex(self.values[self.grid.origin])

    def with_values(self, values: np.ndarray) -> Wavefunction:
        return Wavefunction(self.grid, values)

    def padded(self, factor: int) -> Wavefunction:
        """Zero-extend onto a ``factor`` times wider grid, keeping ``x = 0``."""
        if factor == 1:
            return self
        big = self.grid.padded(factor)
        out = np.zeros(big.n, dtype=np.complex128)
        start = big.origin - self.grid.origin
        out[start : start + self.grid.n] = self.values
        return Wavefunction(big, out)


@dataclass(frozen=True, eq=False)
class TraceSeries:
    """Samples ``g(t0 + j h)`` of the boundary value ``psi(0, t)``."""

    t0: float
    h: float
    values: np.ndarray

    def __post_init__(self) -> None:
        if not self.h > 0:
            raise ValueError(f"time step must be positive: h = {self.h}")
        values = np.array(self.values, dtype=np.complex128).reshape(-1)
        if not np.all(np.isfinite(values)):
            raise ValueError("trace values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.size

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.h * np.arange(self.values.size)

    def index_of(self, t: float, rtol: float = 1e-9) -> int:
        """Index of the grid time ``t``; raises if ``t`` is off the grid."""
        s = (t - self.t0) / self.h
        j = int(round(s))
        if abs(s - j) > rtol * max(1.0, abs(s)) or not 0 <= j < len(self):
            raise ValueError(f"t = {t} is not on the trace grid")
        return j


def check_same_grid(a: Wavefunction | Mollifier, b: Wavefunction | Mollifier) -> None:
    if a.grid != b.grid:
        raise ValueError(f"grid mismatch: {a.grid} vs {b.grid}")


def gauge_rotate(psi: Wavefunction, theta: float) -> Wavefunction:
    return psi.with_values(np.exp(1j * theta) * psi.values)


# }}}


# {{{ nonlinearities


@dataclass(frozen=True, eq=False)
class Nonlinearity:
    """Radial potential ``u(r)``, ``r = |z|^2``, with its derivatives and bounds.

    ``A`` and ``B`` certify ``u(r) >= A - B r``; ``U0, U1, U2`` bound the
    magnitudes of ``U``, its gradient and its Hessian over the complex plane
    (``math.inf`` when unbounded).
    """

    name: str
    u: RadialFunction
    du: RadialFunction
    d2u: RadialFunction
    A: float
    B: float
    U0: float
    U1: float
    U2: float
    check_range: float = field(default=100.0, repr=False)

    def __post_init__(self) -> None:
        if not self.B > 0:
            raise ValueError(f"B must be positive: B = {self.B}")
        if not self.U2 > 0:
            raise ValueError(f"U2 must be positive: U2 = {self.U2}")
        r = np.linspace(0.0, self.check_range, 2001)
        if not self.satisfies_lower_bound(r):
            raise ValueError(
                f"{self.name}: u(r) >= A - B r fails on [0, {self.check_range}]"
            )

    def satisfies_lower_bound(self, r: np.ndarray, atol: float = 1e-12) -> bool:
        r = np.asarray(r, dtype=np.float64)
        return bool(np.all(self.u(r) >= self.A - self.B * r - atol * (1 + np.abs(r))))

    @property
    def is_bounded(self) -> bool:
        return math.isfinite(self.U2)


def _as_finite_complex(z) -> np.ndarray:
    z = np.asarray(z, dtype=np.complex128)
    if not np.all(np.isfinite(z)):
        raise ValueError("argument must be finite")
    return z


def eval_U(nl: Nonlinearity, z):
    """``U(z) = u(|z|^2)``; scalar in, float out."""
    z = _as_finite_complex(z)
    out = np.asarray(nl.u(np.abs(z) ** 2), dtype=np.float64)
    return float(out) if out.ndim == 0 else out


def eval_F(nl: Nonlinearity, z):
    """``F(z) = -2 u'(|z|^2) z``; scalar in, complex out."""
    z = _as_finite_complex(z)
    out = -2.0 * np.asarray(nl.du(np.abs(z) ** 2), dtype=np.float64) * z
    return complex(out) if out.ndim == 0 else out


def radial_bounds(du: RadialFunction, d2u: RadialFunction, u: RadialFunction,
                  r: np.ndarray) -> tuple[float, float, float]:
    """Sampled ``sup |U|``, ``sup |grad U|``, ``sup |Hess U|`` over radii ``r``.

    With ``U(z) = u(|z|^2)`` the Hessian has eigenvalues ``2 u'`` (angular)
    and ``2 u' + 4 r u''`` (radial); the gradient has norm ``2 |u'| sqrt(r)``.
    """
    r = np.asarray(r, dtype=np.float64)
    d1 = du(r)
    U0 = float(np.max(np.abs(u(r))))
    U1 = float(np.max(2.0 * np.abs(d1) * np.sqrt(r)))
    U2 = float(np.max(np.maximum(np.abs(2 * d1), np.abs(2 * d1 + 4 * r * d2u(r)))))
    return U0, U1, U2


def _const(c: float) -> RadialFunction:
    return lambda r: np.full_like(np.asarray(r, dtype=np.float64), c)


def defocusing_quartic(A: float = 0.0, B: float = 1.0) -> Nonlinearity:
    return Nonlinearity(
        "defocusing_quartic",
        u=lambda r: 0.5 * np.asarray(r) ** 2,
        du=lambda r: np.asarray(r, dtype=np.float64),
        d2u=_const(1.0),
        A=A, B=B, U0=math.inf, U1=math.inf, U2=math.inf,
    )


def saturated(A: float = 0.0, B: float = 1.0) -> Nonlinearity:
    # sup 2 sqrt(r)/(1+r)^2 is attained at r = 1/3; the Hessian peaks at r = 0
    return Nonlinearity(
        "saturated",
        u=lambda r: -np.asarray(r) / (1.0 + np.asarray(r)),
        du=lambda r: -1.0 / (1.0 + np.asarray(r)) ** 2,
        d2u=lambda r: 2.0 / (1.0 + np.asarray(r)) ** 3,
        A=A, B=B, U0=1.0, U1=9.0 / (8.0 * math.sqrt(3.0)), U2=2.0,
    )


def linear_delta(A: float = 0.0, B: float = 1.0) -> Nonlinearity:
    return Nonlinearity(
        "linear_delta",
        u=lambda r: -np.asarray(r, dtype=np.float64),
        du=_const(-1.0),
        d2u=_const(0.0),
        A=A, B=B, U0=math.inf, U1=math.inf, U2=2.0,
    )


def zero(A: float = 0.0, B: float = 1.0) -> Nonlinearity:
    # the Hessian vanishes; U2 = 1 is a valid (non-sharp) bound that keeps tau finite
    return Nonlinearity(
        "zero", u=_const(0.0), du=_const(0.0), d2u=_const(0.0),
        A=A, B=B, U0=0.0, U1=0.0, U2=1.0,
    )


def polynomial(coefficients, A: float = 0.0, B: float = 1.0) -> Nonlinearity:
    """``u(r) = sum_k c_k r^k``."""
    c = np.trim_zeros(np.asarray(coefficients, dtype=np.float64), "b")
    if c.size == 0:
        c = np.zeros(1)
    p = np.polynomial.Polynomial(c)
    dp, d2p = p.deriv(1), p.deriv(2)
    degree = c.size - 1
    if degree == 0:
        bounds = (abs(c[0]), 0.0, 1.0)
    elif degree == 1:
        bounds = (math.inf, math.inf, 2.0 * abs(c[1]))
    else:
        bounds = (math.inf, math.inf, math.inf)
    return Nonlinearity(
        "polynomial",
        u=lambda r: p(np.asarray(r, dtype=np.float64)),
        du=lambda r: dp(np.asarray(r, dtype=np.float64)),
        d2u=lambda r: d2p(np.asarray(r, dtype=np.float64)),
        A=A, B=B, U0=bounds[0], U1=bounds[1], U2=bounds[2],
    )


CATALOGUE: dict[str, Callable[..., Nonlinearity]] = {
    "defocusing_quartic": defocusing_quartic,
    "saturated": saturated,
    "linear_delta": linear_delta,
    "zero": zero,
}


def get_nonlinearity(name: str, **kwargs) -> Nonlinearity:
    try:
        factory = CATALOGUE[name]
    except KeyError:
        raise ValueError(
            f"unknown nonlinearity {name!r}; expected one of {sorted(CATALOGUE)}"
        ) from None
    return factory(**kwargs)


def truncate_nonlinearity(nl: Nonlinearity, lam: float) -> Nonlinearity:
    """Modify ``u`` outside ``|z| <= lam`` so that all bounds become finite.

    ``u'`` is kept on ``r <= lam^2`` and blended to zero on ``[lam^2, 4 lam^2]``
    by the cubic Hermite interpolant matching ``u'`` and ``u''`` at the left
    end and ``0, 0`` at the right, so the continued potential is ``C^2`` and
    constant for ``|z| >= 2 lam``.
    """
    if not lam > 0:
        raise ValueError(f"truncation radius must be positive: {lam}")
    r1 = lam * lam
    r2 = 4.0 * r1
    width = r2 - r1
    p0 = float(nl.du(np.float64(r1)))
    slope = float(nl.d2u(np.float64(r1))) * width
    u1 = float(nl.u(np.float64(r1)))

    def blend(r):
        return np.clip((r - r1) / width, 0.0, 1.0)

    def du(r):
        r = np.asarray(r, dtype=np.float64)
        s = blend(r)
        inner = p0 * (2 * s**3 - 3 * s**2 + 1) + slope * (s**3 - 2 * s**2 + s)
        return np.where(r <= r1, nl.du(np.minimum(r, r1)), inner)

    def d2u(r):
        r = np.asarray(r, dtype=np.float64)
        s = blend(r)
        inner = (p0 * (6 * s**2 - 6 * s) + slope * (3 * s**2 - 4 * s + 1)) / width
        return np.where(r <= r1, nl.d2u(np.minimum(r, r1)), inner)

    def u(r):
        r = np.asarray(r, dtype=np.float64)
        s = blend(r)
        integral = width * (
            p0 * (s**4 / 2 - s**3 + s) + slope * (s**4 / 4 - 2 * s**3 / 3 + s**2 / 2)
        )
        return np.where(r <= r1, nl.u(np.minimum(r, r1)), u1 + integral)

    U0, U1, U2 = radial_bounds(du, d2u, u, np.linspace(0.0, r2, 20001))
    return Nonlinearity(
        f"{nl.name}|trunc({lam:g})",
        u=u, du=du, d2u=d2u, A=nl.A, B=nl.B,
        U0=U0, U1=U1, U2=U2 if U2 > 0 else 1.0,
        check_range=100.0 * r1,
    )


# }}}


# {{{ mollifier


def _bump(x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - x[inside] ** 2))
    return out


@dataclass(frozen=True, eq=False)
class Mollifier:
    """Grid samples of ``rho_eps(x) = rho_1(x / eps) / eps``, unit discrete mass."""

    epsilon: float
    grid: Grid
    samples: np.ndarray
    c_eps: float
    h1_norm: float


def h1_norm_squared(grid: Grid, values: np.ndarray) -> float:
    """``||f||^2 + ||f'||^2`` computed spectrally."""
    fhat = np.fft.fft(values)
    return float(grid.dx / grid.n * np.sum((1.0 + grid.k**2) * np.abs(fhat) ** 2))


def make_mollifier(epsilon: float, grid: Grid) -> Mollifier:
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1): {epsilon}")
    if epsilon < 4.0 * grid.dx:
        raise ValueError(
            f"mollifier under-resolved: epsilon = {epsilon} < 4 dx = {4 * grid.dx}"
        )
    samples = _bump(grid.x / epsilon) / epsilon
    samples /= grid.dx * samples.sum()
    samples.setflags(write=False)
    c_eps = float(grid.dx * np.sum(samples**2))
    return Mollifier(
        epsilon, grid, samples, c_eps, math.sqrt(h1_norm_squared(grid, samples))
    )


def mean_field(rho: Mollifier, psi: Wavefunction) -> complex:
    """``<rho_eps, psi> = dx * sum(rho * psi)`` (no conjugation)."""
    check_same_grid(rho, psi)
    return complex(rho.grid.dx * np.dot(rho.samples, psi.values))


# }}}
