import cmath
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from deltanls import Grid, Wavefunction, free_evolve, free_kernel_at, free_trace
from deltanls.initial import random_band_limited
from deltanls.propagator import FreePropagator, evaluate_spectral, origin_modes

PI4 = math.pi ** -0.25


def gaussian(grid):
    return Wavefunction.from_function(grid, lambda x: PI4 * np.exp(-x**2 / 2))


def gaussian_exact(x, t):
    # closed form of the free evolution of pi^(-1/4) exp(-x^2/2)
    s = 1 + 2j * t
    return PI4 * np.exp(-x**2 / (2 * s)) / np.sqrt(s)


def rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def test_identity_at_t0(grid):
    psi = gaussian(grid)
    assert np.max(np.abs(free_evolve(psi, 0.0).values - psi.values)) <= 1e-14


def test_constant_unchanged(small_grid):
    psi = Wavefunction(small_grid, np.full(small_grid.n, 0.3 - 2j))
    assert np.allclose(free_evolve(psi, 3.7).values, psi.values, rtol=0, atol=1e-14)


@pytest.mark.parametrize("t", [0.25, 0.5, 1.0])
def test_gaussian_oracle_at_origin(grid, t):
    psi = free_evolve(gaussian(grid), t)
    assert abs(abs(psi.at_origin) - PI4 * (1 + 4 * t * t) ** -0.25) <= 1e-6


def test_gaussian_oracle_value_at_half(grid):
    assert abs(free_evolve(gaussian(grid), 0.5).at_origin) == pytest.approx(0.6316187, abs=1e-6)


def test_gaussian_profile_and_phase(grid):
    t = 0.5
    psi = free_evolve(gaussian(grid), t)
    sel = np.abs(grid.x) <= 5
    assert np.max(np.abs(psi.values[sel] - gaussian_exact(grid.x[sel], t))) <= 1e-6


def test_multiplier_unimodular(small_grid):
    m = FreePropagator(small_grid).multiplier(0.731)
    assert np.allclose(np.abs(m), 1.0, rtol=0, atol=1e-15)


@given(st.integers(0, 2**32 - 1), st.floats(-2, 2), st.floats(-2, 2))
def test_norm_group_and_reversal(seed, s, t):
    g = Grid(10.0, 512)
    psi = random_band_limited(g, np.random.default_rng(seed))
    n0 = np.linalg.norm(psi.values)
    a = free_evolve(psi, t)
    assert abs(np.linalg.norm(a.values) - n0) <= 1e-13 * n0
    assert rel(free_evolve(free_evolve(psi, s), t).values, free_evolve(psi, s + t).values) <= 1e-12
    assert rel(free_evolve(a, -t).values, psi.values) <= 1e-12


def test_kernel_examples():
    t = 1 / (4 * math.pi)
    assert free_kernel_at(0.0, t) == pytest.approx(cmath.exp(-0.25j * math.pi), abs=1e-15)
    x = np.linspace(-5, 5, 11)
    for tt in (0.01, 0.3, 2.0):
        assert np.allclose(np.abs(free_kernel_at(x, tt)), (4 * math.pi * tt) ** -0.5, rtol=1e-14)
    with pytest.raises(ValueError):
        free_kernel_at(1.0, 0.0)
    with pytest.raises(ValueError):
        free_kernel_at(1.0, -0.5)


def test_kernel_total_mass():
    # Gaussian tail damping exp(-a x^2) changes the integral to (1 + 4 i a t)^(-1/2)
    t, a = 0.1, 1e-3
    x = np.linspace(-110, 110, 1_000_001)
    f = free_kernel_at(x, t) * np.exp(-a * x**2)
    total = np.sum(f) * (x[1] - x[0])
    assert abs(total - 1.0) <= 1e-3


def test_kernel_convolution_matches_spectral(grid):
    t = 0.3
    y = grid.x
    phi = gaussian(grid)
    direct = np.sum(free_kernel_at(0.7 - y, t) * phi.values) * grid.dx
    spectral = evaluate_spectral(free_evolve(phi, t), [0.7])[0]
    assert abs(direct - spectral) <= 1e-6


def test_free_trace_examples(grid):
    zero = Wavefunction(grid, np.zeros(grid.n))
    assert np.all(free_trace(zero, 0.0, 0.01, 20).values == 0)
    phi = gaussian(grid)
    tr = free_trace(phi, 0.0, 0.01, 101)
    assert tr.values[0] == phi.at_origin
    t = tr.times
    assert np.max(np.abs(np.abs(tr.values) - PI4 * (1 + 4 * t * t) ** -0.25)) <= 1e-6
    with pytest.raises(ValueError):
        free_trace(phi, 0.0, 0.0, 3)


def test_free_trace_matches_free_evolve(small_grid):
    psi = random_band_limited(small_grid, np.random.default_rng(3))
    tr = free_trace(psi, 0.2, 0.05, 6)
    direct = [free_evolve(psi, t).at_origin for t in tr.times]
    assert np.allclose(tr.values, direct, rtol=1e-12, atol=1e-12)


def test_free_trace_padding_matches_wider_grid(small_grid):
    psi = random_band_limited(small_grid, np.random.default_rng(4))
    tr = free_trace(psi, 0.0, 0.1, 11, pad=4)
    ref = free_trace(psi.padded(4), 0.0, 0.1, 11)
    assert np.allclose(tr.values, ref.values, rtol=0, atol=1e-13)


def test_origin_modes_reproduce_value(small_grid):
    psi = random_band_limited(small_grid, np.random.default_rng(5))
    c, q = origin_modes(psi)
    assert abs(c.sum() - psi.at_origin) <= 1e-13


def test_evaluate_spectral_interpolates(small_grid):
    psi = random_band_limited(small_grid, np.random.default_rng(6))
    idx = np.array([0, 17, 256, 300, 511])
    assert np.allclose(evaluate_spectral(psi, small_grid.x[idx]), psi.values[idx], atol=1e-12)
