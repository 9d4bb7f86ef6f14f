"""Quadrature engine against closed-form and scipy oracles."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from tailkit.quadrature import LogLogTable, cumulative_until, integrate


def test_polynomial_exact():
    got = integrate(lambda x: 3.0 * x**2, 0.0, 2.0)
    assert got == pytest.approx(8.0, rel=1e-12)


def test_exponential_tail():
    got = integrate(np.exp, -50.0, 0.0)
    assert got == pytest.approx(1.0, rel=1e-10)


def test_integrable_singularity():
    # 1/sqrt(x) on (0, 1]: geometric ladder must handle the endpoint blow-up
    got = integrate(lambda x: 1.0 / np.sqrt(np.maximum(x, 1e-320)), 0.0, 1.0)
    assert got == pytest.approx(2.0, rel=1e-7)


def test_breakpoint_kink():
    fn = lambda x: np.where(x < 1.0, x, 2.0 - x)
    got = integrate(fn, 0.0, 2.0, breakpoints=[1.0])
    assert got == pytest.approx(1.0, rel=1e-12)


def test_wide_dynamic_range_matches_scipy():
    # Pareto(2) * Pareto(2) convolution integrand at x = 1e4
    x = 1e4
    fn = lambda y: np.minimum(1.0, (x - y) ** -2.0) * 2.0 * y**-3.0
    got = integrate(fn, 1.0, x - 1.0, breakpoints=[x - 1.0])
    ref, err = quad(fn, 1.0, x - 1.0, limit=500, epsabs=0.0, epsrel=1e-11)
    assert got == pytest.approx(ref, rel=1e-7)


def test_cumulative_until_crossing():
    edges = np.geomspace(1.0, 1e8, 55)
    crossed, value, partials = cumulative_until(lambda y: np.exp(0.5 * y), edges, 1e6)
    assert crossed and value > 1e6
    assert len(partials) < 54  # stopped early, long before overflow


def test_cumulative_until_convergent():
    edges = np.geomspace(1.0, 1e8, 55)
    crossed, value, _ = cumulative_until(lambda y: np.exp(-0.5 * y) * 0.5, edges, 1e6)
    assert not crossed
    # integral of 0.5*exp(-0.5 y) over [1, inf) = exp(-0.5)
    assert value == pytest.approx(math.exp(-0.5), rel=1e-4)


def test_log_log_table_accuracy():
    fn = lambda x: np.asarray(x, dtype=float) ** -2.5
    tab = LogLogTable(fn, 1.0, 1e8)
    xs = np.geomspace(1.3, 7e7, 200)
    assert np.allclose(tab(xs), fn(xs), rtol=1e-7)
    # out of range falls through to the raw callable
    assert tab(0.5) == pytest.approx(0.5**-2.5)
