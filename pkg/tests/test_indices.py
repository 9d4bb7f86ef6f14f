"""Dilation-ratio estimates, Matuszewska indices, and the bound fit."""

import math

import numpy as np
import pytest

from tailkit.errors import InvalidParameterError
from tailkit.indices import (
    MatuszewskaIndices,
    fit_pd_bound,
    matuszewska,
    ratio_estimate,
)
from tailkit.models import (
    DEFAULT_GRID,
    exponential,
    finite_mixture,
    lognormal,
    pareto,
    slow_log,
    truncated_uniform,
    weibull,
)


def test_pareto_ratio_exact_power():
    est = ratio_estimate(pareto(2.0), 2.0)
    assert est.upper == pytest.approx(0.25, rel=1e-12)
    assert est.lower == pytest.approx(0.25, rel=1e-12)
    assert abs(est.trend) < 1e-12


def test_factor_one_rejected():
    with pytest.raises(InvalidParameterError):
        ratio_estimate(pareto(2.0), 1.0)


def test_exponential_ratio_collapses():
    est = ratio_estimate(exponential(1.0), 2.0)
    # e^{-(v-1)x} at the window start is already far below 1e-6
    assert est.upper < 1e-6
    assert est.trend < 0


def test_b_direction_ratio_at_least_one():
    est = ratio_estimate(pareto(2.0), 0.5)
    assert est.lower == pytest.approx(4.0, rel=1e-12)
    assert est.upper == pytest.approx(4.0, rel=1e-12)


@pytest.mark.parametrize("alpha", [2.0, 2.5, 3.0])
def test_matuszewska_pareto(alpha):
    idx = matuszewska(pareto(alpha))
    assert idx.defined
    assert idx.beta == pytest.approx(alpha, abs=0.05)
    assert idx.alpha == pytest.approx(alpha, abs=0.05)
    assert idx.bound_fit is not None


def test_matuszewska_mixture_dominated_by_heavy_part():
    m = finite_mixture([pareto(2.0), pareto(4.0)], [0.5, 0.5])
    idx = matuszewska(m)
    assert idx.beta == pytest.approx(2.0, abs=0.05)
    assert idx.alpha == pytest.approx(2.0, abs=0.05)


@pytest.mark.parametrize("model", [exponential(1.0), weibull(0.5), weibull(2.0), lognormal()],
                         ids=lambda m: m.name)
def test_matuszewska_capped_infinite(model):
    idx = matuszewska(model)
    assert math.isinf(idx.beta)
    assert math.isinf(idx.alpha)


def test_matuszewska_slowly_varying():
    idx = matuszewska(slow_log())
    # ratio climbs toward 1: no positive decay exponent certified
    assert idx.beta == 0.0
    assert idx.alpha < 0.5 and math.isfinite(idx.alpha)


def test_matuszewska_undefined_for_bounded_support():
    idx = matuszewska(truncated_uniform(1.0))
    assert not idx.defined
    assert math.isnan(idx.beta)


def test_fit_pd_bound_pareto_easy_q():
    fit = fit_pd_bound(pareto(2.0), 1.5)
    assert fit is not None
    assert fit.C <= 1.0 + 1e-9
    assert fit.x0 == pytest.approx(DEFAULT_GRID.x0)


def test_fit_pd_bound_pareto_too_steep_fails():
    assert fit_pd_bound(pareto(2.0), 2.5) is None


def test_fit_pd_bound_exponential_steep_q_succeeds():
    fit = fit_pd_bound(exponential(1.0), 10.0)
    assert fit is not None
    assert fit.C <= 1e6


@pytest.mark.parametrize("model,beta", [
    (pareto(2.0), 2.0), (pareto(2.5), 2.5), (pareto(3.0), 3.0),
    (finite_mixture([pareto(2.0), pareto(4.0)], [0.5, 0.5]), 2.0),
])
def test_bound_fit_brackets_beta(model, beta):
    assert fit_pd_bound(model, 0.9 * beta) is not None
    assert fit_pd_bound(model, 1.5 * beta) is None


def test_stabilized_upper_equals_lower_and_consistent_across_v():
    """Stabilized limits: window extrema coincide and -ln(r)/ln v agrees across v."""
    for model, alpha in [(pareto(2.0), 2.0), (pareto(3.0), 3.0)]:
        exponents = []
        for v in (1.5, 2.0, 4.0):
            est = ratio_estimate(model, v)
            if abs(est.trend) < 1e-4:
                assert est.upper == pytest.approx(est.lower, rel=1e-9)
                exponents.append(-math.log(est.upper) / math.log(v))
        assert max(exponents) - min(exponents) < 0.05
        assert exponents[0] == pytest.approx(alpha, abs=0.05)
