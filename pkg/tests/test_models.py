"""Tail model construction, evaluation invariants, and transforms."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from tailkit.errors import EmptySampleError, InvalidParameterError
from tailkit.models import (
    DEFAULT_GRID,
    AnalyticFamily,
    GridSpec,
    Support,
    clip_above,
    clip_below,
    discontinuity_gap,
    empirical_tail,
    exponential,
    finite_mixture,
    lattice,
    lognormal,
    make_family,
    pareto,
    point_mass,
    scale_tail,
    shift,
    slow_log,
    truncated_uniform,
    weibull,
)

ALL_FAMILIES = [
    pareto(2.0),
    pareto(2.5),
    pareto(3.0),
    exponential(1.0),
    weibull(0.5),
    weibull(2.0),
    lognormal(0.0, 1.0),
    finite_mixture([pareto(2.0), pareto(4.0)], [0.5, 0.5]),
    slow_log(),
    truncated_uniform(1.0),
]


# ---------------------------------------------------------------------------
# Construction and closed-form values
# ---------------------------------------------------------------------------

def test_pareto_survival_closed_form():
    f = make_family(AnalyticFamily("pareto", {"alpha": 2.0, "scale": 1.0}))
    assert f.sf(10.0) == pytest.approx(0.01)
    assert f.sf(0.5) == 1.0
    assert f.sf(1.0) == 1.0


def test_exponential_survival_at_left_edge():
    f = make_family(AnalyticFamily("exponential", {"lam": 1.0}))
    assert f.sf(0.0) == 1.0


def test_truncated_uniform_endpoint():
    f = make_family(AnalyticFamily("truncated_uniform", {"b": 1.0}))
    assert f.sf(0.5) == pytest.approx(0.5)
    assert f.sf(1.0) == 0.0
    assert f.right_endpoint == 1.0


def test_invalid_parameters_rejected():
    with pytest.raises(InvalidParameterError):
        pareto(-1.0)
    with pytest.raises(InvalidParameterError):
        weibull(0.0)
    with pytest.raises(InvalidParameterError):
        finite_mixture([pareto(2.0), pareto(3.0)], [0.7, 0.7])
    with pytest.raises(InvalidParameterError):
        make_family(AnalyticFamily("nosuch", {}))


def test_grid_spec_validation_and_horizon():
    g = GridSpec(1.0, math.sqrt(2.0), 53)
    assert g.horizon == pytest.approx(2.0 ** 26.5)
    assert len(g.points()) == 54
    assert np.all(np.diff(g.points()) > 0)
    with pytest.raises(InvalidParameterError):
        GridSpec(count=8)
    with pytest.raises(InvalidParameterError):
        GridSpec(ratio=0.9)


@pytest.mark.parametrize("model", ALL_FAMILIES, ids=lambda m: m.name)
def test_monotone_and_in_range_on_random_pairs(model):
    model.validate_grid(DEFAULT_GRID, n_pairs=1000, seed=7)


@pytest.mark.parametrize(
    "model",
    [m for m in ALL_FAMILIES if m.density_available and m.right_endpoint == np.inf],
    ids=lambda m: m.name,
)
def test_survival_matches_density_quadrature(model):
    """Independent oracle: F̄(x) via high-precision quadrature of the density.

    Families with integrable tails are checked against the full integral to
    infinity; the slowly varying family (mass beyond any numeric cutoff
    decays like 1/ln) is checked through the finite-range identity
    int_x^Y f = F̄(x) - F̄(Y).
    """
    for x in np.geomspace(model.left_edge + 0.5, 50.0, 20):
        if model.name == "slow_log":
            y_hi = 1e6
            got = quad(model.pdf, x, y_hi, limit=800, epsabs=0.0, epsrel=1e-13)[0]
            expect = model.sf(x) - model.sf(y_hi)
        else:
            expect = model.sf(x)
            mid = 10.0 * x + 100.0
            got = quad(model.pdf, x, mid, limit=800, epsabs=0.0, epsrel=1e-13)[0]
            got += quad(model.pdf, mid, np.inf, limit=800, epsabs=1e-280, epsrel=1e-13)[0]
        assert got == pytest.approx(expect, rel=1e-10)


def test_lognormal_log_sf_deep_tail():
    f = lognormal(0.0, 1.0)
    # ln Φ̄(ln 1e8) stays finite and matches the asymptotic -z²/2 - ln(z√(2π))
    z = math.log(1e8)
    expect = -0.5 * z * z - math.log(z * math.sqrt(2 * math.pi))
    assert f.log_sf(1e8) == pytest.approx(expect, abs=1e-2)


def test_weibull_log_sf_beyond_underflow():
    f = weibull(0.5)
    x = 9.5e7
    assert f.sf(x) == 0.0  # clamped
    assert f.log_sf(x) == pytest.approx(-math.sqrt(x))


def test_mixture_log_sf_matches_direct():
    m = finite_mixture([pareto(2.0), pareto(4.0)], [0.5, 0.5])
    xs = np.geomspace(1.0, 1e7, 12)
    assert np.allclose(np.exp(m.log_sf(xs)), m.sf(xs), rtol=1e-12)


# ---------------------------------------------------------------------------
# Empirical tails
# ---------------------------------------------------------------------------

def test_empirical_counting_definition():
    t = empirical_tail([1.0, 2.0, 3.0])
    assert t.sf(2.5) == pytest.approx(1.0 / 3.0)
    assert t.sf(3.0) == 0.0


def test_empirical_all_samples_exceed():
    t = empirical_tail([5.0])
    assert t.sf(4.0) == 1.0


def test_empirical_rejects_empty():
    with pytest.raises(EmptySampleError):
        empirical_tail([])


def test_empirical_pareto_binomial_error():
    rng = np.random.default_rng(11)
    n = 10**6
    samples = pareto(2.0).sf_inv(rng.random(n))
    t = empirical_tail(samples)
    # F̄(10) = 0.01 within three binomial standard errors
    se = math.sqrt(0.01 * 0.99 / n)
    assert abs(t.sf(10.0) - 0.01) < 3 * se


def test_empirical_dkw_band():
    """Sup-distance to the true Pareto(2) tail on [1, 10] below 3/sqrt(n)."""
    rng = np.random.default_rng(1234)
    n = 10**6
    truth = pareto(2.0)
    t = empirical_tail(truth.sf_inv(rng.random(n)))
    xs = np.linspace(1.0, 10.0, 2001)
    gap = np.max(np.abs(t.sf(xs) - truth.sf(xs)))
    assert gap < 3.0 / math.sqrt(n)


# ---------------------------------------------------------------------------
# Transforms
# ---------------------------------------------------------------------------

def test_shift_moves_support():
    f = shift(pareto(2.0), -1.5)
    assert f.support is Support.REAL
    assert f.sf(-0.7) == pytest.approx(1.0)
    assert f.sf(8.5) == pytest.approx(0.01)


@pytest.mark.parametrize("c", [0.5, 2.0])
def test_scale_tail_matches_min_form(c):
    f = pareto(2.0)
    g = scale_tail(f, c)
    xs = np.geomspace(1.0, 1e6, 40)
    assert np.allclose(g.sf(xs), np.minimum(1.0, c * f.sf(xs)), rtol=1e-12)
    g.validate_grid(DEFAULT_GRID, n_pairs=500, seed=3)


def test_scale_tail_small_c_has_atom():
    g = scale_tail(exponential(1.0), 0.5)
    assert any(w == pytest.approx(0.5) for _, w in g.atoms)


def test_clip_below_is_maximum_with_constant():
    g = clip_below(truncated_uniform(1.0), 0.25)
    assert g.sf(0.1) == 1.0
    assert g.sf(0.5) == pytest.approx(0.5)
    assert dict(g.atoms)[0.25] == pytest.approx(0.25)


def test_clip_above_is_minimum_with_constant():
    g = clip_above(pareto(2.0), 4.0)
    assert g.sf(4.0) == 0.0
    assert g.sf(2.0) == pytest.approx(0.25)
    assert dict(g.atoms)[4.0] == pytest.approx(pareto(2.0).sf(4.0))
    assert g.right_endpoint == 4.0


# ---------------------------------------------------------------------------
# Discontinuity gap
# ---------------------------------------------------------------------------

def test_gap_continuous_model():
    g = pareto(2.0)
    got = discontinuity_gap(g, 1.0, 100.0)
    assert got == pytest.approx(100.0**-2 - 101.0**-2, rel=1e-12)


def test_gap_point_mass_straddled():
    g = point_mass(1.0)
    # x/d < 1 <= (x+1)/d puts the whole unit mass inside the gap
    assert discontinuity_gap(g, 1.0, 0.5) == pytest.approx(1.0)


def test_gap_beyond_right_endpoint_is_zero():
    g = truncated_uniform(1.0)
    assert discontinuity_gap(g, 1.0, 5.0) == 0.0


def test_gap_rejects_nonpositive_d():
    with pytest.raises(InvalidParameterError):
        discontinuity_gap(pareto(2.0), 0.0, 1.0)


# ---------------------------------------------------------------------------
# Property tests
# ---------------------------------------------------------------------------

@settings(max_examples=60, deadline=None)
@given(
    alpha=st.floats(0.5, 6.0),
    x=st.floats(0.01, 1e6),
    y=st.floats(0.01, 1e6),
)
def test_pareto_monotone_property(alpha, x, y):
    f = pareto(alpha)
    lo, hi = min(x, y), max(x, y)
    assert f.sf(lo) >= f.sf(hi)
    assert 0.0 <= f.sf(hi) <= 1.0


@settings(max_examples=40, deadline=None)
@given(s=st.floats(1e-9, 1 - 1e-9))
def test_sf_inv_round_trip(s):
    for f in (pareto(2.0), exponential(1.0), weibull(0.5), lognormal()):
        x = f.sf_inv(s)
        assert f.sf(x) == pytest.approx(s, rel=1e-9, abs=1e-12)
