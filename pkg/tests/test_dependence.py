"""Joint models, factorization limits, samplers, and MC diagnostics."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tailkit.dependence import (
    comonotone,
    conditional_ratio_diag,
    fgm,
    independent,
    sai_limit,
    spearman_rho,
)
from tailkit.errors import InvalidParameterError
from tailkit.models import exponential, pareto

P2, P3 = pareto(2.0), pareto(3.0)


# ---------------------------------------------------------------------------
# Joint exceedance closed forms
# ---------------------------------------------------------------------------

def test_independent_factorizes_exactly():
    j = independent(P2, P3)
    xs = np.geomspace(1.0, 1e5, 30)
    assert np.allclose(j.joint_sf(xs, xs), P2.sf(xs) * P3.sf(xs), rtol=1e-14)


def test_fgm_limits_to_one_plus_theta():
    j = fgm(P2, P2, theta=0.5)
    x = 1e4
    got = j.joint_sf(x, x) / (P2.sf(x) ** 2)
    assert got == pytest.approx(1.5, abs=1e-6)


def test_unknown_coupling_rejected():
    from tailkit.dependence import JointTailModel

    with pytest.raises(InvalidParameterError):
        JointTailModel(P2, P3, "gauss")
    with pytest.raises(InvalidParameterError):
        JointTailModel(P2, P3, "fgm", theta=2.0)


def test_fgm_theta_minus_one_flagged():
    j = fgm(P2, P2, theta=-1.0)
    assert "sai-constant-zero" in j.flags
    assert j.sai_constant == 0.0


@settings(max_examples=80, deadline=None)
@given(
    x=st.floats(0.5, 1e6),
    y=st.floats(0.5, 1e6),
    theta=st.floats(-1.0, 1.0),
)
def test_frechet_bound_property(x, y, theta):
    for j in (independent(P2, P3), fgm(P2, P3, theta), comonotone(P2, P3)):
        upper = min(P2.sf(x), P3.sf(y))
        assert j.joint_sf(x, y) <= upper + 1e-12


def test_frechet_bound_random_grid():
    rng = np.random.default_rng(5)
    xs = np.exp(rng.uniform(0, 14, 10_000))
    ys = np.exp(rng.uniform(0, 14, 10_000))
    for j in (independent(P2, P3), fgm(P2, P3, 0.7), comonotone(P2, P3)):
        assert np.all(j.joint_sf(xs, ys) <= np.minimum(P2.sf(xs), P3.sf(ys)) + 1e-12)


# ---------------------------------------------------------------------------
# Factorization limit estimates
# ---------------------------------------------------------------------------

def test_sai_limit_independent_exact_one():
    est = sai_limit(independent(P2, P3))
    assert est.value == 1.0
    assert not est.no_limit


def test_sai_limit_fgm_matches_constant():
    est = sai_limit(fgm(P2, P3, theta=0.5))
    assert est.value == pytest.approx(1.5, rel=0.01)
    assert est.expected == 1.5


def test_sai_limit_comonotone_reports_no_limit():
    est = sai_limit(comonotone(P2, P2))
    assert est.no_limit
    assert "no-limit" in est.flags


# ---------------------------------------------------------------------------
# Samplers
# ---------------------------------------------------------------------------

def test_sampler_deterministic_given_seed():
    j = fgm(P2, P3, theta=0.5)
    a = j.sample(1000, 42)
    b = j.sample(1000, 42)
    assert np.array_equal(a, b)
    c = j.sample(1000, 43)
    assert not np.array_equal(a, c)


def test_independent_exponential_pair_empirical_level():
    j = independent(exponential(1.0), exponential(1.0))
    n = 10**6
    draws = j.sample(n, 11)
    level = float(np.mean((draws[:, 0] > 2.0) & (draws[:, 1] > 2.0)))
    p = np.exp(-4.0)
    se = np.sqrt(p * (1 - p) / n)
    assert abs(level - p) < 3 * se


def test_empirical_joint_tail_matches_analytic_deep():
    j = fgm(P2, P2, theta=0.5)
    n = 10**6
    draws = j.sample(n, 99)
    x = y = 3.0   # joint level ~ 1.5e-4
    emp = float(np.mean((draws[:, 0] > x) & (draws[:, 1] > y)))
    p = j.joint_sf(x, y)
    se = np.sqrt(p * (1 - p) / n)
    assert abs(emp - p) < 4 * se


@pytest.mark.parametrize("theta", [-1.0, -0.5, 0.5, 1.0])
def test_fgm_spearman_sign_and_magnitude(theta):
    """FGM Spearman rho is theta/3: inside [theta/4, theta/2] in magnitude."""
    j = fgm(exponential(1.0), exponential(1.0), theta)
    rho = spearman_rho(j.sample(10**6, 7))
    assert np.sign(rho) == np.sign(theta)
    assert abs(theta) / 4 <= abs(rho) <= abs(theta) / 2


def test_fgm_minus_one_sai_ratio_near_zero():
    j = fgm(P2, P2, theta=-1.0)
    est = sai_limit(j)
    assert est.value < 0.05
    assert "sai-constant-zero" in est.flags


# ---------------------------------------------------------------------------
# Conditional ratio diagnostic
# ---------------------------------------------------------------------------

def test_conditional_ratio_independent_near_one():
    j = independent(P2, P2)
    out = conditional_ratio_diag(j, x_grid=(6.0, 12.0),
                                 n_samples=400_000, seed=3)
    assert out["max_ratio"] < 1.3
    assert not out["unbounded_trend"]


def test_conditional_ratio_fgm_bounded_by_two_ish():
    j = fgm(P2, P2, theta=1.0)
    out = conditional_ratio_diag(j, x_grid=(6.0, 12.0),
                                 n_samples=400_000, seed=3)
    assert out["max_ratio"] < 2.6
    assert not out["unbounded_trend"]


def test_conditional_ratio_comonotone_unbounded():
    j = comonotone(P2, P2)
    out = conditional_ratio_diag(j, x_grid=(8.0, 32.0),
                                 n_samples=400_000, seed=3)
    assert out["unbounded_trend"]
