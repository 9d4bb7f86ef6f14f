"""Vector tails, multivariate memberships, and the vector minimum."""

import math

import numpy as np
import pytest

from tailkit.classes import is_D, is_PD
from tailkit.dependence import fgm
from tailkit.errors import DimensionMismatchError, MissingReferenceError
from tailkit.models import exponential, pareto, scale_tail, slow_log
from tailkit.multivariate import (
    coupled_vector,
    default_t_set,
    independent_vector,
    is_Dn,
    is_Dn_and_PDn,
    is_PDn,
    vector_min_tail,
    weak_equivalence_certificates,
)
from tailkit.models import DEFAULT_GRID

P2 = pareto(2.0)
P3 = pareto(3.0)


def _pareto_vec(alpha: float, dim: int):
    m = pareto(alpha)
    return independent_vector([m] * dim, reference=m, name=f"pareto{alpha}^{dim}")


# ---------------------------------------------------------------------------
# Joint evaluation
# ---------------------------------------------------------------------------

def test_joint_product_form():
    v = _pareto_vec(2.0, 2)
    x = 10.0
    assert v.joint_t((1.0, 1.0), x) == pytest.approx(1e-4, rel=1e-9)
    assert v.joint_t((2.0, 1.0), x) == pytest.approx(0.25e-4 , rel=1e-9)


def test_infinite_coordinate_reduces_to_marginal():
    v = _pareto_vec(2.0, 3)
    x = 25.0
    assert v.joint_t((1.0, math.inf, math.inf), x) == pytest.approx(P2.sf(x), rel=1e-12)


def test_t_set_capped_and_excludes_all_infinite():
    ts = default_t_set(3)
    assert len(ts) <= 40
    assert all(any(np.isfinite(c) for c in t) for t in ts)


# ---------------------------------------------------------------------------
# D_n
# ---------------------------------------------------------------------------

def test_dn_independent_pareto_square():
    verdict = is_Dn(_pareto_vec(2.0, 2))
    assert verdict.member
    # ratio at t = (1,1), b = (0.5, 0.5) is (b1 b2)^-2 = 16
    seq = verdict.diagnostics["per_direction"][((1.0, 1.0), (0.5, 0.5))]
    assert seq["wmax"] == pytest.approx(16.0, rel=1e-9)


def test_dn_requires_reference():
    v = independent_vector([P2, P2])
    with pytest.raises(MissingReferenceError):
        is_Dn(v)


def test_dn_fails_with_exponential_marginal():
    v = independent_vector([P2, exponential(1.0)], reference=P2)
    verdict = is_Dn(v)
    assert not verdict.member
    assert "weak-equivalence-failed" in verdict.flags


def test_weak_equivalence_certificate_scaled_tails():
    v = independent_vector([P2, scale_tail(P2, 2.0)], reference=P2)
    certs = weak_equivalence_certificates(v, DEFAULT_GRID)
    assert all(c["ok"] for c in certs.values())


# ---------------------------------------------------------------------------
# PD_n
# ---------------------------------------------------------------------------

def test_pdn_independent_pareto_square():
    verdict = is_PDn(_pareto_vec(2.0, 2))
    assert verdict.member
    seq = verdict.diagnostics["per_direction"][((1.0, 1.0), (2.0, 2.0))]
    assert seq["wmax"] == pytest.approx(2.0**-4, rel=1e-9)
    assert all(verdict.marginal_preconditions.values())


def test_pdn_fgm_coupling_same_limit_as_independent():
    j = fgm(P2, P2, theta=0.5)
    v = coupled_vector(j, reference=P2)
    verdict = is_PDn(v)
    assert verdict.member
    seq = verdict.diagnostics["per_direction"][((1.0, 1.0), (2.0, 2.0))]
    # the factorization constant cancels in the dilation ratio
    assert seq["wmax"] == pytest.approx(2.0**-4, rel=1e-2)


def test_pdn_slowly_varying_not_member_and_flagged():
    sv = slow_log()
    v = independent_vector([sv, sv], reference=sv)
    verdict = is_PDn(v)
    assert not verdict.member


def test_pdn_marginal_precondition_flag():
    v = independent_vector([P2, exponential(1.0)], reference=P2)
    verdict = is_PDn(v)
    assert "marginal-precondition-failed" in verdict.flags
    assert verdict.marginal_preconditions[1] is False


# ---------------------------------------------------------------------------
# n = 1 reduction
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("model", [P2, exponential(1.0), slow_log()],
                         ids=lambda m: m.name)
def test_dim_one_reduction_matches_univariate(model):
    v = independent_vector([model], reference=model)
    uni = is_D(model)
    multi = is_Dn(v, t_set=((1.0,),), b_set=((0.5,),))
    if model.right_endpoint == math.inf:
        assert multi.member == uni.member
        if uni.member:
            assert multi.margin == pytest.approx(uni.margin, rel=1e-12)
    uni_pd = is_PD(model, v_grid=(2.0,))
    multi_pd = is_PDn(v, t_set=((1.0,),), v_set=((2.0,),))
    assert multi_pd.member == uni_pd.member
    if uni_pd.member:
        assert multi_pd.margin == pytest.approx(uni_pd.margin, rel=1e-12)


# ---------------------------------------------------------------------------
# Vector minimum
# ---------------------------------------------------------------------------

def test_vector_min_identity_against_certain_survivor():
    ones = independent_vector([scale_tail(P2, 1.0)] * 2, reference=P2)
    # second vector with survival ~ 1 up to the horizon
    far = pareto(0.01, scale=1e300)
    certain = independent_vector([far] * 2, reference=far)
    m = vector_min_tail(ones, certain)
    x = 100.0
    assert m.joint_t((1.0, 1.0), x) == pytest.approx(ones.joint_t((1.0, 1.0), x), rel=1e-9)


def test_vector_min_exponent_adds():
    v1 = _pareto_vec(2.0, 2)
    v2 = _pareto_vec(3.0, 2)
    m = vector_min_tail(v1, v2)
    x = 100.0
    assert m.joint_t((1.0, 1.0), x) == pytest.approx(x ** -10.0, rel=1e-9)


def test_vector_min_pareto_square_is_pdn_and_dn():
    m = vector_min_tail(_pareto_vec(2.0, 2), _pareto_vec(2.0, 2))
    assert is_PDn(m).member
    assert is_Dn(m).member
    assert is_Dn_and_PDn(m).member


def test_vector_min_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        vector_min_tail(_pareto_vec(2.0, 2), _pareto_vec(2.0, 3))


def test_min_ratio_below_factor_ratios_at_every_grid_point():
    """The min-vector dilation ratio is bounded by each factor's ratio."""
    v1, v2 = _pareto_vec(2.0, 2), _pareto_vec(3.0, 2)
    m = vector_min_tail(v1, v2)
    xs = DEFAULT_GRID.points()
    t, v = (1.0, 1.0), (2.0, 2.0)
    vt = tuple(a * b for a, b in zip(v, t))
    r_min = m.log_joint_t(vt, xs) - m.log_joint_t(t, xs)
    for fac in (v1, v2):
        r_fac = fac.log_joint_t(vt, xs) - fac.log_joint_t(t, xs)
        assert np.all(r_min <= r_fac + 1e-9)
