"""Tail operators against closed forms and independent quadrature oracles."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from tailkit.calculus import (
    ConvolutionBound,
    StoppedSumSpec,
    TruncatedProductSpec,
    certify_iid_bound,
    check_truncation_sandwich,
    convolution_decomposition,
    convolve,
    max_tail,
    min_tail,
    mixture,
    poisson_truncated,
    power,
    product_convolve,
    stopped_sum_asymptotic,
    stopped_sum_mc,
    stopped_sum_tail,
    truncated_products,
)
from tailkit.dependence import fgm, independent
from tailkit.errors import (
    DegenerateInputError,
    InvalidParameterError,
    MissingBoundError,
    PreconditionNotDeclaredError,
    UnsupportedSupportError,
)
from tailkit.indices import fit_pd_bound
from tailkit.models import (
    DEFAULT_GRID,
    exponential,
    pareto,
    point_mass,
    shift,
    truncated_uniform,
    weibull,
)


# ---------------------------------------------------------------------------
# Convolution
# ---------------------------------------------------------------------------

def test_exp_exp_is_gamma2():
    h = convolve(exponential(1.0), exponential(1.0))
    assert h.sf(5.0) == pytest.approx(6.0 * math.exp(-5.0), rel=1e-9)
    for x in [0.5, 2.0, 20.0, 200.0]:
        assert h.sf(x) == pytest.approx((1.0 + x) * math.exp(-x), rel=1e-6)


def test_convolve_with_point_mass_at_zero_is_identity():
    h = convolve(pareto(2.0), point_mass(0.0))
    xs = np.geomspace(1.0, 1e6, 25)
    assert np.allclose([h.sf(float(x)) for x in xs], pareto(2.0).sf(xs), rtol=1e-12)


def test_pareto_pareto_subexponential_asymptotic():
    h = power(pareto(2.0), 2)
    x = 100.0
    ref = 2.0 * x**-2
    assert h.sf(x) == pytest.approx(ref, rel=0.05)
    oracle = quad(lambda y: min(1.0, (x - y) ** -2) * 2.0 * y**-3, 1.0, x - 1.0,
                  limit=500, epsrel=1e-12)[0] + x**-2 + ((x - 1.0) ** -2 - x**-2)
    assert h.sf(x) == pytest.approx(oracle, rel=1e-7)


def test_convolution_commutes():
    f, g = pareto(2.0), exponential(1.0)
    h1, h2 = convolve(f, g), convolve(g, f)
    for x in np.geomspace(1.0, 1e4, 15):
        a, b = h1.sf(float(x)), h2.sf(float(x))
        assert a == pytest.approx(b, rel=1e-6)


def test_weibull_heavy_convolution_vs_oracle():
    """Symmetric-split oracle: H̄(x) = F̄(x/2)² + 2 ∫_0^{x/2} F̄(x-y) dF(y)."""
    f = weibull(0.5)
    h = power(f, 2)
    x = 100.0
    oracle = f.sf(x / 2) ** 2 + 2.0 * quad(
        lambda y: f.sf(x - y) * f.pdf(y), 0.0, x / 2, limit=1000, epsrel=1e-12,
        points=[0.0],
    )[0]
    assert h.sf(x) == pytest.approx(oracle, rel=1e-6)


def test_shifted_convolution_matches_unshifted_oracle():
    """(X-1)+(Y-1) = (X+Y)-2: real-line support handled by the same split."""
    f, g = pareto(2.0), exponential(1.0)
    h = convolve(f, g)
    hs = convolve(shift(f, -1.0), shift(g, -1.0))
    for x in [0.5, 3.0, 40.0, 900.0]:
        assert hs.sf(x) == pytest.approx(h.sf(x + 2.0), rel=1e-7)


def test_point_mass_self_convolution_exact():
    h = convolve(point_mass(1.0), point_mass(1.0))
    assert h.sf(1.5) == 1.0
    assert h.sf(2.0) == 0.0
    assert h.atoms == ((2.0, 1.0),)


def test_convolve_needs_a_measure_side():
    bare = pareto(2.0)
    sf_only = type(bare)(
        name="sfonly", support=bare.support, left_edge=1.0, right_endpoint=np.inf,
        sf_fn=bare.sf_fn,
    )
    with pytest.raises(UnsupportedSupportError):
        convolve(sf_only, sf_only)


def test_power_validates_and_memoizes():
    f = pareto(2.0)
    assert power(f, 1) is f
    assert power(f, 2) is power(f, 2)
    with pytest.raises(InvalidParameterError):
        power(f, 0)
    with pytest.raises(InvalidParameterError):
        power(f, 99)


# ---------------------------------------------------------------------------
# Decomposition
# ---------------------------------------------------------------------------

def test_decomposition_sums_to_convolution():
    f, g = pareto(2.0), exponential(1.0)
    h = convolve(f, g)
    for v, x in [(2.0, 100.0), (1.5, 1000.0), (4.0, 50.0)]:
        i1, i2, i3 = convolution_decomposition(f, g, v, x, x0=1.0)
        assert i1 + i2 + i3 == pytest.approx(h.sf(v * x), rel=1e-6)


def test_decomposition_piece_bounds():
    f, g = pareto(2.0), exponential(1.0)
    fit = fit_pd_bound(f, 1.8)
    v, x = 2.0, 1000.0
    i1, i2, i3 = convolution_decomposition(f, g, v, x, x0=fit.x0)
    h = convolve(f, g)
    assert i3 <= g.sf(x) + 1e-15
    assert i1 <= fit.C * v**-fit.q * h.sf(x) * (1.0 + 1e-9)


def test_decomposition_shifted_real_line_inputs():
    f, g = shift(pareto(2.0), -1.0), shift(exponential(1.0), -1.0)
    h = convolve(f, g)
    i1, i2, i3 = convolution_decomposition(f, g, 2.0, 200.0, x0=2.0)
    assert i1 + i2 + i3 == pytest.approx(h.sf(400.0), rel=1e-6)


# ---------------------------------------------------------------------------
# Mixture
# ---------------------------------------------------------------------------

def test_mixture_idempotent_on_equal_components():
    f = pareto(2.0)
    m = mixture(f, f, 0.5)
    xs = np.geomspace(1.0, 1e5, 20)
    assert np.allclose(m.sf(xs), f.sf(xs), rtol=1e-12)


def test_mixture_plug_in_value():
    m = mixture(pareto(2.0), exponential(1.0), 0.5)
    assert m.sf(10.0) == pytest.approx(0.5 * (0.01 + math.exp(-10.0)), rel=1e-12)


@pytest.mark.parametrize("p", [0.0, 1.0, -0.2, 1.3])
def test_mixture_rejects_boundary_weights(p):
    with pytest.raises(InvalidParameterError):
        mixture(pareto(2.0), exponential(1.0), p)


# ---------------------------------------------------------------------------
# Stopped sums
# ---------------------------------------------------------------------------

def test_stopped_sum_single_term_is_identity():
    spec = StoppedSumSpec({1: 1.0}, bound=1)
    t = stopped_sum_tail([pareto(2.0)], spec)
    xs = np.geomspace(1.0, 1e5, 15)
    assert np.allclose(t.sf(xs), pareto(2.0).sf(xs), rtol=1e-12)


def test_stopped_sum_exponential_closed_form():
    """k = 3 uniform weights on Exp(1): Gamma(n,1) tails in closed form."""
    spec = StoppedSumSpec({1: 1 / 3, 2: 1 / 3, 3: 1 / 3}, bound=3)
    f = exponential(1.0)
    t = stopped_sum_tail([f, f, f], spec)
    x = 5.0
    want = (math.exp(-x) + (1 + x) * math.exp(-x)
            + (1 + x + x * x / 2) * math.exp(-x)) / 3.0
    assert want == pytest.approx(0.0572725, abs=5e-7)  # frozen: 8.5 * exp(-5)
    assert t.sf(x) == pytest.approx(want, rel=1e-6)


def test_stopped_sum_limit_ratio():
    spec = StoppedSumSpec({1: 0.5, 2: 0.5}, bound=2)
    f = pareto(2.5)
    t = stopped_sum_tail([f, f], spec)
    x = 1e4
    assert t.sf(x) / f.sf(x) == pytest.approx(1.5, abs=0.03)


def test_stopped_sum_requires_bound():
    with pytest.raises(InvalidParameterError):
        StoppedSumSpec({0: 1.0})
    spec = StoppedSumSpec({n: 0.25 for n in range(1, 5)})  # unbounded: no bound field
    with pytest.raises(MissingBoundError):
        stopped_sum_tail([pareto(2.0)] * 4, spec)


def test_stopped_sum_asymptotic_identity_and_clamp():
    spec = StoppedSumSpec({1: 0.5, 2: 0.5}, bound=2, tilt_delta=0.1)
    approx, diag = stopped_sum_asymptotic(pareto(2.5), spec)
    assert approx.sf(1e4) == pytest.approx(1.5 * 1e4**-2.5, rel=1e-12)
    assert approx.sf(1.0) == 1.0  # E[N] F̄ > 1 clamped
    assert diag["mean"] == pytest.approx(1.5)


def test_stopped_sum_asymptotic_requires_tilt_declaration():
    spec = StoppedSumSpec({1: 0.5, 2: 0.5}, bound=2)
    with pytest.raises(PreconditionNotDeclaredError):
        stopped_sum_asymptotic(pareto(2.5), spec)


def test_stopped_sum_mc_unbiased_small_case():
    """MC estimator vs the exact convolution tail on a bounded case."""
    spec = StoppedSumSpec({1: 0.5, 2: 0.5}, bound=2)
    f = pareto(2.5)
    exact = stopped_sum_tail([f, f], spec).sf(50.0)
    mc = stopped_sum_mc(f, spec, 50.0, n_samples=400_000, seed=7)
    assert mc == pytest.approx(exact, rel=0.02)


def test_poisson_truncated_spec():
    spec = poisson_truncated(2.0, 40)
    assert spec.bound == 40
    assert spec.mean == pytest.approx(2.0, abs=1e-9)
    assert spec.tilt_ok


# ---------------------------------------------------------------------------
# Eq.-style bound certification
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("n", [2, 3])
def test_iid_pareto_bound_constant(n):
    bound = certify_iid_bound(pareto(2.0), n)
    assert isinstance(bound, ConvolutionBound)
    assert bound.certified
    assert 1.0 <= bound.c_hat <= 10.0


# ---------------------------------------------------------------------------
# Product convolution
# ---------------------------------------------------------------------------

def test_product_with_unit_point_mass_is_identity():
    h = product_convolve(pareto(2.0), point_mass(1.0))
    xs = np.geomspace(1.0, 1e6, 20)
    assert np.allclose([h.sf(float(x)) for x in xs], pareto(2.0).sf(xs), rtol=1e-12)


def test_product_pareto_uniform_closed_form():
    h = product_convolve(pareto(2.0), truncated_uniform(1.0))
    for x in [1.0, 10.0, 1e3, 1e6]:
        assert h.sf(x) * x * x == pytest.approx(1.0 / 3.0, rel=1e-7)


def test_product_two_paretos_breiman_constant():
    # heavier factor wins; constant is E[Y^2] = 3 for Pareto(3)
    h = product_convolve(pareto(2.0), pareto(3.0))
    x = 1e4
    assert h.sf(x) * x * x == pytest.approx(3.0, rel=0.05)


def test_product_rejects_degenerate_factor():
    with pytest.raises(DegenerateInputError):
        product_convolve(pareto(2.0), point_mass(0.0))


def test_truncation_sandwich_holds_on_grid():
    f, g = pareto(2.0), truncated_uniform(1.0)
    for eps in (0.1, 0.5):
        spec = TruncatedProductSpec(epsilon=eps, epsilon_prime=2.0)
        out = check_truncation_sandwich(f, g, spec, DEFAULT_GRID)
        assert out["holds"], out


def test_truncated_products_exceedance_levels():
    f, g = pareto(2.0), exponential(1.0)
    _, _, spec = truncated_products(f, g, TruncatedProductSpec(0.5, 2.0))
    assert spec.p_exceed_eps == pytest.approx(math.exp(-0.5))
    assert spec.p_exceed_eps_prime == pytest.approx(math.exp(-2.0))


# ---------------------------------------------------------------------------
# Max / min
# ---------------------------------------------------------------------------

def test_max_tail_independent_plug_in():
    j = independent(pareto(2.0), pareto(3.0))
    m = max_tail(j)
    assert m.sf(10.0) == pytest.approx(1e-2 + 1e-3 - 1e-5, rel=1e-12)


def test_max_tail_degenerate_other_is_identity():
    j = independent(pareto(2.0), point_mass(0.0))
    m = max_tail(j)
    xs = np.geomspace(1.0, 1e6, 20)
    assert np.allclose(m.sf(xs), pareto(2.0).sf(xs), rtol=1e-12)


def test_max_tail_fgm_plug_in():
    j = fgm(pareto(2.0), pareto(2.0), theta=1.0)
    x = 10.0
    want = 2e-2 - 1e-4 * (1.0 + 1.0 * (1 - 1e-2) ** 2)
    assert max_tail(j).sf(x) == pytest.approx(want, rel=1e-12)


def test_min_tail_independent_product():
    j = independent(pareto(2.0), pareto(3.0))
    assert min_tail(j).sf(10.0) == pytest.approx(1e-5, rel=1e-12)


def test_min_tail_comonotone_identical_marginals():
    from tailkit.dependence import comonotone

    j = comonotone(pareto(2.0), pareto(2.0))
    xs = np.geomspace(1.0, 1e6, 20)
    assert np.allclose(min_tail(j).sf(xs), pareto(2.0).sf(xs), rtol=1e-12)


def test_min_tail_fgm_sai_constant():
    j = fgm(pareto(2.0), pareto(2.0), theta=0.5)
    x = 1e3
    assert min_tail(j).sf(x) == pytest.approx(1.5 * x**-4, rel=1e-2)


def test_max_asymptotic_cross_term_vanishes():
    j = independent(pareto(2.0), pareto(3.0))
    m = max_tail(j)
    x = 1e6
    ratio = m.sf(x) / (pareto(2.0).sf(x) + pareto(3.0).sf(x))
    assert 1.0 - 1e-5 <= ratio <= 1.0


def test_mediant_bound_for_max_ratio():
    """Max-tail dilation ratio sits between the component ratios once the
    cross term is negligible."""
    f, g = pareto(2.0), pareto(3.0)
    m = max_tail(independent(f, g))
    v = 2.0
    for x in np.geomspace(10.0, 1e6, 12):
        cross = f.sf(x) * g.sf(x)
        if cross > 1e-3 * (f.sf(x) + g.sf(x)):
            continue
        rm = m.sf(v * x) / m.sf(x)
        rf = f.sf(v * x) / f.sf(x)
        rg = g.sf(v * x) / g.sf(x)
        assert min(rf, rg) * (1 - 5e-3) <= rm <= max(rf, rg) * (1 + 5e-3)
