"""Matuszewska-index estimation and the power-decay bound fit.

The lower index comes from the upper dilation-limit estimates
beta = sup_v -ln(F̄*(v))/ln v and the upper index from the lower ones,
alpha = inf_v -ln(F̄_*(v))/ln v.  At a finite horizon the window extrema
stand in for limsup/liminf, with the trend deciding how to read them:

- stabilized ratio: the extrema are the limit; plug them in;
- ratio still falling geometrically at the horizon: the dilation limit is
  heading to 0, so the decay is super-polynomial; the per-v contribution
  is reported as the cap (infinity);
- ratio still climbing at the horizon: no positive decay exponent can be
  certified, so the contribution to beta is 0 (the limsup lies above the
  window maximum), while alpha keeps the finite window reading.

Values above ``INDEX_CAP`` encode infinity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, UnderflowBeforeWindowError
from .models import DEFAULT_GRID, GridSpec, TailModel
from .ratios import TREND_STABLE, RatioSequence, dilation_sequence

V_GRID_DEFAULT = (1.25, 1.5, 2.0, 3.0, 4.0, 8.0)
INDEX_CAP = 64.0
BOUND_C_MAX = 1e6


@dataclass(frozen=True)
class RatioEstimate:
    """Finite-horizon estimate of the dilation-limit pair at one factor."""

    factor: float
    values: np.ndarray       # ratio sequence over the valid grid prefix
    upper: float             # max over the final window (limsup stand-in)
    lower: float             # min over the final window (liminf stand-in)
    trend: float             # end-of-window log-slope per grid step
    horizon: float
    sequence: RatioSequence

    def __post_init__(self):
        if self.factor > 1.0 and not (self.lower <= self.upper <= 1.0 + 1e-12):
            raise AssertionError("dilation by v > 1 must keep ratios in [0, 1]")


@dataclass(frozen=True)
class PDBound:
    """Witness (C, q, x0) for F̄(vx)/F̄(x) <= C v^-q on grid x > x0."""

    C: float
    q: float
    x0: float


@dataclass(frozen=True)
class MatuszewskaIndices:
    beta: float                      # lower index; inf when capped
    alpha: float                     # upper index; inf when capped
    bound_fit: PDBound | None
    defined: bool
    horizon: float
    per_v: dict

    def __post_init__(self):
        if self.defined and not (-1e-12 <= self.beta <= self.alpha + 1e-12):
            raise AssertionError("indices must satisfy 0 <= beta <= alpha")


def ratio_estimate(model: TailModel, factor: float, grid: GridSpec = DEFAULT_GRID) -> RatioEstimate:
    """Window estimate of the dilation ratio F̄(factor x)/F̄(x)."""
    if not (factor > 0.0) or factor == 1.0:
        raise InvalidParameterError("dilation factor must be positive and != 1")
    seq = dilation_sequence(model, factor, grid)
    with np.errstate(over="ignore"):
        upper = float(np.exp(seq.wmax_log))
        lower = float(np.exp(seq.wmin_log))
    return RatioEstimate(
        factor=factor, values=seq.values, upper=upper, lower=lower,
        trend=seq.trend, horizon=seq.horizon, sequence=seq,
    )


def _per_v_contributions(seq: RatioSequence, v: float) -> tuple[float, float, str]:
    """(beta contribution, alpha contribution, regime) for one dilation."""
    ln_v = math.log(v)
    if seq.decreasing:
        return math.inf, math.inf, "decreasing"
    if seq.increasing:
        return 0.0, max(0.0, -seq.wmin_log / ln_v), "increasing"
    return (
        max(0.0, -seq.wmax_log / ln_v),
        max(0.0, -seq.wmin_log / ln_v),
        "stabilized",
    )


def matuszewska(
    model: TailModel,
    grid: GridSpec = DEFAULT_GRID,
    v_grid: tuple[float, ...] = V_GRID_DEFAULT,
) -> MatuszewskaIndices:
    """Estimate (beta, alpha) over the dilation grid, with the bound witness."""
    if not v_grid or any(v <= 1.0 for v in v_grid):
        raise InvalidParameterError("v_grid must be non-empty with entries > 1")
    if model.right_endpoint < math.inf:
        # Indices make sense only with infinite right endpoint; report
        # undefined rather than inventing a convention for bounded tails.
        return MatuszewskaIndices(
            beta=math.nan, alpha=math.nan, bound_fit=None, defined=False,
            horizon=math.nan, per_v={},
        )
    per_v = {}
    betas, alphas = [], []
    horizon = 0.0
    for v in sorted(v_grid):
        seq = dilation_sequence(model, v, grid)
        b, a, regime = _per_v_contributions(seq, v)
        betas.append(b)
        alphas.append(a)
        horizon = max(horizon, seq.horizon)
        per_v[v] = {"beta": b, "alpha": a, "regime": regime, **seq.summary()}
    beta = max(betas)
    alpha = min(alphas)
    beta = math.inf if beta > INDEX_CAP else beta
    alpha = math.inf if alpha > INDEX_CAP else alpha
    fit = None
    if 0.0 < beta < math.inf:
        fit = fit_pd_bound(model, 0.9 * beta, grid, v_grid)
    return MatuszewskaIndices(
        beta=beta, alpha=alpha, bound_fit=fit, defined=True,
        horizon=horizon, per_v=per_v,
    )


def fit_pd_bound(
    model: TailModel,
    q: float,
    grid: GridSpec = DEFAULT_GRID,
    v_grid: tuple[float, ...] = V_GRID_DEFAULT,
) -> PDBound | None:
    """Smallest grid x0 and minimal C >= 1 with F̄(vx)/F̄(x) <= C v^-q.

    On a finite dilation grid any q admits some constant, so failure is
    detected through v-dependence: when the minimal per-v constant
    c_v = max_x ratio(x, v) v^q still grows from the smallest to the
    largest tested v, no single C can serve all v > 1 and the fit is
    rejected (this is exactly what happens for q above the lower index).
    Returns None on failure.
    """
    if not q > 0.0:
        raise InvalidParameterError("bound exponent q must be positive")
    vs = sorted(v_grid)
    try:
        seqs = {v: dilation_sequence(model, v, grid) for v in vs}
    except UnderflowBeforeWindowError:
        return None
    xs = grid.points()
    n_shared = min(len(seqs[v].xs) for v in vs)
    x0_limit = grid.horizon / 4.0
    for k0 in range(n_shared - 4):
        x0 = float(xs[k0])
        if x0 > x0_limit:
            break
        cs = []
        for v in vs:
            logs = seqs[v].log_ratios[k0 + 1:n_shared]
            cs.append(float(np.exp(np.max(logs) + q * math.log(v))))
        c_max = max(cs)
        growing = cs[-1] > cs[0] * (1.0 + 1e-9)
        if c_max <= BOUND_C_MAX and not growing:
            return PDBound(C=max(1.0, c_max), q=q, x0=x0)
    return None
