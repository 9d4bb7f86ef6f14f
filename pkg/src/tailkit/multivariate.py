"""Vector tail models, the multivariate D/P_D estimators, and vector minima.

A vector tail is the joint exceedance P[X_1 > t_1 x, ..., X_n > t_n x]
along direction vectors t with coordinates in (0, inf]; an infinite
coordinate drops its constraint, so directions with a single finite
coordinate reduce to that marginal.  Membership estimators mirror the
univariate window machinery exactly: with n = 1 and t = (1,) the verdict
is bit-identical to the univariate one.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .classes import PD_DELTA, is_D
from .dependence import JointTailModel
from .errors import (
    DimensionMismatchError,
    InvalidParameterError,
    MissingReferenceError,
)
from .models import DEFAULT_GRID, GridSpec, TailModel
from .ratios import TREND_STABLE, build_sequence, pair_sequence

WEAK_EQUIV_BOUND = 1e3      # two-sided ratio certificate F̄_i ≍ F̄_ref
_LOG_CEILING = math.log(1e4)
MAX_T_VECTORS = 40
MAX_DIM = 4


@dataclass(frozen=True)
class VectorTailModel:
    """Joint exceedance along directions, with marginal and reference tails."""

    marginals: tuple[TailModel, ...]
    coupling: JointTailModel | None = None      # bivariate coupling; None = independent
    reference: TailModel | None = None
    name: str = "vector"
    log_joint_override: object = None           # callable (t, x) -> log joint

    def __post_init__(self):
        if not self.marginals:
            raise InvalidParameterError("vector model needs at least one marginal")
        if len(self.marginals) > MAX_DIM:
            raise InvalidParameterError(f"dimension capped at {MAX_DIM}")
        if self.coupling is not None and len(self.marginals) != 2:
            raise InvalidParameterError("explicit couplings are bivariate only")

    @property
    def dim(self) -> int:
        return len(self.marginals)

    def log_joint_t(self, t: tuple[float, ...], x) -> np.ndarray:
        """ln P[X_i > t_i x over finite t_i]; exact via marginal log tails."""
        if len(t) != self.dim:
            raise DimensionMismatchError(f"direction {t} vs dim {self.dim}")
        x = np.asarray(x, dtype=float)
        finite = [(ti, m) for ti, m in zip(t, self.marginals) if np.isfinite(ti)]
        if not finite:
            raise InvalidParameterError("the all-infinite direction is excluded")
        if self.log_joint_override is not None:
            return self.log_joint_override(t, x)
        if self.coupling is not None and len(finite) == 2:
            return self.coupling.joint_log_sf(finite[0][0] * x, finite[1][0] * x)
        total = np.zeros_like(x, dtype=float)
        for ti, m in finite:
            total = total + m.log_sf(ti * x)
        return total

    def joint_t(self, t: tuple[float, ...], x):
        with np.errstate(over="ignore"):
            return np.exp(self.log_joint_t(t, x))


def independent_vector(
    marginals: tuple[TailModel, ...] | list[TailModel],
    reference: TailModel | None = None,
    name: str = "vector",
) -> VectorTailModel:
    return VectorTailModel(tuple(marginals), None, reference, name)


def coupled_vector(
    coupling: JointTailModel,
    reference: TailModel | None = None,
    name: str = "vector",
) -> VectorTailModel:
    return VectorTailModel((coupling.x, coupling.y), coupling, reference, name)


def default_t_set(dim: int) -> tuple[tuple[float, ...], ...]:
    """Directions over {0.5, 1, 2, inf}^n minus all-inf, capped at 40."""
    coords = (0.5, 1.0, 2.0, math.inf)
    out = [t for t in itertools.product(coords, repeat=dim)
           if any(np.isfinite(c) for c in t)]
    return tuple(out[:MAX_T_VECTORS])


def default_b_set(dim: int) -> tuple[tuple[float, ...], ...]:
    return (tuple([0.5] * dim), tuple([0.8] * dim),
            tuple([0.5] + [0.8] * (dim - 1)))


def default_v_set(dim: int) -> tuple[tuple[float, ...], ...]:
    return (tuple([1.5] * dim), tuple([2.0] * dim), tuple([4.0] * dim))


@dataclass(frozen=True)
class VectorVerdict:
    class_name: str
    member: bool
    tested_t: tuple[tuple[float, ...], ...]
    tested_dilations: tuple[tuple[float, ...], ...]
    margin: float
    horizon: float
    diagnostics: dict
    flags: tuple[str, ...] = ()
    marginal_preconditions: dict = field(default_factory=dict)


def _scaled_direction(scale: tuple[float, ...], t: tuple[float, ...]) -> tuple[float, ...]:
    return tuple(s * ti if np.isfinite(ti) else math.inf for s, ti in zip(scale, t))


def _direction_sequence(model: VectorTailModel, scale, t, grid: GridSpec):
    xs = grid.points()
    num = model.log_joint_t(_scaled_direction(scale, t), xs)
    den = model.log_joint_t(t, xs)
    return build_sequence(xs, num, den)


def weak_equivalence_certificates(model: VectorTailModel, grid: GridSpec) -> dict:
    """Window check that each marginal stays within [1/M, M] of the reference."""
    if model.reference is None:
        raise MissingReferenceError("D_n needs a reference tail with certificates")
    out = {}
    bound = math.log(WEAK_EQUIV_BOUND)
    for i, m in enumerate(model.marginals):
        seq = pair_sequence(m, model.reference, grid)
        ok = -bound <= seq.wmin_log and seq.wmax_log <= bound
        out[i] = {"ok": bool(ok), **seq.summary()}
    return out


def is_Dn(
    model: VectorTailModel,
    t_set=None,
    b_set=None,
    grid: GridSpec = DEFAULT_GRID,
) -> VectorVerdict:
    """Multivariate dominated variation along every tested direction."""
    t_set = default_t_set(model.dim) if t_set is None else tuple(t_set)
    b_set = default_b_set(model.dim) if b_set is None else tuple(b_set)
    certs = weak_equivalence_certificates(model, grid)
    certs_ok = all(c["ok"] for c in certs.values())
    ref_d = is_D(model.reference, grid=grid)
    per = {}
    member = certs_ok and ref_d.member
    margins = []
    horizon = grid.horizon
    for t in t_set:
        for b in b_set:
            seq = _direction_sequence(model, b, t, grid)
            # same rule as the univariate estimator so the n = 1 reduction
            # is bit-identical
            ok = seq.wmax_log <= _LOG_CEILING and seq.trend <= TREND_STABLE
            member = member and ok
            margins.append(_LOG_CEILING - seq.wmax_log)
            horizon = min(horizon, seq.horizon)
            per[(t, b)] = {"ok": bool(ok), **seq.summary()}
    return VectorVerdict(
        class_name="D_n", member=member, tested_t=t_set, tested_dilations=b_set,
        margin=min(margins), horizon=horizon,
        diagnostics={"per_direction": per, "certificates": certs,
                     "reference_in_D": ref_d.member},
        flags=() if certs_ok else ("weak-equivalence-failed",),
    )


def is_PDn(
    model: VectorTailModel,
    t_set=None,
    v_set=None,
    grid: GridSpec = DEFAULT_GRID,
) -> VectorVerdict:
    """Multivariate positive decrease: for every direction some dilation
    vector pushes the joint ratio below 1 - delta.

    The definition requires each marginal in the univariate D class; the
    check runs either way and flags the verdict conditional when a
    marginal precondition fails.
    """
    t_set = default_t_set(model.dim) if t_set is None else tuple(t_set)
    v_set = default_v_set(model.dim) if v_set is None else tuple(v_set)
    pre = {i: is_D(m, grid=grid).member for i, m in enumerate(model.marginals)}
    flags = () if all(pre.values()) else ("marginal-precondition-failed",)
    log_thr = math.log(1.0 - PD_DELTA)
    per = {}
    member = True
    margins = []
    horizon = grid.horizon
    for t in t_set:
        ok_some = False
        best = -math.inf
        for v in v_set:
            seq = _direction_sequence(model, v, t, grid)
            ok = seq.wmax_log <= log_thr and seq.trend <= TREND_STABLE
            margin_v = (1.0 - PD_DELTA) - math.exp(min(seq.wmax_log, 0.0))
            per[(t, v)] = {"ok": bool(ok), **seq.summary()}
            if ok:
                ok_some = True
                best = max(best, margin_v)
            horizon = min(horizon, seq.horizon)
        member = member and ok_some
        margins.append(best if ok_some else -1.0)
    return VectorVerdict(
        class_name="PD_n", member=member, tested_t=t_set, tested_dilations=v_set,
        margin=min(margins), horizon=horizon,
        diagnostics={"per_direction": per},
        flags=flags,
        marginal_preconditions=pre,
    )


def is_Dn_and_PDn(model: VectorTailModel, grid: GridSpec = DEFAULT_GRID) -> VectorVerdict:
    d = is_Dn(model, grid=grid)
    pd = is_PDn(model, grid=grid)
    return VectorVerdict(
        class_name="D_n∩PD_n", member=d.member and pd.member,
        tested_t=d.tested_t, tested_dilations=d.tested_dilations + pd.tested_dilations,
        margin=min(d.margin, pd.margin), horizon=min(d.horizon, pd.horizon),
        diagnostics={"D_n": d.member, "PD_n": pd.member},
        flags=tuple(sorted(set(d.flags) | set(pd.flags))),
    )


def vector_min_tail(
    v1: VectorTailModel,
    v2: VectorTailModel,
    coupling: str = "asymptotically-independent",
) -> VectorTailModel:
    """Componentwise minimum of two vectors under asymptotic independence.

    The joint exceedance factorizes into the product of the two vector
    tails; marginals become products of the componentwise survival pairs.
    """
    if v1.dim != v2.dim:
        raise DimensionMismatchError(f"dims {v1.dim} != {v2.dim}")
    if coupling != "asymptotically-independent":
        raise InvalidParameterError("only the asymptotically-independent coupling is defined")

    mins = tuple(_min_marginal(a, b) for a, b in zip(v1.marginals, v2.marginals))
    ref = None
    if v1.reference is not None and v2.reference is not None:
        ref = _min_marginal(v1.reference, v2.reference)

    # The factorized joint is not a plain independent product of the min
    # marginals when the inputs are coupled; carry the product explicitly.
    def log_joint(t, x):
        return v1.log_joint_t(t, x) + v2.log_joint_t(t, x)

    return VectorTailModel(mins, None, ref, name=f"min({v1.name}, {v2.name})",
                           log_joint_override=log_joint)


def _min_marginal(a: TailModel, b: TailModel) -> TailModel:
    from .calculus import min_tail
    from .dependence import independent

    return min_tail(independent(a, b))
