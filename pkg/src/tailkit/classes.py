"""Membership estimators for the distribution classes and intersections.

All verdicts are boolean-at-horizon.  A limsup can be refuted or found
consistent at a finite horizon, never proven, so the estimators combine a
window test with a trend policy:

- strict-limit classes (long-tailed, positively decreasing) demand a
  stabilized or falling ratio; a sequence still climbing toward the
  threshold is reported non-member with a trend diagnostic;
- boundedness classes (dominated variation and the O-variants) reject on
  sustained geometric growth, tolerating mild drift;
- the subexponential window retries on progressively deeper grids
  (closed-form models only) when the ratio is still approaching 2, and
  marks the verdict with an extended-horizon flag.

Models with a finite right endpoint fall outside every ratio-defined
class: the defining limits condition on F̄(x) > 0 for all x, so such
models are reported non-member with reason ``finite-right-endpoint``
rather than given an invented convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import calculus
from .errors import (
    InvalidParameterError,
    TailkitError,
    TransformDivergentError,
    UnsupportedSupportError,
)
from .models import DEFAULT_GRID, GridSpec, Support, TailModel
from .quadrature import cumulative_until
from .ratios import (
    TREND_BOUNDED,
    TREND_STABLE,
    RatioSequence,
    dilation_sequence,
    shift_sequence,
)

V_GRID_DEFAULT = (1.25, 1.5, 2.0, 3.0, 4.0, 8.0)
T_GRID_DEFAULT = (1.0, 2.0)
EPS_GRID_DEFAULT = (1.0, 0.5, 0.1, 0.01)

PD_DELTA = 0.01           # positively-decreasing margin below 1
LONG_TAU = 1e-3           # shift-ratio tolerance around the L(gamma) target
S_TAU = 0.05              # half-width of the subexponential window around 2
CEILING = 1e4             # finiteness ceiling for boundedness classes
HEAVY_DIVERGENCE = 1e6    # partial exponential moment counts as divergent
TRANSFORM_CAP = 1e8       # exponential moment counts as infinite
FLAG_TREND = 1e-3         # slow-convergence flag threshold
S_EXTENSION_HORIZONS = (1e12, 1e18)

_LOG_CEILING = math.log(CEILING)

# noise floors for the margin/noise bookkeeping
NOISE_CLOSED_FORM = 1e-12
NOISE_QUADRATURE = 1e-6
NOISE_TREND = 1e-9


@dataclass(frozen=True)
class ClassVerdict:
    class_name: str
    member: bool
    margin: float            # distance of the decisive statistic from its threshold
    horizon: float
    diagnostics: dict
    flags: tuple[str, ...] = ()
    noise: float = NOISE_CLOSED_FORM
    reason: str | None = None


@dataclass(frozen=True)
class LaplaceTransform:
    gamma: float
    value: float

    def __post_init__(self):
        if self.gamma == 0.0 and self.value != 1.0:
            raise AssertionError("exponential moment at 0 must equal 1")


def _finite_right_verdict(name: str, model: TailModel) -> ClassVerdict:
    return ClassVerdict(
        class_name=name, member=False, margin=math.inf,
        horizon=model.right_endpoint,
        diagnostics={"right_endpoint": model.right_endpoint},
        flags=("finite-right-endpoint",),
        reason="finite-right-endpoint: the defining limit needs F̄(x) > 0 for all x",
    )


# ---------------------------------------------------------------------------
# Heavy tails
# ---------------------------------------------------------------------------

def is_heavy(
    model: TailModel,
    eps_grid: tuple[float, ...] = EPS_GRID_DEFAULT,
    grid: GridSpec = DEFAULT_GRID,
) -> ClassVerdict:
    """Divergence-at-horizon of every exponential moment in eps_grid."""
    if not eps_grid or any(e <= 0 for e in eps_grid):
        raise InvalidParameterError("eps_grid must be non-empty with positive entries")
    if not model.has_measure:
        raise UnsupportedSupportError("heavy-tail test integrates dF; model needs a measure")
    le = model.left_edge
    edges = np.unique(np.concatenate((
        [le], le + np.geomspace(1e-6, grid.horizon - min(le, 0.0), grid.count + 8),
    )))
    margins = []
    per_eps = {}
    member = True
    for eps in sorted(eps_grid):
        atom_part = sum(w * math.exp(min(eps * a, 700.0)) for a, w in model.atoms)
        if model.pdf_fn is not None:
            def fn(y, _e=eps):
                # log-space product: exp(eps*y) can overflow while the
                # tilted density itself stays finite
                with np.errstate(over="ignore", invalid="ignore"):
                    return np.exp(_e * y + model.log_pdf(y))

            crossed, value, partials = cumulative_until(
                fn, edges, HEAVY_DIVERGENCE - atom_part,
                breakpoints=model.breakpoints,
            )
            value += atom_part
        else:
            crossed, value, partials = atom_part > HEAVY_DIVERGENCE, atom_part, np.asarray([])
        member = member and crossed
        margin = abs(math.log(max(value, 1e-300) / HEAVY_DIVERGENCE))
        margins.append(margin)
        per_eps[eps] = {"diverged": bool(crossed), "final": float(min(value, 1e300)),
                        "partials": [float(min(p, 1e300)) for p in partials[-8:]]}
    return ClassVerdict(
        class_name="H", member=member, margin=min(margins),
        horizon=grid.horizon, diagnostics={"per_eps": per_eps},
        noise=NOISE_QUADRATURE,
    )


# ---------------------------------------------------------------------------
# Shift-ratio classes: L and L(gamma), OL
# ---------------------------------------------------------------------------

def _lgamma_core(
    model: TailModel,
    gamma: float,
    t_grid: tuple[float, ...],
    grid: GridSpec,
    class_name: str,
) -> ClassVerdict:
    if model.right_endpoint < math.inf:
        return _finite_right_verdict(class_name, model)
    per_t = {}
    devs = []
    horizon = 0.0
    for t in t_grid:
        seq = shift_sequence(model, t, grid)
        dev = float(np.max(np.abs(seq.window - gamma * t)))
        devs.append(dev)
        horizon = max(horizon, seq.horizon)
        per_t[t] = {"max_dev": dev, "target": gamma * t, **seq.summary()}
    worst = max(devs)
    member = worst <= LONG_TAU
    return ClassVerdict(
        class_name=class_name, member=member,
        margin=(LONG_TAU - worst) if member else (worst - LONG_TAU),
        horizon=horizon, diagnostics={"per_t": per_t},
        noise=NOISE_CLOSED_FORM if model.log_sf_fn is not None else NOISE_QUADRATURE,
    )


def is_long(model: TailModel, t: float = 1.0, grid: GridSpec = DEFAULT_GRID) -> ClassVerdict:
    """Long-tailed: F̄(x-t)/F̄(x) -> 1 within the window tolerance."""
    if t == 0.0:
        raise InvalidParameterError("shift t must be nonzero")
    return _lgamma_core(model, 0.0, (t,), grid, "L")


def is_Lgamma(
    model: TailModel,
    gamma: float,
    t_grid: tuple[float, ...] = T_GRID_DEFAULT,
    grid: GridSpec = DEFAULT_GRID,
) -> ClassVerdict:
    """Exponential-type class: shift ratios approach e^{gamma t} for each t."""
    if gamma < 0:
        raise InvalidParameterError("gamma must be >= 0")
    if any(t == 0.0 for t in t_grid) or not t_grid:
        raise InvalidParameterError("t_grid entries must be nonzero")
    return _lgamma_core(model, gamma, tuple(t_grid), grid, f"Lgamma({gamma:g})")


def is_OL(
    model: TailModel,
    t_grid: tuple[float, ...] = T_GRID_DEFAULT,
    grid: GridSpec = DEFAULT_GRID,
) -> ClassVerdict:
    """Generalized long-tailed: shift ratios bounded with tame trend."""
    if any(t == 0.0 for t in t_grid) or not t_grid:
        raise InvalidParameterError("t_grid entries must be nonzero")
    if model.right_endpoint < math.inf:
        return _finite_right_verdict("OL", model)
    per_t = {}
    member = True
    ok_margins, fail_margins = [], []
    horizon = 0.0
    for t in t_grid:
        seq = shift_sequence(model, t, grid)
        ok_ceiling = seq.wmax_log <= _LOG_CEILING
        ok_trend = seq.trend <= TREND_BOUNDED
        member = member and ok_ceiling and ok_trend
        horizon = max(horizon, seq.horizon)
        if ok_ceiling and ok_trend:
            ok_margins.append(_LOG_CEILING - seq.wmax_log)
        elif not ok_ceiling:
            fail_margins.append(seq.wmax_log - _LOG_CEILING)
        else:
            fail_margins.append(seq.trend - TREND_BOUNDED)
        per_t[t] = {"ok_ceiling": ok_ceiling, "ok_trend": ok_trend, **seq.summary()}
    return ClassVerdict(
        class_name="OL", member=member,
        margin=min(ok_margins) if member else max(fail_margins),
        horizon=horizon, diagnostics={"per_t": per_t},
        noise=NOISE_CLOSED_FORM if model.log_sf_fn is not None else NOISE_QUADRATURE,
    )


# ---------------------------------------------------------------------------
# Dilation-ratio classes: D and P_D
# ---------------------------------------------------------------------------

def is_D(model: TailModel, b: float = 0.5, grid: GridSpec = DEFAULT_GRID) -> ClassVerdict:
    """Dominated variation: F̄(bx)/F̄(x) bounded with non-increasing trend."""
    if not 0.0 < b < 1.0:
        raise InvalidParameterError("contraction factor b must lie in (0, 1)")
    if model.right_endpoint < math.inf:
        return _finite_right_verdict("D", model)
    seq = dilation_sequence(model, b, grid)
    ok_ceiling = seq.wmax_log <= _LOG_CEILING
    ok_trend = seq.trend <= TREND_STABLE
    member = ok_ceiling and ok_trend
    if not ok_ceiling:
        margin = seq.wmax_log - _LOG_CEILING
    elif not ok_trend:
        margin = seq.trend - TREND_STABLE
    else:
        margin = _LOG_CEILING - seq.wmax_log
    flags = () if ok_trend else ("positive-trend",)
    return ClassVerdict(
        class_name="D", member=member, margin=margin, horizon=seq.horizon,
        diagnostics={"b": b, **seq.summary()},
        flags=flags,
        noise=NOISE_TREND if (ok_ceiling and not ok_trend) else NOISE_CLOSED_FORM,
    )


def is_PD(
    model: TailModel,
    grid: GridSpec = DEFAULT_GRID,
    v_grid: tuple[float, ...] = V_GRID_DEFAULT,
) -> ClassVerdict:
    """Positively decreasing: some dilation ratio stays below 1 - delta.

    Per-v verdicts are reported; membership takes any v (the defining
    property holds for some v iff for all v in the limit, but at a finite
    horizon the per-v evidence differs and is kept visible).
    """
    if not v_grid or any(v <= 1.0 for v in v_grid):
        raise InvalidParameterError("v_grid entries must exceed 1")
    if model.right_endpoint < math.inf:
        return _finite_right_verdict("PD", model)
    log_thr = math.log(1.0 - PD_DELTA)
    per_v = {}
    best_margin = -math.inf
    member = False
    trend_rejected_all = True
    horizon = 0.0
    for v in sorted(v_grid):
        seq = dilation_sequence(model, v, grid)
        ok_level = seq.wmax_log <= log_thr
        ok_trend = seq.trend <= TREND_STABLE
        member_v = ok_level and ok_trend
        member = member or member_v
        trend_rejected_all = trend_rejected_all and ok_level and not ok_trend
        horizon = max(horizon, seq.horizon)
        margin_v = (1.0 - PD_DELTA) - math.exp(min(seq.wmax_log, 0.0))
        if member_v:
            best_margin = max(best_margin, margin_v)
        per_v[v] = {"member": member_v, "ok_level": ok_level, "ok_trend": ok_trend,
                    "margin": margin_v, **seq.summary()}
    if member:
        margin, noise, flags = best_margin, NOISE_CLOSED_FORM, ()
    elif trend_rejected_all:
        worst = min(info["trend"] for info in per_v.values())
        margin, noise, flags = worst - TREND_STABLE, NOISE_TREND, ("trend-reject",)
    else:
        margin = min(-info["margin"] for info in per_v.values())
        noise, flags = NOISE_CLOSED_FORM, ()
    return ClassVerdict(
        class_name="PD", member=member, margin=margin, horizon=horizon,
        diagnostics={"per_v": per_v}, flags=flags, noise=noise,
    )


# ---------------------------------------------------------------------------
# Convolution-ratio classes: S, OS, S(gamma)
# ---------------------------------------------------------------------------

def self_convolution_ratio(
    model: TailModel,
    n: int = 2,
    grid: GridSpec = DEFAULT_GRID,
) -> tuple[np.ndarray, np.ndarray]:
    """F̄^{*n}(x_k)/F̄(x_k) over the grid; inf where only the denominator left."""
    if model.support is not Support.NONNEGATIVE:
        raise UnsupportedSupportError("self-convolution ratios need nonnegative support")
    if n < 2:
        raise InvalidParameterError("need n >= 2")
    h = calculus.power(model, n, table_hi=grid.horizon * 4.0)
    xs = grid.points()
    num = np.asarray([h.sf(float(x)) for x in xs])
    den = model.sf(xs)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(den > 0.0, num / np.maximum(den, 1e-320), np.inf)
        ratio = np.where((den == 0.0) & (num == 0.0), np.nan, ratio)
    return xs, ratio


def _conv_sequence(model: TailModel, grid: GridSpec) -> RatioSequence:
    from .ratios import build_sequence

    h = calculus.power(model, 2, table_hi=grid.horizon * 4.0)
    xs = grid.points()
    with np.errstate(divide="ignore"):
        num_log = np.asarray([math.log(v) if (v := h.sf(float(x))) > 0.0 else -math.inf
                              for x in xs])
    den_log = model.log_sf(xs)
    # quadrature values stop at underflow even when the closed-form
    # denominator reaches deeper
    den_log = np.where(np.isfinite(num_log), den_log, -math.inf)
    return build_sequence(xs, num_log, den_log)


def _s_window_verdict(seq: RatioSequence, target: float, tau: float) -> tuple[bool, float, str]:
    wmax = math.exp(min(seq.wmax_log, 700.0))
    wmin = math.exp(min(seq.wmin_log, 700.0))
    lo, hi = target - tau, target + tau
    member = lo <= wmin and wmax <= hi
    margin = min(wmin - lo, hi - wmax)
    regime = "inside"
    if not member:
        if wmin < lo and wmax <= hi and seq.trend > 0:
            regime = "approaching-from-below"
        elif wmax > hi and wmin >= lo and seq.trend < 0:
            regime = "approaching-from-above"
        else:
            regime = "outside"
    return member, margin, regime


def is_S(model: TailModel, grid: GridSpec = DEFAULT_GRID) -> ClassVerdict:
    """Subexponential: the 2-fold convolution ratio window brackets 2.

    Slowly converging models (the ratio still approaching 2 at the
    horizon) are retried on extended grids evaluated through closed
    forms; the verdict then carries an extended-horizon flag.
    """
    if model.right_endpoint < math.inf:
        return _finite_right_verdict("S", model)
    if model.support is not Support.NONNEGATIVE:
        raise UnsupportedSupportError("subexponential test needs nonnegative support")
    flags: tuple[str, ...] = ()
    attempt_grids = [grid]
    if model.log_sf_fn is not None:
        attempt_grids += [grid.extended(h) for h in S_EXTENSION_HORIZONS
                          if h > grid.horizon]
    last = None
    for i, g in enumerate(attempt_grids):
        seq = _conv_sequence(model, g)
        member, margin, regime = _s_window_verdict(seq, 2.0, S_TAU)
        last = (seq, member, margin, regime, g)
        if member or not regime.startswith("approaching"):
            break
    seq, member, margin, regime, g_used = last
    if g_used is not grid:
        flags += ("extended-horizon",)
    if member and abs(seq.window_trend) > FLAG_TREND:
        flags += ("slow-convergence",)
    if not member:
        wmax = math.exp(min(seq.wmax_log, 700.0))
        wmin = math.exp(min(seq.wmin_log, 700.0))
        margin = max((2.0 - S_TAU) - wmax, wmin - (2.0 + S_TAU), 0.0)
    return ClassVerdict(
        class_name="S", member=member, margin=margin, horizon=seq.horizon,
        diagnostics={"regime": regime, **seq.summary()},
        flags=flags, noise=NOISE_QUADRATURE,
    )


def is_OS(model: TailModel, grid: GridSpec = DEFAULT_GRID) -> ClassVerdict:
    """Generalized subexponential: convolution ratio bounded, tame trend."""
    if model.right_endpoint < math.inf:
        return _finite_right_verdict("OS", model)
    if model.support is not Support.NONNEGATIVE:
        raise UnsupportedSupportError("convolution-ratio test needs nonnegative support")
    seq = _conv_sequence(model, grid)
    ok_ceiling = seq.wmax_log <= _LOG_CEILING
    ok_trend = seq.trend <= TREND_BOUNDED
    member = ok_ceiling and ok_trend
    if not ok_ceiling:
        margin = seq.wmax_log - _LOG_CEILING
    elif not ok_trend:
        margin = seq.trend - TREND_BOUNDED
    else:
        margin = _LOG_CEILING - seq.wmax_log
    return ClassVerdict(
        class_name="OS", member=member, margin=margin, horizon=seq.horizon,
        diagnostics=seq.summary(),
        flags=() if ok_trend else ("unbounded-trend",),
        noise=NOISE_TREND if (ok_ceiling and not ok_trend) else NOISE_QUADRATURE,
    )


def laplace_transform(model: TailModel, gamma: float, grid: GridSpec = DEFAULT_GRID) -> LaplaceTransform:
    """Exponential moment int e^{gamma y} dF; exact 1 at gamma = 0."""
    if gamma < 0:
        raise InvalidParameterError("gamma must be >= 0")
    if gamma == 0.0:
        return LaplaceTransform(gamma=0.0, value=1.0)
    if not model.has_measure:
        raise UnsupportedSupportError("transform integrates dF; model needs a measure")
    total = sum(w * math.exp(min(gamma * a, 700.0)) for a, w in model.atoms)
    if total > TRANSFORM_CAP:
        raise TransformDivergentError(f"atom part alone exceeds {TRANSFORM_CAP:g}")
    if model.pdf_fn is not None:
        le = model.left_edge
        edges = np.unique(np.concatenate(
            ([le], le + np.geomspace(1e-6, grid.horizon - min(le, 0.0), grid.count + 8))))

        def fn(y):
            with np.errstate(over="ignore", invalid="ignore"):
                return np.exp(gamma * y + model.log_pdf(y))

        crossed, value, partials = cumulative_until(fn, edges, TRANSFORM_CAP,
                                                    breakpoints=model.breakpoints)
        increments = np.diff(np.concatenate(([0.0], partials)))
        growing = len(increments) >= 4 and bool(np.all(np.diff(increments[-4:]) > 0))
        if crossed or growing:
            raise TransformDivergentError(
                f"exponential moment at gamma={gamma:g} diverges at the horizon"
            )
        total += value
    return LaplaceTransform(gamma=gamma, value=total)


def is_Sgamma(model: TailModel, gamma: float, grid: GridSpec = DEFAULT_GRID) -> ClassVerdict:
    """Convolution-equivalent class: ratio -> 2 F̂(gamma) plus the L(gamma) shift law."""
    if gamma == 0.0:
        base = is_S(model, grid)
        return replace(base, class_name="Sgamma(0)")
    if model.right_endpoint < math.inf:
        return _finite_right_verdict(f"Sgamma({gamma:g})", model)
    transform = laplace_transform(model, gamma, grid)   # raises when divergent
    lg = is_Lgamma(model, gamma, grid=grid)
    seq = _conv_sequence(model, grid)
    target = 2.0 * transform.value
    member_w, margin_w, regime = _s_window_verdict(seq, target, S_TAU * target / 2.0)
    member = member_w and lg.member
    return ClassVerdict(
        class_name=f"Sgamma({gamma:g})", member=member,
        margin=min(margin_w, lg.margin), horizon=seq.horizon,
        diagnostics={"transform": transform.value, "regime": regime,
                     "lgamma_member": lg.member, **seq.summary()},
        noise=NOISE_QUADRATURE,
    )


# ---------------------------------------------------------------------------
# Composite classes and the full map
# ---------------------------------------------------------------------------

def _conjoin(name: str, *factors: ClassVerdict) -> ClassVerdict:
    member = all(f.member for f in factors)
    margin = min(f.margin for f in factors)
    flags = tuple(sorted({fl for f in factors for fl in f.flags}))
    return ClassVerdict(
        class_name=name, member=member, margin=margin,
        horizon=max(f.horizon for f in factors),
        diagnostics={f.class_name: {"member": f.member, "margin": f.margin}
                     for f in factors},
        flags=flags,
        noise=max(f.noise for f in factors),
    )


@dataclass(frozen=True)
class ClassificationResult:
    model_name: str
    verdicts: dict[str, ClassVerdict]
    anomalies: tuple[str, ...]
    horizon: float

    def members(self) -> dict[str, bool]:
        return {k: v.member for k, v in self.verdicts.items()}


_INCLUSIONS = [
    ("S", "OS"), ("L", "OL"), ("S", "L"), ("L", "H"),
    ("A", "T"), ("OA", "OT"), ("A", "OA"), ("T", "OT"),
]


def classify_all(model: TailModel, grid: GridSpec = DEFAULT_GRID) -> ClassificationResult:
    """Every unary estimator plus the intersection classes.

    Per-class errors become non-member verdicts with an ``error`` flag;
    the rest of the map still runs.  Inclusion-lattice violations are
    reported as anomaly strings, never silently repaired.
    """
    verdicts: dict[str, ClassVerdict] = {}

    def run(name: str, fn, *args, **kwargs):
        try:
            verdicts[name] = fn(*args, **kwargs)
        except TailkitError as exc:
            verdicts[name] = ClassVerdict(
                class_name=name, member=False, margin=math.nan,
                horizon=grid.horizon, diagnostics={},
                flags=("error",), reason=f"{type(exc).__name__}: {exc}",
            )

    run("H", is_heavy, model, EPS_GRID_DEFAULT, grid)
    run("L", is_long, model, 1.0, grid)
    run("D", is_D, model, 0.5, grid)
    run("PD", is_PD, model, grid)
    run("OL", is_OL, model, T_GRID_DEFAULT, grid)
    run("OS", is_OS, model, grid)
    run("S", is_S, model, grid)

    verdicts["A"] = _conjoin("A", verdicts["S"], verdicts["PD"])
    verdicts["T"] = _conjoin("T", verdicts["L"], verdicts["PD"])
    verdicts["OA"] = _conjoin("OA", verdicts["OS"], verdicts["PD"])
    verdicts["OT"] = _conjoin("OT", verdicts["OL"], verdicts["PD"])
    verdicts["D_and_PD"] = _conjoin("D_and_PD", verdicts["D"], verdicts["PD"])
    verdicts["D_and_T"] = _conjoin("D_and_T", verdicts["D"], verdicts["T"])
    verdicts["L_and_OA"] = _conjoin("L_and_OA", verdicts["L"], verdicts["OA"])

    anomalies = []
    for small, big in _INCLUSIONS:
        if verdicts[small].member and not verdicts[big].member:
            anomalies.append(f"{small} member but {big} not: inclusion violated")
    if verdicts["D"].member and verdicts["L"].member and not verdicts["S"].member:
        anomalies.append("D∩L member but S not: inclusion violated")
    return ClassificationResult(
        model_name=model.name,
        verdicts=verdicts,
        anomalies=tuple(anomalies),
        horizon=grid.horizon,
    )
