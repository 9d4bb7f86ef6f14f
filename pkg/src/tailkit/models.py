"""Evaluable survival-function models and the grids estimators run on.

The package currency is :class:`TailModel`: an immutable survival function
F̄(x) = P[X > x] with support metadata, an optional closed-form density,
an optional closed-form log-survival (used by ratio estimators to reach
far beyond double-precision underflow), optional point masses, and the set
of points where the function is not smooth (quadrature breakpoints).

Conventions
-----------
- ``sf`` is right-continuous: ``sf(x) = P[X > x]``.
- Survival values below ``UNDERFLOW`` (1e-300) are clamped to exactly 0;
  closed-form families additionally expose ``log_sf`` so dilation/shift
  ratios stay exact where the raw value has underflowed.
- ``left_edge`` is the largest x with F̄(x) = 1 (distribution left
  endpoint); ``right_endpoint`` is sup{x : F̄(x) > 0}, possibly inf.
- ``atoms`` lists (location, mass) pairs of the discrete part;
  ``discontinuities`` (the positive atom locations) is what the product
  convolution dichotomy cares about.

Models are pure and immutable after construction, safe for concurrent
shared reads.
"""

from __future__ import annotations

import enum
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import log_ndtr, logsumexp, ndtr, ndtri

from .errors import EmptySampleError, InvalidParameterError

UNDERFLOW = 1e-300
_SQRT2 = math.sqrt(2.0)


class Support(enum.Enum):
    NONNEGATIVE = "nonnegative-half-line"
    REAL = "whole-real-line"


# ---------------------------------------------------------------------------
# Grid
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    """Geometric evaluation grid x_k = x0 * ratio**k, k = 0..count.

    The default (x0=1, ratio=sqrt(2), count=53) tops out near 1e8: deep
    enough for power-law ratios to stabilize, shallow enough to stay fast.
    """

    x0: float = 1.0
    ratio: float = _SQRT2
    count: int = 53

    def __post_init__(self):
        if self.x0 <= 0:
            raise InvalidParameterError("grid x0 must be positive")
        if self.ratio <= 1:
            raise InvalidParameterError("grid ratio must exceed 1")
        if self.count < 16:
            raise InvalidParameterError("grid count must be at least 16")

    @property
    def horizon(self) -> float:
        return self.x0 * self.ratio ** self.count

    def points(self) -> np.ndarray:
        return self.x0 * self.ratio ** np.arange(self.count + 1)

    def extended(self, horizon: float) -> "GridSpec":
        """Same x0/ratio, count grown until the horizon is reached."""
        need = int(math.ceil(math.log(horizon / self.x0) / math.log(self.ratio)))
        return GridSpec(self.x0, self.ratio, max(self.count, need))


DEFAULT_GRID = GridSpec()


# ---------------------------------------------------------------------------
# TailModel
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TailModel:
    """An evaluable distribution tail with support metadata."""

    name: str
    support: Support
    left_edge: float
    right_endpoint: float
    sf_fn: Callable[[np.ndarray], np.ndarray]
    log_sf_fn: Callable[[np.ndarray], np.ndarray] | None = None
    pdf_fn: Callable[[np.ndarray], np.ndarray] | None = None
    atoms: tuple[tuple[float, float], ...] = ()
    breakpoints: tuple[float, ...] = ()
    sf_inv_fn: Callable[[np.ndarray], np.ndarray] | None = None
    log_pdf_fn: Callable[[np.ndarray], np.ndarray] | None = None

    # -- evaluation -----------------------------------------------------

    def sf(self, x):
        x = np.asarray(x, dtype=float)
        v = np.clip(np.asarray(self.sf_fn(x), dtype=float), 0.0, 1.0)
        v = np.where(v < UNDERFLOW, 0.0, v)
        return float(v) if v.ndim == 0 else v

    def log_sf(self, x):
        x = np.asarray(x, dtype=float)
        if self.log_sf_fn is not None:
            v = np.minimum(np.asarray(self.log_sf_fn(x), dtype=float), 0.0)
        else:
            s = np.clip(np.asarray(self.sf_fn(x), dtype=float), 0.0, 1.0)
            with np.errstate(divide="ignore"):
                v = np.where(s > 0.0, np.log(np.maximum(s, 1e-320)), -np.inf)
        return float(v) if v.ndim == 0 else v

    def pdf(self, x):
        if self.pdf_fn is None:
            raise InvalidParameterError(f"model {self.name!r} has no density")
        x = np.asarray(x, dtype=float)
        v = np.maximum(np.asarray(self.pdf_fn(x), dtype=float), 0.0)
        return float(v) if v.ndim == 0 else v

    def log_pdf(self, x):
        """ln f(x); exact beyond density underflow for closed-form families."""
        if self.pdf_fn is None:
            raise InvalidParameterError(f"model {self.name!r} has no density")
        x = np.asarray(x, dtype=float)
        if self.log_pdf_fn is not None:
            v = np.asarray(self.log_pdf_fn(x), dtype=float)
        else:
            d = np.maximum(np.asarray(self.pdf_fn(x), dtype=float), 0.0)
            with np.errstate(divide="ignore"):
                v = np.where(d > 0.0, np.log(np.maximum(d, 1e-320)), -np.inf)
        return float(v) if v.ndim == 0 else v

    def cdf(self, x):
        return 1.0 - self.sf(x)

    def sf_inv(self, s):
        """x with F̄(x) = s; closed form where the family has one, else bisection."""
        if self.sf_inv_fn is not None:
            v = np.asarray(self.sf_inv_fn(np.asarray(s, dtype=float)), dtype=float)
            return float(v) if v.ndim == 0 else v
        return _sf_inv_bisect(self, s)

    # -- metadata -------------------------------------------------------

    @property
    def density_available(self) -> bool:
        return self.pdf_fn is not None

    @property
    def discontinuities(self) -> tuple[float, ...]:
        """D[F]: positive jump points of the distribution."""
        return tuple(a for a, _ in self.atoms if a > 0)

    @property
    def has_measure(self) -> bool:
        """True when Stieltjes integration against dF is possible."""
        return self.pdf_fn is not None or bool(self.atoms)

    def validate_grid(self, grid: GridSpec, n_pairs: int = 1000, seed: int = 0) -> None:
        """Assert monotonicity and range on random grid pairs (invariant check)."""
        rng = np.random.default_rng(seed)
        lo = math.log(max(grid.x0, 1e-6) * 0.5)
        hi = math.log(grid.horizon)
        xs = np.exp(rng.uniform(lo, hi, size=(n_pairs, 2)))
        a, b = np.minimum(xs[:, 0], xs[:, 1]), np.maximum(xs[:, 0], xs[:, 1])
        sa, sb = self.sf(a), self.sf(b)
        if np.any(sa + 1e-15 < sb):
            raise AssertionError(f"{self.name}: survival not nonincreasing")
        if np.any((sa < 0) | (sa > 1) | (sb < 0) | (sb > 1)):
            raise AssertionError(f"{self.name}: survival outside [0, 1]")

    def __repr__(self):  # keep reports compact
        return f"TailModel({self.name})"


def _sf_inv_bisect(model: TailModel, s) -> float | np.ndarray:
    def solve_one(target: float) -> float:
        if not 0.0 < target < 1.0:
            raise InvalidParameterError("sf_inv target must lie in (0, 1)")
        lo = model.left_edge if np.isfinite(model.left_edge) else -1.0
        hi = max(lo + 1.0, 2.0 * abs(lo) + 1.0)
        while model.sf(hi) > target:
            hi *= 2.0
            if hi > 1e300:
                break
        for _ in range(200):
            m = 0.5 * (lo + hi)
            if model.sf(m) > target:
                lo = m
            else:
                hi = m
        return 0.5 * (lo + hi)

    arr = np.asarray(s, dtype=float)
    if arr.ndim == 0:
        return solve_one(float(arr))
    return np.asarray([solve_one(float(v)) for v in arr.ravel()]).reshape(arr.shape)


# ---------------------------------------------------------------------------
# Analytic families
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AnalyticFamily:
    """Declarative family spec: kind plus keyword parameters.

    Kinds: pareto(alpha, scale=1), exponential(lam), weibull(shape, rate=1),
    lognormal(mu=0, sigma=1), truncated_uniform(b=1), slow_log(),
    mixture(components, weights), lattice(values, weights).
    """

    kind: str
    params: dict = field(default_factory=dict)


def _require_positive(name: str, value: float) -> float:
    value = float(value)
    if not (value > 0 and np.isfinite(value)):
        raise InvalidParameterError(f"{name} must be a positive finite real, got {value!r}")
    return value


def pareto(alpha: float, scale: float = 1.0) -> TailModel:
    """F̄(x) = min(1, (scale/x)^alpha); regularly varying with index -alpha."""
    alpha = _require_positive("alpha", alpha)
    scale = _require_positive("scale", scale)

    def sf(x):
        with np.errstate(divide="ignore"):
            return np.where(x <= scale, 1.0, (scale / np.maximum(x, scale)) ** alpha)

    def log_sf(x):
        return np.where(x <= scale, 0.0, -alpha * np.log(np.maximum(x, scale) / scale))

    def pdf(x):
        return np.where(x < scale, 0.0, alpha * scale**alpha / np.maximum(x, scale) ** (alpha + 1.0))

    return TailModel(
        name=f"pareto(alpha={alpha:g}, scale={scale:g})",
        support=Support.NONNEGATIVE,
        left_edge=scale,
        right_endpoint=np.inf,
        sf_fn=sf, log_sf_fn=log_sf, pdf_fn=pdf,
        breakpoints=(scale,),
        sf_inv_fn=lambda s: scale * s ** (-1.0 / alpha),
        log_pdf_fn=lambda x: np.where(
            np.asarray(x, dtype=float) < scale, -np.inf,
            math.log(alpha) + alpha * math.log(scale)
            - (alpha + 1.0) * np.log(np.maximum(x, scale))),
    )


def exponential(lam: float) -> TailModel:
    lam = _require_positive("lambda", lam)

    def sf(x):
        return np.where(x <= 0.0, 1.0, np.exp(-lam * np.maximum(x, 0.0)))

    return TailModel(
        name=f"exponential(lambda={lam:g})",
        support=Support.NONNEGATIVE,
        left_edge=0.0,
        right_endpoint=np.inf,
        sf_fn=sf,
        log_sf_fn=lambda x: -lam * np.maximum(np.asarray(x, dtype=float), 0.0),
        pdf_fn=lambda x: np.where(x < 0.0, 0.0, lam * np.exp(-lam * np.maximum(x, 0.0))),
        breakpoints=(0.0,),
        sf_inv_fn=lambda s: -np.log(s) / lam,
        log_pdf_fn=lambda x: np.where(
            np.asarray(x, dtype=float) < 0.0, -np.inf,
            math.log(lam) - lam * np.maximum(x, 0.0)),
    )


def weibull(shape: float, rate: float = 1.0) -> TailModel:
    """F̄(x) = exp(-rate * x**shape); heavy for shape < 1, super-exponential for shape > 1."""
    shape = _require_positive("shape", shape)
    rate = _require_positive("rate", rate)

    def sf(x):
        return np.where(x <= 0.0, 1.0, np.exp(-rate * np.maximum(x, 0.0) ** shape))

    def pdf(x):
        xs = np.maximum(x, 1e-320)
        return np.where(x <= 0.0, 0.0, rate * shape * xs ** (shape - 1.0) * np.exp(-rate * xs**shape))

    return TailModel(
        name=f"weibull(shape={shape:g}, rate={rate:g})",
        support=Support.NONNEGATIVE,
        left_edge=0.0,
        right_endpoint=np.inf,
        sf_fn=sf,
        log_sf_fn=lambda x: -rate * np.maximum(np.asarray(x, dtype=float), 0.0) ** shape,
        pdf_fn=pdf,
        breakpoints=(0.0,),
        sf_inv_fn=lambda s: (-np.log(s) / rate) ** (1.0 / shape),
        log_pdf_fn=lambda x: np.where(
            np.asarray(x, dtype=float) <= 0.0, -np.inf,
            math.log(rate * shape) + (shape - 1.0) * np.log(np.maximum(x, 1e-320))
            - rate * np.maximum(x, 1e-320) ** shape),
    )


def lognormal(mu: float = 0.0, sigma: float = 1.0) -> TailModel:
    sigma = _require_positive("sigma", sigma)
    mu = float(mu)

    def z(x):
        return (np.log(np.maximum(x, 1e-320)) - mu) / sigma

    def sf(x):
        return np.where(x <= 0.0, 1.0, ndtr(-z(x)))

    def log_sf(x):
        return np.where(x <= 0.0, 0.0, log_ndtr(-z(x)))

    def pdf(x):
        xs = np.maximum(x, 1e-320)
        return np.where(
            x <= 0.0, 0.0,
            np.exp(-0.5 * z(xs) ** 2) / (xs * sigma * math.sqrt(2.0 * math.pi)),
        )

    return TailModel(
        name=f"lognormal(mu={mu:g}, sigma={sigma:g})",
        support=Support.NONNEGATIVE,
        left_edge=0.0,
        right_endpoint=np.inf,
        sf_fn=sf, log_sf_fn=log_sf, pdf_fn=pdf,
        breakpoints=(0.0,),
        sf_inv_fn=lambda s: np.exp(mu + sigma * ndtri(1.0 - np.asarray(s, dtype=float))),
        log_pdf_fn=lambda x: np.where(
            np.asarray(x, dtype=float) <= 0.0, -np.inf,
            -0.5 * z(np.maximum(x, 1e-320)) ** 2
            - np.log(np.maximum(x, 1e-320) * sigma * math.sqrt(2.0 * math.pi))),
    )


def truncated_uniform(b: float = 1.0) -> TailModel:
    """Uniform on (0, b]: the bounded factor used by product-convolution checks."""
    b = _require_positive("b", b)

    def sf(x):
        return np.clip(1.0 - np.asarray(x, dtype=float) / b, 0.0, 1.0)

    def log_sf(x):
        v = np.clip(1.0 - np.asarray(x, dtype=float) / b, 0.0, 1.0)
        with np.errstate(divide="ignore"):
            return np.where(v > 0.0, np.log(np.maximum(v, 1e-320)), -np.inf)

    return TailModel(
        name=f"truncated_uniform(b={b:g})",
        support=Support.NONNEGATIVE,
        left_edge=0.0,
        right_endpoint=b,
        sf_fn=sf, log_sf_fn=log_sf,
        pdf_fn=lambda x: np.where((x <= 0.0) | (x >= b), 0.0, 1.0 / b),
        breakpoints=(0.0, b),
        sf_inv_fn=lambda s: b * (1.0 - np.asarray(s, dtype=float)),
    )


def slow_log() -> TailModel:
    """Slowly varying tail F̄(x) = 1/ln(e + x); infinite mean, in D but not P_D."""

    def sf(x):
        return 1.0 / np.log(math.e + np.maximum(x, 0.0))

    def pdf(x):
        xs = math.e + np.maximum(x, 0.0)
        return np.where(x < 0.0, 0.0, 1.0 / (xs * np.log(xs) ** 2))

    return TailModel(
        name="slow_log",
        support=Support.NONNEGATIVE,
        left_edge=0.0,
        right_endpoint=np.inf,
        sf_fn=sf,
        log_sf_fn=lambda x: -np.log(np.log(math.e + np.maximum(np.asarray(x, dtype=float), 0.0))),
        pdf_fn=pdf,
        breakpoints=(0.0,),
        sf_inv_fn=lambda s: np.exp(1.0 / np.asarray(s, dtype=float)) - math.e,
        log_pdf_fn=lambda x: np.where(
            np.asarray(x, dtype=float) < 0.0, -np.inf,
            -np.log(math.e + np.maximum(x, 0.0))
            - 2.0 * np.log(np.log(math.e + np.maximum(x, 0.0)))),
    )


def lattice(values: Sequence[float], weights: Sequence[float]) -> TailModel:
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if len(values) == 0 or len(values) != len(weights):
        raise InvalidParameterError("lattice needs matching non-empty values/weights")
    if np.any(weights <= 0) or abs(weights.sum() - 1.0) > 1e-12:
        raise InvalidParameterError("lattice weights must be positive and sum to 1")
    order = np.argsort(values)
    values, weights = values[order], weights[order]
    suffix = np.concatenate((np.cumsum(weights[::-1])[::-1], [0.0]))

    def sf(x):
        idx = np.searchsorted(values, np.asarray(x, dtype=float), side="right")
        return suffix[idx]

    return TailModel(
        name=f"lattice({values.tolist()})",
        support=Support.NONNEGATIVE if values.min() >= 0 else Support.REAL,
        left_edge=float(values.min()),
        right_endpoint=float(values.max()),
        sf_fn=sf,
        atoms=tuple(zip(values.tolist(), weights.tolist())),
        breakpoints=tuple(values.tolist()),
    )


def point_mass(at: float) -> TailModel:
    m = lattice([at], [1.0])
    return replace(m, name=f"point_mass({at:g})")


def finite_mixture(components: Sequence[TailModel], weights: Sequence[float]) -> TailModel:
    weights = np.asarray(weights, dtype=float)
    if len(components) != len(weights) or len(components) < 2:
        raise InvalidParameterError("mixture needs >= 2 components with matching weights")
    if np.any(weights <= 0) or np.any(weights >= 1) or abs(weights.sum() - 1.0) > 1e-12:
        raise InvalidParameterError("mixture weights must lie in (0,1) and sum to 1")
    comps = tuple(components)
    ws = tuple(float(w) for w in weights)

    def sf(x):
        return sum(w * c.sf(np.asarray(x, dtype=float)) for w, c in zip(ws, comps))

    def log_sf(x):
        logs = np.stack([np.log(w) + c.log_sf(x) for w, c in zip(ws, comps)])
        return logsumexp(logs, axis=0)

    pdf = None
    if all(c.pdf_fn is not None for c in comps):
        def pdf(x):
            return sum(w * c.pdf(np.asarray(x, dtype=float)) for w, c in zip(ws, comps))

    atoms: dict[float, float] = {}
    for w, c in zip(ws, comps):
        for a, m in c.atoms:
            atoms[a] = atoms.get(a, 0.0) + w * m
    bps = sorted({b for c in comps for b in c.breakpoints})
    return TailModel(
        name="mixture(" + ", ".join(f"{w:g}*{c.name}" for w, c in zip(ws, comps)) + ")",
        support=Support.REAL if any(c.support is Support.REAL for c in comps) else Support.NONNEGATIVE,
        left_edge=min(c.left_edge for c in comps),
        right_endpoint=max(c.right_endpoint for c in comps),
        sf_fn=sf,
        log_sf_fn=log_sf if all(c.log_sf_fn is not None for c in comps) else None,
        pdf_fn=pdf,
        atoms=tuple(sorted(atoms.items())),
        breakpoints=tuple(bps),
    )


_FAMILY_BUILDERS: dict[str, Callable[..., TailModel]] = {
    "pareto": pareto,
    "exponential": exponential,
    "weibull": weibull,
    "lognormal": lognormal,
    "truncated_uniform": truncated_uniform,
    "slow_log": slow_log,
    "lattice": lattice,
}


def make_family(spec: AnalyticFamily) -> TailModel:
    """Build the TailModel for an analytic family spec."""
    kind = spec.kind.lower()
    if kind == "mixture":
        comps = [make_family(c) if isinstance(c, AnalyticFamily) else c
                 for c in spec.params["components"]]
        return finite_mixture(comps, spec.params["weights"])
    try:
        builder = _FAMILY_BUILDERS[kind]
    except KeyError:
        raise InvalidParameterError(f"unknown family kind {spec.kind!r}") from None
    return builder(**spec.params)


# ---------------------------------------------------------------------------
# Empirical tails
# ---------------------------------------------------------------------------

def empirical_tail(samples: Sequence[float]) -> TailModel:
    """Step survival eval(x) = #{samples > x}/n from a non-empty sample."""
    arr = np.sort(np.asarray(samples, dtype=float))
    n = arr.size
    if n == 0:
        raise EmptySampleError("empirical tail needs at least one sample")

    def sf(x):
        idx = np.searchsorted(arr, np.asarray(x, dtype=float), side="right")
        return (n - idx) / n

    return TailModel(
        name=f"empirical(n={n})",
        support=Support.NONNEGATIVE if arr[0] >= 0 else Support.REAL,
        left_edge=float(arr[0]),
        right_endpoint=float(arr[-1]),
        sf_fn=sf,
    )


# ---------------------------------------------------------------------------
# Transforms
# ---------------------------------------------------------------------------

def shift(model: TailModel, offset: float) -> TailModel:
    """Tail of X + offset.  A negative offset yields real-line support."""
    offset = float(offset)
    le = model.left_edge + offset
    return TailModel(
        name=f"shift({model.name}, {offset:+g})",
        support=Support.REAL if le < 0 else model.support,
        left_edge=le,
        right_endpoint=model.right_endpoint + offset,
        sf_fn=lambda x: model.sf(np.asarray(x, dtype=float) - offset),
        log_sf_fn=(None if model.log_sf_fn is None
                   else lambda x: model.log_sf(np.asarray(x, dtype=float) - offset)),
        pdf_fn=(None if model.pdf_fn is None
                else lambda x: model.pdf(np.asarray(x, dtype=float) - offset)),
        atoms=tuple((a + offset, w) for a, w in model.atoms),
        breakpoints=tuple(b + offset for b in model.breakpoints),
    )


def scale_tail(model: TailModel, c: float) -> TailModel:
    """Model with survival min(1, c * F̄): the strong-equivalence companion.

    For c < 1 the deficit 1-c sits as an atom at the left edge; for c > 1
    the survival saturates at 1 until F̄ crosses 1/c.
    """
    c = _require_positive("c", c)
    if c == 1.0:
        return model
    le = model.left_edge
    if c < 1.0:
        def sf(x):
            x = np.asarray(x, dtype=float)
            return np.where(x < le, 1.0, c * model.sf(np.maximum(x, le)))

        def log_sf(x):
            x = np.asarray(x, dtype=float)
            return np.where(x < le, 0.0, math.log(c) + model.log_sf(np.maximum(x, le)))

        pdf = None if model.pdf_fn is None else (lambda x: c * model.pdf(x))
        atoms = dict(model.atoms)
        atoms[le] = atoms.get(le, 0.0) * c + (1.0 - c)
        scaled = {a: (w * c if a != le else atoms[le]) for a, w in atoms.items()}
        return TailModel(
            name=f"scale_tail({model.name}, {c:g})",
            support=model.support,
            left_edge=le,
            right_endpoint=model.right_endpoint,
            sf_fn=sf, log_sf_fn=log_sf if model.log_sf_fn is not None else None,
            pdf_fn=pdf,
            atoms=tuple(sorted(scaled.items())),
            breakpoints=tuple(sorted(set(model.breakpoints) | {le})),
        )
    # c > 1: survival stays 1 until F̄ = 1/c
    xc = model.sf_inv(1.0 / c)

    def sf(x):
        return np.minimum(1.0, c * model.sf(np.asarray(x, dtype=float)))

    def log_sf(x):
        return np.minimum(0.0, math.log(c) + model.log_sf(x))

    def pdf(x):
        x = np.asarray(x, dtype=float)
        return np.where(x <= xc, 0.0, c * model.pdf(x))

    return TailModel(
        name=f"scale_tail({model.name}, {c:g})",
        support=model.support,
        left_edge=max(model.left_edge, xc),
        right_endpoint=model.right_endpoint,
        sf_fn=sf,
        log_sf_fn=log_sf if model.log_sf_fn is not None else None,
        pdf_fn=None if model.pdf_fn is None else pdf,
        atoms=tuple((a, c * w) for a, w in model.atoms if a > xc),
        breakpoints=tuple(sorted(set(model.breakpoints) | {xc})),
    )


def clip_below(model: TailModel, eps: float) -> TailModel:
    """Tail of X ∨ eps: continuous part above eps plus an atom at eps."""
    eps = float(eps)
    mass = 1.0 - model.sf(eps)

    def sf(x):
        x = np.asarray(x, dtype=float)
        return np.where(x < eps, 1.0, model.sf(np.maximum(x, eps)))

    atoms = {a: w for a, w in model.atoms if a > eps}
    if mass > 0:
        atoms[eps] = mass
    return TailModel(
        name=f"clip_below({model.name}, {eps:g})",
        support=model.support if eps < 0 else Support.NONNEGATIVE,
        left_edge=max(model.left_edge, eps),
        right_endpoint=model.right_endpoint,
        sf_fn=sf,
        pdf_fn=(None if model.pdf_fn is None
                else lambda x: np.where(np.asarray(x, dtype=float) <= eps, 0.0, model.pdf(x))),
        atoms=tuple(sorted(atoms.items())),
        breakpoints=tuple(sorted({b for b in model.breakpoints if b > eps} | {eps})),
    )


def clip_above(model: TailModel, cap: float) -> TailModel:
    """Tail of X ∧ cap: continuous part below cap plus an atom at cap."""
    cap = float(cap)
    mass = model.sf(cap - 1e-300) if model.atoms else model.sf(cap)
    # For continuous models sf(cap-) == sf(cap); with atoms at cap include them.
    mass = float(mass + sum(w for a, w in model.atoms if a == cap))

    def sf(x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= cap, 0.0, model.sf(x))

    atoms = {a: w for a, w in model.atoms if a < cap}
    if mass > 0:
        atoms[cap] = mass
    return TailModel(
        name=f"clip_above({model.name}, {cap:g})",
        support=model.support,
        left_edge=min(model.left_edge, cap),
        right_endpoint=cap,
        sf_fn=sf,
        pdf_fn=(None if model.pdf_fn is None
                else lambda x: np.where(np.asarray(x, dtype=float) >= cap, 0.0, model.pdf(x))),
        atoms=tuple(sorted(atoms.items())),
        breakpoints=tuple(sorted({b for b in model.breakpoints if b < cap} | {cap})),
    )


def tabulated(model: TailModel, lo: float, hi: float, *, check_rtol: float = 1e-5) -> TailModel:
    """Accelerated twin backed by verified log-log interpolation tables.

    Used when an operator-produced tail (quadrature-backed) is fed into
    further operators; accuracy-critical call sites keep the raw model.
    Tables are parameterized in the offset from the left support edge so
    the edge kink of sums and products interpolates cleanly.
    """
    from .quadrature import LogLogTable

    shift = model.left_edge if np.isfinite(model.left_edge) and model.left_edge > 0 else 0.0
    sf_tab = LogLogTable(model.sf, lo, hi, shift=shift, check_rtol=check_rtol)
    pdf_tab = None
    if model.pdf_fn is not None:
        pdf_tab = LogLogTable(model.pdf, lo, hi, shift=shift, check_rtol=check_rtol)
    return replace(
        model,
        name=f"tab({model.name})",
        sf_fn=sf_tab,
        log_sf_fn=None,
        pdf_fn=pdf_tab,
        log_pdf_fn=None,
    )


# ---------------------------------------------------------------------------
# Discontinuity gap (product-convolution dichotomy diagnostic)
# ---------------------------------------------------------------------------

def discontinuity_gap(g: TailModel, d: float, x: float) -> float:
    """Ḡ(x/d) - Ḡ((x+1)/d): the mass G puts on (x/d, (x+1)/d]."""
    if not d > 0:
        raise InvalidParameterError("discontinuity gap needs d > 0")
    return max(0.0, g.sf(x / d) - g.sf((x + 1.0) / d))
