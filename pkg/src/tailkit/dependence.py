"""Joint tail models and samplers for the supported dependence structures.

Couplings are limited to those whose joint exceedance has a closed form
with an explicit asymptotic-factorization constant:

- ``independent``:  P[X>x, Y>y] = F̄(x) Ḡ(y), constant 1;
- ``fgm(theta)``:   survival copula F̄ Ḡ (1 + theta F G), constant 1+theta;
- ``comonotone``:   min(F̄(x), Ḡ(y)); the factorization ratio diverges and
  is reported as such, never silently accepted.

theta = -1 drives the factorization constant to 0, which the dependent
closure results divide by; the model carries a violation flag instead of
rejecting construction (useful as a negative control).

Samplers are deterministic given a seed and splittable: parallel workers
should derive child streams with ``numpy.random.SeedSequence.spawn``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientSamplesError, InvalidParameterError, NoSamplerError
from .models import DEFAULT_GRID, GridSpec, TailModel
from .ratios import RatioSequence, _build

COUPLINGS = ("independent", "fgm", "comonotone")


@dataclass(frozen=True)
class JointTailModel:
    """Bivariate joint exceedance P[X > x, Y > y] with dependence metadata."""

    x: TailModel
    y: TailModel
    coupling: str = "independent"
    theta: float = 0.0
    flags: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if self.coupling not in COUPLINGS:
            raise InvalidParameterError(f"unknown coupling {self.coupling!r}")
        if self.coupling == "fgm" and not -1.0 <= self.theta <= 1.0:
            raise InvalidParameterError("FGM theta must lie in [-1, 1]")
        if self.coupling == "fgm" and self.theta == -1.0 and "sai-constant-zero" not in self.flags:
            object.__setattr__(self, "flags", self.flags + ("sai-constant-zero",))

    # -- joint exceedance -------------------------------------------------

    @property
    def sai_constant(self) -> float | None:
        """Limit of P[X>x, Y>y] / (F̄(x) Ḡ(y)); None when it diverges."""
        if self.coupling == "independent":
            return 1.0
        if self.coupling == "fgm":
            return 1.0 + self.theta
        return None

    def joint_sf(self, x, y):
        fx = self.x.sf(np.asarray(x, dtype=float))
        gy = self.y.sf(np.asarray(y, dtype=float))
        if self.coupling == "independent":
            return fx * gy
        if self.coupling == "fgm":
            return fx * gy * (1.0 + self.theta * (1.0 - fx) * (1.0 - gy))
        return np.minimum(fx, gy)

    def joint_log_sf(self, x, y):
        lf = self.x.log_sf(np.asarray(x, dtype=float))
        lg = self.y.log_sf(np.asarray(y, dtype=float))
        if self.coupling == "independent":
            return lf + lg
        if self.coupling == "fgm":
            with np.errstate(invalid="ignore"):
                corr = np.log1p(self.theta * (1.0 - np.exp(lf)) * (1.0 - np.exp(lg)))
            return lf + lg + np.where(np.isfinite(corr), corr, -np.inf)
        return np.minimum(lf, lg)

    def diag_sf(self, x):
        return self.joint_sf(x, x)

    def diag_log_sf(self, x):
        return self.joint_log_sf(x, x)

    @property
    def diag_pdf(self):
        """-d/dx P[X > x, Y > x] where marginal densities exist."""
        if self.x.pdf_fn is None or self.y.pdf_fn is None:
            return None
        if self.coupling == "comonotone":
            return None
        f_sf, g_sf = self.x.sf, self.y.sf
        f_pdf, g_pdf = self.x.pdf, self.y.pdf
        if self.coupling == "independent":
            def dd(x):
                return f_pdf(x) * g_sf(x) + f_sf(x) * g_pdf(x)
            return dd
        theta = self.theta

        def dd(x):
            u, w = f_sf(x), g_sf(x)
            fu, gw = f_pdf(x), g_pdf(x)
            # d/du [u w (1 + th (1-u)(1-w))] = w (1 + th (1-w)(1-2u)), sym. in w
            return fu * w * (1.0 + theta * (1.0 - w) * (1.0 - 2.0 * u)) + \
                gw * u * (1.0 + theta * (1.0 - u) * (1.0 - 2.0 * w))
        return dd

    # -- sampling ----------------------------------------------------------

    def sample(self, n: int, seed_or_rng) -> np.ndarray:
        """n joint draws, shape (n, 2); deterministic given the seed."""
        rng = (seed_or_rng if isinstance(seed_or_rng, np.random.Generator)
               else np.random.default_rng(seed_or_rng))
        if self.x.sf_inv_fn is None and self.x.atoms == ():
            # generic bisection inversion exists but is too slow for draws
            raise NoSamplerError(f"marginal {self.x.name} lacks a usable quantile")
        if self.coupling == "independent":
            u = rng.random(n)
            v = rng.random(n)
        elif self.coupling == "comonotone":
            u = rng.random(n)
            v = u
        else:
            # FGM conditional inversion: V | U=u solves a v^2 - (1+a) v + w = 0
            # with a = theta (1 - 2u); the stable root stays in [0, 1].
            u = rng.random(n)
            w = rng.random(n)
            a = self.theta * (1.0 - 2.0 * u)
            b = 1.0 + a
            disc = np.sqrt(np.maximum(b * b - 4.0 * a * w, 0.0))
            v = np.where(np.abs(a) < 1e-12, w, 2.0 * w / (b + disc))
        xs = self.x.sf_inv(1.0 - u)
        ys = self.y.sf_inv(1.0 - v)
        return np.column_stack([xs, ys])


def independent(x: TailModel, y: TailModel) -> JointTailModel:
    return JointTailModel(x, y, "independent")


def fgm(x: TailModel, y: TailModel, theta: float) -> JointTailModel:
    return JointTailModel(x, y, "fgm", theta=theta)


def comonotone(x: TailModel, y: TailModel) -> JointTailModel:
    return JointTailModel(x, y, "comonotone")


# ---------------------------------------------------------------------------
# Factorization-limit estimate
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SAIEstimate:
    value: float             # deepest-window estimate of joint(x,x) / (F̄ Ḡ)
    no_limit: bool
    sequence: RatioSequence
    expected: float | None
    flags: tuple[str, ...]


def sai_limit(joint: JointTailModel, grid: GridSpec = DEFAULT_GRID) -> SAIEstimate:
    """Window estimate of joint(x, x) / (F̄(x) Ḡ(x)).

    Divergence (comonotone coupling) is reported through ``no_limit``, not
    raised: the caller sees the trend diagnostics either way.
    """
    xs = grid.points()
    num = joint.diag_log_sf(xs)
    den = joint.x.log_sf(xs) + joint.y.log_sf(xs)
    seq = _build(xs, num, den)
    diverging = seq.trend > 1e-2
    value = float(np.exp(seq.log_ratios[-1]))
    return SAIEstimate(
        value=value,
        no_limit=bool(diverging),
        sequence=seq,
        expected=joint.sai_constant,
        flags=joint.flags + (("no-limit",) if diverging else ()),
    )


# ---------------------------------------------------------------------------
# Conditional-ratio diagnostic
# ---------------------------------------------------------------------------

def conditional_ratio_diag(
    joint: JointTailModel,
    x_grid,
    t_fractions=(0.25, 0.5, 0.75),
    *,
    n_samples: int = 200_000,
    seed: int = 0,
    min_hits: int = 100,
) -> dict:
    """Monte Carlo table of P[X_j > x - t | X_i in bin(t)] / P[X_j > x - t].

    The conditioning points are t = frac * x for each fraction, so the
    table sweeps the relevant range up to x at every level.  Conditioning
    on the null event X_i = t is regularized by a symmetric bin around t
    grown until it holds ``min_hits`` draws; the bin width is reported per
    cell.  This samples the uniformity diagnostic, it does not prove
    uniformity in t.
    """
    draws = joint.sample(n_samples, seed)
    rows = []
    for x in x_grid:
        for frac in t_fractions:
            t = frac * x
            if not 0 < t <= x:
                continue
            for (i, j) in ((0, 1), (1, 0)):
                xi = draws[:, i]
                xj = draws[:, j]
                marginal = joint.y if j == 1 else joint.x
                denom = marginal.sf(x - t)
                if denom <= 0:
                    continue
                width = max(t * 0.05, 1e-3)
                hits = np.zeros(0, dtype=bool)
                for _ in range(24):
                    in_bin = np.abs(xi - t) <= width / 2
                    if int(in_bin.sum()) >= min_hits:
                        hits = in_bin
                        break
                    width *= 2.0
                if hits.size == 0 or int(hits.sum()) < min_hits:
                    raise InsufficientSamplesError(
                        f"bin at t={t} under {min_hits} hits even at width {width:g}"
                    )
                cond = float(np.mean(xj[hits] > x - t))
                rows.append({
                    "x": float(x), "t": float(t), "t_fraction": float(frac),
                    "roles": (i, j),
                    "ratio": cond / denom, "hits": int(hits.sum()),
                    "bin_width": width,
                })
    ratios = np.asarray([r["ratio"] for r in rows])
    xs = np.asarray([r["x"] for r in rows])
    top = ratios[xs == xs.max()].max()
    bottom = ratios[xs == xs.min()].max()
    unbounded = bool(top > 4.0 * max(bottom, 1.0))
    return {
        "rows": rows,
        "max_ratio": float(ratios.max()),
        "unbounded_trend": unbounded,
        "n_samples": n_samples,
        "seed": seed,
    }


def spearman_rho(samples: np.ndarray) -> float:
    from scipy.stats import spearmanr

    return float(spearmanr(samples[:, 0], samples[:, 1]).statistic)
