"""The reference corpus: models with analytically known class memberships.

Each entry carries the family spec (so corpora round-trip through JSON
config files), the expected verdict for every class the classifier
reports, and hand annotations used by the verification harness (density
regularity declarations, known Matuszewska indices).

Config file schema (JSON)::

    {"entries": [
        {"id": "pareto2", "family": "pareto", "params": {"alpha": 2.0}},
        {"id": "mix",     "family": "mixture",
         "params": {"components": [
                        {"family": "pareto", "params": {"alpha": 2.0}},
                        {"family": "pareto", "params": {"alpha": 4.0}}],
                    "weights": [0.5, 0.5]}}
    ]}

Unknown fields are rejected; families and parameters are validated by the
model constructors.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .errors import ConfigError, InvalidParameterError
from .models import AnalyticFamily, TailModel, make_family

_ALL_TRUE = dict(H=True, L=True, D=True, PD=True, OL=True, OS=True, S=True,
                 A=True, T=True, OA=True, OT=True)
_ALL_FALSE = {k: False for k in _ALL_TRUE}


@dataclass(frozen=True)
class CorpusEntry:
    id: str
    spec: AnalyticFamily
    known: dict[str, bool]
    beta: float | None = None           # analytically known lower index
    alpha: float | None = None
    bounded_increase_density: bool = False   # declared, never tested numerically
    notes: str = ""
    _model: list = field(default_factory=list, compare=False, repr=False)

    def model(self) -> TailModel:
        if not self._model:
            self._model.append(make_family(self.spec))
        return self._model[0]


def _mixture_spec() -> AnalyticFamily:
    return AnalyticFamily("mixture", {
        "components": [AnalyticFamily("pareto", {"alpha": 2.0}),
                       AnalyticFamily("pareto", {"alpha": 4.0})],
        "weights": [0.5, 0.5],
    })


DEFAULT_CORPUS: tuple[CorpusEntry, ...] = (
    CorpusEntry("pareto2", AnalyticFamily("pareto", {"alpha": 2.0}),
                dict(_ALL_TRUE), beta=2.0, alpha=2.0, bounded_increase_density=True,
                notes="regularly varying, index 2"),
    CorpusEntry("pareto2.5", AnalyticFamily("pareto", {"alpha": 2.5}),
                dict(_ALL_TRUE), beta=2.5, alpha=2.5, bounded_increase_density=True),
    CorpusEntry("pareto3", AnalyticFamily("pareto", {"alpha": 3.0}),
                dict(_ALL_TRUE), beta=3.0, alpha=3.0, bounded_increase_density=True),
    CorpusEntry("exponential1", AnalyticFamily("exponential", {"lam": 1.0}),
                {**_ALL_FALSE, "PD": True, "OL": True, "OT": True},
                beta=math.inf, alpha=math.inf,
                notes="light tail; lands in the generalized long-tailed "
                      "positively-decreasing class without being heavy"),
    CorpusEntry("weibull0.5", AnalyticFamily("weibull", {"shape": 0.5}),
                {**_ALL_TRUE, "D": False}, beta=math.inf, alpha=math.inf,
                notes="heavy stretched-exponential tail"),
    CorpusEntry("weibull2", AnalyticFamily("weibull", {"shape": 2.0}),
                {**_ALL_FALSE, "PD": True}, beta=math.inf, alpha=math.inf,
                notes="Gaussian-type tail: even the shift ratio explodes"),
    CorpusEntry("lognormal", AnalyticFamily("lognormal", {"mu": 0.0, "sigma": 1.0}),
                {**_ALL_TRUE, "D": False}, beta=math.inf, alpha=math.inf),
    CorpusEntry("paretomix", _mixture_spec(),
                dict(_ALL_TRUE), beta=2.0, alpha=2.0,
                notes="tail dominated by the heavier mixture component"),
    CorpusEntry("slowvary", AnalyticFamily("slow_log", {}),
                {**_ALL_FALSE, "H": True, "L": True, "D": True, "OL": True,
                 "OS": True, "S": True},
                beta=0.0, alpha=0.0,
                notes="slowly varying: dominated variation without positive decrease"),
    CorpusEntry("truncunif", AnalyticFamily("truncated_uniform", {"b": 1.0}),
                dict(_ALL_FALSE),
                notes="bounded support: every asymptotic class undefined, "
                      "reported non-member"),
)


def get_entry(corpus_id: str, corpus: tuple[CorpusEntry, ...] = DEFAULT_CORPUS) -> CorpusEntry:
    for e in corpus:
        if e.id == corpus_id:
            return e
    raise ConfigError(f"unknown corpus id {corpus_id!r}")


def _spec_from_dict(raw: dict) -> AnalyticFamily:
    family = raw.get("family")
    params = dict(raw.get("params", {}))
    if not isinstance(family, str):
        raise ConfigError(f"entry missing family: {raw!r}")
    if family == "mixture":
        comps = params.get("components")
        if not isinstance(comps, list):
            raise ConfigError("mixture needs a components list")
        params["components"] = [_spec_from_dict(c) for c in comps]
    return AnalyticFamily(family, params)


def load_corpus(path: str) -> tuple[CorpusEntry, ...]:
    """Read a corpus config file; entries get empty known-verdict tables."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read corpus config {path!r}: {exc}") from exc
    if not isinstance(raw, dict) or "entries" not in raw:
        raise ConfigError("corpus config must be an object with an 'entries' list")
    entries = []
    for item in raw["entries"]:
        extra = set(item) - {"id", "family", "params"}
        if extra:
            raise ConfigError(f"unknown corpus entry fields: {sorted(extra)}")
        if "id" not in item:
            raise ConfigError(f"corpus entry missing id: {item!r}")
        spec = _spec_from_dict(item)
        entry = CorpusEntry(id=str(item["id"]), spec=spec, known={})
        try:
            entry.model()   # validate parameters eagerly
        except InvalidParameterError as exc:
            raise ConfigError(f"corpus entry {entry.id!r}: {exc}") from exc
        entries.append(entry)
    return tuple(entries)
