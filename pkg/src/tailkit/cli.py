"""Command-line surface.

Subcommands
-----------
classify   full class-membership table for one model
indices    Matuszewska index estimates with the power-bound witness
operate    apply an operator pipeline (optionally piping into classify)
verify     run the theorem registry, emit CSV + JSON reports
mc         dependence diagnostics with a seeded sampler

Models are written in a mini-language ``family:key=value,...`` with
positional sugar (``pareto:2`` means ``pareto:alpha=2``); corpus ids
(``pareto2``, ``lognormal``, ...) resolve directly.  Config files are JSON
with the corpus schema documented in :mod:`tailkit.corpus`; grid and seed
overrides live under ``{"grid": {...}, "seed": N}``.

Exit codes: 0 success, 1 harness check failed, 2 model/pipeline error,
3 config error.  Reports are written atomically (write-then-rename) and
two runs with identical config and seed produce byte-identical files.
The output directory can also be set through the TAILKIT_OUT environment
variable.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field

from . import classes as classes_mod
from .calculus import convolve, max_tail, min_tail, mixture, power, product_convolve
from .corpus import DEFAULT_CORPUS, load_corpus
from .dependence import (
    comonotone,
    conditional_ratio_diag,
    fgm,
    independent,
    sai_limit,
    spearman_rho,
)
from .errors import ConfigError, PipelineError, TailkitError
from .indices import matuszewska
from .models import DEFAULT_GRID, AnalyticFamily, GridSpec, TailModel, make_family
from .registry import Report, run_registry

EXIT_OK = 0
EXIT_HARNESS_FAIL = 1
EXIT_MODEL = 2
EXIT_CONFIG = 3

_POSITIONAL = {
    "pareto": ("alpha", "scale"),
    "exponential": ("lam",),
    "weibull": ("shape", "rate"),
    "lognormal": ("mu", "sigma"),
    "truncated_uniform": ("b",),
    "slow_log": (),
}

_ALIASES = {"exp": "exponential", "lognorm": "lognormal", "uniform": "truncated_uniform",
            "slowvary": "slow_log"}


@dataclass
class RunConfig:
    corpus_path: str | None = None
    grid: GridSpec = DEFAULT_GRID
    seed: int = 42
    output_dir: str = "."
    format: str = "csv"
    v_grid: tuple[float, ...] = field(default_factory=lambda: classes_mod.V_GRID_DEFAULT)

    def echo(self) -> dict:
        return {
            "corpus_path": self.corpus_path,
            "grid": {"x0": self.grid.x0, "ratio": self.grid.ratio, "count": self.grid.count},
            "seed": self.seed,
            "format": self.format,
            "v_grid": list(self.v_grid),
        }


def parse_model(spec: str) -> TailModel:
    """Resolve a corpus id or parse the family:params mini-language."""
    for entry in DEFAULT_CORPUS:
        if entry.id == spec:
            return entry.model()
    if ":" in spec:
        fam, _, rest = spec.partition(":")
    else:
        fam, rest = spec, ""
    fam = _ALIASES.get(fam.strip().lower(), fam.strip().lower())
    params: dict = {}
    order = _POSITIONAL.get(fam)
    if order is None:
        raise ConfigError(f"unknown model family {fam!r} in spec {spec!r}")
    pos_i = 0
    for tok in filter(None, (t.strip() for t in rest.split(","))):
        if "=" in tok:
            key, _, val = tok.partition("=")
            key = key.strip()
            if key not in order:
                raise ConfigError(f"unknown field {key!r} for family {fam!r}")
            params[key] = float(val)
        else:
            if pos_i >= len(order):
                raise ConfigError(f"too many positional values in {spec!r}")
            params[order[pos_i]] = float(tok)
            pos_i += 1
    return make_family(AnalyticFamily(fam, params))


def _parse_coupling(text: str | None, f: TailModel, g: TailModel):
    if text is None or text == "independent":
        return independent(f, g)
    name, _, arg = text.partition(":")
    if name == "fgm":
        return fgm(f, g, float(arg) if arg else 0.5)
    if name == "comonotone":
        return comonotone(f, g)
    raise ConfigError(f"unknown coupling {text!r}")


def _atomic_write(path: str, payload: str) -> None:
    d = os.path.dirname(path) or "."
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tailkit-tmp-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(v: float) -> str:
    if isinstance(v, float) and math.isnan(v):
        return "nan"
    return f"{v:.10g}"


# ---------------------------------------------------------------------------
# classify / indices
# ---------------------------------------------------------------------------

_TABLE_ORDER = ("H", "L", "D", "PD", "OL", "OS", "S", "A", "T", "OA", "OT")


def _classify_lines(model: TailModel, cfg: RunConfig) -> tuple[list[str], dict]:
    result = classes_mod.classify_all(model, cfg.grid)
    lines = [f"model: {model.name}", f"horizon: {_fmt(result.horizon)}",
             "class   member  margin"]
    payload = {"model": model.name, "config": cfg.echo(), "verdicts": {}}
    for name in _TABLE_ORDER:
        v = result.verdicts[name]
        mark = "yes" if v.member else "no"
        lines.append(f"{name:7s} {mark:7s} {_fmt(v.margin)}")
        payload["verdicts"][name] = {
            "member": v.member, "margin": None if math.isnan(v.margin) else
            (str(v.margin) if math.isinf(v.margin) else v.margin),
            "flags": list(v.flags), "reason": v.reason,
        }
    if result.anomalies:
        lines.append("anomalies: " + "; ".join(result.anomalies))
        payload["anomalies"] = list(result.anomalies)
    return lines, payload


def cmd_classify(args, cfg: RunConfig) -> int:
    model = parse_model(args.model)
    lines, payload = _classify_lines(model, cfg)
    print("\n".join(lines))
    out = os.path.join(cfg.output_dir, "classify.json")
    _atomic_write(out, json.dumps(payload, sort_keys=True, indent=1))
    return EXIT_OK


def cmd_indices(args, cfg: RunConfig) -> int:
    model = parse_model(args.model)
    idx = matuszewska(model, cfg.grid, cfg.v_grid)
    print(f"model: {model.name}")
    if not idx.defined:
        print("indices undefined: finite right endpoint")
    else:
        print(f"beta:  {_fmt(idx.beta)}")
        print(f"alpha: {_fmt(idx.alpha)}")
        if idx.bound_fit:
            b = idx.bound_fit
            print(f"bound: C={_fmt(b.C)} q={_fmt(b.q)} x0={_fmt(b.x0)}")
    payload = {
        "model": model.name, "config": cfg.echo(), "defined": idx.defined,
        "beta": str(idx.beta), "alpha": str(idx.alpha),
        "bound_fit": None if not idx.bound_fit else
        {"C": idx.bound_fit.C, "q": idx.bound_fit.q, "x0": idx.bound_fit.x0},
    }
    _atomic_write(os.path.join(cfg.output_dir, "indices.json"),
                  json.dumps(payload, sort_keys=True, indent=1))
    return EXIT_OK


# ---------------------------------------------------------------------------
# operate
# ---------------------------------------------------------------------------

def _apply_operator(name: str, operands: list[TailModel], args) -> TailModel:
    if name == "convolve":
        if len(operands) != 2:
            raise PipelineError("convolve takes two models")
        return convolve(*operands)
    if name == "product":
        if len(operands) != 2:
            raise PipelineError("product takes two models")
        return product_convolve(*operands)
    if name in ("max", "min"):
        if len(operands) != 2:
            raise PipelineError(f"{name} takes two models")
        joint = _parse_coupling(getattr(args, "coupling", None), *operands)
        return max_tail(joint) if name == "max" else min_tail(joint)
    if name == "mixture":
        if len(operands) != 2:
            raise PipelineError("mixture takes two models")
        return mixture(operands[0], operands[1], getattr(args, "p", 0.5))
    if name == "power":
        if len(operands) != 1:
            raise PipelineError("power takes one model")
        return power(operands[0], getattr(args, "n", 2))
    raise PipelineError(f"unknown operator {name!r}")


def cmd_operate(args, cfg: RunConfig) -> int:
    tokens = args.pipeline
    if len(tokens) == 1 and "|" in tokens[0]:
        stages = [s.strip() for s in tokens[0].split("|")]
        head = stages[0].split()
        then = stages[1:]
    else:
        head = tokens
        then = [args.then] if args.then else []
    if not head:
        raise PipelineError("empty operator pipeline")
    op, *operand_specs = head
    operands = [parse_model(s) for s in operand_specs]
    try:
        out_model = _apply_operator(op, operands, args)
    except TailkitError:
        raise
    print(f"result: {out_model.name}")
    payload: dict = {"operator": op, "result": out_model.name, "config": cfg.echo()}
    for stage in then:
        stage_name = stage.split()[0]
        if stage_name == "classify":
            lines, sub = _classify_lines(out_model, cfg)
            print("\n".join(lines))
            payload["classify"] = sub["verdicts"]
        elif stage_name == "indices":
            idx = matuszewska(out_model, cfg.grid, cfg.v_grid)
            print(f"beta: {_fmt(idx.beta)}  alpha: {_fmt(idx.alpha)}")
            payload["indices"] = {"beta": str(idx.beta), "alpha": str(idx.alpha)}
        else:
            raise PipelineError(f"unknown pipeline stage {stage_name!r}")
    _atomic_write(os.path.join(cfg.output_dir, "operate.json"),
                  json.dumps(payload, sort_keys=True, indent=1))
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify / mc
# ---------------------------------------------------------------------------

def cmd_verify(args, cfg: RunConfig) -> int:
    selection = tuple(s.strip() for s in args.only.split(",")) if args.only else None
    corpus = load_corpus(cfg.corpus_path) if cfg.corpus_path else DEFAULT_CORPUS
    report: Report = run_registry(selection=selection, grid=cfg.grid,
                                  seed=cfg.seed, corpus=corpus)
    csv_path = os.path.join(cfg.output_dir, "verify.csv")
    json_path = os.path.join(cfg.output_dir, "verify.json")
    _atomic_write(csv_path, report.to_csv())
    _atomic_write(json_path, report.to_json())
    n_fail = len(report.failed)
    for r in report.rows:
        print(f"{r.id:12s} {r.status}")
    print(f"rows: {len(report.rows)}  failed: {n_fail}")
    print(f"wrote {csv_path} and {json_path}")
    return EXIT_HARNESS_FAIL if n_fail else EXIT_OK


def cmd_mc(args, cfg: RunConfig) -> int:
    f = parse_model(args.marginals[0])
    g = parse_model(args.marginals[1])
    joint = _parse_coupling(args.coupling, f, g)
    est = sai_limit(joint, cfg.grid)
    draws = joint.sample(args.samples, cfg.seed)
    rho = spearman_rho(draws)
    diag = conditional_ratio_diag(joint, x_grid=(6.0, 12.0),
                                  n_samples=min(args.samples, 400_000),
                                  seed=cfg.seed)
    print(f"coupling: {joint.coupling} theta={joint.theta:g}")
    print(f"factorization limit estimate: {_fmt(est.value)} "
          f"(expected {est.expected}) no_limit={est.no_limit}")
    print(f"spearman rho: {_fmt(rho)}")
    print(f"conditional ratio max: {_fmt(diag['max_ratio'])} "
          f"unbounded={diag['unbounded_trend']}")
    payload = {
        "config": cfg.echo(), "coupling": joint.coupling, "theta": joint.theta,
        "sai_estimate": est.value, "sai_expected": est.expected,
        "no_limit": est.no_limit, "spearman": rho,
        "conditional_max_ratio": diag["max_ratio"],
        "unbounded_trend": diag["unbounded_trend"],
    }
    _atomic_write(os.path.join(cfg.output_dir, "mc.json"),
                  json.dumps(payload, sort_keys=True, indent=1))
    if args.dump:
        lines = "\n".join(f"{a:.17g} {b:.17g}" for a, b in draws)
        _atomic_write(args.dump, lines + "\n")
        print(f"wrote {len(draws)} draws to {args.dump}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# wiring
# ---------------------------------------------------------------------------

def _build_config(args) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config!r}: {exc}") from exc
        grid_raw = raw.get("grid", {})
        if grid_raw:
            cfg.grid = GridSpec(
                x0=float(grid_raw.get("x0", DEFAULT_GRID.x0)),
                ratio=float(grid_raw.get("ratio", DEFAULT_GRID.ratio)),
                count=int(grid_raw.get("count", DEFAULT_GRID.count)),
            )
        if "seed" in raw:
            cfg.seed = int(raw["seed"])
        if "v_grid" in raw:
            cfg.v_grid = tuple(float(v) for v in raw["v_grid"])
        if "corpus_path" in raw:
            cfg.corpus_path = raw["corpus_path"]
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "corpus", None):
        cfg.corpus_path = args.corpus
    out = getattr(args, "out", None) or os.environ.get("TAILKIT_OUT") or "."
    cfg.output_dir = out
    if getattr(args, "format", None):
        cfg.format = args.format
    return cfg


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tailkit",
                                description="heavy-tail analysis toolkit")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--out", help="output directory (or TAILKIT_OUT)")
    p.add_argument("--seed", type=int, default=None, help="root RNG seed")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("classify", help="class-membership table for one model")
    c.add_argument("model")
    c.set_defaults(fn=cmd_classify)

    i = sub.add_parser("indices", help="Matuszewska index estimates")
    i.add_argument("model")
    i.set_defaults(fn=cmd_indices)

    o = sub.add_parser("operate", help="apply an operator pipeline")
    o.add_argument("pipeline", nargs="+",
                   help="operator and operands, e.g. convolve pareto:2 pareto:2; "
                        "a single quoted string may pipe into classify")
    o.add_argument("--coupling", default=None, help="independent | fgm:theta | comonotone")
    o.add_argument("--p", type=float, default=0.5, help="mixture weight")
    o.add_argument("--n", type=int, default=2, help="convolution power")
    o.add_argument("--then", default=None, help="classify | indices")
    o.set_defaults(fn=cmd_operate)

    v = sub.add_parser("verify", help="run the theorem registry")
    v.add_argument("--only", default=None, help="comma-separated id prefixes")
    v.add_argument("--corpus", default=None, help="corpus config JSON")
    v.add_argument("--format", default="csv", choices=("csv", "json"))
    v.set_defaults(fn=cmd_verify)

    m = sub.add_parser("mc", help="dependence diagnostics")
    m.add_argument("--coupling", default="fgm:0.5")
    m.add_argument("--marginals", nargs=2, default=("pareto:2", "pareto:2"))
    m.add_argument("--samples", type=int, default=10**6)
    m.add_argument("--dump", default=None, help="write draws to a columnar text file")
    m.set_defaults(fn=cmd_mc)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _build_config(args)
        return args.fn(args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TailkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MODEL


if __name__ == "__main__":
    sys.exit(main())
