"""Command-line front end: ``orlicz-lab {maximal,check,experiment}``.

Exit codes: 0 pass, 1 failed check or experiment, 2 invalid input.
Settings come from built-in defaults, then a ``key=value`` config file
(``--config``), then explicit flags, later sources winning.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from typing import Any, Optional, Sequence

import numpy as np

from . import experiments as ex
from . import verify
from .errors import InvalidInput, NonConvergence, OrliczLabError
from .maximal import (BumpProfile, default_rs, geometric_epsilons, hl_maximal, poisson_maximal,
                      smooth_maximal)
from .orlicz_core import E, E_E, GaugeFamilySpec, musielak, orlicz
from .sampled import parse_function_spec

CHECKS = ("weak-type-upper", "weak-type-lower", "away", "reflection", "sandwich", "doubling",
          "translation", "mean-zero", "stein", "ms-relation")
FORMATS = ("json", "csv", "tsv-plot")

# per-checker domain defaults: the inequality needs room around the unit ball
CHECK_DOMAINS = {"weak-type-lower": (-4.0, 4.0), "away": (-4.0, 4.0), "reflection": (-2.0, 2.0),
                 "translation": (-4.0, 4.0), "stein": (-2.0, 2.0)}

DEFAULTS: dict[str, Any] = {
    "fn": "indicator:delta=0.00390625", "n": None, "domain": None, "torus": False,
    "radii": "all-grid", "boundary": "clip", "kind": "hl", "format": None, "out": None,
    "seed": 0, "samples": 1000, "alphas": None, "rho": 4.0, "r_values": "3",
    "x0": 1.0, "gauge": "hlog", "alpha0": None, "tail": "4,256", "weight": "log",
    "base": "psi0", "m": "llogl", "s": "loglogp", "t_grid": None, "log_space": False,
    "deltas": None, "mode": "oracle", "x_max": 256.0, "spike": False, "scale": 1.0,
    "envelope": None,
}


class UsageError(Exception):
    pass


# ---- parsing helpers -------------------------------------------------------------

def _floats(text, what: str) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    try:
        vals = [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"{what}: expected comma-separated numbers, got {text!r}") from None
    if not vals or not all(math.isfinite(v) for v in vals):
        raise UsageError(f"{what}: need finite numbers")
    return vals


def _to_bool(v) -> bool:
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"expected a boolean, got {v!r}")


def read_config(path: str) -> dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment; keys may use dashes."""
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    out = {}
    for no, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{no}: expected key=value")
        k, v = (p.strip() for p in line.split("=", 1))
        k = k.replace("-", "_")
        if k not in DEFAULTS:
            raise UsageError(f"{path}:{no}: unknown key {k!r}")
        out[k] = v
    return out


def effective_config(args: argparse.Namespace) -> dict[str, Any]:
    cfg = dict(DEFAULTS)
    if args.config:
        cfg.update(read_config(args.config))
    for k in DEFAULTS:
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = v
    for k in ("torus", "log_space", "spike"):
        cfg[k] = _to_bool(cfg[k])
    for k in ("seed", "samples"):
        try:
            cfg[k] = int(cfg[k])
        except (TypeError, ValueError):
            raise UsageError(f"{k} must be an integer") from None
    if cfg["n"] is not None:
        try:
            cfg["n"] = int(cfg["n"])
        except (TypeError, ValueError):
            raise UsageError("n must be an integer") from None
        if cfg["n"] < 2:
            raise UsageError("n must be at least 2")
    for k in ("rho", "x0", "x_max", "scale"):
        try:
            cfg[k] = float(cfg[k])
        except (TypeError, ValueError):
            raise UsageError(f"{k} must be a number") from None
    if cfg["samples"] < 1:
        raise UsageError("samples must be positive")
    return cfg


def _output(cfg) -> tuple[str, Optional[str]]:
    """Resolve (format, path). ``--out`` may be a format name or a file path."""
    fmt, out = cfg["format"], cfg["out"]
    path = None
    if out in FORMATS:
        fmt = fmt or out
    elif out:
        path = out
        if fmt is None:
            ext = os.path.splitext(out)[1].lower()
            fmt = {".csv": "csv", ".tsv": "tsv-plot", ".json": "json"}.get(ext, "json")
    fmt = fmt or "json"
    if fmt not in FORMATS:
        raise UsageError(f"unknown format {fmt!r}; choose from {', '.join(FORMATS)}")
    return fmt, path


def _emit(text: str, path: Optional[str]) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc}") from None


def _domain(cfg, fallback=(-1.0, 1.0)) -> tuple[float, float]:
    if cfg["domain"] is None:
        return fallback
    d = _floats(cfg["domain"], "domain")
    if len(d) != 2 or not d[1] > d[0]:
        raise UsageError("domain must be 'a,b' with a < b")
    return d[0], d[1]


def _function(cfg, domain, n_default: int):
    n = cfg["n"] or n_default
    return parse_function_spec(cfg["fn"], n=n, domain=domain, torus=cfg["torus"])


def _jsonable(cfg: dict) -> dict:
    return {k: v for k, v in cfg.items()}


# ---- commands ---------------------------------------------------------------------

def cmd_maximal(cfg) -> int:
    fmt, path = _output(cfg)
    if fmt == "tsv-plot":
        fmt = "csv"
    f = _function(cfg, _domain(cfg), 4096)
    kind = cfg["kind"]
    radii = cfg["radii"]
    if radii not in ("all-grid", "exact"):
        radii = _floats(radii, "radii")
    if kind == "hl":
        p = hl_maximal(f, radii, boundary=cfg["boundary"])
    elif kind == "smooth":
        if f.torus:
            raise UsageError("the smooth maximal function is defined on the line only")
        eps = geometric_epsilons(f) if isinstance(radii, str) else radii
        p = smooth_maximal(f, BumpProfile.standard(), eps)
    elif kind == "poisson":
        rs = default_rs(f.h / 4) if isinstance(radii, str) else radii
        p = poisson_maximal(f, rs)
    else:
        raise UsageError(f"unknown maximal kind {kind!r}")
    if fmt == "csv":
        lines = ["x,mvalue,argmax_radius"]
        lines += [f"{x!r},{m!r},{r!r}" for x, m, r in
                  zip(p.x.tolist(), p.mvalues.tolist(), p.argmax_radius.tolist())]
        text = "\n".join(lines) + "\n"
    else:
        text = json.dumps({"kind": kind, "config": _jsonable(cfg), "x": p.x.tolist(),
                           "mvalues": p.mvalues.tolist(),
                           "argmax_radius": p.argmax_radius.tolist()}, indent=2) + "\n"
    _emit(text, path)
    return 0


def _t_grid(cfg):
    if cfg["t_grid"] is None:
        return np.geomspace(E_E, 1e8, 20)
    return np.array(_floats(cfg["t_grid"], "t-grid"))


def run_check(name: str, cfg) -> verify.CheckVerdict:
    if name == "sandwich":
        return verify.sandwich_check(verify.random_pairs(cfg["samples"], cfg["seed"]))
    if name == "doubling":
        rng = np.random.default_rng(cfg["seed"])
        s = 10.0 ** rng.uniform(-6, 6, cfg["samples"])
        t = np.exp(rng.uniform(0.0, math.log(1e6), cfg["samples"]))
        return verify.doubling_check(np.column_stack((s, t)))
    if name == "ms-relation":
        alpha0 = E if cfg["alpha0"] is None else float(cfg["alpha0"])
        return verify.ms_relation_check(orlicz(cfg["m"]), orlicz(cfg["s"]), alpha0,
                                        _t_grid(cfg), log_space=cfg["log_space"])
    f = _function(cfg, _domain(cfg, CHECK_DOMAINS.get(name, (-1.0, 1.0))), 16384)
    alphas = None if cfg["alphas"] is None else _floats(cfg["alphas"], "alphas")
    if name == "weak-type-upper":
        return verify.weak_type_upper(f, alphas)
    if name == "weak-type-lower":
        return verify.weak_type_lower(f, alphas, rho=cfg["rho"])
    if name == "away":
        return verify.away_bound(f, _floats(cfg["r_values"], "r-values"))
    if name == "reflection":
        return verify.reflection_bound(f)
    if name == "translation":
        return verify.translation_check(f, cfg["x0"], musielak(cfg["gauge"]))
    if name == "mean-zero":
        tail = _floats(cfg["tail"], "tail")
        if len(tail) != 2:
            raise UsageError("tail must be 'start,end'")
        return verify.mean_zero_necessity(f, musielak(cfg["gauge"]), tail=(tail[0], tail[1]))
    if name == "stein":
        alpha0 = E_E if cfg["alpha0"] is None else float(cfg["alpha0"])
        family = GaugeFamilySpec(orlicz(cfg["base"]), cfg["weight"])
        crit, func = verify.stein_criterion(f, family, alpha0)
        ratio = func / crit if crit > 0 else 0.0
        return verify.CheckVerdict("stein", bool(math.isfinite(crit) and math.isfinite(func)),
                                   ratio, [{"x": alpha0, "lhs": func, "rhs": crit}],
                                   {"criterion": crit, "functional": func, "base": cfg["base"],
                                    "weight": cfg["weight"], "alpha0": alpha0})
    raise UsageError(f"unknown checker {name!r}")


def cmd_check(name: str, cfg) -> int:
    fmt, path = _output(cfg)
    v = run_check(name, cfg)
    v.params = dict(v.params, config=_jsonable(cfg))
    if fmt == "json":
        text = v.to_json() + "\n"
    else:
        lines = ["x,lhs,rhs"] + [f"{w['x']!r},{w['lhs']!r},{w['rhs']!r}" for w in
                                 v.to_dict()["witnesses"]]
        text = "\n".join(lines) + "\n"
    _emit(text, path)
    return 0 if v.passed else 1


def run_experiment(name: str, cfg) -> ex.ExperimentReport:
    n = cfg["n"]
    if name == "delta-scaling":
        kw = {"mode": cfg["mode"]}
        if cfg["deltas"] is not None:
            kw["deltas"] = _floats(cfg["deltas"], "deltas")
        if n:
            kw["n"] = n
        if cfg["envelope"] is not None:
            kw["envelope"] = float(cfg["envelope"])
        return ex.delta_scaling(**kw)
    if name == "periodic-identification":
        kw = {}
        if cfg["deltas"] is not None:
            kw["deltas"] = _floats(cfg["deltas"], "deltas")
        if n:
            kw["n"] = n
        if cfg["envelope"] is not None:
            kw["envelope"] = float(cfg["envelope"])
        return ex.periodic_identification(**kw)
    if name == "zygmund-membership":
        delta = 2.0**-8 if cfg["deltas"] is None else _floats(cfg["deltas"], "deltas")[0]
        return ex.zygmund_membership(delta, n or 4096, cfg["x_max"], cfg["spike"], cfg["scale"])
    if name == "sjolin-lie-tables":
        return ex.sjolin_lie_tables(None if cfg["t_grid"] is None else _t_grid(cfg),
                                    seed=cfg["seed"])
    raise UsageError(f"unknown experiment {name!r}")


def cmd_experiment(name: str, cfg) -> int:
    fmt, path = _output(cfg)
    rep = run_experiment(name, cfg)
    rep.params = dict(rep.params, config=_jsonable(cfg))
    _emit(rep.render(fmt), path)
    return 0 if rep.passed else 1


# ---- entry point ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("common options")
    g.add_argument("--config", help="key=value config file (flags override it)")
    g.add_argument("--fn", help="indicator:delta=V | meanzero:delta=V | constant:c=V | cosine | csv:PATH")
    g.add_argument("--n", help="grid size")
    g.add_argument("--domain", help="a,b (line segment)")
    g.add_argument("--torus", action="store_const", const=True, help="sample on the circle")
    g.add_argument("--format", choices=FORMATS)
    g.add_argument("--out", help="output path, or a format name to print that format")
    g.add_argument("--seed", help="seed for sampled checks (default 0)")

    p = argparse.ArgumentParser(prog="orlicz-lab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    m = sub.add_parser("maximal", parents=[common], help="tabulate a maximal function")
    m.add_argument("--radii", help="all-grid | exact | comma-separated list")
    m.add_argument("--boundary", choices=("clip", "zero"))
    m.add_argument("--kind", choices=("hl", "smooth", "poisson"))

    c = sub.add_parser("check", parents=[common], help="run one inequality checker")
    c.add_argument("name", choices=CHECKS)
    c.add_argument("--samples")
    c.add_argument("--alphas")
    c.add_argument("--rho")
    c.add_argument("--r-values", dest="r_values")
    c.add_argument("--x0")
    c.add_argument("--gauge")
    c.add_argument("--alpha0")
    c.add_argument("--tail")
    c.add_argument("--base")
    c.add_argument("--weight", choices=("none", "log"))
    c.add_argument("--m")
    c.add_argument("--s")
    c.add_argument("--t-grid", dest="t_grid")
    c.add_argument("--log-space", dest="log_space", action="store_const", const=True)

    e = sub.add_parser("experiment", parents=[common], help="run an experiment pipeline")
    e.add_argument("name", choices=tuple(ex.EXPERIMENTS))
    e.add_argument("--deltas")
    e.add_argument("--mode", choices=("oracle", "grid"))
    e.add_argument("--x-max", dest="x_max")
    e.add_argument("--spike", action="store_const", const=True)
    e.add_argument("--scale")
    e.add_argument("--envelope")
    e.add_argument("--t-grid", dest="t_grid")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        threads = os.environ.get(ex.THREADS_ENV)
        if threads is not None and (not threads.isdigit() or int(threads) < 1):
            raise UsageError(f"{ex.THREADS_ENV} must be a positive integer")
        cfg = effective_config(args)
        if args.command == "maximal":
            return cmd_maximal(cfg)
        if args.command == "check":
            return cmd_check(args.name, cfg)
        return cmd_experiment(args.name, cfg)
    except (UsageError, InvalidInput) as exc:
        print(f"orlicz-lab: error: {exc}", file=sys.stderr)
        return 2
    except NonConvergence as exc:
        print(f"orlicz-lab: quadrature failed: {exc}", file=sys.stderr)
        return 1
    except (OrliczLabError, ValueError) as exc:
        print(f"orlicz-lab: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
