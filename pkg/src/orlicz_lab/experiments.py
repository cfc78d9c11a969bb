"""Reproducible experiment pipelines producing :class:`ExperimentReport` objects."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence

import numpy as np

from . import quadrature
from .errors import GridTooCoarse, InvalidInput
from .maximal import (BumpProfile, analytic_maximal_indicator, default_rs, hl_maximal,
                      poisson_maximal)
from .orlicz_core import (BUILTINS, E, E_E, HLOG, MusielakGauge, closed_form_F_sjolin,
                          compose_product, f_alpha, lie_target_log, log_plus_iter, orlicz,
                          orlicz_functional)
from .sampled import SampledFunction, indicator, meanzero
from .verify import (CheckVerdict, _plain, local_functional, ms_relation_check, tail_partials)

THREADS_ENV = "ORLICZ_LAB_THREADS"


def thread_cap() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _map(fn: Callable, items: Sequence) -> list:
    """Apply ``fn`` to the items, in parallel if allowed; results keep input order."""
    workers = min(thread_cap(), len(items))
    if workers <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


@dataclass
class ExperimentReport:
    name: str
    params: dict
    rows: list[dict]
    fit: Optional[dict] = None
    verdicts: list[CheckVerdict] = field(default_factory=list)
    runtime_ms: float = 0.0

    @property
    def passed(self) -> bool:
        return bool(self.rows) and all(v.passed for v in self.verdicts)

    def to_dict(self, include_runtime: bool = True) -> dict:
        d = {
            "name": self.name,
            "params": _plain(self.params),
            "rows": _plain(self.rows),
            "fit": _plain(self.fit),
            "verdicts": [v.to_dict() for v in self.verdicts],
            "passed": self.passed,
        }
        if include_runtime:
            d["runtime_ms"] = float(self.runtime_ms)
        return d

    def to_json(self, include_runtime: bool = True, indent: Optional[int] = 2) -> str:
        return json.dumps(self.to_dict(include_runtime), indent=indent)

    @classmethod
    def from_json(cls, s: str) -> "ExperimentReport":
        d = json.loads(s)
        return cls(d["name"], d["params"], d["rows"], d["fit"],
                   [CheckVerdict.from_dict(v) for v in d["verdicts"]], d.get("runtime_ms", 0.0))

    def columns(self) -> list[str]:
        cols: list[str] = []
        for row in self.rows:
            for k in row:
                if k not in cols:
                    cols.append(k)
        return cols

    def to_csv(self) -> str:
        """One line per row; floats written with ``repr`` so they parse back exactly."""
        buf = io.StringIO()
        cols = self.columns()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for row in self.rows:
            w.writerow(["" if row.get(c) is None else _cell(row.get(c)) for c in cols])
        return buf.getvalue()

    def to_tsv_plot(self) -> str:
        """Two-column ``x\\ty`` blocks, one per (group, column), separated by blank lines."""
        out = []
        groups: dict[str, list[dict]] = {}
        for row in self.rows:
            groups.setdefault(str(row.get("group", self.name)), []).append(row)
        for g, rows in groups.items():
            for col in ("lhs", "rhs", "ratio"):
                pts = [(r["parameter"], r[col]) for r in rows
                       if r.get(col) is not None and r.get("parameter") is not None]
                if not pts:
                    continue
                out.append(f"# {g}: {col} vs parameter")
                out.extend(f"{_cell(x)}\t{_cell(y)}" for x, y in pts)
                out.append("")
        return "\n".join(out)

    def render(self, fmt: str) -> str:
        if fmt == "json":
            return self.to_json() + "\n"
        if fmt == "csv":
            return self.to_csv()
        if fmt == "tsv-plot":
            return self.to_tsv_plot()
        raise InvalidInput(f"unknown format {fmt!r}")


def _cell(v: Any) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def rows_from_csv(text: str) -> list[dict]:
    """Parse :meth:`ExperimentReport.to_csv` output back into rows."""
    reader = csv.reader(io.StringIO(text))
    cols = next(reader)
    rows = []
    for rec in reader:
        row = {}
        for c, v in zip(cols, rec):
            if v == "":
                row[c] = None
                continue
            try:
                row[c] = int(v) if v.lstrip("-").isdigit() else float(v)
            except ValueError:
                row[c] = {"True": True, "False": False}.get(v, v)
        rows.append(row)
    return rows


def _timed(fn):
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        rep = fn(*args, **kwargs)
        rep.runtime_ms = (time.perf_counter() - t0) * 1e3
        return rep
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    wrapper.__wrapped__ = fn
    return wrapper


def _envelope(name: str, ratios: Sequence[float], limit: float, xs, lhs, rhs,
              params: dict) -> CheckVerdict:
    ratios = [r for r in ratios if r is not None]
    if not ratios or min(ratios) <= 0:
        return CheckVerdict(name, False, math.inf, [], params)
    spread = max(ratios) / min(ratios)
    wit = [{"x": x, "lhs": a, "rhs": b} for x, a, b in zip(xs, lhs, rhs)]
    return CheckVerdict(name, bool(math.isfinite(spread) and spread <= limit), spread, wit,
                        dict(params, envelope=limit))


def _monotone(name: str, xs, cols: dict[str, Sequence[float]], strict: bool = False) -> CheckVerdict:
    """Are the columns nondecreasing (or increasing) along ``xs`` sorted ascending?"""
    order = np.argsort(xs, kind="stable")
    ok = True
    worst = math.inf
    for col in cols.values():
        c = np.asarray(col, dtype=float)[order]
        d = np.diff(c)
        if d.size:
            worst = min(worst, float(d.min()))
            ok &= bool(np.all(d > 0) if strict else np.all(d >= 0))
    return CheckVerdict(name, ok, worst if math.isfinite(worst) else 0.0, [],
                        {"columns": list(cols), "strict": strict})


# ---- delta scaling ---------------------------------------------------------------

def oracle_functional(delta: float, gauge: MusielakGauge = HLOG, radius: float = 1.0) -> float:
    """``int_{|x| <= radius} Psi(|x|, M f(x)) dx`` for the unit-mass indicator,
    using the closed-form maximal function."""
    inner = quadrature.adaptive(lambda x: float(gauge.eval(x, 1.0 / delta)), 0.0, delta)

    def outer(u):
        x = math.exp(u)
        return float(gauge.eval(x, analytic_maximal_indicator(delta, x))) * x

    tail = quadrature.adaptive(outer, math.log(delta), math.log(radius))
    return 2.0 * (inner + tail)


def grid_functional(delta: float, n: int, gauge: MusielakGauge = HLOG,
                    radius: float = 1.0) -> float:
    """Same functional with the grid maximal operator on ``[-radius, radius]``."""
    f = indicator(delta, n, (-radius, radius))
    p = hl_maximal(f, "all-grid", boundary="zero")
    return orlicz_functional(p, gauge, (-radius, radius))


def _check_grid(delta: float, n: int, domain=(-1.0, 1.0)) -> None:
    h = (domain[1] - domain[0]) / n
    if delta < 4 * h:
        raise GridTooCoarse(f"delta={delta:g} is below four cells (h={h:g}); increase n")


@_timed
def delta_scaling(deltas: Sequence[float] = (1e-4, 1e-6, 1e-8, 1e-10, 1e-12),
                  gauge: MusielakGauge = HLOG, n: int = 2**16, mode: str = "oracle",
                  cross_delta: Optional[float] = 2.0**-8, cross_tol: float = 2e-2,
                  envelope: float = 4.0) -> ExperimentReport:
    """``int |f| log+log+|f|`` against ``int Psi(x, M f)`` over the indicator family.

    ``mode="oracle"`` uses the closed-form maximal function (any delta);
    ``mode="grid"`` uses the discrete operator on ``n`` cells of ``[-1, 1]``.
    A cross-validation row compares both at ``cross_delta``.
    """
    deltas = [float(d) for d in deltas]
    if not deltas:
        raise InvalidInput("need at least one delta")
    for d in deltas:
        if not 0 < d <= math.exp(-E) * (1 + 1e-12):
            raise InvalidInput(f"delta={d:g} outside (0, e^-e]")
    if mode not in ("oracle", "grid"):
        raise InvalidInput(f"unknown mode {mode!r}")
    if mode == "grid":
        for d in deltas:
            _check_grid(d, n)
    if cross_delta is not None:
        _check_grid(cross_delta, n)

    def row(d):
        lhs = 2.0 * float(log_plus_iter(1.0 / d, 2))
        rhs = oracle_functional(d, gauge) if mode == "oracle" else grid_functional(d, n, gauge)
        ll = float(log_plus_iter(1.0 / d, 2))
        return {"group": "delta", "parameter": d, "inv_delta": 1.0 / d, "loglog_inv_delta": ll,
                "lhs": lhs, "rhs": rhs, "ratio": rhs / ll if ll > 0 else None}

    rows = _map(row, deltas)
    ll = np.array([r["loglog_inv_delta"] for r in rows])
    rhs = np.array([r["rhs"] for r in rows])
    fit = None
    if len(rows) >= 2:
        slope, intercept = np.polyfit(ll, rhs, 1)
        fit = {"predictor": "loglog_inv_delta", "target": "rhs",
               "slope": float(slope), "intercept": float(intercept)}
    verdicts = [
        _envelope("delta-scaling-envelope", [r["ratio"] for r in rows], envelope,
                  deltas, rhs.tolist(), ll.tolist(), {"mode": mode}),
        _monotone("delta-scaling-monotone", [1.0 / d for d in deltas],
                  {"lhs": [r["lhs"] for r in rows], "rhs": rhs.tolist()}),
    ]
    if cross_delta is not None:
        o = oracle_functional(cross_delta, gauge)
        g = grid_functional(cross_delta, n, gauge)
        err = abs(g - o) / o
        rows.append({"group": "cross-check", "parameter": cross_delta, "inv_delta": 1 / cross_delta,
                     "loglog_inv_delta": float(log_plus_iter(1 / cross_delta, 2)),
                     "lhs": o, "rhs": g, "ratio": err})
        verdicts.append(CheckVerdict("oracle-vs-grid", bool(err <= cross_tol), err,
                                     [{"x": cross_delta, "lhs": o, "rhs": g}],
                                     {"n": n, "tolerance": cross_tol}))
    params = {"deltas": deltas, "gauge": gauge.name, "n": n, "mode": mode,
              "cross_delta": cross_delta, "envelope": envelope}
    return ExperimentReport("delta-scaling", params, rows, fit, verdicts)


# ---- periodic identification -------------------------------------------------------

def arc_spikes(deltas: Sequence[float], n: int, height_factor: float = 1.0) -> list[SampledFunction]:
    """``height_factor / delta`` on the arc ``|theta| < delta``."""
    fam = []
    for d in deltas:
        _check_grid(d, n, (-math.pi, math.pi))
        fam.append(indicator(d, n, torus=True, height=height_factor / d))
    return fam


@_timed
def periodic_identification(family: Optional[Sequence[SampledFunction]] = None, rs=None,
                            deltas: Sequence[float] = tuple(2.0**-k for k in range(6, 13)),
                            n: int = 2**18, envelope: float = 10.0,
                            labels: Optional[Sequence[float]] = None) -> ExperimentReport:
    """``int_T Psi0(P f)`` against ``int_T |f| log+log+|f|`` for ``f >= 0`` on the circle,
    plus the pointwise comparison of the Poisson and Hardy-Littlewood maximal functions."""
    if family is None:
        family = arc_spikes(deltas, n)
        labels = list(deltas) if labels is None else labels
    family = list(family)
    if not family:
        raise InvalidInput("empty family")
    labels = list(range(len(family))) if labels is None else list(labels)
    for f in family:
        if not f.torus:
            raise InvalidInput("periodic identification needs functions on the torus")
        if np.any(f.values < 0):
            raise InvalidInput("periodic identification needs f >= 0")
    psi0, llog = BUILTINS["psi0"], BUILTINS["lloglogl"]

    def row(item):
        label, f = item
        grid_rs = default_rs(f.h / 4) if rs is None else rs
        p = poisson_maximal(f, grid_rs)
        hl = hl_maximal(f, "exact")
        lhs = orlicz_functional(p, psi0)
        rhs = orlicz_functional(f, llog)
        pos = hl.mvalues > 0
        c = float(np.min(p.mvalues[pos] / hl.mvalues[pos])) if pos.any() else math.inf
        k = int(np.argmin(np.where(pos, p.mvalues / np.where(pos, hl.mvalues, 1), np.inf)))
        return ({"group": "family", "parameter": label, "lhs": lhs, "rhs": rhs,
                 "ratio": lhs / rhs if rhs > 0 else None, "excluded": not rhs > 0,
                 "pointwise_c": c},
                {"x": float(f.x[k]), "lhs": float(p.mvalues[k]), "rhs": float(hl.mvalues[k])})

    out = _map(row, list(zip(labels, family)))
    rows = [r for r, _ in out]
    kept = [r for r in rows if not r["excluded"]]
    verdicts = [_envelope("periodic-envelope", [r["ratio"] for r in kept], envelope,
                          [r["parameter"] for r in kept], [r["lhs"] for r in kept],
                          [r["rhs"] for r in kept], {})]
    cs = [r["pointwise_c"] for r in rows]
    c = min(cs)
    verdicts.append(CheckVerdict("poisson-vs-hl", bool(c > 0 and math.isfinite(c)), c,
                                 [w for _, w in out], {"per_member": cs}))
    params = {"labels": labels, "n": [f.n for f in family], "envelope": envelope,
              "rs": "default" if rs is None else list(rs)}
    return ExperimentReport("periodic-identification", params, rows, None, verdicts)


# ---- Zygmund-type membership -------------------------------------------------------------

def _tail_checkpoints(lo: float, x_max: float) -> list[float]:
    pts = {x_max, x_max / 10}
    x = 8 * lo
    while x < x_max:
        pts.add(x)
        x *= 4
    return sorted(p for p in pts if p > lo)


@_timed
def zygmund_membership(delta: float = 2.0**-8, n: int = 4096, x_max: float = 256.0,
                       spike: bool = False, scale: float = 1.0,
                       cauchy_tol: float = 1e-3) -> ExperimentReport:
    """Truncated ``int Psi(x, M_phi f)`` for the antisymmetric pair (or a one-signed
    spike), split into the ``2B`` part and the tail, ``B = [-1, 1]``."""
    _check_grid(delta, n)
    if x_max <= 20:
        raise InvalidInput("x_max must exceed 20")
    f = (indicator if spike else meanzero)(delta, n)
    f = f.scaled(scale)
    bump = BumpProfile.standard()
    lo = 2.0
    local = local_functional(f, HLOG, lo, bump)
    size = orlicz_functional(f, BUILTINS["lloglogl"])
    c_local = local / (1.0 + size)
    xs, partials, *_ = tail_partials(f, HLOG, lo, _tail_checkpoints(lo, x_max), bump)
    total = local + partials[-1]
    rows = [{"group": "local", "parameter": lo, "lhs": local, "rhs": 1.0 + size, "ratio": c_local}]
    prev = 0.0
    for X, T in zip(xs, partials):
        inc = T - prev
        rows.append({"group": "tail", "parameter": X, "lhs": T, "rhs": local + T,
                     "ratio": inc / total if total > 0 else 0.0})
        prev = T
    last = dict(zip(xs, partials))[x_max / 10]
    incr = partials[-1] - last
    rel = incr / total if total > 0 else 0.0
    growth = {}
    for a, b in zip(xs[:-1], xs[1:]):
        ta, tb = dict(zip(xs, partials))[a], dict(zip(xs, partials))[b]
        growth[f"{a:g}-{b:g}"] = (tb - ta) / ta / math.log10(b / a) if ta > 0 else 0.0
    verdicts = [
        CheckVerdict("local-bound", bool(math.isfinite(c_local)), c_local,
                     [{"x": lo, "lhs": local, "rhs": 1.0 + size}], {"radius": lo}),
        CheckVerdict("tail-convergence", bool(incr <= cauchy_tol * total), rel,
                     [{"x": x_max, "lhs": incr, "rhs": cauchy_tol * total}],
                     {"cauchy_tol": cauchy_tol, "last_decade": [x_max / 10, x_max]}),
    ]
    params = {"delta": delta, "n": n, "x_max": x_max, "spike": spike, "scale": scale,
              "mean": f.integral(), "local": local, "tail": partials[-1], "total": total,
              "growth_per_decade": growth}
    return ExperimentReport("zygmund-membership", params, rows, None, verdicts)


def tail_growth(delta: float = 2.0**-8, n: int = 4096, x_lo: float = 16.0, x_hi: float = 256.0,
                spike: bool = True) -> float:
    """Relative growth per decade of the tail integral between ``x_lo`` and ``x_hi``."""
    f = (indicator if spike else meanzero)(delta, n)
    xs, partials, *_ = tail_partials(f, HLOG, 2.0, [x_lo, x_hi], BumpProfile.standard())
    return (partials[1] - partials[0]) / partials[0] / math.log10(x_hi / x_lo)


# ---- Sjolin / Lie tables --------------------------------------------------------------------

def default_t_grid(count: int = 20) -> np.ndarray:
    return np.geomspace(E_E, 1e8, count)


@_timed
def sjolin_lie_tables(t_grid=None, alpha: float = E, seed: int = 0, spot_checks: int = 10,
                      rtol: float = 1e-6, deriv_rtol: float = 1e-4,
                      lie_u: Sequence[float] = (50.0, 100.0, 300.0, 700.0)) -> ExperimentReport:
    """Quadrature ``F_alpha`` against the closed form for the Sjolin gauge, finite-difference
    checks of the closed form, and the Lie target gauge evaluated in log space."""
    t_grid = default_t_grid() if t_grid is None else np.asarray(list(t_grid), dtype=float)
    if t_grid.size == 0 or np.any(t_grid < E_E * (1 - 1e-12)):
        raise InvalidInput("t grid must be nonempty and >= e^e")
    if alpha < E:
        raise InvalidInput("the closed form is an antiderivative only above e")
    sj = BUILTINS["sjolin"]
    base = closed_form_F_sjolin(alpha)

    def row(t):
        q = f_alpha(sj, alpha, float(t))
        c = closed_form_F_sjolin(float(t)) - base
        return {"group": "sjolin", "parameter": float(t), "lhs": q, "rhs": c,
                "ratio": abs(q - c) / abs(c)}

    rows = _map(row, list(t_grid))
    rng = np.random.default_rng(seed)
    spots = np.exp(rng.uniform(math.log(E_E), math.log(1e8), spot_checks))
    for t in spots:
        h = 1e-3 * t
        fd = (closed_form_F_sjolin(t + h) - closed_form_F_sjolin(t - h)) / (2 * h)
        exact = float(sj.deriv(t)) / t
        rows.append({"group": "derivative", "parameter": float(t), "lhs": fd, "rhs": exact,
                     "ratio": abs(fd - exact) / exact})
    psi0 = BUILTINS["psi0"]
    us = sorted({*np.log(t_grid).tolist(), *map(float, lie_u)})
    for u in us:
        t = math.exp(u)
        direct = math.log(float(psi0(t)) * float(log_plus_iter(t, 4))) \
            if log_plus_iter(t, 4) > 0 else -math.inf
        logv = float(lie_target_log(u))
        if math.isinf(direct) or math.isinf(logv):
            err = 0.0 if direct == logv else math.inf
            rows.append({"group": "lie", "parameter": u, "lhs": None, "rhs": None, "ratio": err})
        else:
            rows.append({"group": "lie", "parameter": u, "lhs": logv, "rhs": direct,
                         "ratio": abs(logv - direct) / max(abs(direct), 1e-300)})

    def worst(group):
        rs = [r for r in rows if r["group"] == group]
        k = int(np.argmax([r["ratio"] for r in rs]))
        return rs[k]["ratio"], [{"x": rs[k]["parameter"], "lhs": rs[k]["lhs"], "rhs": rs[k]["rhs"]}]

    verdicts = []
    for group, tol in (("sjolin", rtol), ("derivative", deriv_rtol), ("lie", rtol)):
        err, wit = worst(group)
        verdicts.append(CheckVerdict(f"{group}-relative-error", bool(err <= tol), err, wit,
                                     {"tolerance": tol}))
    verdicts.append(ms_relation_check(orlicz("llogl"), orlicz("loglogp"), alpha, t_grid))
    lie_m = compose_product(orlicz("identity"), orlicz("loglogp"))
    verdicts.append(ms_relation_check(lie_m, orlicz("log4p"), alpha,
                                      np.linspace(16.0, 1e4, 12), log_space=True))
    params = {"alpha": alpha, "t_grid": t_grid, "seed": seed, "spot_checks": spot_checks,
              "lie_u": list(lie_u), "rtol": rtol, "deriv_rtol": deriv_rtol}
    return ExperimentReport("sjolin-lie-tables", params, rows, None, verdicts)


EXPERIMENTS = {
    "delta-scaling": delta_scaling,
    "periodic-identification": periodic_identification,
    "zygmund-membership": zygmund_membership,
    "sjolin-lie-tables": sjolin_lie_tables,
}
