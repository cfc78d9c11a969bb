"""Orlicz and Musielak-Orlicz gauges, the F_alpha transform, and gauge checks.

All gauge callables are vectorised: they accept a float or an ndarray and
return the same shape. Built-in gauges carry a log-space form (functions
of ``u = log t``) so that iterated-logarithm factors can be evaluated far
beyond float range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from . import quadrature
from .errors import EmptyRegion, InvalidInput

E = math.e
E_E = math.exp(E)  # e^e, where log+ log+ becomes positive
E_E_E = math.exp(E_E)  # e^(e^e), where the fourth iterate becomes positive

Func = Callable[[np.ndarray], np.ndarray]


def log_plus_iter(t, k: int = 1):
    """Apply ``log+ = max(log, 0)`` to ``t`` ``k`` times (``log+ 0 = 0``)."""
    if k < 1:
        raise ValueError("k must be a positive integer")
    x = np.asarray(t, dtype=float)
    for _ in range(k):
        x = np.log(np.maximum(x, 1.0))
    return float(x) if np.ndim(t) == 0 else x


def _scalarize(fn: Func) -> Func:
    def wrapped(t):
        out = fn(np.asarray(t, dtype=float))
        return float(out) if np.ndim(t) == 0 else out
    return wrapped


@dataclass(frozen=True)
class LogForm:
    """A gauge expressed through ``u = log t``.

    ``value(u) = Phi(e^u)``, ``ratio(u) = Phi(e^u) / e^u``,
    ``deriv(u) = psi(e^u)`` and ``dlog(u) = dPhi/du = e^u psi(e^u)``.
    Fast-growing gauges define ``ratio``/``deriv`` natively, slowly varying
    factors define ``value``/``dlog``; the missing pair is derived and may
    overflow to ``inf`` or underflow to 0.
    """

    value: Func
    ratio: Func
    deriv: Func
    dlog: Func

    @classmethod
    def from_ratio(cls, ratio: Func, deriv: Func) -> "LogForm":
        def value(u):
            with np.errstate(over="ignore", invalid="ignore"):
                return np.exp(u) * ratio(u)

        def dlog(u):
            with np.errstate(over="ignore", invalid="ignore"):
                return np.exp(u) * deriv(u)
        return cls(_scalarize(value), _scalarize(ratio), _scalarize(deriv), _scalarize(dlog))

    @classmethod
    def from_value(cls, value: Func, dlog: Func) -> "LogForm":
        def ratio(u):
            with np.errstate(under="ignore"):
                return np.exp(-u) * value(u)

        def deriv(u):
            with np.errstate(under="ignore"):
                return np.exp(-u) * dlog(u)
        return cls(_scalarize(value), _scalarize(ratio), _scalarize(deriv), _scalarize(dlog))


@dataclass(frozen=True)
class OrliczFunction:
    """An evaluable gauge ``Phi`` with right-derivative ``psi``."""

    name: str
    eval: Func
    deriv: Func
    factors: Optional[tuple["OrliczFunction", "OrliczFunction"]] = None
    kinks: tuple[float, ...] = ()
    log_form: Optional[LogForm] = field(default=None, compare=False)

    def __call__(self, t):
        return self.eval(t)


def _iterates(u: np.ndarray):
    """log+ iterates of t = e^u, computed from u without forming t."""
    l1 = np.maximum(u, 0.0)
    l2 = np.log(np.maximum(l1, 1.0))
    l3 = np.log(np.maximum(l2, 1.0))
    l4 = np.log(np.maximum(l3, 1.0))
    return l1, l2, l3, l4


def _log_u(t: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(t)


# ---- built-in gauges ------------------------------------------------------

def _psi0_ratio(u):
    return 1.0 / np.logaddexp(1.0, u)


def _psi0_deriv_u(u):
    lg = np.logaddexp(1.0, u)
    frac = 1.0 / (1.0 + np.exp(np.minimum(1.0 - u, 700.0)))  # t / (e + t)
    return 1.0 / lg - frac / lg**2


def _psi0_eval(t):
    return t / np.log(E + t)


def _psi0_deriv(t):
    lg = np.log(E + t)
    return 1.0 / lg - t / ((E + t) * lg**2)


def _llogl_eval(t):
    return t * log_plus_iter(t, 1)


def _llogl_deriv(t):
    return np.where(t > 1.0, np.log(np.maximum(t, 1.0)) + 1.0, 0.0)


def _llogl_deriv_u(u):
    return np.where(u > 0.0, u + 1.0, 0.0)


def _lloglogl_eval(t):
    return t * log_plus_iter(t, 2)


def _lloglogl_deriv(t):
    return _lloglogl_deriv_u(_log_u(t))


def _lloglogl_deriv_u(u):
    l1, l2, _, _ = _iterates(u)
    return np.where(u > 1.0, l2 + 1.0 / np.maximum(l1, 1.0), 0.0)


def _sjolin_eval(t):
    return t * log_plus_iter(t, 1) * log_plus_iter(t, 2)


def _sjolin_deriv(t):
    return _sjolin_deriv_u(_log_u(t))


def _sjolin_deriv_u(u):
    l1, l2, _, _ = _iterates(u)
    return np.where(u > 1.0, l1 * l2 + l2 + 1.0, 0.0)


def _lie_ratio(u):
    _, l2, _, l4 = _iterates(u)
    return l2 * l4


def _lie_eval(t):
    return t * _lie_ratio(_log_u(t))


def _lie_deriv_u(u):
    l1, l2, l3, l4 = _iterates(u)
    on = l3 > 1.0
    l1s, l3s = np.where(on, l1, 1.0), np.where(on, l3, 1.0)
    return np.where(on, l2 * l4 + l4 / l1s + 1.0 / (l1s * l3s), 0.0)


def _lie_deriv(t):
    return _lie_deriv_u(_log_u(t))


def _make(name, ev, dv, kinks=(), log_form=None):
    return OrliczFunction(name, _scalarize(ev), _scalarize(dv), None, tuple(kinks), log_form)


def _factor_forms():
    identity = _make("identity", lambda t: t * 1.0, lambda t: np.ones_like(t),
                     log_form=LogForm.from_ratio(lambda u: np.ones_like(u), lambda u: np.ones_like(u)))
    one = _make("one", lambda t: np.ones_like(t), lambda t: np.zeros_like(t),
                log_form=LogForm.from_value(lambda u: np.ones_like(u), lambda u: np.zeros_like(u)))
    logp = _make("logp", lambda t: log_plus_iter(t, 1),
                 lambda t: np.where(t > 1.0, 1.0 / np.maximum(t, 1.0), 0.0), kinks=(1.0,),
                 log_form=LogForm.from_value(lambda u: np.maximum(u, 0.0),
                                             lambda u: np.where(u > 0.0, 1.0, 0.0)))

    def loglog_dlog(u):
        return np.where(u > 1.0, 1.0 / np.maximum(u, 1.0), 0.0)
    loglogp = _make("loglogp", lambda t: log_plus_iter(t, 2),
                    lambda t: np.where(t > E, 1.0 / (np.maximum(t, E) * np.log(np.maximum(t, E))), 0.0),
                    kinks=(E,),
                    log_form=LogForm.from_value(lambda u: _iterates(u)[1], loglog_dlog))

    def log4_dlog(u):
        l1, l2, l3, _ = _iterates(u)
        on = l3 > 1.0
        return np.where(on, 1.0 / np.where(on, l1 * l2 * l3, 1.0), 0.0)

    def log4_deriv(t):
        t = np.asarray(t, dtype=float)
        with np.errstate(over="ignore", divide="ignore"):
            return np.where(t > E_E_E, log4_dlog(_log_u(t)) / np.maximum(t, 1.0), 0.0)
    log4p = _make("log4p", lambda t: log_plus_iter(t, 4), log4_deriv, kinks=(E_E_E,),
                  log_form=LogForm.from_value(lambda u: _iterates(u)[3], log4_dlog))
    return {f.name: f for f in (identity, one, logp, loglogp, log4p)}


def _builtins():
    out = {
        "psi0": _make("psi0", _psi0_eval, _psi0_deriv,
                      log_form=LogForm.from_ratio(_psi0_ratio, _psi0_deriv_u)),
        "llogl": _make("llogl", _llogl_eval, _llogl_deriv, kinks=(1.0,),
                       log_form=LogForm.from_ratio(lambda u: np.maximum(u, 0.0), _llogl_deriv_u)),
        "lloglogl": _make("lloglogl", _lloglogl_eval, _lloglogl_deriv, kinks=(E,),
                          log_form=LogForm.from_ratio(lambda u: _iterates(u)[1], _lloglogl_deriv_u)),
        "sjolin": _make("sjolin", _sjolin_eval, _sjolin_deriv, kinks=(E,),
                        log_form=LogForm.from_ratio(lambda u: _iterates(u)[0] * _iterates(u)[1],
                                                    _sjolin_deriv_u)),
        "lie": _make("lie", _lie_eval, _lie_deriv, kinks=(E, E_E_E),
                     log_form=LogForm.from_ratio(_lie_ratio, _lie_deriv_u)),
    }
    out.update(_factor_forms())
    return out


BUILTINS: dict[str, OrliczFunction] = _builtins()
GAUGE_NAMES = ("psi0", "llogl", "lloglogl", "sjolin", "lie")


def compose_product(m: OrliczFunction, s: OrliczFunction) -> OrliczFunction:
    """Return ``Phi = M * S`` with the product-rule derivative."""
    def ev(t):
        return m.eval(t) * s.eval(t)

    def dv(t):
        return m.deriv(t) * s.eval(t) + m.eval(t) * s.deriv(t)

    log_form = None
    if m.log_form is not None and s.log_form is not None:
        mf, sf = m.log_form, s.log_form
        log_form = LogForm(
            value=lambda u: mf.value(u) * sf.value(u),
            ratio=lambda u: mf.ratio(u) * sf.value(u),
            deriv=lambda u: mf.deriv(u) * sf.value(u) + mf.ratio(u) * sf.dlog(u),
            dlog=lambda u: mf.dlog(u) * sf.value(u) + mf.value(u) * sf.dlog(u),
        )
    kinks = tuple(sorted(set(m.kinks) | set(s.kinks)))
    return OrliczFunction(f"product:{m.name}:{s.name}", ev, dv, (m, s), kinks, log_form)


def orlicz(name: str) -> OrliczFunction:
    """Look up a gauge or factor by registry name, including ``product:<m>:<s>``."""
    if name.startswith("product:"):
        parts = name.split(":")
        if len(parts) != 3:
            raise InvalidInput(f"bad product gauge name {name!r}; want product:<m>:<s>")
        return compose_product(orlicz(parts[1]), orlicz(parts[2]))
    try:
        return BUILTINS[name]
    except KeyError:
        raise InvalidInput(f"unknown gauge {name!r}") from None


# ---- Musielak-Orlicz gauges -----------------------------------------------

@dataclass(frozen=True)
class MusielakGauge:
    """A spatially weighted gauge ``Psi(s, t)`` with ``s = |x|``."""

    name: str
    eval: Callable
    deriv_t: Callable
    kernel: Optional[Callable] = None

    def __call__(self, s, t):
        return self.eval(s, t)


def hlog_kernel(s, t):
    """``g(s, t) = 1 / (log(e + t) + log(e + s))``."""
    return 1.0 / (np.log(E + np.asarray(t, dtype=float)) + np.log(E + np.asarray(s, dtype=float)))


def _hlog_eval(s, t):
    return np.asarray(t, dtype=float) * hlog_kernel(s, t)


def _hlog_deriv_t(s, t):
    t = np.asarray(t, dtype=float)
    d = np.log(E + t) + np.log(E + np.asarray(s, dtype=float))
    return 1.0 / d - t / ((E + t) * d**2)


HLOG = MusielakGauge("hlog", _hlog_eval, _hlog_deriv_t, hlog_kernel)


def eval_gauge(gauge: MusielakGauge, s, t):
    """Evaluate ``Psi(s, t)``; ``Psi(s, 0) = 0``."""
    return gauge.eval(s, t)


def constant_gauge(phi: OrliczFunction) -> MusielakGauge:
    """Wrap an Orlicz function as a gauge that ignores position."""
    return MusielakGauge(phi.name, lambda s, t: phi.eval(t), lambda s, t: phi.deriv(t))


def musielak(name: str) -> MusielakGauge:
    """``hlog`` is the log-weighted gauge; other names give position-free gauges."""
    if name == "hlog":
        return HLOG
    return constant_gauge(orlicz(name))


@dataclass(frozen=True)
class GaugeFamilySpec:
    """Pointwise gauges ``Psi_x`` built from a base Orlicz function.

    With ``weight="log"`` the base is damped by
    ``log(e+t) / (log(e+t) + log(e+|x|))``; for ``base = psi0`` this is
    exactly the ``hlog`` gauge.
    """

    base: OrliczFunction
    weight: str = "log"

    def __post_init__(self):
        if self.weight not in ("none", "log"):
            raise InvalidInput(f"unknown weight mode {self.weight!r}")

    def Psi(self, s, t):
        t = np.asarray(t, dtype=float)
        if self.weight == "none":
            return self.base.eval(t)
        lt = np.log(E + t)
        return self.base.eval(t) * lt / (lt + np.log(E + np.asarray(s, dtype=float)))

    def psi(self, s, t):
        t = np.asarray(t, dtype=float)
        if self.weight == "none":
            return self.base.deriv(t)
        lt = np.log(E + t)
        w = np.log(E + np.asarray(s, dtype=float))
        d = lt + w
        return self.base.deriv(t) * lt / d + self.base.eval(t) * w / ((E + t) * d**2)

    def at(self, s: float) -> OrliczFunction:
        """The Orlicz function ``Psi_x`` at distance ``s`` from the origin."""
        if self.weight == "none":
            return self.base
        return OrliczFunction(f"{self.base.name}@{s:g}",
                              _scalarize(lambda t: self.Psi(s, t)),
                              _scalarize(lambda t: self.psi(s, t)),
                              None, self.base.kinks)

    def as_gauge(self) -> MusielakGauge:
        return MusielakGauge(f"{self.base.name}/{self.weight}", self.Psi, self.psi)


def family_properties(family: GaugeFamilySpec, radii, ts, alpha0: float = 1.0,
                      beta0: float = 10.0) -> dict:
    """Sampled versions of the three structural gauge hypotheses.

    Returns the doubling constant ``max Psi_x(2t)/Psi_x(t)``, the extreme
    radii realising min/max of ``Psi`` over the compact (per ``t``), and
    ``max_x int_{alpha0}^{beta0} psi_x(s)/s ds``.
    """
    radii = np.asarray(radii, dtype=float)
    ts = np.asarray(ts, dtype=float)
    ss, tt = np.meshgrid(radii, ts, indexing="ij")
    base = family.Psi(ss, tt)
    doubled = family.Psi(ss, 2 * tt)
    pos = base > 0
    doubling = float(np.max(doubled[pos] / base[pos])) if pos.any() else 0.0
    argmin = radii[np.argmin(base, axis=0)]
    argmax = radii[np.argmax(base, axis=0)]
    integrals = [f_alpha(family.at(s), alpha0, beta0) for s in radii]
    return {
        "doubling_constant": doubling,
        "argmin_radius": argmin,
        "argmax_radius": argmax,
        "max_log_integral": float(max(integrals)),
    }


# ---- F_alpha and closed forms -----------------------------------------------

def f_alpha(phi: OrliczFunction, alpha: float, t: float) -> float:
    """``int_alpha^t psi(s)/s ds`` by adaptive quadrature (0 when ``t <= alpha``).

    Integrates ``psi(e^u)`` in ``u = log s``; raises NonConvergence on failure.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if t <= alpha:
        return 0.0
    lf = phi.log_form
    if lf is not None:
        integrand = lf.deriv
    else:
        def integrand(u):
            return phi.deriv(math.exp(u))
    a, b = math.log(alpha), math.log(t)
    pts = [math.log(k) for k in phi.kinks if k > 0]
    return quadrature.adaptive(lambda u: float(integrand(u)), a, b, points=pts)


def closed_form_F_sjolin(t):
    """Antiderivative of ``psi_sjolin(s)/s``, valid for ``s >= e``."""
    l1 = log_plus_iter(t, 1)
    l2 = log_plus_iter(t, 2)
    return 0.5 * l1**2 * l2 + l1 * l2 - 0.25 * l1**2


def closed_form_F_sjolin_log(u):
    """The same antiderivative with ``u = log t`` as input."""
    l1, l2, _, _ = _iterates(np.asarray(u, dtype=float))
    out = 0.5 * l1**2 * l2 + l1 * l2 - 0.25 * l1**2
    return float(out) if np.ndim(u) == 0 else out


def lie_target_log(u):
    """``log(Psi0(t) * log+^4 t)`` at ``t = e^u`` (``-inf`` where the factor vanishes)."""
    u = np.asarray(u, dtype=float)
    l4 = _iterates(u)[3]
    with np.errstate(divide="ignore"):
        out = u - np.log(np.logaddexp(1.0, u)) + np.log(l4)
    return float(out) if np.ndim(u) == 0 else out


# ---- functionals ------------------------------------------------------------

Gauge = Union[MusielakGauge, OrliczFunction, GaugeFamilySpec]


def orlicz_functional(f, gauge: Gauge, region: Optional[tuple[float, float]] = None) -> float:
    """Midpoint-rule value of ``int_region Psi(|x|, |f(x)|) dx``.

    ``f`` is anything with ``x``, ``values`` and ``h`` attributes (a
    SampledFunction, or a MaximalProfile on its grid). A cell belongs to the
    region when its midpoint does.
    """
    x = np.asarray(f.x)
    v = np.abs(np.asarray(f.values, dtype=float))
    if region is None:
        mask = np.ones(x.shape, dtype=bool)
    else:
        lo, hi = region
        mask = (x >= lo) & (x <= hi)
    if not mask.any():
        raise EmptyRegion(f"region {region} contains no grid cell")
    if isinstance(gauge, OrliczFunction):
        vals = gauge.eval(v[mask])
    elif isinstance(gauge, GaugeFamilySpec):
        vals = gauge.Psi(np.abs(x[mask]), v[mask])
    else:
        vals = gauge.eval(np.abs(x[mask]), v[mask])
    return float(f.h * np.sum(vals))


def sandwich_integral(s: float, t: float) -> float:
    """``int_0^t g(s, tau) d tau`` at relative tolerance 1e-9."""
    if t <= 0:
        return 0.0
    # integrate in v = log(e + tau) - 1: d tau = e^(v+1) dv, smooth over many
    # decades and exact at small t
    b = math.log1p(t / E)
    ls = 1.0 + math.log(E + s)

    def integrand(v):
        return E * math.exp(v) / (v + ls)
    return quadrature.adaptive(integrand, 0.0, b)
