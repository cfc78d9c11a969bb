"""Discrete Hardy-Littlewood, smooth and Poisson maximal functions.

Samples are read as piecewise constant on their cells, so window averages
and convolutions are computed exactly for that interpolant (prefix sums for
windows, cell-integrated kernels for convolutions).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence, Union

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.special import roots_legendre

from .errors import BadRadiusPolicy, InvalidInput
from .sampled import TWO_PI, SampledFunction

_CHUNK = 2_000_000  # matrix entries per vectorised block


@dataclass(frozen=True, eq=False)
class MaximalProfile:
    """Values of a maximal function at points ``x`` with the maximising radius."""

    base: SampledFunction
    x: np.ndarray
    mvalues: np.ndarray
    argmax_radius: np.ndarray
    kind: str = "hl"
    on_grid: bool = True

    @property
    def values(self) -> np.ndarray:
        return self.mvalues

    @property
    def h(self) -> float:
        return self.base.h

    def as_sampled(self) -> SampledFunction:
        if not self.on_grid:
            raise InvalidInput("profile is not on the base grid")
        return SampledFunction(self.base.domain, self.mvalues, self.base.torus)


def analytic_maximal_indicator(delta: float, x):
    """Centred maximal function of ``delta^-1 chi_[-delta, delta]`` on the line."""
    if not 0 < delta:
        raise ValueError("delta must be positive")
    ax = np.abs(np.asarray(x, dtype=float))
    out = np.where(ax <= delta, 1.0 / delta, 1.0 / (ax + delta))
    return float(out) if np.ndim(x) == 0 else out


# ---- window averages ------------------------------------------------------

class _Windows:
    """Exact window integrals of |f| (piecewise constant) via prefix sums."""

    def __init__(self, f: SampledFunction, boundary: str):
        if boundary not in ("clip", "zero"):
            raise InvalidInput(f"unknown boundary mode {boundary!r}")
        self.f = f
        self.boundary = boundary
        self.a, self.b = f.domain
        self.n, self.h = f.n, f.h
        self.absv = np.abs(f.values)
        self.prefix = np.concatenate(([0.0], np.cumsum(self.absv))) * self.h
        self.total = self.prefix[-1]

    def cum(self, y):
        p = np.clip((y - self.a) / self.h, 0.0, self.n)
        j = np.minimum(np.floor(p).astype(np.int64), self.n - 1)
        return self.prefix[j] + (p - j) * self.h * self.absv[j]

    def cum_torus(self, y):
        k = np.floor((y - self.a) / TWO_PI)
        rem = y - k * TWO_PI
        return k * self.total + self.cum(rem)

    def average(self, x, r):
        x = np.asarray(x, dtype=float)
        if self.f.torus:
            return (self.cum_torus(x + r) - self.cum_torus(x - r)) / (2.0 * r)
        lo, hi = x - r, x + r
        if self.boundary == "zero":
            return (self.cum(hi) - self.cum(lo)) / (2.0 * r)
        lo = np.maximum(lo, self.a)
        hi = np.minimum(hi, self.b)
        return (self.cum(hi) - self.cum(lo)) / (hi - lo)

    @cached_property
    def breakpoints(self) -> np.ndarray:
        """Cell edges where |f| jumps, plus the domain ends on the line."""
        v = self.absv
        if self.f.torus:
            j = np.flatnonzero(v != np.roll(v, 1))
            return self.a + j * self.h
        left = np.concatenate(([0.0], v))
        right = np.concatenate((v, [0.0]))
        j = np.flatnonzero(left != right)
        pts = np.concatenate((self.a + j * self.h, [self.a, self.b]))
        return np.unique(pts)

    def event_radii(self, x: np.ndarray) -> np.ndarray:
        """Radii at which a window edge crosses a breakpoint (``nan`` = unused)."""
        e = self.breakpoints
        if self.f.torus:
            fwd = np.mod(e[None, :] - x[:, None], TWO_PI)
            bwd = np.mod(x[:, None] - e[None, :], TWO_PI)
            r = np.concatenate((fwd, bwd, np.full((x.size, 1), math.pi)), axis=1)
            r[r > math.pi] = np.nan
        else:
            r = np.abs(x[:, None] - e[None, :])
        r[~(r > 0)] = np.nan
        return r

    def support_radii(self, x: np.ndarray) -> np.ndarray:
        hint = self.f.support_hint
        if hint is None:
            return np.empty((x.size, 0))
        e = np.asarray(hint, dtype=float)
        if self.f.torus:
            d = np.abs(np.mod(x[:, None] - e[None, :] + math.pi, TWO_PI) - math.pi)
        else:
            d = np.abs(x[:, None] - e[None, :])
        d[~(d > 0)] = np.nan
        return d

    @property
    def kmax(self) -> int:
        if self.f.torus:
            return max(1, int(math.floor(math.pi / self.h + 1e-9)))
        return self.n


def _best(avg: np.ndarray, radii: np.ndarray):
    avg = np.where(np.isnan(radii), -np.inf, avg)
    k = np.argmax(avg, axis=1)
    rows = np.arange(avg.shape[0])
    return avg[rows, k], radii[rows, k]


def _chunks(m: int, width: int):
    step = max(1, _CHUNK // max(width, 1))
    for s in range(0, m, step):
        yield slice(s, min(m, s + step))


def _eval_points(f: SampledFunction, at, boundary: str):
    if at is None:
        return f.x, True
    pts = np.atleast_1d(np.asarray(at, dtype=float))
    if f.torus:
        pts = np.mod(pts - f.domain[0], TWO_PI) + f.domain[0]
    elif boundary == "clip" and (np.any(pts < f.domain[0]) or np.any(pts > f.domain[1])):
        raise InvalidInput("clipped windows need evaluation points inside the domain")
    return pts, False


RadiusPolicy = Union[str, Sequence[float]]


def hl_maximal(f: SampledFunction, radii: RadiusPolicy = "all-grid", at=None,
               boundary: str = "clip") -> MaximalProfile:
    """Centred Hardy-Littlewood maximal function of ``f``.

    ``radii`` is ``"all-grid"`` (multiples ``k h`` up to the domain size, or
    up to ``pi`` on the torus, plus radii putting a window edge on a
    ``support_hint`` edge), ``"exact"`` (sup over every ``r > 0``, attained
    where a window edge meets a jump of ``f``), or an explicit list.
    ``boundary="clip"`` clips windows to the segment and divides by the
    clipped length; ``"zero"`` treats ``f`` as zero outside the segment.
    The torus always wraps.
    """
    w = _Windows(f, boundary)
    x, on_grid = _eval_points(f, at, boundary)
    m = x.size
    mv = np.empty(m)
    arg = np.empty(m)
    if isinstance(radii, str):
        if radii not in ("all-grid", "exact"):
            raise BadRadiusPolicy(f"unknown radius policy {radii!r}")
        width = 3 * (w.breakpoints.size + 3)
        for sl in _chunks(m, width):
            xs = x[sl]
            ev = w.event_radii(xs)
            if radii == "exact":
                cand = ev
            else:
                # the average is monotone in r between events, so only the
                # grid radii adjacent to an event can be maximal
                kmax = w.kmax
                with np.errstate(invalid="ignore"):
                    k0 = np.floor(ev / w.h)
                ks = np.concatenate((k0, k0 + 1, np.ones((xs.size, 1)),
                                     np.full((xs.size, 1), kmax)), axis=1)
                ks = np.where(np.isnan(ks), np.nan, np.clip(ks, 1, kmax))
                cand = np.concatenate((ks * w.h, w.support_radii(xs)), axis=1)
            safe = np.where(np.isnan(cand), 1.0, cand)
            avg = w.average(xs[:, None], safe)
            mv[sl], arg[sl] = _best(avg, cand)
    else:
        rr = np.asarray(list(radii), dtype=float)
        if rr.size == 0 or np.any(~(rr > 0)):
            raise BadRadiusPolicy("radius list must be nonempty and positive")
        for sl in _chunks(m, rr.size):
            xs = x[sl]
            cand = np.broadcast_to(rr, (xs.size, rr.size))
            avg = w.average(xs[:, None], cand)
            mv[sl], arg[sl] = _best(avg, cand)
    return MaximalProfile(f, x, mv, arg, "hl", on_grid)


def distribution_function(p: MaximalProfile, alphas) -> list[tuple[float, float]]:
    """``[(alpha, h * #{i : M_i > alpha})]`` for a profile on its grid."""
    alphas = list(alphas)
    if not alphas:
        raise ValueError("alphas must be nonempty")
    if not p.on_grid:
        raise InvalidInput("distribution function needs a profile on the grid")
    return [(float(a), float(p.h * np.count_nonzero(p.mvalues > a))) for a in alphas]


# ---- smooth bump --------------------------------------------------------------

def _smooth_step(u):
    """C-infinity step: 1 at u <= 0, 0 at u >= 1."""
    u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(u < 1.0, np.exp(-1.0 / np.where(u < 1.0, 1.0 - u, 1.0)), 0.0)
        b = np.where(u > 0.0, np.exp(-1.0 / np.where(u > 0.0, u, 1.0)), 0.0)
    return a / (a + b)


@dataclass(frozen=True, eq=False)
class BumpProfile:
    """Radial bump on [-1, 1]: ``c0`` on ``|x| <= 1/2``, smooth decay to 0 at 1.

    ``cdf`` is the exact running integral of the 1-D bump, tabulated with
    Gauss-Legendre panels and interpolated by a cubic Hermite spline whose
    slopes are the profile itself.
    """

    c0: float
    step_mass: float
    _spline: CubicHermiteSpline

    @classmethod
    def standard(cls, nodes: int = 2049) -> "BumpProfile":
        w = np.linspace(0.0, 1.0, nodes)
        gx, gw = roots_legendre(8)
        lo, hi = w[:-1], w[1:]
        mid, half = (lo + hi) / 2, (hi - lo) / 2
        pts = mid[:, None] + half[:, None] * gx[None, :]
        panel = half * (_smooth_step(pts) @ gw)
        q_cum = np.concatenate(([0.0], np.cumsum(panel)))
        step_mass = float(q_cum[-1])
        spline = CubicHermiteSpline(w, q_cum, _smooth_step(w))
        return cls(1.0 / (1.0 + step_mass), step_mass, spline)

    def profile(self, r):
        r = np.abs(np.asarray(r, dtype=float))
        out = np.where(r <= 0.5, self.c0, self.c0 * _smooth_step(2.0 * r - 1.0))
        out = np.where(r >= 1.0, 0.0, out)
        return float(out) if np.ndim(r) == 0 else out

    def _half_mass(self, r):
        """``int_0^r profile`` for ``0 <= r``."""
        r = np.minimum(r, 1.0)
        inner = self.c0 * np.minimum(r, 0.5)
        outer = 0.5 * self.c0 * self._spline(np.clip(2.0 * r - 1.0, 0.0, 1.0))
        return inner + np.where(r > 0.5, outer, 0.0)

    def cdf(self, u):
        """``int_{-inf}^u phi``, with ``phi`` the 1-D bump of unit mass."""
        u = np.asarray(u, dtype=float)
        return 0.5 + np.sign(u) * self._half_mass(np.abs(u))

    @property
    def hl_constant(self) -> float:
        """``sup phi * |B(0,1)|``: bounds ``|f * phi_eps| <= C M(f)``."""
        return 2.0 * self.c0


def geometric_epsilons(f: SampledFunction, per_octave: int = 4, top: Optional[float] = None):
    """Dilations from ``h/2`` up to ``top`` (default: twice the domain length)."""
    a, b = f.domain
    top = 2.0 * (b - a) if top is None else top
    k = int(math.ceil(per_octave * math.log2(top / (f.h / 2)))) + 1
    return (f.h / 2) * 2.0 ** (np.arange(k) / per_octave)


def _check_list(vals, what):
    arr = np.asarray(list(vals), dtype=float)
    if np.any(~(arr > 0)):
        raise BadRadiusPolicy(f"{what} must be positive")
    return arr


def smooth_maximal(f: SampledFunction, bump: Optional[BumpProfile] = None, epsilons=None,
                   at=None, relative=()) -> MaximalProfile:
    """``max_eps |(f * phi_eps)(x)|`` over a finite dilation list.

    ``relative`` adds per-point dilations ``c * |x|`` (used for far-field
    points where the natural scale is the distance to the origin).
    """
    if f.torus:
        raise InvalidInput("smooth maximal function is defined on the line")
    bump = bump or BumpProfile.standard()
    eps = geometric_epsilons(f) if epsilons is None else _check_list(epsilons, "epsilons")
    rel = _check_list(relative, "relative factors")
    if eps.size == 0 and rel.size == 0:
        raise BadRadiusPolicy("need at least one dilation")
    x, on_grid = _eval_points(f, at, "zero")
    v = np.asarray(f.values, dtype=float)
    nz = np.flatnonzero(v)
    best = np.zeros(x.size)
    arg = np.full(x.size, eps[0] if eps.size else np.nan)
    if nz.size == 0:
        if eps.size == 0:
            arg = rel[0] * np.abs(x)
        return MaximalProfile(f, x, best, arg, "smooth", on_grid)
    vnz = v[nz]
    left = f.edges[nz]
    right = left + f.h

    def update(vals, e):
        nonlocal best, arg
        a = np.abs(vals)
        better = a > best
        best = np.where(better, a, best)
        arg = np.where(better, e, arg)

    def sparse(xs, e):
        # e: scalar or per-point array
        e = np.asarray(e, dtype=float).reshape(-1, 1) if np.ndim(e) else e
        out = np.empty(xs.size)
        for sl in _chunks(xs.size, nz.size):
            xx = xs[sl, None]
            ee = e[sl] if np.ndim(e) else e
            wts = bump.cdf((xx - left) / ee) - bump.cdf((xx - right) / ee)
            out[sl] = np.sum(wts * vnz, axis=1)
        return out

    for e in eps:
        k = int(math.ceil(e / f.h)) + 1
        if on_grid and (2 * k + 1) * f.n < nz.size * x.size:
            d = np.arange(-k, k + 1) * f.h
            w = bump.cdf((d + f.h / 2) / e) - bump.cdf((d - f.h / 2) / e)
            vals = np.convolve(v, w)[k:k + f.n]
        else:
            vals = sparse(x, e)
        update(vals, e)
    ax = np.abs(x)
    for c in rel:
        e = c * ax
        ok = e > 0
        vals = np.zeros(x.size)
        if ok.any():
            vals[ok] = sparse(x[ok], e[ok])
        update(np.where(ok, vals, 0.0), np.where(ok, e, np.nan))
    return MaximalProfile(f, x, best, arg, "smooth", on_grid)


# ---- Poisson ------------------------------------------------------------------

def poisson_antiderivative(theta, r: float):
    """Continuous increasing antiderivative of ``P_r`` on the real line."""
    c = (1.0 + r) / (1.0 - r)
    theta = np.asarray(theta, dtype=float)
    k = np.floor((theta + math.pi) / TWO_PI)
    red = theta - k * TWO_PI
    return 2.0 * np.arctan(c * np.tan(red / 2.0)) + TWO_PI * k


def poisson_kernel(theta, r: float):
    theta = np.asarray(theta, dtype=float)
    return (1.0 - r * r) / (1.0 - 2.0 * r * np.cos(theta) + r * r)


def poisson_maximal(f: SampledFunction, rs, at=None) -> MaximalProfile:
    """``max_r |(P_r * f)(theta)| / (2 pi)`` over the listed ``r`` in (0, 1)."""
    if not f.torus:
        raise InvalidInput("Poisson maximal function needs a function on the torus")
    rs = np.asarray(list(rs), dtype=float)
    if rs.size == 0 or np.any((rs <= 0) | (rs >= 1)):
        raise BadRadiusPolicy("r values must be nonempty and inside (0, 1)")
    x, on_grid = _eval_points(f, at, "clip")
    v = np.asarray(f.values, dtype=float)
    nz = np.flatnonzero(v)
    best = np.zeros(x.size)
    arg = np.full(x.size, rs[0])
    if nz.size == 0:
        return MaximalProfile(f, x, best, arg, "poisson", on_grid)
    vnz = v[nz]
    h = f.h
    # telescoped form: sum_j v_j [A(x - e_j) - A(x - e_j - h)]
    #   = sum_j (v_j - v_{j-1}) A(x - e_j) + 2 pi v_{n-1}
    jumps = np.flatnonzero(v != np.roll(v, 1))
    dv = (v - np.roll(v, 1))[jumps]
    use_jumps = jumps.size < nz.size
    for r in rs:
        if use_jumps:
            ej = f.edges[jumps]
            vals = np.empty(x.size)
            for sl in _chunks(x.size, jumps.size):
                vals[sl] = np.sum(dv * poisson_antiderivative(x[sl, None] - ej[None, :], r),
                                  axis=1) / TWO_PI + v[-1]
        elif on_grid:
            d = np.arange(f.n) * h
            wts = (poisson_antiderivative(d + h / 2, r) - poisson_antiderivative(d - h / 2, r)) / TWO_PI
            vals = np.empty(x.size)
            idx = np.arange(f.n)
            for sl in _chunks(f.n, nz.size):
                off = np.mod(idx[sl, None] - nz[None, :], f.n)
                vals[sl] = np.sum(wts[off] * vnz, axis=1)
        else:
            left = f.edges[nz]
            vals = np.empty(x.size)
            for sl in _chunks(x.size, nz.size):
                dd = x[sl, None] - left[None, :]
                wts = (poisson_antiderivative(dd, r) - poisson_antiderivative(dd - h, r)) / TWO_PI
                vals[sl] = np.sum(wts * vnz, axis=1)
        a = np.abs(vals)
        better = a > best
        best = np.where(better, a, best)
        arg = np.where(better, r, arg)
    return MaximalProfile(f, x, best, arg, "poisson", on_grid)


def default_rs(min_gap: float, per_octave: int = 4) -> np.ndarray:
    """``r = 1 - 2^{-k/per_octave}`` from ``r = 1/2`` until ``1 - r < min_gap``."""
    k = int(math.ceil(per_octave * math.log2(1.0 / min_gap))) + 1
    gaps = 2.0 ** (-np.arange(per_octave, k + 1) / per_octave)
    small = np.linspace(0.05, 0.45, 9)
    return np.concatenate((small, 1.0 - gaps))
