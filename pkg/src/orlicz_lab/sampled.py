"""Uniform-grid samples on a segment or on the circle, plus generators."""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidInput

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Cell-midpoint samples of ``f``; read as piecewise constant on cells.

    On the line the domain is ``[a, b]`` and ``f`` vanishes outside it. On
    the torus the domain is ``[-pi, pi)`` with circumference ``2 pi``.
    """

    domain: tuple[float, float]
    values: np.ndarray
    torus: bool = False
    support_hint: Optional[tuple[float, float]] = None

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.ndim != 1 or vals.size < 2:
            raise InvalidInput("need at least 2 samples in a 1-D array")
        if not np.all(np.isfinite(vals)):
            raise InvalidInput("samples must be finite")
        a, b = map(float, self.domain)
        if self.torus and not math.isclose(b - a, TWO_PI, rel_tol=1e-12):
            raise InvalidInput("torus domain must have length 2*pi")
        if not b > a:
            raise InvalidInput("empty domain")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "domain", (a, b))
        if self.support_hint is not None:
            lo, hi = map(float, self.support_hint)
            object.__setattr__(self, "support_hint", (lo, hi))
            outside = (self.x < lo) | (self.x > hi)
            if np.any(vals[outside] != 0.0):
                raise InvalidInput("nonzero samples outside support_hint")

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def h(self) -> float:
        a, b = self.domain
        return (b - a) / self.n

    @property
    def x(self) -> np.ndarray:
        a = self.domain[0]
        return a + (np.arange(self.n) + 0.5) * self.h

    @property
    def edges(self) -> np.ndarray:
        return self.domain[0] + np.arange(self.n + 1) * self.h

    def l1_norm(self) -> float:
        return float(self.h * np.sum(np.abs(self.values)))

    def integral(self) -> float:
        return float(self.h * np.sum(self.values))

    def support(self) -> Optional[tuple[float, float]]:
        """Cell-edge hull of the nonzero cells, or None for f = 0."""
        nz = np.flatnonzero(self.values)
        if nz.size == 0:
            return None
        e = self.edges
        return float(e[nz[0]]), float(e[nz[-1] + 1])

    def scaled(self, c: float) -> "SampledFunction":
        return SampledFunction(self.domain, c * self.values, self.torus, self.support_hint)

    def shifted(self, cells: int) -> "SampledFunction":
        """Translate by ``cells * h``; on the line the samples must stay inside."""
        if self.torus:
            return SampledFunction(self.domain, np.roll(self.values, cells), True)
        nz = np.flatnonzero(self.values)
        if nz.size and (nz[0] + cells < 0 or nz[-1] + cells >= self.n):
            raise InvalidInput("shift moves the support outside the domain")
        out = np.zeros(self.n)
        if nz.size:
            out[nz + cells] = self.values[nz]
        hint = None
        if self.support_hint is not None:
            hint = (self.support_hint[0] + cells * self.h, self.support_hint[1] + cells * self.h)
        return SampledFunction(self.domain, out, False, hint)

    def with_values(self, values) -> "SampledFunction":
        return SampledFunction(self.domain, values, self.torus)


def _domain(torus: bool, domain):
    if torus:
        return (-math.pi, math.pi)
    return tuple(map(float, domain))


def _hull(xs, vals, h):
    nz = np.flatnonzero(vals)
    if nz.size == 0:
        return None
    return float(xs[nz[0]] - h / 2), float(xs[nz[-1]] + h / 2)


def _grid(n, torus, domain):
    a, b = _domain(torus, domain)
    h = (b - a) / n
    return (a, b), a + (np.arange(n) + 0.5) * h, h


def indicator(delta: float, n: int, domain=(-1.0, 1.0), torus: bool = False,
              height: Optional[float] = None) -> SampledFunction:
    """``height * chi_{|x| < delta}`` with ``height = 1/delta`` by default."""
    if delta <= 0:
        raise InvalidInput("delta must be positive")
    dom, xs, h = _grid(n, torus, domain)
    # small slack so grid-aligned delta includes exactly the cells inside
    vals = np.where(np.abs(xs) < delta - 1e-9 * h, 1.0 / delta if height is None else height, 0.0)
    return SampledFunction(dom, vals, torus, _hull(xs, vals, h))


def meanzero(delta: float, n: int, domain=(-1.0, 1.0), torus: bool = False) -> SampledFunction:
    """The antisymmetric pair ``delta^-1 (chi_[0,delta] - chi_[-delta,0])``."""
    if delta <= 0:
        raise InvalidInput("delta must be positive")
    dom, xs, h = _grid(n, torus, domain)
    inside = np.abs(xs) < delta - 1e-9 * h
    vals = np.where(inside, np.sign(xs) / delta, 0.0)
    return SampledFunction(dom, vals, torus, _hull(xs, vals, h))


def constant(c: float, n: int, domain=(-1.0, 1.0), torus: bool = False) -> SampledFunction:
    dom, xs, _ = _grid(n, torus, domain)
    return SampledFunction(dom, np.full(n, float(c)), torus)


def cosine(n: int) -> SampledFunction:
    dom, xs, _ = _grid(n, True, None)
    return SampledFunction(dom, np.cos(xs), True)


def from_csv(path: str, torus: bool = False) -> SampledFunction:
    """Load a two-column ``x,value`` CSV with a header and a uniform grid."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InvalidInput(f"cannot read {path}: {exc}") from None
    if not rows or [c.strip() for c in rows[0]] != ["x", "value"]:
        raise InvalidInput("CSV header must be 'x,value'")
    try:
        data = np.array([[float(c) for c in r] for r in rows[1:] if r], dtype=float)
    except ValueError:
        raise InvalidInput("CSV contains non-numeric entries") from None
    if data.ndim != 2 or data.shape[1] != 2 or data.shape[0] < 2:
        raise InvalidInput("CSV needs at least two rows of two columns")
    x, v = data[:, 0], data[:, 1]
    d = np.diff(x)
    h = (x[-1] - x[0]) / (x.size - 1)
    if h <= 0 or np.max(np.abs(d - h)) > 1e-6 * h:
        raise InvalidInput("non-uniform grid")
    dom = (x[0] - h / 2, x[-1] + h / 2)
    if torus:
        if not math.isclose(dom[1] - dom[0], TWO_PI, rel_tol=1e-9):
            raise InvalidInput("torus CSV must cover one period")
        dom = (-math.pi, math.pi)
    return SampledFunction(dom, v, torus)


def to_csv(f: SampledFunction, path: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "value"])
        for xi, vi in zip(f.x, f.values):
            w.writerow([repr(float(xi)), repr(float(vi))])


_SPEC = re.compile(r"^(indicator|meanzero|constant|cosine|csv)(?::(.*))?$")


def parse_function_spec(spec: str, n: int = 4096, domain=(-1.0, 1.0),
                        torus: bool = False) -> SampledFunction:
    """Build a SampledFunction from ``indicator:delta=<v>``, ``meanzero:delta=<v>``,
    ``constant:c=<v>``, ``cosine`` or ``csv:<path>``."""
    m = _SPEC.match(spec.strip())
    if not m:
        raise InvalidInput(f"unknown function spec {spec!r}")
    kind, arg = m.group(1), m.group(2)
    if kind == "csv":
        if not arg:
            raise InvalidInput("csv spec needs a path")
        return from_csv(arg, torus)
    if kind == "cosine":
        return cosine(n)
    key = "c" if kind == "constant" else "delta"
    if not arg or not arg.startswith(key + "="):
        raise InvalidInput(f"{kind} spec needs {key}=<value>")
    try:
        val = float(arg[len(key) + 1:])
    except ValueError:
        raise InvalidInput(f"bad number in {spec!r}") from None
    if n < 2:
        raise InvalidInput("n must be at least 2")
    if kind == "constant":
        return constant(val, n, domain, torus)
    if not val > 0:
        raise InvalidInput("delta must be positive")
    maker = indicator if kind == "indicator" else meanzero
    f = maker(val, n, domain, torus)
    if not np.any(f.values):
        raise InvalidInput("grid too coarse: support contains no cell")
    return f
