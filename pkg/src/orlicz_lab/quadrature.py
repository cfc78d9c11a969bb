"""Adaptive quadrature wrapper with explicit failure reporting."""

from __future__ import annotations

import math
from typing import Callable, Iterable

from scipy import integrate

from .errors import NonConvergence

RTOL = 1e-9
BUDGET = 10_000


def adaptive(
    func: Callable[[float], float],
    a: float,
    b: float,
    points: Iterable[float] = (),
    rtol: float = RTOL,
    budget: int = BUDGET,
) -> float:
    """Integrate ``func`` over ``[a, b]`` with adaptive Gauss-Kronrod (QUADPACK).

    ``points`` are interior break points (kinks of the integrand); those
    outside ``(a, b)`` are dropped. Raises :class:`NonConvergence` when the
    scheme reports failure instead of returning a silently bad value.
    """
    if b <= a:
        return 0.0
    brk = sorted({p for p in points if a < p < b})
    # quad ignores `limit` when `points` is given; integrate piecewise instead
    edges = [a, *brk, b]
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        out = integrate.quad(func, lo, hi, epsabs=0.0, epsrel=rtol,
                             limit=budget, full_output=1)
        if len(out) > 3:
            value, err = out[0], out[1]
            # roundoff-limited results that are still accurate are accepted
            if not (math.isfinite(value) and err <= 10 * rtol * abs(value) + 1e-300):
                raise NonConvergence(
                    f"quadrature on [{lo:g}, {hi:g}] failed: {out[3].splitlines()[0]}")
        total += out[0]
    return total
