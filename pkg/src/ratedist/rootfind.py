"""Safeguarded scalar root-finding for strictly decreasing functions.

Both dual updates of the solver reduce to finding the unique root of a
smooth, strictly decreasing function on a bracket.  Newton steps give the
few-iteration behavior those updates rely on; a bisection safeguard keeps
every iterate inside the live sign-change bracket so convergence never
depends on the quality of the initial guess.
"""
from __future__ import annotations

from typing import Callable, Optional

import numpy as np


class BracketError(ValueError):
    """The supplied interval does not bracket a sign change."""


class RootConvergenceError(RuntimeError):
    """The iteration failed to locate the root (non-finite function values)."""


def newton_bisect(
    fun: Callable[[float], tuple[float, float]],
    lo: float,
    hi: float,
    x0: Optional[float] = None,
    tol: float = 1e-12,
    max_newton: int = 50,
    max_bisect: int = 200,
    f_lo: Optional[float] = None,
    f_hi: Optional[float] = None,
) -> float:
    """Root of a strictly decreasing ``f`` on ``[lo, hi]``.

    Args:
        fun: callable returning ``(f(x), f'(x))``.
        lo, hi: bracket endpoints with ``f(lo) >= 0 >= f(hi)``.
        x0: optional warm start; must lie strictly inside the bracket to be
            used, otherwise the midpoint is taken.
        tol: absolute tolerance on ``|f(x)|``.
        max_newton: Newton iterations before falling back to pure bisection.
        max_bisect: bisection iterations of the fallback phase.
        f_lo, f_hi: known endpoint values, to skip re-evaluation.

    Returns:
        ``x`` with ``|f(x)| <= tol``, or the bracket midpoint once the
        bracket has collapsed to machine width (the root is then located as
        precisely as double arithmetic allows).

    Raises:
        BracketError: if the endpoints do not satisfy ``f(lo) >= -tol >= ...``.
        RootConvergenceError: if ``fun`` returns non-finite values.
    """
    if not lo < hi:
        raise BracketError(f"empty bracket [{lo}, {hi}]")
    if f_lo is None:
        f_lo = fun(lo)[0]
    if f_lo <= 0.0:
        if f_lo >= -tol:
            return lo
        raise BracketError(f"f(lo) = {f_lo!r} is negative; no root to the right of lo")
    if f_hi is None:
        f_hi = fun(hi)[0]
    if f_hi >= 0.0:
        if f_hi <= tol:
            return hi
        raise BracketError(f"f(hi) = {f_hi!r} is positive; no root to the left of hi")

    eps = np.finfo(float).eps

    def collapsed() -> bool:
        return (hi - lo) <= 4.0 * eps * max(1.0, abs(lo), abs(hi))

    x = x0 if (x0 is not None and lo < x0 < hi) else 0.5 * (lo + hi)
    f, df = fun(x)
    for _ in range(max_newton):
        if not np.isfinite(f):
            raise RootConvergenceError(f"non-finite function value at x = {x!r}")
        if abs(f) <= tol:
            return x
        if f > 0.0:
            lo = x
        else:
            hi = x
        if collapsed():
            return 0.5 * (lo + hi)
        if np.isfinite(df) and df < 0.0:
            x_new = x - f / df
        else:
            x_new = np.nan
        if not (lo < x_new < hi):
            x_new = 0.5 * (lo + hi)
        x = x_new
        f, df = fun(x)

    for _ in range(max_bisect):
        if not np.isfinite(f):
            raise RootConvergenceError(f"non-finite function value at x = {x!r}")
        if abs(f) <= tol:
            return x
        if f > 0.0:
            lo = x
        else:
            hi = x
        if collapsed():
            return 0.5 * (lo + hi)
        x = 0.5 * (lo + hi)
        f, _ = fun(x)
    raise RootConvergenceError(
        f"no convergence after {max_newton} Newton and {max_bisect} bisection steps"
    )


def bisect_root(fun: Callable[[float], float], lo: float, hi: float, steps: int = 200) -> float:
    """Plain bisection for a decreasing sign change; used as a test oracle."""
    f_lo = fun(lo)
    if f_lo < 0.0:
        raise BracketError("f(lo) must be nonnegative")
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        if fun(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
