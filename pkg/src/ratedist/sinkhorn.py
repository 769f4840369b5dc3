"""Distortion-targeted rate-distortion solver.

The curve point R(D) is computed by alternating two blocks until the KKT
residuals vanish:

* with the output marginal ``r`` held fixed, the transition law is kept in
  the scaled form ``w_ij = phi_i K_ij psi_j r_j`` with kernel
  ``K_ij = exp(-lam * d_ij)``; one Sinkhorn pass updates the scalings
  ``psi`` and ``phi``, and the distortion dual ``lam`` is moved to the root
  of a strictly decreasing one-dimensional function ``G``;
* with the law held fixed, ``r`` is rebuilt from the column masses through
  the normalization dual ``eta``, the unique root of a strictly decreasing
  rational function ``F``.

Each dual update therefore costs a few Newton steps, warm-started from the
previous iteration.  ``lam`` at the solution is the magnitude of the slope
of the rate-distortion curve, which is what makes prescribing ``D``
directly possible (unlike the classical fixed-slope recursion, see
:mod:`ratedist.blahut`).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .diagnostics import ResidualRecord, kkt_residuals
from .problem import ConditionalLaw, RDProblem, RDSolution, validate_problem
from .rootfind import newton_bisect


class KernelUnderflowError(ArithmeticError):
    """A scaling denominator reached exact zero.

    This happens when ``lam * d`` grows large enough that kernel entries
    underflow to zero in double precision, typically because the requested
    distortion sits at the very edge of the achievable range.
    """


@dataclass(frozen=True)
class SolverOptions:
    """Knobs of the alternating solver.

    ``residual_tol`` applies to the maximum of the four KKT residuals and
    triggers early exit; ``max_iter`` bounds the outer loop regardless.
    ``lambda_cap`` bounds the distortion dual; hitting it flags the
    solution instead of letting the kernel underflow silently.
    """

    max_iter: int = 1000
    residual_tol: float = 1e-9
    newton_tol: float = 1e-12
    newton_max_steps: int = 50
    lambda_cap: float = 1e4

    def __post_init__(self):
        for name in ("max_iter", "residual_tol", "newton_tol", "newton_max_steps", "lambda_cap"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class SolverState:
    """Mutable working state of one solver run.

    ``beta`` is derived from ``psi`` (``beta_j = -ln psi_j - 1/2``) so the
    two can never drift apart; ``K`` is refreshed whenever ``lam`` changes.
    """

    phi: np.ndarray
    psi: np.ndarray
    K: np.ndarray
    r: np.ndarray
    lam: float
    eta: float = 0.0

    @property
    def beta(self) -> np.ndarray:
        return -np.log(self.psi) - 0.5

    @classmethod
    def initial(cls, problem: RDProblem, lam: float = 1.0) -> "SolverState":
        """Flat starting point: unit scalings, uniform output marginal."""
        m, n = problem.shape
        return cls(
            phi=np.ones(m),
            psi=np.ones(n),
            K=np.exp(-lam * problem.d),
            r=np.full(n, 1.0 / n),
            lam=lam,
        )

    def law(self) -> np.ndarray:
        """Current transition law ``w_ij = phi_i K_ij psi_j r_j``."""
        return self.phi[:, None] * self.K * (self.psi * self.r)[None, :]


def sinkhorn_update_psi(state: SolverState, p: np.ndarray) -> np.ndarray:
    """Column scaling update ``psi_j = 1 / sum_i K_ij phi_i p_i``."""
    col = (state.phi * p) @ state.K
    if not np.all(col > 0) or not np.all(np.isfinite(col)):
        raise KernelUnderflowError(
            "kernel column sum vanished; lambda * d has overflowed double range"
        )
    return 1.0 / col


def sinkhorn_update_phi(state: SolverState) -> np.ndarray:
    """Row scaling update ``phi_i = 1 / sum_j K_ij psi_j r_j``.

    After this update the reconstructed law has unit row sums by
    construction.  Output letters with ``r_j = 0`` simply drop out of the
    denominator; only an entirely vanished row is an error.
    """
    row = state.K @ (state.psi * state.r)
    if not np.all(row > 0) or not np.all(np.isfinite(row)):
        raise KernelUnderflowError(
            "no reproduction letter is reachable from some source row"
        )
    return 1.0 / row


def g_lambda(lam: float, state: SolverState, problem: RDProblem, distortion: float) -> float:
    """Distortion-dual objective ``G``: expected distortion of the scaled
    law at trial ``lam``, minus the budget.

    ``G(lam) = sum_ij d_ij p_i phi_i exp(-lam d_ij) psi_j r_j - D``; it is
    strictly decreasing in ``lam`` wherever distortion carries weight.
    """
    a = state.phi * problem.p
    b = state.psi * state.r
    return float(
        ((a[:, None] * b[None, :]) * problem.d * np.exp(-lam * problem.d)).sum() - distortion
    )


def newton_lambda(
    state: SolverState,
    problem: RDProblem,
    distortion: float,
    opts: Optional[SolverOptions] = None,
    kernel_out: Optional[dict] = None,
) -> float:
    """Move the distortion dual to the root of ``G``.

    Complementary slackness is explicit: when ``G(0) <= 0`` the constraint
    is inactive and ``lam = 0`` is returned.  Otherwise a safeguarded
    Newton iteration (warm-started from ``state.lam``) finds the unique
    positive root; the dual is capped at ``opts.lambda_cap`` when ``G``
    stays positive all the way to the cap.

    When given, ``kernel_out`` receives the kernel evaluated at the
    returned dual under key ``"K"``, saving one exponential per call.
    """
    opts = opts or SolverOptions()
    d = problem.d
    weighted = np.multiply.outer(state.phi * problem.p, state.psi * state.r) * d
    g0 = float(weighted.sum() - distortion)
    if g0 <= 0.0:
        if kernel_out is not None:
            kernel_out["K"] = np.ones_like(d)
        return 0.0

    cache: dict = {}

    def fun(lam: float) -> tuple[float, float]:
        E = np.exp(-lam * d)
        t = weighted * E
        cache["lam"] = lam
        cache["E"] = E
        return float(t.sum() - distortion), float(-(t * d).sum())

    lam0 = state.lam
    hi = max(1.0, 2.0 * lam0)
    f_hi, _ = fun(hi)
    while f_hi > 0.0 and hi < opts.lambda_cap:
        hi = min(2.0 * hi, opts.lambda_cap)
        f_hi, _ = fun(hi)
    if f_hi > 0.0:
        lam = opts.lambda_cap
    else:
        lam = newton_bisect(
            fun,
            0.0,
            hi,
            x0=lam0 if 0.0 < lam0 < hi else None,
            tol=opts.newton_tol,
            max_newton=opts.newton_max_steps,
            f_lo=g0,
            f_hi=f_hi,
        )
    if kernel_out is not None:
        kernel_out["K"] = cache["E"] if cache.get("lam") == lam else np.exp(-lam * d)
    return float(lam)


def f_eta(eta: float, column_mass: np.ndarray, beta: np.ndarray) -> float:
    """Normalization-dual objective ``F(eta) = sum_j s_j/(eta - beta_j) - 1``.

    Strictly decreasing on ``(max_j beta_j, +inf)`` with exactly one root
    there.

    Raises:
        ValueError: if ``eta`` is not above ``max_j beta_j``.
    """
    s = np.asarray(column_mass, dtype=float)
    b = np.asarray(beta, dtype=float)
    if eta <= b.max():
        raise ValueError("eta must lie strictly above max(beta)")
    active = s > 0
    return float((s[active] / (eta - b[active])).sum() - 1.0)


def newton_eta(
    column_mass: np.ndarray,
    beta: np.ndarray,
    opts: Optional[SolverOptions] = None,
) -> float:
    """Root of ``F`` above the largest pole that carries mass.

    The bracket is deterministic: the lower edge sits a relative epsilon
    above the pole (where ``F`` blows up to +inf), the upper edge at
    ``max(beta) + sum(s)`` where ``F <= 0`` by comparison with the pole
    term.  Newton iterates are projected into the bracket with bisection
    fallback.
    """
    opts = opts or SolverOptions()
    s = np.asarray(column_mass, dtype=float)
    b = np.asarray(beta, dtype=float)
    active = s > 0
    if not np.any(active):
        raise ValueError("column masses are all zero")
    sm = s[active]
    bm = b[active]
    bmax = float(bm.max())
    total = float(sm.sum())

    def fun(eta: float) -> tuple[float, float]:
        den = eta - bm
        t = sm / den
        return float(t.sum() - 1.0), float(-(t / den).sum())

    lo = bmax + 1e-12 * max(1.0, abs(bmax))
    f_lo, _ = fun(lo)
    shrink = 0
    while f_lo <= 0.0 and shrink < 60 and lo > bmax:
        lo = bmax + (lo - bmax) * 0.125
        f_lo, _ = fun(lo)
        shrink += 1
    if f_lo <= 0.0:
        # pole mass is subnormal; the edge itself is the best representable root
        return lo
    hi = bmax + total
    return newton_bisect(
        fun,
        lo,
        hi,
        tol=opts.newton_tol,
        max_newton=opts.newton_max_steps,
        f_lo=f_lo,
    )


def update_r(column_mass: np.ndarray, beta: np.ndarray, eta: float) -> np.ndarray:
    """Rebuild the output marginal, ``r_j = s_j / (eta - beta_j)``.

    Letters with zero column mass stay at exactly zero; with ``eta`` the
    root of ``F`` the result sums to one up to the Newton tolerance.
    """
    s = np.asarray(column_mass, dtype=float)
    b = np.asarray(beta, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(s > 0, s / (eta - b), 0.0)
    return r


def solve_rd(
    problem: RDProblem,
    distortion: float,
    opts: Optional[SolverOptions] = None,
) -> RDSolution:
    """Compute the rate-distortion value R(D) at a prescribed distortion.

    Runs the alternating loop (scaling pass, distortion-dual Newton, law
    reconstruction, normalization-dual Newton, marginal rebuild) from the
    flat initialization until all four KKT residuals drop below
    ``opts.residual_tol`` or ``opts.max_iter`` is reached.  Non-convergence
    is reported through the ``converged`` flag, not an exception; numerical
    breakdown (kernel underflow) raises :class:`KernelUnderflowError`.

    Args:
        problem: a valid :class:`RDProblem`.
        distortion: positive distortion budget, strictly above the
            problem's achievable floor.
        opts: solver options; defaults to :class:`SolverOptions()`.

    Returns:
        An :class:`RDSolution` with the rate in nats, the achieved
        distortion, the optimal law and output marginal, the distortion
        dual (curve slope magnitude), and the full residual trace.
    """
    opts = opts or SolverOptions()
    issues = validate_problem(problem)
    if issues:
        raise ValueError("invalid problem: " + "; ".join(issues))
    D = float(distortion)
    if not D > 0.0:
        raise ValueError("distortion budget must be positive")
    floor = problem.distortion_floor
    if D <= floor and floor > 0.0:
        raise ValueError(
            f"distortion budget {D!r} is at or below the achievable floor {floor!r}"
        )

    p, d = problem.p, problem.d
    state = SolverState.initial(problem)
    trace: list[ResidualRecord] = []
    converged = False
    capped = False
    kernel_out: dict = {}

    iteration = 0
    for iteration in range(1, opts.max_iter + 1):
        state.psi = sinkhorn_update_psi(state, p)
        state.phi = sinkhorn_update_phi(state)
        state.lam = newton_lambda(state, problem, D, opts, kernel_out=kernel_out)
        state.K = kernel_out["K"]
        if state.lam >= opts.lambda_cap:
            capped = True
        w = state.law()
        column_mass = p @ w
        beta = state.beta
        state.eta = newton_eta(column_mass, beta, opts)
        state.r = update_r(column_mass, beta, state.eta)
        record = kkt_residuals(state, problem, D, iteration=iteration)
        trace.append(record)
        if record.max_residual <= opts.residual_tol:
            converged = True
            break

    w = state.law()
    mass = w * p[:, None]
    ii, jj = np.nonzero(mass > 0)
    # ln(phi K psi) expanded so kernel underflow cannot poison the logarithm
    log_scaled = np.log(state.phi)[ii] + np.log(state.psi)[jj] - state.lam * d[ii, jj]
    rate = float((mass[ii, jj] * log_scaled).sum())
    if -1e-12 < rate < 0.0:
        rate = 0.0
    achieved = float((mass * d).sum())

    return RDSolution(
        rate=rate,
        distortion=achieved,
        w=ConditionalLaw(w),
        r=state.r,
        lam=state.lam,
        iterations=iteration,
        converged=converged,
        residuals=trace[-1] if trace else None,
        trace=tuple(trace),
        lambda_capped=capped,
    )
