"""Rate-distortion problem containers and the shared objective evaluations.

A problem instance is a source distribution ``p`` over ``M`` input letters
together with an ``M x N`` matrix ``d`` of nonnegative letter-pair
distortions.  A candidate code is a transition law ``w`` (rows are
conditional distributions over the ``N`` reproduction letters).  The
functions here evaluate the coding rate and expected distortion of such a
law; they are shared by both solvers and by the test oracles.

All rates are natural-log based (nats).  Conversion to bits is a display
concern, see :attr:`RDSolution.rate_bits`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional

import numpy as np

if TYPE_CHECKING:  # pragma: no cover
    from .diagnostics import ResidualRecord

#: tolerance for probability normalization of the source distribution
PROB_ATOL = 1e-12
#: tolerance for row normalization of a transition law
ROW_ATOL = 1e-9

_LN2 = math.log(2.0)


def _frozen_array(values, ndim: int | None = None) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    if ndim is not None and arr.ndim != ndim:
        arr = np.atleast_1d(arr) if ndim == 1 else np.atleast_2d(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class RDProblem:
    """A finite (or discretized) memoryless rate-distortion instance.

    Attributes:
        p: source probability vector of length ``M``.
        d: ``M x N`` matrix of nonnegative distortions ``d(x_i, y_j)``.
        x_labels: optional real alphabet points for the source letters
            (grid coordinates for discretized sources).
        y_labels: optional real alphabet points for the reproduction letters.

    Construction is permissive so that invalid instances can be inspected;
    use :func:`validate_problem` to obtain the list of violations.  Arrays
    are copied and frozen, so instances are safe to share across threads.
    """

    p: np.ndarray
    d: np.ndarray
    x_labels: Optional[np.ndarray] = None
    y_labels: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "p", _frozen_array(self.p, ndim=1))
        object.__setattr__(self, "d", _frozen_array(self.d, ndim=2))
        for name in ("x_labels", "y_labels"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, _frozen_array(value, ndim=1))

    @property
    def shape(self) -> tuple[int, int]:
        """(M, N): source and reproduction alphabet sizes."""
        return (self.p.shape[0], self.d.shape[1])

    @property
    def distortion_floor(self) -> float:
        """Smallest achievable expected distortion, sum_i p_i min_j d_ij."""
        return float(self.p @ self.d.min(axis=1))

    @property
    def zero_rate_distortion(self) -> float:
        """Distortion at which the curve hits zero rate, min_j sum_i p_i d_ij.

        A single reproduction letter meets any budget at or above this value.
        """
        return float((self.p @ self.d).min())

    def renormalized(self) -> "RDProblem":
        """Copy with ``p`` rescaled to sum to exactly 1."""
        total = float(self.p.sum())
        if total <= 0:
            raise ValueError("source distribution carries no mass")
        return RDProblem(self.p / total, self.d, self.x_labels, self.y_labels)


def validate_problem(problem: RDProblem, atol: float = PROB_ATOL) -> list[str]:
    """Check every problem invariant and return the list of violations.

    Returns an empty list when the instance is valid.  Never raises: this is
    a diagnostic, the caller decides whether violations are fatal.
    """
    issues: list[str] = []
    p, d = problem.p, problem.d
    if p.ndim != 1 or p.size < 1:
        issues.append("p must be a nonempty vector")
    if d.ndim != 2 or d.size < 1:
        issues.append("d must be a nonempty matrix")
    if issues:
        return issues
    if d.shape[0] != p.shape[0]:
        issues.append(
            f"dimension mismatch: p has length {p.shape[0]} "
            f"but d has {d.shape[0]} rows"
        )
    if not np.all(np.isfinite(p)):
        issues.append("p contains non-finite entries")
    else:
        neg = np.nonzero(p < 0)[0]
        if neg.size:
            issues.append(f"negative probability at index {neg[0]}")
        total = float(p.sum())
        if abs(total - 1.0) > atol:
            issues.append(f"p sums to {total!r}, expected 1 within {atol:g}")
    if not np.all(np.isfinite(d)):
        issues.append("d contains non-finite entries")
    else:
        bad = np.argwhere(d < 0)
        if bad.size:
            i, j = bad[0]
            issues.append(f"negative distortion at ({i}, {j})")
    for name in ("x_labels", "y_labels"):
        labels = getattr(problem, name)
        if labels is not None:
            expected = problem.shape[0] if name == "x_labels" else problem.shape[1]
            if labels.shape[0] != expected:
                issues.append(f"{name} has length {labels.shape[0]}, expected {expected}")
    return issues


@dataclass(frozen=True)
class ConditionalLaw:
    """A transition law W(y|x) as an ``M x N`` row-stochastic matrix."""

    w: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "w", _frozen_array(self.w, ndim=2))

    @property
    def shape(self) -> tuple[int, int]:
        return self.w.shape

    def validate(self, atol: float = ROW_ATOL) -> list[str]:
        """Return violations of nonnegativity / row normalization."""
        issues: list[str] = []
        if not np.all(np.isfinite(self.w)):
            issues.append("w contains non-finite entries")
            return issues
        bad = np.argwhere(self.w < 0)
        if bad.size:
            i, j = bad[0]
            issues.append(f"negative entry at ({i}, {j})")
        rows = self.w.sum(axis=1)
        off = np.nonzero(np.abs(rows - 1.0) > atol)[0]
        if off.size:
            issues.append(
                f"row {off[0]} sums to {rows[off[0]]!r}, expected 1 within {atol:g}"
            )
        return issues


@dataclass(frozen=True)
class RDSolution:
    """Solver output: one point of the rate-distortion curve.

    ``lam`` is the dual of the distortion constraint and equals the
    magnitude of the curve's slope at the solved distortion.  ``residuals``
    holds the final KKT residual record; ``trace`` the per-iteration
    history.
    """

    rate: float
    distortion: float
    w: ConditionalLaw
    r: np.ndarray
    lam: float
    iterations: int
    converged: bool
    residuals: "ResidualRecord | None" = None
    trace: "tuple[ResidualRecord, ...]" = ()
    lambda_capped: bool = False

    def __post_init__(self):
        object.__setattr__(self, "r", _frozen_array(self.r, ndim=1))

    @property
    def rate_bits(self) -> float:
        """The rate converted to bits for display."""
        return self.rate / _LN2


def rate_objective(w: np.ndarray, p: np.ndarray, r: np.ndarray) -> float:
    """Coding rate of law ``w`` against an output measure ``r``, in nats.

    Evaluates ``sum_ij w_ij p_i [ln w_ij - ln r_j]`` with the convention
    ``0 ln 0 = 0`` (zero-mass terms are skipped, never floored).  When ``r``
    equals the marginal induced by ``(w, p)`` this is the mutual information
    between source and reproduction; for any other strictly positive ``r``
    it is larger (by the KL divergence between the induced marginal and
    ``r``), which makes ``r`` a valid minimization slack.

    Raises:
        ValueError: if some ``r_j`` is zero while column ``j`` carries mass.
    """
    w = np.asarray(w, dtype=float)
    p = np.asarray(p, dtype=float)
    r = np.asarray(r, dtype=float)
    mass = w * p[:, None]
    col_mass = mass.sum(axis=0)
    starved = (r <= 0) & (col_mass > 0)
    if np.any(starved):
        j = int(np.nonzero(starved)[0][0])
        raise ValueError(f"output letter {j} has zero reference mass but positive column mass")
    ii, jj = np.nonzero(mass > 0)
    if ii.size == 0:
        return 0.0
    return float((mass[ii, jj] * (np.log(w[ii, jj]) - np.log(r[jj]))).sum())


def expected_distortion(w: np.ndarray, p: np.ndarray, d: np.ndarray) -> float:
    """Expected distortion ``sum_ij w_ij p_i d_ij`` of a law."""
    w = np.asarray(w, dtype=float)
    p = np.asarray(p, dtype=float)
    d = np.asarray(d, dtype=float)
    return float((w * p[:, None] * d).sum())


def induced_marginal(w: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Output marginal ``r_j = sum_i w_ij p_i`` induced by a law."""
    w = np.asarray(w, dtype=float)
    p = np.asarray(p, dtype=float)
    return p @ w
