"""KKT residuals, per-iteration traces, and RD-curve shape analysis."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any

import numpy as np

if TYPE_CHECKING:  # pragma: no cover
    from .problem import RDProblem
    from .sinkhorn import SolverState


@dataclass(frozen=True)
class ResidualRecord:
    """Absolute KKT residuals of one solver iteration.

    ``r_psi`` and ``r_phi`` measure violation of the column/row scaling
    identities, ``r_lambda`` the complementary slackness of the distortion
    constraint, ``r_eta`` the normalization of the output marginal.
    """

    iteration: int
    r_psi: float
    r_phi: float
    r_lambda: float
    r_eta: float

    @property
    def max_residual(self) -> float:
        return max(self.r_psi, self.r_phi, self.r_lambda, self.r_eta)

    def values(self) -> tuple[float, float, float, float]:
        return (self.r_psi, self.r_phi, self.r_lambda, self.r_eta)


def kkt_residuals(
    state: "SolverState",
    problem: "RDProblem",
    distortion: float,
    iteration: int = 0,
) -> ResidualRecord:
    """Evaluate the four KKT residuals of the current solver state.

    r_psi    = sum_j |psi_j * sum_i K_ij phi_i p_i - 1|
    r_phi    = sum_i |phi_i * sum_j K_ij psi_j r_j - 1|
    r_lambda = |lambda * (sum_ij phi_i psi_j p_i r_j d_ij K_ij - D)|
    r_eta    = |sum_j r_j - 1|
    """
    p, d = problem.p, problem.d
    phi, psi, K, r, lam = state.phi, state.psi, state.K, state.r, state.lam
    col = (phi * p) @ K
    r_psi = float(np.abs(psi * col - 1.0).sum())
    row = K @ (psi * r)
    r_phi = float(np.abs(phi * row - 1.0).sum())
    weighted = (phi * p) @ (K * d) @ (psi * r)
    r_lambda = float(abs(lam * (weighted - distortion)))
    r_eta = float(abs(r.sum() - 1.0))
    return ResidualRecord(iteration, r_psi, r_phi, r_lambda, r_eta)


@dataclass
class RDCurve:
    """Samples of a rate-distortion curve on an increasing distortion grid."""

    D: np.ndarray
    R: np.ndarray
    lam: np.ndarray
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.D = np.asarray(self.D, dtype=float)
        self.R = np.asarray(self.R, dtype=float)
        self.lam = np.asarray(self.lam, dtype=float)
        if not (self.D.shape == self.R.shape == self.lam.shape) or self.D.ndim != 1:
            raise ValueError("D, R, lam must be equal-length vectors")
        if self.D.size >= 2 and not np.all(np.diff(self.D) > 0):
            raise ValueError("distortion grid must be strictly increasing")

    def __len__(self) -> int:
        return int(self.D.size)


@dataclass(frozen=True)
class LinearSegment:
    """A maximal affine run of curve samples."""

    d_start: float
    d_end: float
    slope: float
    index_start: int
    index_end: int


def second_divided_differences(D: np.ndarray, R: np.ndarray) -> np.ndarray:
    """Curvature proxy at interior samples: change of slope per unit width."""
    D = np.asarray(D, dtype=float)
    R = np.asarray(R, dtype=float)
    left = (R[1:-1] - R[:-2]) / (D[1:-1] - D[:-2])
    right = (R[2:] - R[1:-1]) / (D[2:] - D[1:-1])
    half_width = 0.5 * (D[2:] - D[:-2])
    return (right - left) / half_width


def detect_linear_segment(curve: RDCurve, tol: float = 1e-4) -> list[LinearSegment]:
    """Find maximal affine runs of at least three consecutive curve samples.

    A run is affine when every interior sample's second divided difference
    has magnitude at most ``tol``.  Returns one :class:`LinearSegment` per
    maximal run, with the slope fitted by least squares over the run's
    samples; an empty list when the curve is strictly curved everywhere.
    """
    n = len(curve)
    if n < 3:
        return []
    flat = np.abs(second_divided_differences(curve.D, curve.R)) <= tol
    segments: list[LinearSegment] = []
    k = 0
    while k < flat.size:
        if not flat[k]:
            k += 1
            continue
        k_end = k
        while k_end + 1 < flat.size and flat[k_end + 1]:
            k_end += 1
        a, b = k, k_end + 2  # sample span covering the flat interior run
        span_D = curve.D[a : b + 1]
        span_R = curve.R[a : b + 1]
        slope = float(np.polyfit(span_D, span_R, 1)[0])
        segments.append(LinearSegment(float(curve.D[a]), float(curve.D[b]), slope, a, b))
        k = k_end + 1
    return segments
