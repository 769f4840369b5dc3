"""Benchmark problem builders and closed-form references.

Continuous sources are truncated to ``[-W, W]`` and discretized on a
uniform grid: with edges ``x_1 < ... < x_{2N+1}`` the cell masses are the
cdf increments ``p_i = F(x_{i+1}) - F(x_i)`` and each cell is represented
by its left edge.  The reproduction alphabet reuses the same points, so
the distortion matrix is square.  Truncated tail mass is folded back by
renormalization (it is negligible at the shipped fixture widths of four,
respectively seven, standard scales).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.special import entr

from .problem import RDProblem

#: grid-ratio slack: half_width/delta must be integral within this
_RATIO_TOL = 1e-9


@dataclass(frozen=True)
class GridSpec:
    """Uniform symmetric grid on ``[-half_width, half_width]``.

    ``half_width / delta`` must be integral: the grid has ``2N + 1`` edges
    and ``2N`` mass cells, where ``N = half_width / delta``.
    """

    half_width: float
    delta: float

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if not self.half_width > 0:
            raise ValueError("half_width must be positive")
        ratio = self.half_width / self.delta
        if abs(ratio - round(ratio)) > _RATIO_TOL * max(1.0, ratio):
            raise ValueError(
                f"half_width/delta = {ratio!r} is not integral; the grid would not close"
            )
        if round(ratio) < 1:
            raise ValueError("grid needs at least two mass cells")

    @property
    def n_half(self) -> int:
        return int(round(self.half_width / self.delta))

    @property
    def n_cells(self) -> int:
        return 2 * self.n_half

    @property
    def edges(self) -> np.ndarray:
        """The ``2N + 1`` cell edges."""
        return -self.half_width + self.delta * np.arange(self.n_cells + 1)

    @property
    def points(self) -> np.ndarray:
        """Cell representative points (left edges), length ``2N``."""
        return self.edges[:-1]

    def halved(self) -> "GridSpec":
        """Same extent at twice the resolution."""
        return GridSpec(self.half_width, self.delta / 2.0)


def discretize_source(cdf, spec: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    """Cell masses of a distribution function on a grid.

    Args:
        cdf: non-decreasing distribution function; called vectorized on the
            edge array when possible, pointwise otherwise.
        spec: the grid.

    Returns:
        ``(points, p)``: cell representative points and the renormalized
        mass vector (length ``2N`` each).

    Raises:
        ValueError: if the cdf decreases between edges, or carries no mass
            on the grid.
    """
    edges = spec.edges
    try:
        values = np.asarray(cdf(edges), dtype=float)
        if values.shape != edges.shape:
            raise TypeError
    except TypeError:
        values = np.array([float(cdf(x)) for x in edges])
    masses = np.diff(values)
    if np.any(masses < -1e-12):
        k = int(np.nonzero(masses < -1e-12)[0][0])
        raise ValueError(f"cdf decreases between grid edges {k} and {k + 1}")
    masses = np.clip(masses, 0.0, None)
    total = masses.sum()
    if not total > 0:
        raise ValueError("cdf carries no mass on the grid")
    return spec.points.copy(), masses / total


def build_binary(p_one: float) -> RDProblem:
    """Binary source with Hamming distortion; ``p = (1 - p_one, p_one)``."""
    if not 0.0 < p_one < 1.0:
        raise ValueError("p_one must lie strictly inside (0, 1)")
    return RDProblem(
        p=np.array([1.0 - p_one, p_one]),
        d=np.array([[0.0, 1.0], [1.0, 0.0]]),
        x_labels=np.array([0.0, 1.0]),
        y_labels=np.array([0.0, 1.0]),
    )


def build_gaussian(spec: GridSpec, sigma: float) -> RDProblem:
    """Discretized centered Gaussian source with squared-error distortion."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    points, p = discretize_source(stats.norm(scale=sigma).cdf, spec)
    diff = np.subtract.outer(points, points)
    return RDProblem(p=p, d=diff**2, x_labels=points, y_labels=points)


def build_laplacian(spec: GridSpec, sigma: float) -> RDProblem:
    """Discretized centered Laplacian source (scale ``sigma``) with absolute-error distortion."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    points, p = discretize_source(stats.laplace(scale=sigma).cdf, spec)
    diff = np.subtract.outer(points, points)
    return RDProblem(p=p, d=np.abs(diff), x_labels=points, y_labels=points)


def build_bifurcation_fixture() -> RDProblem:
    """Two-letter source against three reproduction letters whose curve
    contains an exactly affine segment between two support-switching
    bifurcations (near distortions 0.14 and 0.25)."""
    return RDProblem(
        p=np.array([0.4, 0.6]),
        d=np.array([[1.0, 0.0, 0.3], [0.0, 1.0, 0.3]]),
    )


def binary_entropy(x: float) -> float:
    """Binary entropy in nats, with the 0 ln 0 = 0 convention."""
    return float(entr(x) + entr(1.0 - x))


def analytic_rd_binary(p_one: float, distortion: float) -> float:
    """Closed-form curve of the binary/Hamming source, in nats.

    ``R(D) = H_b(q) - H_b(D)`` for ``D < q`` and zero past it, where
    ``q = min(p_one, 1 - p_one)``.
    """
    if not 0.0 < p_one < 1.0:
        raise ValueError("p_one must lie strictly inside (0, 1)")
    if distortion < 0.0:
        raise ValueError("distortion must be nonnegative")
    q = min(p_one, 1.0 - p_one)
    if distortion >= q:
        return 0.0
    return binary_entropy(q) - binary_entropy(distortion)


def analytic_rd_gaussian(sigma: float, distortion: float) -> float:
    """Closed-form curve of the Gaussian/squared-error source, in nats."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    if not distortion > 0:
        raise ValueError("distortion must be positive")
    if distortion >= sigma**2:
        return 0.0
    return 0.5 * math.log(sigma**2 / distortion)


def analytic_rd_laplacian(sigma: float, distortion: float) -> float:
    """Closed-form curve of the Laplacian/absolute-error source, in nats."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    if not distortion > 0:
        raise ValueError("distortion must be positive")
    if distortion >= sigma:
        return 0.0
    return math.log(sigma / distortion)


def analytic_marginal(family: str, sigma: float, distortion: float, spec: GridSpec) -> np.ndarray:
    """Reverse-waterfilling optimal output marginal, discretized on the grid.

    Gaussian: a centered Gaussian with variance ``sigma^2 - D`` (the
    backward test channel removes independent noise of variance ``D``).
    Laplacian: a point mass of weight ``(D/sigma)^2`` at zero plus the
    source Laplacian carrying the remaining weight; the atom goes to the
    cell containing zero.  Both are returned as normalized cell masses.

    Raises:
        ValueError: for distortions outside the positive-rate region, or an
            unknown family.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    edges = spec.edges
    if family == "gaussian":
        if not 0.0 < distortion < sigma**2:
            raise ValueError("distortion must lie in (0, sigma^2)")
        scale = math.sqrt(sigma**2 - distortion)
        masses = np.diff(stats.norm(scale=scale).cdf(edges))
        return masses / masses.sum()
    if family == "laplacian":
        if not 0.0 < distortion < sigma:
            raise ValueError("distortion must lie in (0, sigma)")
        atom = (distortion / sigma) ** 2
        cont = np.diff(stats.laplace(scale=sigma).cdf(edges))
        cont = cont / cont.sum()
        marginal = (1.0 - atom) * cont
        zero_cell = int(np.searchsorted(edges, 0.0, side="right") - 1)
        if not 0 <= zero_cell < spec.n_cells:
            raise ValueError("grid does not contain the origin")
        marginal[zero_cell] += atom
        return marginal / marginal.sum()
    raise ValueError(f"unknown source family {family!r}")
