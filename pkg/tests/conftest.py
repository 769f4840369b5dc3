"""Shared fixtures and random-instance generators."""
import numpy as np
import pytest

from ratedist import GridSpec, RDProblem, SolverState, build_gaussian, build_laplacian


def random_problem(rng, m_max=12, n_max=12, min_gap_frac=0.05):
    """Random dense instance with a usable distortion range.

    Instances whose achievable interval (floor, zero-rate point) is nearly
    degenerate force the distortion dual toward the kernel overflow regime,
    so those are rejected and redrawn.
    """
    for _ in range(100):
        m = int(rng.integers(2, m_max + 1))
        n = int(rng.integers(2, n_max + 1))
        p = rng.dirichlet(np.ones(m))
        d = rng.uniform(0.0, 1.0, size=(m, n))
        problem = RDProblem(p=p, d=d)
        gap = problem.zero_rate_distortion - problem.distortion_floor
        if gap > min_gap_frac * max(problem.zero_rate_distortion, 1e-12):
            return problem
    raise AssertionError("rejection sampling failed to produce a usable instance")


def feasible_distortion(problem, rng, lo=0.15, hi=0.85):
    """A target strictly inside the achievable interval."""
    floor = problem.distortion_floor
    ceiling = problem.zero_rate_distortion
    return floor + float(rng.uniform(lo, hi)) * (ceiling - floor)


def random_state(rng, problem, lam=None):
    """A structurally consistent (not converged) solver state."""
    m, n = problem.shape
    if lam is None:
        lam = float(rng.uniform(0.1, 3.0))
    return SolverState(
        phi=rng.uniform(0.2, 5.0, size=m),
        psi=rng.uniform(0.2, 5.0, size=n),
        K=np.exp(-lam * problem.d),
        r=rng.dirichlet(np.ones(n)),
        lam=lam,
    )


def random_law(rng, m, n):
    """Random row-stochastic matrix."""
    w = rng.uniform(0.0, 1.0, size=(m, n)) + 1e-3
    return w / w.sum(axis=1, keepdims=True)


@pytest.fixture(scope="session")
def gaussian_fixture():
    return build_gaussian(GridSpec(8.0, 0.5), 2.0)


@pytest.fixture(scope="session")
def laplacian_fixture():
    return build_laplacian(GridSpec(14.0, 0.2), 2.0)
