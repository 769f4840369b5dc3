"""Blahut-Arimoto baseline: fixed-slope recursion and slope search."""
import numpy as np
import pytest

from ratedist import (
    BAOptions,
    ba_fixed_slope,
    ba_search_slope,
    build_bifurcation_fixture,
    build_binary,
    expected_distortion,
)
from conftest import random_problem


class TestFixedSlope:
    def test_zero_slope_endpoint(self):
        problem = build_binary(0.5)
        res = ba_fixed_slope(problem, 0.0)
        assert res.rate == pytest.approx(0.0, abs=1e-12)
        # law rows collapse onto the (uniform) output marginal
        np.testing.assert_allclose(res.w.w, np.tile(res.r, (2, 1)), atol=1e-12)
        assert res.distortion == pytest.approx(0.5)

    def test_binary_table_slope(self):
        res = ba_fixed_slope(build_binary(0.5), 2.1972)
        assert res.distortion == pytest.approx(0.1, abs=1e-4)
        assert res.rate == pytest.approx(0.3680642071684971, abs=1e-4)

    def test_gaussian_table_slope(self, gaussian_fixture):
        res = ba_fixed_slope(gaussian_fixture, 0.5)
        assert res.distortion == pytest.approx(1.0, abs=1e-3)

    def test_negative_slope_rejected(self):
        with pytest.raises(ValueError):
            ba_fixed_slope(build_binary(0.5), -0.5)

    def test_lagrangian_descends(self):
        rng = np.random.default_rng(20)
        for _ in range(25):
            problem = random_problem(rng, m_max=8, n_max=8)
            lam = float(rng.uniform(0.1, 4.0))
            res = ba_fixed_slope(problem, lam, record_trace=True)
            values = [rate + lam * dist for rate, dist in res.trace]
            diffs = np.diff(values)
            assert np.all(diffs <= 1e-11), diffs.max()

    def test_distortion_nonincreasing_in_slope(self):
        rng = np.random.default_rng(21)
        for _ in range(25):
            problem = random_problem(rng, m_max=8, n_max=8)
            dists = [ba_fixed_slope(problem, lam).distortion
                     for lam in (0.0, 0.5, 1.0, 2.0, 4.0, 8.0)]
            assert np.all(np.diff(dists) <= 1e-10)

    def test_reported_distortion_matches_law(self):
        problem = build_binary(0.3)
        res = ba_fixed_slope(problem, 1.0)
        direct = expected_distortion(res.w.w, problem.p, problem.d)
        assert res.distortion == pytest.approx(direct, abs=1e-14)


class TestSearchSlope:
    def test_binary_table_point(self):
        res = ba_search_slope(build_binary(0.5), 0.4)
        assert res.converged
        assert res.lam == pytest.approx(0.4055, abs=1e-3)
        assert abs(res.distortion - 0.4) <= 1e-6
        assert 10 <= res.search_steps <= 200

    def test_laplacian_table_point(self, laplacian_fixture):
        res = ba_search_slope(laplacian_fixture, 1.0)
        assert res.converged
        assert res.lam == pytest.approx(0.9931, abs=1e-2)

    def test_near_zero_rate_end(self):
        problem = build_binary(0.5)
        res = ba_search_slope(problem, 0.499)
        assert res.converged
        assert res.lam < 0.01

    def test_targets_outside_achievable_interval(self):
        problem = build_binary(0.5)
        for bad in (0.0, -0.2, 0.5, 0.7):
            with pytest.raises(ValueError, match="achievable interval"):
                ba_search_slope(problem, bad)
        skewed = build_binary(0.2)  # zero-rate point at 0.2
        with pytest.raises(ValueError, match="achievable interval"):
            ba_search_slope(skewed, 0.3)

    def test_linear_segment_reported_as_ambiguous(self):
        # inside the affine stretch of the curve a single slope supports an
        # interval of distortions, so the search can only land on a drifting
        # iterate of the critical slope; that must be flagged, not silently
        # returned as a curve point
        res = ba_search_slope(build_bifurcation_fixture(), 0.2)
        assert not res.converged
        assert res.ambiguous
        assert res.lam == pytest.approx(1.801, abs=5e-3)

    def test_smooth_target_not_flagged(self):
        res = ba_search_slope(build_bifurcation_fixture(), 0.08)
        assert res.converged
        assert not res.ambiguous
