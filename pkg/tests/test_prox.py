import itertools

import numpy as np
import pytest
from hypothesis import example, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rcsn.prox import (nearest_lattice_center, project_ball, project_ball_union, project_box,
                       project_finite, project_sphere, soft_threshold)

coords = st.floats(-10, 10, allow_nan=False)


def vec(n):
    return arrays(np.float64, n, elements=coords)


def ball_samples(rng, center, r, count=10_000):
    n = np.size(center)
    d = rng.normal(size=(count, n))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    radii = r * rng.uniform(size=(count, 1)) ** (1.0 / n)
    return center + radii * d


class TestBall:
    def test_outside(self):
        np.testing.assert_allclose(project_ball([3.0, 0.0], 0.0, 1.0), [1.0, 0.0])

    def test_interior_fixed(self):
        x = np.array([0.2, -0.3])
        np.testing.assert_array_equal(project_ball(x, 0.0, 1.0), x)

    def test_minimal_against_samples(self, rng):
        for n in (1, 2, 3):
            center = rng.normal(size=n)
            x = rng.normal(size=n) * 3
            p = project_ball(x, center, 0.7)
            q = ball_samples(rng, center, 0.7)
            assert np.linalg.norm(p - x) <= np.min(np.linalg.norm(q - x, axis=1)) + 1e-12

    @given(vec(3))
    def test_idempotent(self, x):
        p = project_ball(x, 1.0, 2.0)
        np.testing.assert_allclose(project_ball(p, 1.0, 2.0), p, atol=1e-12)

    def test_bad_radius(self):
        with pytest.raises(ValueError):
            project_ball([1.0], 0.0, 0.0)


class TestBallUnion:
    def test_hand_example(self):
        p = project_ball_union(np.array([0.6, 0.2]), 0.25)
        u = np.array([-0.4, 0.2]) / np.linalg.norm([-0.4, 0.2])
        np.testing.assert_allclose(p, np.array([1.0, 0.0]) + 0.25 * u, atol=1e-15)
        np.testing.assert_allclose(p, [0.7763932, 0.1118034], atol=1e-7)

    def test_member_fixed(self):
        x = np.array([2.1, -3.05])
        np.testing.assert_array_equal(project_ball_union(x, 0.25), x)

    def test_tie_goes_to_smaller_center(self):
        np.testing.assert_array_equal(nearest_lattice_center(np.array([0.5, 0.0])), [0.0, 0.0])
        np.testing.assert_array_equal(nearest_lattice_center(np.array([-0.5, 1.5])), [-1.0, 1.0])

    def test_clamped_outside_box(self):
        np.testing.assert_array_equal(nearest_lattice_center(np.array([9.0, -7.2])), [4.0, -4.0])

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_nearest_center_exhaustive(self, n, rng):
        centers = np.array(list(itertools.product(range(-4, 5), repeat=n)), dtype=float)
        for x in rng.uniform(-6, 6, size=(200, n)):
            c = nearest_lattice_center(x)
            best = np.min(np.linalg.norm(centers - x, axis=1))
            assert np.linalg.norm(c - x) == pytest.approx(best, abs=1e-12)

    def test_nearest_center_sampled_high_dim(self, rng):
        n = 12
        for x in rng.uniform(-6, 6, size=(20, n)):
            c = nearest_lattice_center(x)
            centers = rng.integers(-4, 5, size=(1000, n)).astype(float)
            assert np.linalg.norm(c - x) <= np.min(np.linalg.norm(centers - x, axis=1)) + 1e-12

    @given(vec(2), st.floats(0.05, 0.45))
    def test_idempotent(self, x, r):
        p = project_ball_union(x, r)
        np.testing.assert_allclose(project_ball_union(p, r), p, atol=1e-12)


class TestFinite:
    def test_tie(self):
        assert project_finite([0.0], [[-1.0], [1.0]])[0] == -1.0

    def test_nearest(self):
        assert project_finite([0.3], [[-1.0], [1.0]])[0] == 1.0

    def test_lexicographic_tie_in_plane(self):
        pts = [[1.0, 0.0], [0.0, 1.0], [0.0, -1.0], [-1.0, 0.0]]
        np.testing.assert_array_equal(project_finite([0.0, 0.0], pts), [-1.0, 0.0])

    def test_exhaustive(self, rng):
        for _ in range(50):
            pts = rng.normal(size=(7, 3))
            x = rng.normal(size=3)
            p = project_finite(x, pts)
            i = np.argmin(np.linalg.norm(pts - x, axis=1))
            np.testing.assert_array_equal(p, pts[i])

    def test_empty(self):
        with pytest.raises(ValueError):
            project_finite([0.0], np.empty((0, 1)))


class TestSphereAndBox:
    def test_sphere(self):
        np.testing.assert_allclose(project_sphere([2.0, 0.0]), [1.0, 0.0])
        np.testing.assert_allclose(project_sphere([0.0, 0.0]), [-1.0, 0.0])

    @given(vec(3))
    @example(np.full(3, 4.26105198e-162))
    def test_sphere_idempotent(self, x):
        p = project_sphere(x, 0.0, 2.0)
        np.testing.assert_allclose(project_sphere(p, 0.0, 2.0), p, atol=1e-12)

    def test_box(self):
        np.testing.assert_array_equal(project_box([3.0, -5.0, 0.5], -1.0, 1.0), [1.0, -1.0, 0.5])


class TestSoftThreshold:
    def test_example(self):
        np.testing.assert_array_equal(soft_threshold(np.array([2.0, -0.5]), 1.0), [1.0, 0.0])

    def test_large_kappa(self):
        np.testing.assert_array_equal(soft_threshold(np.array([0.3, -0.2]), 1.0), [0.0, 0.0])

    @settings(max_examples=30)
    @given(st.floats(-3, 3), st.floats(0.05, 2))
    def test_matches_grid(self, x, kappa):
        grid = np.linspace(-5, 5, 100_001)
        obj = kappa * np.abs(grid) + 0.5 * (grid - x) ** 2
        assert soft_threshold(np.array([x]), kappa)[0] == pytest.approx(grid[np.argmin(obj)],
                                                                       abs=1e-4)

    def test_bad_kappa(self):
        with pytest.raises(ValueError):
            soft_threshold(np.array([1.0]), 0.0)
