import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rcsn import ConfigError, SolverConfig, Status, subgradient
from rcsn.envelope import (CompositeProblem, L1Norm, ZeroFunction, asplund, ball_indicator,
                           ball_union_indicator, fbe_difference_oracle, fbe_subgrad, fbe_value,
                           finite_indicator, moreau, neg_asplund_subgrad, prox_point,
                           quadratic_problem, sphere_indicator)
from rcsn.problems import fixture, gen_1d_composite, gen_sphere_quadratic
from rcsn.projected_newton import pn_run
from rcsn.stepsize import SelfAdaptiveStep

from conftest import numeric_grad

PSIS = {
    "zero": ZeroFunction(),
    "l1": L1Norm(0.7),
    "sphere": sphere_indicator(1.0),
    "ball": ball_indicator(1.5),
    "finite": finite_indicator([[-1.0, 0.0], [1.0, 2.0], [0.5, -0.5]]),
    "ball_union": ball_union_indicator(0.3),
}


def scalar_finite_problem(lam=0.5):
    return CompositeProblem(f_value=lambda x: 0.5 * float(x @ x), f_grad=lambda x: x.copy(),
                            f_hess=lambda x: np.eye(1), lipschitz_grad=1.0,
                            psi=finite_indicator([-1.0, 1.0]), lam=lam, dim=1)


class TestMoreau:
    def test_zero(self, rng):
        for x in rng.normal(size=(5, 3)):
            assert moreau(ZeroFunction(), 0.3, x) == 0.0

    def test_two_points(self):
        assert moreau(finite_indicator([-1.0, 1.0]), 1.0, np.array([0.0])) == 0.5

    def test_sphere(self):
        assert moreau(sphere_indicator(), 0.9, np.array([2.0, 0.0])) == pytest.approx(1 / 1.8)

    def test_bad_lambda(self):
        with pytest.raises(ConfigError):
            moreau(ZeroFunction(), 0.0, np.zeros(1))


class TestAsplund:
    def test_zero(self, rng):
        x = rng.normal(size=4)
        assert asplund(ZeroFunction(), 0.4, x) == pytest.approx(x @ x / 0.8)

    def test_sphere_closed_form(self, rng):
        for _ in range(200):
            x = rng.normal(size=2) * 3
            lam = rng.uniform(0.05, 2.0)
            expected = (2 * np.linalg.norm(x) - 1) / (2 * lam)
            assert asplund(sphere_indicator(), lam, x) == pytest.approx(expected, abs=1e-12,
                                                                        rel=1e-12)

    def test_sphere_value_and_brute_force_sup(self):
        x = np.array([1.0, 1.0])
        value = asplund(sphere_indicator(), 0.9, x)
        assert value == pytest.approx((2 * math.sqrt(2) - 1) / 1.8, abs=1e-12)
        assert value == pytest.approx(1.0158, abs=5e-5)
        theta = np.linspace(0, 2 * np.pi, 10_000, endpoint=False)
        z = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        sup = np.max((z @ x - 0.5) / 0.9)
        assert value >= sup - 1e-12
        assert value - sup <= np.linalg.norm(x) / 0.9 * (2 * np.pi / 10_000) ** 2

    @pytest.mark.parametrize("name", sorted(PSIS))
    def test_moreau_asplund_identity(self, name, rng):
        psi = PSIS[name]
        n = 2
        for _ in range(200):
            x = rng.uniform(-5, 5, size=n)
            lam = rng.uniform(0.01, 3.0)
            total = moreau(psi, lam, x) + asplund(psi, lam, x)
            ref = float(x @ x) / (2 * lam)
            assert total == pytest.approx(ref, abs=1e-12 * (1 + ref))

    @settings(max_examples=100)
    @given(arrays(np.float64, 2, elements=st.floats(-5, 5)), st.floats(0.01, 3.0))
    def test_identity_property(self, x, lam):
        psi = PSIS["ball_union"]
        ref = float(x @ x) / (2 * lam)
        assert moreau(psi, lam, x) + asplund(psi, lam, x) == pytest.approx(ref,
                                                                          abs=1e-12 * (1 + ref))


class TestNegAsplundSubgrad:
    def test_indicator_equality_case(self, rng):
        psi = ball_indicator(1.0)
        for x in rng.normal(size=(10, 3)) * 2:
            np.testing.assert_allclose(neg_asplund_subgrad(psi, 0.5, x), -psi.project(x) / 0.5)

    def test_zero(self, rng):
        x = rng.normal(size=3)
        np.testing.assert_allclose(neg_asplund_subgrad(ZeroFunction(), 0.25, x), -x / 0.25)

    def test_tie_selection(self):
        v = neg_asplund_subgrad(finite_indicator([-1.0, 1.0]), 0.5, np.array([0.0]))
        assert v[0] == pytest.approx(2.0)


class TestFBEValue:
    def test_two_point_example(self):
        problem = scalar_finite_problem(0.5)
        x = np.array([1.0])
        assert fbe_value(problem, x) == pytest.approx(0.5)
        # direct infimum over z in {-1, 1}
        direct = min(0.5 + (z - 1.0) + (z - 1.0) ** 2 / 1.0 for z in (-1.0, 1.0))
        assert fbe_value(problem, x) == pytest.approx(direct)

    def test_zero_psi(self, rng):
        Q = np.diag([1.0, 0.5])
        problem = quadratic_problem(Q, np.array([0.3, -0.1]), ZeroFunction())
        for x in rng.normal(size=(5, 2)):
            g = problem.f_grad(x)
            assert fbe_value(problem, x) == pytest.approx(
                problem.f_value(x) - 0.5 * problem.lam * g @ g)

    def test_quartic(self):
        assert fbe_value(fixture("quartic_envelope"), np.array([2.0])) == pytest.approx(0.8)

    def test_two_forms_agree_on_grid(self, rng):
        for seed in range(5):
            problem, _ = gen_1d_composite(seed)
            grid = np.linspace(-10, 10, 200_001)
            psi_vals = np.array([problem.psi.value(np.array([t])) for t in grid[::50]])
            for x in rng.uniform(-3, 3, size=5):
                xa = np.array([x])
                g = problem.f_grad(xa)[0]
                z = grid[::50]
                direct = np.min(problem.f_value(xa) + g * (z - x) + (z - x) ** 2 / (2 * problem.lam)
                                + psi_vals)
                step = 20 / (len(z) - 1)
                value = fbe_value(problem, xa)
                assert value <= direct + 1e-12
                assert direct - value <= step * (abs(g) + problem.psi.value(np.array([0.0])) + 10)


class TestFBESubgrad:
    def test_fixed_point(self):
        problem = scalar_finite_problem(0.5)
        assert fbe_subgrad(problem, np.array([1.0]))[0] == 0.0

    def test_scalar_example(self):
        assert fbe_subgrad(scalar_finite_problem(0.5), np.array([0.6]))[0] == pytest.approx(-0.4)

    @pytest.mark.parametrize("psi", [L1Norm(0.4, 0.2), ball_indicator(0.8), ZeroFunction()],
                             ids=["l1", "ball", "zero"])
    def test_convex_gradient(self, psi, rng):
        B = rng.normal(size=(3, 3))
        Q = B @ B.T + 0.1 * np.eye(3)
        problem = quadratic_problem(Q, rng.normal(size=3), psi)
        for x in rng.normal(size=(20, 3)) * 2:
            fd = numeric_grad(lambda z: fbe_value(problem, z), x)
            w = fbe_subgrad(problem, x)
            np.testing.assert_allclose(w, fd, rtol=1e-5, atol=1e-5 * (1 + np.abs(w).max()))


class TestDifferenceOracle:
    def test_subgradient_consistency(self, rng):
        problem = fixture("circle_bilinear")
        oracle = fbe_difference_oracle(problem)
        for x in rng.uniform(-2, 2, size=(100, 2)):
            np.testing.assert_allclose(subgradient(oracle, x), fbe_subgrad(problem, x),
                                       atol=1e-12, rtol=0)

    def test_value_consistency(self, rng):
        problem = fixture("circle_bilinear")
        oracle = fbe_difference_oracle(problem)
        for x in rng.uniform(-2, 2, size=(50, 2)):
            assert oracle.g_value(x) - oracle.h_value(x) == pytest.approx(
                fbe_value(problem, x), abs=1e-12)

    def test_nonconvexity_certificate(self):
        h = fbe_difference_oracle(fixture("circle_bilinear", lam=0.9)).h_value
        value = h(np.array([-0.5, -0.5])) - 0.5 * h(np.array([-1.0, -1.0])) - 0.5 * h(np.zeros(2))
        assert value == pytest.approx(0.5, abs=1e-12)

    def test_xi_bound(self):
        Q = np.array([[2.0, 1.0], [1.0, -3.0]])
        L = np.linalg.norm(Q, 2)
        oracle = fbe_difference_oracle(quadratic_problem(Q, np.zeros(2), ball_indicator(1.0)))
        assert oracle.xi_bound == pytest.approx(0.25 * L)

    def test_hessian_is_shifted(self):
        problem = fixture("circle_bilinear")
        A = fbe_difference_oracle(problem).g_hess_element(np.zeros(2))
        np.testing.assert_allclose(A, problem.f_hess(np.zeros(2)) + np.eye(2) / 0.9)


class TestCompositeProblem:
    def test_lambda_upper_bound(self):
        with pytest.raises(ConfigError, match="lambda"):
            quadratic_problem(np.eye(2) * 2, np.zeros(2), ZeroFunction(), lam=0.6)

    def test_unchecked_counterexample(self):
        assert fixture("quartic_envelope").lam == 0.1


class TestInfimumAndStationarity:
    @pytest.mark.parametrize("seed", range(5))
    def test_infimum_equality(self, seed):
        problem, phi = gen_1d_composite(seed)
        grid = np.linspace(-10, 10, 200_001)
        inf_phi = phi(grid).min()
        inf_env = min(fbe_value(problem, np.array([t])) for t in grid[::20])
        # the envelope is minimized on a coarser grid; its error scales with the spacing
        assert abs(inf_env - inf_phi) <= 1e-6 + 20 * 1e-4 * 10

    def test_quartic_unbounded(self):
        problem = fixture("quartic_envelope")
        assert fbe_value(problem, np.array([10.0])) < -1e3
        assert fbe_value(problem, np.array([-10.0])) < -1e3

    def test_stationary_points_are_fixed_points(self):
        for seed in range(10):
            problem, x0 = gen_sphere_quadratic(seed)
            trace = pn_run(problem, x0, SolverConfig(beta=0.2, t_min=1e-6, max_iters=500),
                           SelfAdaptiveStep(4, 1e-6))
            if trace.status is not Status.STATIONARY:
                continue
            x = trace.final_x
            T = np.eye(2) - problem.lam * problem.f_hess(x)
            assert abs(np.linalg.det(T)) > 1e-8
            assert np.linalg.norm(x - prox_point(problem, x)) <= 1e-7

    def test_prox_minimal_against_candidates(self, rng):
        lam = 0.7
        for name, psi in PSIS.items():
            if name in ("zero", "l1"):
                continue
            for x in rng.uniform(-3, 3, size=(5, 2)):
                p = psi.prox(x, lam)
                value = psi.value(p) + np.sum((x - p) ** 2) / (2 * lam)
                q = np.array([psi.project(c) for c in rng.uniform(-5, 5, size=(500, 2))])
                other = np.sum((x - q) ** 2, axis=1) / (2 * lam)
                assert value <= other.min() + 1e-10
