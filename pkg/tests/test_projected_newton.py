import numpy as np
import pytest

from rcsn import ConstantRho, ConstantStep, SelfAdaptiveStep, SolverConfig, Status, run, subgradient
from rcsn.envelope import (CompositeProblem, ball_indicator, fbe_difference_oracle, fbe_value,
                           finite_indicator, quadratic_problem)
from rcsn.problems import fixture, gen_sphere_quadratic, gen_trust_region, trust_region_problem
from rcsn.projected_newton import fixed_point_residual, pn_run, pn_solution, pn_step

from conftest import projected_gradient


def scalar_problem():
    return CompositeProblem(f_value=lambda x: 0.5 * float(x @ x), f_grad=lambda x: x.copy(),
                            f_hess=lambda x: np.eye(1), lipschitz_grad=1.0,
                            psi=finite_indicator([-1.0, 1.0]), lam=0.5, dim=1)


PN_CONFIG = SolverConfig(beta=0.2, sigma=0.2, t_min=1e-6, max_iters=5000)


class TestStep:
    def test_scalar_example(self):
        w, d = pn_step(scalar_problem(), np.array([0.6]))
        assert w[0] == pytest.approx(-0.4)
        assert d[0] == pytest.approx(0.4 / 3)

    def test_fixed_point_stops(self):
        w, d = pn_step(scalar_problem(), np.array([1.0]))
        assert not w.any() and not d.any()
        trace = pn_run(scalar_problem(), [1.0])
        assert trace.status is Status.STATIONARY and trace.iterations == 0

    def test_matches_difference_oracle(self, rng):
        problem = fixture("circle_bilinear")
        oracle = fbe_difference_oracle(problem)
        for x in rng.uniform(-2, 2, size=(50, 2)):
            w, d = pn_step(problem, x)
            np.testing.assert_allclose(w, subgradient(oracle, x), atol=1e-12, rtol=0)

    def test_descent_sign(self, rng):
        for seed in range(5):
            inst = gen_trust_region(20, seed)
            problem = trust_region_problem(inst)
            for x in rng.normal(size=(5, 20)) * 3:
                w, d = pn_step(problem, x)
                M = problem.f_hess(x) + np.eye(20) / problem.lam
                assert float(w @ d) < 0
                assert float(w @ d) == pytest.approx(-float(w @ np.linalg.solve(M, w)))
                assert np.linalg.norm(M @ d + w) <= 1e-10 * np.linalg.norm(w)


class TestRun:
    @pytest.mark.parametrize("seed", range(3))
    def test_trust_region_instance(self, seed):
        inst = gen_trust_region(50, seed)
        problem = trust_region_problem(inst)
        trace = pn_run(problem, inst.x0, PN_CONFIG, SelfAdaptiveStep(4, 1e-6))
        assert trace.is_monotone()
        sol = pn_solution(problem, trace.final_x)
        assert problem.psi.distance(sol) <= 1e-9
        if trace.status is Status.STATIONARY:
            bound = PN_CONFIG.grad_tol * problem.lam * (
                1 + np.linalg.norm(problem.f_hess(trace.final_x), 2))
            assert fixed_point_residual(problem, trace.final_x) <= bound
        else:
            # the only other admissible exit: the predicted decrease is below
            # the rounding level of an n-term envelope evaluation
            assert trace.status is Status.NO_PROGRESS
            w, d = pn_step(problem, trace.final_x)
            floor = 10 * 50 * np.finfo(float).eps * (1 + abs(trace.final_phi))
            assert abs(float(w @ d)) <= floor

    def test_convex_ball_against_projected_gradient(self, rng):
        for seed in range(5):
            B = rng.normal(size=(4, 4))
            Q = B @ B.T + 0.5 * np.eye(4)
            b = rng.normal(size=4) * 5
            psi = ball_indicator(1.0)
            problem = quadratic_problem(Q, b, psi)
            x0 = rng.normal(size=4)
            trace = pn_run(problem, x0, PN_CONFIG, SelfAdaptiveStep(4, 1e-6))
            sol = pn_solution(problem, trace.final_x)
            ref = projected_gradient(Q, b, psi.project, x0, 1.0 / np.linalg.norm(Q, 2))
            assert problem.f_value(sol) == pytest.approx(problem.f_value(ref), abs=1e-6)

    def test_interior_minimizer_unit_steps(self):
        Q = np.diag([2.0, 1.0, 3.0])
        b = np.array([-0.2, 0.1, 0.3])
        problem = quadratic_problem(Q, b, ball_indicator(5.0))
        trace = pn_run(problem, np.array([4.0, -2.0, 1.0]), PN_CONFIG, ConstantStep(1.0))
        assert trace.status is Status.STATIONARY
        np.testing.assert_allclose(pn_solution(problem, trace.final_x), np.linalg.solve(Q, -b),
                                   atol=1e-9)
        taus = [r.tau for r in trace.records[:-1]]
        assert taus[-3:] == [1.0, 1.0, 1.0]

    def test_stationary_residual_bound_on_sphere(self):
        for seed in range(10):
            problem, x0 = gen_sphere_quadratic(seed)
            trace = pn_run(problem, x0, PN_CONFIG, SelfAdaptiveStep(4, 1e-6))
            assert trace.is_monotone()
            if trace.status is Status.STATIONARY:
                bound = PN_CONFIG.grad_tol * problem.lam * (1 + np.linalg.norm(
                    problem.f_hess(trace.final_x), 2))
                assert fixed_point_residual(problem, trace.final_x) <= bound


class TestEquivalence:
    @pytest.mark.parametrize("seed", range(10))
    def test_iterates_coincide(self, seed):
        problem, x0 = gen_sphere_quadratic(seed)
        config = SolverConfig(beta=0.5, sigma=0.2, rho_strategy=ConstantRho(0.0), max_iters=50,
                              grad_tol=1e-12)
        a = pn_run(problem, x0, config, ConstantStep(1.0))
        b = run(fbe_difference_oracle(problem), x0, config, ConstantStep(1.0))
        n = min(len(a.records), len(b.records), 51)
        assert n >= 2
        for ra, rb in zip(a.records[:n], b.records[:n]):
            np.testing.assert_allclose(ra.x, rb.x, atol=1e-12, rtol=0)
