import math

import numpy as np
import pytest

import gossipgrad as gg
from gossipgrad.errors import ConfigError

from conftest import fit_tail_rate


def brute_force_rounds(rho: float, sigma: float, cap: int = 10_000) -> int:
    threshold = gg.sigma0(rho)
    power = sigma
    m = 1
    while power > threshold and m < cap:
        power *= sigma
        m += 1
    return m


class TestSigma0:
    def test_small_rho_limit(self):
        assert gg.sigma0(1e-12) == pytest.approx(0.0, abs=1e-11)

    def test_frozen_values(self):
        assert gg.sigma0(0.75) == pytest.approx(0.411438, abs=1e-6)
        assert gg.sigma0(0.5) == pytest.approx(0.258819, abs=1e-6)

    def test_monotone_increasing_below_bound(self):
        grid = np.linspace(0.01, 0.99, 99)
        values = [gg.sigma0(r) for r in grid]
        assert all(a < b for a, b in zip(values, values[1:]))
        assert all(0 < v < math.sqrt(2) / 2 for v in values)

    def test_domain(self):
        for bad in (0.0, 1.0, -0.5, 2.0):
            with pytest.raises(ValueError):
                gg.sigma0(bad)


class TestCommRounds:
    def test_well_connected_network_needs_one_round(self):
        assert gg.comm_rounds(0.9, 0.1) == 1

    def test_builtin_pair_values(self):
        assert gg.comm_rounds(0.5, 0.7853) == 6
        assert gg.comm_rounds(0.75, 0.7853) == 4

    def test_domain(self):
        for rho, sigma in [(0.0, 0.5), (1.0, 0.5), (0.5, 0.0), (0.5, 1.0)]:
            with pytest.raises(ValueError):
                gg.comm_rounds(rho, sigma)

    @pytest.mark.parametrize("seed", range(5))
    def test_agrees_with_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        for _ in range(50):
            rho = float(rng.uniform(0.02, 0.98))
            sigma = float(rng.uniform(0.02, 0.98))
            m = gg.comm_rounds(rho, sigma)
            assert m == brute_force_rounds(rho, sigma)
            assert sigma**m <= gg.sigma0(rho)
            if m > 1:
                assert sigma ** (m - 1) > gg.sigma0(rho)

    def test_monotonicity(self):
        grid = np.linspace(0.1, 0.9, 17)
        for sigma in grid:
            values = [gg.comm_rounds(r, sigma) for r in grid]
            assert all(a >= b for a, b in zip(values, values[1:])), "not nonincreasing in rho"
        for rho in grid:
            values = [gg.comm_rounds(rho, s) for s in grid]
            assert all(a <= b for a, b in zip(values, values[1:])), "not nondecreasing in sigma"


class TestAlgorithmParams:
    def test_derive_fills_m_and_lam(self):
        params = gg.AlgorithmParams.derive(0.5, 0.5, 0.7853)
        assert params.m == 6
        assert params.lam == pytest.approx(math.sqrt(0.75), rel=1e-15)

    def test_rho_zero_is_clamped(self):
        params = gg.AlgorithmParams.derive(1.0, 0.0, 0.5)
        assert params.rho == 1e-6
        assert params.lam < 1.0
        assert params.m >= 1

    def test_override_above_formula_is_valid(self):
        params = gg.AlgorithmParams.derive(2.0, 0.75, 0.7853, m_override=6)
        assert params.m == 6

    def test_override_below_formula_is_rejected(self):
        with pytest.raises(ValueError):
            gg.AlgorithmParams.derive(0.5, 0.5, 0.7853, m_override=2)

    def test_inconsistent_lam_rejected(self):
        with pytest.raises(ValueError):
            gg.AlgorithmParams(alpha=1.0, rho=0.5, sigma=0.5, m=2, lam=0.5)


class TestIteration:
    def test_single_agent_reduces_to_centralized(self):
        f = gg.quadratic_objective(np.diag([1.0, 3.0]), np.array([0.5, -0.2]))
        problem = gg.Problem([f])
        schedule = gg.GossipSchedule.constant(gg.GossipMatrix([[1.0]]))
        params = gg.AlgorithmParams.derive(0.5, 0.5, 0.5)
        x0 = np.array([[2.0, -1.0]])
        trace = gg.run_algorithm(problem, schedule, params, x0, 100)
        central = gg.centralized_gd(problem, 0.5, x0[0], 100)
        assert np.abs(trace.x[:, 0, :] - central).max() <= 1e-12
        assert np.abs(trace.y).max() == 0.0

    def test_fixed_point_is_stationary(self, pair, pair_sigma):
        problem = gg.random_quadratic_problem(5, 3, 1.0, 3.0, seed=3)
        params = gg.AlgorithmParams.derive(0.5, 0.5, pair_sigma)
        schedule = gg.GossipSchedule.random_choice(list(pair), seed=8)
        xstar = problem.optimizer
        x = np.tile(xstar, (5, 1))
        grads = np.stack([f.gradient(xstar) for f in problem.locals])
        y = -(params.alpha / params.lam) * grads
        x_next, y_next, _ = gg.algorithm_iteration(problem, schedule, params, x, y, 0)
        assert np.abs(x_next - x).max() <= 1e-14
        assert np.abs(y_next - y).max() <= 1e-14

    def test_dimension_mismatch_raises(self, pair):
        problem = gg.random_quadratic_problem(4, 2, 1.0, 2.0, seed=0)
        schedule = gg.GossipSchedule.constant(pair[0])  # 5 agents
        params = gg.AlgorithmParams.derive(1.0, 0.5, 0.8)
        with pytest.raises(ConfigError):
            gg.algorithm_iteration(problem, schedule, params, np.zeros((4, 2)), np.zeros((4, 2)), 0)


class TestRun:
    def test_resource_counters(self, corpus):
        for run in corpus:
            K, n = run.trace.iterations, run.trace.n
            assert run.trace.gradient_evaluations == n * K
            assert run.trace.row_communications == n * run.params.m * K

    def test_conservation_invariants(self, corpus):
        for run in corpus:
            y_mean = run.trace.y.mean(axis=1)
            assert np.abs(y_mean).max() <= 1e-12, run.name
            v_mean = run.trace.v.mean(axis=1)
            x_mean = run.trace.x[:-1].mean(axis=1)
            assert np.abs(v_mean - x_mean).max() <= 1e-12, run.name

    def test_rate_at_most_rho(self, corpus):
        for run in corpus:
            errors = run.trace.max_errors(run.problem.optimizer)
            rate = fit_tail_rate(errors)
            assert rate <= run.params.rho + 0.02, f"{run.name}: rate {rate} vs rho {run.params.rho}"

    def test_nonzero_sum_y0_rejected(self, pair):
        problem = gg.random_quadratic_problem(5, 2, 1.0, 2.0, seed=1)
        schedule = gg.GossipSchedule.constant(pair[0])
        params = gg.AlgorithmParams.derive(1.0, 0.4, 0.73)
        with pytest.raises(ConfigError):
            gg.run_algorithm(problem, schedule, params, np.zeros((5, 2)), 3, y0=np.ones((5, 2)))

    def test_zero_sum_y0_accepted(self, pair):
        problem = gg.random_quadratic_problem(5, 2, 1.0, 2.0, seed=1)
        schedule = gg.GossipSchedule.constant(pair[0])
        params = gg.AlgorithmParams.derive(1.0, 0.4, 0.73)
        y0 = np.zeros((5, 2))
        y0[0] = [1.0, -2.0]
        y0[3] = [-1.0, 2.0]
        trace = gg.run_algorithm(problem, schedule, params, np.zeros((5, 2)), 30, y0=y0)
        assert np.abs(trace.y.mean(axis=1)).max() <= 1e-12

    def test_deterministic_replay(self, pair):
        problem = gg.random_quadratic_problem(5, 3, 1.0, 3.0, seed=5)
        schedule = gg.GossipSchedule.random_choice(list(pair), seed=11)
        params = gg.AlgorithmParams.derive(0.5, 0.5, 0.7854)
        x0 = np.random.default_rng(0).standard_normal((5, 3))
        a = gg.run_algorithm(problem, schedule, params, x0, 25)
        b = gg.run_algorithm(problem, schedule, params, x0, 25)
        assert np.array_equal(a.x, b.x) and np.array_equal(a.y, b.y)


class TestCentralizedGd:
    def test_exact_one_step_convergence(self):
        f = gg.quadratic_objective(np.array([[1.0]]), np.zeros(1))
        problem = gg.Problem([f])
        trajectory = gg.centralized_gd(problem, 1.0, np.array([5.0]), 3)
        assert trajectory[1, 0] == pytest.approx(0.0, abs=1e-15)

    def test_rate_matches_eigen_oracle(self):
        problem = gg.random_quadratic_problem(3, 4, 1.0, 3.0, seed=9)
        trajectory = gg.centralized_gd(problem, 0.5, np.ones(4) * 4.0, 60)
        errors = np.linalg.norm(trajectory - problem.optimizer, axis=1)
        assert gg.fit_rate(errors, 0.5) == pytest.approx(0.5, abs=0.01)

    def test_localization_converges_to_target(self):
        cfg = gg.LocalizationConfig.sampled(5, seed=293)
        problem = cfg.problem()
        trajectory = gg.centralized_gd(problem, 2.0, cfg.positions.mean(axis=0), 300)
        assert np.linalg.norm(trajectory[-1] - np.array([1.0, 1.0])) <= 1e-10

    def test_bad_x0_shape(self):
        problem = gg.random_quadratic_problem(2, 3, 1.0, 2.0, seed=0)
        with pytest.raises(ConfigError):
            gg.centralized_gd(problem, 0.5, np.zeros(2), 5)


class TestDgdBaseline:
    def test_single_agent_equals_centralized(self):
        f = gg.quadratic_objective(np.diag([2.0]), np.array([1.0]))
        problem = gg.Problem([f])
        schedule = gg.GossipSchedule.constant(gg.GossipMatrix([[1.0]]))
        dgd = gg.dgd_baseline(problem, schedule, 0.3, np.array([[4.0]]), 40)
        central = gg.centralized_gd(problem, 0.3, np.array([4.0]), 40)
        assert np.abs(dgd[:, 0, :] - central).max() <= 1e-15

    def test_zero_gradients_give_pure_consensus(self, pair):
        zero = gg.quadratic_objective(np.zeros((2, 2)), np.zeros(2))
        problem = gg.Problem([zero] * 5)
        schedule = gg.GossipSchedule.constant(pair[0])
        sigma = gg.spectral_gap(pair[0])
        x0 = np.random.default_rng(2).standard_normal((5, 2))
        trajectory = gg.dgd_baseline(problem, schedule, 0.1, x0, 20)
        for k in range(20):
            before = np.linalg.norm(gg.disagreement_part(trajectory[k]))
            after = np.linalg.norm(gg.disagreement_part(trajectory[k + 1]))
            assert after <= sigma * before + 1e-9

    def test_exhibits_bias_at_consensus_optimum(self, pair):
        # Individual gradients nonzero at the optimizer push iterates off it.
        problem = gg.random_quadratic_problem(5, 2, 1.0, 3.0, seed=4)
        schedule = gg.GossipSchedule.constant(pair[0])
        x0 = np.tile(problem.optimizer, (5, 1))
        trajectory = gg.dgd_baseline(problem, schedule, 0.4, x0, 1)
        moved = np.linalg.norm(trajectory[1] - x0, axis=1)
        assert moved.max() > 1e-3
