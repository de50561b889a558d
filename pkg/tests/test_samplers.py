from decimal import Decimal, localcontext

import numpy as np
import pytest
from pydantic import ValidationError

from core.containers import Generation, PersistentStore
from core.logspace import ess_from_log_weights, normalize_log_weights
from core.rng import make_stream
from samplers.config import Method, Resampler, RunConfig
from samplers.persistent import resample_persistent, run_ps
from samplers.resampling import get_resampler, resample_multinomial, resample_systematic
from samplers.runner import run_sampler
from samplers.smc import run_smc
from samplers.tempering import solve_next_beta
from samplers.waste_free import run_wfsmc
from samplers.weights import (
    mixture_log_denominator,
    persistent_ess,
    ps_log_weights,
    smc_log_weights,
)
from targets.rosenbrock import RosenbrockTarget
from utils.error_handler import InvalidWeightsError


def _config(method, n=64, alpha=0.9, k=5, **extra):
    return RunConfig(method=method, n_particles=n, ess_alpha=alpha, mcmc_steps=k, **extra)


def _store(*generations):
    store = PersistentStore(strict=False)
    for gen, log_z in generations:
        store.append(gen, log_z)
    return store


class TestRunConfig:
    def test_alpha_range(self):
        with pytest.raises(ValidationError):
            _config(Method.SMC, alpha=1.0)
        with pytest.raises(ValidationError):
            _config(Method.WFSMC, alpha=1.2)
        assert _config(Method.PS, alpha=3.0).ess_alpha == 3.0

    def test_minimums(self):
        with pytest.raises(ValidationError):
            _config(Method.SMC, n=1)
        with pytest.raises(ValidationError):
            _config(Method.SMC, k=0)

    def test_final_ess_target_is_ps_only(self):
        with pytest.raises(ValidationError):
            _config(Method.SMC, final_ess_target=100.0)

    def test_method_parsing(self):
        assert _config("wfsmc").method == Method.WFSMC
        assert [m.tag for m in Method] == [0, 1, 2, 3]


class TestSmcWeights:
    def test_no_step(self):
        gen = Generation(np.zeros((4, 1)), np.array([-1.0, -3.0, 0.5, 2.0]), 0.3)
        logw = smc_log_weights(gen, 0.3)
        np.testing.assert_array_equal(logw.values, 0.0)
        assert ess_from_log_weights(logw) == pytest.approx(4.0)

    def test_hand_normalization(self):
        gen = Generation(np.zeros((2, 1)), np.array([0.0, np.log(2.0)]), 0.0)
        weights, _ = normalize_log_weights(smc_log_weights(gen, 1.0))
        np.testing.assert_allclose(weights, [1.0 / 3.0, 2.0 / 3.0])

    def test_zero_likelihood(self):
        gen = Generation(np.zeros((2, 1)), np.array([-np.inf, 0.0]), 0.0)
        weights, _ = normalize_log_weights(smc_log_weights(gen, 0.5))
        np.testing.assert_array_equal(weights, [0.0, 1.0])

    def test_backwards_step(self):
        gen = Generation(np.zeros((2, 1)), np.zeros(2), 0.5)
        with pytest.raises(ValueError):
            smc_log_weights(gen, 0.4)


class TestPersistentWeights:
    def test_single_generation_matches_smc(self):
        log_like = make_stream(0, 0, 0).normal(16) * 3.0
        gen = Generation(np.zeros((16, 1)), log_like, 0.0)
        for beta in (0.0, 0.013, 0.5, 1.0):
            np.testing.assert_array_equal(
                ps_log_weights(PersistentStore(gen), beta).values, smc_log_weights(gen, beta).values
            )

    def test_self_mixture_is_uniform(self):
        log_z = -2.7
        store = _store(*[
            (Generation(np.zeros((5, 1)), make_stream(s, 0, 0).normal(5), 1.0), log_z) for s in range(3)
        ])
        logw = ps_log_weights(store, 1.0)
        np.testing.assert_allclose(logw.values, log_z, atol=1e-12)
        assert persistent_ess(logw) == pytest.approx(15.0)

    def test_two_by_one_exact(self):
        log_z2 = np.log(2.0)
        store = _store(
            (Generation(np.zeros((1, 1)), np.array([1.0]), 0.0), 0.0),
            (Generation(np.zeros((1, 1)), np.array([1.0]), 0.5), log_z2),
        )
        with localcontext() as ctx:
            ctx.prec = 40
            e = Decimal(1).exp()
            expected = 1 - ((Decimal(1) + e.sqrt() / 2) / 2).ln()
        np.testing.assert_allclose(ps_log_weights(store, 1.0).values, float(expected), atol=1e-14)

    def test_zero_beta_component_ignores_zero_likelihood(self):
        denominator = mixture_log_denominator(np.array([-np.inf]), np.array([0.0, 0.5]), np.array([0.0, -1.0]))
        assert denominator[0] == pytest.approx(np.log(0.5))

    def test_unnormalized_ess_agrees(self):
        logw = make_stream(3, 0, 0).normal(40)
        assert persistent_ess(logw, normalized=False) == pytest.approx(persistent_ess(logw))


class TestSolveNextBeta:
    def test_flat_likelihood(self):
        gen = Generation(np.zeros((8, 1)), np.full(8, -4.2), 0.0)
        assert solve_next_beta(lambda b: smc_log_weights(gen, b), 0.0, 0.9, 8) == 1.0

    def test_persistent_alpha_above_one_stalls(self):
        gen = Generation(np.zeros((8, 1)), make_stream(0, 0, 0).normal(8), 0.0)
        store = PersistentStore(gen)
        assert solve_next_beta(lambda b: ps_log_weights(store, b), 0.0, 3.0, 8) == 0.0

    def test_matches_grid_scan(self):
        gen = Generation(np.zeros((2, 1)), np.array([0.0, -10.0]), 0.0)
        beta = solve_next_beta(lambda b: smc_log_weights(gen, b), 0.0, 0.75, 2)

        grid = np.linspace(0.0, 1.0, 1_000_001)
        w = np.exp(-10.0 * grid)
        ess_grid = (1.0 + w) ** 2 / (1.0 + w ** 2)
        crossing = grid[ess_grid >= 1.5].max()
        assert beta == pytest.approx(crossing, abs=1e-6)
        assert ess_from_log_weights(smc_log_weights(gen, beta)) >= 1.5 * (1.0 - 1e-12)


class TestResampling:
    @pytest.mark.parametrize("resampler", [resample_multinomial, resample_systematic])
    def test_one_hot(self, resampler):
        weights = np.zeros(6)
        weights[3] = 1.0
        np.testing.assert_array_equal(resampler(weights, 9, make_stream(0, 0, 2)), 3)

    def test_systematic_uniform_is_exact(self):
        indices = resample_systematic(np.full(4, 0.25), 4, make_stream(1, 0, 2))
        np.testing.assert_array_equal(np.sort(indices), [0, 1, 2, 3])

    def test_multinomial_concentration(self):
        count = 100_000
        indices = resample_multinomial(np.array([0.5, 0.5]), count, make_stream(2, 0, 2))
        assert abs(np.sum(indices == 0) - count / 2) < 4.0 * np.sqrt(count * 0.25)

    def test_pool_larger_than_count(self):
        indices = get_resampler(Resampler.SYSTEMATIC)(np.full(30, 1.0 / 30), 10, make_stream(0, 0, 2))
        assert indices.shape == (10,)
        assert indices.max() < 30

    def test_invalid_weights(self):
        with pytest.raises(InvalidWeightsError):
            resample_systematic(np.array([0.7, 0.7]), 2, make_stream(0, 0, 2))
        with pytest.raises(ValueError):
            resample_multinomial(np.array([0.5, 0.5]), 0, make_stream(0, 0, 2))

    def test_larger_pool_has_fewer_duplicates(self):
        n = 200

        def duplicate_fraction(pool_size, seed):
            weights = np.full(pool_size, 1.0 / pool_size)
            indices = resample_multinomial(weights, n, make_stream(seed, 0, 2))
            return 1.0 - np.unique(indices).size / n

        same = np.mean([duplicate_fraction(n, s) for s in range(50)])
        persistent = np.mean([duplicate_fraction(3 * n, s) for s in range(50)])
        assert persistent < same


class TestSmc:
    def test_constant_likelihood_single_step(self, constant_target):
        result = run_smc(constant_target, _config(Method.SMC), make_stream(0, 0, 0))
        np.testing.assert_array_equal(result.beta_schedule, [0.0, 1.0])
        assert result.log_z == pytest.approx(constant_target.constant, abs=1e-12)

    def test_schedule_and_ess(self, conjugate4):
        config = _config(Method.SMC, alpha=0.9)
        result = run_smc(conjugate4, config, make_stream(1, 0, 0))
        betas = result.beta_schedule
        assert betas[0] == 0.0 and betas[-1] == 1.0
        assert np.all(np.diff(betas) > 0)
        for t in range(1, len(betas)):
            gen = result.final_store.generations[t - 1]
            assert ess_from_log_weights(smc_log_weights(gen, betas[t])) >= 0.9 * 64 - 1e-6

    def test_evaluation_accounting(self, conjugate4):
        result = run_smc(conjugate4, _config(Method.SMC), make_stream(2, 0, 0))
        assert result.likelihood_evals == 64 + (result.iterations - 1) * 64 * 5
        assert result.reweight_evals == 0
        assert result.evals_by_phase["init"] == 64
        assert len(result.acceptance_trace) == result.iterations - 1
        assert np.all(np.isfinite(result.log_z_trace))

    def test_deterministic(self, conjugate4):
        a = run_smc(conjugate4, _config(Method.SMC), make_stream(3, 0, 0))
        b = run_smc(conjugate4, _config(Method.SMC), make_stream(3, 0, 0))
        np.testing.assert_array_equal(a.log_z_trace, b.log_z_trace)
        np.testing.assert_array_equal(a.final_generation.particles, b.final_generation.particles)

    def test_iteration_cap(self):
        result = run_smc(RosenbrockTarget(), _config(Method.SMC, max_iterations=3), make_stream(0, 0, 0))
        assert not result.complete
        assert result.iterations == 3
        assert result.beta_schedule[-1] < 1.0

    def test_rejects_other_methods(self, conjugate4):
        with pytest.raises(ValueError):
            run_smc(conjugate4, _config(Method.PS), make_stream(0, 0, 0))

    def test_rsmc_shares_the_loop(self, conjugate4):
        smc = run_sampler(conjugate4, _config(Method.SMC), make_stream(4, 0, 0))
        rsmc = run_sampler(conjugate4, _config(Method.RSMC), make_stream(4, 0, 0))
        np.testing.assert_array_equal(smc.log_z_trace, rsmc.log_z_trace)
        assert rsmc.method == Method.RSMC


class TestPs:
    def test_second_iteration_matches_smc(self, conjugate4):
        smc = run_smc(conjugate4, _config(Method.SMC), make_stream(5, 0, 0))
        ps = run_ps(conjugate4, _config(Method.PS), make_stream(5, 0, 0))
        assert ps.beta_schedule[1] == smc.beta_schedule[1]
        assert ps.log_z_trace[1] == smc.log_z_trace[1]

    def test_high_alpha_stalls_at_prior(self, conjugate4):
        result = run_ps(conjugate4, _config(Method.PS, alpha=3.0), make_stream(6, 0, 0))
        # ⌊α⌋+1 = 4 代停留在先验
        np.testing.assert_array_equal(result.beta_schedule[:4], 0.0)
        assert result.beta_schedule[4] > 0.0
        assert result.evals_by_phase["prior"] == 3 * 64
        assert result.beta_schedule[-1] == 1.0
        assert result.complete
        assert result.reweight_evals == 0
        assert result.likelihood_evals == 4 * 64 + (result.iterations - 4) * 64 * 5

    @pytest.mark.parametrize("alpha, zeros", [(1.0, 2), (1.5, 2), (2.5, 3), (4.0, 5)])
    def test_prior_iterations_follow_alpha(self, conjugate4, alpha, zeros):
        result = run_ps(conjugate4, _config(Method.PS, alpha=alpha), make_stream(6, 1, 0))
        np.testing.assert_array_equal(result.beta_schedule[:zeros], 0.0)
        assert result.beta_schedule[zeros] > 0.0
        assert result.evals_by_phase["prior"] == (zeros - 1) * 64

    def test_store_keeps_every_generation(self, conjugate4):
        result = run_ps(conjugate4, _config(Method.PS, alpha=2.0), make_stream(7, 0, 0))
        assert result.final_store.total_particles() == result.iterations * 64
        assert np.all(np.isfinite(result.final_store.log_z_array()))
        assert np.all(np.diff(result.beta_schedule) >= 0.0)

    def test_single_one_without_continuation(self, conjugate4):
        result = run_ps(conjugate4, _config(Method.PS, alpha=2.0), make_stream(8, 0, 0))
        assert np.sum(result.beta_schedule == 1.0) == 1

    def test_continuation_after_one(self, conjugate4):
        config = _config(Method.PS, alpha=2.0, final_ess_target=2000.0)
        result = run_ps(conjugate4, config, make_stream(8, 0, 0))
        betas = result.beta_schedule
        assert np.sum(betas == 1.0) >= 2
        first_one = int(np.argmax(betas == 1.0))
        np.testing.assert_array_equal(betas[first_one:], 1.0)
        assert persistent_ess(ps_log_weights(result.final_store, 1.0)) >= 2000.0

    def test_resample_persistent(self, conjugate4):
        result = run_ps(conjugate4, _config(Method.PS, alpha=2.0), make_stream(9, 0, 0))
        posterior = resample_persistent(result.final_store, 50, make_stream(9, 0, 2))
        assert posterior.n_particles == 50
        assert posterior.beta == 1.0


class TestWasteFree:
    def test_pool_size(self, conjugate4):
        result = run_wfsmc(conjugate4, _config(Method.WFSMC, n=32, alpha=0.5, k=4), make_stream(0, 0, 0))
        assert result.final_pool.n_particles == 4 * 32
        assert result.final_pool.beta == 1.0
        assert result.likelihood_evals == 32 + (result.iterations - 1) * 32 * 4
        assert result.reweight_evals == 0

    def test_single_step_chain(self, conjugate4):
        result = run_wfsmc(conjugate4, _config(Method.WFSMC, n=32, alpha=0.5, k=1), make_stream(0, 0, 0))
        assert result.final_pool.n_particles == 32
        np.testing.assert_array_equal(result.final_pool.particles, result.final_generation.particles)

    def test_constant_likelihood(self, constant_target):
        result = run_wfsmc(constant_target, _config(Method.WFSMC), make_stream(0, 0, 0))
        assert result.log_z == pytest.approx(constant_target.constant, abs=1e-12)
