import unittest

import numpy as np

from mcse.diagnostics import autocorrelation_time, ks_normal, thin
from mcse.errors import ConfigError, InvalidInputError, NumericalError
from mcse.noise_nmf import NmfParams, noise_variance
from mcse.samplers import (
    ChainState,
    GaussianTarget,
    SamplerConfig,
    SpeechTarget,
    ld_step,
    mala_step,
    mh_step,
    run_sampler,
    score,
    spawn_chains,
)

from support import affine_decoder, gru_decoder, scale

MEAN = np.array([1.0, -0.5])
COV = np.array([[1.0, 0.3], [0.3, 0.5]])


def _gaussian(frames):
    return GaussianTarget.from_posterior(MEAN, COV, frames=frames)


def _speech_target(decoder, frames=6, seed=0):
    rng = np.random.default_rng(seed)
    nmf = NmfParams(rng.uniform(0.1, 0.5, (decoder.freq_dim, 2)), rng.uniform(0.1, 0.5, (2, frames)))
    x_pow = rng.exponential(1.0, (frames, decoder.freq_dim))
    return SpeechTarget(decoder, x_pow, noise_variance(nmf))


def _finite_difference_score(tg, z, step=1e-6):
    grad = np.zeros_like(z)
    for index in np.ndindex(*z.shape):
        plus = z.copy()
        minus = z.copy()
        plus[index] += step
        minus[index] -= step
        grad[index] = (tg.logdensity(plus) - tg.logdensity(minus)) / (2 * step)
    return grad


class TargetTest(unittest.TestCase):
    def test_speech_score(self):
        for i, dec in enumerate((affine_decoder(3, 7, seed=2), gru_decoder(3, 7, 4, seed=3))):
            tg = _speech_target(dec, seed=i)
            z = np.random.default_rng(i).standard_normal((tg.frames, 3))
            expected = _finite_difference_score(tg, z)
            error = np.linalg.norm(tg.score(z) - expected) / np.linalg.norm(expected)
            self.assertLess(error, 1e-5)

    def test_batched_evaluation(self):
        tg = _speech_target(gru_decoder())
        z = np.random.default_rng(0).standard_normal((3, tg.frames, 4))
        batched = tg.evaluate(z)
        self.assertEqual(batched.frame_loglik.shape, (3, tg.frames))
        for m in range(3):
            np.testing.assert_allclose(batched.score[m], tg.score(z[m]), rtol=1e-10)
            self.assertAlmostEqual(batched.logdensity[m], tg.logdensity(z[m]), places=8)
        np.testing.assert_array_equal(score(tg, ChainState(z)), tg.score(z))

    def test_speech_shapes(self):
        dec = affine_decoder(3, 7)
        with self.assertRaises(InvalidInputError):
            SpeechTarget(dec, np.ones((4, 6)), np.ones((4, 6)))
        with self.assertRaises(InvalidInputError):
            SpeechTarget(dec, np.ones((4, 7)), np.ones((5, 7)))
        with self.assertRaises(InvalidInputError):
            _speech_target(dec, frames=4).score(np.zeros((5, 3)))

    def test_gaussian_posterior(self):
        tg = _gaussian(3)
        np.testing.assert_allclose(tg.posterior_cov, COV, rtol=1e-12)
        np.testing.assert_allclose(tg.posterior_mean, np.tile(MEAN, (3, 1)), rtol=1e-12)
        np.testing.assert_allclose(tg.score(tg.posterior_mean), 0.0, atol=1e-12)
        with self.assertRaises(InvalidInputError):
            GaussianTarget(-2.0 * np.eye(2), np.zeros((1, 2)))
        with self.assertRaises(InvalidInputError):
            GaussianTarget(np.array([[1.0, 0.5], [0.0, 1.0]]), np.zeros((1, 2)))


class SpawnChainsTest(unittest.TestCase):
    def test_jitter(self):
        z0 = np.ones((5, 3))
        st = spawn_chains(z0, 4, 0.02, seed=1)
        self.assertEqual(st.samples.shape, (4, 5, 3))
        self.assertEqual(st.step, 0)
        np.testing.assert_array_equal(st.chain_ids, np.arange(4))
        self.assertFalse(np.array_equal(st.samples[0], st.samples[1]))
        np.testing.assert_array_equal(spawn_chains(z0, 2, 0.02, seed=1).samples, st.samples[:2])
        np.testing.assert_array_equal(spawn_chains(z0, 3, 0.0, seed=1).samples[2], z0)

    def test_invalid(self):
        with self.assertRaises(InvalidInputError):
            spawn_chains(np.zeros((2, 2)), 0, 0.02, seed=0)
        with self.assertRaises(InvalidInputError):
            ChainState(np.zeros((2, 2)))
        with self.assertRaises(NumericalError):
            ChainState(np.full((1, 2, 2), np.nan))


class LangevinTest(unittest.TestCase):
    def test_gaussian_moments(self):
        tg = _gaussian(4)
        st = spawn_chains(np.zeros((4, 2)), 64, 0.02, seed=0)
        eta = 0.05
        collected = []
        for k in range(scale(2500, 20000)):
            st = ld_step(tg, st, eta, seed=0)
            if k >= 500:
                collected.append(st.samples.reshape(-1, 2))
        samples = np.concatenate(collected)
        np.testing.assert_allclose(samples.mean(axis=0), MEAN, atol=0.05)
        cov = np.cov(samples, rowvar=False)
        self.assertLess(np.linalg.norm(cov - COV) / np.linalg.norm(COV), 0.1)

    def test_gradient_step_without_noise(self):
        tg = _speech_target(affine_decoder(3, 7))
        st = spawn_chains(np.zeros((tg.frames, 3)), 3, 0.1, seed=2)
        moved = ld_step(tg, st, 0.01, seed=2, inject_noise=False)
        np.testing.assert_allclose(moved.samples, st.samples + 0.005 * tg.score(st.samples), rtol=1e-14)
        self.assertEqual(moved.step, 1)

    def test_permutation_commutes(self):
        tg = _speech_target(gru_decoder())
        st = spawn_chains(np.zeros((tg.frames, 4)), 5, 0.1, seed=3)
        order = [3, 0, 4, 1, 2]
        a = ld_step(tg, st, 0.01, seed=3).permuted(order)
        b = ld_step(tg, st.permuted(order), 0.01, seed=3)
        np.testing.assert_allclose(a.samples, b.samples, rtol=1e-12, atol=1e-14)
        np.testing.assert_array_equal(a.chain_ids, b.chain_ids)

    def test_deterministic(self):
        tg = _gaussian(3)
        st = spawn_chains(np.zeros((3, 2)), 2, 0.02, seed=4)
        np.testing.assert_array_equal(ld_step(tg, st, 0.01, seed=4).samples, ld_step(tg, st, 0.01, seed=4).samples)
        self.assertFalse(np.array_equal(ld_step(tg, st, 0.01, seed=4).samples, ld_step(tg, st, 0.01, seed=5).samples))

    def test_divergence(self):
        tg = GaussianTarget(np.eye(1), np.zeros((1, 1)))
        st = ChainState(np.full((1, 1, 1), 1e300), step=7)
        with np.errstate(over="ignore", invalid="ignore"):
            with self.assertRaises(NumericalError) as cm:
                ld_step(tg, st, 1e10, seed=0)
        self.assertEqual(cm.exception.step, 7)


class MetropolisTest(unittest.TestCase):
    frames = 16

    def _run(self, kind, **kw):
        cfg = SamplerConfig(kind=kind, K=scale(8000, 100000), burn_in=500, seed=11, **kw)
        return run_sampler(cfg, _gaussian(self.frames), np.zeros((self.frames, 2)))

    def _check_moments(self, run):
        samples = run.samples.reshape(-1, 2)
        np.testing.assert_allclose(samples.mean(axis=0), MEAN, atol=0.05)
        cov = np.cov(samples, rowvar=False)
        self.assertLess(np.linalg.norm(cov - COV) / np.linalg.norm(COV), 0.1)

    def test_mh_moments(self):
        run = self._run("mh", sigma2=0.5)
        self._check_moments(run)
        self.assertEqual(run.acceptance.shape, (scale(8000, 100000), self.frames))
        self.assertTrue(0.2 < run.acceptance_rate < 0.9)

    def test_mala_moments(self):
        run = self._run("mala", eta=0.3)
        self._check_moments(run)
        self.assertGreater(run.acceptance_rate, 0.5)

    def test_mh_marginal_distribution(self):
        run = self._run("mh", sigma2=0.5)
        first = run.samples[..., 0].T
        tau = autocorrelation_time(first)
        thinned = thin(first, 2 * tau, axis=1)
        verdict = ks_normal(thinned, MEAN[0], np.sqrt(COV[0, 0]), alpha=0.001)
        self.assertTrue(verdict.passed, str(verdict))
        self.assertFalse(ks_normal(thinned, MEAN[0] + 0.5, np.sqrt(COV[0, 0]), alpha=0.001).passed)

    def test_mh_scalar_acceptance_rate(self):
        # stationary acceptance of a random walk on N(m, s²) is (2/π) arctan(2s / σ)
        mean, var, sigma2 = 0.5, 0.8, 1.0
        tg = GaussianTarget.from_posterior([mean], [[var]], frames=10)
        cfg = SamplerConfig(kind="mh", sigma2=sigma2, K=scale(20000, 100000), burn_in=200, seed=2)
        run = run_sampler(cfg, tg, np.full((10, 1), mean))
        expected = 2.0 / np.pi * np.arctan(2.0 * np.sqrt(var / sigma2))
        self.assertAlmostEqual(run.acceptance_rate, expected, delta=0.01)

    def test_mala_stays_at_mode_without_noise(self):
        tg = GaussianTarget.from_posterior(np.zeros(2), COV, frames=3)
        z = np.zeros((3, 2))
        moved, accepted = mala_step(tg, z, 0.3, seed=0, inject_noise=False)
        np.testing.assert_array_equal(moved, z)
        self.assertTrue(np.all(accepted))

    def test_mala_without_drift_is_mh(self):
        tg = _speech_target(gru_decoder())
        z_mh = z_mala = np.zeros((tg.frames, 4))
        for k in range(scale(100, 1000)):
            z_mh, acc_mh = mh_step(tg, z_mh, 0.02, seed=5, step=k)
            z_mala, acc_mala = mala_step(tg, z_mala, 0.02, seed=5, step=k, drift=False)
            np.testing.assert_array_equal(z_mh, z_mala)
            np.testing.assert_array_equal(acc_mh, acc_mala)

    def test_tiny_proposals_accepted(self):
        tg = _speech_target(affine_decoder(3, 7))
        run = run_sampler(SamplerConfig(kind="mh", sigma2=1e-12, K=50), tg, np.zeros((tg.frames, 3)))
        self.assertGreater(run.acceptance_rate, 0.99)

    def test_without_noise_stays(self):
        tg = _gaussian(3)
        z = np.random.default_rng(0).standard_normal((3, 2))
        moved, accepted = mh_step(tg, z, 0.5, seed=0, inject_noise=False)
        np.testing.assert_array_equal(moved, z)
        self.assertTrue(np.all(accepted))

    def test_merged_state_frames(self):
        tg = _gaussian(self.frames)
        z = np.zeros((self.frames, 2))
        moved, accepted = mh_step(tg, z, 4.0, seed=3)
        np.testing.assert_array_equal(moved[~accepted], z[~accepted])
        self.assertTrue(np.all(np.any(moved[accepted] != 0.0, axis=-1)))


class RunSamplerTest(unittest.TestCase):
    def test_config_defaults(self):
        self.assertEqual((SamplerConfig().K, SamplerConfig().burn_in), (1, 0))
        self.assertEqual((SamplerConfig(kind="mh").K, SamplerConfig(kind="mh").burn_in), (10, 5))
        self.assertEqual(SamplerConfig(kind="mala").retained, 5)
        self.assertEqual(SamplerConfig(M=3).retained, 3)
        self.assertEqual((SamplerConfig().eta, SamplerConfig().sigma2), (0.005, 0.02))

    def test_config_invalid(self):
        for kw in (
            {"kind": "hmc"},
            {"eta": 0.0},
            {"sigma2": -1.0},
            {"K": 0},
            {"kind": "mh", "K": 5, "burn_in": 5},
            {"M": 0},
            {"seed": -1},
        ):
            with self.subTest(**kw), self.assertRaises(ConfigError):
                SamplerConfig(**kw)

    def test_langevin_run(self):
        tg = _speech_target(gru_decoder())
        run = run_sampler(SamplerConfig(K=3, M=4), tg, np.zeros((tg.frames, 4)), key=(2,), trace=True)
        self.assertEqual(run.samples.shape, (4, tg.frames, 4))
        self.assertEqual(run.final_state.step, 3)
        self.assertIsNone(run.acceptance_rate)
        self.assertEqual(run.log_density.shape, (3,))
        again = run_sampler(SamplerConfig(K=2, M=4), tg, run.final_state, key=(3,))
        self.assertEqual(again.final_state.step, 5)

    def test_metropolis_run(self):
        tg = _speech_target(gru_decoder())
        run = run_sampler(SamplerConfig(kind="mala", K=6, burn_in=2), tg, np.zeros((tg.frames, 4)))
        self.assertEqual(run.samples.shape, (4, tg.frames, 4))
        self.assertEqual(run.acceptance.shape, (6, tg.frames))
        self.assertIsNone(run.final_state)
        self.assertEqual(run.mean.shape, (tg.frames, 4))

    def test_keyed_streams(self):
        tg = _gaussian(3)
        cfg = SamplerConfig(kind="mh", K=4, burn_in=0, sigma2=0.5)
        a = run_sampler(cfg, tg, np.zeros((3, 2)), key=(1,))
        b = run_sampler(cfg, tg, np.zeros((3, 2)), key=(1,))
        c = run_sampler(cfg, tg, np.zeros((3, 2)), key=(2,))
        np.testing.assert_array_equal(a.samples, b.samples)
        self.assertFalse(np.array_equal(a.samples, c.samples))


if __name__ == "__main__":
    unittest.main()
