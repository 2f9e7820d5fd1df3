# -*- coding: utf-8 -*-
##########################################################################
# NSAp - Copyright (C) CEA, 2021
# Distributed under the terms of the CeCILL-B license, as published by
# the CEA-CNRS-INRIA. Refer to the LICENSE file or to
# http://www.cecill.info/licences/Licence_CeCILL-B_V1-en.html
# for details.
##########################################################################

# Imports
import unittest
import numpy as np
from starcell.config import SystemConfig
from starcell.scenario import REFLECT, TRANSMIT, from_gains
from starcell.correlation import build_correlation
from starcell.estimation import build_statistics, estimate_channels
from starcell.combining import (
    combiner_set, mr_combiner, local_mmse_combiner, local_mse,
    collective_covariance, global_mmse_combiner, lsfd_weights, mf_weights)
from starcell.closedform import closed_moments
from starcell.spectral import Level1Moments
from starcell.utils import setup_generator, complex_normal


def make_setup(**kwargs):
    params = dict(M=2, K=2, N_ap=2, N_u=2, L_h=4, L_v=2, wavelength=1.,
                  d_h=0.5, d_v=0.5, d_user=0.5, sigma2=1e-13)
    params.update(kwargs)
    cfg = SystemConfig(**params)
    scn = from_gains(cfg, [[1e-11, 4e-12], [3e-12, 8e-12]][:cfg.M],
                     [4e-6, 2e-6][:cfg.M], [4e-6, 3e-6], [REFLECT, TRANSMIT])
    corr = build_correlation(cfg, scn, setup_generator(cfg.seed, 0))
    return cfg, scn, corr, build_statistics(scn, corr, cfg)


def random_estimates(cfg, stats, n_trials=20):
    """ Estimates from unit-variance projected pilots scaled to the pilot
    covariance level.
    """
    size = cfg.N_ap * cfg.N_u
    white = complex_normal(np.random.default_rng(1), (cfg.M, cfg.K, size),
                           n_samples=n_trials)
    y = np.sqrt(np.abs(stats.Psi[..., 0, 0]))[None, :, :, None] * white
    return estimate_channels(stats, y, cfg.kappa_ap_vec)


class TestCombining(unittest.TestCase):
    """ Test the combining schemes and the second layer weights.
    """
    def setUp(self):
        """ Setup test.
        """
        self.cfg, self.scn, self.corr, self.stats = make_setup()
        self.est = random_estimates(self.cfg, self.stats)

    def tearDown(self):
        """ Run after each test.
        """
        pass

    def test_mr(self):
        """ Test the maximum ratio combiners.
        """
        V = mr_combiner(self.est)
        self.assertTrue(V is self.est.G_hat)
        V = mr_combiner(self.est, level=2)
        self.assertEqual(V.shape, (20, 2, 4, 2))
        self.assertTrue(np.array_equal(V[:, 1, 2:], self.est.G_hat[:, 1, 1]))
        self.assertRaises(ValueError, mr_combiner, self.est, level=3)

    def test_combiner_set(self):
        """ Test the level, scheme and decoder compatibility.
        """
        V = mr_combiner(self.est)
        A = mf_weights(2, 2)
        item = combiner_set(1, "mr", V, "mf", A)
        self.assertEqual(item.decoder, "mf")
        self.assertRaises(ValueError, combiner_set, 1, "global-mmse", V,
                          "mf", A)
        self.assertRaises(ValueError, combiner_set, 1, "mr", V)
        self.assertRaises(ValueError, combiner_set, 2, "mr", V, "lsfd", A)
        self.assertRaises(ValueError, combiner_set, 3, "mr", V)
        self.assertEqual(combiner_set(2, "global-mmse", V).level, 2)

    def test_local_mmse_scalar(self):
        """ Test the single-antenna local MMSE combiner.
        """
        cfg, scn, corr, stats = make_setup(M=1, N_ap=1, N_u=1, kappa_ap=1.,
                                           kappa_u=1.)
        est = random_estimates(cfg, stats)
        V = local_mmse_combiner(est, stats, scn, cfg)
        g_hat = est.G_hat[..., 0, 0]
        error = (stats.Delta - stats.Delta_hat)[..., 0, 0].real
        p_u = cfg.p_u
        inner = (p_u * np.sum(np.abs(g_hat) ** 2 + error[None], axis=-1) +
                 cfg.sigma2)
        expected = np.sqrt(p_u) * g_hat / inner[..., None]
        self.assertTrue(np.allclose(V[..., 0, 0], expected, rtol=1e-9,
                                    atol=0))
        single = local_mmse_combiner(est, stats, scn, cfg, m=0, k=1)
        self.assertTrue(np.allclose(single, V[:, 0, 1]))

    def test_local_mse(self):
        """ Test that local MMSE combining minimizes the conditional MSE of
        every stream.
        """
        mmse = local_mse(self.est, self.stats, self.scn, self.cfg,
                         local_mmse_combiner(self.est, self.stats, self.scn,
                                             self.cfg))
        mr = local_mse(self.est, self.stats, self.scn, self.cfg,
                       mr_combiner(self.est))
        self.assertEqual(mmse.shape, (20, 2, 2, 2))
        self.assertTrue(np.all(mmse >= -1e-12))
        self.assertTrue(np.all(mr <= 1 + 1e-12))
        self.assertTrue(np.all(mmse <= mr + 1e-10))
        self.assertTrue(mmse.mean() < mr.mean())
        V = complex_normal(np.random.default_rng(2), (2, 2, 2, 2),
                           n_samples=20)
        other = local_mse(self.est, self.stats, self.scn, self.cfg, V)
        self.assertTrue(np.all(mmse <= other + 1e-10))
        null = local_mse(self.est, self.stats, self.scn, self.cfg,
                         np.zeros_like(V))
        self.assertTrue(np.all(null == 1))

    def test_local_equals_global(self):
        """ Test that both MMSE combiners agree with a single AP.
        """
        cfg, scn, corr, stats = make_setup(M=1)
        est = random_estimates(cfg, stats)
        local = local_mmse_combiner(est, stats, scn, cfg)
        central = global_mmse_combiner(est, scn, cfg)
        self.assertEqual(central.shape, (20, 2, 2, 2))
        self.assertTrue(np.allclose(local[:, 0], central, rtol=1e-8,
                                    atol=1e-8 * np.abs(central).max()))

    def test_global_mmse(self):
        """ Test the global MMSE normal equations.
        """
        V = global_mmse_combiner(self.est, self.scn, self.cfg)
        omega = collective_covariance(self.est, self.scn, self.cfg)
        self.assertTrue(np.allclose(omega, np.conj(np.swapaxes(omega, 1, 2))))
        gain = np.sqrt(self.cfg.p_u * self.cfg.kappa_u_vec[0])
        rhs = (gain * self.est.G_hat_collective[:, 0] *
               np.sqrt(self.scn.power_ctrl[0])[None, None])
        self.assertTrue(np.allclose(omega @ V[:, 0], rhs, rtol=0,
                                    atol=1e-9 * np.abs(rhs).max()))
        est = self.est._replace(G_hat_collective=None)
        self.assertRaises(ValueError, global_mmse_combiner, est, self.scn,
                          self.cfg)

    def test_second_layer(self):
        """ Test the LSFD and matched filter weights.
        """
        A = mf_weights(3, 2)
        self.assertEqual(A.shape, (6, 2))
        self.assertTrue(np.allclose(A[2: 4], np.eye(2) / 3))
        moments = closed_moments(self.stats, self.corr, self.scn, self.cfg)
        A = lsfd_weights(moments, self.scn, self.cfg)
        self.assertEqual(A.shape, (2, 4, 2))
        for k in range(2):
            norm = (self.cfg.p_u * np.sum(moments.U[k], axis=0) +
                    moments.Gamma[k] + self.cfg.sigma2 * moments.Lambda[k])
            rhs = moments.H_bar[k] * np.sqrt(self.scn.power_ctrl[k])
            self.assertTrue(np.allclose(norm @ A[k], rhs, rtol=0,
                                        atol=1e-9 * np.abs(rhs).max()))
        self.assertTrue(np.allclose(
            lsfd_weights(moments, self.scn, self.cfg, k=1), A[1]))
        zero = Level1Moments(
            H_bar=np.zeros((2, 4, 2)), U=np.zeros((2, 2, 4, 4)),
            Gamma=np.zeros((2, 4, 4)), Lambda=np.zeros((2, 4, 4)),
            n_trials=0, stderr=None)
        with self.assertRaises(np.linalg.LinAlgError) as context:
            lsfd_weights(zero, self.scn, self.cfg)
        self.assertIn("user 0", str(context.exception))


if __name__ == "__main__":
    from starcell.utils import setup_logging

    setup_logging(level="debug")
    unittest.main()
