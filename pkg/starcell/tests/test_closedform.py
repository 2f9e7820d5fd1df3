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
from starcell.scenario import REFLECT, TRANSMIT, from_gains, pilot_matrices
from starcell.correlation import build_correlation
from starcell.estimation import build_statistics
from starcell.closedform import (
    GROUPS, VARIANTS, selectors, diagonal_blocks, u_block_terms,
    closed_u_diag, closed_u_cross, closed_u, closed_h_bar, closed_lambda_bar,
    closed_gamma_bar, closed_moments, se_level1_closed, column_maps,
    pilot_kernels, kernel_traces, distortion_traces, kernel_u_block_terms)
from starcell.spectral import se_level1
from starcell.experiment.runner import (
    SetupContext, run_trials, moment_z_scores)
from starcell.utils import setup_generator
from starcell.utils.linalg import vec


def make_setup(gains=None, **kwargs):
    params = dict(M=2, K=2, N_ap=2, N_u=2, L_h=4, L_v=2, wavelength=1.,
                  d_h=0.5, d_v=0.5, d_user=0.5, sigma2=1e-13)
    params.update(kwargs)
    cfg = SystemConfig(**params)
    if gains is None:
        gains = ([[1e-11, 4e-12], [3e-12, 8e-12]], [4e-6, 2e-6],
                 [4e-6, 3e-6])
    beta_mk, beta_m, beta_k = gains
    scn = from_gains(cfg, np.asarray(beta_mk)[:cfg.M, :cfg.K],
                     np.asarray(beta_m)[:cfg.M], np.asarray(beta_k)[:cfg.K],
                     [REFLECT, TRANSMIT][:cfg.K])
    corr = build_correlation(cfg, scn, setup_generator(cfg.seed, 0))
    return cfg, scn, corr, build_statistics(scn, corr, cfg)


class TestClosedForm(unittest.TestCase):
    """ Test the analytic Level 1 moments of MR combining.
    """
    def setUp(self):
        """ Setup test.
        """
        self.cfg, self.scn, self.corr, self.stats = make_setup()

    def tearDown(self):
        """ Run after each test.
        """
        pass

    def test_helpers(self):
        """ Test the column selectors and the diagonal blocks.
        """
        sel = selectors(3, 2)
        self.assertEqual(sel.shape, (2, 6, 3))
        G = np.arange(6).reshape(3, 2)
        for n in range(2):
            self.assertTrue(np.array_equal(sel[n].T @ vec(G), G[:, n]))
        arr = np.arange(36).reshape(6, 6)
        blocks = diagonal_blocks(arr, 3)
        self.assertTrue(np.array_equal(blocks[1], arr[3:, 3:]))

    def test_scalar(self):
        """ Test the single-antenna ideal hardware SE.
        """
        cfg = SystemConfig(M=1, K=1, N_ap=1, N_u=1, kappa_ap=1., kappa_u=1.,
                           ris_mode="none", sigma2=1e-13)
        scn = from_gains(cfg, [[2e-12]], [0.], [0.], [REFLECT])
        corr = build_correlation(cfg, scn)
        beta, power = 2e-12, cfg.p_u
        gain = cfg.n_pilots * cfg.p_p
        gamma = gain * beta ** 2 / (gain * beta + cfg.sigma2)
        expected = cfg.prelog * np.log2(
            1 + power * gamma / (power * beta + cfg.sigma2))
        for decoder in ("lsfd", "mf"):
            report = se_level1_closed(scn, corr, cfg, decoder=decoder)
            self.assertAlmostEqual(report.se[0] / expected, 1.)
            self.assertTrue(report.metadata["analytic"])
        stats = build_statistics(scn, corr, cfg)
        moments = closed_moments(stats, corr, scn, cfg)
        self.assertAlmostEqual(moments.H_bar[0, 0, 0].real / gamma, 1.)
        self.assertAlmostEqual(
            moments.U[0, 0, 0, 0].real / (gamma ** 2 + gamma * beta), 1.)

    def test_structure(self):
        """ Test the U matrices and their groups.
        """
        moments = closed_moments(self.stats, self.corr, self.scn, self.cfg)
        self.assertEqual(moments.U.shape, (2, 2, 4, 4))
        self.assertEqual(sorted(moments.terms), sorted(GROUPS))
        total = sum(moments.terms[name] for name in GROUPS)
        scale = np.abs(moments.U).max()
        self.assertTrue(np.allclose(total, moments.U, rtol=0,
                                    atol=1e-10 * scale))
        self.assertTrue(np.allclose(
            moments.U, np.conj(np.swapaxes(moments.U, -1, -2)), rtol=0,
            atol=1e-12 * scale))
        for k in range(2):
            self.assertTrue(np.linalg.eigvalsh(moments.U[k, k]).min() > 0)
            block = closed_u_diag(self.stats, self.corr, self.scn, self.cfg,
                                  1, k, 1 - k)
            self.assertTrue(np.allclose(moments.U[k, 1 - k, 2:, 2:], block,
                                        rtol=0, atol=1e-10 * scale))
            block = closed_u_cross(self.stats, self.corr, self.scn, self.cfg,
                                   0, 1, k, k)
            self.assertTrue(np.allclose(moments.U[k, k, :2, 2:], block,
                                        rtol=0, atol=1e-10 * scale))
            for name in ("rx", "noise"):
                self.assertTrue(np.all(moments.terms[name][k, k, :2, 2:] == 0))
        for name in ("coherent", "pilot_cross", "tx_own", "rx", "noise"):
            self.assertTrue(np.abs(moments.terms[name]).max() > 0)
        self.assertRaises(ValueError, closed_u_cross, self.stats, self.corr,
                          self.scn, self.cfg, 1, 1, 0, 0)
        self.assertRaises(ValueError, u_block_terms, self.stats, self.corr,
                          self.scn, self.cfg, 0, 2, 0, 0)

    def test_ideal_hardware(self):
        """ Test that ideal hardware removes the distortion groups.
        """
        cfg, scn, corr, stats = make_setup(kappa_ap=1., kappa_u=1.)
        moments = closed_moments(stats, corr, scn, cfg)
        for name in ("tx_own", "tx_cross", "rx"):
            self.assertTrue(np.all(moments.terms[name] == 0))
        self.assertTrue(np.all(moments.Gamma == 0))

    def test_orthogonal_pilots(self):
        """ Test that independent users leave the cross-AP blocks empty.
        """
        cfg, scn, corr, stats = make_setup(tau_p=4, kappa_ap=1., kappa_u=1.,
                                           ris_mode="none")
        self.assertFalse(scn.pilot_group[0] == scn.pilot_group[1])
        moments = closed_moments(stats, corr, scn, cfg)
        scale = np.abs(moments.U).max()
        self.assertTrue(np.allclose(moments.U[0, 1, :2, 2:], 0, rtol=0,
                                    atol=1e-12 * scale))
        self.assertTrue(np.abs(moments.U[0, 1, :2, :2]).max() > 0)
        self.assertTrue(np.all(moments.terms["coherent"][0, 1] == 0))

    def test_moments(self):
        """ Test the desired signal, noise and distortion moments.
        """
        H_bar = closed_h_bar(self.stats, self.cfg)
        self.assertEqual(H_bar.shape, (2, 4, 2))
        kappa = self.cfg.kappa_ap_vec[1] * self.cfg.kappa_u_vec[0]
        hat = self.stats.Delta_hat[1, 0]
        self.assertAlmostEqual(H_bar[0, 3, 0] / (np.sqrt(kappa) * (
            hat[0, 2] + hat[1, 3])), 1.)
        Lambda = closed_lambda_bar(H_bar, self.cfg)
        self.assertTrue(np.allclose(Lambda[0, 2:, 2:], H_bar[0, 2:] / np.sqrt(
            kappa), rtol=1e-10, atol=0))
        self.assertTrue(np.all(Lambda[0, :2, 2:] == 0))
        from_stats = closed_lambda_bar(
            H_bar, self.cfg.replace(kappa_u=0.), stats=self.stats)
        self.assertTrue(np.allclose(from_stats, Lambda, rtol=0,
                                    atol=1e-10 * np.abs(Lambda).max()))
        self.assertRaises(ValueError, closed_lambda_bar, H_bar,
                          self.cfg.replace(kappa_u=0.))
        Gamma = closed_gamma_bar(self.stats, self.cfg)
        self.assertTrue(Gamma.shape == (2, 4, 4))
        self.assertTrue(np.linalg.eigvalsh(Gamma[0]).min() > -1e-9 * np.abs(
            Gamma[0]).max())
        self.assertTrue(np.abs(Gamma[0, 0, 0] - np.trace(
            self.stats.C_bar_data[0] @ self.stats.Delta_hat[0, 0][:2, :2]))
            <= 1e-10 * np.abs(Gamma).max())

    def test_kernel_helpers(self):
        """ Test the column maps, pilot kernels and trace blocks.
        """
        maps = column_maps(self.corr)
        self.assertEqual(maps.shape, (2, 2, 4))
        rng = np.random.default_rng(3)
        W = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        G = self.corr.R_ap_sqrt @ W @ self.corr.R_user_sqrt
        for n in range(2):
            self.assertTrue(np.allclose(maps[n] @ vec(W), G[:, n]))
        Z = self.stats.Z[1, 0]
        kernels = pilot_kernels(self.stats, self.corr, self.scn, 1, 0)
        self.assertEqual(kernels.shape, (2, 2, 4, 2))
        root = np.kron(self.corr.R_user_sqrt @ np.diag(np.sqrt(
            self.scn.power_ctrl[1])), self.corr.R_ap_sqrt)
        self.assertTrue(np.allclose(kernels[1, 1],
                                    root @ np.conj(Z[2:, :].T)))
        X = kernel_traces(kernels, maps)
        self.assertEqual(X.shape, (2, 2, 2, 2, 2))
        self.assertAlmostEqual(X[1, 0, 1, 1, 0], np.trace(
            kernels[1, 0][2:, :] @ maps[1][:, :2]))
        ups = distortion_traces(self.stats, maps, 1, 0)
        self.assertEqual(ups.shape, (2, 2, 4))
        self.assertAlmostEqual(ups[1, 0, 2], np.trace(
            np.conj(maps[0].T) @ np.conj(Z[2:, 2:].T) @ maps[0]))
        self.assertAlmostEqual(ups[0, 1, 1], np.trace(
            np.conj(maps[1].T) @ np.conj(Z[:2, :2].T) @ maps[1]))

    def test_kernel_gaussian(self):
        """ Test that both evaluations agree group by group without a
        surface and with ideal AP hardware.
        """
        cfg, scn, corr, stats = make_setup(kappa_ap=1., ris_mode="none")
        exact = closed_moments(stats, corr, scn, cfg)
        kernel = closed_moments(stats, corr, scn, cfg, variant="kernel")
        scale = np.abs(exact.U).max()
        for name in GROUPS:
            self.assertTrue(np.allclose(kernel.terms[name], exact.terms[name],
                                        rtol=0, atol=1e-9 * scale), name)
        for name in ("coherent", "pilot_cross", "tx_own", "tx_cross"):
            self.assertTrue(np.abs(exact.terms[name]).max() > 0, name)
        self.assertTrue(np.allclose(kernel.U, exact.U, rtol=0,
                                    atol=1e-9 * scale))
        self.assertTrue(np.array_equal(kernel.H_bar, exact.H_bar))
        for decoder in ("lsfd", "mf"):
            self.assertTrue(np.allclose(
                se_level1_closed(scn, corr, cfg, decoder, stats=stats,
                                 variant="kernel").se,
                se_level1_closed(scn, corr, cfg, decoder, stats=stats).se,
                rtol=1e-8, atol=0))

    def test_kernel_surface(self):
        """ Test the kernel evaluation with a surface and hardware
        impairments.
        """
        self.assertEqual(VARIANTS, ("exact", "kernel"))
        exact = closed_moments(self.stats, self.corr, self.scn, self.cfg)
        kernel = closed_moments(self.stats, self.corr, self.scn, self.cfg,
                                variant="kernel")
        scale = np.abs(exact.U).max()
        self.assertTrue(np.allclose(kernel.terms["noise"],
                                    exact.terms["noise"], rtol=0,
                                    atol=1e-9 * scale))
        self.assertFalse(np.allclose(kernel.U, exact.U, rtol=1e-6, atol=0))
        self.assertTrue(np.allclose(
            kernel.U, np.conj(np.swapaxes(kernel.U, -1, -2)), rtol=0,
            atol=1e-12 * scale))
        for k in range(2):
            self.assertTrue(np.linalg.eigvalsh(kernel.U[k, k]).min() > 0)
        for name in GROUPS:
            self.assertTrue(np.abs(kernel.terms[name]).max() > 0, name)
        groups = kernel_u_block_terms(self.stats, self.corr, self.scn,
                                      self.cfg, 0, 1, 0, 1)
        for name in ("rx", "noise"):
            self.assertTrue(np.all(groups[name] == 0))
        self.assertTrue(np.abs(groups["tx_cross"]).max() > 0)
        report = se_level1_closed(self.scn, self.corr, self.cfg,
                                  stats=self.stats, variant="kernel")
        self.assertEqual(report.metadata["variant"], "kernel")
        self.assertTrue(np.all(report.se > 0))
        self.assertRaises(ValueError, closed_moments, self.stats, self.corr,
                          self.scn, self.cfg, variant="unknown")
        self.assertRaises(ValueError, kernel_u_block_terms, self.stats,
                          self.corr, self.scn, self.cfg, 0, 0, 2, 0)

    def test_workers(self):
        """ Test that the U blocks do not depend on the worker count.
        """
        U_1, _ = closed_u(self.stats, self.corr, self.scn, self.cfg)
        U_2, _ = closed_u(self.stats, self.corr, self.scn, self.cfg,
                          n_jobs=2)
        self.assertTrue(np.allclose(U_1, U_2, rtol=0,
                                    atol=1e-12 * np.abs(U_1).max()))

    def test_monte_carlo(self):
        """ Test the analytic moments against the trials with a correlated
        energy splitting surface.
        """
        gains = ([[2e-12, 5e-13], [1e-12, 1e-12]], [1e-5, 8e-6],
                 [1e-5, 7e-6])
        cfg, scn, corr, stats = make_setup(
            gains=gains, d_h=0.25, d_v=0.25, amp_t=0.6, n_trials=100000,
            trial_block=5000)
        ctx = SetupContext(setup=0, scn=scn, corr=corr, stats=stats,
                           phi=pilot_matrices(scn, cfg))
        acc = run_trials(ctx, cfg, ["mr"], [], "trial", cfg.n_trials)
        acc = acc[(1, "mr")]
        mc = acc.moments()
        closed = closed_moments(stats, corr, scn, cfg)
        scores = moment_z_scores(mc, closed)
        for name, value in scores.items():
            self.assertTrue(value <= 4, "{0}: z = {1:.2f}".format(name, value))
        for decoder in ("lsfd", "mf"):
            se_mc = se_level1(mc, decoder, scn, cfg).se
            se_closed = se_level1(closed, decoder, scn, cfg).se
            self.assertTrue(np.allclose(se_mc, se_closed, rtol=0.02, atol=0))


if __name__ == "__main__":
    from starcell.utils import setup_logging

    setup_logging(level="debug")
    unittest.main()
