# -*- coding: utf-8 -*-
##########################################################################
# NSAp - Copyright (C) CEA, 2021
# Distributed under the terms of the CeCILL-B license, as published by
# the CEA-CNRS-INRIA. Refer to the LICENSE file or to
# http://www.cecill.info/licences/Licence_CeCILL-B_V1-en.html
# for details.
##########################################################################

"""
Impaired pilot phase and linear MMSE channel estimation, per AP and in
the collective form used by centralized processing.
"""

# Imports
from collections import namedtuple
import numpy as np
from .channel import (
    scale_tx_distortion, rx_distortion_variance, statistical_rx_covariance,
    collective)
from .correlation import all_covariances
from .scenario import pilot_members, pilot_matrices
from .utils import (
    get_logger, debug_msg, complex_normals, hermitian_part, hermitian_solve,
    vec, unvec, block_diag_stack)


# Global parameters
logger = get_logger()
EstimationStatistics = namedtuple("EstimationStatistics", [
    "Q", "Psi", "Z", "Delta_hat", "Delta", "C_tilde", "C_bar_pilot",
    "C_bar_data", "terms"])
EstimationStatistics.__doc__ = """ Realization-free estimation statistics.

Q, Psi, Z, Delta_hat, Delta: (M, K, D, D) with D = N_ap N_u;
C_tilde: (M, K, N_ap, N_ap) error loading; C_bar_pilot, C_bar_data:
(M, N_ap, N_ap) statistical receiver distortion in the pilot and data
phases; terms: dict of the V1..V4 parts of Psi.
"""
ChannelEstimate = namedtuple("ChannelEstimate", [
    "G_hat", "C_tilde", "G_hat_collective", "C_tilde_collective", "C_r"])
ChannelEstimate.__doc__ = """ Channel estimates of a batch of trials.

G_hat: (T, M, K, N_ap, N_u); C_tilde: (M, K, N_ap, N_ap);
G_hat_collective: (T, K, M N_ap, N_u); C_tilde_collective:
(K, M N_ap, M N_ap); C_r: (M N_ap, M N_ap). Collective fields are None
when the AP hardware quality is not given.
"""


def pilot_observation(realization, scn, cfg, rng, phi=None):
    """ Received pilot signals of every AP.

    Parameters
    ----------
    realization: ChannelRealization
        the true channels.
    scn: Scenario
        the setup.
    cfg: SystemConfig
        the system configuration.
    rng: numpy.random.Generator or list of Generator
        one generator per trial.
    phi: array (K, tau_p, N_u), default None
        the pilot matrix of every user.

    Returns
    -------
    Y: array (T, M, N_ap, tau_p)
        sqrt(kappa_m) sum_k G_mk (sqrt(tau_p p_p kappa_k) P_k^1/2 Phi_k^H +
        W_k^H) + W_m + N_m.
    """
    G = realization.G
    n_trials, n_aps, n_users, n_ap, n_u = G.shape
    tau_p = cfg.n_pilots
    if phi is None:
        phi = pilot_matrices(scn, cfg)
    kappa_ap, kappa_u = cfg.kappa_ap_vec, cfg.kappa_u_vec
    xi = scn.power_ctrl
    white_tx, white_rx, white_n = complex_normals(rng, [
        (n_users, tau_p, n_u), (n_aps, n_ap, tau_p), (n_aps, n_ap, tau_p)])
    if white_tx.shape[0] != n_trials:
        raise ValueError("One generator per trial is expected.")
    W_tx = scale_tx_distortion(white_tx, xi[:, None, :],
                               kappa_u[:, None, None], cfg.p_p)
    clean = (np.sqrt(tau_p * cfg.p_p * kappa_u)[:, None, None] *
             np.sqrt(xi)[:, :, None] * np.conj(np.swapaxes(phi, -1, -2)))
    sent = clean[None] + np.conj(np.swapaxes(W_tx, -1, -2))
    received = np.sqrt(kappa_ap)[None, :, None, None] * np.einsum(
        "tmkpu,tkus->tmps", G, sent)
    var = rx_distortion_variance(G, xi, kappa_ap[:, None], cfg.p_p)
    W_rx = white_rx * np.sqrt(var)[..., None]
    return received + W_rx + np.sqrt(cfg.sigma2) * white_n


def project_pilot(Y_mp, Phi_k):
    """ Project a received pilot signal on a pilot matrix.

    Parameters
    ----------
    Y_mp: array (..., N_ap, tau_p)
        the received pilot signal.
    Phi_k: array (tau_p, N_u)
        the pilot matrix.

    Returns
    -------
    y: array (..., N_ap N_u)
        vec(Y_mp Phi_k).
    """
    return vec(Y_mp @ Phi_k)


def project_all(Y, phi):
    """ Projections of every AP signal on every user pilot, (T, M, K, D).
    """
    return vec(np.einsum("tmps,ksu->tmkpu", Y, phi))


def error_loading(Delta, Delta_hat, power_ctrl, N_ap):
    """ C_tilde_mk = sum_n xi_kn (Delta_mk - Delta_hat_mk)^{n,n}.

    Parameters
    ----------
    Delta, Delta_hat: array (M, K, D, D)
        the channel and estimate covariances.
    power_ctrl: array (K, N_u)
        the power control coefficients.
    N_ap: int
        the number of AP antennas.

    Returns
    -------
    C_tilde: array (M, K, N_ap, N_ap)
        the error loading matrices.
    """
    n_aps, n_users, size = Delta.shape[:3]
    n_u = size // N_ap
    diff = (Delta - Delta_hat).reshape(n_aps, n_users, n_u, N_ap, n_u, N_ap)
    return hermitian_part(np.einsum("mknpnq,kn->mkpq", diff, power_ctrl))


def build_statistics(scn, corr, cfg):
    """ Linear MMSE estimation statistics of every (AP, user) pair.

    Psi is assembled as V1 (pilot sharing users) + V2 (transmitter
    distortion) + V3 (statistical receiver distortion) + V4 (noise).

    Parameters
    ----------
    scn: Scenario
        the setup.
    corr: CorrelationSet
        the setup correlation matrices.
    cfg: SystemConfig
        the system configuration.

    Returns
    -------
    stats: EstimationStatistics
        Q, Psi, Z = Q Psi^-1 and Delta_hat = Q Z^H per pair.
    """
    n_aps, n_users = corr.delta_bar.shape
    n_ap, n_u = corr.R_ap.shape[0], corr.R_user.shape[0]
    size = n_ap * n_u
    tau_p, p_p = cfg.n_pilots, cfg.p_p
    kappa_ap, kappa_u = cfg.kappa_ap_vec, cfg.kappa_u_vec
    xi = scn.power_ctrl
    R_user, R_ap = corr.R_user, corr.R_ap
    half = [np.diag(np.sqrt(row)) for row in xi]
    tr_pr = xi @ np.diag(R_user).real
    C_bar_pilot = statistical_rx_covariance(scn, corr, kappa_ap, p_p)
    C_bar_data = statistical_rx_covariance(scn, corr, kappa_ap, cfg.p_u)
    eye_u = np.eye(n_u)

    shape = (n_aps, n_users, size, size)
    Q, Psi, Z, Delta_hat = [np.zeros(shape, dtype=complex)
                            for _ in range(4)]
    terms = dict((name, np.zeros(shape)) for name in ("V1", "V2", "V3",
                                                      "V4"))
    for m in range(n_aps):
        dist_load = np.sum((1 - kappa_u) * p_p * corr.delta_bar[m] * tr_pr)
        V2 = kappa_ap[m] * dist_load * np.kron(eye_u, R_ap)
        V3 = np.kron(eye_u, C_bar_pilot[m])
        V4 = cfg.sigma2 * np.eye(size)
        for k in range(n_users):
            V1 = np.zeros((size, size))
            for j in pilot_members(scn.pilot_group, k):
                V1 += (kappa_ap[m] * tau_p * p_p * kappa_u[j] *
                       corr.delta_bar[m, j] *
                       np.kron(half[j] @ R_user @ half[j], R_ap))
            gain = np.sqrt(tau_p * p_p * kappa_ap[m] * kappa_u[k])
            Q[m, k] = gain * corr.delta_bar[m, k] * np.kron(
                R_user @ half[k], R_ap)
            Psi[m, k] = hermitian_part(V1 + V2 + V3 + V4)
            try:
                Z_h = hermitian_solve(
                    Psi[m, k], np.conj(Q[m, k].T),
                    name="pilot covariance of AP {0} user {1}".format(m, k))
            except np.linalg.LinAlgError as exc:
                raise np.linalg.LinAlgError(
                    "{0} (sigma2={1:.3e}).".format(exc, cfg.sigma2))
            Z[m, k] = np.conj(Z_h.T)
            Delta_hat[m, k] = hermitian_part(Q[m, k] @ Z_h)
            for name, value in zip(("V1", "V2", "V3", "V4"),
                                   (V1, V2, V3, V4)):
                terms[name][m, k] = value
    Delta = all_covariances(corr)
    C_tilde = error_loading(Delta, Delta_hat, xi, n_ap)
    logger.debug(debug_msg("Delta_hat", Delta_hat))
    return EstimationStatistics(
        Q=Q, Psi=Psi, Z=Z, Delta_hat=Delta_hat, Delta=Delta, C_tilde=C_tilde,
        C_bar_pilot=C_bar_pilot, C_bar_data=C_bar_data, terms=terms)


def estimate_channels(stats, y, kappa_ap=None):
    """ MMSE channel estimates vec(G_hat_mk) = Z_mk y_mk.

    Parameters
    ----------
    stats: EstimationStatistics
        the estimation statistics.
    y: array (T, M, K, D)
        the projected pilot signals.
    kappa_ap: array (M, ), default None
        the AP hardware quality, needed for the collective forms.

    Returns
    -------
    est: ChannelEstimate
        the estimates and error loadings.
    """
    n_ap = stats.C_tilde.shape[-1]
    g_hat = np.einsum("mkij,tmkj->tmki", stats.Z, y)
    G_hat = unvec(g_hat, n_ap)
    G_hat_k, C_tilde_k, C_r = None, None, None
    if kappa_ap is not None:
        kappa_ap = np.asarray(kappa_ap, dtype=float)
        G_hat_k = collective(G_hat, kappa_ap)
        C_tilde_k = block_diag_stack(np.swapaxes(
            kappa_ap[:, None, None, None] * stats.C_tilde, 0, 1))
        C_r = block_diag_stack(stats.C_bar_data)
    return ChannelEstimate(
        G_hat=G_hat, C_tilde=stats.C_tilde, G_hat_collective=G_hat_k,
        C_tilde_collective=C_tilde_k, C_r=C_r)


def estimate(stats, Y, phi, kappa_ap=None):
    """ Project the received pilots and estimate every channel.
    """
    return estimate_channels(stats, project_all(Y, phi), kappa_ap)
