# -*- coding: utf-8 -*-
##########################################################################
# NSAp - Copyright (C) CEA, 2021
# Distributed under the terms of the CeCILL-B license, as published by
# the CEA-CNRS-INRIA. Refer to the LICENSE file or to
# http://www.cecill.info/licences/Licence_CeCILL-B_V1-en.html
# for details.
##########################################################################

"""
Receive combiners (MR, local MMSE, global MMSE) and second layer CPU
weights (LSFD, MF).
"""

# Imports
from collections import namedtuple
import numpy as np
from .utils import hermitian_solve


# Global parameters
SCHEMES = {
    1: ("mr", "local-mmse"),
    2: ("mr", "global-mmse")
}
DECODERS = ("lsfd", "mf")
CombinerSet = namedtuple("CombinerSet", [
    "level", "scheme", "V", "decoder", "A"])
CombinerSet.__doc__ = """ Combiners of one processing level.

level: 1 or 2; scheme: 'mr', 'local-mmse' or 'global-mmse'; V:
(T, M, K, N_ap, N_u) at level 1, (T, K, M N_ap, N_u) at level 2;
decoder: 'lsfd', 'mf' or None; A: (K, M N_u, N_u) second layer weights at
level 1, None at level 2.
"""


def combiner_set(level, scheme, V, decoder=None, A=None):
    """ Build a CombinerSet after checking the level/scheme/decoder
    compatibility.
    """
    if level not in SCHEMES:
        raise ValueError("Unknown processing level {0}.".format(level))
    if scheme not in SCHEMES[level]:
        raise ValueError("Scheme '{0}' is not available at level "
                         "{1}.".format(scheme, level))
    if level == 1:
        if decoder not in DECODERS or A is None:
            raise ValueError("Level 1 needs second layer weights "
                             "('lsfd' or 'mf').")
    elif decoder is not None or A is not None:
        raise ValueError("Level 2 has no second layer weights.")
    return CombinerSet(level=level, scheme=scheme, V=V, decoder=decoder, A=A)


def mr_combiner(est, level=1):
    """ Maximum ratio combining.

    Parameters
    ----------
    est: ChannelEstimate
        the channel estimates.
    level: int, default 1
        1: V_mk = G_hat_mk; 2: V_k stacks the unscaled G_hat_mk over the
        APs.

    Returns
    -------
    V: array (T, M, K, N_ap, N_u) or (T, K, M N_ap, N_u)
        the combiners.
    """
    G_hat = est.G_hat
    if level == 1:
        return G_hat
    if level != 2:
        raise ValueError("Unknown processing level {0}.".format(level))
    n_trials, n_aps, n_users, n_ap, n_u = G_hat.shape
    return np.swapaxes(G_hat, 1, 2).reshape(
        n_trials, n_users, n_aps * n_ap, n_u)


def local_normal_terms(est, stats, scn, cfg):
    """ Terms of the local MMSE normal equations.

    Returns
    -------
    inner: array (T, M, N_ap, N_ap)
        the received signal covariance of each AP given its estimates.
    rhs: array (T, M, K, N_ap, N_u)
        the cross covariances sqrt(kappa_m p_u kappa_k) G_hat_mk P_k^1/2.
    """
    G_hat = est.G_hat
    n_ap = G_hat.shape[-2]
    xi = scn.power_ctrl
    kappa_ap, kappa_u = cfg.kappa_ap_vec, cfg.kappa_u_vec
    load = np.einsum("tmkpu,ku,tmkqu->tmpq", G_hat, xi, np.conj(G_hat))
    load = load + np.sum(stats.C_tilde, axis=1)[None]
    inner = (cfg.p_u * kappa_ap[None, :, None, None] * load +
             stats.C_bar_data[None] + cfg.sigma2 * np.eye(n_ap))
    gain = np.sqrt(kappa_ap[:, None] * cfg.p_u * kappa_u[None, :])
    rhs = (gain[None, :, :, None, None] * G_hat *
           np.sqrt(xi)[None, None, :, None, :])
    return inner, rhs


def local_mmse_combiner(est, stats, scn, cfg, m=None, k=None):
    """ Local MMSE combining at each AP.

    V_mk = [sum_k' kappa_m p_u (G_hat_mk' P_k' G_hat_mk'^H + C_tilde_mk')
    + C_bar_m + sigma2 I]^-1 sqrt(kappa_m p_u kappa_k) G_hat_mk P_k^1/2.

    Parameters
    ----------
    est: ChannelEstimate
        the channel estimates.
    stats: EstimationStatistics
        the estimation statistics.
    scn: Scenario
        the setup.
    cfg: SystemConfig
        the system configuration.
    m, k: int, default None
        return the combiner of this AP and user only.

    Returns
    -------
    V: array (T, M, K, N_ap, N_u), or (T, N_ap, N_u) for one pair
        the combiners.
    """
    inner, rhs = local_normal_terms(est, stats, scn, cfg)
    V = hermitian_solve(inner[:, :, None], rhs, jitter=True,
                        name="local MMSE matrix")
    if m is not None and k is not None:
        return V[:, m, k]
    return V


def local_mse(est, stats, scn, cfg, V):
    """ Conditional MSE of every local stream after its best scalar gain,
    1 - |v^H b|^2 / (v^H Omega v), given the estimates.

    Parameters
    ----------
    est: ChannelEstimate
        the channel estimates.
    stats: EstimationStatistics
        the estimation statistics.
    scn: Scenario
        the setup.
    cfg: SystemConfig
        the system configuration.
    V: array (T, M, K, N_ap, N_u)
        the Level 1 combiners.

    Returns
    -------
    mse: array (T, M, K, N_u)
        the values in [0, 1]; streams with a null combiner get 1.
    """
    inner, rhs = local_normal_terms(est, stats, scn, cfg)
    cross = np.einsum("tmkpu,tmkpu->tmku", np.conj(V), rhs)
    power = np.einsum("tmkpu,tmpq,tmkqu->tmku", np.conj(V), inner, V).real
    with np.errstate(divide="ignore", invalid="ignore"):
        captured = np.where(power > 0, np.abs(cross) ** 2 / power, 0.)
    return 1 - captured


def collective_covariance(est, scn, cfg):
    """ p_u sum_k G_hat_k P_k G_hat_k^H + p_u sum_k C_tilde_k + C_r +
    sigma2 I, shape (T, M N_ap, M N_ap).
    """
    G_hat_k = est.G_hat_collective
    if G_hat_k is None:
        raise ValueError("Collective estimates are required.")
    size = G_hat_k.shape[-2]
    load = np.einsum("tkpu,ku,tkqu->tpq", G_hat_k, scn.power_ctrl,
                     np.conj(G_hat_k))
    return (cfg.p_u * (load + np.sum(est.C_tilde_collective, axis=0)) +
            est.C_r + cfg.sigma2 * np.eye(size))


def global_mmse_combiner(est, scn, cfg):
    """ Global MMSE combining at the CPU.

    V_k = [p_u sum_k' (G_hat_k' P_k' G_hat_k'^H + C_tilde_k') + C_r +
    sigma2 I]^-1 sqrt(p_u kappa_k) G_hat_k P_k^1/2, with one M N_ap
    dimensional Hermitian solve per user.

    Returns
    -------
    V: array (T, K, M N_ap, N_u)
        the combiners.
    """
    inner = collective_covariance(est, scn, cfg)
    gain = np.sqrt(cfg.p_u * cfg.kappa_u_vec)
    rhs = (gain[None, :, None, None] * est.G_hat_collective *
           np.sqrt(scn.power_ctrl)[None, :, None, :])
    return hermitian_solve(inner[:, None], rhs, jitter=True,
                           name="global MMSE matrix")


def lsfd_weights(moments, scn, cfg, k=None):
    """ Large-scale fading decoding weights.

    A_k = (p_u sum_k' U_kk' + Gamma_k + sigma2 Lambda_k)^-1 H_bar_k
    P_k^1/2.

    Parameters
    ----------
    moments: Level1Moments or ClosedFormMoments
        the expectations H_bar (K, M N_u, N_u), U (K, K, M N_u, M N_u),
        Gamma and Lambda (K, M N_u, M N_u).
    scn: Scenario
        the setup.
    cfg: SystemConfig
        the system configuration.
    k: int, default None
        return the weights of this user only.

    Returns
    -------
    A: array (K, M N_u, N_u) or (M N_u, N_u)
        the weights.
    """
    users = range(moments.H_bar.shape[0]) if k is None else [k]
    weights = []
    for user in users:
        norm = (cfg.p_u * np.sum(moments.U[user], axis=0) +
                moments.Gamma[user] + cfg.sigma2 * moments.Lambda[user])
        rhs = moments.H_bar[user] * np.sqrt(scn.power_ctrl[user])[None, :]
        try:
            weights.append(hermitian_solve(norm, rhs))
        except np.linalg.LinAlgError as exc:
            raise np.linalg.LinAlgError(
                "LSFD normalization of user {0} is singular (zero "
                "statistics?): {1}".format(user, exc))
    if k is not None:
        return weights[0]
    return np.stack(weights)


def mf_weights(M, N_u):
    """ Matched filter weights: M blocks equal to I / M, shape (M N_u, N_u).
    """
    return np.tile(np.eye(N_u) / M, (M, 1))
