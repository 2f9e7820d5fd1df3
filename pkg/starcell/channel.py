# -*- coding: utf-8 -*-
##########################################################################
# NSAp - Copyright (C) CEA, 2021
# Distributed under the terms of the CeCILL-B license, as published by
# the CEA-CNRS-INRIA. Refer to the LICENSE file or to
# http://www.cecill.info/licences/Licence_CeCILL-B_V1-en.html
# for details.
##########################################################################

"""
Per coherence block sampling of the direct, cascaded, aggregate and
collective channels, and of the transceiver distortions.

Every sampled array carries a leading trial axis.
"""

# Imports
from collections import namedtuple
import numpy as np
from .utils import complex_normals


ChannelRealization = namedtuple("ChannelRealization", [
    "G_direct", "G_ris_ap", "G_user_ris", "G", "G_collective"])
ChannelRealization.__doc__ = """ True channels of a batch of trials.

G_direct: (T, M, K, N_ap, N_u); G_ris_ap: (T, M, N_ap, L);
G_user_ris: (T, K, L, N_u); G: (T, M, K, N_ap, N_u) aggregate;
G_collective: (T, K, M N_ap, N_u) with blocks sqrt(kappa_m) G_mk, or None.
"""


def _check_kappa(kappa):
    kappa = np.asarray(kappa, dtype=float)
    if np.any(kappa < 0) or np.any(kappa > 1):
        raise ValueError("Hardware quality factors must lie in [0, 1].")
    return kappa


def cascade(G_ris_ap, theta_users, G_user_ris):
    """ Cascaded channels G_m Theta_k G_k of every (AP, user) pair.

    Parameters
    ----------
    G_ris_ap: array (T, M, N_ap, L)
        the AP-surface channels.
    theta_users: array (K, L)
        the diagonal surface coefficients seen by each user.
    G_user_ris: array (T, K, L, N_u)
        the user-surface channels.

    Returns
    -------
    G_c: array (T, M, K, N_ap, N_u)
        the cascaded channels.
    """
    return np.einsum("tmpl,kl,tklu->tmkpu", G_ris_ap, theta_users,
                     G_user_ris)


def collective(G, kappa_ap):
    """ Stack sqrt(kappa_m) G_mk over the APs, shape (T, K, M N_ap, N_u).
    """
    n_trials, n_aps, n_users, n_ap, n_u = G.shape
    kappa_ap = _check_kappa(kappa_ap)
    scaled = np.sqrt(kappa_ap)[None, :, None, None, None] * G
    return np.swapaxes(scaled, 1, 2).reshape(
        n_trials, n_users, n_aps * n_ap, n_u)


def sample_channels(scn, corr, rng, kappa_ap=None):
    """ Draw the channels of a batch of trials.

    Parameters
    ----------
    scn: Scenario
        the setup.
    corr: CorrelationSet
        the setup correlation matrices.
    rng: numpy.random.Generator or list of Generator
        one generator per trial.
    kappa_ap: array (M, ), default None
        the AP hardware quality, needed for the collective channels.

    Returns
    -------
    realization: ChannelRealization
        the sampled channels.
    """
    n_aps, n_users = scn.beta_mk.shape
    n_ap = corr.R_ap.shape[0]
    n_u = corr.R_user.shape[0]
    n_elements = corr.R_ris.shape[0]
    if corr.delta_bar.shape != (n_aps, n_users):
        raise ValueError(
            "Setup with {0} APs and {1} users does not match correlation "
            "gains of shape {2}.".format(n_aps, n_users,
                                         corr.delta_bar.shape))
    white_d, white_m, white_k = complex_normals(rng, [
        (n_aps, n_users, n_ap, n_u), (n_aps, n_ap, n_elements),
        (n_users, n_elements, n_u)])
    G_direct = (np.sqrt(scn.beta_mk)[None, :, :, None, None] *
                (corr.R_ap_sqrt @ white_d @ corr.R_user_sqrt))
    G_ris_ap = (np.sqrt(scn.beta_m)[None, :, None, None] *
                (corr.R_ap_sqrt @ white_m @ corr.ris_sqrt))
    G_user_ris = (np.sqrt(scn.beta_k)[None, :, None, None] *
                  (corr.ris_sqrt @ white_k @ corr.R_user_sqrt))
    G = G_direct + cascade(G_ris_ap, corr.theta[scn.mode], G_user_ris)
    G_collective = None
    if kappa_ap is not None:
        G_collective = collective(G, kappa_ap)
    return ChannelRealization(
        G_direct=G_direct, G_ris_ap=G_ris_ap, G_user_ris=G_user_ris, G=G,
        G_collective=G_collective)


def scale_tx_distortion(white, power_ctrl, kappa, power):
    """ Shape unit-variance draws into transmitter distortion of variance
    (1 - kappa) power xi_n on antenna n (last axis).
    """
    return white * np.sqrt((1 - kappa) * power * power_ctrl)


def sample_tx_distortion(P_k, kappa, power, rng, n_symbols=None):
    """ Transmitter distortion of one user.

    Parameters
    ----------
    P_k: array (N_u, ) or (N_u, N_u)
        the (diagonal) power control matrix.
    kappa: float
        the transmitter hardware quality.
    power: float
        the transmit power.
    rng: numpy.random.Generator or list of Generator
        the random stream(s).
    n_symbols: int, default None
        draw one symbol vector (None) or n_symbols rows.

    Returns
    -------
    eta: array (T, N_u) or (T, n_symbols, N_u)
        zero-mean complex Gaussian distortion, independent across symbols.
    """
    kappa = float(_check_kappa(kappa))
    P_k = np.asarray(P_k, dtype=float)
    xi = np.diag(P_k) if P_k.ndim == 2 else P_k
    shape = xi.shape if n_symbols is None else (n_symbols, ) + xi.shape
    white, = complex_normals(rng, [shape])
    return scale_tx_distortion(white, xi, kappa, power)


def rx_distortion_variance(G, power_ctrl, kappa, power):
    """ Channel-conditional receiver distortion variances.

    Parameters
    ----------
    G: array (..., K, N_ap, N_u)
        the channels of all the users at one AP (or (..., M, K, N_ap, N_u)).
    power_ctrl: array (K, N_u)
        the power control coefficients.
    kappa: float or array
        the receiver hardware quality, broadcast against the leading axes
        of the result.
    power: float
        the transmit power.

    Returns
    -------
    var: array (..., N_ap)
        (1 - kappa) power diag(sum_k G_k P_k G_k^H).
    """
    kappa = _check_kappa(kappa)
    load = np.einsum("...kpu,ku->...p", np.abs(G) ** 2, power_ctrl)
    return (1 - kappa) * power * load


def sample_rx_distortion(G_all_at_m, P_all, kappa, power, rng,
                         n_symbols=None):
    """ Receiver distortion at one AP given the realized channels.

    Parameters
    ----------
    G_all_at_m: array (T, K, N_ap, N_u)
        the channels of all the users at the AP.
    P_all: array (K, N_u)
        the power control coefficients.
    kappa: float
        the receiver hardware quality.
    power: float
        the transmit power.
    rng: numpy.random.Generator or list of Generator
        the random stream(s), one per trial.
    n_symbols: int, default None
        one symbol (None) or n_symbols columns.

    Returns
    -------
    eta: array (T, N_ap) or (T, N_ap, n_symbols)
        zero-mean complex Gaussian distortion.
    """
    var = rx_distortion_variance(G_all_at_m, P_all, kappa, power)
    n_ap = var.shape[-1]
    shape = (n_ap, ) if n_symbols is None else (n_ap, n_symbols)
    white, = complex_normals(rng, [shape])
    if n_symbols is None:
        return white * np.sqrt(var)
    return white * np.sqrt(var)[..., None]


def statistical_rx_covariance(scn, corr, kappa_ap, power):
    """ Receiver distortion covariance averaged over the channels.

    Parameters
    ----------
    scn: Scenario
        the setup.
    corr: CorrelationSet
        the setup correlation matrices.
    kappa_ap: array (M, )
        the AP hardware quality.
    power: float
        the transmit power.

    Returns
    -------
    C_bar: array (M, N_ap, N_ap)
        (1 - kappa_m) power sum_k delta_bar_mk tr(P_k R_user) diag(R_ap).
    """
    kappa_ap = _check_kappa(kappa_ap)
    tr_pr = scn.power_ctrl @ np.diag(corr.R_user).real
    load = (1 - kappa_ap) * power * (corr.delta_bar @ tr_pr)
    return load[:, None, None] * np.diag(np.diag(corr.R_ap))[None]
