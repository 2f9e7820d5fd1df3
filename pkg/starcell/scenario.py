# -*- coding: utf-8 -*-
##########################################################################
# NSAp - Copyright (C) CEA, 2021
# Distributed under the terms of the CeCILL-B license, as published by
# the CEA-CNRS-INRIA. Refer to the LICENSE file or to
# http://www.cecill.info/licences/Licence_CeCILL-B_V1-en.html
# for details.
##########################################################################

"""
Network setups: AP, user and surface positions, large-scale fading, user
sides, pilot groups and power control.
"""

# Imports
from collections import namedtuple
import numpy as np
from scipy.linalg import dft
from .utils import get_logger


# Global parameters
logger = get_logger()
REFLECT = 0
TRANSMIT = 1
Scenario = namedtuple("Scenario", [
    "ap_pos", "user_pos", "ris_pos", "beta_mk", "beta_m", "beta_k", "mode",
    "pilot_group", "power_ctrl", "direct_blocked"])
Scenario.__doc__ = """ One network realization, immutable once drawn.

ap_pos: array (M, 3); user_pos: array (K, 3); ris_pos: array (3, ) in m.
beta_mk: array (M, K) direct gains; beta_m: array (M, ) AP-surface gains,
including the surface aperture gain;
beta_k: array (K, ) user-surface gains (all linear).
mode: array (K, ) of REFLECT or TRANSMIT.
pilot_group: array (K, ) pilot matrix index of each user.
power_ctrl: array (K, N_u) diagonal of the power control matrices.
direct_blocked: bool.
"""


def path_loss_db(distance, d0=10., d1=50., const_db=140.7):
    """ Three-slope path loss.

    Parameters
    ----------
    distance: float or array
        the 3-D link distances in m.
    d0, d1: float, default 10, 50
        the breakpoints in m.
    const_db: float, default 140.7
        the attenuation at 1 km in dB.

    Returns
    -------
    gain_db: float or array
        the (negative) channel gain in dB, without shadowing.
    """
    dist_km = np.asarray(distance, dtype=float) / 1000
    d0_km, d1_km = d0 / 1000, d1 / 1000
    far = -const_db - 35 * np.log10(np.maximum(dist_km, d1_km))
    mid = (-const_db - 15 * np.log10(d1_km) -
           20 * np.log10(np.clip(dist_km, d0_km, d1_km)))
    near = -const_db - 15 * np.log10(d1_km) - 20 * np.log10(d0_km)
    gain_db = np.where(dist_km > d1_km, far,
                       np.where(dist_km > d0_km, mid, near))
    if np.ndim(distance) == 0:
        return float(gain_db)
    return gain_db


def large_scale_gains(distance, cfg, rng):
    """ Linear large-scale gains with log-normal shadowing beyond d1.

    Shadowing is drawn for every link, so the random stream does not depend
    on the distances.
    """
    distance = np.asarray(distance, dtype=float)
    gain_db = path_loss_db(distance, cfg.d0, cfg.d1, cfg.pl_const_db)
    shadowing = cfg.shadow_std_db * rng.standard_normal(distance.shape)
    gain_db = gain_db + np.where(distance > cfg.d1, shadowing, 0.)
    return 10 ** (gain_db / 10)


def generate_scenario(cfg, setup_rng):
    """ Draw one network setup.

    APs are uniform in a square centered on the origin. The first
    ceil(K / 2) users stand on the AP side of the surface (reflect side),
    the others behind it (transmit side).

    Parameters
    ----------
    cfg: SystemConfig
        the system configuration.
    setup_rng: numpy.random.Generator
        the setup random stream.

    Returns
    -------
    scn: Scenario
        the drawn setup.
    """
    if cfg.M < 1 or cfg.K < 1:
        raise ValueError("A setup needs at least one AP and one user.")
    n_reflect = int(np.ceil(cfg.K / 2))
    n_transmit = cfg.K - n_reflect

    # Positions
    ap_xy = setup_rng.uniform(-cfg.ap_half_width, cfg.ap_half_width,
                              size=(cfg.M, 2))
    user_x = setup_rng.uniform(cfg.user_x_min, cfg.user_x_max, size=cfg.K)
    offset = setup_rng.uniform(0, cfg.user_depth, size=cfg.K)
    user_y = np.concatenate([
        cfg.ris_y - cfg.user_depth + offset[:n_reflect],
        cfg.ris_y + cfg.user_depth - offset[n_reflect:]])
    ap_pos = np.column_stack([ap_xy, np.full(cfg.M, cfg.h_ap)])
    user_pos = np.column_stack([user_x, user_y, np.full(cfg.K, cfg.h_user)])
    ris_pos = np.array([cfg.ris_x, cfg.ris_y, cfg.h_ris])

    # Large-scale fading
    dist_mk = np.linalg.norm(ap_pos[:, None] - user_pos[None], axis=-1)
    dist_m = np.linalg.norm(ap_pos - ris_pos, axis=-1)
    dist_k = np.linalg.norm(user_pos - ris_pos, axis=-1)
    beta_mk = large_scale_gains(dist_mk, cfg, setup_rng)
    beta_m = (large_scale_gains(dist_m, cfg, setup_rng) *
              10 ** (cfg.ris_gain_db / 10))
    beta_k = large_scale_gains(dist_k, cfg, setup_rng)
    if cfg.direct_blocked:
        beta_mk = np.zeros_like(beta_mk)
    mode = np.where(user_y < cfg.ris_y, REFLECT, TRANSMIT)
    logger.debug("setup: {0} reflect / {1} transmit users".format(
        n_reflect, n_transmit))

    return Scenario(
        ap_pos=ap_pos, user_pos=user_pos, ris_pos=ris_pos, beta_mk=beta_mk,
        beta_m=beta_m, beta_k=beta_k, mode=mode,
        pilot_group=assign_pilots(cfg, cfg.K),
        power_ctrl=np.full((cfg.K, cfg.N_u), 1. / cfg.N_u),
        direct_blocked=bool(cfg.direct_blocked))


def from_gains(cfg, beta_mk, beta_m, beta_k, mode, power_ctrl=None):
    """ Build a setup from explicit large-scale gains.

    Positions are left at the origin; useful for controlled studies where
    the geometry does not matter.

    Parameters
    ----------
    cfg: SystemConfig
        the system configuration.
    beta_mk: array (M, K)
        the direct gains.
    beta_m: array (M, )
        the AP-surface gains.
    beta_k: array (K, )
        the user-surface gains.
    mode: array (K, )
        REFLECT or TRANSMIT per user.
    power_ctrl: array (K, N_u), default None
        the power control coefficients, 1 / N_u by default.

    Returns
    -------
    scn: Scenario
        the setup.
    """
    beta_mk = np.array(beta_mk, dtype=float).reshape(cfg.M, cfg.K)
    beta_m = np.array(beta_m, dtype=float).reshape(cfg.M)
    beta_k = np.array(beta_k, dtype=float).reshape(cfg.K)
    mode = np.array(mode, dtype=int).reshape(cfg.K)
    if np.any(beta_mk < 0) or np.any(beta_m < 0) or np.any(beta_k < 0):
        raise ValueError("Large-scale gains must be non negative.")
    if not np.all(np.isin(mode, (REFLECT, TRANSMIT))):
        raise ValueError("Unknown user mode in {0}.".format(mode))
    if power_ctrl is None:
        power_ctrl = np.full((cfg.K, cfg.N_u), 1. / cfg.N_u)
    power_ctrl = np.array(power_ctrl, dtype=float).reshape(cfg.K, cfg.N_u)
    if np.any(power_ctrl < 0) or np.any(power_ctrl > 1):
        raise ValueError("Power control coefficients must lie in [0, 1].")
    if cfg.direct_blocked:
        beta_mk = np.zeros_like(beta_mk)
    return Scenario(
        ap_pos=np.zeros((cfg.M, 3)), user_pos=np.zeros((cfg.K, 3)),
        ris_pos=np.zeros(3), beta_mk=beta_mk, beta_m=beta_m, beta_k=beta_k,
        mode=mode, pilot_group=assign_pilots(cfg, cfg.K),
        power_ctrl=power_ctrl, direct_blocked=bool(cfg.direct_blocked))


def assign_pilots(cfg, K, tau_p=None):
    """ Round-robin pilot assignment: user k gets matrix k mod (tau_p // N_u).

    Parameters
    ----------
    cfg: SystemConfig
        the system configuration.
    K: int
        the number of users.
    tau_p: int, default None
        the pilot length, cfg.n_pilots by default.

    Returns
    -------
    pilot_group: array (K, )
        the pilot matrix index of each user.
    """
    tau_p = cfg.n_pilots if tau_p is None else tau_p
    if tau_p < cfg.N_u:
        raise ValueError(
            "No pilot matrix fits in tau_p={0} symbols with N_u={1} "
            "antennas.".format(tau_p, cfg.N_u))
    n_groups = tau_p // cfg.N_u
    return np.arange(K) % n_groups


def pilot_members(pilot_group, k):
    """ Users sharing the pilot matrix of user k (k included).
    """
    pilot_group = np.asarray(pilot_group)
    return np.flatnonzero(pilot_group == pilot_group[k])


def build_pilot_matrix(group, tau_p, N_u):
    """ Orthonormal pilot matrix of a pilot group.

    Parameters
    ----------
    group: int
        the pilot group index.
    tau_p: int
        the pilot length.
    N_u: int
        the number of user antennas.

    Returns
    -------
    phi: array (tau_p, N_u)
        columns N_u * group to N_u * (group + 1) - 1 of the unitary DFT
        matrix of size tau_p.
    """
    if group < 0 or N_u * (group + 1) > tau_p:
        raise ValueError(
            "Pilot group {0} out of range for tau_p={1} and N_u={2}.".format(
                group, tau_p, N_u))
    unitary = dft(tau_p) / np.sqrt(tau_p)
    return unitary[:, group * N_u: (group + 1) * N_u]


def pilot_matrices(scn, cfg):
    """ Pilot matrix of every user, shape (K, tau_p, N_u).
    """
    return np.stack([
        build_pilot_matrix(group, cfg.n_pilots, cfg.N_u)
        for group in scn.pilot_group])
