# -*- coding: utf-8 -*-
##########################################################################
# NSAp - Copyright (C) CEA, 2021
# Distributed under the terms of the CeCILL-B license, as published by
# the CEA-CNRS-INRIA. Refer to the LICENSE file or to
# http://www.cecill.info/licences/Licence_CeCILL-B_V1-en.html
# for details.
##########################################################################

"""
Spatial correlation matrices, surface coefficients and the Kronecker
covariances of the aggregate AP-user channels.
"""

# Imports
from collections import namedtuple
import numpy as np
from scipy.linalg import toeplitz
from scipy.special import j0
from .scenario import REFLECT, TRANSMIT
from .utils import get_logger, psd_sqrtm, clip_psd, hermitian_part


# Global parameters
logger = get_logger()
CorrelationSet = namedtuple("CorrelationSet", [
    "R_ap", "R_user", "R_ris", "element_area", "star", "theta", "B", "T",
    "tt", "delta_bar", "R_ap_sqrt", "R_user_sqrt", "ris_sqrt"])
CorrelationSet.__doc__ = """ Second-order statistics of one setup.

R_ap: (N_ap, N_ap); R_user: (N_u, N_u); R_ris: (L, L) unit-diagonal
correlations. element_area: area of one element in m2. star: StarConfig or
None without surface. theta: (2, L) diagonal coefficients indexed by mode.
B: (2, L, L) with B B^H = T. T: (2, L, L) per mode. tt: (2, 2) traces
tr(T_a T_b). delta_bar: (M, K) gains of the joint covariances. The *_sqrt
fields cache the PSD square roots of R_ap, R_user and element_area * R_ris.
"""


class KroneckerCovariance(namedtuple(
        "KroneckerCovariance", ["scale", "R_user", "R_ap"])):
    """ Factored covariance scale * (R_user kron R_ap).
    """
    __slots__ = ()

    def expand(self):
        """ The explicit (N_u * N_ap) square matrix.
        """
        return self.scale * np.kron(self.R_user, self.R_ap)


class StarConfig(object):
    """ Amplitudes and phases of a simultaneously transmitting and
    reflecting surface.
    """
    def __init__(self, amp_t, amp_r, phase_t, phase_r, protocol="es",
                 tol=1e-9):
        """ Init StarConfig.

        Parameters
        ----------
        amp_t, amp_r: array (L, )
            transmission and reflection amplitudes.
        phase_t, phase_r: array (L, )
            transmission and reflection phases in rad.
        protocol: str, default 'es'
            'es' (energy splitting) or 'ms' (mode switching, binary
            amplitudes).
        tol: float, default 1e-9
            tolerance of the energy conservation check.
        """
        self.amp_t = np.asarray(amp_t, dtype=float).ravel()
        self.amp_r = np.asarray(amp_r, dtype=float).ravel()
        self.phase_t = np.mod(np.asarray(phase_t, dtype=float).ravel(),
                              2 * np.pi)
        self.phase_r = np.mod(np.asarray(phase_r, dtype=float).ravel(),
                              2 * np.pi)
        self.protocol = protocol
        sizes = {len(self.amp_t), len(self.amp_r), len(self.phase_t),
                 len(self.phase_r)}
        if len(sizes) != 1:
            raise ValueError("Amplitudes and phases must have the same "
                             "number of elements.")
        if np.any(self.amp_t < 0) or np.any(self.amp_r < 0):
            raise ValueError("Amplitudes must be non negative.")
        energy = self.amp_t ** 2 + self.amp_r ** 2
        if np.any(np.abs(energy - 1) > tol):
            raise ValueError(
                "Energy conservation violated: max |u_t^2 + u_r^2 - 1| = "
                "{0:.3e}.".format(float(np.max(np.abs(energy - 1)))))
        if protocol == "ms":
            binary = np.isclose(self.amp_t, 0) | np.isclose(self.amp_t, 1)
            if not np.all(binary):
                raise ValueError("Mode switching requires amplitudes in "
                                 "{0, 1}.")
        elif protocol != "es":
            raise ValueError("Unknown protocol '{0}'.".format(protocol))

    @classmethod
    def energy_splitting(cls, n_elements, amp_t, phase_t, phase_r):
        """ Uniform amplitude split over all the elements.
        """
        amp_t = np.full(n_elements, float(amp_t))
        return cls(amp_t, np.sqrt(np.clip(1 - amp_t ** 2, 0, None)),
                   phase_t, phase_r, protocol="es")

    @classmethod
    def mode_switching(cls, n_elements, share, phase_t, phase_r):
        """ The first round(share * L) elements reflect, the others transmit.
        """
        n_reflect = int(round(share * n_elements))
        amp_r = np.zeros(n_elements)
        amp_r[:n_reflect] = 1.
        return cls(1. - amp_r, amp_r, phase_t, phase_r, protocol="ms")

    def __len__(self):
        return len(self.amp_t)

    @property
    def coefficients(self):
        """ Diagonal coefficients, shape (2, L), indexed by user mode.
        """
        coefs = np.zeros((2, len(self)), dtype=complex)
        coefs[REFLECT] = self.amp_r * np.exp(1j * self.phase_r)
        coefs[TRANSMIT] = self.amp_t * np.exp(1j * self.phase_t)
        return coefs

    def theta(self, mode):
        """ Diagonal coefficient matrix of a mode, shape (L, L).
        """
        return np.diag(self.coefficients[mode])


def ap_correlation(N_ap, r_ap):
    """ Exponential correlation of the AP antennas: entry r_ap^|i - j|.
    """
    if not 0 <= r_ap < 1:
        raise ValueError("'r_ap' must lie in [0, 1), got {0}.".format(r_ap))
    return toeplitz(r_ap ** np.arange(N_ap))


def user_correlation(N_u, d_user, wavelength):
    """ Jakes correlation of the user antennas.

    Parameters
    ----------
    N_u: int
        the number of antennas.
    d_user: float
        the inter-antenna spacing in m.
    wavelength: float
        the carrier wavelength in m.

    Returns
    -------
    corr: array (N_u, N_u)
        entry J0(2 pi d_user |n - m| / wavelength).
    """
    if not d_user > 0:
        raise ValueError("'d_user' must be strictly positive.")
    return toeplitz(j0(2 * np.pi * d_user * np.arange(N_u) / wavelength))


def ris_correlation(L_h, L_v, d_h, d_v, wavelength):
    """ Sinc correlation of a planar surface under isotropic scattering.

    Element x sits at (0, mod(x, L_h) d_h, floor(x / L_h) d_v).

    Parameters
    ----------
    L_h, L_v: int
        the number of elements per row and per column.
    d_h, d_v: float
        the element spacings in m.
    wavelength: float
        the carrier wavelength in m.

    Returns
    -------
    corr: array (L, L)
        entry sinc(2 ||u_x - u_y|| / wavelength), projected on the PSD cone.
    """
    if not (d_h > 0 and d_v > 0):
        raise ValueError("Element spacings must be strictly positive.")
    index = np.arange(L_h * L_v)
    pos = np.column_stack([np.mod(index, L_h) * d_h, (index // L_h) * d_v])
    dist = np.linalg.norm(pos[:, None] - pos[None], axis=-1)
    corr = clip_psd(np.sinc(2 * dist / wavelength), name="surface correlation")
    return hermitian_part(corr).real


def _check_diagonal(theta):
    theta = np.asarray(theta)
    if theta.ndim != 2 or not np.allclose(theta, np.diag(np.diag(theta))):
        raise ValueError("The surface coefficient matrix must be diagonal.")


def b_matrix(R_ris, element_area, theta):
    """ Surface transfer A R^1/2 Theta R^1/2, whose Gram matrix is T.
    """
    _check_diagonal(theta)
    root = psd_sqrtm(R_ris)
    return element_area * root @ theta @ root


def t_matrix(R_ris, element_area, theta):
    """ Cascade correlation A^2 R^1/2 Theta R Theta^H R^1/2.

    Parameters
    ----------
    R_ris: array (L, L)
        the surface correlation.
    element_area: float
        the element area A in m2.
    theta: array (L, L)
        the diagonal coefficient matrix of one mode.

    Returns
    -------
    T: array (L, L)
        the Hermitian PSD T-matrix.
    """
    _check_diagonal(theta)
    root = psd_sqrtm(R_ris)
    T = element_area ** 2 * root @ theta @ R_ris @ np.conj(theta.T) @ root
    return hermitian_part(T)


def joint_covariance(beta_mk, beta_m, beta_k, T_mode, R_user, R_ap):
    """ Covariance of vec(G_mk), the aggregate direct plus cascaded channel.

    Parameters
    ----------
    beta_mk, beta_m, beta_k: float
        the direct, AP-surface and user-surface gains.
    T_mode: array (L, L)
        the T-matrix of the user mode.
    R_user, R_ap: array
        the user and AP correlation matrices.

    Returns
    -------
    delta_bar: float
        beta_mk + beta_m beta_k tr(T).
    cov: KroneckerCovariance
        the factored covariance delta_bar (R_user kron R_ap).
    """
    delta_bar = float(beta_mk + beta_m * beta_k * np.trace(T_mode).real)
    if delta_bar < 0:
        raise ValueError(
            "Negative joint covariance gain {0:.3e}.".format(delta_bar))
    return delta_bar, KroneckerCovariance(delta_bar, R_user, R_ap)


def build_star(cfg, rng=None):
    """ Surface configuration of a setup.

    Phases are drawn uniformly in [0, 2 pi) from rng ('random': independent
    per mode, 'shared': one profile for both modes) or set to zero.

    Returns
    -------
    star: StarConfig or None
        None when the setup has no surface.
    """
    n_elements = cfg.L
    draws = np.zeros((2, n_elements))
    if rng is not None:
        draws = rng.uniform(0, 2 * np.pi, size=(2, n_elements))
    if cfg.phases == "random":
        phase_t, phase_r = draws
    elif cfg.phases == "shared":
        phase_t = phase_r = draws[0]
    else:
        phase_t = phase_r = np.zeros(n_elements)
    if cfg.ris_mode == "none":
        return None
    if cfg.ris_mode == "cris-split":
        return StarConfig.mode_switching(n_elements, 0.5, phase_t, phase_r)
    if cfg.protocol == "ms":
        return StarConfig.mode_switching(
            n_elements, cfg.ms_share, phase_t, phase_r)
    return StarConfig.energy_splitting(n_elements, cfg.amp_t, phase_t,
                                       phase_r)


def build_correlation(cfg, scn, rng=None):
    """ All the second-order statistics of a setup.

    Parameters
    ----------
    cfg: SystemConfig
        the system configuration.
    scn: Scenario
        the setup.
    rng: numpy.random.Generator, default None
        the setup random stream used for the surface phases.

    Returns
    -------
    corr: CorrelationSet
        the correlation matrices and joint covariance gains.
    """
    wavelength = cfg.wavelength
    if cfg.correlated:
        R_ap = ap_correlation(cfg.N_ap, cfg.r_ap)
        R_user = user_correlation(cfg.N_u, cfg.d_user * wavelength,
                                  wavelength)
    else:
        R_ap, R_user = np.eye(cfg.N_ap), np.eye(cfg.N_u)
    R_ris = ris_correlation(cfg.L_h, cfg.L_v, cfg.d_h * wavelength,
                            cfg.d_v * wavelength, wavelength)
    element_area = cfg.d_h * cfg.d_v
    star = build_star(cfg, rng)
    if star is None:
        theta = np.zeros((2, cfg.L), dtype=complex)
    else:
        theta = star.coefficients
    B = np.stack([b_matrix(R_ris, element_area, np.diag(coefs))
                  for coefs in theta])
    T = np.stack([t_matrix(R_ris, element_area, np.diag(coefs))
                  for coefs in theta])
    tt = np.einsum("aij,bji->ab", T, T).real
    tr_T = np.trace(T, axis1=-2, axis2=-1).real
    delta_bar = (scn.beta_mk + scn.beta_m[:, None] * scn.beta_k[None, :] *
                 tr_T[scn.mode][None, :])
    if np.any(delta_bar < 0):
        raise ValueError("Negative joint covariance gain found.")
    logger.debug("surface traces: reflect {0:.3e}, transmit {1:.3e}".format(
        tr_T[REFLECT], tr_T[TRANSMIT]))
    return CorrelationSet(
        R_ap=R_ap, R_user=R_user, R_ris=R_ris, element_area=element_area,
        star=star, theta=theta, B=B, T=T, tt=tt, delta_bar=delta_bar,
        R_ap_sqrt=psd_sqrtm(R_ap), R_user_sqrt=psd_sqrtm(R_user),
        ris_sqrt=psd_sqrtm(element_area * R_ris))


def expanded_covariance(corr, m, k):
    """ Explicit covariance of vec(G_mk), shape (N_ap N_u, N_ap N_u).
    """
    return corr.delta_bar[m, k] * np.kron(corr.R_user, corr.R_ap)


def all_covariances(corr):
    """ Explicit covariances of every link, shape (M, K, D, D).
    """
    base = np.kron(corr.R_user, corr.R_ap)
    return corr.delta_bar[..., None, None] * base
