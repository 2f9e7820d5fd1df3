# -*- coding: utf-8 -*-
##########################################################################
# NSAp - Copyright (C) CEA, 2021
# Distributed under the terms of the CeCILL-B license, as published by
# the CEA-CNRS-INRIA. Refer to the LICENSE file or to
# http://www.cecill.info/licences/Licence_CeCILL-B_V1-en.html
# for details.
##########################################################################

"""
Uplink spectral efficiency of the two processing levels.

Level 1 takes the expectations inside the SINR (use-and-then-forget bound
with second layer decoding at the CPU), so its SE is a deterministic
function of channel moments. Level 2 averages the per-realization log-det
over the channel estimates.
"""

# Imports
from collections import namedtuple
import numpy as np
from .combining import lsfd_weights, mf_weights, collective_covariance
from .utils import (
    get_logger, hermitian_part, hermitian_solve, log2det_eye_plus,
    block_diag_stack)
from .utils.linalg import asymmetry


# Global parameters
logger = get_logger()
N_BLOCKS = 20
TERMS = ("DS", "BU", "IU", "TD", "RD", "NS")
Level1Moments = namedtuple("Level1Moments", [
    "H_bar", "U", "Gamma", "Lambda", "n_trials", "stderr"])
Level1Moments.__doc__ = """ Channel moments entering the Level 1 SE.

H_bar: (K, M N_u, N_u) sqrt(kappa_k) E{F_kk}; U: (K, K, M N_u, M N_u)
E{F_kk' P_k' F_kk'^H}; Gamma, Lambda: (K, M N_u, M N_u) block-diagonal
E{V^H C_bar V} and E{V^H V}; n_trials: number of trials (0 for analytic
moments); stderr: dict of per-entry standard errors with the same keys and
shapes, or None.
"""
SeReport = namedtuple("SeReport", [
    "se", "sum_se", "stderr", "sum_stderr", "terms", "metadata"])
SeReport.__doc__ = """ Spectral efficiency of every user.

se: (K, ) bits/s/Hz; sum_se: float; stderr: (K, ) Monte Carlo standard
errors; sum_stderr: float; terms: dict of (K, ) traces of the DS, BU, IU,
TD, RD and NS parts of the SINR (empty at Level 2); metadata: dict.
"""


class MomentAccumulator(object):
    """ Streaming mean and variance of complex arrays over trials.

    Means are merged with the pairwise update of Chan et al., the squared
    deviations being |x - mean|^2. Per-block sums (trial index modulo the
    number of blocks) are kept for delete-one-block jackknife estimates.
    """
    def __init__(self, shape, n_blocks=N_BLOCKS):
        """ Init class.

        Parameters
        ----------
        shape: tuple
            the shape of one sample.
        n_blocks: int, default 20
            the number of jackknife blocks.
        """
        self.shape = tuple(shape)
        self.n_blocks = n_blocks
        self.count = 0
        self.mean = np.zeros(self.shape, dtype=complex)
        self.m2 = np.zeros(self.shape)
        self.block_sum = np.zeros((n_blocks, ) + self.shape, dtype=complex)
        self.block_count = np.zeros(n_blocks, dtype=int)

    def _combine(self, count, mean, m2):
        if count == 0:
            return
        total = self.count + count
        delta = mean - self.mean
        self.mean = self.mean + delta * (count / total)
        self.m2 = (self.m2 + m2 +
                   np.abs(delta) ** 2 * (self.count * count / total))
        self.count = total

    def update(self, samples, trial_index):
        """ Add a batch of samples.

        Parameters
        ----------
        samples: array (T, *shape)
            the per-trial samples.
        trial_index: array (T, )
            the global trial indices, used for the block assignment.
        """
        samples = np.asarray(samples)
        if samples.shape[1:] != self.shape:
            raise ValueError("Expected samples of shape {0}, got {1}.".format(
                self.shape, samples.shape[1:]))
        if len(samples) == 0:
            return
        mean = samples.mean(axis=0)
        m2 = np.sum(np.abs(samples - mean) ** 2, axis=0)
        self._combine(len(samples), mean, m2)
        blocks = np.asarray(trial_index) % self.n_blocks
        np.add.at(self.block_sum, blocks, samples)
        np.add.at(self.block_count, blocks, 1)

    def merge(self, other):
        """ Merge another accumulator in place and return self.
        """
        if other.shape != self.shape or other.n_blocks != self.n_blocks:
            raise ValueError("Cannot merge accumulators of different "
                             "layouts.")
        self._combine(other.count, other.mean, other.m2)
        self.block_sum = self.block_sum + other.block_sum
        self.block_count = self.block_count + other.block_count
        return self

    @property
    def stderr(self):
        """ Per-entry standard error of the mean (inf below two samples).
        """
        if self.count < 2:
            return np.full(self.shape, np.inf)
        return np.sqrt(self.m2 / (self.count - 1) / self.count)

    def jackknife_means(self):
        """ Delete-one-block means, shape (n_used_blocks, *shape).
        """
        used = np.flatnonzero(
            (self.block_count > 0) & (self.block_count < self.count))
        if len(used) == 0:
            return np.zeros((0, ) + self.shape, dtype=complex)
        total = np.sum(self.block_sum, axis=0)
        counts = self.count - self.block_count[used]
        return ((total[None] - self.block_sum[used]) /
                counts.reshape((-1, ) + (1, ) * len(self.shape)))


class Level1Accumulator(object):
    """ Streaming estimation of the Level 1 moments.
    """
    def __init__(self, M, K, N_u, n_blocks=N_BLOCKS):
        size = M * N_u
        self.dims = (M, K, N_u)
        self.acc = {
            "H_bar": MomentAccumulator((K, size, N_u), n_blocks),
            "U": MomentAccumulator((K, K, size, size), n_blocks),
            "Gamma": MomentAccumulator((K, M, N_u, N_u), n_blocks),
            "Lambda": MomentAccumulator((K, M, N_u, N_u), n_blocks)
        }

    @property
    def count(self):
        return self.acc["H_bar"].count

    def update(self, V, G, scn, cfg, C_bar, trial_index):
        """ Add a batch of trials.

        Parameters
        ----------
        V: array (T, M, K, N_ap, N_u)
            the local combiners.
        G: array (T, M, K, N_ap, N_u)
            the true channels.
        scn: Scenario
            the setup.
        cfg: SystemConfig
            the system configuration.
        C_bar: array (M, N_ap, N_ap)
            the statistical receiver distortion covariance of the data
            phase.
        trial_index: array (T, )
            the global trial indices.
        """
        n_trials, n_aps, n_users, _, n_u = G.shape
        kappa_ap = cfg.kappa_ap_vec
        kappa_u = cfg.kappa_u_vec
        xi = scn.power_ctrl
        H_bar = np.zeros((n_trials, n_users, n_aps * n_u, n_u), dtype=complex)
        U = np.zeros((n_trials, n_users) + self.acc["U"].shape[1:],
                     dtype=complex)
        scaled = np.sqrt(kappa_ap)[None, :, None, None, None] * np.conj(V)
        for k in range(n_users):
            F_k = np.einsum("tmpx,tmjpu->tjmxu", scaled[:, :, k], G).reshape(
                n_trials, n_users, n_aps * n_u, n_u)
            H_bar[:, k] = np.sqrt(kappa_u[k]) * F_k[:, k]
            U[:, k] = np.einsum("tjau,ju,tjbu->tjab", F_k, xi, np.conj(F_k))
        Gamma = np.einsum("tmkpx,mpq,tmkqy->tkmxy", np.conj(V), C_bar, V)
        Lambda = np.einsum("tmkpx,tmkpy->tkmxy", np.conj(V), V)
        for name, samples in (("H_bar", H_bar), ("U", U), ("Gamma", Gamma),
                              ("Lambda", Lambda)):
            self.acc[name].update(samples, trial_index)
        return self

    def merge(self, other):
        for name, acc in self.acc.items():
            acc.merge(other.acc[name])
        return self

    def _assemble(self, H_bar, U, Gamma, Lambda, stderr=None):
        return Level1Moments(
            H_bar=H_bar, U=hermitian_part(U),
            Gamma=block_diag_stack(hermitian_part(Gamma)),
            Lambda=block_diag_stack(hermitian_part(Lambda)),
            n_trials=self.count, stderr=stderr)

    def moments(self):
        """ The running moments as a Level1Moments.
        """
        stderr = dict((name, acc.stderr) for name, acc in self.acc.items())
        for name in ("Gamma", "Lambda"):
            stderr[name] = block_diag_stack(stderr[name])
        return self._assemble(*[self.acc[name].mean for name in (
            "H_bar", "U", "Gamma", "Lambda")], stderr=stderr)

    def jackknife(self):
        """ Delete-one-block replicates of the moments.
        """
        means = [self.acc[name].jackknife_means() for name in (
            "H_bar", "U", "Gamma", "Lambda")]
        return [self._assemble(*items) for items in zip(*means)]


def accumulate_level1_moments(V, G, scn, cfg, C_bar, trial_index=None,
                              acc=None):
    """ Update (or start) the streaming Level 1 moments with a batch of
    trials.

    Returns
    -------
    acc: Level1Accumulator
        the updated accumulator.
    """
    n_trials, n_aps, n_users, _, n_u = G.shape
    if acc is None:
        acc = Level1Accumulator(n_aps, n_users, n_u)
    if trial_index is None:
        trial_index = np.arange(acc.count, acc.count + n_trials)
    return acc.update(V, G, scn, cfg, C_bar, trial_index)


def _resolve_weights(weights, moments, scn, cfg):
    n_users, size, n_u = moments.H_bar.shape
    if isinstance(weights, str):
        if weights == "lsfd":
            return lsfd_weights(moments, scn, cfg)
        if weights == "mf":
            A = mf_weights(size // n_u, n_u)
            return np.repeat(A[None], n_users, axis=0)
        raise ValueError("Unknown decoder '{0}'.".format(weights))
    A = np.asarray(weights)
    if A.ndim == 2:
        A = np.repeat(A[None], n_users, axis=0)
    if A.shape != moments.H_bar.shape:
        raise ValueError("Decoder weights of shape {0} do not match the "
                         "moments {1}.".format(A.shape, moments.H_bar.shape))
    return A


def level1_user_terms(moments, A_k, scn, cfg, k, tol=1e-8):
    """ Level 1 SINR parts of one user.

    Returns
    -------
    se: float
        the SE of user k in bits/s/Hz, pre-log included.
    terms: dict
        the DS, BU, IU, TD, RD and NS matrices (N_u x N_u).
    """
    p_u = cfg.p_u
    kappa_u = cfg.kappa_u_vec
    half = np.sqrt(scn.power_ctrl[k])
    A_h = np.conj(A_k.T)
    D = np.sqrt(p_u) * (A_h @ moments.H_bar[k]) * half[None, :]
    DD = D @ np.conj(D.T)
    loads = [A_h @ moments.U[k, j] @ A_k for j in range(len(kappa_u))]
    terms = {
        "DS": DD,
        "BU": p_u * kappa_u[k] * loads[k] - DD,
        "IU": sum(p_u * kappa_u[j] * loads[j] for j in range(len(loads))
                  if j != k),
        "TD": sum(p_u * (1 - kappa_u[j]) * loads[j]
                  for j in range(len(loads))),
        "RD": A_h @ moments.Gamma[k] @ A_k,
        "NS": cfg.sigma2 * (A_h @ moments.Lambda[k] @ A_k)
    }
    if np.isscalar(terms["IU"]):
        terms["IU"] = np.zeros_like(DD)
    sigma = sum(terms[name] for name in TERMS[1:])
    if asymmetry(sigma) > tol:
        raise ValueError(
            "Interference covariance of user {0} is not Hermitian "
            "(asymmetry {1:.3e}).".format(k, asymmetry(sigma)))
    sigma = hermitian_part(sigma)
    eigvals = np.linalg.eigvalsh(sigma)
    if eigvals.min() < -tol * max(np.abs(eigvals).max(), 1e-300):
        raise ValueError(
            "Interference covariance of user {0} is not PSD (min eigenvalue "
            "{1:.3e}): inconsistent moments.".format(k, eigvals.min()))
    if not np.any(D):
        return 0., terms
    sinr = np.conj(D.T) @ hermitian_solve(
        sigma, D, jitter=True, name="interference covariance")
    return float(cfg.prelog * log2det_eye_plus(sinr)), terms


def _level1_se(moments, weights, scn, cfg):
    A = _resolve_weights(weights, moments, scn, cfg)
    se, terms = [], dict((name, []) for name in TERMS)
    for k in range(A.shape[0]):
        value, parts = level1_user_terms(moments, A[k], scn, cfg, k)
        se.append(value)
        for name in TERMS:
            terms[name].append(float(np.trace(parts[name]).real))
    return (np.asarray(se),
            dict((name, np.asarray(val)) for name, val in terms.items()))


def se_level1(moments, weights, scn, cfg, replicates=None, metadata=None):
    """ Level 1 SE with second layer decoding.

    SE_k = prelog log2|I + D_k^H Sigma_k^-1 D_k| with
    D_k = sqrt(p_u) A_k^H H_bar_k P_k^1/2 and
    Sigma_k = A_k^H (p_u sum_k' U_kk' + Gamma_k + sigma2 Lambda_k) A_k
    - D_k D_k^H.

    Parameters
    ----------
    moments: Level1Moments or ClosedFormMoments
        the channel moments.
    weights: str or array
        'lsfd', 'mf', or the weights (K, M N_u, N_u) / (M N_u, N_u).
    scn: Scenario
        the setup.
    cfg: SystemConfig
        the system configuration.
    replicates: list of Level1Moments, default None
        jackknife replicates of the moments; with 'lsfd' the weights are
        recomputed on each replicate.
    metadata: dict, default None
        extra report metadata.

    Returns
    -------
    report: SeReport
        the per-user SE, its jackknife standard error and the terms.
    """
    se, terms = _level1_se(moments, weights, scn, cfg)
    stderr = np.zeros_like(se)
    sum_stderr = 0.
    if replicates:
        values = np.stack([_level1_se(item, weights, scn, cfg)[0]
                           for item in replicates])
        n_rep = len(values)
        stderr = np.sqrt((n_rep - 1) / n_rep * np.sum(
            (values - values.mean(axis=0)) ** 2, axis=0))
        sums = values.sum(axis=1)
        sum_stderr = float(np.sqrt((n_rep - 1) / n_rep * np.sum(
            (sums - sums.mean()) ** 2)))
    info = {"level": 1, "n_trials": int(getattr(moments, "n_trials", 0))}
    info.update(metadata or {})
    return SeReport(se=se, sum_se=float(se.sum()), stderr=stderr,
                    sum_stderr=sum_stderr, terms=terms, metadata=info)


def level2_trial_logdet(est, V, scn, cfg):
    """ Per-trial log2|I + D_hat^H Sigma_hat^-1 D_hat| of every user.

    D_hat_k = sqrt(p_u kappa_k) V_k^H G_hat_k P_k^1/2 and
    Sigma_hat_k = V_k^H Omega_k V_k, where Omega_k is the collective
    covariance without the desired estimated part of user k.

    Parameters
    ----------
    est: ChannelEstimate
        the collective estimates.
    V: array (T, K, M N_ap, N_u)
        the Level 2 combiners.
    scn: Scenario
        the setup.
    cfg: SystemConfig
        the system configuration.

    Returns
    -------
    logdet: array (T, K)
        the values in bits, pre-log not applied.
    """
    G_hat = est.G_hat_collective
    kappa_u = cfg.kappa_u_vec
    half = np.sqrt(scn.power_ctrl)
    omega = collective_covariance(est, scn, cfg)
    proj = np.einsum("tkpx,tkpu->tkxu", np.conj(V), G_hat)
    D = (np.sqrt(cfg.p_u * kappa_u)[None, :, None, None] * proj *
         half[None, :, None, :])
    sigma = (np.einsum("tkpx,tpq,tkqy->tkxy", np.conj(V), omega, V) -
             D @ np.conj(np.swapaxes(D, -1, -2)))
    silent = ~np.any(D != 0, axis=(-2, -1))
    sigma[silent] = np.eye(sigma.shape[-1])
    sinr = np.conj(np.swapaxes(D, -1, -2)) @ hermitian_solve(
        sigma, D, jitter=True, name="Level 2 interference covariance")
    return log2det_eye_plus(sinr)


def level2_optimal_logdet(est, scn, cfg):
    """ Per-trial log2|I + b_k^H Omega_k^-1 b_k| with
    b_k = sqrt(p_u kappa_k) G_hat_k P_k^1/2, the value reached by global
    MMSE combining.

    Returns
    -------
    logdet: array (T, K)
        the values in bits, pre-log not applied.
    """
    G_hat = est.G_hat_collective
    n_trials, n_users = G_hat.shape[:2]
    omega = collective_covariance(est, scn, cfg)
    gain = np.sqrt(cfg.p_u * cfg.kappa_u_vec)
    half = np.sqrt(scn.power_ctrl)
    logdet = np.zeros((n_trials, n_users))
    for k in range(n_users):
        b = gain[k] * G_hat[:, k] * half[k][None, None, :]
        if not np.any(b):
            continue
        omega_k = omega - b @ np.conj(np.swapaxes(b, -1, -2))
        sinr = np.conj(np.swapaxes(b, -1, -2)) @ hermitian_solve(
            omega_k, b, jitter=True, name="Level 2 interference covariance")
        logdet[:, k] = log2det_eye_plus(sinr)
    return logdet


class Level2Accumulator(MomentAccumulator):
    """ Streaming mean of the per-trial Level 2 log-dets, users and sum.
    """
    def __init__(self, K, n_blocks=N_BLOCKS):
        super(Level2Accumulator, self).__init__((K + 1, ), n_blocks)

    def update(self, logdet, trial_index):
        logdet = np.asarray(logdet, dtype=float)
        samples = np.concatenate(
            [logdet, logdet.sum(axis=1, keepdims=True)], axis=1)
        super(Level2Accumulator, self).update(samples, trial_index)
        return self


def se_level2(acc, cfg, metadata=None):
    """ Level 2 SE from the accumulated per-trial log-dets.

    The pre-log factor is applied here, once.

    Parameters
    ----------
    acc: Level2Accumulator
        the accumulated values.
    cfg: SystemConfig
        the system configuration.
    metadata: dict, default None
        extra report metadata.

    Returns
    -------
    report: SeReport
        per-user SE and trial standard errors.
    """
    if acc.count == 0:
        raise ValueError("No trial accumulated.")
    mean = cfg.prelog * acc.mean.real
    stderr = cfg.prelog * acc.stderr
    if acc.count < 2:
        stderr = np.zeros_like(mean)
    info = {"level": 2, "n_trials": acc.count}
    info.update(metadata or {})
    logger.debug("Level 2 SE over {0} trials: {1}".format(acc.count, mean))
    return SeReport(se=mean[:-1], sum_se=float(mean[-1]),
                    stderr=stderr[:-1], sum_stderr=float(stderr[-1]),
                    terms={}, metadata=info)
