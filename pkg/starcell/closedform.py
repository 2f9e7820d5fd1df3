# -*- coding: utf-8 -*-
##########################################################################
# NSAp - Copyright (C) CEA, 2021
# Distributed under the terms of the CeCILL-B license, as published by
# the CEA-CNRS-INRIA. Refer to the LICENSE file or to
# http://www.cecill.info/licences/Licence_CeCILL-B_V1-en.html
# for details.
##########################################################################

"""
Closed-form Level 1 moments and SE of MR combining.

Every moment is a trace over the estimation statistics. The interference
moments are exact fourth moments of the aggregate channels: a Gaussian
pairing part built from the link covariances plus two cascade pairings,
weighted by tr(T_a T_b), that appear because the AP-surface and
user-surface channels are shared across links. A second evaluation, the
kernel trace form, keeps the Gaussian pairings and adds cascade-only
corrections written over per-link kernels. The validation reports its gap
to the exact moments.

Sub-blocks follow the column-stacking convention: block (n, n') of a
(N_ap N_u) square matrix spans rows n N_ap .. (n + 1) N_ap - 1 and columns
n' N_ap .. (n' + 1) N_ap - 1; Z^{x:} denotes the rows of block row x.
"""

# Imports
from collections import namedtuple
import numpy as np
from joblib import Parallel, delayed
from .scenario import pilot_members
from .spectral import se_level1
from .estimation import build_statistics
from .utils import get_logger, debug_msg, hermitian_part, block_diag_stack
from .utils.linalg import asymmetry


# Global parameters
logger = get_logger()
GROUPS = ("coherent", "pilot_cross", "tx_own", "tx_cross", "rx", "noise")
VARIANTS = ("exact", "kernel")
ClosedFormMoments = namedtuple("ClosedFormMoments", [
    "H_bar", "U", "Gamma", "Lambda", "terms", "n_trials", "stderr"])
ClosedFormMoments.__doc__ = """ Analytic Level 1 moments of MR combining.

Same layout as Level1Moments; terms maps each interference group name to
its (K, K, M N_u, M N_u) share of U. n_trials is 0 and stderr None.
"""


def selectors(N_ap, N_u):
    """ Column selectors S_n, shape (N_u, N_ap N_u, N_ap), such that
    S_n^H vec(G) is the n-th column of G.
    """
    eye = np.eye(N_ap * N_u)
    return eye.reshape(N_u, N_ap, N_u * N_ap).transpose(0, 2, 1)


def diagonal_blocks(arr, N_ap):
    """ Diagonal N_ap x N_ap blocks (n, n) of (..., D, D) matrices, shape
    (..., N_u, N_ap, N_ap).
    """
    n_u = arr.shape[-1] // N_ap
    blocks = arr.reshape(arr.shape[:-2] + (n_u, N_ap, n_u, N_ap))
    return np.einsum("...nink->...nik", blocks)


def quartic_moment(X, Y, weights, links, Delta, corr, scn):
    """ Weighted fourth moments E{(g_a^H X g_b)(g_c^H Y g_d)}.

    Parameters
    ----------
    X: array (n_x, W, D, D)
        left matrices, one stack per output row.
    Y: array (n_y, W, D, D)
        right matrices, one stack per output column.
    weights: array (W, )
        the weights of the summed W axis.
    links: 4-tuple of (m, k)
        the links a, b, c and d.
    Delta: array (M, K, D, D)
        the link covariances.
    corr: CorrelationSet
        the setup correlation matrices.
    scn: Scenario
        the setup.

    Returns
    -------
    parts: dict
        T1 and T2 (Gaussian pairings), NG1 and NG2 (cascade pairings),
        each of shape (n_x, n_y).
    """
    (ma, ja), (mb, jb), (mc, jc), (md, jd) = links
    n_x, n_w, size = X.shape[:3]
    n_y = Y.shape[0]
    n_ap = corr.R_ap.shape[0]
    n_u = size // n_ap
    parts = dict((name, np.zeros((n_x, n_y), dtype=complex))
                 for name in ("T1", "T2", "NG1", "NG2"))
    if (ma, ja) == (mb, jb) and (mc, jc) == (md, jd):
        tr_x = np.einsum("xwij,ji->xw", X, Delta[ma, ja])
        tr_y = np.einsum("ywij,ji->yw", Y, Delta[mc, jc])
        parts["T1"] = np.einsum("xw,w,yw->xy", tr_x, weights, tr_y)
    if (mb, jb) == (mc, jc) and (md, jd) == (ma, ja):
        parts["T2"] = np.einsum(
            "xwij,jk,ywkl,li,w->xy", X, Delta[mb, jb], Y, Delta[ma, ja],
            weights, optimize=True)
    X6 = X.reshape(n_x, n_w, n_u, n_ap, n_u, n_ap)
    Y6 = Y.reshape(n_y, n_w, n_u, n_ap, n_u, n_ap)
    R_ap, R_user = corr.R_ap, corr.R_user
    beta_m, beta_k = scn.beta_m, scn.beta_k
    if ma == mb and mc == md and ja == jd and jb == jc:
        coef = (beta_m[ma] * beta_m[mc] * beta_k[ja] * beta_k[jb] *
                corr.tt[scn.mode[ja], scn.mode[jb]])
        if coef != 0:
            parts["NG1"] = coef * np.einsum(
                "xwaibj,ywckdl,ji,lk,ad,cb,w->xy", X6, Y6, R_ap, R_ap,
                R_user, R_user, weights, optimize=True)
    if ma == md and mc == mb and ja == jb and jc == jd:
        coef = (beta_m[ma] * beta_m[mc] * beta_k[ja] * beta_k[jc] *
                corr.tt[scn.mode[ja], scn.mode[jc]])
        if coef != 0:
            parts["NG2"] = coef * np.einsum(
                "xwaibj,ywckdl,li,jk,ab,cd,w->xy", X6, Y6, R_ap, R_ap,
                R_user, R_user, weights, optimize=True)
    return parts


def _check_indices(scn, m, m2, k, k2):
    n_aps, n_users = scn.beta_mk.shape
    for name, value, bound in (("m", m, n_aps), ("m'", m2, n_aps),
                               ("k", k, n_users), ("k'", k2, n_users)):
        if not 0 <= value < bound:
            raise ValueError("Index {0}={1} out of range [0, {2}).".format(
                name, value, bound))


def u_block_terms(stats, corr, scn, cfg, m, m2, k, k2):
    """ Groups of the (m, m') block of U_kk'.

    The block is sqrt(kappa_m kappa_m') sum_n xi_k'n
    E{(g_hat_mkx^H g_mk'n)(g_m'k'n^H g_hat_m'ky)} split in:

    - coherent, pilot_cross: the pilot contribution of the users sharing
      the pilot of k.
    - tx_own, tx_cross: the pilot-phase transmitter distortion of every
      user.
    - rx, noise: the pilot-phase receiver distortion and the noise (same
      AP only).

    Parameters
    ----------
    stats: EstimationStatistics
        the estimation statistics.
    corr: CorrelationSet
        the setup correlation matrices.
    scn: Scenario
        the setup.
    cfg: SystemConfig
        the system configuration.
    m, m2: int
        the AP indices.
    k, k2: int
        the user indices.

    Returns
    -------
    groups: dict
        the (N_u, N_u) groups, keys in GROUPS.
    """
    _check_indices(scn, m, m2, k, k2)
    n_users = scn.beta_mk.shape[1]
    n_ap, n_u = corr.R_ap.shape[0], corr.R_user.shape[0]
    size = n_ap * n_u
    kappa_ap, kappa_u = cfg.kappa_ap_vec, cfg.kappa_u_vec
    tau_p, p_p = cfg.n_pilots, cfg.p_p
    xi = scn.power_ctrl
    sel = selectors(n_ap, n_u)
    rows_1 = stats.Z[m, k].reshape(n_u, n_ap, size)
    rows_2 = stats.Z[m2, k].reshape(n_u, n_ap, size)
    groups = dict((name, np.zeros((n_u, n_u), dtype=complex))
                  for name in GROUPS)

    def _links(j):
        return ((m, j), (m, k2), (m2, k2), (m2, j))

    # Pilot sharing users
    for j in pilot_members(scn.pilot_group, k):
        half = np.kron(np.diag(np.sqrt(xi[j])), np.eye(n_ap))
        gain = np.sqrt(tau_p * p_p * kappa_u[j])
        X = (np.sqrt(kappa_ap[m]) * gain *
             np.einsum("ab,xib,ndi->xnad", half, np.conj(rows_1), sel))
        Y = (np.sqrt(kappa_ap[m2]) * gain *
             np.einsum("nai,yib,bd->ynad", sel, rows_2, half))
        parts = quartic_moment(X, Y, xi[k2], _links(j), stats.Delta, corr,
                               scn)
        groups["coherent"] += parts["T1"] + parts["NG2"]
        groups["pilot_cross"] += parts["T2"] + parts["NG1"]

    # Transmitter distortion
    blocks_1 = stats.Z[m, k].reshape(n_u, n_ap, n_u, n_ap)
    blocks_2 = stats.Z[m2, k].reshape(n_u, n_ap, n_u, n_ap)
    X = np.einsum("rab,xisb,ndi->xnrsad", sel, np.conj(blocks_1), sel)
    Y = np.einsum("nai,yisb,rdb->ynrsad", sel, blocks_2, sel)
    X = X.reshape(n_u, n_u ** 3, size, size)
    Y = Y.reshape(n_u, n_u ** 3, size, size)
    for j in range(n_users):
        var = (1 - kappa_u[j]) * p_p * xi[j]
        if not np.any(var):
            continue
        weights = (np.sqrt(kappa_ap[m] * kappa_ap[m2]) *
                   np.einsum("n,r,s->nrs", xi[k2], var, np.ones(n_u)))
        parts = quartic_moment(X, Y, weights.ravel(), _links(j),
                               stats.Delta, corr, scn)
        groups["tx_own"] += parts["T1"] + parts["NG2"]
        groups["tx_cross"] += parts["T2"] + parts["NG1"]

    if m == m2:
        # Noise
        diag = diagonal_blocks(stats.Delta[m, k2], n_ap)
        groups["noise"] = cfg.sigma2 * np.einsum(
            "yid,xjd,n,nji->xy", rows_1, np.conj(rows_1), xi[k2], diag)

        # Receiver distortion
        rx_load = (1 - kappa_ap[m]) * p_p
        if rx_load > 0:
            mask = np.zeros((n_ap, size))
            for p in range(n_ap):
                mask[p, p::n_ap] = 1
            inner = np.einsum("yid,pd,xjd->xypij", rows_1, mask,
                              np.conj(rows_1))
            Y = np.einsum("nai,xypij,ndj->xypnad", sel, inner, sel)
            Y = Y.reshape(n_u * n_u, n_ap * n_u, size, size)
            weights = np.broadcast_to(xi[k2], (n_ap, n_u)).ravel()
            selections = [np.diag(row) for row in np.eye(n_ap)]
            for j in range(n_users):
                X = np.stack([np.kron(np.diag(xi[j]), select)
                              for select in selections])
                X = np.repeat(X[:, None], n_u, axis=1).reshape(
                    1, n_ap * n_u, size, size)
                parts = quartic_moment(
                    X, Y, weights, ((m, j), (m, j), (m, k2), (m, k2)),
                    stats.Delta, corr, scn)
                groups["rx"] += rx_load * sum(parts.values()).reshape(
                    n_u, n_u)

    outer = np.sqrt(kappa_ap[m] * kappa_ap[m2])
    return dict((name, outer * value) for name, value in groups.items())


def column_maps(corr):
    """ Maps A_n = R_user^1/2(n, :) kron R_ap^1/2 from a whitened vec(W) to
    the n-th channel column, shape (N_u, N_ap, N_ap N_u).
    """
    n_u = corr.R_user.shape[0]
    return np.stack([np.kron(corr.R_user_sqrt[n: n + 1], corr.R_ap_sqrt)
                     for n in range(n_u)])


def pilot_kernels(stats, corr, scn, m, k):
    """ Kernels K_j,x = (R_user^1/2 P_j^1/2 kron R_ap^1/2) (Z_mk^{x:})^H.

    Returns
    -------
    kernels: array (K, N_u, N_ap N_u, N_ap)
        one kernel per user j and estimate column x.
    """
    n_ap, n_u = corr.R_ap.shape[0], corr.R_user.shape[0]
    rows = stats.Z[m, k].reshape(n_u, n_ap, n_ap * n_u)
    roots = np.stack([
        np.kron(corr.R_user_sqrt @ np.diag(np.sqrt(xi)), corr.R_ap_sqrt)
        for xi in scn.power_ctrl])
    return np.einsum("jde,xie->jxdi", roots, np.conj(rows))


def kernel_traces(kernels, maps):
    """ Block traces [X_j,x,n]_ab = tr(K_j,x^{a,:} A_n^{:,b}), shape
    (K, N_u, N_u, N_u, N_u) indexed by (j, x, n, a, b).
    """
    n_u, n_ap = maps.shape[:2]
    blocks = kernels.reshape(kernels.shape[:2] + (n_u, n_ap, n_ap))
    return np.einsum("jxail,nlbi->jxnab", blocks,
                     maps.reshape(n_u, n_ap, n_u, n_ap))


def distortion_traces(stats, maps, m, k):
    """ Column-stacked traces vec(Y_x,n), with [Y_x,n]_ab =
    tr(A_a^H (Z_mk^{x,b})^H A_n), shape (N_u, N_u, N_u^2).
    """
    n_u, n_ap = maps.shape[:2]
    blocks = stats.Z[m, k].reshape(n_u, n_ap, n_u, n_ap)
    traces = np.einsum("aid,xlbi,nld->xnab", np.conj(maps), np.conj(blocks),
                       maps)
    return np.swapaxes(traces, -1, -2).reshape(n_u, n_u, n_u * n_u)


def kernel_u_block_terms(stats, corr, scn, cfg, m, m2, k, k2):
    """ Groups of the (m, m') block of U_kk' from the kernel trace form.

    The cascaded links are handled as Gaussian links of covariance
    Delta_bar plus cascade-only corrections weighted by tr(T_a T_b), each
    written as a trace over the kernels K, the column maps A, the block
    traces X and the distortion traces Y. The groups have the same names
    as in u_block_terms; rx and noise are the same-AP terms driven by the
    statistical pilot distortion and the noise.

    Parameters
    ----------
    stats: EstimationStatistics
        the estimation statistics.
    corr: CorrelationSet
        the setup correlation matrices.
    scn: Scenario
        the setup.
    cfg: SystemConfig
        the system configuration.
    m, m2: int
        the AP indices.
    k, k2: int
        the user indices.

    Returns
    -------
    groups: dict
        the (N_u, N_u) groups, keys in GROUPS.
    """
    _check_indices(scn, m, m2, k, k2)
    n_users = scn.beta_mk.shape[1]
    n_ap, n_u = corr.R_ap.shape[0], corr.R_user.shape[0]
    size = n_ap * n_u
    kappa_ap, kappa_u = cfg.kappa_ap_vec, cfg.kappa_u_vec
    tau_p, p_p = cfg.n_pilots, cfg.p_p
    xi = scn.power_ctrl
    delta_bar, tt, mode = corr.delta_bar, corr.tt, scn.mode
    cascade = scn.beta_m[m] * scn.beta_m[m2] * scn.beta_k
    same = m == m2
    groups = dict((name, np.zeros((n_u, n_u), dtype=complex))
                  for name in GROUPS)

    maps = column_maps(corr)
    kernels_1 = pilot_kernels(stats, corr, scn, m, k)
    kernels_2 = kernels_1 if same else pilot_kernels(stats, corr, scn, m2, k)
    X_1 = kernel_traces(kernels_1, maps)
    X_2 = X_1 if same else kernel_traces(kernels_2, maps)
    ups_1 = distortion_traces(stats, maps, m, k)
    ups_2 = ups_1 if same else distortion_traces(stats, maps, m2, k)
    tx_var = (1 - kappa_u)[:, None] * p_p * xi
    tx_load = tx_var @ np.diag(corr.R_user).real
    scale = kappa_ap[m] * kappa_ap[m2]

    # K_x A_n products, shape (K, N_u, N_u, D, D)
    products = np.einsum("jxdi,nie->jxnde", kernels_1, maps)

    def _gram(j):
        return np.einsum("xnde,ynde->xyn", products[j],
                         np.conj(products[j]))

    # Pilot sharing users
    members = pilot_members(scn.pilot_group, k)
    if k2 in members:
        tr_1 = np.einsum("xdi,nid->xn", kernels_1[k2], maps)
        tr_2 = np.einsum("xdi,nid->xn", kernels_2[k2], maps)
        inner = (delta_bar[m, k2] * delta_bar[m2, k2] *
                 np.einsum("xn,yn->xyn", tr_1, np.conj(tr_2)))
        if same:
            inner = inner + (cascade[k2] * scn.beta_k[k2] *
                             tt[mode[k2], mode[k2]] * _gram(k2))
        groups["coherent"] = (scale * tau_p * p_p * kappa_u[k2] *
                              np.einsum("xyn,n->xy", inner, xi[k2]))
    for j in members:
        inner = (cascade[k2] * scn.beta_k[j] * tt[mode[k2], mode[j]] *
                 np.einsum("xnab,ynab->xyn", X_1[j], np.conj(X_2[j])))
        if same:
            inner = inner + delta_bar[m, k2] * delta_bar[m, j] * _gram(j)
        groups["pilot_cross"] += (scale * tau_p * p_p * kappa_u[j] *
                                  np.einsum("xyn,n->xy", inner, xi[k2]))

    # Transmitter distortion
    rows = stats.Z[m, k].reshape(n_u, n_ap, size)
    spread = np.einsum("nid,xie->xnde", np.conj(maps), rows)
    quad = np.einsum("xned,ynef,fd->xyn", np.conj(spread), spread,
                     np.kron(np.eye(n_u), corr.R_ap))
    weights = np.kron(np.ones(n_u), tx_var[k2])
    inner = (delta_bar[m, k2] * delta_bar[m2, k2] *
             np.einsum("xnv,v,ynv->xyn", ups_1, weights, np.conj(ups_2)))
    if same:
        inner = inner + (cascade[k2] * scn.beta_k[k2] *
                         tt[mode[k2], mode[k2]] * tx_load[k2] * quad)
    groups["tx_own"] = scale * np.einsum("xyn,n->xy", inner, xi[k2])
    for j in range(n_users):
        weights = np.kron(np.ones(n_u), tx_var[j])
        inner = (cascade[k2] * scn.beta_k[j] * tt[mode[k2], mode[j]] *
                 np.einsum("xnv,v,ynv->xyn", ups_1, weights, np.conj(ups_2)))
        if same:
            inner = inner + (delta_bar[m, k2] * delta_bar[m, j] *
                             tx_load[j] * quad)
        groups["tx_cross"] += scale * np.einsum("xyn,n->xy", inner, xi[k2])

    if same:
        load = kappa_ap[m] * delta_bar[m, k2] * (
            xi[k2] @ np.diag(corr.R_user).real)
        projected = np.einsum("xid,ij,yje->xyde", np.conj(rows), corr.R_ap,
                              rows)
        groups["rx"] = load * np.einsum(
            "de,xyed->xy", np.kron(np.eye(n_u), stats.C_bar_pilot[m]),
            projected)
        groups["noise"] = load * cfg.sigma2 * np.einsum("xydd->xy",
                                                        projected)
    return groups


def closed_u_diag(stats, corr, scn, cfg, m, k, k2):
    """ Same-AP block (m, m) of U_kk', shape (N_u, N_u).
    """
    groups = u_block_terms(stats, corr, scn, cfg, m, m, k, k2)
    return sum(groups[name] for name in GROUPS)


def closed_u_cross(stats, corr, scn, cfg, m, m2, k, k2):
    """ Cross-AP block (m, m') of U_kk' with m != m', shape (N_u, N_u).

    Only the pilot and transmitter distortion groups contribute.
    """
    if m == m2:
        raise ValueError("Cross-AP blocks need two distinct APs, got "
                         "m=m'={0}.".format(m))
    groups = u_block_terms(stats, corr, scn, cfg, m, m2, k, k2)
    return sum(groups[name] for name in GROUPS)


def closed_u(stats, corr, scn, cfg, n_jobs=1, tol=1e-8, variant="exact"):
    """ All the U_kk' matrices.

    Blocks with m <= m' are evaluated and the lower blocks follow from
    U_kk'^{(m', m)} = (U_kk'^{(m, m')})^H. The 'exact' variant uses the
    fourth moments of the aggregate channels, the 'kernel' variant the
    kernel trace form.

    Returns
    -------
    U: array (K, K, M N_u, M N_u)
        the Hermitian matrices.
    terms: dict
        the per-group shares of U, same shape.
    """
    if variant not in VARIANTS:
        raise ValueError("Unknown closed-form variant '{0}', choose one of "
                         "{1}.".format(variant, VARIANTS))
    block_terms = (u_block_terms if variant == "exact" else
                   kernel_u_block_terms)
    n_aps, n_users = scn.beta_mk.shape
    n_u = corr.R_user.shape[0]
    size = n_aps * n_u
    tasks = [(k, k2, m, m2) for k in range(n_users)
             for k2 in range(n_users) for m in range(n_aps)
             for m2 in range(m, n_aps)]
    results = Parallel(n_jobs=n_jobs)(
        delayed(block_terms)(stats, corr, scn, cfg, m, m2, k, k2)
        for k, k2, m, m2 in tasks)
    terms = dict((name, np.zeros((n_users, n_users, size, size),
                                 dtype=complex)) for name in GROUPS)
    for (k, k2, m, m2), groups in zip(tasks, results):
        for name, value in groups.items():
            terms[name][k, k2, m * n_u: (m + 1) * n_u,
                        m2 * n_u: (m2 + 1) * n_u] = value
            if m2 != m:
                terms[name][k, k2, m2 * n_u: (m2 + 1) * n_u,
                            m * n_u: (m + 1) * n_u] = np.conj(value.T)
    U = sum(terms[name] for name in GROUPS)
    for k in range(n_users):
        for k2 in range(n_users):
            gap = asymmetry(U[k, k2])
            if gap > tol:
                raise ValueError(
                    "U_{0}{1} is not Hermitian (asymmetry {2:.3e}).".format(
                        k, k2, gap))
    logger.debug(debug_msg("U ({0})".format(variant), U))
    return hermitian_part(U), terms


def closed_h_bar(stats, cfg):
    """ Desired signal moments.

    Block m of H_bar_k has entries sqrt(kappa_m kappa_k)
    tr(Delta_hat_mk^{n, x}) at row x and column n.

    Returns
    -------
    H_bar: array (K, M N_u, N_u)
        the moments.
    """
    n_aps, n_users, size = stats.Delta_hat.shape[:3]
    n_ap = stats.C_bar_data.shape[-1]
    n_u = size // n_ap
    blocks = stats.Delta_hat.reshape(n_aps, n_users, n_u, n_ap, n_u, n_ap)
    traces = np.einsum("mknpxp->kmxn", blocks)
    scale = np.sqrt(np.outer(cfg.kappa_u_vec, cfg.kappa_ap_vec))
    traces = scale[:, :, None, None] * traces
    return traces.reshape(n_users, n_aps * n_u, n_u)


def _estimate_gram(stats):
    n_aps, n_users, size = stats.Delta_hat.shape[:3]
    n_ap = stats.C_bar_data.shape[-1]
    n_u = size // n_ap
    blocks = stats.Delta_hat.reshape(n_aps, n_users, n_u, n_ap, n_u, n_ap)
    return np.einsum("mkypxp->kmxy", blocks)


def closed_lambda_bar(H_bar, cfg, stats=None):
    """ Noise moments, block-diagonal with blocks H_bar_mkk /
    sqrt(kappa_m kappa_k) = E{G_hat_mk^H G_hat_mk}.

    Parameters
    ----------
    H_bar: array (K, M N_u, N_u)
        the desired signal moments.
    cfg: SystemConfig
        the system configuration.
    stats: EstimationStatistics, default None
        used instead of H_bar when a hardware quality factor is zero.

    Returns
    -------
    Lambda: array (K, M N_u, M N_u)
        the moments.
    """
    n_users, size, n_u = H_bar.shape
    n_aps = size // n_u
    scale = np.sqrt(np.outer(cfg.kappa_u_vec, cfg.kappa_ap_vec))
    if np.any(scale == 0):
        if stats is None:
            raise ValueError("Zero hardware quality factors need the "
                             "estimation statistics.")
        blocks = _estimate_gram(stats)
    else:
        blocks = (H_bar.reshape(n_users, n_aps, n_u, n_u) /
                  scale[:, :, None, None])
    return block_diag_stack(hermitian_part(blocks))


def closed_gamma_bar(stats, cfg):
    """ Receiver distortion moments, block-diagonal with entries
    tr(C_bar_m Delta_hat_mk^{y, x}).

    Returns
    -------
    Gamma: array (K, M N_u, M N_u)
        the moments.
    """
    n_aps, n_users, size = stats.Delta_hat.shape[:3]
    n_ap = stats.C_bar_data.shape[-1]
    n_u = size // n_ap
    blocks = stats.Delta_hat.reshape(n_aps, n_users, n_u, n_ap, n_u, n_ap)
    gamma = np.einsum("mpq,mkyqxp->kmxy", stats.C_bar_data, blocks)
    return block_diag_stack(hermitian_part(gamma))


def closed_moments(stats, corr, scn, cfg, n_jobs=1, variant="exact"):
    """ All the analytic Level 1 moments of MR combining.

    Only U depends on the variant, see closed_u.

    Returns
    -------
    moments: ClosedFormMoments
        the moments and the U groups.
    """
    H_bar = closed_h_bar(stats, cfg)
    U, terms = closed_u(stats, corr, scn, cfg, n_jobs=n_jobs,
                        variant=variant)
    return ClosedFormMoments(
        H_bar=H_bar, U=U, Gamma=closed_gamma_bar(stats, cfg),
        Lambda=closed_lambda_bar(H_bar, cfg, stats=stats), terms=terms,
        n_trials=0, stderr=None)


def se_level1_closed(scn, corr, cfg, decoder="lsfd", stats=None, n_jobs=1,
                     variant="exact"):
    """ Closed-form Level 1 SE of MR combining.

    Parameters
    ----------
    scn: Scenario
        the setup.
    corr: CorrelationSet
        the setup correlation matrices (surface configuration included).
    cfg: SystemConfig
        the system configuration.
    decoder: str or array, default 'lsfd'
        'lsfd', 'mf' or explicit second layer weights.
    stats: EstimationStatistics, default None
        precomputed estimation statistics.
    n_jobs: int, default 1
        the number of workers used for the U blocks.
    variant: str, default 'exact'
        the interference moment evaluation, one of VARIANTS.

    Returns
    -------
    report: SeReport
        the deterministic per-user SE, zero standard errors.
    """
    if stats is None:
        stats = build_statistics(scn, corr, cfg)
    moments = closed_moments(stats, corr, scn, cfg, n_jobs=n_jobs,
                             variant=variant)
    name = decoder if isinstance(decoder, str) else "custom"
    return se_level1(moments, decoder, scn, cfg, metadata={
        "analytic": True, "combiner": "mr", "decoder": name,
        "variant": variant})
