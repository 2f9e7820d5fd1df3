# -*- coding: utf-8 -*-
##########################################################################
# NSAp - Copyright (C) CEA, 2021
# Distributed under the terms of the CeCILL-B license, as published by
# the CEA-CNRS-INRIA. Refer to the LICENSE file or to
# http://www.cecill.info/licences/Licence_CeCILL-B_V1-en.html
# for details.
##########################################################################

"""
Hermitian linear algebra helpers working on stacks of matrices.

Vectorization stacks columns: for an (N, U) matrix X the entry X[p, n]
lands at index n * N + p of vec(X), so that
vec(A X B) = (B^T kron A) vec(X).
"""

# Imports
import warnings
import numpy as np
from scipy.linalg import cho_solve


def hermitian_part(arr):
    """ Hermitian part (A + A^H) / 2 of a (stack of) square matrices.
    """
    arr = np.asarray(arr)
    return (arr + np.conj(np.swapaxes(arr, -1, -2))) / 2


def asymmetry(arr):
    """ Relative distance ||A - A^H|| / ||A|| (0 for a null matrix).
    """
    arr = np.asarray(arr)
    norm = np.linalg.norm(arr)
    if norm == 0:
        return 0.
    return float(np.linalg.norm(
        arr - np.conj(np.swapaxes(arr, -1, -2))) / norm)


def clip_psd(arr, tol=1e-10, name="matrix"):
    """ Project a Hermitian matrix on the PSD cone.

    Negative eigenvalues are set to zero. A warning is emitted when an
    eigenvalue below -tol * max-eigenvalue is removed.

    Parameters
    ----------
    arr: array (..., n, n)
        Hermitian matrices.
    tol: float, default 1e-10
        relative tolerance on the negative eigenvalues.
    name: str, default 'matrix'
        the matrix name used in the warning.

    Returns
    -------
    psd: array (..., n, n)
        the clipped matrices.
    """
    eigvals, eigvecs = np.linalg.eigh(hermitian_part(arr))
    if np.all(eigvals >= 0):
        return np.asarray(arr)
    scale = np.max(np.abs(eigvals), axis=-1, keepdims=True)
    if np.any(eigvals < -tol * scale):
        warnings.warn(
            "Negative eigenvalues of the {0} clipped to zero (min "
            "{1:.3e}).".format(name, float(eigvals.min())), UserWarning)
    eigvals = np.clip(eigvals, 0, None)
    return (eigvecs * eigvals[..., None, :]) @ np.conj(
        np.swapaxes(eigvecs, -1, -2))


def psd_sqrtm(arr, tol=1e-10):
    """ Principal square root of a Hermitian PSD matrix.

    Eigenvalues below tol * max-eigenvalue are treated as zero.

    Parameters
    ----------
    arr: array (..., n, n)
        Hermitian PSD matrices.
    tol: float, default 1e-10
        relative eigenvalue floor.

    Returns
    -------
    root: array (..., n, n)
        the unique PSD square root.
    """
    eigvals, eigvecs = np.linalg.eigh(hermitian_part(arr))
    scale = np.max(np.abs(eigvals), axis=-1, keepdims=True)
    eigvals = np.where(eigvals < tol * scale, 0., eigvals)
    root = (eigvecs * np.sqrt(eigvals)[..., None, :]) @ np.conj(
        np.swapaxes(eigvecs, -1, -2))
    if np.isrealobj(arr):
        root = root.real
    return root


def hermitian_solve(arr, rhs, jitter=False, name="matrix"):
    """ Solve A X = B for Hermitian positive definite A.

    The matrices are factored at once and every system is then solved from
    its Cholesky factor. Leading dimensions broadcast. With jitter, a
    failed factorization is retried once with a diagonal loading of
    1e-10 times the mean eigenvalue.

    Parameters
    ----------
    arr: array (..., n, n)
        Hermitian positive definite matrices.
    rhs: array (..., n, k)
        right hand sides.
    jitter: bool, default False
        retry a failed factorization with a small diagonal loading.
    name: str, default 'matrix'
        the matrix name used in error messages.

    Returns
    -------
    sol: array (..., n, k)
        the solutions.
    """
    arr = hermitian_part(arr)
    rhs = np.asarray(rhs)
    try:
        chol = np.linalg.cholesky(arr)
    except np.linalg.LinAlgError as exc:
        if not jitter:
            raise np.linalg.LinAlgError(
                "The {0} is not positive definite: {1}.".format(name, exc))
        size = arr.shape[-1]
        load = 1e-10 * np.abs(np.trace(arr, axis1=-2, axis2=-1)) / size
        warnings.warn(
            "Diagonal loading added to the {0} factorization.".format(name),
            UserWarning)
        try:
            chol = np.linalg.cholesky(
                arr + load[..., None, None] * np.eye(size))
        except np.linalg.LinAlgError as exc:
            raise np.linalg.LinAlgError(
                "The {0} is singular even after diagonal loading: "
                "{1}.".format(name, exc))
    batch = np.broadcast(chol[..., 0, 0], rhs[..., 0, 0]).shape
    chol = np.broadcast_to(chol, batch + chol.shape[-2:])
    rhs = np.broadcast_to(rhs, batch + rhs.shape[-2:])
    sol = np.empty(rhs.shape, dtype=np.result_type(chol, rhs))
    for idx in np.ndindex(*batch):
        sol[idx] = cho_solve((chol[idx], True), rhs[idx], check_finite=False)
    return sol


def log2det_eye_plus(arr):
    """ log2 det(I + S) of Hermitian PSD matrices S.

    Eigenvalues are floored at zero before the logarithm.

    Parameters
    ----------
    arr: array (..., n, n)
        the Hermitian matrices.

    Returns
    -------
    value: array (...)
        the log-determinants in bits.
    """
    eigvals = np.linalg.eigvalsh(hermitian_part(arr))
    return np.sum(np.log2(1 + np.clip(eigvals, 0, None)), axis=-1)


def sub_block(arr, row, col, size, col_size=None):
    """ Block (row, col) of a matrix partitioned in size x col_size blocks.
    """
    col_size = col_size or size
    return arr[..., row * size: (row + 1) * size,
               col * col_size: (col + 1) * col_size]


def vec(arr):
    """ Column-stacking vectorization of the two last axes.
    """
    arr = np.asarray(arr)
    shape = arr.shape[:-2] + (arr.shape[-2] * arr.shape[-1], )
    return np.swapaxes(arr, -1, -2).reshape(shape)


def unvec(arr, n_rows):
    """ Inverse of vec for matrices with n_rows rows.
    """
    arr = np.asarray(arr)
    n_cols = arr.shape[-1] // n_rows
    if n_cols * n_rows != arr.shape[-1]:
        raise ValueError(
            "Vector length {0} is not a multiple of {1}.".format(
                arr.shape[-1], n_rows))
    return np.swapaxes(
        arr.reshape(arr.shape[:-1] + (n_cols, n_rows)), -1, -2)


def block_diag_stack(blocks):
    """ Assemble block-diagonal matrices.

    Parameters
    ----------
    blocks: array (..., M, a, b)
        the diagonal blocks.

    Returns
    -------
    out: array (..., M * a, M * b)
        the block-diagonal matrices.
    """
    blocks = np.asarray(blocks)
    n_blocks, n_rows, n_cols = blocks.shape[-3:]
    out = np.zeros(blocks.shape[:-3] + (n_blocks * n_rows, n_blocks * n_cols),
                   dtype=blocks.dtype)
    for idx in range(n_blocks):
        out[..., idx * n_rows: (idx + 1) * n_rows,
            idx * n_cols: (idx + 1) * n_cols] = blocks[..., idx, :, :]
    return out
