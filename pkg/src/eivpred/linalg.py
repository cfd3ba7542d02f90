"""Dense symmetric-matrix utilities.

All matrices handled here are small (typically fewer than 20 rows), so exact
O(d^3) eigendecomposition methods are used throughout.  Functions accept any
array-like that is exactly symmetric and return plain ``numpy`` arrays.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidMatrix, NotPSD

__all__ = [
    "as_symmetric",
    "pinv",
    "sym_sqrt",
    "cholesky_psd",
    "min_eigenvalue",
]


def as_symmetric(a, *, name: str = "matrix") -> np.ndarray:
    """Validate and return a square symmetric float array.

    Raises InvalidMatrix on non-finite entries, non-square shape, or
    asymmetry beyond exact storage (a tiny relative tolerance is allowed so
    that products of symmetric matrices pass).
    """
    m = np.asarray(a, dtype=float)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidMatrix(f"{name} must be square, got shape {m.shape}")
    if m.shape[0] < 1:
        raise InvalidMatrix(f"{name} must have dimension >= 1")
    if not np.all(np.isfinite(m)):
        raise InvalidMatrix(f"{name} contains non-finite entries")
    scale = np.max(np.abs(m)) if m.size else 0.0
    if scale > 0 and np.max(np.abs(m - m.T)) > 1e-12 * scale:
        raise InvalidMatrix(f"{name} is not symmetric")
    # store exactly symmetrically
    return 0.5 * (m + m.T)


def pinv(a, rank_tol: float | None = None) -> np.ndarray:
    """Moore-Penrose pseudo-inverse of a symmetric matrix.

    Computed by symmetric eigendecomposition; eigenvalues with
    ``|lam| <= rank_tol * max|lam|`` are treated as zero.  ``rank_tol``
    defaults to ``dim * machine epsilon``.
    """
    m = as_symmetric(a)
    if rank_tol is None:
        rank_tol = m.shape[0] * np.finfo(float).eps
    if rank_tol < 0:
        raise InvalidMatrix("rank_tol must be nonnegative")
    w, v = np.linalg.eigh(m)
    cutoff = rank_tol * np.max(np.abs(w)) if w.size else 0.0
    inv_w = np.where(np.abs(w) > cutoff, 1.0 / np.where(w == 0, 1.0, w), 0.0)
    out = (v * inv_w) @ v.T
    return 0.5 * (out + out.T)


def sym_sqrt(a, rank_tol: float | None = None) -> np.ndarray:
    """Symmetric square root S of a PSD matrix, with S @ S == a.

    Eigenvalues within ``-rank_tol * max(lam)`` of zero are clamped to 0;
    anything more negative raises NotPSD.
    """
    m = as_symmetric(a)
    if rank_tol is None:
        rank_tol = m.shape[0] * np.finfo(float).eps * 16
    w, v = np.linalg.eigh(m)
    top = np.max(w) if w.size else 0.0
    floor = -rank_tol * max(top, 1.0)
    if np.min(w) < floor:
        raise NotPSD(f"matrix has eigenvalue {np.min(w):.3e} below tolerance")
    w = np.maximum(w, 0.0)
    out = (v * np.sqrt(w)) @ v.T
    return 0.5 * (out + out.T)


def cholesky_psd(a, rank_tol: float | None = None) -> np.ndarray:
    """Lower factor L with L @ L.T == a for PSD input.

    Positive definite input uses the standard Cholesky factorization.  For
    semidefinite input (singular to rounding) a diagonally pivoted
    factorization is used; the returned factor still reconstructs ``a`` but
    is lower-triangular only up to the pivoting permutation.  Indefinite
    input raises NotPSD.
    """
    m = as_symmetric(a)
    try:
        return np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        pass
    d = m.shape[0]
    if rank_tol is None:
        rank_tol = d * np.finfo(float).eps * 16
    scale = max(np.max(np.abs(np.diag(m))), 1.0)
    if np.min(np.diag(m)) < -rank_tol * scale:
        raise NotPSD("diagonal has a negative entry beyond tolerance")
    # outer-product Cholesky with diagonal pivoting; stops at numerical rank
    work = m.copy()
    perm = np.arange(d)
    low = np.zeros((d, d))
    for k in range(d):
        j = k + int(np.argmax(np.diag(work)[k:]))
        if j != k:
            work[[k, j], :] = work[[j, k], :]
            work[:, [k, j]] = work[:, [j, k]]
            low[[k, j], :k] = low[[j, k], :k]
            perm[[k, j]] = perm[[j, k]]
        piv = work[k, k]
        if piv <= rank_tol * scale:
            if piv < -rank_tol * scale:
                raise NotPSD("pivot became negative beyond tolerance")
            break
        low[k, k] = np.sqrt(piv)
        low[k + 1 :, k] = work[k + 1 :, k] / low[k, k]
        work[k + 1 :, k + 1 :] -= np.outer(low[k + 1 :, k], low[k + 1 :, k])
    out = np.zeros((d, d))
    out[perm, :] = low
    return out


def min_eigenvalue(a) -> float:
    """Smallest eigenvalue of a symmetric matrix."""
    m = as_symmetric(a)
    return float(np.min(np.linalg.eigvalsh(m)))
