"""Dense linear-algebra kernels used throughout the package.

Everything here is a thin, contract-checked wrapper over LAPACK (via
numpy/scipy): least-squares residuals, Pearson correlation, Cholesky
factorization and the positive-definite solves built on it.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_triangular
from scipy.linalg.lapack import dpotrf

from .errors import ContractViolation, NotPositiveDefinite

SYMMETRY_TOL = 1e-10


def _as_vector(x, name: str) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise ContractViolation(f"{name} must be 1-dimensional, got shape {v.shape}")
    return v


def _as_square_symmetric(a, name: str = "matrix") -> np.ndarray:
    m = np.asarray(a, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ContractViolation(f"{name} must be square, got shape {m.shape}")
    scale = max(1.0, float(np.abs(m).max())) if m.size else 1.0
    if float(np.abs(m - m.T).max()) > SYMMETRY_TOL * scale:
        raise ContractViolation(f"{name} is not symmetric within {SYMMETRY_TOL}")
    return m


def least_squares_residuals(y, Z=None) -> np.ndarray:
    """Residual of ``y`` after ordinary least squares on the columns of ``Z``.

    With no predictors (``Z`` is None or has zero columns) the convention is
    to return ``y`` minus its own mean, i.e. the residual of an
    intercept-only prediction.  Rank-deficient systems use the minimum-norm
    solution rather than failing.
    """
    yv = _as_vector(y, "y")
    if Z is None:
        return yv - yv.mean()
    Zm = np.asarray(Z, dtype=float)
    if Zm.ndim == 1:
        Zm = Zm[:, None]
    if Zm.ndim != 2:
        raise ContractViolation(f"Z must be 2-dimensional, got shape {Zm.shape}")
    if Zm.shape[1] == 0:
        return yv - yv.mean()
    if Zm.shape[0] != yv.shape[0]:
        raise ContractViolation(
            f"y has length {yv.shape[0]} but Z has {Zm.shape[0]} rows")
    beta, *_ = np.linalg.lstsq(Zm, yv, rcond=None)
    return yv - Zm @ beta


def pearson_correlation(u, v) -> float:
    """Sample Pearson correlation, with 0 returned for zero-variance input."""
    uv = _as_vector(u, "u")
    vv = _as_vector(v, "v")
    if uv.shape[0] != vv.shape[0]:
        raise ContractViolation(
            f"length mismatch: {uv.shape[0]} vs {vv.shape[0]}")
    if uv.shape[0] < 2:
        raise ContractViolation("correlation needs at least 2 observations")
    uc = uv - uv.mean()
    vc = vv - vv.mean()
    nu = float(np.sqrt(uc @ uc))
    nv = float(np.sqrt(vc @ vc))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    r = float(uc @ vc) / (nu * nv)
    return min(1.0, max(-1.0, r))


def cholesky(a) -> np.ndarray:
    """Lower-triangular factor L with L @ L.T equal to the input."""
    m = _as_square_symmetric(a)
    c, info = dpotrf(m, lower=1, clean=1, overwrite_a=0)
    if info > 0:
        raise NotPositiveDefinite(pivot=int(info) - 1)
    if info < 0:
        raise ContractViolation(f"illegal value in argument {-info} of dpotrf")
    return c


def invert_pd(a) -> np.ndarray:
    """Inverse of a symmetric positive-definite matrix, symmetrized."""
    ell = cholesky(a)
    inv_l = solve_triangular(ell, np.eye(ell.shape[0]), lower=True)
    inv = inv_l.T @ inv_l
    return (inv + inv.T) / 2.0


def log_det_pd(a) -> float:
    """Natural log-determinant of a symmetric positive-definite matrix."""
    ell = cholesky(a)
    return float(2.0 * np.sum(np.log(np.diag(ell))))
