"""Symmetric-matrix utilities: vech/unvech, duplication matrix, symmetric
square roots and guarded covariance inverses.

vech stacks the columns of the lower triangle, so for a 3x3 matrix the order
is S11, S21, S31, S22, S32, S33.  The duplication matrix is built from the
same index map, which keeps ``vec(S) == duplication_matrix(p) @ vech(S)``.
"""

from functools import lru_cache

import numpy as np
import scipy.linalg

from .errors import DimensionError, NotPSDError, SingularMatrixError

COND_CAP = 1e12
PSD_TOL = 1e-10
SYM_RTOL = 1e-12


def symmetrize(m):
    m = np.asarray(m, dtype=float)
    return 0.5 * (m + m.T)


def as_square(s, name="matrix"):
    s = np.atleast_2d(np.asarray(s, dtype=float))
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {s.shape}")
    if not np.all(np.isfinite(s)):
        raise DimensionError(f"{name} has non-finite entries")
    return s


def check_symmetric(s, name="matrix", rtol=SYM_RTOL):
    s = as_square(s, name)
    scale = max(np.max(np.abs(s)), 1.0)
    if np.max(np.abs(s - s.T)) > rtol * scale:
        raise DimensionError(f"{name} is not symmetric")
    return s


def vech_dim(p):
    return p * (p + 1) // 2


def dim_from_vech(d):
    p = int(round((np.sqrt(8 * d + 1) - 1) / 2))
    if vech_dim(p) != d:
        raise DimensionError(f"length {d} is not a triangular number")
    return p


@lru_cache(maxsize=None)
def _lower_index(p):
    # column-major lower triangle == row-major upper triangle of the transpose
    cols, rows = np.triu_indices(p)
    return rows, cols


def vech(s):
    """Half-vectorization of a symmetric matrix (lower triangle, by column)."""
    s = check_symmetric(s, "vech argument")
    rows, cols = _lower_index(s.shape[0])
    return s[rows, cols].copy()


def unvech(v, dim=None):
    v = np.asarray(v, dtype=float).ravel()
    p = dim_from_vech(v.size)
    if dim is not None and dim != p:
        raise DimensionError(f"vech length {v.size} does not match dimension {dim}")
    rows, cols = _lower_index(p)
    s = np.zeros((p, p))
    s[rows, cols] = v
    s[cols, rows] = v
    return s


def vec(m):
    """Stack the columns of ``m``."""
    return np.asarray(m, dtype=float).reshape(-1, order="F")


@lru_cache(maxsize=None)
def _duplication(p):
    g = np.zeros((p * p, vech_dim(p)))
    rows, cols = _lower_index(p)
    for k, (i, j) in enumerate(zip(rows, cols)):
        g[j * p + i, k] = 1.0
        g[i * p + j, k] = 1.0
    g.flags.writeable = False
    return g


def duplication_matrix(p):
    """The p^2 x p(p+1)/2 matrix G with vec(S) = G vech(S)."""
    if int(p) != p or p < 1:
        raise DimensionError(f"duplication matrix needs p >= 1, got {p}")
    return _duplication(int(p))


def _eigh_checked(s, name, tol=PSD_TOL):
    s = symmetrize(as_square(s, name))
    w, u = np.linalg.eigh(s)
    norm = max(np.max(np.abs(w)), 0.0) if w.size else 0.0
    if w[0] < -tol * max(norm, 1e-300):
        raise NotPSDError(f"{name} is not positive semi-definite "
                          f"(smallest eigenvalue {w[0]:.3e})", eigenvalue=w[0])
    return np.clip(w, 0.0, None), u


def sym_sqrt(s):
    """Symmetric PSD square root M with M @ M == s."""
    w, u = _eigh_checked(s, "sym_sqrt argument")
    return symmetrize((u * np.sqrt(w)) @ u.T)


def sym_sqrt_inv(s, cond_cap=COND_CAP):
    """Symmetric square root of the inverse of a PD matrix."""
    w, u = _eigh_checked(s, "sym_sqrt_inv argument")
    _guard_condition(w, cond_cap, "sym_sqrt_inv argument")
    return symmetrize((u / np.sqrt(w)) @ u.T)


def _guard_condition(w, cond_cap, name):
    lo, hi = w[0], w[-1]
    if lo <= 0 or hi / lo > cond_cap:
        cond = np.inf if lo <= 0 else hi / lo
        raise SingularMatrixError(f"{name} is singular or ill-conditioned "
                                  f"(condition estimate {cond:.3e}, smallest "
                                  f"eigenvalue {lo:.3e})",
                                  condition=cond, eigenvalue=lo)


def check_pd(s, name="matrix", cond_cap=COND_CAP):
    w = np.linalg.eigvalsh(symmetrize(as_square(s, name)))
    _guard_condition(w, cond_cap, name)
    return w


def spd_solve(a, b, cond_cap=COND_CAP, name="matrix"):
    """Solve ``a x = b`` for symmetric PD ``a`` with a condition guard."""
    a = symmetrize(as_square(a, name))
    check_pd(a, name, cond_cap)
    c = scipy.linalg.cho_factor(a, lower=True, check_finite=False)
    return scipy.linalg.cho_solve(c, np.asarray(b, dtype=float), check_finite=False)


def spd_inv(a, cond_cap=COND_CAP, name="matrix"):
    a = as_square(a, name)
    return symmetrize(spd_solve(a, np.eye(a.shape[0]), cond_cap, name))


def regression_matrix(cov_xy, var_y, cond_cap=COND_CAP):
    """Cov(X, Y) Var(Y)^{-1}."""
    var_y = check_symmetric(var_y, "var_y", rtol=1e-9)
    cov_xy = np.atleast_2d(np.asarray(cov_xy, dtype=float))
    if cov_xy.shape[1] != var_y.shape[0]:
        raise DimensionError(f"cov_xy has {cov_xy.shape[1]} columns, var_y is "
                             f"{var_y.shape[0]}x{var_y.shape[0]}")
    return spd_solve(var_y, cov_xy.T, cond_cap, "var_y").T


def psd_repair(s, tol=PSD_TOL, name="matrix"):
    """Clip eigenvalues in (-tol*|s|, 0) to zero; raise below that."""
    s = symmetrize(s)
    w, u = np.linalg.eigh(s)
    if w.size == 0 or w[0] >= 0:
        return s
    scale = max(np.max(np.abs(w)), 1e-300)
    if w[0] < -tol * scale:
        raise NotPSDError(f"{name} has a negative eigenvalue {w[0]:.3e}", eigenvalue=w[0])
    return symmetrize((u * np.clip(w, 0.0, None)) @ u.T)


def psd_project(s, floor=None):
    """Eigenvalue-clipping projection onto {M : M >= floor * I}.

    The default floor is 1e-8 * |trace(s)| / p.
    """
    s = symmetrize(as_square(s))
    p = s.shape[0]
    if floor is None:
        floor = 1e-8 * max(abs(np.trace(s)), 1e-300) / p
    w, u = np.linalg.eigh(s)
    return symmetrize((u * np.maximum(w, floor)) @ u.T)
