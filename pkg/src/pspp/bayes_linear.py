"""Moment-only conditioning and the Bayes linear rules it coincides with.

Everything here works from first and second moments.  ``pspp1_condition``
updates ``X`` given ``Y = y`` assuming the residual ``X - A Y`` is second
order independent of ``Y``; ``theorem1_check`` verifies on a finite discrete
law that a linear posterior mean (with constant posterior variance) occurs
exactly when that postulate holds.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError
from .linalg import psd_repair, regression_matrix, symmetrize


def _vec(x):
    return np.atleast_1d(np.asarray(x, dtype=float)).ravel()


def _mat(x):
    return np.atleast_2d(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class MomentPair:
    """Mean vector and covariance matrix of a partially specified law."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean, cov = _vec(self.mean), _mat(self.cov)
        if cov.shape != (mean.size, mean.size):
            raise DimensionError(f"cov shape {cov.shape} does not match mean length {mean.size}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @classmethod
    def scalar(cls, mean, var):
        return cls(np.array([mean]), np.array([[var]]))


@dataclass(frozen=True)
class JointMoments:
    """First two moments of (X, Y), X of dimension m and Y of dimension p."""

    mu_x: np.ndarray
    mu_y: np.ndarray
    sigma_x: np.ndarray
    sigma_y: np.ndarray
    cov_xy: np.ndarray

    def __post_init__(self):
        mu_x, mu_y = _vec(self.mu_x), _vec(self.mu_y)
        m, p = mu_x.size, mu_y.size
        sx, sy, cxy = _mat(self.sigma_x), _mat(self.sigma_y), _mat(self.cov_xy)
        if sx.shape != (m, m) or sy.shape != (p, p) or cxy.shape != (m, p):
            raise DimensionError(
                f"inconsistent shapes: mu_x {m}, mu_y {p}, sigma_x {sx.shape}, "
                f"sigma_y {sy.shape}, cov_xy {cxy.shape}")
        for name, val in (("mu_x", mu_x), ("mu_y", mu_y), ("sigma_x", sx),
                          ("sigma_y", sy), ("cov_xy", cxy)):
            object.__setattr__(self, name, val)

    @property
    def m(self):
        return self.mu_x.size

    @property
    def p(self):
        return self.mu_y.size

    def stacked_cov(self):
        return np.block([[self.sigma_x, self.cov_xy], [self.cov_xy.T, self.sigma_y]])

    def regression(self):
        return regression_matrix(self.cov_xy, self.sigma_y)


def pspp1_condition(j, y):
    """Posterior moments of X given Y = y under ``X - A_xy Y`` second-order
    independent of ``Y``."""
    y = _vec(y)
    if y.size != j.p:
        raise DimensionError(f"y has length {y.size}, expected {j.p}")
    a = j.regression()
    mean = j.mu_x + a @ (y - j.mu_y)
    cov = psd_repair(j.sigma_x - a @ j.sigma_y @ a.T, name="posterior covariance")
    return MomentPair(mean, cov)


def _positive(name, value, allow_zero=False):
    if not np.isfinite(value) or value < 0 or (value == 0 and not allow_zero):
        raise DomainError(f"{name} must be {'nonnegative' if allow_zero else 'positive'}, got {value}")


def bayes_linear_scalar(prior, v, y):
    """Bayes linear rule for the scalar model Y | X, V ~ (X, V).

    Returns the adjusted mean and its posterior expected risk.
    """
    ex, varx = float(prior.mean[0]), float(prior.cov[0, 0])
    _positive("Var(X)", varx)
    _positive("V", v)
    mu = (ex * v + y * varx) / (v + varx)
    risk = varx * v / (varx + v)
    return mu, risk


def goldstein_variance_modified(prior_x, prior_v, var_ystar, ystar, y):
    """Variance-modified Bayes linear rule.

    ``ystar`` is an observation of a statistic unbiased for V and ``var_ystar``
    its prior variance; both are taken as given.  Returns ``(v_star, mu_star)``.
    """
    ex, varx = float(prior_x.mean[0]), float(prior_x.cov[0, 0])
    ev, varv = float(prior_v.mean[0]), float(prior_v.cov[0, 0])
    _positive("Var(X)", varx)
    _positive("Var(Y*)", var_ystar)
    _positive("Var(V)", varv, allow_zero=True)
    v_star = (ev * var_ystar + ystar * varv) / (var_ystar + varv)
    _positive("V*", v_star)
    a_star = varx / (varx + v_star)
    return v_star, ex + a_star * (y - ex)


@dataclass(frozen=True)
class Theorem1Report:
    linear_mean: bool
    so_independent: bool
    a_xy: np.ndarray
    max_mean_dev: float
    max_var_dev: float
    max_resid_mean_dev: float

    @property
    def equivalent(self):
        return self.linear_mean == self.so_independent


def theorem1_check(xs, ys, probs, rtol=1e-9):
    """Check linear-mean vs second-order-independence on a discrete joint law.

    ``xs`` (n x m), ``ys`` (n x p) and ``probs`` (n,) list the support points
    of (X, Y); repeated y values are grouped.  "Constant over the support"
    means a maximum deviation of at most ``rtol`` times the natural scale.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    xs = xs.reshape(len(xs), -1)
    ys = ys.reshape(len(ys), -1)
    w = np.asarray(probs, dtype=float).ravel()
    if not (len(xs) == len(ys) == len(w)):
        raise DimensionError("xs, ys and probs must have the same length")
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
        raise DomainError("probabilities must be nonnegative and sum to 1")
    keep = w > 0
    xs, ys, w = xs[keep], ys[keep], w[keep]

    uniq, group = np.unique(ys, axis=0, return_inverse=True)
    group = group.ravel()
    if len(uniq) < 2:
        raise DomainError("Y is degenerate: a single support point")

    mu_x, mu_y = w @ xs, w @ ys
    dx, dy = xs - mu_x, ys - mu_y
    sigma_y = (dy * w[:, None]).T @ dy
    cov_xy = (dx * w[:, None]).T @ dy
    a = regression_matrix(cov_xy, symmetrize(sigma_y))

    scale_x = np.sqrt(max(np.max(np.diag((dx * w[:, None]).T @ dx)), 1e-300))
    resid = xs - ys @ a.T
    scale_mean = scale_x + np.max(np.abs(xs)) + np.max(np.abs(ys @ a.T))

    cond_mean, cond_var, resid_mean = [], [], []
    for g in range(len(uniq)):
        sel = group == g
        wg = w[sel] / w[sel].sum()
        mx = wg @ xs[sel]
        d = xs[sel] - mx
        cond_mean.append(mx)
        cond_var.append((d * wg[:, None]).T @ d)
        resid_mean.append(wg @ resid[sel])
    cond_mean, cond_var, resid_mean = map(np.array, (cond_mean, cond_var, resid_mean))

    linear_pred = mu_x + (uniq - mu_y) @ a.T
    mean_dev = float(np.max(np.abs(cond_mean - linear_pred)))
    var_dev = float(np.max(np.abs(cond_var - cond_var[0])))
    resid_dev = float(np.max(np.abs(resid_mean - resid_mean[0])))

    tol_mean = rtol * scale_mean
    tol_var = rtol * scale_x ** 2
    # Var(X - A Y | Y = y) equals Var(X | Y = y) because A y is fixed given y
    const_var = var_dev <= tol_var
    return Theorem1Report(
        linear_mean=bool(mean_dev <= tol_mean and const_var),
        so_independent=bool(resid_dev <= tol_mean and const_var),
        a_xy=a,
        max_mean_dev=mean_dev,
        max_var_dev=var_dev,
        max_resid_mean_dev=resid_dev,
    )
