"""Generalized observational precision model: a full p x p observation
covariance V entering additively as Var(Y | V) = Sigma_y + V.

Beliefs are ``vech(V) ~ (vech(v_hat), k / eta)`` and are revised by the
statistic ``tau = (y - mu_y)(y - mu_y)' - Sigma_y``, which is unbiased for V.
"""

from dataclasses import dataclass, replace

import numpy as np

from .bayes_linear import MomentPair, _mat, _vec
from .errors import DimensionError, DomainError, SingularMatrixError
from .linalg import (check_symmetric, duplication_matrix, psd_project, spd_inv,
                     symmetrize, vech_dim)


@dataclass(frozen=True)
class MatrixVarBelief:
    """``v_hat`` may be indefinite; only ``k`` must be PSD."""

    v_hat: np.ndarray
    k: np.ndarray
    eta: float
    alpha: float = 1.0

    def __post_init__(self):
        v = check_symmetric(self.v_hat, "v_hat", rtol=1e-9)
        k = check_symmetric(self.k, "K", rtol=1e-9)
        d = vech_dim(v.shape[0])
        if k.shape != (d, d):
            raise DimensionError(f"K must be {d}x{d} for a {v.shape[0]}x{v.shape[0]} V")
        if np.linalg.eigvalsh(k)[0] < -1e-10 * max(np.abs(k).max(), 1.0):
            raise DomainError("K must be positive semi-definite")
        if not (self.eta > 0 and self.alpha > 0):
            raise DomainError(f"eta and alpha must be positive, got {self.eta}, {self.alpha}")
        object.__setattr__(self, "v_hat", symmetrize(v))
        object.__setattr__(self, "k", symmetrize(k))

    @property
    def p(self):
        return self.v_hat.shape[0]

    @property
    def cov_vech(self):
        return self.k / self.eta

    def regression(self):
        """Regression matrix of vech(V) on vech(T)."""
        return self.alpha / (self.eta + self.alpha) * np.eye(vech_dim(self.p))


def gsop_tau(mu_y, sigma_y, y):
    d = _vec(y) - _vec(mu_y)
    sigma_y = _mat(sigma_y)
    if sigma_y.shape != (d.size, d.size):
        raise DimensionError(f"sigma_y is {sigma_y.shape}, y has length {d.size}")
    return symmetrize(np.outer(d, d) - sigma_y)


def gsop_v_update(b, tau):
    """Revised belief: mean (eta V_hat + alpha tau)/(eta + alpha), vech
    covariance K/(eta + alpha).  The mean is returned raw, possibly indefinite."""
    tau = _mat(tau)
    if tau.shape != b.v_hat.shape:
        raise DimensionError(f"tau is {tau.shape}, V is {b.v_hat.shape}")
    eta = b.eta + b.alpha
    return replace(b, v_hat=(b.eta * b.v_hat + b.alpha * symmetrize(tau)) / eta, eta=eta)


def posterior_v_mean(b, tau):
    return gsop_v_update(b, tau).v_hat


def gsop_posterior_fixed_A(j, y, b, a=None, printed_form=False):
    """Posterior of X when Cov(X, Y | V) = A Var(Y | V) with A free of V.

    The covariance is Sigma_x - A {Sigma_y + E(V | tau)} A'.  With
    ``printed_form=True`` the Sigma_y term is instead divided by (eta + alpha)
    along with the V terms, i.e. Sigma_x - A(Sigma_y + eta V_hat + alpha tau)A'
    / (eta + alpha).
    """
    a = j.regression() if a is None else _mat(a)
    if a.shape != (j.m, j.p):
        raise DimensionError(f"A must be {j.m}x{j.p}")
    y = _vec(y)
    tau = gsop_tau(j.mu_y, j.sigma_y, y)
    s = b.eta + b.alpha
    v_part = b.eta * b.v_hat + b.alpha * tau
    inner = (j.sigma_y + v_part) / s if printed_form else j.sigma_y + v_part / s
    mean = j.mu_x + a @ (y - j.mu_y)
    return MomentPair(mean, symmetrize(j.sigma_x - a @ inner @ a.T))


@dataclass(frozen=True)
class VtildePair:
    """Approximate mean and vech covariance of (Sigma_y + V)^{-1}."""

    v_tilde: np.ndarray
    v_tilde2: np.ndarray


def vtilde_pair(sigma_y, b, tau):
    s = b.eta + b.alpha
    inner = symmetrize(s * _mat(sigma_y) + b.eta * b.v_hat + b.alpha * _mat(tau))
    w = np.linalg.eigvalsh(inner)
    if w[0] <= 0:
        raise SingularMatrixError(
            f"(eta+alpha) Sigma_y + eta V_hat + alpha tau is not positive definite "
            f"(eigenvalue {w[0]:.3e})", eigenvalue=w[0])
    return VtildePair(s * spd_inv(inner, name="Sigma_y + E(V | tau)"), b.k / s)


def kronecker_correction(d, left, v_tilde2):
    """(d' kron L) G V2 G' (d kron L') for L = left (m x p).

    This is the covariance of L M d when vech(M) has covariance ``v_tilde2``.
    """
    d = _vec(d)
    left = _mat(left)
    g = duplication_matrix(d.size)
    h = np.kron(d[None, :], left) @ g
    return symmetrize(h @ v_tilde2 @ h.T)


def gsop_regression_posterior(b_design, mu_x, sigma_x, y, vt, mu_y):
    """Posterior of X in y = B x + eps, eps ~ (0, V), V unknown."""
    b_design = _mat(b_design)
    sigma_x = _mat(sigma_x)
    mu_x = _vec(mu_x)
    d = _vec(y) - _vec(mu_y)
    p, m = b_design.shape
    if sigma_x.shape != (m, m) or mu_x.size != m or d.size != p:
        raise DimensionError("regression dimensions disagree")
    sxb = sigma_x @ b_design.T
    mean = mu_x + sxb @ vt.v_tilde @ d
    cov = sigma_x - sxb @ vt.v_tilde @ sxb.T + kronecker_correction(d, sxb, vt.v_tilde2)
    return MomentPair(mean, symmetrize(cov))


def project_v_hat(v_hat, floor=None):
    """PSD projection for callers that must invert Sigma_y + V_hat."""
    return psd_project(v_hat, floor)
