"""Scaled observational precision (SOP) model with an unknown scalar variance.

The joint moments of (X, Y) are known up to a common factor V.  Beliefs about
V are carried as ``ScalarVarBelief(v_hat, k, eta, alpha)`` meaning
``V ~ (v_hat, k / eta)``, and are revised by the quadratic form
``tau = (y - mu_y)' Sigma_y^{-1} (y - mu_y)``.
"""

from dataclasses import dataclass, replace

import numpy as np

from .bayes_linear import MomentPair, _vec
from .errors import DegreesOfFreedomError, DimensionError, DomainError
from .linalg import spd_inv, spd_solve, sym_sqrt_inv, symmetrize
from .statespace import FilterState, StepReport, evolve_cov


@dataclass(frozen=True)
class ScalarVarBelief:
    v_hat: float
    k: float
    eta: float
    alpha: float = 1.0

    def __post_init__(self):
        for name in ("v_hat", "k", "eta", "alpha"):
            val = getattr(self, name)
            if not (np.isfinite(val) and val > 0):
                raise DomainError(f"{name} must be positive, got {val}")

    @property
    def variance(self):
        return self.k / self.eta


@dataclass(frozen=True)
class ConjugateSOPPrior:
    """``nu * s / V ~ chi^2_nu``."""

    nu: float
    s: float

    def __post_init__(self):
        if not (self.nu > 0 and self.s > 0):
            raise DomainError(f"need nu > 0 and s > 0, got nu={self.nu}, s={self.s}")


def sop_tau(j, y):
    y = _vec(y)
    if y.size != j.p:
        raise DimensionError(f"y has length {y.size}, expected {j.p}")
    d = y - j.mu_y
    return max(float(d @ spd_solve(j.sigma_y, d, name="sigma_y")), 0.0)


def sop_v_update(b, tau):
    """Revise V given T = tau; the result has eta increased by alpha."""
    if tau < 0:
        raise DomainError(f"tau must be nonnegative, got {tau}")
    eta = b.eta + b.alpha
    return replace(b, v_hat=(b.eta * b.v_hat + b.alpha * tau) / eta, eta=eta)


def sop_posterior_x(j, y, b):
    """Posterior moments of X given Y = y, V integrated out by its revised mean.

    ``j`` holds the scale-free moments: the covariances given V are V times
    those in ``j``.
    """
    a = j.regression()
    tau = sop_tau(j, y)
    v_post = sop_v_update(b, tau).v_hat
    mean = j.mu_x + a @ (_vec(y) - j.mu_y)
    cov = v_post * symmetrize(j.sigma_x - a @ j.sigma_y @ a.T)
    return MomentPair(mean, cov)


@dataclass(frozen=True)
class ConjugatePosterior:
    """Normal / inverse-gamma posterior: X | y is multivariate t."""

    t_dof: float
    t_location: np.ndarray
    t_scale: np.ndarray
    nu_s_post: float

    @property
    def t_cov(self):
        if self.t_dof <= 2:
            raise DegreesOfFreedomError(f"t covariance needs dof > 2, got {self.t_dof}")
        return self.t_dof / (self.t_dof - 2) * self.t_scale

    @property
    def v_mean(self):
        if self.t_dof <= 2:
            raise DegreesOfFreedomError(f"E(V | y) needs nu + p > 2, got {self.t_dof}")
        return self.nu_s_post / (self.t_dof - 2)

    @property
    def v_variance(self):
        d = self.t_dof
        if d <= 4:
            raise DegreesOfFreedomError(f"Var(V | y) needs nu + p > 4, got {d}")
        return 2 * self.nu_s_post ** 2 / ((d - 2) ** 2 * (d - 4))


def conjugate_posterior(prior, j, y):
    a = j.regression()
    tau = sop_tau(j, y)
    dof = prior.nu + j.p
    post = prior.nu * prior.s + tau
    return ConjugatePosterior(
        t_dof=dof,
        t_location=j.mu_x + a @ (_vec(y) - j.mu_y),
        t_scale=post / dof * symmetrize(j.sigma_x - a @ j.sigma_y @ a.T),
        nu_s_post=post,
    )


@dataclass(frozen=True)
class MatchedParams:
    """SOP settings that reproduce the conjugate posterior moments.

    ``v_hat``/``eta``/``alpha`` make the X posteriors identical.
    ``v_hat_prior_mean`` is the alternative choice E(V) = nu s / (nu - 2), under
    which the two posterior means of V differ by ``discrepancy``.
    """

    v_hat: float
    eta: float
    alpha: float
    v_hat_prior_mean: float | None
    discrepancy: float | None

    def belief(self, k):
        return ScalarVarBelief(self.v_hat, k, self.eta, self.alpha)


def conjugate_match_params(prior, p):
    nu, s = prior.nu, prior.s
    if nu + p <= 3:
        raise DegreesOfFreedomError(f"matching needs nu + p > 3, got {nu + p}")
    if nu > 2:
        prior_mean = nu * s / (nu - 2)
        disc = (p - 1) * nu * s / ((nu - 2) * (nu + p - 2))
    else:
        prior_mean = disc = None
    return MatchedParams(nu * s / (nu + p - 3), nu + p - 3, 1.0, prior_mean, disc)


def matching_k(prior, p, tau):
    """The K making Var(V | y) agree between the SOP and conjugate models."""
    d = prior.nu + p
    if d <= 4:
        raise DegreesOfFreedomError(f"K matching needs nu + p > 4, got {d}")
    return 2 * (tau + prior.nu * prior.s) ** 2 / ((d - 2) * (d - 4))


# -- time series filter I -----------------------------------------------------

def sop_filter_step(state, spec, y):
    """One step of the SOP state-space filter.

    Model: y_t = B x_t + eps, eps ~ (0, V Z); x_t = C x_{t-1} + w, w ~ (0, V W).
    ``state.p_mat`` is scale-free; the state posterior is (m_t, V_hat_t P_t).
    The report's ``q`` is the forecast covariance V_hat_{t-1} Q_t, and its
    ``e_std`` standardizes by that matrix.
    """
    b_ = state.var_belief
    if not isinstance(b_, ScalarVarBelief):
        raise DomainError("sop_filter_step needs a ScalarVarBelief state")
    if spec.z is None:
        raise DomainError("sop_filter_step needs the observation scale matrix Z")
    y = _vec(y)
    r = evolve_cov(state, spec)
    a_prior = spec.c @ state.m
    f = spec.b @ a_prior
    q = symmetrize(spec.b @ r @ spec.b.T + spec.z)
    q_inv = spd_inv(q, name="Q_t")
    gain = r @ spec.b.T @ q_inv
    e = y - f
    tau = max(float(e @ q_inv @ e), 0.0)
    belief = ScalarVarBelief(v_hat=(b_.eta * b_.v_hat + tau) / (b_.eta + 1.0),
                             k=b_.k, eta=b_.eta + 1.0, alpha=1.0)
    m = a_prior + gain @ e
    p_mat = symmetrize(r - gain @ q @ gain.T)
    fc = b_.v_hat * q
    new = FilterState(m=m, p_mat=p_mat, var_belief=belief, t=state.t + 1)
    report = StepReport(
        f=f, q=fc, e=e, e_std=sym_sqrt_inv(fc) @ e, v_hat=np.array([[belief.v_hat]]),
        m=m, p_mat=p_mat, x_cov=belief.v_hat * p_mat, tau=tau)
    return new, report
