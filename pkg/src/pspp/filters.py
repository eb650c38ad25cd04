"""Sequential filters for y_t = B x_t + eps_t, x_t = C x_{t-1} + w_t.

``pspp_dlm_step`` learns an unknown observation covariance V alongside the
state; ``kalman_step_known_v`` is the textbook recursion with V given.  Both
are pure functions of (state, spec, y).
"""

from dataclasses import dataclass

import numpy as np

from .bayes_linear import _vec
from .errors import DimensionError, DomainError, NotPSDError, SingularMatrixError
from .gsop import MatrixVarBelief, kronecker_correction
from .linalg import COND_CAP, PSD_TOL, psd_project, sym_sqrt_inv, symmetrize, vech_dim
from .sop import ScalarVarBelief, sop_filter_step
from .statespace import (FilterState, StateSpaceSpec, StepReport, evolve_cov,
                         standardized_error, unchecked)

__all__ = [
    "FilterState", "StateSpaceSpec", "StepReport", "ForecastMetrics", "evolve_cov",
    "standardized_error", "pspp_dlm_step", "kalman_step_known_v", "sop_filter_step",
    "forecast_metrics", "run_filter", "pspp_initial_state",
]


def _pd_inverse(mat, name, cond_cap=COND_CAP):
    w, u = np.linalg.eigh(mat)
    if w[0] <= 0 or w[-1] / w[0] > cond_cap:
        cond = np.inf if w[0] <= 0 else w[-1] / w[0]
        raise SingularMatrixError(f"{name} is not positive definite or is ill-conditioned "
                                  f"(smallest eigenvalue {w[0]:.3e})",
                                  condition=cond, eigenvalue=w[0])
    return symmetrize((u / w) @ u.T)


def effective_v(v_hat, floor=None):
    """V_hat itself when PSD, else its eigenvalue-clipped projection."""
    w = np.linalg.eigvalsh(v_hat)
    if w[0] >= -PSD_TOL * max(np.abs(w).max(), 1.0):
        return v_hat, False
    return psd_project(v_hat, floor), True


def pspp_dlm_step(state, spec, y, project_floor=None):
    """One step of the filter with unknown observation covariance V (alpha = 1).

    Q_t uses the V estimate from before y_t is seen, the posterior uses the
    revised one.  The belief keeps the raw V_hat_t, which can be indefinite.
    Wherever V_hat enters a covariance (Q_t and the inverse behind V~_t) an
    indefinite V_hat is replaced by its PSD projection and the report's
    ``projected`` flag is set; otherwise P_t itself can turn indefinite.
    """
    bel = state.var_belief
    if not isinstance(bel, MatrixVarBelief):
        raise DomainError("pspp_dlm_step needs a MatrixVarBelief state")
    if bel.alpha != 1.0:
        raise DomainError("the filter uses alpha = 1")
    y = _vec(y)
    if y.size != spec.p or bel.p != spec.p:
        raise DimensionError(f"observation length {y.size}, model p = {spec.p}, V is {bel.p}x{bel.p}")

    r = evolve_cov(state, spec)
    a_prior = spec.c @ state.m
    f = spec.b @ a_prior
    rb = r @ spec.b.T
    brb = symmetrize(spec.b @ rb)
    v_prev, proj_prev = effective_v(bel.v_hat, project_floor)
    q = symmetrize(brb + v_prev)
    e = y - f
    try:
        e_std = standardized_error(e, q)
    except (NotPSDError, SingularMatrixError) as exc:
        raise SingularMatrixError(f"Q_t is not positive definite at t={state.t + 1}: {exc}") from exc

    eta = bel.eta + 1.0
    # eta_t V_t = eta_{t-1} V_{t-1} + e e' - B R B', on the raw (unprojected) V
    v_hat = symmetrize((bel.eta * bel.v_hat + np.outer(e, e) - brb) / eta)
    v_now, proj_now = effective_v(v_hat, project_floor)
    inner = symmetrize(brb + v_now)
    v_tilde = _pd_inverse(inner, f"B R B' + V_hat at t={state.t + 1}")
    v_tilde2 = bel.k / eta

    gain = rb @ v_tilde
    m = a_prior + gain @ e
    p_mat = r - gain @ rb.T
    if bel.k.any():
        p_mat = p_mat + kronecker_correction(e, rb, v_tilde2)
    p_mat = symmetrize(p_mat)
    belief = unchecked(MatrixVarBelief, v_hat=v_hat, k=bel.k, eta=eta, alpha=1.0)
    new = unchecked(FilterState, m=m, p_mat=p_mat, var_belief=belief, t=state.t + 1)
    report = unchecked(StepReport, f=f, q=q, e=e, e_std=e_std, v_hat=v_hat, m=m, p_mat=p_mat,
                        x_cov=p_mat, projected=proj_prev or proj_now,
                        extra={"r": r, "brb": brb, "v_tilde": v_tilde})
    return new, report


def kalman_step_known_v(state, spec, y):
    if spec.v is None:
        raise DomainError("kalman_step_known_v needs a model with a known V")
    y = _vec(y)
    r = evolve_cov(state, spec)
    a_prior = spec.c @ state.m
    f = spec.b @ a_prior
    q = symmetrize(spec.b @ r @ spec.b.T + spec.v)
    q_inv = _pd_inverse(q, f"Q_t at t={state.t + 1}")
    gain = r @ spec.b.T @ q_inv
    e = y - f
    m = a_prior + gain @ e
    p_mat = symmetrize(r - gain @ q @ gain.T)
    new = unchecked(FilterState, m=m, p_mat=p_mat, var_belief=None, t=state.t + 1)
    report = unchecked(StepReport, f=f, q=q, e=e, e_std=sym_sqrt_inv(q) @ e, v_hat=spec.v,
                        m=m, p_mat=p_mat, x_cov=p_mat)
    return new, report


def pspp_initial_state(m0, p0, v0, eta0=1.0, k0=None):
    v0 = np.atleast_2d(np.asarray(v0, dtype=float))
    if k0 is None:
        k0 = np.eye(vech_dim(v0.shape[0]))
    return FilterState(m=m0, p_mat=p0, var_belief=MatrixVarBelief(v0, k0, eta0, 1.0), t=0)


_STEPS = {
    "pspp": pspp_dlm_step,
    "known_v": kalman_step_known_v,
    "sop": sop_filter_step,
}


def run_filter(ys, spec, state, method="pspp"):
    """Filter a whole (T x p) series; returns the final state and all reports."""
    step = _STEPS[method] if isinstance(method, str) else method
    reports = []
    for y in np.atleast_2d(np.asarray(ys, dtype=float)):
        state, rep = step(state, spec, y)
        reports.append(rep)
    return state, reports


@dataclass(frozen=True)
class ForecastMetrics:
    """Componentwise MSSE, MSE, MAE and ME of one-step forecast errors."""

    msse: np.ndarray
    mse: np.ndarray
    mae: np.ndarray
    me: np.ndarray

    def as_dict(self):
        return {k: getattr(self, k).tolist() for k in ("msse", "mse", "mae", "me")}

    @classmethod
    def mean_of(cls, items):
        items = list(items)
        return cls(*(np.mean([getattr(i, k) for i in items], axis=0)
                     for k in ("msse", "mse", "mae", "me")))


def forecast_metrics(reports, burn_in=0):
    reports = list(reports)[burn_in:]
    if not reports:
        raise DomainError("no steps left after burn-in")
    e = np.array([r.e for r in reports])
    es = np.array([r.e_std for r in reports])
    return ForecastMetrics(msse=np.mean(es ** 2, axis=0), mse=np.mean(e ** 2, axis=0),
                           mae=np.mean(np.abs(e), axis=0), me=np.mean(e, axis=0))
