"""Randomized case generators and check suites shared by the CLI, the
scripts and the acceptance tests."""

from dataclasses import dataclass

import numpy as np

from .bayes_linear import JointMoments, theorem1_check
from .postulates import (TJointSpec, WishartSpec, binned_conditional_variance,
                         gaussian_sampler, mc_second_order_check, wishart_partition_moments)
from .sop import (ConjugateSOPPrior, ScalarVarBelief, conjugate_match_params,
                  conjugate_posterior, matching_k, sop_posterior_x, sop_tau, sop_v_update)


def random_spd(rng, n, scale=1.0):
    a = rng.standard_normal((n, n))
    return scale * (a @ a.T / n + 0.5 * np.eye(n))


def random_joint(rng, m, p):
    s = random_spd(rng, m + p)
    return JointMoments(mu_x=rng.normal(size=m), mu_y=rng.normal(size=p),
                        sigma_x=s[:m, :m], sigma_y=s[m:, m:], cov_xy=s[:m, m:])


def _rel(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


@dataclass(frozen=True)
class SOPCase:
    mean_rel: float
    cov_rel: float
    disc_rel: float
    var_rel: float


def sop_conjugate_case(rng):
    """One randomized comparison of the SOP posterior with the conjugate one.

    nu is drawn above 4 so every compared moment exists.
    """
    p = int(rng.integers(1, 5))
    m = int(rng.integers(1, 5))
    nu = float(rng.uniform(4.5, 30.0))
    s = float(rng.uniform(0.1, 10.0))
    j = random_joint(rng, m, p)
    y = j.mu_y + rng.standard_normal(p) * np.sqrt(np.diag(j.sigma_y)) * rng.uniform(0.1, 3)
    prior = ConjugateSOPPrior(nu, s)
    conj = conjugate_posterior(prior, j, y)
    mp = conjugate_match_params(prior, p)
    tau = sop_tau(j, y)
    sop = sop_posterior_x(j, y, mp.belief(matching_k(prior, p, tau)))

    # the V means under the prior-mean choice of V_hat, same eta and alpha
    alt = sop_v_update(ScalarVarBelief(mp.v_hat_prior_mean, 1.0, mp.eta, mp.alpha), tau)
    direct = alt.v_hat - conj.v_mean

    matched = sop_v_update(mp.belief(matching_k(prior, p, tau)), tau)
    return SOPCase(
        mean_rel=_rel(sop.mean, conj.t_location),
        cov_rel=_rel(sop.cov, conj.t_cov),
        disc_rel=abs(direct - mp.discrepancy) / abs(mp.discrepancy) if p > 1 else abs(direct),
        var_rel=_rel(matched.variance, conj.v_variance),
    )


# -- random discrete joints for the linear-mean property ----------------------

KINDS = ("product", "linear", "heteroscedastic", "nonlinear", "generic")


def _probs(rng, n):
    w = rng.uniform(0.05, 1.0, n)
    return w / w.sum()


def random_discrete_joint(rng, kind, max_support=6):
    """Support points and probabilities of a discrete (X, Y), at most
    ``max_support`` distinct values per margin.

    Returns ``(xs, ys, probs, expected)`` where ``expected`` is the flag the
    construction guarantees for both linear-mean and second-order
    independence (None for the unconstrained generic table).
    """
    m = int(rng.integers(1, 3))
    p = int(rng.integers(1, 3))
    # p + 1 points keep Var(Y) nonsingular; p + 2 let a mean be non-affine
    lo = p + 2 if kind in ("nonlinear", "heteroscedastic") else p + 1
    ny = int(rng.integers(lo, max_support + 1))
    ne = int(rng.integers(2, max_support + 1))
    yv = rng.normal(size=(ny, p)) * 2
    qy = _probs(rng, ny)
    if kind == "generic":
        xv = rng.normal(size=(ne, m))
        pr = rng.uniform(0.0, 1.0, (ne, ny))
        pr /= pr.sum()
        xs = np.repeat(xv, ny, axis=0)
        ys = np.tile(yv, (ne, 1))
        return xs, ys, pr.ravel(), None
    ev = rng.normal(size=(ne, m))
    qe = _probs(rng, ne)
    ev -= qe @ ev                      # zero-mean noise
    if kind == "product":
        base = np.tile(rng.normal(size=m), (ny, 1))
        scale = np.ones(ny)
        expected = True
    elif kind == "linear":
        base = rng.normal(size=m) + yv @ rng.normal(size=(p, m))
        scale = np.ones(ny)
        expected = True
    elif kind == "heteroscedastic":
        base = rng.normal(size=m) + yv @ rng.normal(size=(p, m))
        scale = rng.uniform(0.3, 3.0, ny)
        expected = False
    elif kind == "nonlinear":
        base = rng.normal(size=(ny, m)) * 3
        scale = np.ones(ny)
        expected = False
    else:
        raise ValueError(f"unknown kind {kind!r}")
    xs = (base[:, None, :] + scale[:, None, None] * ev[None, :, :]).reshape(-1, m)
    ys = np.repeat(yv, ne, axis=0)
    pr = (qy[:, None] * qe[None, :]).ravel()
    return xs, ys, pr, expected


def theorem1_suite(rng, n_cases=500, max_support=6):
    """Run ``theorem1_check`` on randomized joints of every construction.

    Returns a list of ``(kind, report, expected)``.
    """
    out = []
    for i in range(n_cases):
        kind = KINDS[i % len(KINDS)]
        xs, ys, pr, expected = random_discrete_joint(rng, kind, max_support)
        out.append((kind, theorem1_check(xs, ys, pr), expected))
    return out


# -- postulate examples --------------------------------------------------------

def example_t_spec(n=30.0):
    """Scalar X with bivariate Y, the setting for the binned factor checks."""
    return TJointSpec(n=n, mu_x=[1.0], mu_y=[0.0, 2.0], c11=[[2.0]],
                      c22=[[1.0, 0.3], [0.3, 1.5]], c12=[[0.6, -0.4]])


def postulate_summary(rng, draws=1_000_000, bins=10, n=30.0):
    """Binned Monte Carlo vs closed-form conditional variances for the t and
    inverted t examples, the Wishart identities, and a Gaussian control."""
    spec = example_t_spec(n)
    out = {}
    for fam in ("t", "inverted_t"):
        mc, closed, factors = binned_conditional_variance(spec, fam, draws, bins, rng)
        out[fam] = {"mc_var": mc, "closed_var": closed, "factor": factors,
                    "max_rel_dev": float(np.max(np.abs(mc / closed - 1)))}
    ws = WishartSpec(n=10.0, s=np.array([[2.0, 0.7], [0.7, 1.3]]))
    y = ws.n * ws.s[1, 1]
    part = wishart_partition_moments(ws, y)
    out["wishart"] = {"y": y, "cond_var": part.cond_var, "resid_var": part.resid_var,
                      "abs_diff": abs(part.cond_var - part.resid_var)}
    j = random_joint(rng, 1, 2)
    s = np.block([[j.sigma_x, j.cov_xy], [j.cov_xy.T, j.sigma_y]])
    rep = mc_second_order_check(gaussian_sampler(np.concatenate([j.mu_x, j.mu_y]), s, 1),
                                j.regression(), bins, min(draws, 200_000), rng)
    out["gaussian_control"] = {"mean_z": rep.mean_z, "cov_z": rep.cov_z,
                               "threshold": rep.threshold, "passed": rep.passed}
    return out
