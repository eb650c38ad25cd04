"""Conditional moments and samplers for the Student t, inverted Student t and
Wishart laws, plus a Monte Carlo checker of second-order independence of
``X - A Y`` and ``Y``.
"""

from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.special import gammaln

from .bayes_linear import MomentPair, _mat, _vec
from .errors import DegreesOfFreedomError, DimensionError, DomainError, NumericalError
from .linalg import check_pd, regression_matrix, spd_inv, sym_sqrt, symmetrize


@dataclass(frozen=True)
class TJointSpec:
    """Joint (inverted) Student t for (X, Y) with dof ``n`` and scale blocks."""

    n: float
    mu_x: np.ndarray
    mu_y: np.ndarray
    c11: np.ndarray
    c22: np.ndarray
    c12: np.ndarray

    def __post_init__(self):
        mu_x, mu_y = _vec(self.mu_x), _vec(self.mu_y)
        c11, c22, c12 = _mat(self.c11), _mat(self.c22), _mat(self.c12)
        m, p = mu_x.size, mu_y.size
        if c11.shape != (m, m) or c22.shape != (p, p) or c12.shape != (m, p):
            raise DimensionError("inconsistent TJointSpec block shapes")
        if not self.n > 0:
            raise DomainError(f"degrees of freedom must be positive, got {self.n}")
        for name, val in (("mu_x", mu_x), ("mu_y", mu_y), ("c11", c11),
                          ("c22", c22), ("c12", c12)):
            object.__setattr__(self, name, val)
        check_pd(self.scale_matrix(), "stacked scale matrix")

    @property
    def m(self):
        return self.mu_x.size

    @property
    def p(self):
        return self.mu_y.size

    def scale_matrix(self):
        return np.block([[self.c11, self.c12], [self.c12.T, self.c22]])

    def location(self):
        return np.concatenate([self.mu_x, self.mu_y])

    def regression(self):
        return regression_matrix(self.c12, self.c22)

    def residual_scale(self):
        a = self.regression()
        return symmetrize(self.c11 - a @ self.c22 @ a.T)

    def quad_form(self, y):
        d = np.atleast_2d(np.asarray(y, dtype=float)) - self.mu_y
        return np.einsum("ij,jk,ik->i", d, spd_inv(self.c22), d)


@dataclass(frozen=True)
class ConditionalT:
    """Moments of ``X - A Y | Y = y`` for a joint (inverted) t law."""

    moments: MomentPair
    scale: np.ndarray
    factor: float
    dof: float


def student_t_conditional_moments(spec, y):
    """Conditional law of ``X - A Y`` given ``Y = y`` for a joint Student t.

    The conditional is t with ``n + p`` dof, location ``mu_x - A mu_y`` and a
    scale inflated by ``1 + q/n`` where q is the Mahalanobis form of y.  The
    returned covariance is ``(n + q) / (n + p - 2) * (C11 - A C22 A')``.
    """
    if spec.n <= 2:
        raise DegreesOfFreedomError(f"variance needs n > 2, got n = {spec.n}")
    n, p = spec.n, spec.p
    q = float(spec.quad_form(y)[0])
    a = spec.regression()
    base = spec.residual_scale()
    factor = 1.0 + q / n
    scale = (n / (n + p)) * factor * base
    cov = (n + q) / (n + p - 2) * base
    loc = spec.mu_x - a @ spec.mu_y
    return ConditionalT(MomentPair(loc, cov), scale, factor, n + p)


def inverted_t_conditional_moments(spec, y):
    """Conditional law of ``X - A Y`` given ``Y = y`` for a joint inverted t.

    The scale deflates by ``1 - q/n``; the covariance of an m-dimensional
    inverted t with dof n and scale M is ``n M / (n + m)``.
    """
    n, m = spec.n, spec.m
    q = float(spec.quad_form(y)[0])
    if q >= n:
        raise DomainError(f"y outside the support: quadratic form {q:.6g} >= n = {n}")
    a = spec.regression()
    factor = 1.0 - q / n
    scale = factor * spec.residual_scale()
    loc = spec.mu_x - a @ spec.mu_y
    return ConditionalT(MomentPair(loc, n / (n + m) * scale), scale, factor, n)


def sample_student_t(n, mu, c, rng, size):
    """Multivariate t draws via a Gaussian / chi-square ratio."""
    mu = _vec(mu)
    root = sym_sqrt(_mat(c))
    z = rng.standard_normal((size, mu.size)) @ root
    g = rng.chisquare(n, size)
    return mu + z / np.sqrt(g / n)[:, None]


def _wishart_identity(df, p, rng, size):
    # Bartlett decomposition with identity scale; df may be non-integer
    lower = np.zeros((size, p, p))
    for i in range(p):
        lower[:, i, i] = np.sqrt(rng.chisquare(df - i, size))
        if i:
            lower[:, i, :i] = rng.standard_normal((size, i))
    return lower @ np.swapaxes(lower, 1, 2)


def sample_inverted_t(p, n, mu, c, rng, size=None):
    """Inverted Student t draws built from a normal and a Wishart.

    X = sqrt(n) C^{1/2} (S + z z')^{-1/2} z + mu with z ~ N(0, I_p) and
    S ~ W_p(n + p - 1, I_p).  Every draw satisfies (X-mu)' C^{-1} (X-mu) <= n.
    """
    if not n > 0:
        raise DomainError(f"degrees of freedom must be positive, got {n}")
    mu = _vec(mu)
    c = _mat(c)
    if mu.size != p or c.shape != (p, p):
        raise DimensionError("mu and C must match p")
    check_pd(c, "C")
    k = 1 if size is None else int(size)
    z = rng.standard_normal((k, p))
    s = _wishart_identity(n + p - 1, p, rng, k)
    s += z[:, :, None] * z[:, None, :]
    w, u = np.linalg.eigh(s)
    # (S + z z')^{-1/2} z, batched
    coef = np.einsum("kji,kj->ki", u, z) / np.sqrt(w)
    v = np.einsum("kij,kj->ki", u, coef)
    x = np.sqrt(n) * v @ sym_sqrt(c) + mu
    return x[0] if size is None else x


def inverted_t_logpdf(x, n, mu, c):
    """Log density of the inverted t; -inf outside the support."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    mu, c = _vec(mu), _mat(c)
    p = mu.size
    d = x - mu
    q = np.einsum("ij,jk,ik->i", d, spd_inv(c), d)
    logc = (gammaln((n + p) / 2) - p / 2 * np.log(np.pi) - gammaln(n / 2)
            - 0.5 * np.linalg.slogdet(c)[1] - (p + n - 2) / 2 * np.log(n))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = logc + (n / 2 - 1) * np.log(n - q)
    return np.where(q < n, out, -np.inf)


@dataclass(frozen=True)
class WishartSpec:
    n: float
    s: np.ndarray

    def __post_init__(self):
        s = _mat(self.s)
        if s.shape != (2, 2):
            raise DimensionError("WishartSpec needs a 2x2 scale matrix")
        if not self.n > 0:
            raise DomainError(f"degrees of freedom must be positive, got {self.n}")
        check_pd(s, "S")
        object.__setattr__(self, "s", symmetrize(s))


@dataclass(frozen=True)
class WishartPartition:
    prior_pair: MomentPair
    a_xy: float
    resid_mean: float
    resid_var: float
    cond_mean: float
    cond_var: float


def wishart_partition_moments(spec, y):
    """Moments for X = Sigma_12, Y = Sigma_22 of Sigma ~ W_2(n, S), given Y = y."""
    if not y > 0:
        raise DomainError(f"Sigma_22 must be positive, got {y}")
    n = spec.n
    s11, s12, s22 = spec.s[0, 0], spec.s[0, 1], spec.s[1, 1]
    prior = MomentPair(
        n * np.array([s12, s22]),
        n * np.array([[s11 * s22 + s12 ** 2, 2 * s12 * s22],
                      [2 * s12 * s22, 2 * s22 ** 2]]))
    return WishartPartition(
        prior_pair=prior,
        a_xy=s12 / s22,
        resid_mean=0.0,
        resid_var=n * (s11 * s22 - s12 ** 2),
        cond_mean=s12 * y / s22,
        cond_var=(s11 - s12 ** 2 / s22) * y,
    )


def sample_wishart(spec, rng, size):
    return stats.wishart(df=spec.n, scale=spec.s).rvs(size=size, random_state=rng)


# -- samplers for the checker: callables (rng, size) -> (X, Y) --------------

def gaussian_sampler(mu, cov, m):
    mu, cov = _vec(mu), _mat(cov)
    root = sym_sqrt(cov)

    def draw(rng, size):
        z = mu + rng.standard_normal((size, mu.size)) @ root
        return z[:, :m], z[:, m:]
    return draw


def student_t_sampler(spec):
    def draw(rng, size):
        z = sample_student_t(spec.n, spec.location(), spec.scale_matrix(), rng, size)
        return z[:, :spec.m], z[:, spec.m:]
    return draw


def inverted_t_sampler(spec):
    d = spec.m + spec.p

    def draw(rng, size):
        z = sample_inverted_t(d, spec.n, spec.location(), spec.scale_matrix(), rng, size)
        return z[:, :spec.m], z[:, spec.m:]
    return draw


def wishart_sampler(spec):
    def draw(rng, size):
        w = sample_wishart(spec, rng, size)
        return w[:, 0, 1][:, None], w[:, 1, 1][:, None]
    return draw


@dataclass(frozen=True)
class IndependenceReport:
    """Per-bin moments of ``X - A Y`` and their spread across bins.

    ``max_mean_dev`` is measured in pooled standard deviations and
    ``max_cov_dev`` relative to the pooled covariance (correlation scale).
    ``mean_z`` and ``cov_z`` are the largest deviations in Monte Carlo
    standard errors; ``threshold`` is the Bonferroni-adjusted normal quantile
    matching a two-sided ``level``-sigma test over all comparisons.
    """

    bin_means: np.ndarray
    bin_covs: np.ndarray
    bin_counts: np.ndarray
    edges: np.ndarray
    max_mean_dev: float
    max_cov_dev: float
    mean_z: float
    cov_z: float
    threshold: float

    @property
    def mean_ok(self):
        return self.mean_z <= self.threshold

    @property
    def cov_ok(self):
        return self.cov_z <= self.threshold

    @property
    def passed(self):
        return self.mean_ok and self.cov_ok


def mahalanobis_norm(y, mu_y, sigma_y):
    d = np.atleast_2d(y) - mu_y
    return np.sqrt(np.einsum("ij,jk,ik->i", d, spd_inv(sigma_y), d))


def mc_second_order_check(sampler, a_xy, bins, draws, rng, mu_y=None, sigma_y=None,
                          level=3.0):
    """Monte Carlo check that ``X - A Y`` has y-free mean and covariance.

    Draws are split into ``bins`` equal-probability bins of the Mahalanobis
    norm of ``Y - mu_y`` (moments estimated from the draws when not given).
    """
    if bins < 2:
        raise DomainError("need at least two bins")
    if draws < 1000 * bins:
        raise DomainError(f"need at least {1000 * bins} draws for {bins} bins")
    x, y = sampler(rng, draws)
    x = np.asarray(x, dtype=float).reshape(draws, -1)
    y = np.asarray(y, dtype=float).reshape(draws, -1)
    a = _mat(a_xy)
    if a.shape != (x.shape[1], y.shape[1]):
        raise DimensionError(f"a_xy shape {a.shape} does not match draws")
    mu_y = y.mean(axis=0) if mu_y is None else _vec(mu_y)
    sigma_y = np.cov(y, rowvar=False).reshape(y.shape[1], -1) if sigma_y is None else _mat(sigma_y)
    score = mahalanobis_norm(y, mu_y, sigma_y)
    edges = np.quantile(score, np.linspace(0, 1, bins + 1))
    which = np.clip(np.searchsorted(edges, score, side="right") - 1, 0, bins - 1)

    r = x - y @ a.T
    m = r.shape[1]
    pooled_mean = r.mean(axis=0)
    dr = r - pooled_mean
    pooled_cov = dr.T @ dr / (draws - 1)
    sd = np.sqrt(np.diag(pooled_cov))
    iu = np.triu_indices(m)
    prods = dr[:, iu[0]] * dr[:, iu[1]]
    prod_sd = prods.std(axis=0)

    means, covs, counts = [], [], []
    mean_dev = cov_dev = mean_z = cov_z = 0.0
    for k in range(bins):
        rk = r[which == k]
        nk = len(rk)
        if nk < 2:
            raise NumericalError(f"bin {k} has {nk} draws; increase draws")
        mk = rk.mean(axis=0)
        ck = np.atleast_2d(np.cov(rk, rowvar=False))
        means.append(mk)
        covs.append(ck)
        counts.append(nk)
        dm = np.abs(mk - pooled_mean)
        dc = np.abs(ck - pooled_cov)[iu]
        mean_dev = max(mean_dev, float(np.max(dm / sd)))
        cov_dev = max(cov_dev, float(np.max(dc / np.sqrt(np.outer(sd, sd))[iu])))
        mean_z = max(mean_z, float(np.max(dm / (sd / np.sqrt(nk)))))
        cov_z = max(cov_z, float(np.max(dc / (prod_sd / np.sqrt(nk)))))

    n_tests = bins * (m + len(iu[0]))
    alpha = 2 * stats.norm.sf(level) / n_tests
    return IndependenceReport(
        bin_means=np.array(means),
        bin_covs=np.array(covs),
        bin_counts=np.array(counts),
        edges=edges,
        max_mean_dev=mean_dev,
        max_cov_dev=cov_dev,
        mean_z=mean_z,
        cov_z=cov_z,
        threshold=float(stats.norm.isf(alpha / 2)),
    )


def binned_conditional_variance(spec, family, draws, bins, rng):
    """Monte Carlo variance of ``X - A Y`` within Mahalanobis bins of Y next to
    the closed form averaged over the same draws (scalar X only).

    Returns ``(mc_var, closed_var, mean_factor)``, one entry per bin.
    """
    if spec.m != 1:
        raise DimensionError("binned_conditional_variance needs scalar X")
    if family == "t":
        x, y = student_t_sampler(spec)(rng, draws)
        cond = student_t_conditional_moments
    elif family == "inverted_t":
        x, y = inverted_t_sampler(spec)(rng, draws)
        cond = inverted_t_conditional_moments
    else:
        raise DomainError(f"unknown family {family!r}")
    a = spec.regression()
    r = (x - y @ a.T)[:, 0]
    q = spec.quad_form(y)
    edges = np.quantile(q, np.linspace(0, 1, bins + 1))
    which = np.clip(np.searchsorted(edges, q, side="right") - 1, 0, bins - 1)

    # closed form is affine in q, so averaging at the bin-mean q is exact
    ref = cond(spec, spec.mu_y)
    base_var, base_factor = ref.moments.cov[0, 0], ref.factor
    mc, closed, factors = [], [], []
    for k in range(bins):
        sel = which == k
        qk = q[sel].mean()
        fk = 1 + qk / spec.n if family == "t" else 1 - qk / spec.n
        mc.append(r[sel].var(ddof=1))
        closed.append(base_var * fk / base_factor)
        factors.append(fk)
    return np.array(mc), np.array(closed), np.array(factors)
