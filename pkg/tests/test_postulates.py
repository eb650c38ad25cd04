import numpy as np
import pytest
from scipy import integrate

from pspp.checks import example_t_spec
from pspp.errors import DegreesOfFreedomError, DomainError
from pspp.postulates import (TJointSpec, WishartSpec, binned_conditional_variance,
                             gaussian_sampler, inverted_t_conditional_moments,
                             inverted_t_logpdf, mahalanobis_norm, mc_second_order_check,
                             sample_inverted_t, sample_student_t, sample_wishart,
                             student_t_conditional_moments, student_t_sampler,
                             wishart_partition_moments)

from conftest import random_spd


def scalar_spec(n, c22=1.0):
    return TJointSpec(n=n, mu_x=[0.0], mu_y=[0.0], c11=[[2.0]], c22=[[c22]], c12=[[0.5]])


def test_student_t_factor_examples():
    spec = scalar_spec(10.0)
    out = student_t_conditional_moments(spec, [2.0])
    assert out.factor == pytest.approx(1.4)
    assert out.dof == 11
    assert student_t_conditional_moments(spec, [0.0]).factor == 1.0


def test_student_t_needs_dof():
    with pytest.raises(DegreesOfFreedomError):
        student_t_conditional_moments(scalar_spec(2.0), [0.0])


def test_inverted_t_factor_examples():
    spec = scalar_spec(20.0, c22=2.0)
    out = inverted_t_conditional_moments(spec, [2.0])   # quadratic form 4 / 2 = 2
    assert out.factor == pytest.approx(0.9)
    assert inverted_t_conditional_moments(spec, [0.0]).factor == 1.0
    with pytest.raises(DomainError):
        inverted_t_conditional_moments(spec, [7.0])


def test_student_t_conditional_cov_monte_carlo(rng):
    # X - A Y given |Y - mu_y| near y0, against the closed-form covariance
    spec = scalar_spec(8.0)
    x, y = student_t_sampler(spec)(rng, 2_000_000)
    y0 = 1.5
    sel = np.abs(np.abs(y[:, 0]) - y0) < 0.05
    r = x[sel, 0] - spec.regression()[0, 0] * y[sel, 0]
    closed = student_t_conditional_moments(spec, [y0]).moments.cov[0, 0]
    assert r.var() == pytest.approx(closed, rel=0.05)


def test_sample_student_t_mean(rng):
    mu = np.array([1.0, -2.0])
    draws = sample_student_t(7.0, mu, random_spd(rng, 2), rng, 100_000)
    se = draws.std(axis=0) / np.sqrt(len(draws))
    assert np.all(np.abs(draws.mean(axis=0) - mu) < 3 * se)


def test_inverted_t_support_and_mean(rng):
    c = random_spd(rng, 2)
    mu = np.array([0.5, 1.0])
    x = sample_inverted_t(2, 6.0, mu, c, rng, 100_000)
    d = x - mu
    q = np.einsum("ij,jk,ik->i", d, np.linalg.inv(c), d)
    assert q.max() <= 6.0 + 1e-9
    se = x.std(axis=0) / np.sqrt(len(x))
    assert np.all(np.abs(x.mean(axis=0) - mu) < 3 * se)


def test_inverted_t_variance_against_density_quadrature(rng):
    n, mu, c = 5.0, 0.3, 1.7
    half = np.sqrt(n * c)

    # unnormalized density written out directly, not via inverted_t_logpdf
    def dens(x):
        return (1 - (x - mu) ** 2 / (n * c)) ** (n / 2 - 1)

    z = integrate.quad(dens, mu - half, mu + half)[0]
    var = integrate.quad(lambda x: (x - mu) ** 2 * dens(x), mu - half, mu + half)[0] / z
    x = sample_inverted_t(1, n, [mu], [[c]], rng, 400_000)[:, 0]
    assert x.var() == pytest.approx(var, rel=0.02)
    assert var == pytest.approx(n * c / (n + 1), rel=1e-8)


def test_inverted_t_logpdf_normalizes():
    n, mu, c = 7.0, 0.0, 2.0
    half = np.sqrt(n * c)
    total = integrate.quad(lambda x: np.exp(inverted_t_logpdf([[x]], n, [mu], [[c]])[0]),
                           -half, half)[0]
    assert total == pytest.approx(1.0, rel=1e-7)
    assert inverted_t_logpdf([[half + 0.1]], n, [mu], [[c]])[0] == -np.inf


def test_wishart_examples():
    part = wishart_partition_moments(WishartSpec(5.0, np.eye(2)), 5.0)
    assert part.a_xy == 0 and part.resid_var == 5.0 and part.cond_var == 5.0
    part = wishart_partition_moments(WishartSpec(4.0, [[2.0, 1.0], [1.0, 1.0]]), 4.0)
    assert part.a_xy == 1.0 and part.resid_var == 4.0


def test_wishart_identity_at_mean(rng):
    for _ in range(20):
        spec = WishartSpec(float(rng.uniform(3, 60)), random_spd(rng, 2))
        part = wishart_partition_moments(spec, spec.n * spec.s[1, 1])
        assert part.cond_var == pytest.approx(part.resid_var, rel=1e-12)


def test_wishart_prior_moments_monte_carlo(rng):
    spec = WishartSpec(12.0, [[2.0, 0.6], [0.6, 1.0]])
    m = sample_wishart(spec, rng, 200_000)
    xy = np.stack([m[:, 0, 1], m[:, 1, 1]], axis=1)
    prior = wishart_partition_moments(spec, 1.0).prior_pair
    assert np.allclose(xy.mean(axis=0), prior.mean, rtol=0.01)
    assert np.allclose(np.cov(xy.T), prior.cov, rtol=0.03)


def test_wishart_conditional_monte_carlo(rng):
    spec = WishartSpec(50.0, [[1.5, 0.4], [0.4, 0.8]])
    m = sample_wishart(spec, rng, 400_000)
    y0 = spec.n * spec.s[1, 1]
    sel = np.abs(m[:, 1, 1] - y0) < 0.01 * y0
    part = wishart_partition_moments(spec, y0)
    assert m[sel, 0, 1].mean() == pytest.approx(part.cond_mean, rel=0.05)
    assert m[sel, 0, 1].var() == pytest.approx(part.cond_var, rel=0.05)


def test_wishart_inverse_mean_gap(rng):
    # E(M^-1) exceeds E(M)^-1 by the factor n / (n - p - 1)
    n, p = 100.0, 2
    s = np.array([[1.0, 0.3], [0.3, 2.0]])
    m = sample_wishart(WishartSpec(n, s), rng, 200_000)
    inv_mean = np.linalg.inv(m).mean(axis=0)
    mean_inv = np.linalg.inv(m.mean(axis=0))
    gap = np.diag(inv_mean) / np.diag(mean_inv) - 1
    assert np.allclose(gap, n / (n - p - 1) - 1, atol=0.003)


def test_mahalanobis_examples(rng):
    assert mahalanobis_norm([1.0, 2.0], [1.0, 2.0], np.eye(2))[0] == 0
    assert mahalanobis_norm([3.0, 4.0], [0.0, 0.0], np.eye(2))[0] == pytest.approx(5.0)
    s = random_spd(rng, 3)
    d = rng.normal(size=3)
    w, u = np.linalg.eigh(s)
    ref = np.sqrt(np.sum((u.T @ d) ** 2 / w))
    assert mahalanobis_norm(d, np.zeros(3), s)[0] == pytest.approx(ref, rel=1e-10)


def test_checker_gaussian_passes(rng):
    s = random_spd(rng, 3)
    mu = rng.normal(size=3)
    a = s[:1, 1:] @ np.linalg.inv(s[1:, 1:])
    rep = mc_second_order_check(gaussian_sampler(mu, s, 1), a, 8, 200_000, rng)
    assert rep.passed


def test_checker_flags_heavy_tails(rng):
    def dev(n):
        spec = example_t_spec(n)
        rep = mc_second_order_check(student_t_sampler(spec), spec.regression(), 8, 200_000, rng)
        return rep
    small, large = dev(3.0), dev(30.0)
    assert not small.cov_ok
    assert large.max_cov_dev < 0.25
    assert small.max_cov_dev > 5 * large.max_cov_dev


@pytest.mark.parametrize("family", ["t", "inverted_t"])
def test_binned_variance_matches_closed_form(rng, family):
    mc, closed, factors = binned_conditional_variance(example_t_spec(30.0), family,
                                                      300_000, 8, rng)
    assert np.max(np.abs(mc / closed - 1)) < 0.05
    # the factors move in the direction the family predicts
    assert (np.diff(factors) > 0).all() if family == "t" else (np.diff(factors) < 0).all()
