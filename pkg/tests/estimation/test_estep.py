import numpy as np
import pytest
from scipy import stats

from snmix.core.mixture import SnMixture
from snmix.core.penalty import PenaltySpec
from snmix.errors import DomainError
from snmix.estimation.common.estep import e_step, q_function, responsibilities
from snmix.sampler import RngHandle

PSI = SnMixture.from_arrays([0.3, 0.7], [-1.0, 2.0], [0.5, 1.5], [4.0, -2.0])
DATA = np.array([-3.0, -1.2, -0.4, 0.0, 0.8, 1.9, 2.5, 4.0, 7.5])
MODEL_1 = SnMixture.from_arrays([0.5, 0.5], [-2.0, 2.0], [1.0, 2.0], [2.0, 1.0])


def _truncated_moments(x, mu, sigma2, lam):
    delta = lam / np.sqrt(1.0 + lam**2)
    loc = delta * (x - mu)
    scale = np.sqrt(sigma2 * (1.0 - delta**2))
    dist = stats.truncnorm(-loc / scale, np.inf, loc=loc, scale=scale)
    return dist.mean(), dist.var() + dist.mean() ** 2


def test_responsibilities_against_densities():
    alpha = responsibilities(DATA, PSI)
    dens = np.column_stack(
        [
            w * stats.skewnorm.pdf(DATA, c.lam, loc=c.mu, scale=c.sigma)
            for w, c in zip(PSI.weights, PSI.components)
        ]
    )
    np.testing.assert_allclose(alpha, dens / dens.sum(axis=1, keepdims=True), rtol=1e-10, atol=1e-300)
    np.testing.assert_allclose(alpha.sum(axis=1), 1.0, rtol=1e-14)


def test_tau_moments_against_truncated_normal():
    cache = e_step(DATA, PSI)
    for j, x in enumerate(DATA):
        for i, c in enumerate(PSI.components):
            mean, second = _truncated_moments(x, c.mu, c.sigma2, c.lam)
            assert cache.beta[j, i] == pytest.approx(mean, rel=1e-6, abs=1e-12)
            assert cache.gamma[j, i] == pytest.approx(second, rel=1e-6, abs=1e-12)


def test_moment_inequalities_far_tail():
    psi = SnMixture.from_arrays([0.5, 0.5], [0.0, 5.0], [1.0, 1.0], [200.0, -200.0])
    cache = e_step(np.array([-50.0, -3.0, 0.0, 2.5, 60.0]), psi)
    assert np.all(np.isfinite(cache.beta)) and np.all(np.isfinite(cache.gamma))
    assert np.all(cache.beta >= 0)
    assert np.all(cache.gamma >= cache.beta**2)


def test_cache_is_read_only():
    cache = e_step(DATA, PSI)
    assert cache.n == DATA.size and cache.p == 2
    with pytest.raises(ValueError):
        cache.alpha[0, 0] = 0.5
    np.testing.assert_allclose(cache.totals, cache.alpha.sum(axis=0))
    sub = cache.subset(np.array([False, True]))
    assert sub.p == 1
    np.testing.assert_array_equal(sub.beta[:, 0], cache.beta[:, 1])


def test_q_function_penalty_offset():
    cache = e_step(DATA, PSI)
    pen = PenaltySpec.proposed(DATA)
    assert q_function(PSI, DATA, cache, pen) - q_function(PSI, DATA, cache, PenaltySpec.none()) == pytest.approx(
        pen.total(PSI), rel=1e-10
    )


def test_q_function_mismatch():
    cache = e_step(DATA, PSI)
    with pytest.raises(DomainError):
        q_function(PSI, DATA[:-1], cache, PenaltySpec.none())


def _latent_draws_given_x(x, psi, rng, size):
    """Exact draws of (label, tau) given X = x, by rejection from the hierarchical representation."""
    gen = rng.generator
    labels = gen.choice(psi.p, size=size, p=psi.weights_array)
    sigma = np.sqrt(psi.sigma2)
    delta = psi.lam / np.sqrt(1.0 + psi.lam**2)
    scale = sigma * np.sqrt(1.0 - delta**2)
    tau = sigma[labels] * np.abs(gen.standard_normal(size))
    density = stats.norm.pdf(x, loc=psi.mu[labels] + delta[labels] * tau, scale=scale[labels])
    bound = 1.0 / (np.sqrt(2.0 * np.pi) * scale.min())
    accept = gen.uniform(size=size) * bound < density
    return labels[accept], tau[accept]


@pytest.mark.slow
def test_e_step_against_latent_simulation():
    rng = RngHandle(2024)
    z_scores = []
    for psi, points in ((MODEL_1, (-1.0, 0.0, 1.0)), (PSI, (0.0, 0.8))):
        cache = e_step(np.array(points), psi)
        for j, x in enumerate(points):
            labels, tau = _latent_draws_given_x(x, psi, rng, 1_000_000)
            for i in range(psi.p):
                alpha = np.mean(labels == i)
                z_scores.append((alpha - cache.alpha[j, i]) / np.sqrt(alpha * (1.0 - alpha) / labels.size))
                t = tau[labels == i]
                for draws, expected in ((t, cache.beta[j, i]), (t**2, cache.gamma[j, i])):
                    z_scores.append((draws.mean() - expected) / (draws.std(ddof=1) / np.sqrt(draws.size)))
    z_scores = np.abs(np.array(z_scores))
    assert z_scores.size == 30
    assert np.all(np.isfinite(z_scores))
    assert np.mean(z_scores < 3.0) >= 0.95
    assert np.all(z_scores < 5.0)
