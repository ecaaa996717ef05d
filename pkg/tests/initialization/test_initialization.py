import numpy as np
import pytest
from scipy import stats

from snmix.core.mixture import SnMixture
from snmix.errors import DomainError
from snmix.initialization import (
    MAX_ABS_LAMBDA,
    Explicit,
    KMeansMoments,
    Perturbed,
    TrueValue,
    kmeans_moments_init,
    moment_inversion,
    perturbed_init,
    resolve_init,
    true_value_init,
)
from snmix.sampler import RngHandle, sample_mixture

MODEL_1 = SnMixture.from_arrays([0.5, 0.5], [-2.0, 2.0], [1.0, 2.0], [2.0, 1.0])


@pytest.mark.parametrize("lam", [-4.0, 0.0, 0.5, 5.0])
def test_moment_inversion(lam):
    mean, var, skew = (float(v) for v in stats.skewnorm.stats(lam, loc=1.0, scale=2.0, moments="mvs"))
    mu, sigma2, shape = moment_inversion(mean, var, skew)
    assert mu == pytest.approx(1.0, abs=1e-8)
    assert sigma2 == pytest.approx(4.0, rel=1e-8)
    assert shape == pytest.approx(lam, abs=1e-6)


def test_moment_inversion_clamps_skewness():
    mu, sigma2, lam = moment_inversion(0.0, 1.0, 5.0)
    assert np.isfinite(lam) and lam > 0
    assert sigma2 > 0


def test_single_cluster():
    x = sample_mixture(SnMixture.single(0.0, 1.0, 5.0), 10**5, RngHandle(0))
    psi0 = kmeans_moments_init(x, 1).psi0
    assert psi0.lam[0] > 0
    assert psi0.mu[0] == pytest.approx(0.0, abs=0.1)


def test_two_clusters():
    x = sample_mixture(MODEL_1, 10**4, RngHandle(1))
    report = kmeans_moments_init(x, 2, seed=3)
    assert report.scheme == "kmeans" and report.seed == 3
    np.testing.assert_allclose(report.psi0.weights_array, [0.5, 0.5], atol=0.1)
    assert np.all(np.diff(report.psi0.mu) > 0)
    assert np.all(np.abs(report.psi0.lam) <= MAX_ABS_LAMBDA)


def test_kmeans_is_seeded():
    x = sample_mixture(MODEL_1, 300, RngHandle(2))
    assert kmeans_moments_init(x, 3, seed=5).psi0 == kmeans_moments_init(x, 3, seed=5).psi0


def test_kmeans_with_ties():
    x = np.repeat([0.0, 1.0, 5.0], 4)
    psi0 = kmeans_moments_init(x, 3, seed=0).psi0
    assert psi0.p == 3
    assert np.all(psi0.sigma2 > 0)


def test_too_few_observations():
    with pytest.raises(DomainError):
        kmeans_moments_init(np.arange(5.0), 2)


def test_true_value_sorted():
    report = true_value_init(MODEL_1.permute([1, 0]))
    assert report.psi0 == MODEL_1
    assert report.scheme == "true"


def test_perturbed():
    report = perturbed_init(MODEL_1, 5, seed=4)
    psi0 = report.psi0
    assert psi0.p == 5
    assert sum(psi0.weights) == pytest.approx(1.0, abs=1e-12)
    # components 0, 2, 4 descend from the first true component, 1 and 3 from the second
    assert sorted(psi0.weights) == pytest.approx([0.5 / 3] * 3 + [0.25] * 2)
    assert sorted(psi0.sigma2) == pytest.approx([1.0] * 3 + [2.0] * 2)
    assert perturbed_init(MODEL_1, 5, seed=4) == report
    with pytest.raises(DomainError):
        perturbed_init(MODEL_1, 1)


def test_resolve():
    x = sample_mixture(MODEL_1, 100, RngHandle(3))
    start = MODEL_1.permute([1, 0])
    assert resolve_init(Explicit(start), x, 2).psi0 == start
    assert resolve_init(TrueValue(start), x, 2).psi0 == MODEL_1
    assert resolve_init(KMeansMoments(1), x, 2).scheme == "kmeans"
    assert resolve_init(Perturbed(MODEL_1, 2), x, 3).psi0.p == 3
    with pytest.raises(DomainError):
        resolve_init(TrueValue(MODEL_1), x, 3)
