"""
Starting values for the ECM engine.

Four schemes are available: k-means clustering followed by a method-of-moments fit per cluster, the true
mixing distribution (for simulations), an explicit user-provided mixture, and random perturbations of
the true mixing distribution for fits with more components than the truth.
"""
import logging
import warnings
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import stats
from scipy.cluster.vq import ClusterError, kmeans2

from snmix.core.density import lambda_of_delta
from snmix.core.mixture import SnMixture
from snmix.errors import DomainError
from snmix.sampler import derive_seed
from snmix.utils import SQRT_2_OVER_PI, Vector, as_data

logger = logging.getLogger(__name__)

MIN_SIGMA2 = 1e-6
MAX_ABS_LAMBDA = 50.0
# Largest skewness a skew normal can reach (as lam -> inf)
MAX_SKEWNESS = np.sqrt(2.0) * (4.0 - np.pi) / (np.pi - 2.0) ** 1.5
SKEWNESS_CLAMP = 0.99 * MAX_SKEWNESS
KMEANS_ITER = 100
KMEANS_RESEEDS = 10
PERTURBATION_SD = 0.1


@dataclass(frozen=True)
class InitReport:
    psi0: SnMixture
    scheme: str
    seed: int = 0


@dataclass(frozen=True)
class KMeansMoments:
    seed: int = 0


@dataclass(frozen=True)
class TrueValue:
    psi: SnMixture


@dataclass(frozen=True)
class Explicit:
    """Start exactly at ``psi``, keeping its label order and skipping the sanity clamps."""

    psi: SnMixture


@dataclass(frozen=True)
class Perturbed:
    psi: SnMixture
    seed: int = 0


InitSpec = Union[KMeansMoments, TrueValue, Explicit, Perturbed]


def _clamped(psi: SnMixture) -> SnMixture:
    return psi.replace(
        sigma2=np.maximum(psi.sigma2, MIN_SIGMA2), lam=np.clip(psi.lam, -MAX_ABS_LAMBDA, MAX_ABS_LAMBDA)
    )


def moment_inversion(mean: float, variance: float, skewness: float):
    """
    Skew normal parameters matching a mean, variance and skewness.

    Skewness beyond what the family can reach is clamped to 0.99 of the maximum.

    :return: (mu, sigma2, lam)
    """
    g = float(np.clip(skewness, -SKEWNESS_CLAMP, SKEWNESS_CLAMP))
    r = (2.0 * abs(g) / (4.0 - np.pi)) ** (1.0 / 3.0)
    delta = np.sign(g) * np.sqrt(np.pi / 2.0) * r / np.sqrt(1.0 + r * r)
    sigma2 = max(variance, 0.0) / (1.0 - 2.0 * delta * delta / np.pi)
    sigma2 = max(sigma2, MIN_SIGMA2)
    mu = mean - np.sqrt(sigma2) * delta * SQRT_2_OVER_PI
    return float(mu), float(sigma2), float(lambda_of_delta(delta))


def _kmeans_labels(x: np.ndarray, p: int, seed: int) -> np.ndarray:
    if p == 1:
        return np.zeros(x.size, dtype=int)
    points = x.reshape(-1, 1)
    for attempt in range(KMEANS_RESEEDS):
        rng = np.random.default_rng(derive_seed(seed, attempt))
        try:
            _, labels = kmeans2(points, p, iter=KMEANS_ITER, minit="++", seed=rng, missing="raise")
            return labels
        except ClusterError:
            logger.debug("k-means attempt %d produced an empty cluster, reseeding", attempt)
    logger.warning("k-means kept producing empty clusters, splitting the largest cluster instead")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        _, labels = kmeans2(points, p, iter=KMEANS_ITER, minit="++", seed=np.random.default_rng(seed), missing="warn")
    counts = np.bincount(labels, minlength=p)
    for empty in np.flatnonzero(counts == 0):
        largest = int(np.argmax(counts))
        members = np.flatnonzero(labels == largest)
        upper = members[x[members] > np.median(x[members])]
        labels[upper] = empty
        counts = np.bincount(labels, minlength=p)
    return labels


def kmeans_moments_init(data: Vector, p: int, seed: int = 0) -> InitReport:
    """
    k-means (k-means++ seeding) partition followed by a method-of-moments skew normal fit in each cluster.

    :param data: sample with at least 3p observations
    :param p: number of components
    :param seed: seed for the k-means seeding
    :return: report with a location-sorted starting mixture
    """
    x = as_data(data)
    if p < 1 or x.size < 3 * p:
        raise DomainError(f"k-means start needs p >= 1 and n >= 3p, got p={p}, n={x.size}")
    labels = _kmeans_labels(x, p, seed)
    weights, mu, sigma2, lam = [], [], [], []
    for k in range(p):
        cluster = x[labels == k]
        weights.append(cluster.size / x.size)
        skew = float(stats.skew(cluster)) if cluster.size >= 3 and np.ptp(cluster) > 0 else 0.0
        m, s, l = moment_inversion(float(np.mean(cluster)), float(np.var(cluster)), skew)
        mu.append(m)
        sigma2.append(s)
        lam.append(l)
    psi0 = _clamped(SnMixture.from_arrays(weights, mu, sigma2, lam, renormalize=True))
    return InitReport(psi0.sorted_by_location(), "kmeans", seed)


def true_value_init(psi_true: SnMixture) -> InitReport:
    """Start at the true mixing distribution, relabelled by location."""
    psi = SnMixture.from_arrays(psi_true.weights_array, psi_true.mu, psi_true.sigma2, psi_true.lam, renormalize=True)
    return InitReport(psi.sorted_by_location(), "true", 0)


def perturbed_init(psi_true: SnMixture, p: int, seed: int = 0) -> InitReport:
    """
    Spread p components over the p0 true components and jitter their locations.

    New component i is attached to true component j = i mod p0 (after sorting the truth by location). It inherits
    the scale and shape of its parent, gets the location mu_j + N(0, 0.1^2) and the weight pi_j / omega_j, where
    omega_j is the number of components attached to j.

    :param psi_true: true mixing distribution with p0 components
    :param p: number of components to produce, at least p0
    :param seed: seed for the location jitter
    """
    truth = psi_true.sorted_by_location()
    p0 = truth.p
    if p < p0:
        raise DomainError(f"cannot perturb {p0} components into {p}")
    parents = np.arange(p) % p0
    omega = np.bincount(parents, minlength=p0)
    rng = np.random.default_rng(seed)
    mu = truth.mu[parents] + rng.normal(0.0, PERTURBATION_SD, size=p)
    weights = truth.weights_array[parents] / omega[parents]
    psi = SnMixture.from_arrays(weights, mu, truth.sigma2[parents], truth.lam[parents], renormalize=True)
    return InitReport(_clamped(psi).sorted_by_location(), "perturbed", seed)


def resolve_init(spec: InitSpec, data: Vector, p: int) -> InitReport:
    """Turn an initialization spec into a starting mixture with p components."""
    if isinstance(spec, KMeansMoments):
        report = kmeans_moments_init(data, p, spec.seed)
    elif isinstance(spec, TrueValue):
        report = true_value_init(spec.psi)
    elif isinstance(spec, Explicit):
        report = InitReport(spec.psi, "explicit", 0)
    elif isinstance(spec, Perturbed):
        report = perturbed_init(spec.psi, p, spec.seed)
    else:
        raise ValueError("Unknown initialization type")
    if report.psi0.p != p:
        raise DomainError(f"{report.scheme} start has {report.psi0.p} components, expected {p}")
    return report
