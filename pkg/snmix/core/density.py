"""
Densities of skew normal components and mixtures, on the log scale.

All functions broadcast over numpy arrays. The skew normal density is
f(x; mu, sigma2, lam) = 2 / sigma * phi((x - mu) / sigma) * Phi(lam * (x - mu) / sigma).
"""
import math
from typing import Union

import numpy as np
from scipy import special

from snmix.core.mixture import SnComponent, SnMixture
from snmix.errors import DomainError
from snmix.utils import HALF_LOG_2PI, LOG_2, SQRT_2_OVER_PI, Vector, as_data

# Below this argument the ratio phi/Phi is computed from the scaled complementary error function
MILLS_SWITCH = -5.0


def delta_of_lambda(lam: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """delta = lam / sqrt(1 + lam^2), in (-1, 1)."""
    return lam / np.hypot(1.0, lam)


def lambda_of_delta(delta: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """Inverse of :func:`delta_of_lambda` on (-1, 1)."""
    delta = np.asarray(delta, dtype=float)
    if np.any(np.abs(delta) >= 1.0):
        raise DomainError("delta must lie in the open interval (-1, 1)")
    out = delta / np.sqrt((1.0 - delta) * (1.0 + delta))
    return float(out) if out.ndim == 0 else out


def one_minus_delta2(lam: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """1 - delta^2 = 1 / (1 + lam^2), without cancellation for large shapes."""
    return 1.0 / (1.0 + np.square(lam))


def inverse_mills(t: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """
    phi(t) / Phi(t), accurate over the whole real line.

    For t < -5 the ratio is evaluated as sqrt(2/pi) / erfcx(-t / sqrt(2)), which behaves like -t as t -> -inf.

    :param t: argument(s)
    :return: the inverse Mills ratio, always positive
    """
    t = np.asarray(t, dtype=float)
    with np.errstate(over="ignore", under="ignore"):
        direct = np.exp(-0.5 * np.square(t) - HALF_LOG_2PI - special.log_ndtr(t))
        tail = SQRT_2_OVER_PI / special.erfcx(-t / np.sqrt(2.0))
    out = np.where(t >= MILLS_SWITCH, direct, tail)
    return float(out) if out.ndim == 0 else out


def _sn_logpdf(x: np.ndarray, mu, sigma2, lam) -> np.ndarray:
    z = (x - mu) / np.sqrt(sigma2)
    return LOG_2 - 0.5 * np.log(sigma2) - 0.5 * np.square(z) - HALF_LOG_2PI + special.log_ndtr(lam * z)


def sn_logpdf(x: Union[float, Vector], theta: SnComponent) -> Union[float, np.ndarray]:
    """
    Log-density of a single skew normal component.

    :param x: point(s)
    :param theta: the component
    :return: log f(x; theta), -inf where the density underflows
    """
    arr = np.asarray(x, dtype=float)
    out = _sn_logpdf(arr, theta.mu, theta.sigma2, theta.lam)
    return float(out) if out.ndim == 0 else out


def component_logpdf(data: np.ndarray, psi: SnMixture) -> np.ndarray:
    """
    Weighted component log-densities log(pi_i) + log f(x_j; theta_i).

    :return: array of shape (n, p); components with zero weight give -inf
    """
    with np.errstate(divide="ignore"):
        log_w = np.log(psi.weights_array)
    return log_w + _sn_logpdf(data[:, None], psi.mu, psi.sigma2, psi.lam)


def mixture_logpdf(x: Union[float, Vector], psi: SnMixture) -> Union[float, np.ndarray]:
    """
    Log-density of the mixture, combined with log-sum-exp.

    :param x: point(s)
    :param psi: the mixture
    :return: log f(x; psi)
    """
    arr = np.asarray(x, dtype=float)
    flat = np.atleast_1d(arr).ravel()
    out = special.logsumexp(component_logpdf(flat, psi), axis=1).reshape(arr.shape)
    return float(out) if arr.ndim == 0 else out


def loglik(data: Vector, psi: SnMixture) -> float:
    """
    Log-likelihood of a sample under a mixture.

    The sum is exactly rounded, so the result does not depend on the order of the observations.
    """
    x = as_data(data)
    return math.fsum(mixture_logpdf(x, psi))


def sn_mean(theta: SnComponent) -> float:
    return theta.mu + theta.sigma * theta.delta * SQRT_2_OVER_PI


def sn_variance(theta: SnComponent) -> float:
    return theta.sigma2 * (1.0 - 2.0 * theta.delta**2 / np.pi)


def sn_skewness(theta: SnComponent) -> float:
    m = theta.delta * SQRT_2_OVER_PI
    return float((4.0 - np.pi) / 2.0 * m**3 / (1.0 - m**2) ** 1.5)
