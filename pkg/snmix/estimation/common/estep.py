"""
E-step of the penalized ECM algorithm.

Each observation carries a latent label and a latent half-normal tau. Given the current mixture the
E-step returns, for every (observation, component) pair, the posterior responsibility alpha and the
conditional first and second moments beta = E[tau] and gamma = E[tau^2].
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from snmix.core.density import component_logpdf, inverse_mills, one_minus_delta2
from snmix.core.mixture import SnMixture
from snmix.core.penalty import PenaltySpec
from snmix.errors import DomainError
from snmix.utils import as_data


@dataclass(frozen=True)
class EStepCache:
    """
    Conditional expectations computed at a fixed mixture. Arrays have shape (n, p) and are read-only.

    ``mills`` holds the inverse Mills ratio at the standardized conditional location of tau.
    """

    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    mills: np.ndarray

    def __post_init__(self):
        shape = self.alpha.shape
        for name in ("alpha", "beta", "gamma", "mills"):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.shape != shape or arr.ndim != 2:
                raise DomainError(f"E-step array {name} has shape {arr.shape}, expected {shape}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.alpha.shape[0]

    @property
    def p(self) -> int:
        return self.alpha.shape[1]

    @property
    def totals(self) -> np.ndarray:
        """Expected component counts sum_j alpha_ij."""
        return self.alpha.sum(axis=0)

    def subset(self, components: np.ndarray) -> "EStepCache":
        """Restrict the cache to the selected components (boolean mask or indices)."""
        return EStepCache(
            self.alpha[:, components], self.beta[:, components], self.gamma[:, components], self.mills[:, components]
        )


def responsibilities(data: np.ndarray, psi: SnMixture) -> np.ndarray:
    """Posterior label probabilities, shape (n, p); rows sum to one."""
    log_f = component_logpdf(data, psi)
    return np.exp(log_f - special.logsumexp(log_f, axis=1, keepdims=True))


def tau_moments(data: np.ndarray, psi: SnMixture):
    """
    Conditional moments of tau given x and the label.

    Given label i, tau | x is N(delta_i (x - mu_i), sigma_i^2 (1 - delta_i^2)) truncated to the positive half line.

    :return: (beta, gamma, mills), each of shape (n, p)
    """
    sigma = np.sqrt(psi.sigma2)
    t = psi.lam * (data[:, None] - psi.mu) / sigma
    sigma_tau = sigma * np.sqrt(one_minus_delta2(psi.lam))
    mills = inverse_mills(t)
    beta = sigma_tau * (t + mills)
    gamma = np.square(sigma_tau) * (np.square(t) + 1.0 + t * mills)
    # rounding can break the moment inequalities in the far tail
    beta = np.maximum(beta, 0.0)
    gamma = np.maximum(gamma, np.square(beta))
    return beta, gamma, mills


def e_step(data, psi: SnMixture) -> EStepCache:
    """
    Compute responsibilities and conditional tau moments at psi.

    :param data: sample of size n
    :param psi: current mixture
    :return: the E-step cache
    """
    x = as_data(data)
    alpha = responsibilities(x, psi)
    beta, gamma, mills = tau_moments(x, psi)
    return EStepCache(alpha, beta, gamma, mills)


def q_function(psi: SnMixture, data, cache: EStepCache, pen: PenaltySpec) -> float:
    """
    Expected complete-data penalized log-likelihood at psi, with expectations taken from ``cache``.

    Constants that do not depend on psi are dropped, so only differences of this function are meaningful.
    """
    x = as_data(data)
    if cache.n != x.size or cache.p != psi.p:
        raise DomainError("E-step cache does not match the data or the mixture")
    totals = cache.totals
    w = psi.weights_array
    sigma2 = psi.sigma2
    delta = psi.delta
    u = one_minus_delta2(psi.lam)
    resid = x[:, None] - psi.mu
    quad = cache.gamma - 2.0 * delta * cache.beta * resid + np.square(resid)
    with np.errstate(divide="ignore", invalid="ignore"):
        weight_term = np.where(totals > 0, totals * np.log(w), 0.0)
    per_component = (
        weight_term
        - totals * (np.log(sigma2) + 0.5 * np.log(u))
        - np.sum(cache.alpha * quad, axis=0) / (2.0 * sigma2 * u)
    )
    return math.fsum(per_component) + pen.total(psi)
