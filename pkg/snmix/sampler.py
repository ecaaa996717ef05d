"""
Seeded sampling from skew normal mixtures.

Draws use the stochastic representation X = mu + delta * tau + sqrt(1 - delta^2) * sigma * eps with
tau ~ |N(0, sigma^2)| and eps ~ N(0, 1) independent.
"""
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from snmix.core.density import one_minus_delta2
from snmix.core.mixture import SnComponent, SnMixture
from snmix.errors import DomainError


class RngHandle:
    """
    A reproducible random stream (PCG64), identified by its seed entropy.

    Child streams are derived by spawning keys, so replication ``r`` of a study always sees the same numbers
    whatever the number of worker processes.
    """

    def __init__(self, seed: Union[int, Sequence[int]]):
        entropy = tuple(int(s) for s in np.atleast_1d(seed))
        if any(s < 0 for s in entropy):
            raise DomainError(f"seed entropy must be non-negative, got {entropy}")
        self.entropy: Tuple[int, ...] = entropy
        self.generator = np.random.Generator(np.random.PCG64(np.random.SeedSequence(list(entropy))))

    @classmethod
    def child(cls, master_seed: int, *keys: int) -> "RngHandle":
        """Independent stream for ``keys`` under ``master_seed``."""
        return cls((master_seed,) + tuple(keys))

    def __repr__(self) -> str:
        return f"RngHandle({self.entropy})"


def derive_seed(master_seed: int, *keys: int) -> int:
    """A deterministic 63-bit seed for the stream ``keys`` under ``master_seed``."""
    state = np.random.SeedSequence([int(master_seed)] + [int(k) for k in keys]).generate_state(1, dtype=np.uint64)
    return int(state[0] >> np.uint64(1))


def sample_half_normal(sigma: float, rng: RngHandle, size: Optional[int] = None):
    """|N(0, sigma^2)| draws."""
    if not sigma > 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    return np.abs(rng.generator.normal(0.0, sigma, size=size))


def sample_sn(theta: SnComponent, rng: RngHandle, size: Optional[int] = None):
    """
    Draw from a single skew normal component.

    :param theta: the component
    :param rng: random stream, advanced in place
    :param size: number of draws, None for a scalar
    """
    tau = sample_half_normal(theta.sigma, rng, size)
    eps = rng.generator.standard_normal(size)
    out = theta.mu + theta.delta * tau + np.sqrt(one_minus_delta2(theta.lam)) * theta.sigma * eps
    return float(out) if size is None else out


def sample_labels(psi: SnMixture, n: int, rng: RngHandle) -> np.ndarray:
    return rng.generator.choice(psi.p, size=n, p=psi.weights_array)


def sample_mixture(psi: SnMixture, n: int, rng: RngHandle, return_labels: bool = False):
    """
    Draw an i.i.d. sample of size n from a mixture.

    Each observation picks its component from the mixing proportions, then draws from that component.

    :param psi: the mixture
    :param n: sample size, positive
    :param rng: random stream, advanced in place
    :param return_labels: also return the component labels
    :return: the sample, or (sample, labels)
    """
    if n < 1:
        raise DomainError(f"sample size must be positive, got {n}")
    labels = sample_labels(psi, n, rng)
    sigma = np.sqrt(psi.sigma2)[labels]
    tau = np.abs(rng.generator.standard_normal(n)) * sigma
    eps = rng.generator.standard_normal(n)
    lam = psi.lam[labels]
    x = psi.mu[labels] + psi.delta[labels] * tau + np.sqrt(one_minus_delta2(lam)) * sigma * eps
    return (x, labels) if return_labels else x
