from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from snmix.errors import DomainError
from snmix.utils import Vector

WEIGHT_SUM_TOL = 1e-12


@dataclass(frozen=True)
class SnComponent:
    """
    A skew normal component SN(mu, sigma2, lam).

    lam = 0 is the normal N(mu, sigma2). The shape is stored as ``lam`` since ``lambda`` is reserved.
    """

    mu: float
    sigma2: float
    lam: float

    def __post_init__(self):
        for name in ("mu", "sigma2", "lam"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not (np.isfinite(self.mu) and np.isfinite(self.lam)):
            raise DomainError(f"component location and shape must be finite, got {self}")
        if not (np.isfinite(self.sigma2) and self.sigma2 > 0):
            raise DomainError(f"component scale must be positive and finite, got sigma2={self.sigma2}")

    @property
    def sigma(self) -> float:
        return float(np.sqrt(self.sigma2))

    @property
    def delta(self) -> float:
        return float(self.lam / np.hypot(1.0, self.lam))


@dataclass(frozen=True)
class SnMixture:
    """
    A finite mixture of skew normal components.

    Values are immutable. Label order is the order the components are given in; estimators return
    mixtures sorted by ascending location.
    """

    weights: Tuple[float, ...]
    components: Tuple[SnComponent, ...]

    def __post_init__(self):
        weights = tuple(float(w) for w in self.weights)
        components = tuple(self.components)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "components", components)
        if len(components) < 1:
            raise DomainError("a mixture needs at least one component")
        if len(weights) != len(components):
            raise DomainError(f"{len(weights)} weights for {len(components)} components")
        if not all(isinstance(c, SnComponent) for c in components):
            raise DomainError("components must be SnComponent instances")
        if any(not np.isfinite(w) or w < 0 for w in weights):
            raise DomainError(f"weights must be non-negative, got {weights}")
        if abs(sum(weights) - 1.0) > WEIGHT_SUM_TOL:
            raise DomainError(f"weights must sum to one, got {sum(weights)!r}")

    @classmethod
    def from_arrays(
        cls, weights: Vector, mu: Vector, sigma2: Vector, lam: Vector, renormalize: bool = False
    ) -> "SnMixture":
        """
        Build a mixture from parallel parameter vectors.

        :param weights: mixing proportions
        :param mu: locations
        :param sigma2: squared scales
        :param lam: shapes
        :param renormalize: divide the weights by their sum (for inputs rounded by text formats)
        :return: the mixture
        """
        w, m, s, l = (np.atleast_1d(np.asarray(v, dtype=float)) for v in (weights, mu, sigma2, lam))
        if not (w.shape == m.shape == s.shape == l.shape) or w.ndim != 1:
            raise DomainError("parameter vectors must be one-dimensional and of equal length")
        if renormalize:
            total = w.sum()
            if not total > 0:
                raise DomainError("weights must have a positive sum")
            w = w / total
        return cls(tuple(w), tuple(SnComponent(*theta) for theta in zip(m, s, l)))

    @classmethod
    def single(cls, mu: float, sigma2: float, lam: float = 0.0) -> "SnMixture":
        return cls((1.0,), (SnComponent(mu, sigma2, lam),))

    @property
    def p(self) -> int:
        return len(self.components)

    @property
    def weights_array(self) -> np.ndarray:
        return np.array(self.weights)

    @property
    def mu(self) -> np.ndarray:
        return np.array([c.mu for c in self.components])

    @property
    def sigma2(self) -> np.ndarray:
        return np.array([c.sigma2 for c in self.components])

    @property
    def lam(self) -> np.ndarray:
        return np.array([c.lam for c in self.components])

    @property
    def delta(self) -> np.ndarray:
        lam = self.lam
        return lam / np.hypot(1.0, lam)

    def replace(
        self,
        weights: Optional[Vector] = None,
        mu: Optional[Vector] = None,
        sigma2: Optional[Vector] = None,
        lam: Optional[Vector] = None,
    ) -> "SnMixture":
        """Return a copy with some parameter vectors replaced."""
        return SnMixture.from_arrays(
            self.weights_array if weights is None else weights,
            self.mu if mu is None else mu,
            self.sigma2 if sigma2 is None else sigma2,
            self.lam if lam is None else lam,
        )

    def permute(self, order: Vector) -> "SnMixture":
        order = np.asarray(order, dtype=int)
        if sorted(order.tolist()) != list(range(self.p)):
            raise DomainError(f"{order} is not a permutation of {self.p} labels")
        return SnMixture(
            tuple(self.weights[i] for i in order), tuple(self.components[i] for i in order)
        )

    def to_dict(self) -> dict:
        return {
            "weights": list(self.weights),
            "mu": self.mu.tolist(),
            "sigma2": self.sigma2.tolist(),
            "lambda": self.lam.tolist(),
        }

    @classmethod
    def from_dict(cls, params: dict, renormalize: bool = False) -> "SnMixture":
        try:
            return cls.from_arrays(
                params["weights"], params["mu"], params["sigma2"], params["lambda"], renormalize=renormalize
            )
        except KeyError as e:
            raise DomainError(f"missing mixture parameter {e}") from e

    def sorted_by_location(self) -> "SnMixture":
        """Relabel components by ascending location; ties keep their current order."""
        return self.permute(self.location_order())

    def location_order(self) -> np.ndarray:
        return np.argsort(self.mu, kind="stable")
