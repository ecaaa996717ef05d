"""
Penalty functions and the penalized log-likelihood.

The scale penalty keeps every component variance away from zero, the shape penalty shrinks the shapes
towards zero. Both vanish at their centres and are non-positive everywhere.
"""
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from snmix.core.density import loglik
from snmix.core.mixture import SnMixture
from snmix.errors import DomainError
from snmix.utils import Vector, as_data

AZZALINI_C1 = 0.876
AZZALINI_C2 = 0.856


def _check_sigma2(sigma2: np.ndarray) -> None:
    if np.any(~np.isfinite(sigma2)) or np.any(sigma2 <= 0):
        raise DomainError("sigma2 must be positive and finite")


def penalty_sigma(sigma2: Union[float, Vector], a_n: float, s_n2: float) -> Union[float, np.ndarray]:
    """
    Scale penalty -a_n (s_n2 / sigma2 + log(sigma2 / s_n2) - 1).

    :param sigma2: squared scale(s), positive
    :param a_n: penalty strength, non-negative
    :param s_n2: sample variance, positive
    :return: a value <= 0, zero iff sigma2 == s_n2 or a_n == 0
    """
    s = np.asarray(sigma2, dtype=float)
    _check_sigma2(s)
    if a_n < 0 or not s_n2 > 0:
        raise DomainError(f"need a_n >= 0 and s_n2 > 0, got a_n={a_n}, s_n2={s_n2}")
    ratio = s_n2 / s
    out = -a_n * (ratio - np.log(ratio) - 1.0)
    return float(out) if out.ndim == 0 else out


def penalty_sigma_derivative(sigma2: Union[float, Vector], a_n: float, s_n2: float) -> Union[float, np.ndarray]:
    """d/d(sigma2) of :func:`penalty_sigma`."""
    s = np.asarray(sigma2, dtype=float)
    _check_sigma2(s)
    out = a_n * (s_n2 - s) / np.square(s)
    return float(out) if out.ndim == 0 else out


def penalty_lambda(lam: Union[float, Vector], b_n: float) -> Union[float, np.ndarray]:
    """
    Shape penalty -b_n (lam^2 - log(1 + lam^2)).

    :return: a value <= 0, zero iff lam == 0 or b_n == 0
    """
    lam = np.asarray(lam, dtype=float)
    if b_n < 0:
        raise DomainError(f"b_n must be non-negative, got {b_n}")
    l2 = np.square(lam)
    out = -b_n * (l2 - np.log1p(l2))
    return float(out) if out.ndim == 0 else out


def penalty_lambda_derivative(lam: Union[float, Vector], b_n: float) -> Union[float, np.ndarray]:
    """d/d(lam) of :func:`penalty_lambda`, equal to -2 b_n lam^3 / (1 + lam^2)."""
    lam = np.asarray(lam, dtype=float)
    out = -2.0 * b_n * lam**3 / (1.0 + np.square(lam))
    return float(out) if out.ndim == 0 else out


def penalty_lambda_delta(delta: Union[float, Vector], b_n: float) -> Union[float, np.ndarray]:
    """The shape penalty in the delta parametrization: -b_n (d2 / (1 - d2) + log(1 - d2))."""
    d2 = np.square(np.asarray(delta, dtype=float))
    if np.any(d2 >= 1.0):
        raise DomainError("delta must lie in the open interval (-1, 1)")
    out = -b_n * (d2 / (1.0 - d2) + np.log1p(-d2))
    return float(out) if out.ndim == 0 else out


def penalty_lambda_azzalini(lam: Union[float, Vector], c1: float = AZZALINI_C1, c2: float = AZZALINI_C2):
    """
    Shape penalty -c1 log(1 + c2 lam^2) for a single skew normal.

    :param c1: strength, non-negative (c1 = 0 switches the penalty off)
    :param c2: curvature, positive
    """
    if c1 < 0 or not c2 > 0:
        raise DomainError(f"need c1 >= 0 and c2 > 0, got c1={c1}, c2={c2}")
    lam = np.asarray(lam, dtype=float)
    out = -c1 * np.log1p(c2 * np.square(lam))
    return float(out) if out.ndim == 0 else out


def tuning(n: int, c_a: float = 1.0, c_b: float = 0.05) -> tuple:
    """
    Default penalty strengths a_n = c_a / n and b_n = c_b / log(n).

    :param n: sample size, at least 2
    :return: (a_n, b_n)
    """
    if n < 2:
        raise DomainError(f"tuning needs n >= 2, got {n}")
    if c_a < 0 or c_b < 0:
        raise DomainError("tuning constants must be non-negative")
    return c_a / n, c_b / np.log(n)


def sample_variance(data: Vector) -> float:
    """Unbiased sample variance (divisor n - 1)."""
    x = as_data(data, min_size=2)
    return float(np.var(x, ddof=1))


@dataclass(frozen=True)
class ProposedSigma:
    a_n: float
    s_n2: float

    def __post_init__(self):
        if self.a_n < 0 or not self.s_n2 > 0:
            raise DomainError(f"need a_n >= 0 and s_n2 > 0, got {self}")

    def value(self, sigma2: np.ndarray) -> np.ndarray:
        return penalty_sigma(sigma2, self.a_n, self.s_n2)


@dataclass(frozen=True)
class ProposedLambda:
    b_n: float

    def __post_init__(self):
        if self.b_n < 0:
            raise DomainError(f"b_n must be non-negative, got {self.b_n}")

    def value(self, lam: np.ndarray) -> np.ndarray:
        return penalty_lambda(lam, self.b_n)


@dataclass(frozen=True)
class AzzaliniLambda:
    c1: float = AZZALINI_C1
    c2: float = AZZALINI_C2

    def __post_init__(self):
        if self.c1 < 0 or not self.c2 > 0:
            raise DomainError(f"need c1 >= 0 and c2 > 0, got {self}")

    def value(self, lam: np.ndarray) -> np.ndarray:
        return penalty_lambda_azzalini(lam, self.c1, self.c2)


LambdaPenalty = Union[ProposedLambda, AzzaliniLambda]


@dataclass(frozen=True)
class PenaltySpec:
    """
    The penalty attached to a fit. ``None`` in a slot means that family is switched off.

    Every family applies per component and the total penalty is the sum over components.
    """

    sigma_penalty: Optional[ProposedSigma] = None
    lambda_penalty: Optional[LambdaPenalty] = None

    @classmethod
    def none(cls) -> "PenaltySpec":
        return cls()

    @classmethod
    def proposed(
        cls, data: Vector, c_a: float = 1.0, c_b: float = 0.05, sigma: bool = True, lam: bool = True
    ) -> "PenaltySpec":
        """The proposed scale and shape penalties with the default data-driven strengths."""
        x = as_data(data, min_size=2)
        a_n, b_n = tuning(x.size, c_a, c_b)
        return cls(
            sigma_penalty=ProposedSigma(a_n, sample_variance(x)) if sigma else None,
            lambda_penalty=ProposedLambda(b_n) if lam else None,
        )

    @classmethod
    def azzalini(
        cls, data: Vector, c1: float = AZZALINI_C1, c2: float = AZZALINI_C2, c_a: float = 1.0, sigma: bool = True
    ) -> "PenaltySpec":
        """Azzalini's shape penalty, optionally combined with the proposed scale penalty."""
        x = as_data(data, min_size=2)
        a_n, _ = tuning(x.size, c_a)
        return cls(
            sigma_penalty=ProposedSigma(a_n, sample_variance(x)) if sigma else None,
            lambda_penalty=AzzaliniLambda(c1, c2),
        )

    @property
    def is_none(self) -> bool:
        return self.sigma_penalty is None and self.lambda_penalty is None

    @property
    def a_n(self) -> float:
        return 0.0 if self.sigma_penalty is None else self.sigma_penalty.a_n

    @property
    def s_n2(self) -> float:
        return 1.0 if self.sigma_penalty is None else self.sigma_penalty.s_n2

    @property
    def b_n(self) -> float:
        return self.lambda_penalty.b_n if isinstance(self.lambda_penalty, ProposedLambda) else 0.0

    def sigma_terms(self, sigma2: Vector) -> np.ndarray:
        sigma2 = np.asarray(sigma2, dtype=float)
        return np.zeros_like(sigma2) if self.sigma_penalty is None else self.sigma_penalty.value(sigma2)

    def lambda_terms(self, lam: Vector) -> np.ndarray:
        lam = np.asarray(lam, dtype=float)
        return np.zeros_like(lam) if self.lambda_penalty is None else self.lambda_penalty.value(lam)

    def total(self, psi: SnMixture) -> float:
        """Sum of all penalty terms over the components of psi."""
        return float(np.sum(self.sigma_terms(psi.sigma2)) + np.sum(self.lambda_terms(psi.lam)))

    def to_dict(self) -> dict:
        out = {"sigma": None, "lambda": None}
        if self.sigma_penalty is not None:
            out["sigma"] = {"type": "proposed", "a_n": self.sigma_penalty.a_n, "s_n2": self.sigma_penalty.s_n2}
        if isinstance(self.lambda_penalty, ProposedLambda):
            out["lambda"] = {"type": "proposed", "b_n": self.lambda_penalty.b_n}
        elif isinstance(self.lambda_penalty, AzzaliniLambda):
            out["lambda"] = {"type": "azzalini", "c1": self.lambda_penalty.c1, "c2": self.lambda_penalty.c2}
        return out

    @classmethod
    def from_dict(cls, config: Optional[dict]) -> "PenaltySpec":
        if not config:
            return cls()
        sigma, lam = config.get("sigma"), config.get("lambda")
        sigma_pen = ProposedSigma(sigma["a_n"], sigma["s_n2"]) if sigma else None
        if not lam:
            lam_pen = None
        elif lam.get("type") == "proposed":
            lam_pen = ProposedLambda(lam["b_n"])
        elif lam.get("type") == "azzalini":
            lam_pen = AzzaliniLambda(lam["c1"], lam["c2"])
        else:
            raise DomainError(f"Unknown lambda penalty type {lam.get('type')}")
        return cls(sigma_penalty=sigma_pen, lambda_penalty=lam_pen)


def penalized_loglik(data: Vector, psi: SnMixture, pen: PenaltySpec) -> float:
    """
    l(psi) + sum_i [p_sigma(sigma2_i) + p_lambda(lam_i)].

    :param data: sample
    :param psi: mixture
    :param pen: penalty
    :return: the penalized log-likelihood; equals the log-likelihood when every family is off
    """
    return loglik(data, psi) + pen.total(psi)


def lambda_penalty_in_delta(pen: PenaltySpec, delta: np.ndarray) -> np.ndarray:
    """The shape penalty of ``pen`` evaluated at lam(delta)."""
    delta = np.asarray(delta, dtype=float)
    if pen.lambda_penalty is None:
        return np.zeros_like(delta)
    if isinstance(pen.lambda_penalty, ProposedLambda):
        return penalty_lambda_delta(delta, pen.lambda_penalty.b_n)
    lam2 = np.square(delta) / ((1.0 - delta) * (1.0 + delta))
    return -pen.lambda_penalty.c1 * np.log1p(pen.lambda_penalty.c2 * lam2)
