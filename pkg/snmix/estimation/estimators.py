from dataclasses import replace
from typing import Optional

import numpy as np

from snmix.core.density import loglik
from snmix.core.penalty import AZZALINI_C1, AZZALINI_C2, PenaltySpec
from snmix.estimation.common.abstract import AbstractEstimator
from snmix.estimation.fit import FitResult, fit
from snmix.estimation.modified import ME_THRESHOLD, profile_lrt_me
from snmix.initialization import Explicit, InitSpec, Perturbed, resolve_init
from snmix.metrics import degeneracy_flags
from snmix.sampler import derive_seed
from snmix.utils import Vector, as_data


class MaximumLikelihood(AbstractEstimator):
    """Unpenalized maximum likelihood. Variances may collapse and shapes may diverge."""

    name = "mle"

    def penalty(self, data: Vector) -> PenaltySpec:
        return PenaltySpec.none()


class PenalizedMaximumLikelihood(AbstractEstimator):
    """
    Penalized maximum likelihood with the proposed scale and shape penalties.

    Either penalty can be switched off, which is how the single-component shape study isolates the shape penalty.
    """

    name = "pmle"

    @classmethod
    def default_config(cls) -> dict:
        config = super().default_config()
        config.update({"sigma_penalty": True, "lambda_penalty": True})
        return config

    def penalty(self, data: Vector) -> PenaltySpec:
        return PenaltySpec.proposed(
            data,
            c_a=self.config["c_a"],
            c_b=self.config["c_b"],
            sigma=self.config["sigma_penalty"],
            lam=self.config["lambda_penalty"],
        )


class AzzaliniPenalized(AbstractEstimator):
    """Azzalini's shape penalty, by default combined with the proposed scale penalty to keep mixtures bounded."""

    name = "mple"

    @classmethod
    def default_config(cls) -> dict:
        config = super().default_config()
        config.update({"c1": AZZALINI_C1, "c2": AZZALINI_C2, "sigma_penalty": True})
        return config

    def penalty(self, data: Vector) -> PenaltySpec:
        return PenaltySpec.azzalini(
            data, c1=self.config["c1"], c2=self.config["c2"], c_a=self.config["c_a"], sigma=self.config["sigma_penalty"]
        )


class ModifiedMaximumLikelihood(MaximumLikelihood):
    """The MLE followed by profile likelihood ratio shrinkage of its divergent shapes."""

    name = "me"

    @classmethod
    def default_config(cls) -> dict:
        config = super().default_config()
        config.update({"level": 0.05, "threshold": ME_THRESHOLD})
        return config

    def modify(self, data: Vector, mle_fit: FitResult) -> FitResult:
        x = as_data(data)
        lam = profile_lrt_me(
            x, mle_fit, level=self.config["level"], cfg=self.fit_config(x), threshold=self.config["threshold"]
        )
        psi = mle_fit.psi.replace(lam=lam)
        return replace(mle_fit, psi=psi, loglik=loglik(x, psi), divergent_lambda=degeneracy_flags(psi).lambda_divergent)

    def fit(self, data: Vector, p: int, init: Optional[InitSpec] = None) -> FitResult:
        return self.modify(data, super().fit(data, p, init))


class GaussianMixture(AbstractEstimator):
    """Normal mixture fitted by the same engine with every shape frozen at zero, with the proposed scale penalty."""

    name = "gmix"

    @classmethod
    def default_config(cls) -> dict:
        config = super().default_config()
        config.update({"sigma_penalty": True})
        return config

    def penalty(self, data: Vector) -> PenaltySpec:
        return PenaltySpec.proposed(data, c_a=self.config["c_a"], sigma=self.config["sigma_penalty"], lam=False)

    def fit(self, data: Vector, p: int, init: Optional[InitSpec] = None) -> FitResult:
        x = as_data(data)
        cfg = self.fit_config(x, init)
        start = resolve_init(cfg.init, x, p).psi0
        start = start.replace(lam=np.zeros(p))
        return fit(x, p, replace(cfg, init=Explicit(start), fixed_lambda=(True,) * p))

    def fit_perturbed(self, data: Vector, psi_true, p: int, starts: int = 10) -> FitResult:
        best = None
        for s in range(starts):
            result = self.fit(data, p, init=Perturbed(psi_true, derive_seed(self.config["seed"], s)))
            if best is None or result.objective > best.objective:
                best = result
        return best


def estimator_factory(config: dict) -> AbstractEstimator:
    config = dict(config)
    kind = config.pop("type")
    if kind == "MaximumLikelihood":
        return MaximumLikelihood(config)
    elif kind == "PenalizedMaximumLikelihood":
        return PenalizedMaximumLikelihood(config)
    elif kind == "AzzaliniPenalized":
        return AzzaliniPenalized(config)
    elif kind == "ModifiedMaximumLikelihood":
        return ModifiedMaximumLikelihood(config)
    elif kind == "GaussianMixture":
        return GaussianMixture(config)
    else:
        raise ValueError("Unknown estimator type")
