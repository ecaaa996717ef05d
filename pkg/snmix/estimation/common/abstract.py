import logging
from typing import Optional

from snmix.core.penalty import PenaltySpec
from snmix.estimation.fit import Algorithm, FitConfig, FitResult, fit_best, fit_perturbed
from snmix.initialization import InitSpec, KMeansMoments
from snmix.utils import Vector, as_data

logger = logging.getLogger(__name__)


class AbstractEstimator:
    """
    A generic estimator of finite skew normal mixtures.

    Subclasses choose the penalty; the fitting engine, the starts and the stopping rule are shared.
    """

    name = "abstract"

    def __init__(self, config: dict = None) -> None:
        # Configuration
        self.config = self.default_config()
        self.configure(config)

    @classmethod
    def default_config(cls) -> dict:
        """
        Default estimator configuration

        Can be overloaded within estimator config or with configure()
        :return: a configuration dict
        """
        return {
            "algorithm": "ECM",
            "max_iter": 2000,
            "rel_tol": 1e-6,
            "starts": 1,  # k-means starts, best objective kept
            "seed": 0,
            "c_a": 1.0,  # a_n = c_a / n
            "c_b": 0.05,  # b_n = c_b / log(n)
            "debug": False,
        }

    def configure(self, config: dict) -> None:
        if config:
            self.config.update(config)

    def penalty(self, data: Vector) -> PenaltySpec:
        """The penalty for this sample."""
        raise NotImplementedError()

    def fit_config(self, data: Vector, init: Optional[InitSpec] = None) -> FitConfig:
        return FitConfig(
            algorithm=Algorithm(self.config["algorithm"]),
            penalty=self.penalty(data),
            max_iter=int(self.config["max_iter"]),
            rel_tol=float(self.config["rel_tol"]),
            init=KMeansMoments(int(self.config["seed"])) if init is None else init,
            debug=bool(self.config["debug"]),
        )

    def fit(self, data: Vector, p: int, init: Optional[InitSpec] = None) -> FitResult:
        """
        Fit p components.

        :param data: sample
        :param p: number of components
        :param init: starting values; k-means starts are used when None
        """
        x = as_data(data)
        cfg = self.fit_config(x, init)
        starts = int(self.config["starts"]) if init is None or isinstance(init, KMeansMoments) else 1
        result = fit_best(x, p, cfg, starts=starts, seed=int(self.config["seed"]))
        logger.debug("%s fit: objective %.6f after %d iterations", self.name, result.objective, result.iterations)
        return result

    def fit_perturbed(self, data: Vector, psi_true, p: int, starts: int = 10) -> FitResult:
        """Best of ``starts`` fits from perturbations of the true mixing distribution."""
        x = as_data(data)
        return fit_perturbed(x, psi_true, p, self.fit_config(x), starts=starts, seed=int(self.config["seed"]))

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}({self.config})"
