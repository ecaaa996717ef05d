from snmix.core.mixture import SnComponent, SnMixture
from snmix.registration import make, register


def register_estimators():
    """Register the estimators under their short names."""

    # maximum likelihood and its modified version
    register(id="mle", entry_point="snmix.estimation.estimators:MaximumLikelihood")
    register(id="me", entry_point="snmix.estimation.estimators:ModifiedMaximumLikelihood")

    # penalized estimators
    register(id="pmle", entry_point="snmix.estimation.estimators:PenalizedMaximumLikelihood")
    register(id="mple", entry_point="snmix.estimation.estimators:AzzaliniPenalized")

    # normal mixtures through the same engine
    register(id="gmix", entry_point="snmix.estimation.estimators:GaussianMixture")


register_estimators()
