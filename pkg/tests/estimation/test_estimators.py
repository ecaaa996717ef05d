import pytest

from snmix.core.mixture import SnMixture
from snmix.core.penalty import AzzaliniLambda, ProposedLambda
from snmix.errors import DomainError
from snmix.estimation import (
    AzzaliniPenalized,
    GaussianMixture,
    MaximumLikelihood,
    ModifiedMaximumLikelihood,
    PenalizedMaximumLikelihood,
    estimator_factory,
)
from snmix.estimation.fit import Algorithm
from snmix.registration import make, register, registry
from snmix.sampler import RngHandle, sample_mixture

estimator_configs = [
    ({"type": "MaximumLikelihood"}, MaximumLikelihood),
    ({"type": "PenalizedMaximumLikelihood", "c_b": 0.1}, PenalizedMaximumLikelihood),
    ({"type": "AzzaliniPenalized", "algorithm": "ECME"}, AzzaliniPenalized),
    ({"type": "ModifiedMaximumLikelihood", "level": 0.1}, ModifiedMaximumLikelihood),
    ({"type": "GaussianMixture"}, GaussianMixture),
]


@pytest.mark.parametrize("config, cls", estimator_configs)
def test_factory(config, cls):
    estimator = estimator_factory(config)
    assert type(estimator) is cls
    for key, value in config.items():
        if key != "type":
            assert estimator.config[key] == value
    assert "type" not in estimator.config


def test_unknown_type():
    with pytest.raises(ValueError):
        estimator_factory({"type": "Bayesian"})


def test_registry():
    assert set(registry) == {"mle", "me", "pmle", "mple", "gmix"}
    assert isinstance(make("me"), ModifiedMaximumLikelihood)
    with pytest.raises(DomainError):
        make("em")


def test_configure():
    estimator = make("pmle", c_b=0.2, starts=3)
    assert estimator.config["c_b"] == 0.2 and estimator.config["starts"] == 3
    assert estimator.config["rel_tol"] == PenalizedMaximumLikelihood.default_config()["rel_tol"]
    estimator.configure({"algorithm": "ECME"})
    x = sample_mixture(SnMixture.single(0.0, 1.0, 2.0), 50, RngHandle(0))
    cfg = estimator.fit_config(x)
    assert cfg.algorithm is Algorithm.ECME
    assert isinstance(cfg.penalty.lambda_penalty, ProposedLambda)
    assert isinstance(make("mple").penalty(x).lambda_penalty, AzzaliniLambda)
    assert make("mle").penalty(x).sigma_penalty is None
    assert make("gmix").penalty(x).lambda_penalty is None


@pytest.mark.parametrize(
    "entry_point",
    [
        "snmix.estimation.estimators",
        "snmix.estimation.estimators:",
        "snmix.estimation.missing:MaximumLikelihood",
        "snmix.estimation.estimators:Bayesian",
    ],
)
def test_malformed_entry_point(entry_point):
    register(id="broken", entry_point=entry_point)
    try:
        with pytest.raises(DomainError, match="broken"):
            make("broken")
    finally:
        del registry["broken"]
