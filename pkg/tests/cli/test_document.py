import json

import numpy as np
import pytest

from snmix.core.mixture import SnMixture
from snmix.core.penalty import PenaltySpec
from snmix.document import SCHEMA_VERSION, ModelDocument
from snmix.errors import InputError
from snmix.estimation.fit import FitResult

MODEL_1 = SnMixture.from_arrays([0.5, 0.5], [-2.0, 2.0], [1.0, 2.0], [2.0, 1.0])


def test_document_layout():
    content = json.loads(ModelDocument.from_mixture(MODEL_1).to_json())
    assert list(content)[:6] == ["schema_version", "p", "weights", "mu", "sigma2", "lambda"]
    assert content["schema_version"] == SCHEMA_VERSION
    assert content["lambda"] == [2.0, 1.0]
    assert "lam" not in content


def test_floats_are_exact(tmp_path):
    psi = SnMixture.from_arrays([0.1, 0.9], [1.0 / 3.0, np.pi], [np.e, 1e-7], [-1.0 / 7.0, 12.5])
    path = str(tmp_path / "model.json")
    ModelDocument.from_mixture(psi, estimator="pmle").to_json(path)
    document = ModelDocument.read(path)
    assert document.to_mixture() == psi
    assert document.estimator == "pmle"


def test_from_fit():
    psi = MODEL_1.replace(sigma2=[1e-11, 2.0])
    result = FitResult(psi=psi, objective_trace=(-10.0, -9.5), iterations=2, converged=False, loglik=-9.5,
                       frozen=(True, False), stop_reason="degenerate_sigma")
    document = ModelDocument.from_fit(result, "mle", "ECM", PenaltySpec.none(), seed=3)
    assert document.degenerate
    assert document.flags["sigma_degenerate"] and not document.flags["lambda_divergent"]
    assert document.flags["frozen"] == [0]
    assert document.objective == -9.5
    content = json.loads(document.to_json())
    assert content["seed"] == 3 and content["algorithm"] == "ECM"
    assert not ModelDocument.from_mixture(MODEL_1).degenerate


def test_invalid_documents():
    with pytest.raises(InputError):
        ModelDocument.from_dict({"weights": [1.0], "mu": [0.0], "sigma2": [1.0]})
    with pytest.raises(InputError):
        ModelDocument.from_dict({"p": 2, "weights": [1.0], "mu": [0.0], "sigma2": [1.0], "lambda": [0.0]})
    with pytest.raises(InputError):
        ModelDocument.from_json("[1, 2]")
    with pytest.raises(InputError) as info:
        ModelDocument.from_json('{\n  "p": 1,\n  oops\n}')
    assert info.value.line == 3
    assert str(info.value).startswith("line 3: invalid JSON")


def test_missing_file(tmp_path):
    with pytest.raises(InputError):
        ModelDocument.read(str(tmp_path / "missing.json"))


@pytest.mark.parametrize(
    "params",
    [
        {"weights": [1.0], "mu": [0.0], "sigma2": [-1.0], "lambda": [0.0]},
        {"weights": [0.3, 0.3], "mu": [0.0, 1.0], "sigma2": [1.0, 1.0], "lambda": [0.0, 0.0]},
        {"weights": [1.0], "mu": [0.0], "sigma2": [1.0], "lambda": [float("inf")]},
    ],
)
def test_invalid_mixture(params):
    document = ModelDocument.from_dict(params)
    with pytest.raises(InputError, match="invalid model document"):
        document.to_mixture()


def test_rounded_weights_are_renormalized():
    document = ModelDocument.from_dict({"weights": [0.3333333, 0.6666666], "mu": [0.0, 1.0],
                                        "sigma2": [1.0, 1.0], "lambda": [0.0, 0.0]})
    assert sum(document.to_mixture().weights) == pytest.approx(1.0, abs=1e-15)
