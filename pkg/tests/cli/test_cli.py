import json
import os

import numpy as np
import pandas as pd
import pytest

from snmix.bench.presets import model_preset
from snmix.bench.study import REPORT_COLUMNS
from snmix.cli import EXIT_DEGENERATE, EXIT_IO, EXIT_OK, EXIT_USAGE, main
from snmix.document import ModelDocument

DATA_PATH = os.path.join(os.path.dirname(os.path.realpath(__file__)), "../data/")
FAITHFUL = os.path.join(DATA_PATH, "faithful.csv")

TINY_STUDY = {
    "truth": {"weights": [0.5, 0.5], "mu": [-2.0, 2.0], "sigma2": [1.0, 2.0], "lambda": [2.0, 1.0]},
    "sample_sizes": [40],
    "fit_orders": [2],
    "replications": 1,
    "estimators": ["PMLE"],
    "max_iter": 200,
    "name": "tiny",
}


def test_fit_faithful(capsys):
    code = main(["fit", "--input", FAITHFUL, "--components", "2", "--starts", "2", "--estimator", "pmle"])
    assert code == EXIT_OK
    document = ModelDocument.from_json(capsys.readouterr().out)
    assert document.p == 2 and document.estimator == "pmle"
    psi = document.to_mixture()
    assert sum(psi.weights) == pytest.approx(1.0)
    assert np.all(np.diff(psi.mu) > 0)
    assert psi.weights[0] == pytest.approx(0.35, abs=0.03)
    assert document.penalty["sigma"] and document.penalty["lambda"]


def test_fit_to_file(tmp_path):
    out = str(tmp_path / "fit.json")
    code = main(["fit", "--input", FAITHFUL, "-p", "1", "--estimator", "mle", "--starts", "1", "--out", out])
    assert code in (EXIT_OK, EXIT_DEGENERATE)
    assert ModelDocument.read(out).p == 1


def test_sample(capsys, tmp_path):
    assert main(["sample", "--preset", "model1", "--n", "25", "--seed", "4"]) == EXIT_OK
    first = capsys.readouterr().out
    assert len(first.splitlines()) == 25
    assert main(["sample", "--preset", "model1", "--n", "25", "--seed", "4"]) == EXIT_OK
    assert capsys.readouterr().out == first

    model = str(tmp_path / "model.json")
    ModelDocument.from_mixture(model_preset("model1")).to_json(model)
    out = str(tmp_path / "draws.csv")
    assert main(["sample", "--model", model, "--n", "25", "--seed", "4", "--out", out]) == EXIT_OK
    with open(out) as f:
        assert f.read() == first


def test_modified_estimator(capsys):
    assert main(["me", "--input", FAITHFUL, "-p", "2", "--starts", "2"]) == EXIT_OK
    document = ModelDocument.from_json(capsys.readouterr().out)
    assert document.estimator == "me"
    assert np.all(np.abs(document.lam) < 30)


def test_study(tmp_path):
    spec = tmp_path / "tiny.json"
    spec.write_text(json.dumps(TINY_STUDY))
    out = tmp_path / "reports"
    assert main(["study", "--spec", str(spec), "--seed", "2", "--out", str(out)]) == EXIT_OK
    table = pd.read_csv(out / "tiny.csv")
    assert list(table.columns) == REPORT_COLUMNS
    assert len(table) == 8
    report = json.loads((out / "tiny.json").read_text())
    assert report["meta"]["master_seed"] == 2
    assert len(report["rows"]) == 8


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["fit"],
        ["fit", "--input", FAITHFUL],
        ["fit", "--input", FAITHFUL, "-p", "0"],
        ["sample", "--preset", "model9", "--n", "5"],
        ["me", "--input", FAITHFUL, "-p", "2", "--level", "1.5"],
    ],
)
def test_usage_errors(argv, capsys):
    assert main(argv) == EXIT_USAGE


def test_input_errors(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("x\n1.0\n2.0\nfoo\n")
    assert main(["fit", "--input", str(bad), "-p", "1"]) == EXIT_IO
    assert "line 4" in capsys.readouterr().err
    assert main(["fit", "--input", str(tmp_path / "missing.csv"), "-p", "1"]) == EXIT_IO
    assert main(["fit", "--input", FAITHFUL, "--column", "duration", "-p", "1"]) == EXIT_IO
    spec = tmp_path / "broken.json"
    spec.write_text(json.dumps({"truth": TINY_STUDY["truth"], "replications": 1}))
    assert main(["study", "--spec", str(spec), "--out", str(tmp_path)]) == EXIT_IO


def test_domain_errors(tmp_path, capsys):
    spec = tmp_path / "zero.json"
    spec.write_text(json.dumps({**TINY_STUDY, "sample_sizes": [5]}))
    assert main(["study", "--spec", str(spec), "--out", str(tmp_path)]) == EXIT_USAGE
    tiny = tmp_path / "tiny.csv"
    tiny.write_text("1\n2\n3\n")
    assert main(["fit", "--input", str(tiny), "-p", "2"]) == EXIT_USAGE



@pytest.mark.parametrize(
    "params",
    [
        {"weights": [1.0], "mu": [0.0], "sigma2": [-1.0], "lambda": [0.0]},
        {"weights": [0.2, 0.2], "mu": [0.0, 1.0], "sigma2": [1.0, 1.0], "lambda": [0.0, 0.0]},
    ],
)
def test_invalid_model_file(params, tmp_path, capsys):
    model = tmp_path / "model.json"
    model.write_text(json.dumps(params))
    assert main(["sample", "--model", str(model), "--n", "5"]) == EXIT_IO
    assert "invalid model document" in capsys.readouterr().err
