import os
from functools import lru_cache
from typing import Optional

import yaml

from snmix.bench.study import StudySpec
from snmix.core.mixture import SnMixture
from snmix.errors import DomainError


@lru_cache(maxsize=None)
def load_presets() -> dict:
    path = os.path.join(os.path.dirname(os.path.dirname(os.path.realpath(__file__))), "data", "presets.yaml")
    with open(path) as f:
        return yaml.safe_load(f)


def model_preset(name: str) -> SnMixture:
    """A named true mixture ("model1", "model2", "gmix")."""
    models = load_presets()["models"]
    if name not in models:
        raise DomainError(f"Unknown model preset {name!r}, choose one of {sorted(models)}")
    return SnMixture.from_dict(models[name])


def study_names() -> list:
    return sorted(load_presets()["studies"]) + ["penalty-comparison"]


def study_preset(
    name: str, replications: Optional[int] = None, master_seed: int = 0, **overrides
) -> StudySpec:
    """
    A named study with optional overrides of its replication count, seed and other StudySpec fields.

    The penalty comparison has no StudySpec; use :func:`penalty_comparison_preset` for it.
    """
    studies = load_presets()["studies"]
    if name not in studies:
        raise DomainError(f"Unknown study preset {name!r}, choose one of {study_names()}")
    config = dict(studies[name])
    truth = model_preset(config.pop("model"))
    if replications is not None:
        config["replications"] = replications
    config.update(overrides)
    return StudySpec(truth=truth, master_seed=master_seed, name=name, **config)


def penalty_comparison_preset(replications: Optional[int] = None) -> dict:
    """Keyword arguments for run_penalty_comparison (without the seed)."""
    config = load_presets()["penalty_comparison"]
    return {
        "n_list": list(config["sample_sizes"]),
        "lambda_list": [float(v) for v in config["lambdas"]],
        "reps": int(config["replications"] if replications is None else replications),
    }
