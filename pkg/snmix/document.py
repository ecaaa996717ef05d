"""JSON documents describing a fitted or user-specified mixture."""
import json
from dataclasses import asdict, dataclass, field
from typing import List, Optional

import numpy as np

from snmix.core.mixture import SnMixture
from snmix.core.penalty import PenaltySpec
from snmix.errors import DomainError, InputError
from snmix.estimation.fit import FitResult
from snmix.metrics import degeneracy_flags

SCHEMA_VERSION = 1


@dataclass
class ModelDocument:
    """
    A mixture with its fit metadata. Floats are written with repr, which round-trips exactly.
    """

    p: int
    weights: List[float]
    mu: List[float]
    sigma2: List[float]
    lam: List[float]
    objective: Optional[float] = None
    loglik: Optional[float] = None
    iterations: int = 0
    converged: bool = False
    flags: dict = field(default_factory=dict)
    penalty: dict = field(default_factory=dict)
    seed: Optional[int] = None
    estimator: str = ""
    algorithm: str = ""
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        for name in ("weights", "mu", "sigma2", "lam"):
            values = [float(v) for v in getattr(self, name)]
            if len(values) != self.p:
                raise DomainError(f"{name} has {len(values)} entries, expected {self.p}")
            setattr(self, name, values)

    @classmethod
    def from_mixture(cls, psi: SnMixture, **metadata) -> "ModelDocument":
        return cls(p=psi.p, weights=list(psi.weights), mu=psi.mu.tolist(), sigma2=psi.sigma2.tolist(),
                   lam=psi.lam.tolist(), **metadata)

    @classmethod
    def from_fit(
        cls, result: FitResult, estimator: str, algorithm: str, penalty: PenaltySpec, seed: Optional[int] = None
    ) -> "ModelDocument":
        flags = degeneracy_flags(result.psi)
        return cls.from_mixture(
            result.psi,
            objective=float(result.objective),
            loglik=float(result.loglik),
            iterations=result.iterations,
            converged=result.converged,
            flags={
                "sigma_degenerate": bool(flags.sigma_degenerate or result.degenerate_sigma),
                "lambda_divergent": bool(flags.lambda_divergent or result.divergent_lambda),
                "min_sigma2": flags.min_sigma2,
                "max_abs_lambda": flags.max_abs_lambda,
                "frozen": [i for i, f in enumerate(result.frozen) if f],
            },
            penalty=penalty.to_dict(),
            seed=seed,
            estimator=estimator,
            algorithm=algorithm,
        )

    @property
    def degenerate(self) -> bool:
        return bool(self.flags.get("sigma_degenerate") or self.flags.get("lambda_divergent"))

    def to_mixture(self) -> SnMixture:
        """
        Rebuild the mixture; weights off by less than 1e-6 are renormalized.

        :raises InputError: the parameters do not describe a valid mixture
        """
        try:
            try:
                return SnMixture.from_arrays(self.weights, self.mu, self.sigma2, self.lam)
            except DomainError:
                if abs(sum(self.weights) - 1.0) > 1e-6:
                    raise
                return SnMixture.from_arrays(self.weights, self.mu, self.sigma2, self.lam, renormalize=True)
        except DomainError as e:
            raise InputError(f"invalid model document: {e}") from e

    def to_dict(self) -> dict:
        content = asdict(self)
        content["lambda"] = content.pop("lam")
        order = ["schema_version", "p", "weights", "mu", "sigma2", "lambda"]
        return {**{k: content[k] for k in order}, **{k: v for k, v in content.items() if k not in order}}

    def to_json(self, path: Optional[str] = None) -> Optional[str]:
        text = json.dumps(self.to_dict(), indent=2, default=_json_default)
        if path is None:
            return text
        try:
            with open(path, "w") as f:
                f.write(text + "\n")
        except OSError as e:
            raise InputError(f"cannot write {path}: {e.strerror or e}") from e
        return None

    @classmethod
    def from_dict(cls, content: dict) -> "ModelDocument":
        content = dict(content)
        if "lambda" in content:
            content["lam"] = content.pop("lambda")
        missing = [k for k in ("weights", "mu", "sigma2", "lam") if k not in content]
        if missing:
            raise InputError(f"model document misses {missing}")
        content.setdefault("p", len(content["weights"]))
        known = set(cls.__dataclass_fields__)
        try:
            return cls(**{k: v for k, v in content.items() if k in known})
        except (TypeError, ValueError) as e:
            raise InputError(f"invalid model document: {e}") from e

    @classmethod
    def from_json(cls, text: str) -> "ModelDocument":
        try:
            content = json.loads(text)
        except json.JSONDecodeError as e:
            raise InputError(f"invalid JSON: {e.msg}", e.lineno) from e
        if not isinstance(content, dict):
            raise InputError("a model document must be a JSON object")
        return cls.from_dict(content)

    @classmethod
    def read(cls, path: str) -> "ModelDocument":
        try:
            with open(path) as f:
                return cls.from_json(f.read())
        except OSError as e:
            raise InputError(f"cannot read {path}: {e.strerror or e}") from e


def _json_default(value):
    if isinstance(value, (np.generic,)):
        return value.item()
    raise TypeError(f"cannot serialize {type(value)}")
