"""
Replication harness for simulation studies.

Every replication draws its sample from a child stream of the master seed keyed by (replication, n), so the
report is the same whatever the number of worker processes.
"""
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from snmix.core.mixture import SnMixture
from snmix.errors import DomainError, SnmixError
from snmix.estimation.fit import FitResult
from snmix.initialization import KMeansMoments, TrueValue
from snmix.metrics import bias_rmse, degeneracy_flags, distance_Dstar, parameter_names
from snmix.registration import make
from snmix.sampler import RngHandle, derive_seed, sample_mixture

logger = logging.getLogger(__name__)

ESTIMATORS = {"MLE": "mle", "PMLE": "pmle", "ME": "me", "MPLE": "mple", "GMIX": "gmix"}
INIT_SCHEMES = ("true", "kmeans", "perturbed")
REPORT_COLUMNS = [
    "estimator",
    "n",
    "p",
    "init",
    "param",
    "bias",
    "rmse",
    "reps",
    "failed",
    "sigma_degenerate",
    "lambda_divergent",
    "min_sigma2",
    "max_abs_lambda",
    "mean_dstar",
]
PENALTY_COLUMNS = [
    "n",
    "lambda",
    "reps",
    "pmle_bias",
    "pmle_rmse",
    "mple_bias",
    "mple_rmse",
    "pmle_log_abs_bias",
    "pmle_log_rmse",
    "mple_log_abs_bias",
    "mple_log_rmse",
    "pmle_failed",
    "mple_failed",
]
# Fit failures recorded instead of aborting the study
FIT_ERRORS = (SnmixError, ArithmeticError, np.linalg.LinAlgError)


@dataclass(frozen=True)
class StudySpec:
    """
    A simulation study: which truth, sample sizes, fitted orders, estimators and starting schemes.

    In the penalized estimators the scale penalty uses c_a and the shape penalty c_b.
    """

    truth: SnMixture
    sample_sizes: Tuple[int, ...]
    fit_orders: Tuple[int, ...]
    replications: int
    estimators: Tuple[str, ...] = ("MLE", "PMLE")
    init_schemes: Tuple[str, ...] = ("true",)
    master_seed: int = 0
    log_sigma: bool = False
    perturbed_starts: int = 10
    algorithm: str = "ECM"
    max_iter: int = 2000
    rel_tol: float = 1e-6
    c_a: float = 1.0
    c_b: float = 0.05
    name: str = "study"

    def __post_init__(self):
        for name in ("sample_sizes", "fit_orders", "estimators", "init_schemes"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.replications < 1:
            raise DomainError(f"replications must be at least 1, got {self.replications}")
        if not self.sample_sizes or any(n < 10 for n in self.sample_sizes):
            raise DomainError(f"sample sizes must be at least 10, got {self.sample_sizes}")
        if not self.fit_orders or any(p < 1 for p in self.fit_orders):
            raise DomainError(f"fitted orders must be positive, got {self.fit_orders}")
        unknown = set(self.estimators) - set(ESTIMATORS)
        if unknown or not self.estimators:
            raise DomainError(f"unknown estimators {sorted(unknown)}, choose from {sorted(ESTIMATORS)}")
        unknown = set(self.init_schemes) - set(INIT_SCHEMES)
        if unknown or not self.init_schemes:
            raise DomainError(f"unknown init schemes {sorted(unknown)}, choose from {list(INIT_SCHEMES)}")
        if self.perturbed_starts < 1:
            raise DomainError("perturbed_starts must be at least 1")

    def estimator_config(self, seed: int) -> dict:
        return {
            "algorithm": self.algorithm,
            "max_iter": self.max_iter,
            "rel_tol": self.rel_tol,
            "c_a": self.c_a,
            "c_b": self.c_b,
            "seed": seed,
        }


@dataclass
class StudyReport:
    """Aggregated study results: one table row per cell and parameter, plus run metadata."""

    table: pd.DataFrame
    meta: Dict = field(default_factory=dict)

    def to_csv(self, path: Optional[str] = None) -> Optional[str]:
        """Write the table as CSV (returned as a string when no path is given)."""
        return self.table.to_csv(path, index=False, float_format="%.10g", lineterminator="\n")

    def to_json(self, path: Optional[str] = None) -> Optional[str]:
        rows = self.table.astype(object).where(self.table.notna(), None).to_dict(orient="records")
        text = json.dumps({"meta": self.meta, "rows": rows}, indent=2, default=_json_default)
        if path is None:
            return text
        with open(path, "w") as f:
            f.write(text + "\n")
        return None

    @classmethod
    def from_json(cls, text: str) -> "StudyReport":
        content = json.loads(text)
        return cls(pd.DataFrame(content["rows"]), content.get("meta", {}))


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    raise TypeError(f"cannot serialize {type(value)}")


def parallel_map(func: Callable, items: Sequence, threads: int = 1) -> List:
    """Order-preserving map, in worker processes when threads > 1."""
    if threads <= 1:
        return [func(item) for item in items]
    with ProcessPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(func, items, chunksize=max(1, len(items) // (4 * threads))))


def _fit_record(spec: StudySpec, estimator: str, n: int, p: int, init: str, result: Optional[FitResult]) -> Dict:
    record = {"estimator": estimator, "n": n, "p": p, "init": init, "failed": result is None}
    if result is None:
        return record
    flags = degeneracy_flags(result.psi)
    record.update(
        {
            "psi": result.psi,
            "sigma_degenerate": flags.sigma_degenerate or result.degenerate_sigma,
            "lambda_divergent": flags.lambda_divergent or result.divergent_lambda,
            "min_sigma2": flags.min_sigma2,
            "max_abs_lambda": flags.max_abs_lambda,
            "dstar": distance_Dstar(result.psi, spec.truth),
        }
    )
    return record


def _fit_one(spec: StudySpec, estimator: str, x: np.ndarray, p: int, init: str, seed: int, cache: Dict):
    name = ESTIMATORS[estimator]
    if name == "me":
        me = make("me", **spec.estimator_config(seed))
        mle_fit = cache.get("MLE")
        if mle_fit is None:
            mle_fit = _fit_one(spec, "MLE", x, p, init, seed, cache)
        if mle_fit is None:
            return None
        return me.modify(x, mle_fit)
    est = make(name, **spec.estimator_config(seed))
    if init == "perturbed":
        result = est.fit_perturbed(x, spec.truth, p, starts=spec.perturbed_starts)
    elif init == "true":
        result = est.fit(x, p, init=TrueValue(spec.truth))
    else:
        result = est.fit(x, p, init=KMeansMoments(seed))
    cache[estimator] = result
    return result


def _applicable(spec: StudySpec, p: int, init: str) -> bool:
    if init == "true":
        return p == spec.truth.p
    if init == "perturbed":
        return p >= spec.truth.p
    return True


def run_replication(spec: StudySpec, rep: int) -> List[Dict]:
    """All fits of one replication, as flat records in a fixed order."""
    records = []
    for n in spec.sample_sizes:
        x = sample_mixture(spec.truth, n, RngHandle.child(spec.master_seed, rep, n))
        for p in spec.fit_orders:
            for k, init in enumerate(spec.init_schemes):
                if not _applicable(spec, p, init):
                    continue
                seed = derive_seed(spec.master_seed, rep, n, p, k)
                cache: Dict[str, FitResult] = {}
                for estimator in spec.estimators:
                    try:
                        result = cache.get(estimator) or _fit_one(spec, estimator, x, p, init, seed, cache)
                    except FIT_ERRORS as e:
                        logger.warning("replication %d, %s n=%d p=%d init=%s failed: %s", rep, estimator, n, p, init, e)
                        result = None
                    records.append(_fit_record(spec, estimator, n, p, init, result))
    return records


def _cells(spec: StudySpec) -> Iterable[Tuple[str, int, int, str]]:
    for estimator in spec.estimators:
        for n in spec.sample_sizes:
            for p in spec.fit_orders:
                for init in spec.init_schemes:
                    if _applicable(spec, p, init):
                        yield estimator, n, p, init


def _aggregate(spec: StudySpec, records: List[Dict]) -> pd.DataFrame:
    grouped: Dict[Tuple, List[Dict]] = {}
    for record in records:
        grouped.setdefault((record["estimator"], record["n"], record["p"], record["init"]), []).append(record)
    rows = []
    for cell in _cells(spec):
        cell_records = grouped.get(cell, [])
        ok = [r for r in cell_records if not r["failed"]]
        summary = {
            "reps": len(cell_records),
            "failed": len(cell_records) - len(ok),
            "sigma_degenerate": sum(r["sigma_degenerate"] for r in ok),
            "lambda_divergent": sum(r["lambda_divergent"] for r in ok),
            "min_sigma2": min((r["min_sigma2"] for r in ok), default=np.nan),
            "max_abs_lambda": max((r["max_abs_lambda"] for r in ok), default=np.nan),
            "mean_dstar": float(np.mean([r["dstar"] for r in ok])) if ok else np.nan,
        }
        estimator, n, p, init = cell
        key = {"estimator": estimator, "n": n, "p": p, "init": init}
        if p != spec.truth.p:
            rows.append({**key, "param": "-", "bias": np.nan, "rmse": np.nan, **summary})
            continue
        names = parameter_names(p, spec.log_sigma)
        if ok:
            errors = bias_rmse([r["psi"] for r in ok], spec.truth.sorted_by_location(), spec.log_sigma)
            bias, rmse = errors["bias"].to_numpy(), errors["rmse"].to_numpy()
        else:
            bias = rmse = np.full(len(names), np.nan)
        for j, param in enumerate(names):
            rows.append({**key, "param": param, "bias": bias[j], "rmse": rmse[j], **summary})
    return pd.DataFrame(rows, columns=REPORT_COLUMNS)


def run_study(spec: StudySpec, threads: int = 1) -> StudyReport:
    """
    Run every replication of a study and aggregate bias, RMSE, degeneracy counts and mean D* per cell.

    Cells are (estimator, n, p, init). Bias and RMSE are reported per parameter when the fitted order equals the
    true one, otherwise the cell has a single row with parameter "-". Starting from the truth is skipped for
    other orders and perturbed starts need at least as many components as the truth.

    :param spec: the study
    :param threads: worker processes; results do not depend on it
    :return: the report
    """
    start = time.perf_counter()
    skipped = [p for p in spec.fit_orders if p != spec.truth.p and "true" in spec.init_schemes]
    if skipped:
        logger.warning("true-value starts skipped for fitted orders %s", skipped)
    per_rep = parallel_map(partial(run_replication, spec), range(spec.replications), threads)
    records = [record for rep_records in per_rep for record in rep_records]
    table = _aggregate(spec, records)
    meta = {
        "name": spec.name,
        "replications": spec.replications,
        "master_seed": spec.master_seed,
        "elapsed_seconds": time.perf_counter() - start,
    }
    logger.info("study %s finished in %.1f s", spec.name, meta["elapsed_seconds"])
    return StudyReport(table, meta)


def _penalty_replication(task: Tuple[int, int, float, int], seed: int, c_b: float) -> Tuple[float, float]:
    n, k, lam, rep = task
    truth = SnMixture.single(0.0, 1.0, lam)
    x = sample_mixture(truth, n, RngHandle.child(seed, rep, n, k))
    init = KMeansMoments(derive_seed(seed, rep, n, k))
    estimates = []
    for est in (
        make("pmle", c_b=c_b, sigma_penalty=False, lambda_penalty=True),
        make("mple", sigma_penalty=False),
    ):
        try:
            estimates.append(float(est.fit(x, 1, init=init).psi.lam[0]))
        except FIT_ERRORS as e:
            logger.warning("penalty comparison n=%d lambda=%g rep=%d failed: %s", n, lam, rep, e)
            estimates.append(np.nan)
    return estimates[0], estimates[1]


def _error_summary(estimates: np.ndarray, truth: float) -> Tuple[float, float, int]:
    ok = estimates[np.isfinite(estimates)]
    if ok.size == 0:
        return np.nan, np.nan, int(estimates.size)
    errors = ok - truth
    return float(errors.mean()), float(np.sqrt(np.mean(np.square(errors)))), int(estimates.size - ok.size)


def run_penalty_comparison(
    n_list: Sequence[int], lambda_list: Sequence[float], reps: int, seed: int = 0, threads: int = 1, c_b: float = 0.05
) -> StudyReport:
    """
    Compare the proposed shape penalty with Azzalini's on single skew normal samples SN(0, 1, lam).

    One row per (n, lam) with bias and RMSE of the shape estimate for both estimators and their logarithms.
    The scale penalty is off in both.
    """
    if reps < 1:
        raise DomainError(f"reps must be at least 1, got {reps}")
    if any(n < 10 for n in n_list):
        raise DomainError(f"sample sizes must be at least 10, got {list(n_list)}")
    start = time.perf_counter()
    tasks = [(n, k, float(lam), rep) for n in n_list for k, lam in enumerate(lambda_list) for rep in range(reps)]
    results = parallel_map(partial(_penalty_replication, seed=seed, c_b=c_b), tasks, threads)
    by_cell: Dict[Tuple[int, int], List[Tuple[float, float]]] = {}
    for (n, k, _, _), result in zip(tasks, results):
        by_cell.setdefault((n, k), []).append(result)
    rows = []
    for n in n_list:
        for k, lam in enumerate(lambda_list):
            estimates = np.array(by_cell[(n, k)])
            pmle_bias, pmle_rmse, pmle_failed = _error_summary(estimates[:, 0], lam)
            mple_bias, mple_rmse, mple_failed = _error_summary(estimates[:, 1], lam)
            with np.errstate(divide="ignore"):
                rows.append(
                    {
                        "n": n,
                        "lambda": float(lam),
                        "reps": reps,
                        "pmle_bias": pmle_bias,
                        "pmle_rmse": pmle_rmse,
                        "mple_bias": mple_bias,
                        "mple_rmse": mple_rmse,
                        "pmle_log_abs_bias": np.log(abs(pmle_bias)),
                        "pmle_log_rmse": np.log(pmle_rmse),
                        "mple_log_abs_bias": np.log(abs(mple_bias)),
                        "mple_log_rmse": np.log(mple_rmse),
                        "pmle_failed": pmle_failed,
                        "mple_failed": mple_failed,
                    }
                )
    meta = {
        "name": "penalty-comparison",
        "replications": reps,
        "master_seed": seed,
        "elapsed_seconds": time.perf_counter() - start,
    }
    return StudyReport(pd.DataFrame(rows, columns=PENALTY_COLUMNS), meta)
