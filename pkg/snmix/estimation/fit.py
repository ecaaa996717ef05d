"""
The penalized ECM / ECME fitting loop.

One iteration is an E-step followed by conditional maximizations of the weights, the locations, the squared
scales and the shapes, in that order. ECM updates the shapes from the expected complete-data objective,
ECME maximizes the penalized log-likelihood over them directly.
"""
import enum
import logging
from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

import numpy as np

from snmix.core.mixture import SnMixture
from snmix.core.penalty import AzzaliniLambda, PenaltySpec, penalized_loglik
from snmix.core.density import loglik
from snmix.errors import DegenerateComponentError, DomainError
from snmix.estimation.common.cmstep import (
    cm_step_lambda,
    cm_step_lambda_azzalini,
    cm_step_mu,
    cm_step_pi,
    cm_step_sigma2,
    cml_step,
)
from snmix.estimation.common.estep import e_step, q_function
from snmix.initialization import InitReport, InitSpec, KMeansMoments, Perturbed, resolve_init
from snmix.metrics import degeneracy_flags
from snmix.sampler import derive_seed
from snmix.utils import Vector, as_data, relative_change

logger = logging.getLogger(__name__)

# Components with fewer expected members are frozen
MIN_COMPONENT_MASS = 1e-8
SIGMA2_FLOOR = 1e-12
LAMBDA_CEILING = 1e6
ASCENT_TOL = 1e-8


class Algorithm(str, enum.Enum):
    ECM = "ECM"
    ECME = "ECME"


@dataclass(frozen=True)
class FitConfig:
    """
    Options of a single fit.

    ``fixed_lambda`` marks components whose shape is held at its starting value; holding a shape at zero
    turns the component into a normal one.
    """

    algorithm: Algorithm = Algorithm.ECM
    penalty: PenaltySpec = field(default_factory=PenaltySpec)
    max_iter: int = 2000
    rel_tol: float = 1e-6
    init: InitSpec = field(default_factory=KMeansMoments)
    fixed_lambda: Optional[Tuple[bool, ...]] = None
    debug: bool = False

    def __post_init__(self):
        object.__setattr__(self, "algorithm", Algorithm(self.algorithm))
        if self.max_iter < 1:
            raise DomainError(f"max_iter must be positive, got {self.max_iter}")
        if not self.rel_tol > 0:
            raise DomainError(f"rel_tol must be positive, got {self.rel_tol}")
        if self.fixed_lambda is not None:
            object.__setattr__(self, "fixed_lambda", tuple(bool(b) for b in self.fixed_lambda))


@dataclass(frozen=True)
class FitResult:
    """
    Outcome of a fit. ``psi`` is sorted by ascending location and every per-component field follows that order.

    ``objective_trace`` starts with the objective at the starting values.
    """

    psi: SnMixture
    objective_trace: Tuple[float, ...]
    iterations: int
    converged: bool
    loglik: float
    degenerate_sigma: bool = False
    divergent_lambda: bool = False
    frozen: Tuple[bool, ...] = ()
    stop_reason: str = ""
    init: Optional[InitReport] = None

    @property
    def objective(self) -> float:
        return self.objective_trace[-1]

    @property
    def flags(self) -> dict:
        return {
            "sigma_degenerate": self.degenerate_sigma,
            "lambda_divergent": self.divergent_lambda,
            "frozen": [i for i, f in enumerate(self.frozen) if f],
        }


def label_sort(psi: SnMixture) -> SnMixture:
    """Relabel the components of psi by ascending location (stable for ties)."""
    return psi.sorted_by_location()


def _check_ascent(name: str, before: float, after: float) -> None:
    if after < before - ASCENT_TOL * (abs(before) + 1.0):
        raise AssertionError(f"{name} decreased the expected complete-data objective: {before!r} -> {after!r}")


class _Iteration:
    """State of one ECM/ECME iteration; collects the stop flags raised by the CM-steps."""

    def __init__(self, data: np.ndarray, psi: SnMixture, cfg: FitConfig, fixed: np.ndarray):
        self.data = data
        self.psi = psi
        self.cfg = cfg
        self.fixed = fixed
        self.frozen = np.zeros(psi.p, dtype=bool)
        self.degenerate_sigma = False
        self.divergent_lambda = False

    def step(self) -> Optional[SnMixture]:
        """Run one iteration; None means the fit stopped on a degenerate variance."""
        data, psi, cfg, pen = self.data, self.psi, self.cfg, self.cfg.penalty
        cache = e_step(data, psi)
        active = cache.totals >= MIN_COMPONENT_MASS
        if not np.all(active):
            newly = ~active & ~self.frozen
            if np.any(newly):
                logger.warning("freezing components %s with vanishing responsibility", np.flatnonzero(newly))
            self.frozen |= ~active
        sub = cache.subset(active)
        lam = psi.lam
        mu, sigma2, new_lam = psi.mu.copy(), psi.sigma2.copy(), psi.lam.copy()

        weights = cm_step_pi(cache)
        q1 = q3 = None
        if cfg.debug:
            q0 = q_function(psi, data, cache, pen)
            q1 = q_function(psi.replace(weights=weights), data, cache, pen)
            _check_ascent("weight step", q0, q1)

        mu[active] = cm_step_mu(data, sub, lam[active])
        integrate_tau = (self.fixed & (lam == 0))[active]
        try:
            sigma2[active] = cm_step_sigma2(data, sub, mu[active], lam[active], pen, integrate_tau=integrate_tau)
        except DegenerateComponentError as e:
            logger.info("stopping on degenerate variance: %s", e)
            self.degenerate_sigma = True
            return None
        if cfg.debug and not np.any(integrate_tau):
            q2 = q_function(psi.replace(weights=weights, mu=mu), data, cache, pen)
            q3 = q_function(psi.replace(weights=weights, mu=mu, sigma2=sigma2), data, cache, pen)
            _check_ascent("location step", q1, q2)
            _check_ascent("scale step", q2, q3)

        free = active & ~self.fixed
        if np.any(free):
            if cfg.algorithm is Algorithm.ECME:
                partial = psi.replace(weights=weights, mu=mu, sigma2=sigma2)
                new_lam = cml_step(data, partial, pen, rel_tol=cfg.rel_tol, fixed=~free)
            else:
                free_cache = cache.subset(free)
                if isinstance(pen.lambda_penalty, AzzaliniLambda):
                    updated, diverged = cm_step_lambda_azzalini(
                        data, free_cache, mu[free], sigma2[free], pen.lambda_penalty.c1, pen.lambda_penalty.c2, True
                    )
                else:
                    updated, diverged = cm_step_lambda(data, free_cache, mu[free], sigma2[free], pen, True)
                new_lam[free] = updated
                self.divergent_lambda |= bool(np.any(diverged))
                if q3 is not None:
                    q4 = q_function(psi.replace(weights=weights, mu=mu, sigma2=sigma2, lam=new_lam), data, cache, pen)
                    _check_ascent("shape step", q3, q4)

        if np.any(sigma2 < SIGMA2_FLOOR):
            self.degenerate_sigma = True
        if np.any(np.abs(new_lam) > LAMBDA_CEILING) or not np.all(np.isfinite(new_lam)):
            self.divergent_lambda = True
            new_lam = np.where(np.isfinite(new_lam), new_lam, np.sign(new_lam) * LAMBDA_CEILING)
        return SnMixture.from_arrays(weights, mu, sigma2, new_lam, renormalize=True)


def fit(data: Vector, p: int, cfg: FitConfig = FitConfig()) -> FitResult:
    """
    Fit a p-component skew normal mixture by penalized ECM or ECME.

    Iterates until the relative change of the objective |new - old| / (|old| + 1) drops below ``cfg.rel_tol``,
    ``cfg.max_iter`` iterations have run, a variance falls below 1e-12, a shape exceeds 1e6 in magnitude or the
    objective stops being finite. The result flags are also raised for a final variance below 1e-10 or a final
    shape above 100 in magnitude.

    :param data: sample of size n >= 3p
    :param p: number of components
    :param cfg: algorithm, penalty, starting values and stopping rule
    :return: the fit, with components sorted by location
    """
    x = as_data(data)
    if p < 1 or x.size < 3 * p:
        raise DomainError(f"fitting needs p >= 1 and n >= 3p, got p={p}, n={x.size}")
    report = resolve_init(cfg.init, x, p)
    psi = report.psi0
    fixed = np.zeros(p, dtype=bool) if cfg.fixed_lambda is None else np.array(cfg.fixed_lambda, dtype=bool)
    if fixed.size != p:
        raise DomainError(f"fixed_lambda has {fixed.size} entries for {p} components")
    pen = cfg.penalty

    objective = penalized_loglik(x, psi, pen)
    trace = [objective]
    state = _Iteration(x, psi, cfg, fixed)
    converged, iterations, reason = False, 0, "max_iter"
    if not np.isfinite(objective):
        reason = "non_finite"
    else:
        while iterations < cfg.max_iter:
            new_psi = state.step()
            iterations += 1
            if new_psi is None:
                reason = "degenerate_sigma"
                break
            new_objective = penalized_loglik(x, new_psi, pen)
            if not np.isfinite(new_objective):
                logger.info("objective is no longer finite after %d iterations", iterations)
                reason = "non_finite"
                if np.isposinf(new_objective):
                    state.degenerate_sigma = True
                break
            change = relative_change(new_objective, objective)
            state.psi, psi, objective = new_psi, new_psi, new_objective
            trace.append(objective)
            if state.degenerate_sigma:
                reason = "degenerate_sigma"
                break
            if np.any(np.abs(psi.lam) > LAMBDA_CEILING):
                reason = "divergent_lambda"
                break
            if change < cfg.rel_tol:
                converged, reason = True, "converged"
                break

    order = psi.location_order()
    sorted_psi = psi.permute(order)
    flags = degeneracy_flags(sorted_psi)
    return FitResult(
        psi=sorted_psi,
        objective_trace=tuple(trace),
        iterations=iterations,
        converged=converged,
        loglik=loglik(x, sorted_psi),
        degenerate_sigma=state.degenerate_sigma or flags.sigma_degenerate,
        divergent_lambda=state.divergent_lambda or flags.lambda_divergent,
        frozen=tuple(bool(b) for b in state.frozen[order]),
        stop_reason=reason,
        init=report,
    )


def _better(candidate: FitResult, best: Optional[FitResult]) -> bool:
    return np.isfinite(candidate.objective) and (best is None or candidate.objective > best.objective)


def fit_best(data: Vector, p: int, cfg: FitConfig = FitConfig(), starts: int = 1, seed: int = 0) -> FitResult:
    """
    Multi-start fit from k-means starts with independent seeds; keeps the fit with the largest final objective.

    The first start uses ``cfg.init`` unchanged.
    """
    if starts < 1:
        raise DomainError(f"need at least one start, got {starts}")
    best = None
    for s in range(starts):
        init = cfg.init if s == 0 else KMeansMoments(derive_seed(seed, s))
        result = fit(data, p, replace(cfg, init=init))
        if _better(result, best):
            best = result
    return best if best is not None else result


def fit_perturbed(
    data: Vector, psi_true: SnMixture, p: int, cfg: FitConfig = FitConfig(), starts: int = 10, seed: int = 0
) -> FitResult:
    """
    Fit from ``starts`` random perturbations of the true mixing distribution and keep the best objective.
    """
    if starts < 1:
        raise DomainError(f"need at least one start, got {starts}")
    best = None
    for s in range(starts):
        result = fit(data, p, replace(cfg, init=Perturbed(psi_true, derive_seed(seed, s))))
        if _better(result, best):
            best = result
    return best if best is not None else result
