"""
Conditional maximization steps of the penalized ECM and ECME algorithms.

Every step updates one block of parameters (weights, locations, squared scales, shapes) given the others.
Steps operating on the expected complete-data objective take an :class:`EStepCache`; the CML shape step
maximizes the penalized log-likelihood itself.
"""
import logging
import math
from typing import Optional, Tuple

import numpy as np
from scipy import optimize, special

from snmix.core.density import _sn_logpdf, lambda_of_delta
from snmix.core.mixture import SnMixture
from snmix.core.penalty import AzzaliniLambda, PenaltySpec, lambda_penalty_in_delta
from snmix.errors import DegenerateComponentError, DomainError
from snmix.estimation.common.estep import EStepCache
from snmix.utils import as_data

logger = logging.getLogger(__name__)

# Shapes are searched over delta in [-DELTA_EDGE, DELTA_EDGE]
DELTA_EDGE = 1.0 - 1e-9
ROOT_SCAN_POINTS = 801
CML_GRID_POINTS = 201
CML_MAX_SWEEPS = 50


def sufficient_statistics(data: np.ndarray, cache: EStepCache, mu: np.ndarray):
    """
    Per-component sums at the updated locations.

    :return: (S0, S1, S2, N) with S0 = sum alpha gamma, S1 = sum alpha beta (x - mu), S2 = sum alpha (x - mu)^2
        and N = sum alpha
    """
    resid = data[:, None] - mu
    s0 = np.sum(cache.alpha * cache.gamma, axis=0)
    s1 = np.sum(cache.alpha * cache.beta * resid, axis=0)
    s2 = np.sum(cache.alpha * np.square(resid), axis=0)
    return s0, s1, s2, cache.totals


def cm_step_pi(cache: EStepCache) -> np.ndarray:
    """pi_i = sum_j alpha_ij / n."""
    return cache.totals / cache.n


def cm_step_mu(data, cache: EStepCache, lam: np.ndarray) -> np.ndarray:
    """
    mu_i = (sum_j alpha_ij x_j - delta_i sum_j alpha_ij beta_ij) / sum_j alpha_ij.

    :param lam: current shapes, shape (p,)
    """
    x = as_data(data)
    totals = cache.totals
    empty = np.flatnonzero(totals <= 0)
    if empty.size:
        raise DegenerateComponentError(f"component {empty[0]} has no responsibility", int(empty[0]))
    delta = np.asarray(lam, dtype=float) / np.hypot(1.0, lam)
    return (cache.alpha.T @ x - delta * np.sum(cache.alpha * cache.beta, axis=0)) / totals


def cm_step_sigma2(
    data,
    cache: EStepCache,
    mu: np.ndarray,
    lam: np.ndarray,
    pen: PenaltySpec,
    integrate_tau: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    Closed-form update of the squared scales at the new locations.

    sigma2_i = [S0 - 2 delta S1 + S2 + 2 a_n (1 - delta^2) s_n2] / [2 (1 - delta^2) (a_n + N)].

    Components flagged in ``integrate_tau`` have their shape frozen at zero and use the marginal normal update
    (S2 + 2 a_n s_n2) / (N + 2 a_n) instead.

    :raises DegenerateComponentError: a variance is not positive (only possible with a_n = 0)
    """
    x = as_data(data)
    lam = np.asarray(lam, dtype=float)
    s0, s1, s2, totals = sufficient_statistics(x, cache, mu)
    a_n, s_n2 = pen.a_n, pen.s_n2
    u = 1.0 / (1.0 + np.square(lam))
    delta = lam / np.hypot(1.0, lam)
    sigma2 = (s0 - 2.0 * delta * s1 + s2 + 2.0 * a_n * u * s_n2) / (2.0 * u * (a_n + totals))
    if integrate_tau is not None:
        marginal = (s2 + 2.0 * a_n * s_n2) / (totals + 2.0 * a_n)
        sigma2 = np.where(integrate_tau, marginal, sigma2)
    bad = np.flatnonzero(~(sigma2 > 0) | ~np.isfinite(sigma2))
    if bad.size:
        raise DegenerateComponentError(f"component {bad[0]} has non-positive variance {sigma2[bad[0]]}", int(bad[0]))
    return sigma2


def solve_cubic_real(a3: float, a2: float, a1: float, a0: float) -> np.ndarray:
    """
    Real roots of a3 x^3 + a2 x^2 + a1 x + a0 = 0, a3 != 0, polished by two Newton steps.

    :return: sorted array of one to three real roots
    """
    if a3 == 0:
        raise DomainError("leading cubic coefficient must be non-zero")
    a, b, c = a2 / a3, a1 / a3, a0 / a3
    a13 = a / 3.0
    f = b / 3.0 - a13 * a13
    g = a13 * (2.0 * a13 * a13 - b) + c
    h = 0.25 * g * g + f * f * f
    if f == 0 and g == 0:
        roots = np.array([-a13])
    elif h <= 0:
        j = math.sqrt(-f)
        k = math.acos(min(1.0, max(-1.0, -0.5 * g / (j * j * j))))
        roots = 2.0 * j * np.cos(k / 3.0 - 2.0 * np.pi * np.arange(3) / 3.0) - a13
    else:
        sqrt_h = math.sqrt(h)
        roots = np.array([np.cbrt(-0.5 * g + sqrt_h) + np.cbrt(-0.5 * g - sqrt_h) - a13])
    for _ in range(2):
        value = ((roots + a) * roots + b) * roots + c
        slope = (3.0 * roots + 2.0 * a) * roots + b
        step = np.where(slope != 0, value / np.where(slope != 0, slope, 1.0), 0.0)
        roots = roots - step
    return np.sort(roots)


def q_lambda(delta, s0: float, s1: float, s2: float, total: float, sigma2: float, pen: PenaltySpec):
    """
    The part of the expected complete-data objective that depends on the shape of one component, in delta.

    -N/2 log(1 - delta^2) - (S0 + S2 - 2 delta S1) / (2 sigma2 (1 - delta^2)) + p_lambda(lam(delta))
    """
    delta = np.asarray(delta, dtype=float)
    u = (1.0 - delta) * (1.0 + delta)
    return (
        -0.5 * total * np.log(u)
        - (s0 + s2 - 2.0 * delta * s1) / (2.0 * sigma2 * u)
        + lambda_penalty_in_delta(pen, delta)
    )


def _pick_root(candidates: np.ndarray, stats: tuple, sigma2: float, pen: PenaltySpec) -> Tuple[float, bool]:
    inside = candidates[np.abs(candidates) < 1.0]
    diverged = inside.size == 0
    if diverged:
        inside = np.array([-DELTA_EDGE, DELTA_EDGE])
    values = q_lambda(inside, *stats, sigma2, pen)
    return float(inside[int(np.argmax(values))]), diverged


def cm_step_lambda(
    data, cache: EStepCache, mu: np.ndarray, sigma2: np.ndarray, pen: PenaltySpec, with_divergence: bool = False
):
    """
    Shape update with the proposed (or no) shape penalty.

    For each component the stationarity condition in delta is the cubic
    -delta^3 sigma2 (2 b_n + N) + (1 + delta^2) S1 - delta (S0 + S2 - sigma2 N) = 0.
    Among its real roots in (-1, 1) the one maximizing the objective is kept. With no admissible root the
    better end of the delta range is taken and the component is reported as divergent.

    :return: new shapes, or (shapes, divergent mask) if ``with_divergence``
    """
    if isinstance(pen.lambda_penalty, AzzaliniLambda):
        raise DomainError("Azzalini's shape penalty is handled by cm_step_lambda_azzalini")
    x = as_data(data)
    b_n = pen.b_n
    s0, s1, s2, totals = sufficient_statistics(x, cache, mu)
    deltas = np.empty(cache.p)
    diverged = np.zeros(cache.p, dtype=bool)
    for i in range(cache.p):
        roots = solve_cubic_real(-sigma2[i] * (2.0 * b_n + totals[i]), s1[i], -(s0[i] + s2[i] - sigma2[i] * totals[i]), s1[i])
        deltas[i], diverged[i] = _pick_root(roots, (s0[i], s1[i], s2[i], totals[i]), sigma2[i], pen)
    lam = lambda_of_delta(deltas)
    if np.any(diverged):
        logger.debug("shape update without interior root for components %s", np.flatnonzero(diverged))
    return (np.atleast_1d(lam), diverged) if with_divergence else np.atleast_1d(lam)


def _azzalini_score(delta, s0, s1, s2, total, sigma2, c1, c2):
    d2 = np.square(delta)
    u = (1.0 - delta) * (1.0 + delta)
    return sigma2 * delta * u * (total - 2.0 * c1 * c2 / (1.0 - (1.0 - c2) * d2)) + (1.0 + d2) * s1 - delta * (s0 + s2)


def cm_step_lambda_azzalini(
    data,
    cache: EStepCache,
    mu: np.ndarray,
    sigma2: np.ndarray,
    c1: float,
    c2: float,
    with_divergence: bool = False,
):
    """
    Shape update with Azzalini's penalty -c1 log(1 + c2 lam^2).

    The stationarity condition in delta is no longer polynomial. Roots are bracketed on a grid dense near
    the ends of (-1, 1) and refined with Brent's method; the root maximizing the objective is kept.
    """
    x = as_data(data)
    pen = PenaltySpec(lambda_penalty=AzzaliniLambda(c1, c2)) if c1 > 0 else PenaltySpec()
    s0, s1, s2, totals = sufficient_statistics(x, cache, mu)
    grid = DELTA_EDGE * np.sin(0.5 * np.pi * np.linspace(-1.0, 1.0, ROOT_SCAN_POINTS))
    deltas = np.empty(cache.p)
    diverged = np.zeros(cache.p, dtype=bool)
    for i in range(cache.p):
        args = (s0[i], s1[i], s2[i], totals[i], sigma2[i], c1, c2)
        score = _azzalini_score(grid, *args)
        roots = list(grid[score == 0])
        for k in np.flatnonzero(np.sign(score[:-1]) * np.sign(score[1:]) < 0):
            roots.append(optimize.brentq(_azzalini_score, grid[k], grid[k + 1], args=args, xtol=1e-14))
        deltas[i], diverged[i] = _pick_root(np.array(roots), (s0[i], s1[i], s2[i], totals[i]), sigma2[i], pen)
    lam = np.atleast_1d(lambda_of_delta(deltas))
    return (lam, diverged) if with_divergence else lam


def _component_objective(delta, data, rest, log_w, mu, sigma2, pen: PenaltySpec):
    """Penalized log-likelihood as a function of one component's delta, others held fixed."""
    delta = np.atleast_1d(np.asarray(delta, dtype=float))
    lam = delta / np.sqrt((1.0 - delta) * (1.0 + delta))
    log_f = log_w + _sn_logpdf(data[None, :], mu, sigma2, lam[:, None])
    ll = np.sum(np.logaddexp(rest[None, :], log_f), axis=1)
    return ll + lambda_penalty_in_delta(pen, delta)


def cml_step(
    data,
    psi: SnMixture,
    pen: PenaltySpec,
    rel_tol: float = 1e-6,
    fixed: Optional[np.ndarray] = None,
    max_sweeps: int = CML_MAX_SWEEPS,
) -> np.ndarray:
    """
    Conditional maximization of the penalized log-likelihood over the shapes, the other parameters fixed.

    Shapes are updated one component at a time: a coarse grid over delta locates the best cell, then a bounded
    scalar search refines it. A move is kept only if it does not lower the objective. Sweeps stop when no shape
    moves by more than ``rel_tol`` relative to its size.

    :param psi: mixture holding the updated weights, locations and scales and the current shapes
    :param fixed: components whose shape is held
    :return: new shapes
    """
    x = as_data(data)
    fixed = np.zeros(psi.p, dtype=bool) if fixed is None else np.asarray(fixed, dtype=bool)
    with np.errstate(divide="ignore"):
        log_w = np.log(psi.weights_array)
    mu, sigma2 = psi.mu, psi.sigma2
    lam = psi.lam.copy()
    log_f = log_w + _sn_logpdf(x[:, None], mu, sigma2, lam)
    grid = DELTA_EDGE * np.sin(0.5 * np.pi * np.linspace(-1.0, 1.0, CML_GRID_POINTS))
    for _ in range(max_sweeps):
        moved = 0.0
        for i in np.flatnonzero(~fixed & np.isfinite(log_w)):
            if psi.p > 1:
                rest = special.logsumexp(np.delete(log_f, i, axis=1), axis=1)
            else:
                rest = np.full(x.size, -np.inf)
            args = (x, rest, log_w[i], mu[i], sigma2[i], pen)
            current = float(np.sum(np.logaddexp(rest, log_f[:, i])) + pen.lambda_terms(lam[i]))
            values = _component_objective(grid, *args)
            k = int(np.nanargmax(values))
            lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
            res = optimize.minimize_scalar(
                lambda d: -float(_component_objective(d, *args)[0]),
                bounds=(lo, hi),
                method="bounded",
                options={"xatol": 1e-12},
            )
            best_delta, best = (res.x, -res.fun) if -res.fun >= values[k] else (grid[k], values[k])
            if best >= current:
                new_lam = float(lambda_of_delta(best_delta))
                moved = max(moved, abs(new_lam - lam[i]) / (abs(lam[i]) + 1.0))
                lam[i] = new_lam
                log_f[:, i] = log_w[i] + _sn_logpdf(x, mu[i], sigma2[i], lam[i])
        if moved <= rel_tol:
            break
    return lam
