"""
Modified maximum likelihood estimator for divergent shapes.

Shapes whose MLE exceeds a threshold in magnitude are shrunk towards zero along the path t * lam_hat, t in [0, 1],
as far as a profile likelihood ratio test at the requested level does not reject.
"""
import logging
from dataclasses import replace
from typing import Optional

import numpy as np
from scipy import stats

from snmix.core.density import loglik
from snmix.core.mixture import SnMixture
from snmix.core.penalty import PenaltySpec
from snmix.errors import DomainError, ValidityError
from snmix.estimation.common.estep import responsibilities
from snmix.estimation.fit import FitConfig, FitResult, fit
from snmix.initialization import Explicit
from snmix.metrics import degeneracy_flags
from snmix.utils import Vector, as_data

logger = logging.getLogger(__name__)

ME_THRESHOLD = 30.0
LR_TOL = 1e-3
MAX_BISECTIONS = 60


def flagged_components(lam: Vector, threshold: float = ME_THRESHOLD) -> np.ndarray:
    """Mask of shapes with |lam| >= threshold; its sum is the degrees of freedom of the test."""
    return np.abs(np.asarray(lam, dtype=float)) >= threshold


def constrained_mle_diagnostic(data: Vector, psi: SnMixture, by_assignment: bool = False) -> np.ndarray:
    """
    Side of the location on which a component's observations all fall: +1 above, -1 below, 0 on both sides.

    A nonzero entry means the unpenalized likelihood increases without bound in that shape, towards +inf or -inf,
    and a bound |lam| <= C on the shapes is attained at the bound.

    :param data: sample
    :param psi: mixture
    :param by_assignment: only look at the observations whose most probable label is the component, instead of
        the whole sample
    :return: integer array of length p
    """
    x = as_data(data, min_size=1)
    labels = np.argmax(responsibilities(x, psi), axis=1) if by_assignment else None
    sides = np.zeros(psi.p, dtype=int)
    for k, mu in enumerate(psi.mu):
        own = x if labels is None else x[labels == k]
        if own.size == 0:
            continue
        if np.all(own > mu):
            sides[k] = 1
        elif np.all(own < mu):
            sides[k] = -1
    return sides


def one_sided_components(data: Vector, psi: SnMixture, by_assignment: bool = False) -> np.ndarray:
    """Mask of components whose observations all lie on one side of their location."""
    return constrained_mle_diagnostic(data, psi, by_assignment) != 0


def profile_loglik(data: np.ndarray, mle_fit: FitResult, flagged: np.ndarray, t: float, cfg: FitConfig) -> float:
    """
    Log-likelihood maximized over every parameter except the flagged shapes, which are held at t * lam_hat.

    The maximization starts from the MLE with the flagged shapes replaced.
    """
    lam = mle_fit.psi.lam.copy()
    lam[flagged] *= t
    start = mle_fit.psi.replace(lam=lam)
    profile_cfg = replace(cfg, penalty=PenaltySpec.none(), init=Explicit(start), fixed_lambda=tuple(flagged))
    result = fit(data, mle_fit.psi.p, profile_cfg)
    if result.degenerate_sigma:
        logger.warning("profile fit at t=%.6g has a degenerate variance", t)
    return result.loglik


def profile_lrt_me(
    data: Vector,
    mle_fit: FitResult,
    level: float = 0.05,
    cfg: Optional[FitConfig] = None,
    threshold: float = ME_THRESHOLD,
) -> np.ndarray:
    """
    Shrink the divergent shapes of an MLE until the profile likelihood ratio test is on the edge of rejection.

    nu = #{k : |lam_k| >= threshold}. With nu = 0 the shapes are returned unchanged. Otherwise the flagged shapes
    become t * lam_hat with the smallest t in [0, 1] such that 2 (l(lam_hat) - l_profile(t)) does not exceed the
    chi-square(nu) quantile at 1 - level, found by bisection to within 1e-3 of the quantile.

    :param data: the sample the MLE was computed on
    :param mle_fit: unpenalized fit
    :param level: test level in (0, 1)
    :param cfg: fitting options for the profile fits (penalty and start are overridden)
    :param threshold: shape magnitude above which a component is shrunk
    :return: modified shapes, in the label order of ``mle_fit.psi``
    :raises ValidityError: the MLE has a degenerate variance
    """
    if not 0 < level < 1:
        raise DomainError(f"level must lie in (0, 1), got {level}")
    x = as_data(data)
    lam_hat = mle_fit.psi.lam
    if mle_fit.degenerate_sigma or degeneracy_flags(mle_fit.psi).sigma_degenerate:
        raise ValidityError("the modified estimator is invalid when a fitted variance has degenerated to zero")
    flagged = flagged_components(lam_hat, threshold)
    nu = int(flagged.sum())
    if nu == 0:
        return lam_hat.copy()
    one_sided = np.flatnonzero(one_sided_components(x, mle_fit.psi, by_assignment=True) & flagged)
    if one_sided.size:
        logger.debug("components %s have all their observations on one side of the location", one_sided)

    cfg = FitConfig() if cfg is None else cfg
    quantile = float(stats.chi2.ppf(1.0 - level, nu))
    ll_hat = loglik(x, mle_fit.psi)

    def statistic(t: float) -> float:
        return 2.0 * (ll_hat - profile_loglik(x, mle_fit, flagged, t, cfg))

    def shrunk(t: float) -> np.ndarray:
        out = lam_hat.copy()
        out[flagged] *= t
        return out

    if statistic(0.0) <= quantile:
        logger.info("shapes %s shrink to zero without rejection", np.flatnonzero(flagged))
        return shrunk(0.0)

    rejected, accepted = 0.0, 1.0
    for _ in range(MAX_BISECTIONS):
        t = 0.5 * (rejected + accepted)
        lr = statistic(t)
        if lr <= quantile:
            accepted = t
            if quantile - lr < LR_TOL:
                break
        else:
            rejected = t
    logger.info("shrinking shapes %s by t=%.6g (nu=%d)", np.flatnonzero(flagged), accepted, nu)
    return shrunk(accepted)
