"""
Distances between mixing distributions, degeneracy accounting and bias/RMSE aggregation.

A mixture is identified with its mixing distribution Psi(theta) = sum_k pi_k I(theta_k <= theta) on the
(mu, sigma2, lam) space. Both distances integrate |Psi_a - Psi_b| on a rectilinear grid whose cell edges include
every atom coordinate, so the CDF difference is constant on each cell and only the weight needs integrating.
"""
import logging
from dataclasses import dataclass, field
from typing import List, NamedTuple, Sequence, Tuple

import numpy as np
import pandas as pd

from snmix.core.mixture import SnMixture
from snmix.errors import DomainError

logger = logging.getLogger(__name__)

SIGMA2_DEGENERATE = 1e-10
LAMBDA_DIVERGENT = 100.0
# exp(-14) < 1e-6, the tail weight mass left outside the integration box of distance_D
WEIGHT_PADDING = 14.0
DEFAULT_RESOLUTION = 64
MIN_RESOLUTION = 8


@dataclass(frozen=True)
class BoxRegion:
    """Integration box in transformed coordinates (mu, log(sigma2) / 5, sign(lam) log(1 + |lam|) / 2)."""

    lower: Tuple[float, float, float] = (-5.0, -15.0, -10.0)
    upper: Tuple[float, float, float] = (10.0, 1.0, 5.0)
    resolution: Tuple[int, int, int] = field(default=(DEFAULT_RESOLUTION,) * 3)

    def __post_init__(self):
        lower = tuple(float(v) for v in self.lower)
        upper = tuple(float(v) for v in self.upper)
        res = self.resolution
        res = tuple(int(r) for r in (np.broadcast_to(res, (3,)) if np.ndim(res) == 0 else res))
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "resolution", res)
        if not (len(lower) == len(upper) == len(res) == 3):
            raise DomainError("a region needs three bounds and three resolutions")
        if any(lo >= hi for lo, hi in zip(lower, upper)):
            raise DomainError(f"lower bounds {lower} must lie below upper bounds {upper}")
        if any(r < MIN_RESOLUTION for r in res):
            raise DomainError(f"resolution must be at least {MIN_RESOLUTION} per axis, got {res}")

    def refined(self, factor: int = 2) -> "BoxRegion":
        return BoxRegion(self.lower, self.upper, tuple(r * factor for r in self.resolution))


class DegeneracyFlags(NamedTuple):
    sigma_degenerate: bool
    lambda_divergent: bool
    min_sigma2: float
    max_abs_lambda: float


def atoms(psi: SnMixture) -> np.ndarray:
    """Atom coordinates (mu, sigma2, lam), shape (p, 3)."""
    return np.column_stack([psi.mu, psi.sigma2, psi.lam])


def transform_atoms(psi: SnMixture) -> np.ndarray:
    """Atoms in the coordinates of :class:`BoxRegion`."""
    lam = psi.lam
    return np.column_stack([psi.mu, np.log(psi.sigma2) / 5.0, np.sign(lam) * np.log1p(np.abs(lam)) / 2.0])


def mixing_cdf(psi: SnMixture, theta_point: Sequence[float]) -> float:
    """
    Psi(theta) = sum of the weights of the atoms dominated componentwise by theta.

    :param psi: mixture
    :param theta_point: (mu, sigma2, lam)
    """
    point = np.asarray(theta_point, dtype=float)
    if point.shape != (3,):
        raise DomainError(f"theta point must have three coordinates, got {point.shape}")
    dominated = np.all(atoms(psi) <= point, axis=1)
    return float(np.sum(psi.weights_array[dominated]))


def _axis_cells(lower: float, upper: float, resolution: int, coordinates: np.ndarray):
    """Cell edges on [lower, upper] refined by the atom coordinates; returns (edges, midpoints)."""
    inner = coordinates[(coordinates > lower) & (coordinates < upper)]
    edges = np.unique(np.concatenate([np.linspace(lower, upper, resolution + 1), inner]))
    return edges, 0.5 * (edges[:-1] + edges[1:])


def _cdf_difference(a_atoms, a_weights, b_atoms, b_weights, midpoints: List[np.ndarray]) -> np.ndarray:
    coords = np.vstack([a_atoms, b_atoms])
    signed = np.concatenate([a_weights, -b_weights])
    below = [(coords[:, d, None] <= midpoints[d][None, :]).astype(float) for d in range(3)]
    return np.einsum("k,ki,kj,kl->ijl", signed, *below, optimize=True)


def _integrate(diff: np.ndarray, cell_weights: List[np.ndarray]) -> float:
    return float(np.einsum("ijl,i,j,l->", np.abs(diff), *cell_weights, optimize=True))


def _laplace_mass(edges: np.ndarray) -> np.ndarray:
    """Integral of exp(-|u|) over each cell."""
    antiderivative = np.sign(edges) * -np.expm1(-np.abs(edges))
    return np.diff(antiderivative)


def distance_D(psi_a: SnMixture, psi_b: SnMixture, grid_resolution: int = DEFAULT_RESOLUTION) -> float:
    """
    Weighted L1 distance between mixing distributions, int |Psi_a - Psi_b| exp(-|mu| - sigma2 - |lam|) dtheta.

    The integrand vanishes below the smallest atom coordinate of each axis; the box extends 14 units of
    weight decay past the largest one. The result lies in [0, 4].

    :param grid_resolution: uniform cells per axis before refinement by the atoms, at least 8
    """
    if grid_resolution < MIN_RESOLUTION:
        raise DomainError(f"resolution must be at least {MIN_RESOLUTION}, got {grid_resolution}")
    a, b = atoms(psi_a), atoms(psi_b)
    both = np.vstack([a, b])
    mids, weights = [], []
    for d in range(3):
        lower = both[:, d].min()
        upper = max(both[:, d].max(), 0.0) + WEIGHT_PADDING
        e, m = _axis_cells(lower, upper, grid_resolution, both[:, d])
        mids.append(m)
        weights.append(_laplace_mass(e))
    diff = _cdf_difference(a, psi_a.weights_array, b, psi_b.weights_array, mids)
    return _integrate(diff, weights)


def _clamp_into(region: BoxRegion, coords: np.ndarray, label: str) -> np.ndarray:
    lower, upper = np.array(region.lower), np.array(region.upper)
    outside = np.any((coords < lower) | (coords > upper), axis=1)
    if np.any(outside):
        logger.warning("%d atom(s) of %s fall outside the integration region and are clamped", outside.sum(), label)
    return np.clip(coords, lower, upper)


def distance_Dstar(psi_a: SnMixture, psi_b: SnMixture, region: BoxRegion = BoxRegion()) -> float:
    """
    Unweighted L1 distance between mixing distributions over a bounded region of transformed coordinates.

    Atoms outside the region are clamped to its boundary, with a warning.
    """
    a = _clamp_into(region, transform_atoms(psi_a), "the first mixture")
    b = _clamp_into(region, transform_atoms(psi_b), "the second mixture")
    both = np.vstack([a, b])
    mids, widths = [], []
    for d in range(3):
        e, m = _axis_cells(region.lower[d], region.upper[d], region.resolution[d], both[:, d])
        mids.append(m)
        widths.append(np.diff(e))
    diff = _cdf_difference(a, psi_a.weights_array, b, psi_b.weights_array, mids)
    return _integrate(diff, widths)


def degeneracy_flags(psi: SnMixture) -> DegeneracyFlags:
    """Flags a variance below 1e-10 or a shape above 100 in magnitude, with the extreme values."""
    min_sigma2 = float(np.min(psi.sigma2))
    max_abs_lambda = float(np.max(np.abs(psi.lam)))
    return DegeneracyFlags(
        min_sigma2 < SIGMA2_DEGENERATE, max_abs_lambda > LAMBDA_DIVERGENT, min_sigma2, max_abs_lambda
    )


def parameter_names(p: int, log_sigma: bool = False) -> List[str]:
    scale = "log_sigma2" if log_sigma else "sigma2"
    return [f"{name}_{k + 1}" for name in ("mu", scale, "lambda", "pi") for k in range(p)]


def parameter_vector(psi: SnMixture, log_sigma: bool = False) -> np.ndarray:
    """Flat (mu, sigma2 or log sigma2, lam, pi) vector in label order."""
    sigma2 = np.log(psi.sigma2) if log_sigma else psi.sigma2
    return np.concatenate([psi.mu, sigma2, psi.lam, psi.weights_array])


def bias_rmse(estimates: Sequence[SnMixture], truth: SnMixture, log_sigma: bool = False) -> pd.DataFrame:
    """
    Bias and root mean squared error of each parameter over a set of label-sorted estimates.

    :param estimates: fitted mixtures, all with the same number of components as ``truth``
    :param truth: true mixture
    :param log_sigma: compare squared scales on the log scale
    :return: frame indexed by parameter name with columns ``bias`` and ``rmse``
    """
    if len(estimates) == 0:
        raise DomainError("need at least one estimate")
    if any(e.p != truth.p for e in estimates):
        raise DomainError(f"every estimate must have {truth.p} components")
    errors = np.array([parameter_vector(e, log_sigma) for e in estimates]) - parameter_vector(truth, log_sigma)
    return pd.DataFrame(
        {"bias": errors.mean(axis=0), "rmse": np.sqrt(np.mean(np.square(errors), axis=0))},
        index=pd.Index(parameter_names(truth.p, log_sigma), name="param"),
    )
