import logging

import numpy as np
import pytest

from snmix.core.mixture import SnMixture
from snmix.errors import DomainError
from snmix.metrics import (
    BoxRegion,
    bias_rmse,
    degeneracy_flags,
    distance_D,
    distance_Dstar,
    mixing_cdf,
    parameter_names,
)

MODEL_1 = SnMixture.from_arrays([0.5, 0.5], [-2.0, 2.0], [1.0, 2.0], [2.0, 1.0])
# |Psi_a - Psi_b| = 1 on [0, 1) x [1, inf) x [0, inf) for atoms (0, 1, 0) and (1, 1, 0)
UNIT_SHIFT_D = (1.0 - np.exp(-1.0)) * np.exp(-1.0)


def _random_mixture(rng):
    p = int(rng.integers(1, 4))
    return SnMixture.from_arrays(
        rng.dirichlet(np.ones(p)), rng.normal(0.0, 2.0, p), rng.uniform(0.2, 3.0, p), rng.normal(0.0, 3.0, p)
    )


def test_mixing_cdf():
    assert mixing_cdf(MODEL_1, (0.0, 10.0, 10.0)) == 0.5
    assert mixing_cdf(MODEL_1, (3.0, 10.0, 10.0)) == 1.0
    assert mixing_cdf(MODEL_1, (3.0, 1.5, 10.0)) == 0.5
    assert mixing_cdf(MODEL_1, (-3.0, 10.0, 10.0)) == 0.0
    with pytest.raises(DomainError):
        mixing_cdf(MODEL_1, (0.0, 1.0))


def test_distance_single_atoms():
    a = SnMixture.single(0.0, 1.0, 0.0)
    b = SnMixture.single(1.0, 1.0, 0.0)
    assert distance_D(a, b) == pytest.approx(UNIT_SHIFT_D, rel=1e-5)
    assert distance_Dstar(a, b) == pytest.approx(5.0, rel=1e-12)


def test_identity():
    assert distance_D(MODEL_1, MODEL_1) == 0.0
    assert distance_Dstar(MODEL_1, MODEL_1) == 0.0
    assert distance_D(MODEL_1, MODEL_1.permute([1, 0])) == 0.0
    shifted = MODEL_1.replace(mu=[-2.0, 2.5])
    assert distance_D(MODEL_1, shifted) > 0
    assert distance_Dstar(MODEL_1, shifted) > 0


def test_symmetry():
    rng = np.random.default_rng(0)
    for _ in range(10):
        a, b = _random_mixture(rng), _random_mixture(rng)
        assert distance_D(a, b) == pytest.approx(distance_D(b, a), abs=1e-12)
        assert distance_Dstar(a, b) == pytest.approx(distance_Dstar(b, a), abs=1e-12)


def test_triangle_inequality():
    rng = np.random.default_rng(1)
    for _ in range(20):
        a, b, c = _random_mixture(rng), _random_mixture(rng), _random_mixture(rng)
        assert distance_D(a, c) <= distance_D(a, b) + distance_D(b, c) + 1e-3
        assert distance_Dstar(a, c) <= distance_Dstar(a, b) + distance_Dstar(b, c) + 1e-3


def test_grid_refinement():
    shifted = MODEL_1.replace(mu=[-1.0, 2.0])
    coarse = distance_D(MODEL_1, shifted, grid_resolution=32)
    fine = distance_D(MODEL_1, shifted, grid_resolution=64)
    assert coarse > 0
    assert fine == pytest.approx(coarse, abs=1e-3)
    region = BoxRegion(resolution=(16, 16, 16))
    assert distance_Dstar(MODEL_1, shifted, region.refined()) == pytest.approx(
        distance_Dstar(MODEL_1, shifted, region), abs=1e-3
    )


def test_bounded():
    rng = np.random.default_rng(2)
    for _ in range(5):
        value = distance_D(_random_mixture(rng), _random_mixture(rng))
        assert 0.0 <= value <= 4.0


def test_atoms_outside_region_are_clamped(caplog):
    far = SnMixture.single(50.0, 1.0, 0.0)
    with caplog.at_level(logging.WARNING, logger="snmix.metrics"):
        value = distance_Dstar(far, MODEL_1)
    assert np.isfinite(value)
    assert "outside the integration region" in caplog.text


def test_region_validation():
    with pytest.raises(DomainError):
        BoxRegion(lower=(0.0, 0.0, 0.0), upper=(0.0, 1.0, 1.0))
    with pytest.raises(DomainError):
        BoxRegion(resolution=(4, 4, 4))
    assert BoxRegion().refined().resolution == (128, 128, 128)


def test_degeneracy_flags():
    flags = degeneracy_flags(SnMixture.from_arrays([0.5, 0.5], [0.0, 1.0], [1e-11, 1.0], [0.0, -150.0]))
    assert flags.sigma_degenerate and flags.lambda_divergent
    assert flags.min_sigma2 == 1e-11
    assert flags.max_abs_lambda == 150.0
    assert not any(degeneracy_flags(MODEL_1)[:2])


def test_bias_rmse():
    offsets = [np.array([0.1, -0.2]), np.array([0.3, 0.0])]
    estimates = [MODEL_1.replace(mu=MODEL_1.mu + d) for d in offsets]
    table = bias_rmse(estimates, MODEL_1)
    assert list(table.index) == parameter_names(2)
    assert table.loc["mu_1", "bias"] == pytest.approx(0.2)
    assert table.loc["mu_1", "rmse"] == pytest.approx(np.sqrt((0.01 + 0.09) / 2))
    assert table.loc["mu_2", "bias"] == pytest.approx(-0.1)
    assert table.loc["lambda_1", "rmse"] == 0.0


def test_bias_rmse_log_scale():
    estimate = MODEL_1.replace(sigma2=[np.e, 2.0])
    table = bias_rmse([estimate], MODEL_1, log_sigma=True)
    assert table.loc["log_sigma2_1", "bias"] == pytest.approx(1.0)
    assert table.loc["log_sigma2_2", "bias"] == pytest.approx(0.0)
    with pytest.raises(DomainError):
        bias_rmse([SnMixture.single(0.0, 1.0)], MODEL_1)
