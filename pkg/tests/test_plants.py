from __future__ import annotations

import math

import numpy as np
import pytest

from ssmspec.plants import (
    NoiseConfig,
    PlantKind,
    hammerstein_response,
    noiseless_rms,
    plant_response,
    wiener_response,
)


@pytest.mark.parametrize("fn", [wiener_response, hammerstein_response])
def test_zero_input_gives_zero_output(fn):
    np.testing.assert_array_equal(fn(np.zeros(30)), np.zeros(30))


def test_wiener_unit_step_steady_state():
    y = wiener_response(np.ones(1000))
    assert y[-1] == pytest.approx(1.0, abs=1e-6)


def test_wiener_output_is_bounded(rng):
    y = wiener_response(rng.normal(0.0, 100.0, size=1_000_000))
    assert np.max(np.abs(y)) <= 1.0 / math.sqrt(0.9) + 1e-12


def test_hammerstein_constant_input_steady_state():
    y = hammerstein_response(np.ones(20))
    np.testing.assert_allclose(y[8:], 64.8, atol=1e-9)


def test_hammerstein_impulse():
    y = hammerstein_response([1, 0, 0, 0, 0])
    np.testing.assert_allclose(y, [0, 6, 12, 1.8, 24])


def test_noise_is_seeded_and_additive():
    u = np.linspace(-1, 1, 50)
    noise = NoiseConfig(sigma=0.1, seed=3)
    a = plant_response(PlantKind.WIENER, u, noise)
    b = plant_response("wiener", u, noise)
    np.testing.assert_array_equal(a, b)
    resid = a - wiener_response(u)
    np.testing.assert_allclose(resid, NoiseConfig(sigma=0.1, seed=3).sample(50))
    assert not np.array_equal(a, plant_response("wiener", u, NoiseConfig(sigma=0.1, seed=4)))


def test_relative_noise_uses_noiseless_rms():
    u = np.sin(np.arange(200) / 5.0)
    rms = noiseless_rms("hammerstein", u)
    y = hammerstein_response(u)
    assert rms == pytest.approx(float(np.sqrt(np.mean(y**2))))
    assert NoiseConfig.relative(0.01, rms, seed=1).sigma == pytest.approx(0.01 * rms)


@pytest.mark.parametrize("kind", ["wiener", "hammerstein"])
@pytest.mark.parametrize("level", [0.01, 0.1])
def test_relative_noise_has_requested_variance(rng, kind, level):
    u = rng.standard_normal(100_000)
    rms = noiseless_rms(kind, u)
    resid = plant_response(kind, u, NoiseConfig.relative(level, rms, seed=5)) - plant_response(kind, u)
    assert float(np.var(resid)) == pytest.approx((level * rms) ** 2, rel=0.05)


def test_noise_config_validation():
    with pytest.raises(ValueError):
        NoiseConfig(sigma=-1.0)
    with pytest.raises(ValueError):
        NoiseConfig(sigma=float("nan"))
    assert NoiseConfig().to_dict() == {"sigma": 0.0, "seed": 0}


def test_unknown_plant():
    with pytest.raises(ValueError):
        plant_response("box-jenkins", np.ones(4))
