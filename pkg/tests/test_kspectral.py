from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ssmspec.deep_ssm import DeepSsmConfig
from ssmspec.errors import BadK, EmptyInput
from ssmspec.kspectral import (
    KSpectralReport,
    aggregate,
    default_k,
    k_spectral,
    k_spectral_max,
    k_spectral_report,
    sweep_k_values,
    topk_indices,
)
from ssmspec.signals import Spectrum, dft_magnitudes, normalize


def _spec(mags) -> Spectrum:
    arr = np.asarray(mags, dtype=np.float64)
    return Spectrum(magnitudes=arr, source_length=arr.size)


def _flat_top(T: int, K: int) -> Spectrum:
    mags = np.zeros(T)
    mags[:K] = math.sqrt(T / K)
    return _spec(mags)


def test_unit_constant_signal():
    spec = dft_magnitudes(normalize(np.ones(4)))
    assert k_spectral(spec, 1) == pytest.approx(2.0)
    assert k_spectral(spec, 2) == pytest.approx(2.0)
    assert k_spectral(spec, 2) < k_spectral_max(4, 2)


def test_flat_spectrum_reaches_maximum():
    assert k_spectral(_flat_top(16, 4), 4) == pytest.approx(math.sqrt(16 * 4))


@pytest.mark.parametrize("T, K, expected", [(4, 2, 2 * math.sqrt(2)), (9, 9, 9.0), (25, 1, 5.0)])
def test_k_spectral_max(T, K, expected):
    assert k_spectral_max(T, K) == pytest.approx(expected)


@pytest.mark.parametrize("K", [0, 5, 2.0, -1])
def test_bad_k(K):
    with pytest.raises(BadK):
        k_spectral(_spec([1.0, 1.0, 1.0, 1.0]), K)


def test_topk_ties_go_to_lower_bin():
    spec = _spec([1.0, 3.0, 2.0, 3.0, 2.0])
    np.testing.assert_array_equal(topk_indices(spec, 3), [1, 3, 2])


def test_aggregate():
    assert aggregate([2, 4]) == 3.0
    assert aggregate([1.25]) == 1.25
    with pytest.raises(EmptyInput):
        aggregate([])


def test_default_k_is_state_dimension():
    assert default_k(DeepSsmConfig(d=4)) == 4
    assert default_k(DeepSsmConfig(d=16)) == 16


def test_sweep_k_values():
    assert sweep_k_values(DeepSsmConfig(d=4, d_in=4)) == [2, 4, 8]
    assert sweep_k_values(DeepSsmConfig(d=1, d_in=6)) == [1, 2, 6]


def test_report_averages_sequences():
    a = [_flat_top(4, 1), _flat_top(4, 4)]
    b = [_flat_top(4, 2)]
    report = k_spectral_report([a, b], 1)
    assert report.T == 4
    assert report.per_channel[0] == pytest.approx([2.0, 1.0])
    assert report.per_sequence == pytest.approx([1.5, math.sqrt(2)])
    assert report.r_bar == pytest.approx((1.5 + math.sqrt(2)) / 2)
    again = KSpectralReport.from_dict(report.to_dict())
    assert again.r_bar == report.r_bar
    assert again.per_channel == report.per_channel


def test_skipped_sequence_is_left_out_of_the_mean():
    report = k_spectral_report([[_flat_top(4, 1)], []], 1)
    assert report.per_sequence == [2.0, 0.0]
    assert report.r_bar == 2.0
    assert k_spectral_report([[], []], 1).r_bar == 0.0
    with pytest.raises(EmptyInput):
        k_spectral_report([], 1)


@settings(max_examples=200, deadline=None)
@given(st.integers(min_value=1, max_value=1024), st.data())
def test_flat_top_k_attains_bound(T, data):
    K = data.draw(st.integers(min_value=1, max_value=T))
    assert k_spectral(_flat_top(T, K), K) == pytest.approx(math.sqrt(T * K), rel=1e-9)


@settings(max_examples=200, deadline=None)
@given(
    st.integers(min_value=2, max_value=1024),
    st.data(),
    st.floats(min_value=1e-3, max_value=0.5),
)
def test_moving_energy_off_the_top_k_scores_lower(T, data, share):
    K = data.draw(st.integers(min_value=1, max_value=T - 1))
    mags = np.zeros(T)
    mags[:K] = math.sqrt(T / K)
    # move part of one bin's energy to a bin outside the top K; total energy stays T
    moved = share * T / K
    mags[0] = math.sqrt(T / K - moved)
    mags[K] = math.sqrt(moved)
    spec = _spec(mags)
    assert float(np.sum(mags**2)) == pytest.approx(T)
    assert k_spectral(spec, K) < math.sqrt(T * K)


@settings(max_examples=100, deadline=None)
@given(st.integers(min_value=2, max_value=256), st.integers(min_value=0, max_value=2**32 - 1), st.data())
def test_random_signals_never_exceed_bound(T, seed, data):
    K = data.draw(st.integers(min_value=1, max_value=T))
    x = normalize(np.random.default_rng(seed).standard_normal(T))
    assert k_spectral(dft_magnitudes(x), K) <= math.sqrt(T * K) * (1 + 1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(min_value=2, max_value=256), st.integers(min_value=0, max_value=2**32 - 1))
def test_score_grows_with_k(T, seed):
    spec = dft_magnitudes(normalize(np.random.default_rng(seed).standard_normal(T)))
    scores = [k_spectral(spec, K) for K in range(1, T + 1)]
    assert all(b >= a for a, b in zip(scores, scores[1:]))


@settings(max_examples=100, deadline=None)
@given(
    st.integers(min_value=2, max_value=256),
    st.integers(min_value=0, max_value=2**32 - 1),
    st.integers(min_value=0, max_value=1000),
    st.data(),
)
def test_circular_shift_leaves_score_unchanged(T, seed, shift, data):
    K = data.draw(st.integers(min_value=1, max_value=T))
    x = normalize(np.random.default_rng(seed).standard_normal(T))
    shifted = np.roll(x, shift)
    assert k_spectral(dft_magnitudes(shifted), K) == pytest.approx(k_spectral(dft_magnitudes(x), K), rel=1e-9)


@pytest.mark.parametrize("alpha", [1e-6, 0.3, -2.0, 1e4])
def test_report_ignores_signal_scale(rng, alpha):
    seqs = [[rng.standard_normal(64) for _ in range(3)] for _ in range(4)]

    def report(scale):
        return k_spectral_report([[dft_magnitudes(normalize(scale * s)) for s in seq] for seq in seqs], 4)

    base, scaled = report(1.0), report(alpha)
    assert scaled.r_bar == pytest.approx(base.r_bar, rel=1e-9)
    assert scaled.per_sequence == pytest.approx(base.per_sequence, rel=1e-9)
