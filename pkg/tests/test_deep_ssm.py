from __future__ import annotations

import numpy as np
import pytest

from ssmspec.deep_ssm import (
    PARAM_ORDER,
    DeepSsm,
    DeepSsmConfig,
    TrainConfig,
    fit,
    forward,
    init_model,
    load_checkpoint,
    loss_and_gradient,
    measure_metric,
    numerical_gradient,
    parameters,
    predict_mse,
    save_checkpoint,
    silu,
    silu_grad,
    train_epoch_with_metric,
    window_slices,
    with_parameters,
)
from ssmspec.errors import LengthMismatch, NonFinite
from ssmspec.kspectral import k_spectral_report
from ssmspec.plants import wiener_response
from ssmspec.signals import mse
from ssmspec.ssm_core import simulate_ssm


def _zero_model(cfg: DeepSsmConfig, out_bias: float = 0.0) -> DeepSsm:
    m = init_model(cfg, 0)
    params = {k: np.zeros_like(v) for k, v in m.params.items()}
    params["b_out"][:] = out_bias
    return DeepSsm(config=cfg, params=params, seed=0)


def _max_rel_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    scale = max(float(np.max(np.abs(analytic))), float(np.max(np.abs(numeric))), 1e-8)
    return float(np.max(np.abs(analytic - numeric))) / scale


def test_init_is_deterministic_and_stable():
    cfg = DeepSsmConfig(d=3, d_in=2, l_ssm=2)
    a = init_model(cfg, 5)
    b = init_model(cfg, 5)
    np.testing.assert_array_equal(parameters(a), parameters(b))
    assert not np.array_equal(parameters(a), parameters(init_model(cfg, 6)))
    for layer in range(cfg.l_ssm):
        for i in range(cfg.d_in):
            ch = a.channel(layer, i)
            assert ch.spectral_radius() <= 0.95 + 1e-12
            assert np.linalg.norm(ch.b) == pytest.approx(1.0)
            assert ch.D == 0.0


def test_parameter_layout():
    cfg = DeepSsmConfig(d=2, d_in=3, l_ssm=2, input_dim=1, output_dim=1)
    m = init_model(cfg, 0)
    expected = 3 + 3 + 2 * 3 * 4 + 2 * 3 * 2 + 2 * 3 * 2 + 2 * 3 + 9 + 3 + 3 + 1
    assert m.parameter_count() == expected
    assert list(m.params) == list(PARAM_ORDER)
    theta = parameters(m)
    np.testing.assert_array_equal(parameters(with_parameters(m, theta)), theta)
    with pytest.raises(LengthMismatch):
        with_parameters(m, theta[:-1])


def test_silu():
    np.testing.assert_allclose(silu(np.array([0.0])), [0.0])
    x = np.linspace(-4, 4, 17)
    h = 1e-6
    np.testing.assert_allclose(silu_grad(x), (silu(x + h) - silu(x - h)) / (2 * h), atol=1e-8)


def test_zero_weights_give_output_bias():
    cfg = DeepSsmConfig(d=2, d_in=3)
    out, cap = forward(_zero_model(cfg, out_bias=0.7), np.linspace(-1, 1, 20))
    np.testing.assert_allclose(out, 0.7)
    assert cap.signals.shape == (1, 20, 3)
    assert cap.count == 3
    np.testing.assert_array_equal(cap.signals, 0.0)


def test_forward_shapes_multi_output(rng):
    cfg = DeepSsmConfig(d=2, d_in=2, l_ssm=3, input_dim=2, output_dim=3)
    out, cap = forward(init_model(cfg, 1), rng.standard_normal((12, 2)))
    assert out.shape == (12, 3)
    assert cap.signals.shape == (3, 12, 2)
    assert [layer for layer, _, _ in cap.items()] == [0, 0, 1, 1, 2, 2]
    with pytest.raises(LengthMismatch):
        forward(init_model(cfg, 1), rng.standard_normal(12))


def test_captured_signal_drives_its_channel(rng):
    """The captured u^{1,i} run through channel i reproduces the SSM output seen by the output layer."""
    cfg = DeepSsmConfig(d=3, d_in=2)
    m = init_model(cfg, 4)
    m.params["D"][:] = 0.3
    u0 = rng.standard_normal(25)
    out, cap = forward(m, u0)
    ys = np.column_stack([simulate_ssm(m.channel(0, i), cap.channel(0, i))[0] for i in range(2)])
    expected = silu(ys) @ m.params["W_out"].T + m.params["b_out"]
    np.testing.assert_allclose(out, expected[:, 0], atol=1e-12)


def test_loss_is_zero_on_own_output(rng):
    m = init_model(DeepSsmConfig(d=2, d_in=2), 3)
    u0 = rng.standard_normal(16)
    out, _ = forward(m, u0)
    loss, grad = loss_and_gradient(m, u0, out)
    assert loss == 0.0
    np.testing.assert_array_equal(grad, 0.0)
    assert predict_mse(m, u0, out) == 0.0


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(2024)
    cfg = DeepSsmConfig(d=2, d_in=2)
    for seed in range(50):
        m = init_model(cfg, seed)
        m = with_parameters(m, parameters(m) + 0.1 * rng.standard_normal(m.parameter_count()))
        u0 = rng.standard_normal(16)
        y = rng.standard_normal(16)
        _, grad = loss_and_gradient(m, u0, y)
        assert _max_rel_error(grad, numerical_gradient(m, u0, y, eps=1e-5)) < 1e-4


@pytest.mark.parametrize("l_ssm, input_dim, output_dim", [(2, 1, 1), (3, 2, 2)])
def test_gradient_matches_finite_differences_stacked(l_ssm, input_dim, output_dim):
    rng = np.random.default_rng(l_ssm)
    cfg = DeepSsmConfig(d=2, d_in=2, l_ssm=l_ssm, input_dim=input_dim, output_dim=output_dim)
    m = init_model(cfg, 9)
    m = with_parameters(m, parameters(m) + 0.1 * rng.standard_normal(m.parameter_count()))
    u0 = rng.standard_normal((16, input_dim))
    y = rng.standard_normal((16, output_dim))
    _, grad = loss_and_gradient(m, u0, y)
    assert _max_rel_error(grad, numerical_gradient(m, u0, y)) < 1e-4


def test_predict_mse_matches_offline_recomputation():
    cfg = DeepSsmConfig(d=2, d_in=2)
    m = _zero_model(cfg, out_bias=0.25)
    y_true = wiener_response(np.ones(100))
    assert predict_mse(m, np.ones(100), y_true) == pytest.approx(mse(np.full(100, 0.25), y_true))


def test_nonfinite_forward_raises():
    cfg = DeepSsmConfig(d=1, d_in=1)
    m = init_model(cfg, 0)
    m.params["A"][:] = 1e200
    m.params["W_in"][:] = 1.0
    m.params["W_out"][:] = 1.0
    with pytest.raises(NonFinite):
        forward(m, np.ones(40))


# ---------- Instrumented training ----------


def _dataset(rng, n: int, T: int = 32):
    return [(u, wiener_response(u)) for u in (rng.standard_normal(T) for _ in range(n))]


def test_zero_learning_rate_keeps_parameters(rng):
    m = init_model(DeepSsmConfig(d=2, d_in=2), 1)
    data = _dataset(rng, 3)
    outcome = train_epoch_with_metric(m, data, TrainConfig(lr=0.0, epochs=1))
    np.testing.assert_array_equal(parameters(outcome.model), parameters(m))
    assert outcome.r_bar == pytest.approx(measure_metric(m, data, 2).r_bar)


def test_metric_is_taken_before_the_update(rng):
    m = init_model(DeepSsmConfig(d=2, d_in=2), 1)
    data = _dataset(rng, 1)
    model, r_bar, per_layer, loss = train_epoch_with_metric(m, data, TrainConfig(lr=0.01))
    assert r_bar == measure_metric(m, data, 2).r_bar
    assert not np.array_equal(parameters(model), parameters(m))
    assert set(per_layer) == {0}
    assert loss > 0.0


def test_duplicate_sequences_do_not_change_the_metric(rng):
    m = init_model(DeepSsmConfig(d=2, d_in=2), 2)
    (pair,) = _dataset(rng, 1)
    cfg = TrainConfig(lr=0.0)
    one = train_epoch_with_metric(m, [pair], cfg)
    two = train_epoch_with_metric(m, [pair, pair], cfg)
    assert two.r_bar == one.r_bar


def test_metric_bounds(rng):
    m = init_model(DeepSsmConfig(d=2, d_in=3, l_ssm=2), 3)
    data = _dataset(rng, 2, T=40)
    snap = measure_metric(m, data, 4)
    assert 0.0 < snap.r_bar <= np.sqrt(40 * 4)
    assert set(snap.per_layer_r) == {0, 1}


def test_offline_report_equals_in_loop_metric(rng):
    m = init_model(DeepSsmConfig(d=2, d_in=2, l_ssm=2), 4)
    data = _dataset(rng, 3)
    cfg = TrainConfig(lr=0.005, batch_size=2, keep_spectra=True, window=16, seed=7)
    outcome = train_epoch_with_metric(m, data, cfg, epoch=3)
    assert outcome.spectra is not None and len(outcome.spectra) == 6
    assert k_spectral_report(outcome.spectra, 2).r_bar == outcome.r_bar


def test_shuffle_is_seeded(rng):
    m = init_model(DeepSsmConfig(d=2, d_in=2), 5)
    data = _dataset(rng, 4)
    cfg = TrainConfig(lr=0.01, seed=11)
    a = train_epoch_with_metric(m, data, cfg, epoch=2)
    b = train_epoch_with_metric(m, data, cfg, epoch=2)
    np.testing.assert_array_equal(parameters(a.model), parameters(b.model))
    assert a.r_bar == b.r_bar


def test_zero_channels_are_skipped(rng, caplog):
    m = _zero_model(DeepSsmConfig(d=2, d_in=2))
    snap = measure_metric(m, _dataset(rng, 1), 2)
    assert snap.r_bar == 0.0
    assert "skipping zero channel" in caplog.text


def test_all_zero_sequence_is_left_out_of_the_mean(rng, caplog):
    m = init_model(DeepSsmConfig(d=2, d_in=2), 9)
    params = dict(m.params)
    params["b_in"] = np.zeros_like(params["b_in"])
    m = DeepSsm(config=m.config, params=params, seed=9)
    (pair,) = _dataset(rng, 1)
    silent = (np.zeros(32), np.zeros(32))
    alone = measure_metric(m, [pair], 2)
    both = measure_metric(m, [silent, pair], 2)
    assert both.r_bar == pytest.approx(alone.r_bar)
    assert both.per_layer_r == pytest.approx(alone.per_layer_r)
    assert "skipping zero channel" in caplog.text


def test_grad_clip_limits_the_step(rng):
    m = init_model(DeepSsmConfig(d=2, d_in=2), 6)
    data = _dataset(rng, 1)
    outcome = train_epoch_with_metric(m, data, TrainConfig(lr=1.0, grad_clip=1e-3))
    step = np.linalg.norm(parameters(outcome.model) - parameters(m))
    assert step <= 1e-3 + 1e-12


def test_fit_records_every_epoch(rng):
    m = init_model(DeepSsmConfig(d=2, d_in=2), 7)
    data = _dataset(rng, 2)
    seen = []
    model, records = fit(
        m, data, TrainConfig(lr=0.001, epochs=3), val=data[0], on_epoch=lambda rec, _: seen.append(rec.epoch)
    )
    assert [r.epoch for r in records] == [1, 2, 3] == seen
    assert all(r.K == 2 and r.val_loss is not None for r in records)
    doc = records[0].to_dict()
    assert set(doc) == {"epoch", "train_loss", "val_loss", "r_bar", "per_layer_r", "K"}
    assert list(doc["per_layer_r"]) == ["0"]


def test_checkpoint_round_trip(tmp_path):
    m = init_model(DeepSsmConfig(d=3, d_in=2, l_ssm=2), 8)
    path = save_checkpoint(tmp_path / "ckpt" / "model.json", m, epoch=4)
    loaded, epoch = load_checkpoint(path)
    assert epoch == 4
    assert loaded.config == m.config
    np.testing.assert_array_equal(parameters(loaded), parameters(m))


def test_identity_channels_reduce_to_a_per_step_mlp(rng):
    cfg = DeepSsmConfig(d=3, d_in=4, l_ssm=2, input_dim=2, output_dim=2)
    m = init_model(cfg, 10)
    params = dict(m.params)
    params["C"] = np.zeros_like(params["C"])
    params["D"] = np.ones_like(params["D"])
    m = DeepSsm(config=cfg, params=params, seed=10)
    u0 = rng.standard_normal((50, 2))
    out, _ = forward(m, u0)
    h = silu(u0 @ params["W_in"].T + params["b_in"])
    h = silu(h @ params["W_mix"][0].T + params["b_mix"][0])
    expected = silu(h) @ params["W_out"].T + params["b_out"]
    np.testing.assert_allclose(out, expected, rtol=0, atol=1e-12)


@pytest.mark.parametrize(
    "T, window, lengths",
    [(100, 39, [39, 61]), (32, 16, [16, 16]), (10, 3, [3, 3, 4]), (10, None, [10]), (10, 10, [10]), (10, 40, [10])],
)
def test_window_slices_cover_the_sequence(T, window, lengths):
    slices = window_slices(T, window)
    assert [s.stop - s.start for s in slices] == lengths
    assert slices[0].start == 0 and slices[-1].stop == T
    assert all(a.stop == b.start for a, b in zip(slices, slices[1:]))


def test_short_tail_window_is_merged(rng):
    m = init_model(DeepSsmConfig(d=4, d_in=2), 11)
    data = _dataset(rng, 1, T=100)
    outcome = train_epoch_with_metric(m, data, TrainConfig(lr=0.001, window=39, keep_spectra=True))
    assert [seq[0].source_length for seq in outcome.spectra] in ([39, 61], [61, 39])
    assert 0.0 < outcome.r_bar <= np.sqrt(61 * 4)


def test_training_lowers_the_loss_for_most_seeds():
    improved = 0
    for seed in range(20):
        data = _dataset(np.random.default_rng(seed), 2, T=64)
        m = init_model(DeepSsmConfig(d=2, d_in=2), seed)
        _, records = fit(m, data, TrainConfig(lr=0.02, epochs=5, window=16, grad_clip=1.0, seed=seed))
        improved += records[-1].train_loss < records[0].train_loss
    assert improved >= 18
