from __future__ import annotations

from ssmspec.validator import parse_config, validate_config


def _has_error(errors: list[str], snippet: str) -> bool:
    return any(snippet in e for e in errors)


def _has_warn(warns: list[str], snippet: str) -> bool:
    return any(snippet in w for w in warns)


def test_valid_minimal_config():
    errors, _ = validate_config({})
    assert errors == []


def test_tiny_config_warns_about_few_datasets(tiny_doc):
    errors, warns = validate_config(tiny_doc)
    assert errors == []
    assert _has_warn(warns, "num_datasets=3")


def test_unknown_keys_are_warnings(tiny_doc):
    doc = {**tiny_doc, "colour": "red", "train": {**tiny_doc["train"], "momentum": 0.9}}
    errors, warns = validate_config(doc)
    assert errors == []
    assert _has_warn(warns, "colour: unknown key is ignored")
    assert _has_warn(warns, "train.momentum: unknown key is ignored")


def test_friendly_messages(tiny_doc):
    errors, _ = validate_config({**tiny_doc, "num_datasets": 1, "plant": "box-jenkins"})
    assert _has_error(errors, "num_datasets: correlation needs at least 2 datasets")
    assert _has_error(errors, "plant: plant must be 'wiener' or 'hammerstein'")
    errors, _ = validate_config({**tiny_doc, "train": {"lr": -0.1}})
    assert _has_error(errors, "train.lr: learning rate must be >= 0")


def test_model_validator_errors_are_reported(tiny_doc):
    errors, _ = validate_config({**tiny_doc, "metric_epoch": 5})
    assert _has_error(errors, "metric_epoch 5 exceeds train.epochs 2")
    assert not _has_error(errors, "Value error")


def test_k_larger_than_captured_signal(tiny_doc):
    errors, _ = validate_config({**tiny_doc, "k_values": [2, 60]})
    assert _has_error(errors, "K=60 exceeds the captured signal length 51")
    errors, _ = validate_config({**tiny_doc, "train": {"epochs": 2, "window": 8, "K": 9}})
    assert _has_error(errors, "K=9 exceeds the captured signal length 8")


def test_short_tail_window_does_not_limit_k(tiny_doc):
    doc = {**tiny_doc, "length": 125, "model": {"d": 4, "d_in": 2}, "train": {"epochs": 2, "window": 39}}
    errors, _ = validate_config(doc)
    assert errors == []
    errors, _ = validate_config({**doc, "train": {"epochs": 2, "window": 39, "K": 40}})
    assert _has_error(errors, "K=40 exceeds the captured signal length 39")


def test_k_other_than_d_warns(tiny_doc):
    _, warns = validate_config({**tiny_doc, "train": {"epochs": 2, "K": 3}})
    assert _has_warn(warns, "train.K=3 differs from the default K = d = 2")


def test_integer_bins_capacity(tiny_doc):
    errors, _ = validate_config({**tiny_doc, "integer_bins": True, "i_max": 40})
    assert _has_error(errors, "integer_bins allows at most 31 components")


def test_non_object_document():
    errors, _ = validate_config([1, 2])  # type: ignore[arg-type]
    assert errors == ["config must be a JSON object"]


def test_parse_config_returns_model(tiny_doc):
    cfg = parse_config(tiny_doc)
    assert cfg.num_datasets == 3
