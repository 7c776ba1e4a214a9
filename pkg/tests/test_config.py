import json

import pytest
from pydantic import ValidationError

from dependencies import RunConfig, resolve_run_config


def test_defaults():
    config = resolve_run_config()
    assert (config.PROFILE, config.SEED, config.MODALITY, config.EPOCHS) == ("dev", 0, "fused", 20)
    assert config.data_params() == {"max_len": 200, "min_count": 10}


def test_flags_beat_file_beat_defaults(tmp_path):
    path = tmp_path / "run.env"
    path.write_text("SEED=3\nEPOCHS=7\nLR=0.01\nCONV_CHANNELS=[2, 4]\n")
    config = resolve_run_config(str(path), {"SEED": 9, "LR": None})
    assert config.SEED == 9
    assert config.EPOCHS == 7
    assert config.LR == 0.01
    assert config.BATCH_SIZE == 32
    assert config.model_overrides()["conv_channels"] == [2, 4]


def test_unknown_key_is_rejected(tmp_path):
    path = tmp_path / "run.env"
    path.write_text("SEED=1\nLEARNING_RATE=0.1\n")
    with pytest.raises(ValidationError):
        resolve_run_config(str(path))
    with pytest.raises(ValidationError):
        RunConfig(WARMUP=3)


def test_out_of_range_value(tmp_path):
    with pytest.raises(ValidationError):
        resolve_run_config(None, {"EPOCHS": 0})


def test_missing_file():
    with pytest.raises(FileNotFoundError):
        resolve_run_config("does-not-exist.env")


def test_process_environment_is_ignored(monkeypatch):
    monkeypatch.setenv("SEED", "77")
    assert resolve_run_config().SEED == 0


def test_replays_artifact_echo(tmp_path):
    original = resolve_run_config(None, {"SEED": 5, "MODALITY": "text", "MAX_LEN": 30})
    artifact = tmp_path / "fused_test.json"
    artifact.write_text(json.dumps({"model_name": "text", "config": original.echo()}))

    replayed = resolve_run_config(str(artifact))
    assert replayed == original
    assert resolve_run_config(str(artifact), {"SEED": 6}).SEED == 6


def test_profile_overrides_merge():
    config = RunConfig(PROFILE="prod", MIN_COUNT=2)
    assert config.data_params() == {"max_len": 200, "min_count": 2}
    train = config.train_config()
    assert (train.epochs, train.batch_size, train.patience, train.modality) == (20, 32, 5, "fused")
