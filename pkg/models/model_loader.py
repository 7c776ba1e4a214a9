import base64
import json
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np

from errors import CompatibilityError
from models.classifiers import build_classifier
from models.layers import Module
from schemas.checkpoint import CHECKPOINT_FORMAT_VERSION, CheckpointFile, TensorPayload
from schemas.configs import Modality, ModelConfig
from schemas.records import Vocabulary
from services.text_pipeline import vocab_from_tokens, vocab_sha256

logger = logging.getLogger(__name__)

# PROFILES caches the merged JSON dimension profiles by name.
PROFILES: Dict[str, Dict[str, Dict[str, Any]]] = {}


def load_profile(profile: str) -> Dict[str, Dict[str, Any]]:
    """
    Reads model_config_defaults.json, then model_config_{profile}.json on top of it.
    Returns {"model_params": {...}, "data_params": {...}}.
    """
    if profile in PROFILES:
        return PROFILES[profile]

    here = os.path.dirname(__file__)
    defaults_path = os.path.join(here, "model_config_defaults.json")
    profile_path = os.path.join(here, f"model_config_{profile}.json")

    model_params: Dict[str, Any] = {}
    data_params: Dict[str, Any] = {}
    try:
        with open(defaults_path, "r") as f:
            defaults = json.load(f)
            model_params.update(defaults.get("default_model_params", {}))
            data_params.update(defaults.get("default_data_params", {}))
    except FileNotFoundError:
        logger.info("model_config_defaults.json not found; no default dimensions applied.")

    if not os.path.exists(profile_path):
        raise FileNotFoundError(f"Unknown profile '{profile}': {profile_path} does not exist")
    with open(profile_path, "r") as f:
        selected = json.load(f)
    model_params.update(selected.get("model_params", {}))
    data_params.update(selected.get("data_params", {}))

    PROFILES[profile] = {"model_params": model_params, "data_params": data_params}
    logger.debug("Loaded profile '%s' (%s).", profile, selected.get("id", profile))
    return PROFILES[profile]


def resolve_model_config(profile: str, vocab_size: int, overrides: Optional[Dict[str, Any]] = None, init_seed: int = 0) -> ModelConfig:
    """Profile values, then explicit overrides (None means 'not overridden')."""
    params = dict(load_profile(profile)["model_params"])
    params.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return ModelConfig(vocab_size=vocab_size, init_seed=init_seed, **params)


def encode_tensor(values: np.ndarray) -> TensorPayload:
    data = np.ascontiguousarray(values, dtype="<f8").tobytes()
    return TensorPayload(shape=list(values.shape), data=base64.b64encode(data).decode("ascii"))


def decode_tensor(payload: TensorPayload) -> np.ndarray:
    raw = np.frombuffer(base64.b64decode(payload.data), dtype="<f8")
    return raw.reshape(payload.shape).astype(np.float64)


@dataclass
class LoadedCheckpoint:
    meta: CheckpointFile
    model: Module
    vocab: Vocabulary


def save_checkpoint(
    path: Union[str, Path],
    model: Module,
    modality: Modality,
    model_config: ModelConfig,
    vocab: Vocabulary,
    genres: List[str],
    model_name: str = "",
    history: Optional[List[Dict[str, Any]]] = None,
    config: Optional[Dict[str, Any]] = None,
    vocab_path: Optional[str] = None,
    max_len: int = 200,
    include_title: bool = False,
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    checkpoint = CheckpointFile(
        model_name=model_name or f"{modality}-model",
        modality=modality,
        model=model_config,
        genres=list(genres),
        vocab_tokens=vocab.tokens(),
        vocab_min_count=vocab.min_count,
        vocab_sha256=vocab_sha256(vocab),
        vocab_path=vocab_path,
        max_len=max_len,
        include_title=include_title,
        parameters={name: encode_tensor(t.values) for name, t in model.named_parameters().items()},
        history=history or [],
        config=config or {},
    )
    path.write_text(checkpoint.model_dump_json(indent=2), encoding="utf-8")
    print(f"💾 Checkpoint written to {path}")
    return path


def read_checkpoint(path: Union[str, Path]) -> CheckpointFile:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Checkpoint not found: {path}")
    checkpoint = CheckpointFile.model_validate_json(path.read_text(encoding="utf-8"))
    if checkpoint.format_version != CHECKPOINT_FORMAT_VERSION:
        raise CompatibilityError(
            f"{path} has checkpoint format {checkpoint.format_version}, this build reads {CHECKPOINT_FORMAT_VERSION}"
        )
    return checkpoint


def load_checkpoint(path: Union[str, Path]) -> LoadedCheckpoint:
    """Rebuilds the model with its saved weights; predictions match the saved model bitwise."""
    meta = read_checkpoint(path)
    model = build_classifier(meta.modality, meta.model, freeze_encoders=False)
    model.load_state_dict({name: decode_tensor(p) for name, p in meta.parameters.items()})
    vocab = vocab_from_tokens(meta.vocab_tokens, meta.vocab_min_count)
    if vocab_sha256(vocab) != meta.vocab_sha256:
        raise CompatibilityError(f"{path}: embedded vocabulary does not match its recorded hash")
    logger.info("Loaded %s checkpoint '%s' from %s.", meta.modality, meta.model_name, path)
    return LoadedCheckpoint(meta=meta, model=model, vocab=vocab)


def transfer_encoder(model: Module, checkpoint_path: Union[str, Path], prefix: str) -> int:
    """
    Copies every `prefix.*` parameter from a trained checkpoint into `model`,
    e.g. a text-only model's LSTM into a fused model. Returns the number of tensors copied.
    """
    meta = read_checkpoint(checkpoint_path)
    source = {name: decode_tensor(p) for name, p in meta.parameters.items() if name.startswith(prefix + ".")}
    if not source:
        raise CompatibilityError(f"{checkpoint_path} holds no '{prefix}' encoder parameters")
    target = model.named_parameters()
    missing = sorted(set(source) - set(target))
    if missing:
        raise CompatibilityError(f"model has no parameters named {missing}")
    model.load_state_dict(source, strict=False)
    logger.info("Initialised %d %s encoder tensor(s) from %s.", len(source), prefix, checkpoint_path)
    return len(source)
