from typing import Any, Dict, List, Optional

from pydantic import BaseModel

from schemas.configs import Modality, ModelConfig

CHECKPOINT_FORMAT_VERSION = 1


class TensorPayload(BaseModel):
    """A float64 array as shape plus base64 of its little-endian bytes."""
    shape: List[int]
    data: str


class CheckpointFile(BaseModel):
    format_version: int = CHECKPOINT_FORMAT_VERSION
    model_name: str
    modality: Modality
    model: ModelConfig
    genres: List[str]
    vocab_tokens: List[str]
    vocab_min_count: int
    vocab_sha256: str
    vocab_path: Optional[str] = None
    max_len: int = 200
    include_title: bool = False
    parameters: Dict[str, TensorPayload]
    history: List[Dict[str, Any]] = []
    config: Dict[str, Any] = {}
