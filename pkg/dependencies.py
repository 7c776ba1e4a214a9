import json
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Type

from pydantic import Field
from pydantic_settings import BaseSettings, PydanticBaseSettingsSource

from models.model_loader import load_profile
from schemas.configs import Modality, TrainConfig


# Use pydantic's BaseSettings for the key=value run config file.
class RunConfig(BaseSettings):
    """
    Every tunable of a run. Precedence: command-line flags > --config file > defaults.
    Dimension fields left as None fall back to the selected PROFILE.
    """
    PROFILE: Literal["dev", "prod"] = "dev"
    SEED: int = 0
    MODALITY: Modality = "fused"

    DATA_DIR: str = "prepared"
    MANIFEST: Optional[str] = None
    ALIAS_TABLE: Optional[str] = None
    INIT_TEXT: Optional[str] = None
    INIT_IMAGE: Optional[str] = None

    # synth
    SYNTH_RECORDS: int = Field(default=1500, ge=1)
    NUM_GENRES: int = Field(default=15, ge=1, le=15)
    P_TEXT: float = Field(default=1.0, ge=0.0, le=1.0)
    P_IMG: float = Field(default=1.0, ge=0.0, le=1.0)
    SIGNAL_MODE: Literal["distinct", "complementary"] = "distinct"

    INCLUDE_TITLE: bool = False
    STRATIFIED_SPLIT: bool = False
    MAX_LEN: Optional[int] = Field(default=None, ge=1)
    MIN_COUNT: Optional[int] = Field(default=None, ge=1)

    IMAGE_SIZE: Optional[int] = Field(default=None, ge=1)
    EMBED_DIM: Optional[int] = Field(default=None, ge=1)
    HIDDEN_SIZE: Optional[int] = Field(default=None, ge=1)
    IMAGE_FEATURE_DIM: Optional[int] = Field(default=None, ge=1)
    CONV_CHANNELS: Optional[List[int]] = None

    EPOCHS: int = Field(default=20, ge=1)
    BATCH_SIZE: int = Field(default=32, ge=1)
    LR: float = Field(default=0.001, ge=0.0)
    BETA1: float = Field(default=0.9, ge=0.0, lt=1.0)
    BETA2: float = Field(default=0.999, ge=0.0, lt=1.0)
    ADAM_EPS: float = Field(default=1e-8, gt=0.0)
    PATIENCE: Optional[int] = Field(default=5, ge=1)
    FREEZE_ENCODERS: bool = False

    class Config:
        env_file = None
        extra = "forbid"

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: Type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> Tuple[PydanticBaseSettingsSource, ...]:
        # Init kwargs, then the key=value file. The process environment is never read.
        return init_settings, dotenv_settings

    def data_params(self) -> Dict[str, Any]:
        """max_len and min_count after profile defaults and overrides."""
        params = dict(load_profile(self.PROFILE)["data_params"])
        if self.MAX_LEN is not None:
            params["max_len"] = self.MAX_LEN
        if self.MIN_COUNT is not None:
            params["min_count"] = self.MIN_COUNT
        return params

    def model_overrides(self) -> Dict[str, Any]:
        return {
            "image_size": self.IMAGE_SIZE,
            "embed_dim": self.EMBED_DIM,
            "hidden_size": self.HIDDEN_SIZE,
            "image_feature_dim": self.IMAGE_FEATURE_DIM,
            "conv_channels": self.CONV_CHANNELS,
        }

    def train_config(self, show_progress: bool = False) -> TrainConfig:
        return TrainConfig(
            epochs=self.EPOCHS,
            batch_size=self.BATCH_SIZE,
            lr=self.LR,
            beta1=self.BETA1,
            beta2=self.BETA2,
            adam_eps=self.ADAM_EPS,
            seed=self.SEED,
            freeze_encoders=self.FREEZE_ENCODERS,
            modality=self.MODALITY,
            patience=self.PATIENCE,
            show_progress=show_progress,
        )

    def echo(self) -> Dict[str, Any]:
        """The fully resolved config as embedded in every artifact."""
        return self.model_dump(mode="json")


def resolve_run_config(config_file: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """
    Flags (non-None `overrides`) over the config file over field defaults.
    The file is KEY=value lines, or a JSON artifact whose `config` echo is replayed.
    """
    flags = {k: v for k, v in (overrides or {}).items() if v is not None}
    if config_file is None:
        return RunConfig(**flags)
    path = Path(config_file)
    if not path.is_file():
        raise FileNotFoundError(f"Config file not found: {config_file}")
    if path.suffix == ".json":
        document = json.loads(path.read_text(encoding="utf-8"))
        echoed = document.get("config", document) if isinstance(document, dict) else {}
        return RunConfig(**{**echoed, **flags})
    return RunConfig(_env_file=config_file, **flags)
