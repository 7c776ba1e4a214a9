from typing import List, Literal, Optional

from pydantic import BaseModel, Field

Modality = Literal["text", "image", "fused"]


class ModelConfig(BaseModel):
    """Dimensions of the encoders and the classification head."""
    vocab_size: int = Field(ge=2)
    num_classes: int = Field(default=15, ge=1)
    embed_dim: int = Field(default=128, ge=1)
    hidden_size: int = Field(default=256, ge=1)
    image_size: int = Field(default=64, ge=1)
    image_channels: int = Field(default=3, ge=1)
    conv_channels: List[int] = Field(default_factory=lambda: [16, 32])
    kernel_size: int = Field(default=3, ge=1)
    image_feature_dim: int = Field(default=1024, ge=1)
    forget_bias: float = 1.0
    init_seed: int = 0

    class Config:
        extra = "forbid"


class TrainConfig(BaseModel):
    """Hyperparameters of one training run."""
    epochs: int = Field(default=20, ge=1)
    batch_size: int = Field(default=32, ge=1)
    lr: float = Field(default=0.001, ge=0.0)
    beta1: float = Field(default=0.9, ge=0.0, lt=1.0)
    beta2: float = Field(default=0.999, ge=0.0, lt=1.0)
    adam_eps: float = Field(default=1e-8, gt=0.0)
    seed: int = 0
    freeze_encoders: bool = False
    modality: Modality = "fused"
    patience: Optional[int] = Field(default=5, ge=1)
    show_progress: bool = False

    class Config:
        extra = "forbid"
