"""
Genre classifiers: text-only, image-only, and the late-fusion model that concatenates
text and image features before a single softmax layer.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from errors import ContractError
from models.image_encoder import ImageEncoder
from models.layers import Dense, Module
from models.text_encoder import TextEncoder
from schemas.configs import Modality, ModelConfig
from services.autodiff import Tensor, concat_rows, softmax, stop_gradient

logger = logging.getLogger(__name__)


@dataclass
class Batch:
    """Index-aligned model inputs; a modality a model does not use may be None."""
    ids: Optional[np.ndarray] = None
    lengths: Optional[np.ndarray] = None
    images: Optional[np.ndarray] = None

    def __len__(self) -> int:
        if self.ids is not None:
            return int(self.ids.shape[0])
        return int(self.images.shape[0]) if self.images is not None else 0


class FusionClassifier(Module):
    """softmax(W · concat(h_text, h_image) + b)."""

    modality: Modality = "fused"

    def __init__(self, text_encoder: TextEncoder, image_encoder: ImageEncoder, num_classes: int, rng, freeze_encoders: bool = False):
        super().__init__()
        self.text_encoder = self.add_child("text", text_encoder)
        self.image_encoder = self.add_child("image", image_encoder)
        self.fusion_width = text_encoder.output_dim + image_encoder.output_dim
        self.head = self.add_child("head", Dense(self.fusion_width, num_classes, rng))
        self.num_classes = num_classes
        self.freeze_encoders = freeze_encoders

    def features(self, batch: Batch) -> Tensor:
        if batch.ids is None or batch.images is None:
            raise ContractError("the fused model needs both description text and cover images")
        if batch.ids.shape[0] != batch.images.shape[0]:
            raise ContractError(f"text batch has {batch.ids.shape[0]} rows but image batch has {batch.images.shape[0]}")
        text = self.text_encoder(batch.ids, batch.lengths)
        image = self.image_encoder(batch.images)
        if self.freeze_encoders:
            text, image = stop_gradient(text), stop_gradient(image)
        return concat_rows(text, image)

    def logits(self, batch: Batch) -> Tensor:
        return self.head(self.features(batch))

    def __call__(self, batch: Batch) -> Tensor:
        return softmax(self.logits(batch))

    def trainable_parameters(self) -> List[Tensor]:
        return self.head.parameters() if self.freeze_encoders else self.parameters()


class SingleModalityClassifier(Module):
    """One encoder followed by a dense softmax head; the single-modality baselines."""

    def __init__(self, encoder: Module, modality: Modality, num_classes: int, rng, freeze_encoders: bool = False):
        super().__init__()
        if modality not in ("text", "image"):
            raise ContractError(f"single-modality classifier cannot use modality '{modality}'")
        self.modality = modality
        self.encoder = self.add_child(modality, encoder)
        self.head = self.add_child("head", Dense(encoder.output_dim, num_classes, rng))
        self.num_classes = num_classes
        self.freeze_encoders = freeze_encoders

    def features(self, batch: Batch) -> Tensor:
        if self.modality == "text":
            if batch.ids is None:
                raise ContractError("the text model needs description text")
            out = self.encoder(batch.ids, batch.lengths)
        else:
            if batch.images is None:
                raise ContractError("the image model needs cover images")
            out = self.encoder(batch.images)
        return stop_gradient(out) if self.freeze_encoders else out

    def logits(self, batch: Batch) -> Tensor:
        return self.head(self.features(batch))

    def __call__(self, batch: Batch) -> Tensor:
        return softmax(self.logits(batch))

    def trainable_parameters(self) -> List[Tensor]:
        return self.head.parameters() if self.freeze_encoders else self.parameters()


def fused_forward(model: FusionClassifier, text_batch, image_batch) -> Tensor:
    """Probabilities [B×K] for index-aligned (ids, lengths) and image batches."""
    ids, lengths = text_batch
    images = np.asarray(image_batch, dtype=np.float64)
    if ids.shape[0] != images.shape[0]:
        raise ContractError(f"text batch has {ids.shape[0]} rows but image batch has {images.shape[0]}")
    return model(Batch(ids=ids, lengths=lengths, images=images))


def predict_topk(probs, k: int) -> List[List[int]]:
    """Per row, the k most probable class indices in descending order; ties go to the lower index."""
    values = probs.values if isinstance(probs, Tensor) else np.asarray(probs, dtype=np.float64)
    classes = values.shape[1]
    if not 1 <= k <= classes:
        raise ContractError(f"k must lie in [1, {classes}], got {k}")
    order = np.argsort(-values, axis=1, kind="stable")[:, :k]
    return order.tolist()


def build_text_encoder(config: ModelConfig, rng) -> TextEncoder:
    return TextEncoder(config.vocab_size, config.embed_dim, config.hidden_size, config.forget_bias, rng)


def build_image_encoder(config: ModelConfig, rng) -> ImageEncoder:
    return ImageEncoder(
        config.image_size, config.image_channels, config.conv_channels, config.kernel_size, config.image_feature_dim, rng
    )


def build_classifier(modality: Modality, config: ModelConfig, freeze_encoders: bool = False) -> Module:
    """Seeded construction; the same config and seed always give the same initial weights."""
    rng = np.random.default_rng(config.init_seed)
    if modality == "fused":
        text = build_text_encoder(config, rng)
        image = build_image_encoder(config, rng)
        model = FusionClassifier(text, image, config.num_classes, rng, freeze_encoders)
    elif modality == "text":
        model = SingleModalityClassifier(build_text_encoder(config, rng), "text", config.num_classes, rng, freeze_encoders)
    elif modality == "image":
        model = SingleModalityClassifier(build_image_encoder(config, rng), "image", config.num_classes, rng, freeze_encoders)
    else:
        raise ContractError(f"unknown modality '{modality}'")
    logger.info(
        "Built %s classifier with %d parameter tensor(s), %d value(s).",
        modality,
        len(model.parameters()),
        sum(p.size for p in model.parameters()),
    )
    return model
