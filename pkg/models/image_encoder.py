"""
Desk-scale convolutional image encoder: conv(3×3)+ReLU+2×2 max-pool blocks, flatten,
then a dense ReLU layer whose width is the image feature dimension.
"""
import logging
from typing import List, Sequence, Union

import numpy as np

from errors import ContractError, DimensionError
from models.layers import Dense, Module, glorot_uniform
from services.autodiff import Tensor, conv2d, max_pool2d, relu, reshape

logger = logging.getLogger(__name__)


class ImageEncoder(Module):
    def __init__(
        self,
        image_size: int = 64,
        channels: int = 3,
        conv_channels: Sequence[int] = (16, 32),
        kernel_size: int = 3,
        feature_dim: int = 1024,
        rng=None,
    ):
        super().__init__()
        rng = rng if rng is not None else np.random.default_rng(0)
        if kernel_size % 2 == 0:
            raise ContractError(f"kernel_size must be odd to preserve spatial size, got {kernel_size}")
        self.image_size = image_size
        self.channels = channels
        self.kernel_size = kernel_size
        self.feature_dim = feature_dim
        self.kernels: List[Tensor] = []
        self.biases: List[Tensor] = []

        in_ch, spatial = channels, image_size
        for block, out_ch in enumerate(conv_channels):
            fan_in, fan_out = in_ch * kernel_size**2, out_ch * kernel_size**2
            kernel = glorot_uniform(rng, (out_ch, in_ch, kernel_size, kernel_size), fan_in, fan_out, f"conv{block}.kernel")
            self.kernels.append(self.register(f"conv{block}.kernel", kernel))
            self.biases.append(self.register(f"conv{block}.bias", Tensor(np.zeros(out_ch), requires_grad=True, name=f"conv{block}.bias")))
            in_ch, spatial = out_ch, spatial // 2
        if spatial < 1:
            raise ContractError(
                f"{len(conv_channels)} pooling block(s) shrink a {image_size}px image to nothing; use fewer blocks"
            )
        self.flat_dim = in_ch * spatial * spatial
        self.dense = self.add_child("dense", Dense(self.flat_dim, feature_dim, rng))
        logger.debug("Image encoder: %s -> flatten %d -> %d features", list(conv_channels), self.flat_dim, feature_dim)

    @property
    def output_dim(self) -> int:
        return self.feature_dim

    def __call__(self, images: np.ndarray) -> Tensor:
        images = np.asarray(images, dtype=np.float64)
        expected = (self.channels, self.image_size, self.image_size)
        if images.ndim != 4 or images.shape[1:] != expected:
            raise DimensionError(f"image batch has shape {images.shape}, expected [B×{'×'.join(map(str, expected))}]")
        x = Tensor(images)
        for kernel, bias in zip(self.kernels, self.biases):
            x = max_pool2d(relu(conv2d(x, kernel, stride=1, padding=self.kernel_size // 2, bias=bias)), 2)
        x = reshape(x, (images.shape[0], self.flat_dim))
        return relu(self.dense(x))


def cnn_forward(encoder: ImageEncoder, batch: Union[np.ndarray, Sequence[np.ndarray]]) -> Tensor:
    """Nonnegative feature matrix [B×feature_dim] for a batch of [3×S×S] image tensors."""
    if not isinstance(batch, np.ndarray):
        for i, img in enumerate(batch):
            if np.shape(img) != (encoder.channels, encoder.image_size, encoder.image_size):
                raise DimensionError(f"image {i} has shape {np.shape(img)}, encoder expects {encoder.image_size}px")
        batch = np.stack(batch) if len(batch) else np.zeros((0, encoder.channels, encoder.image_size, encoder.image_size))
    return encoder(batch)
