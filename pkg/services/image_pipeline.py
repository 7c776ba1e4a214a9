"""
Cover image decoding, bilinear resizing and [0, 1] scaling.

Pixel grids are float64 arrays shaped [3×H×W] holding 8-bit channel values.
"""
import logging
from pathlib import Path
from typing import Sequence, Union

import numpy as np
from PIL import Image, UnidentifiedImageError
from skimage.transform import resize as sk_resize

from errors import ContractError, DimensionError, ImageFormatError

logger = logging.getLogger(__name__)


def load_image(path: Union[str, Path]) -> np.ndarray:
    """Decodes PNG, JPEG or binary PPM. Grayscale is promoted to RGB and alpha is dropped."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"Image file not found: {path}")
    try:
        with Image.open(path) as img:
            rgb = img.convert("RGB")
            pixels = np.asarray(rgb, dtype=np.float64)
    except (UnidentifiedImageError, OSError, SyntaxError) as e:
        raise ImageFormatError(f"Could not decode image {path}: {e}") from e
    logger.debug("Decoded %s (%dx%d).", path, pixels.shape[1], pixels.shape[0])
    return np.ascontiguousarray(pixels.transpose(2, 0, 1))


def resize(image: np.ndarray, target_h: int, target_w: int) -> np.ndarray:
    """Bilinear resize to exactly target_h×target_w; the aspect ratio is not preserved."""
    if target_h < 1 or target_w < 1:
        raise ContractError(f"target size must be positive, got {target_h}x{target_w}")
    if image.ndim != 3 or image.shape[1] == 0 or image.shape[2] == 0:
        raise ContractError(f"cannot resize an empty image of shape {image.shape}")
    if image.shape[1:] == (target_h, target_w):
        return image.astype(np.float64, copy=True)
    resized = sk_resize(
        image.transpose(1, 2, 0).astype(np.float64),
        (target_h, target_w),
        order=1,
        mode="edge",
        anti_aliasing=False,
        preserve_range=True,
    )
    return np.clip(resized, 0.0, 255.0).transpose(2, 0, 1)


def normalize(image: np.ndarray) -> np.ndarray:
    """Scales 8-bit channel values into [0, 1]."""
    return np.clip(np.asarray(image, dtype=np.float64) / 255.0, 0.0, 1.0)


def prepare_image(path: Union[str, Path], image_size: int) -> np.ndarray:
    """load -> resize -> normalize, yielding an image tensor of shape [3×S×S]."""
    return normalize(resize(load_image(path), image_size, image_size))


def stack_images(images: Sequence[np.ndarray], image_size: int) -> np.ndarray:
    expected = (3, image_size, image_size)
    for i, img in enumerate(images):
        if img.shape != expected:
            raise DimensionError(f"image {i} has shape {img.shape}, expected {expected}")
    return np.stack(images) if images else np.zeros((0, *expected))
