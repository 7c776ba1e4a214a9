import numpy as np
import pytest

from schemas.configs import ModelConfig


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture
def tiny_config():
    """Reduced dimensions small enough for finite-difference checks."""
    return ModelConfig(
        vocab_size=20,
        num_classes=15,
        embed_dim=8,
        hidden_size=8,
        image_size=8,
        conv_channels=[2],
        image_feature_dim=16,
        init_seed=0,
    )


@pytest.fixture
def desk_config():
    """Small but trainable dimensions for end-to-end runs on synthetic data."""
    return dict(embed_dim=16, hidden_size=32, image_size=32, conv_channels=[4], image_feature_dim=32)
