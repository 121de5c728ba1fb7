import numpy as np
import pytest

from qtab.dataset import SyntheticCorpusSpec, synthetic_dataset


@pytest.fixture(scope="session")
def small_dataset():
    """Fast corpus for plumbing tests."""
    return synthetic_dataset(SyntheticCorpusSpec(n_classes=6, images_per_class=4, seed=7))


@pytest.fixture(scope="session")
def acceptance_dataset():
    """The corpus the acceptance criteria pin: 20x10, 64x64, seed 7."""
    return synthetic_dataset(SyntheticCorpusSpec(n_classes=20, images_per_class=10, seed=7))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_test_image(rng, h, w, smooth=False):
    """Mixed-content RGB test image."""
    if smooth:
        yy = np.arange(h)[:, None, None]
        xx = np.arange(w)[None, :, None]
        img = (
            128
            + 70 * np.sin(xx / 6.5 + rng.uniform(0, 6))
            + 50 * np.cos(yy / 4.0 + rng.uniform(0, 6))
            + rng.normal(0, 12, (h, w, 3))
        )
        return np.clip(img, 0, 255).astype(np.uint8)
    return rng.integers(0, 256, (h, w, 3), dtype=np.int64).astype(np.uint8)
