import numpy as np
import pytest

from boxcoxseg.models.image import GrayImage, LabelMask, Palette
from boxcoxseg.utils import synthetic


def make_blobs(n_per_class: int, centers: list, spread: float, seed: int) -> tuple:
    """Draws Gaussian clusters around the given centers, labelled 0..K-1 in center order"""
    rng = np.random.default_rng(seed)
    features, labels = [], []
    for label, center in enumerate(centers):
        center = np.atleast_1d(np.asarray(center, dtype=np.float64))
        features.append(rng.normal(center, spread, (n_per_class, center.size)))
        labels.append(np.full(n_per_class, label))
    return np.vstack(features), np.concatenate(labels)


def pytest_configure():
    """Configures universal pytest parameters for running unit tests"""
    pytest.two_class_image, pytest.two_class_mask = synthetic.two_class_image((48, 48), seed=0)
    pytest.lognormal_image = synthetic.lognormal_image((32, 32), seed=0)
    pytest.small_gray = GrayImage(np.array([[1.0, 2.0], [3.0, 4.0]]))
    pytest.small_mask = LabelMask(np.array([[0, 1], [1, 0]]), 2, ["background", "foreground"])
    pytest.binary_palette = Palette.from_string("0=background;255=foreground")
    pytest.make_blobs = make_blobs
