import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from boxcoxseg.models.image import GrayImage, LabelMask
from boxcoxseg.utils.errors import DegenerateDataError

SUPPORTED_MODES = {"intensity", "window"}


class FeaturizerSpec(object):
    """How a pixel becomes a feature vector: its intensity, optionally with local mean and standard deviation"""

    def __init__(self, mode: str = "intensity", window: int = 3):
        if mode not in SUPPORTED_MODES:
            raise ValueError("featurizer mode {0} is not one of {1}".format(mode, sorted(SUPPORTED_MODES)))
        if mode == "window" and (window < 3 or window % 2 == 0):
            raise ValueError("the window must be an odd integer >= 3, got {0}".format(window))
        self.mode = mode
        self.window = int(window) if mode == "window" else None
        self.border = "replicate"

    @property
    def dimension(self) -> int:
        return 1 if self.mode == "intensity" else 3

    def to_dict(self) -> dict:
        return {"mode": self.mode, "window": self.window, "border": self.border}

    @classmethod
    def from_dict(cls, payload: dict):
        return cls(payload["mode"], payload.get("window") or 3)

    def __eq__(self, other):
        return isinstance(other, FeaturizerSpec) and self.to_dict() == other.to_dict()

    def __repr__(self):
        return "FeaturizerSpec({0})".format(self.to_dict())


def featurize(img: GrayImage, spec: FeaturizerSpec) -> np.ndarray:
    """Builds the n x d feature matrix of an image, one row per pixel in row-major order

    :param img: the gray image
    :param spec: the featurizer configuration
    :return: the feature matrix
    """
    pixels = img.pixels
    intensity = pixels.reshape(-1, 1)
    if spec.mode == "intensity":
        return intensity.copy()
    half = spec.window // 2
    padded = np.pad(pixels, half, mode="edge")
    windows = sliding_window_view(padded, (spec.window, spec.window))
    local_mean = windows.mean(axis=(-2, -1))
    local_std = windows.std(axis=(-2, -1))
    return np.column_stack([intensity[:, 0], local_mean.ravel(), local_std.ravel()])


def stratified_split(mask: LabelMask, seed: int, train_fraction: float = 0.5) -> tuple:
    """Stratified random split of the pixel indices of a mask into train and test sets

    Each class contributes floor(train_fraction * N_k) pixels, at least one, to training.

    :param mask: the ground truth labels
    :param seed: the seed of the permutation
    :param train_fraction: the share of every class used for training
    :return: sorted train indices and sorted test indices into the row-major pixel order
    """
    rng = np.random.default_rng(seed)
    labels = mask.labels.ravel()
    train, test = [], []
    for label in range(mask.num_classes):
        members = np.flatnonzero(labels == label)
        if members.size == 0:
            continue
        members = members[rng.permutation(members.size)]
        cut = max(1, int(np.floor(train_fraction * members.size)))
        train.append(members[:cut])
        test.append(members[cut:])
    if not train:
        raise DegenerateDataError("the mask holds no labelled pixels")
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))
