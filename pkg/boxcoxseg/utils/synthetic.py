import logging

import numpy as np

from boxcoxseg.models.image import GrayImage, IntensityVector, LabelMask
from boxcoxseg.utils.prefilter import BoxCoxParams, inverse_boxcox

SUPPORTED_KINDS = {"lognormal", "boxcox", "normal", "two-class"}

DEFAULT_SIZE = (256, 256)
# generator parameters each kind falls back to
DEFAULT_PARAMETERS = {
    "lognormal": {"mu": 4.5, "sigma": 0.25},
    "boxcox": {"lambda_star": 0.5, "mu": 10.0, "sigma": 1.0},
    "normal": {"mu": 128.0, "sigma": 5.0},
    "two-class": {}
}

# background and dark minority of the two-class image, as (mean, sd) of log intensity
TWO_CLASS_BACKGROUND = (4.6, 0.3)
TWO_CLASS_MINORITY = (3.1, 0.3)


def _check_shape(shape: tuple) -> tuple:
    shape = tuple(int(size) for size in shape)
    if len(shape) != 2 or min(shape) < 1:
        raise ValueError("a synthetic image needs a (height, width) shape of positive sizes, got {0}".format(shape))
    return shape


def boxcox_normal_values(n: int, lam: float, mu: float, sigma: float, seed: int = 0) -> np.ndarray:
    """Draws y whose Box-Cox transform with lambda and no shift is N(mu, sigma^2)

    Draws outside the admissible domain lambda * z + 1 > 0 are redrawn.

    :param n: the sample size
    :param lam: the true lambda
    :param mu: the mean of the transformed data
    :param sigma: the standard deviation of the transformed data
    :param seed: the random seed
    :return: n strictly positive values
    """
    rng = np.random.default_rng(seed)
    z = rng.normal(mu, sigma, n)
    if abs(lam) >= 1e-8:
        inadmissible = lam * z + 1.0 <= 0
        if inadmissible.any():
            logging.warning("utils.synthetic redrawing {0} inadmissible values".format(int(inadmissible.sum())))
        while inadmissible.any():
            z[inadmissible] = rng.normal(mu, sigma, int(inadmissible.sum()))
            inadmissible = lam * z + 1.0 <= 0
    params = BoxCoxParams(lam, 0.0)
    return inverse_boxcox(IntensityVector(z, (1, n)), params).values.copy()


def lognormal_image(shape: tuple, mu: float = 4.5, sigma: float = 0.25, seed: int = 0) -> GrayImage:
    """Image of independent exp(N(mu, sigma^2)) pixels, the lambda = 0 oracle"""
    shape = _check_shape(shape)
    return GrayImage(np.exp(np.random.default_rng(seed).normal(mu, sigma, shape)))


def boxcox_normal_image(shape: tuple, lam: float, mu: float, sigma: float, seed: int = 0) -> GrayImage:
    """Image whose pixels become N(mu, sigma^2) under the Box-Cox transform with lambda"""
    shape = _check_shape(shape)
    return GrayImage(boxcox_normal_values(shape[0] * shape[1], lam, mu, sigma, seed).reshape(shape))


def normal_image(shape: tuple, mean: float = 128.0, sd: float = 5.0, seed: int = 0) -> GrayImage:
    """Image already close to normal, N(mean, sd^2) clipped at 0"""
    shape = _check_shape(shape)
    return GrayImage(np.clip(np.random.default_rng(seed).normal(mean, sd, shape), 0.0, None))


def two_class_image(shape: tuple, minority_fraction: float = 0.08, seed: int = 0,
                    background: tuple = TWO_CLASS_BACKGROUND, minority: tuple = TWO_CLASS_MINORITY) -> tuple:
    """Dark minority pixels scattered over a bright right-skewed background, both log-normal

    The raw intensity ranges of the classes overlap; class 1 is the minority.

    :param shape: (height, width)
    :param minority_fraction: the share of minority pixels
    :param seed: the random seed
    :param background: (mean, sd) of the background log intensity
    :param minority: (mean, sd) of the minority log intensity
    :return: the GrayImage and its LabelMask with classes background and minority
    """
    shape = _check_shape(shape)
    if not 0 < minority_fraction < 1:
        raise ValueError("the minority fraction must lie in (0, 1), got {0}".format(minority_fraction))
    rng = np.random.default_rng(seed)
    n = shape[0] * shape[1]
    labels = np.zeros(n, dtype=np.int64)
    labels[rng.permutation(n)[:max(1, int(round(minority_fraction * n)))]] = 1
    log_intensity = np.where(labels == 1, rng.normal(minority[0], minority[1], n),
                             rng.normal(background[0], background[1], n))
    image = GrayImage(np.exp(log_intensity).reshape(shape))
    return image, LabelMask(labels.reshape(shape), 2, ["background", "minority"])


def get_generator(kind: str):
    """Retrieves the generator function of a synthetic image kind

    :param kind: one of lognormal, boxcox, normal, two-class
    :return: the generator function
    """
    if kind not in SUPPORTED_KINDS:
        raise ValueError("synthetic kind {0} is not one of the supported kinds: {1}".format(
            kind, sorted(SUPPORTED_KINDS)))
    kind_to_generator = {
        "lognormal": lognormal_image,
        "boxcox": boxcox_normal_image,
        "normal": normal_image,
        "two-class": two_class_image
    }
    return kind_to_generator[kind]
