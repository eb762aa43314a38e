import math

import numpy as np
from scipy import special

from boxcoxseg.models.image import GrayImage, IntensityVector
from boxcoxseg.utils.config import PrefilterConfig
from boxcoxseg.utils.errors import DegenerateDataError, NumericalError


class BoxCoxParams(object):
    """Power parameter lambda and the shift c added before transforming"""

    def __init__(self, lam: float, shift: float = PrefilterConfig.SHIFT):
        if not math.isfinite(lam):
            raise ValueError("lambda must be finite, got {0}".format(lam))
        if not math.isfinite(shift) or shift < 0:
            raise ValueError("shift must be a finite value >= 0, got {0}".format(shift))
        self.lam = float(lam)
        self.shift = float(shift)

    @property
    def is_log(self) -> bool:
        return abs(self.lam) < PrefilterConfig.LAMBDA_ZERO_THRESHOLD

    def to_dict(self) -> dict:
        return {"lambda": self.lam, "shift": self.shift}


class StretchRange(object):
    """Target intensity range [g_min, g_max] of a histogram stretch"""

    def __init__(self, g_min: float = PrefilterConfig.STRETCH_MIN, g_max: float = PrefilterConfig.STRETCH_MAX):
        if not (math.isfinite(g_min) and math.isfinite(g_max)) or g_max <= g_min:
            raise ValueError("stretch range needs finite g_max > g_min, got [{0}, {1}]".format(g_min, g_max))
        self.g_min = float(g_min)
        self.g_max = float(g_max)

    @classmethod
    def from_string(cls, text: str):
        """Parses the lo:hi form used on the command line"""
        try:
            lo, hi = text.split(":")
            return cls(float(lo), float(hi))
        except ValueError as e:
            raise ValueError("stretch range {0} is not written as lo:hi with hi > lo".format(text)) from e

    def to_dict(self) -> dict:
        return {"g_min": self.g_min, "g_max": self.g_max}


class GammaParams(object):
    """Gain c and exponent gamma of g = c * f ** gamma"""

    def __init__(self, gain: float = 1.0, gamma: float = 1.0):
        if not (gain > 0 and gamma > 0):
            raise ValueError("gamma correction needs gain > 0 and gamma > 0, got {0} and {1}".format(gain, gamma))
        self.gain = float(gain)
        self.gamma = float(gamma)

    def to_dict(self) -> dict:
        return {"gain": self.gain, "gamma": self.gamma}


def shifted_values(v: IntensityVector, shift: float) -> np.ndarray:
    """Adds the shift to every value and checks the result is in the power transform's domain

    :param v: the intensities
    :param shift: the constant c
    :return: the array y + c
    """
    shifted = v.values + shift
    if shifted.size and shifted.min() <= 0:
        raise NumericalError("Box-Cox needs y + c > 0, found {0} with c = {1}".format(shifted.min(), shift))
    return shifted


def boxcox_values(shifted: np.ndarray, lam: float) -> np.ndarray:
    """Applies the power transform to already shifted, strictly positive values"""
    if abs(lam) < PrefilterConfig.LAMBDA_ZERO_THRESHOLD:
        transformed = np.log(shifted)
    else:
        transformed = special.boxcox(shifted, lam)
    if not np.all(np.isfinite(transformed)):
        raise NumericalError("Box-Cox with lambda = {0} produced non-finite values".format(lam))
    return transformed


def boxcox(v: IntensityVector, p: BoxCoxParams) -> IntensityVector:
    """Shifted Box-Cox transform ((y + c) ** lambda - 1) / lambda, log(y + c) when |lambda| < 1e-8

    :param v: the intensities to transform
    :param p: lambda and the shift
    :return: the transformed intensities over the same image shape
    """
    return v.with_values(boxcox_values(shifted_values(v, p.shift), p.lam))


def inverse_boxcox(v: IntensityVector, p: BoxCoxParams) -> IntensityVector:
    """Undoes boxcox on its admissible domain, lambda * v + 1 > 0 when lambda is not zero

    :param v: transformed values
    :param p: the parameters the values were transformed with
    :return: the original intensities
    """
    values = v.values
    if p.is_log:
        restored = np.exp(values)
    else:
        base = p.lam * values + 1.0
        if base.size and base.min() <= 0:
            raise NumericalError("inverse Box-Cox needs lambda * v + 1 > 0 for lambda = {0}".format(p.lam))
        restored = special.inv_boxcox(values, p.lam)
    if not np.all(np.isfinite(restored)):
        raise NumericalError("inverse Box-Cox with lambda = {0} produced non-finite values".format(p.lam))
    return v.with_values(restored - p.shift)


def gamma_correct(img: GrayImage, p: GammaParams) -> GrayImage:
    """Power law brightness adjustment g = c * f ** gamma

    :param img: the gray image
    :param p: gain and exponent
    :return: the corrected image
    """
    corrected = p.gain * np.power(img.pixels, p.gamma)
    if not np.all(np.isfinite(corrected)):
        raise NumericalError("gamma correction with gamma = {0} overflowed".format(p.gamma))
    return GrayImage(corrected)


def stretch(v: IntensityVector, r: StretchRange) -> IntensityVector:
    """Affine histogram stretch sending the observed minimum to g_min and the observed maximum to g_max

    :param v: the intensities
    :param r: the target range
    :return: the stretched intensities
    """
    values = v.values
    f_min, f_max = float(values.min()), float(values.max())
    if not f_max > f_min:
        raise DegenerateDataError("cannot stretch a constant image (all values are {0})".format(f_min))
    stretched = (values - f_min) / (f_max - f_min) * (r.g_max - r.g_min) + r.g_min
    # pin the endpoints and keep rounding inside the range
    stretched = np.clip(stretched, r.g_min, r.g_max)
    stretched[values == f_max] = r.g_max
    stretched[values == f_min] = r.g_min
    return v.with_values(stretched)
