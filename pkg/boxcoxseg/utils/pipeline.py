import logging

from boxcoxseg.models.image import GrayImage, RgbImage, to_gray, unvectorize, vectorize
from boxcoxseg.utils import likelihood, prefilter
from boxcoxseg.utils.config import LambdaConfig, PrefilterConfig


def as_gray(img) -> GrayImage:
    """Retrieves the gray working representation of an RGB or gray image"""
    if isinstance(img, RgbImage):
        return to_gray(img)
    if isinstance(img, GrayImage):
        return img
    raise ValueError("expected an RgbImage or GrayImage, got {0}".format(type(img).__name__))


def boxcox_stretch(gray: GrayImage, params: prefilter.BoxCoxParams,
                   stretch_range: prefilter.StretchRange) -> GrayImage:
    """Box-Cox transforms a gray image and stretches the result onto the target range

    :param gray: the gray image
    :param params: lambda and shift
    :param stretch_range: the output intensity range
    :return: the prefiltered image
    """
    transformed = prefilter.boxcox(vectorize(gray), params)
    return unvectorize(prefilter.stretch(transformed, stretch_range))


def prefilter_pipeline(img, lam: float = None, stretch_range: prefilter.StretchRange = None,
                       shift: float = PrefilterConfig.SHIFT,
                       bracket: tuple = (LambdaConfig.BRACKET_LO, LambdaConfig.BRACKET_HI),
                       full_data: bool = False, seed: int = LambdaConfig.SUBSAMPLE_SEED,
                       workers: int = 1) -> tuple:
    """Grayscale conversion, shift, Box-Cox with a fixed or estimated lambda, then histogram stretching

    :param img: the RgbImage (or an already gray image)
    :param lam: the power parameter; estimated by maximum likelihood when None
    :param stretch_range: the output range, [0, 255] when omitted
    :param shift: the constant c added before transforming
    :param bracket: the lambda search interval used when estimating
    :param full_data: estimate on every pixel even for very large images
    :param seed: the subsample seed used when estimating
    :param workers: threads used for the likelihood grid
    :return: the prefiltered GrayImage, the BoxCoxParams used and the LambdaEstimate (None when lam was given)
    """
    gray = as_gray(img)
    stretch_range = stretch_range or prefilter.StretchRange()
    estimate = None
    if lam is None:
        estimate = likelihood.fit_lambda(vectorize(gray), bracket, shift=shift, full_data=full_data, seed=seed,
                                         workers=workers)
        lam = estimate.lambda_hat
    params = prefilter.BoxCoxParams(lam, shift)
    logging.info("utils.pipeline.prefilter_pipeline transforming with lambda = {0} and shift = {1}".format(
        params.lam, params.shift))
    return boxcox_stretch(gray, params, stretch_range), params, estimate


def gamma_pipeline(img, gamma_params: prefilter.GammaParams,
                   stretch_range: prefilter.StretchRange = None) -> GrayImage:
    """Grayscale conversion, gamma correction, then histogram stretching

    :param img: the RgbImage (or an already gray image)
    :param gamma_params: gain and exponent of the correction
    :param stretch_range: the output range, [0, 255] when omitted
    :return: the corrected image
    """
    corrected = prefilter.gamma_correct(as_gray(img), gamma_params)
    return unvectorize(prefilter.stretch(vectorize(corrected), stretch_range or prefilter.StretchRange()))
