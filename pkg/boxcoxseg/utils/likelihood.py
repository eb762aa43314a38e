import logging
import math

import numpy as np

from boxcoxseg.models.image import IntensityVector
from boxcoxseg.utils.config import LambdaConfig, PrefilterConfig
from boxcoxseg.utils.errors import DegenerateDataError, NumericalError
from boxcoxseg.utils.executor import ordered_map
from boxcoxseg.utils.prefilter import boxcox_values, shifted_values
from boxcoxseg.utils.tables import format_real, write_rows_csv

GOLDEN_RATIO = (math.sqrt(5) - 1) / 2


class LinearGaussianSpec(object):
    """Design of the linear Gaussian model y(lambda) ~ N(A theta, sigma^2 I)

    With no design matrix the model is intercept-only (p = 1), the classical marginal normality fit.
    """

    def __init__(self, design: np.ndarray = None):
        if design is None:
            self.design = None
            self.p = 1
            return
        design = np.asarray(design, dtype=np.float64)
        if design.ndim != 2 or design.shape[1] < 1:
            raise ValueError("the design matrix must be two dimensional with at least one column")
        if not np.all(np.isfinite(design)):
            raise ValueError("the design matrix must be finite")
        if np.linalg.matrix_rank(design) < design.shape[1]:
            raise DegenerateDataError("the design matrix is rank deficient")
        self.design = design
        self.p = design.shape[1]

    @property
    def intercept_only(self) -> bool:
        return self.design is None

    def rows(self, index: np.ndarray):
        """Retrieves the design restricted to the given observation rows"""
        if self.design is None:
            return self
        return LinearGaussianSpec(self.design[index])

    def to_dict(self) -> dict:
        return {"design": "intercept" if self.design is None else "explicit", "p": self.p}


class LambdaEstimate(object):
    """Result of maximizing the profile log-likelihood over lambda"""

    def __init__(self, lambda_hat: float, theta_hat: np.ndarray, sigma2_hat: float, loglik_at_max: float,
                 grid_evaluations: list, shift: float, n_used: int, subsampled: bool):
        self.lambda_hat = float(lambda_hat)
        self.theta_hat = np.asarray(theta_hat, dtype=np.float64)
        self.sigma2_hat = float(sigma2_hat)
        self.loglik_at_max = float(loglik_at_max)
        self.grid_evaluations = list(grid_evaluations)
        self.shift = float(shift)
        self.n_used = int(n_used)
        self.subsampled = bool(subsampled)

    def to_dict(self) -> dict:
        return {
            "lambda_hat": self.lambda_hat,
            "theta_hat": self.theta_hat.tolist(),
            "sigma2_hat": self.sigma2_hat,
            "loglik_at_max": self.loglik_at_max,
            "shift": self.shift,
            "n_used": self.n_used,
            "subsampled": self.subsampled
        }


class BracketBoundaryError(NumericalError):
    """The likelihood is still increasing at an end of the lambda bracket"""

    def __init__(self, message: str, estimate: LambdaEstimate):
        super().__init__(message)
        self.estimate = estimate


def _is_degenerate(sigma2: float, values: np.ndarray) -> bool:
    scale = max(1.0, float(np.mean(values * values)))
    return not sigma2 > (np.finfo(np.float64).eps ** 2) * scale


def mle_theta_sigma(v_transformed: IntensityVector, spec: LinearGaussianSpec = None) -> tuple:
    """Maximum likelihood estimates of theta and sigma^2 for already transformed data

    theta = (A'A)^-1 A' y and sigma^2 = ||y - A theta||^2 / n; intercept-only designs reduce to the sample mean
    and the biased sample variance.

    :param v_transformed: the transformed intensities y(lambda)
    :param spec: the linear model design, intercept-only when omitted
    :return: theta_hat as an array of length p and sigma2_hat
    """
    values = v_transformed.values if isinstance(v_transformed, IntensityVector) else np.asarray(v_transformed)
    return _theta_sigma(values, spec or LinearGaussianSpec())


def _theta_sigma(values: np.ndarray, spec: LinearGaussianSpec) -> tuple:
    n = values.size
    if n < spec.p + 1:
        raise DegenerateDataError("need at least {0} observations for {1} parameters, got {2}".format(
            spec.p + 1, spec.p, n))
    if spec.intercept_only:
        theta = np.array([values.mean()])
        residuals = values - theta[0]
    else:
        if spec.design.shape[0] != n:
            raise ValueError("design has {0} rows for {1} observations".format(spec.design.shape[0], n))
        theta = np.linalg.lstsq(spec.design, values, rcond=None)[0]
        residuals = values - spec.design @ theta
    sigma2 = float(np.dot(residuals, residuals) / n)
    if _is_degenerate(sigma2, values):
        raise DegenerateDataError("the transformed data has zero residual variance")
    return theta, sigma2


class _ProfileLikelihood(object):
    """Profile log-likelihood of lambda over a fixed sample, caching the Jacobian term"""

    def __init__(self, shifted: np.ndarray, spec: LinearGaussianSpec):
        self.shifted = shifted
        self.spec = spec
        self.n = shifted.size
        self.sum_log = float(np.sum(np.log(shifted)))

    def __call__(self, lam: float) -> float:
        transformed = boxcox_values(self.shifted, lam)
        _, sigma2 = _theta_sigma(transformed, self.spec)
        return -0.5 * self.n * math.log(sigma2) + (lam - 1.0) * self.sum_log

    def safe(self, lam: float) -> float:
        """Evaluates the likelihood, scoring points outside the numerical domain as -inf"""
        try:
            return self(lam)
        except (NumericalError, DegenerateDataError) as e:
            logging.warning("utils.likelihood profile log-likelihood undefined at lambda = {0}: {1}".format(lam, e))
            return float("-inf")


def profile_loglik(v: IntensityVector, lam: float, spec: LinearGaussianSpec = None,
                   shift: float = PrefilterConfig.SHIFT) -> float:
    """Profile log-likelihood -(n/2) log sigma2_hat(lambda) + (lambda - 1) sum log(y + c)

    :param v: the raw intensities
    :param lam: the power parameter
    :param spec: the linear model design, intercept-only when omitted
    :param shift: the constant c added before transforming
    :return: the profile log-likelihood value
    """
    return _ProfileLikelihood(shifted_values(v, shift), spec or LinearGaussianSpec())(lam)


def golden_section_max(function, lo: float, hi: float, tol: float = LambdaConfig.GOLDEN_TOLERANCE,
                       max_iterations: int = LambdaConfig.GOLDEN_MAX_ITERATIONS) -> tuple:
    """Golden section search for the maximum of a unimodal function on [lo, hi]

    :param function: the function to maximize
    :param lo: the lower end of the search interval
    :param hi: the upper end of the search interval
    :param tol: the interval width at which the search stops
    :param max_iterations: a cap on the number of interval reductions
    :return: the best point evaluated and its function value
    """
    x1 = hi - GOLDEN_RATIO * (hi - lo)
    x2 = lo + GOLDEN_RATIO * (hi - lo)
    f1, f2 = function(x1), function(x2)
    best = max([(f1, -x1, x1), (f2, -x2, x2)])
    iteration = 0
    while hi - lo > tol and iteration < max_iterations:
        if f1 >= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - GOLDEN_RATIO * (hi - lo)
            f1 = function(x1)
            best = max(best, (f1, -x1, x1))
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + GOLDEN_RATIO * (hi - lo)
            f2 = function(x2)
            best = max(best, (f2, -x2, x2))
        iteration += 1
    middle = 0.5 * (lo + hi)
    f_middle = function(middle)
    best = max(best, (f_middle, -middle, middle))
    return best[2], best[0]


def _subsample(shifted: np.ndarray, spec: LinearGaussianSpec, cap: int, seed: int) -> tuple:
    rng = np.random.default_rng(seed)
    index = np.sort(rng.choice(shifted.size, size=cap, replace=False))
    logging.info("utils.likelihood.fit_lambda estimating on a subsample of {0} of {1} pixels".format(
        cap, shifted.size))
    return shifted[index], spec.rows(index)


def fit_lambda(v: IntensityVector, bracket: tuple = (LambdaConfig.BRACKET_LO, LambdaConfig.BRACKET_HI),
               spec: LinearGaussianSpec = None, shift: float = PrefilterConfig.SHIFT,
               grid_points: int = LambdaConfig.GRID_POINTS, tol: float = LambdaConfig.GOLDEN_TOLERANCE,
               full_data: bool = False, seed: int = LambdaConfig.SUBSAMPLE_SEED,
               subsample_cap: int = LambdaConfig.SUBSAMPLE_CAP, workers: int = 1, executor=None) -> LambdaEstimate:
    """Maximum likelihood estimate of lambda: coarse grid over the bracket, then golden section refinement

    :param v: the raw intensities
    :param bracket: the (lo, hi) interval searched
    :param spec: the linear model design, intercept-only when omitted
    :param shift: the constant c added before transforming
    :param grid_points: the number of equispaced coarse grid points
    :param tol: the refinement stops once the search interval is narrower than this
    :param full_data: use every pixel even above the subsample cap
    :param seed: the seed of the uniform subsample
    :param subsample_cap: the largest sample the likelihood is evaluated on unless full_data is set
    :param workers: threads used for the grid evaluations
    :param executor: an optional executor to evaluate the grid with
    :return: the LambdaEstimate with the full grid trace
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if not lo < hi:
        raise ValueError("lambda bracket needs lo < hi, got [{0}, {1}]".format(lo, hi))
    if grid_points < 3:
        raise ValueError("the coarse grid needs at least 3 points, got {0}".format(grid_points))
    spec = spec or LinearGaussianSpec()
    shifted = shifted_values(v, shift)
    if shifted.max() == shifted.min():
        raise DegenerateDataError("cannot estimate lambda on a constant image")
    subsampled = not full_data and shifted.size > subsample_cap
    if subsampled:
        shifted, spec = _subsample(shifted, spec, subsample_cap, seed)
    likelihood = _ProfileLikelihood(shifted, spec)

    grid = np.linspace(lo, hi, grid_points)
    values = ordered_map(likelihood.safe, [float(lam) for lam in grid], workers=workers, executor=executor)
    grid_evaluations = [(float(lam), float(value)) for lam, value in zip(grid, values)]
    # first maximum in grid order is the lowest lambda
    best_index = int(np.argmax(values))
    if not math.isfinite(values[best_index]):
        raise NumericalError("the profile log-likelihood is undefined over the whole bracket")
    lam_hat, loglik = grid_evaluations[best_index]

    left = grid[max(best_index - 1, 0)]
    right = grid[min(best_index + 1, grid_points - 1)]
    refined, refined_loglik = golden_section_max(likelihood.safe, float(left), float(right), tol)
    if refined_loglik > loglik:
        lam_hat, loglik = refined, refined_loglik

    theta, sigma2 = _theta_sigma(boxcox_values(shifted, lam_hat), spec)
    estimate = LambdaEstimate(lam_hat, theta, sigma2, loglik, grid_evaluations, shift, shifted.size, subsampled)
    logging.info("utils.likelihood.fit_lambda estimated lambda = {0:.6f} (log-likelihood {1:.6f})".format(
        lam_hat, loglik))
    if best_index in (0, grid_points - 1) and min(abs(lam_hat - lo), abs(lam_hat - hi)) <= tol:
        raise BracketBoundaryError(
            "the likelihood maximum lies on the bracket boundary at lambda = {0}; widen [{1}, {2}]".format(
                lam_hat, lo, hi), estimate)
    return estimate


def export_trace(estimate: LambdaEstimate, path: str) -> None:
    """Writes the coarse grid trace of an estimate as a lambda,loglik CSV

    :param estimate: the lambda estimate
    :param path: the CSV destination
    """
    rows = [{"lambda": format_real(lam), "loglik": format_real(value)} for lam, value in estimate.grid_evaluations]
    write_rows_csv(path, ["lambda", "loglik"], rows)
