import math

import numpy as np
import pytest

from boxcoxseg.models.image import IntensityVector
from boxcoxseg.utils import likelihood, synthetic
from boxcoxseg.utils.errors import DegenerateDataError
from boxcoxseg.utils.prefilter import BoxCoxParams, boxcox

# true lambda, mean and standard deviation of the normal data, sample size
recovery_cases = [(0.0, 3.0, 0.3, 10 ** 4), (0.5, 18.0, 4.0, 10 ** 4), (1.0, 99.0, 25.0, 10 ** 4),
                  (2.0, 50.0, 12.625, 10 ** 5)]


def vector(values) -> IntensityVector:
    values = np.asarray(values, dtype=np.float64)
    return IntensityVector(values, (1, values.size))


def test_mle_theta_sigma():
    """Tests likelihood.mle_theta_sigma function"""
    theta, sigma2 = likelihood.mle_theta_sigma(vector([1.0, 3.0]))
    assert theta.tolist() == [2.0] and sigma2 == 1.0
    with pytest.raises(DegenerateDataError):
        likelihood.mle_theta_sigma(vector([2.0, 2.0, 2.0, 2.0]))
    values = np.random.default_rng(0).normal(4.0, 2.0, 500)
    theta, sigma2 = likelihood.mle_theta_sigma(vector(values))
    mean = sum(values) / values.size
    assert theta[0] == pytest.approx(mean, abs=1e-12)
    assert sigma2 == pytest.approx(sum((value - mean) ** 2 for value in values) / values.size, abs=1e-12)


def test_mle_theta_sigma_with_design():
    """Tests an explicit design matrix gives the least squares fit"""
    rng = np.random.default_rng(1)
    x = rng.uniform(0, 10, 200)
    design = np.column_stack([np.ones(200), x])
    values = 1.0 + 2.0 * x + rng.normal(0, 0.5, 200)
    theta, sigma2 = likelihood.mle_theta_sigma(vector(values), likelihood.LinearGaussianSpec(design))
    expected = np.linalg.lstsq(design, values, rcond=None)[0]
    assert np.allclose(theta, expected, atol=1e-10)
    assert sigma2 == pytest.approx(np.mean((values - design @ expected) ** 2))
    with pytest.raises(DegenerateDataError):
        likelihood.LinearGaussianSpec(np.column_stack([x, 2 * x]))
    with pytest.raises(DegenerateDataError):
        likelihood.mle_theta_sigma(vector([1.0, 2.0]), likelihood.LinearGaussianSpec(design[:2]))


def test_profile_loglik_prefers_log_for_lognormal_data():
    """Tests the log branch scores higher than the identity on log-normal data"""
    v = vector(np.exp(np.random.default_rng(2).normal(5.0, 0.1, 2000)))
    assert likelihood.profile_loglik(v, 0.0, shift=0.0) > likelihood.profile_loglik(v, 1.0, shift=0.0)


def test_profile_loglik_formula():
    """Tests the profile log-likelihood against its closed form"""
    y = np.array([1.0, 4.0, 9.0, 2.0, 7.0])
    lam, shift = 0.5, 1.0
    z = ((y + shift) ** lam - 1) / lam
    expected = -0.5 * y.size * math.log(np.var(z)) + (lam - 1) * np.sum(np.log(y + shift))
    assert likelihood.profile_loglik(vector(y), lam, shift=shift) == pytest.approx(expected, rel=1e-12)


def test_lambda_recovery():
    """Tests fit_lambda recovers the true lambda of synthetic Box-Cox normal data over 20 replicates"""
    for lam, mu, sigma, n in recovery_cases:
        errors = []
        for replicate in range(20):
            seed = 1000 * int(lam * 10) + replicate
            values = synthetic.boxcox_normal_values(n, lam, mu, sigma, seed)
            estimate = likelihood.fit_lambda(vector(values), shift=0.0)
            errors.append(abs(estimate.lambda_hat - lam))
        assert np.median(errors) < 0.05, (lam, errors)
        assert max(errors) < 0.15, (lam, errors)


def brute_force_lambda(y: np.ndarray) -> float:
    """Maximizes the full log-likelihood over a lambda grid of step 0.01 and a (theta, sigma2) grid"""
    n = y.size
    sum_log = np.sum(np.log(y))
    best_lambda, best_value = None, -np.inf
    for lam in np.round(np.arange(-1.0, 3.0 + 1e-9, 0.01), 2):
        z = boxcox(vector(y), BoxCoxParams(float(lam), 0.0)).values
        theta_hat, sigma2_hat = z.mean(), np.var(z)
        thetas = theta_hat + np.linspace(-3.0, 3.0, 61)
        sigma2s = sigma2_hat * np.arange(1, 41) / 10.0
        residuals = ((z[None, :] - thetas[:, None]) ** 2).sum(axis=1)
        values = (-0.5 * n * np.log(2 * np.pi * sigma2s)[None, :] - residuals[:, None] / (2 * sigma2s[None, :])
                  + (lam - 1) * sum_log)
        if values.max() > best_value:
            best_lambda, best_value = float(lam), values.max()
    return best_lambda


def test_fit_lambda_matches_brute_force_likelihood():
    """Tests fit_lambda agrees with the brute force maximum within one lambda grid step"""
    for seed, (lam, mu, sigma) in enumerate([(0.0, 3.0, 0.4), (0.5, 18.0, 4.0)] * 3):
        n = int(np.random.default_rng(seed).integers(50, 201))
        y = synthetic.boxcox_normal_values(n, lam, mu, sigma, seed)
        estimate = likelihood.fit_lambda(vector(y), shift=0.0)
        assert abs(estimate.lambda_hat - brute_force_lambda(y)) <= 0.01 + 1e-9


def test_fit_lambda_is_scale_invariant():
    """Tests scaling the data leaves the unshifted estimate in place"""
    y = np.exp(np.random.default_rng(4).normal(3.0, 0.4, 3000))
    base = likelihood.fit_lambda(vector(y), shift=0.0).lambda_hat
    assert abs(likelihood.fit_lambda(vector(7.0 * y), shift=0.0).lambda_hat - base) < 1e-3


def test_fit_lambda_trace():
    """Tests the grid trace and that refinement never loses ground"""
    estimate = likelihood.fit_lambda(vector(pytest.lognormal_image.pixels.ravel()))
    assert len(estimate.grid_evaluations) == 61
    assert estimate.grid_evaluations[0][0] == -3.0 and estimate.grid_evaluations[-1][0] == 5.0
    assert estimate.loglik_at_max >= max(value for _, value in estimate.grid_evaluations)
    assert estimate.shift == 1.0 and not estimate.subsampled
    assert all(math.isfinite(value) for _, value in estimate.grid_evaluations)


def test_fit_lambda_bracket_boundary():
    """Tests a maximum on the bracket edge raises with the estimate attached"""
    y = np.exp(np.random.default_rng(5).normal(3.0, 0.3, 2000))
    with pytest.raises(likelihood.BracketBoundaryError) as error:
        likelihood.fit_lambda(vector(y), (2.0, 5.0), shift=0.0)
    assert error.value.estimate.lambda_hat == 2.0


def test_fit_lambda_errors():
    """Tests constant data and invalid brackets are refused"""
    with pytest.raises(DegenerateDataError):
        likelihood.fit_lambda(vector(np.full(100, 7.0)))
    with pytest.raises(ValueError):
        likelihood.fit_lambda(vector([1.0, 2.0, 3.0]), (1.0, 1.0))
    with pytest.raises(ValueError):
        likelihood.fit_lambda(vector([1.0, 2.0, 3.0]), grid_points=2)


def test_fit_lambda_subsample_and_parallelism():
    """Tests the subsample is seeded and parallel grid evaluation is bitwise identical"""
    v = vector(np.exp(np.random.default_rng(6).normal(3.0, 0.3, 5000)))
    first = likelihood.fit_lambda(v, subsample_cap=1000, seed=3)
    second = likelihood.fit_lambda(v, subsample_cap=1000, seed=3, workers=3)
    assert first.subsampled and first.n_used == 1000
    assert first.to_dict() == second.to_dict()
    assert first.grid_evaluations == second.grid_evaluations
    assert likelihood.fit_lambda(v, subsample_cap=1000, full_data=True).n_used == 5000


def test_golden_section_max():
    """Tests likelihood.golden_section_max on a concave function"""
    x, value = likelihood.golden_section_max(lambda t: -(t - 1.3) ** 2, 0.0, 3.0, 1e-6)
    assert x == pytest.approx(1.3, abs=1e-5)
    assert value <= 0.0


def test_export_trace(tmp_path):
    """Tests likelihood.export_trace writes one row per grid point"""
    estimate = likelihood.fit_lambda(vector(pytest.lognormal_image.pixels.ravel()), grid_points=11)
    path = tmp_path / "trace.csv"
    likelihood.export_trace(estimate, str(path))
    lines = path.read_text().splitlines()
    assert lines[0] == "lambda,loglik"
    assert len(lines) == 12
    assert float(lines[1].split(",")[0]) == -3.0
