import json
import time

import numpy as np
import pytest

from boxcoxseg.models import experiment, sweep
from boxcoxseg.models.metrics import MetricReport
from boxcoxseg.utils import synthetic
from boxcoxseg.utils.config import get_default_run_config


def run_config(**overrides) -> dict:
    config = get_default_run_config()
    config.update(overrides)
    return config


def run(lambdas: list, workers: int = 1, **overrides) -> sweep.SweepResult:
    cfg = sweep.SweepConfig(lambdas, workers=workers)
    return sweep.run_sweep(pytest.two_class_image, pytest.two_class_mask, cfg, run_config(**overrides))


def test_sweep_config_validation():
    """Tests sweep.SweepConfig rejects empty, unordered and non-finite grids"""
    with pytest.raises(ValueError):
        sweep.SweepConfig([])
    with pytest.raises(ValueError):
        sweep.SweepConfig([0.0, 0.0])
    with pytest.raises(ValueError):
        sweep.SweepConfig([1.0, 0.5])
    with pytest.raises(ValueError):
        sweep.SweepConfig([0.0, float("inf")])
    with pytest.raises(ValueError):
        sweep.SweepConfig([0.0], precision_average="micro")


def test_sweep_config_from_config():
    """Tests the grid is built from sweep_lo, sweep_hi and sweep_points"""
    cfg = sweep.SweepConfig.from_config(run_config())
    assert len(cfg.lambdas) == 61
    assert cfg.lambdas[0] == -1.0 and cfg.lambdas[-1] == 5.0
    assert sweep.SweepConfig.from_config(run_config(sweep_points=1, sweep_lo=1.0)).lambdas == [1.0]
    assert sweep.SweepConfig.from_config(run_config(lambdas=[0.0, 2.0])).lambdas == [0.0, 2.0]


def test_single_point_matches_holdout():
    """Tests a one point sweep scores exactly like a standalone holdout run"""
    result = run([1.0])
    holdout = experiment.run_holdout(pytest.two_class_image, pytest.two_class_mask, 1.0, run_config())
    row = result.rows[0]
    assert row.ok
    assert row.matrix == holdout.matrix
    assert row.kappa == holdout.report.kappa
    assert row.precision == holdout.report.macro["precision"]


def test_rows_agree_with_their_confusion_matrix():
    """Tests kappa and precision recomputed from each stored matrix match the row"""
    result = run([-0.5, 0.0, 0.5, 1.0, 2.0])
    assert [row.lam for row in result.rows] == [-0.5, 0.0, 0.5, 1.0, 2.0]
    for row in result.rows:
        report = MetricReport(row.matrix)
        assert report.kappa == pytest.approx(row.kappa, abs=1e-12)
        assert report.macro["precision"] == pytest.approx(row.precision, abs=1e-12)


def test_failed_point_is_recorded(tmp_path):
    """Tests a lambda that overflows the transform gives a failed row and the sweep continues"""
    result = run([1.0, 400.0])
    assert result.rows[0].ok
    assert result.rows[1].status == sweep.STATUS_FAILED
    assert result.annotations()["failed_lambdas"] == [400.0]
    path = str(tmp_path / "sweep.csv")
    sweep.export_sweep(result, path)
    failed_line = open(path).read().splitlines()[2]
    assert failed_line.startswith("400.0,failed,,,,")


def test_annotations():
    """Tests the MLE annotation equals a standalone estimate and argmax markers point at rows"""
    result = run([0.0, 0.5, 1.0])
    estimate = experiment.estimate_lambda(pytest.two_class_image, run_config())
    assert result.mle_lambda == estimate.lambda_hat
    assert result.mle_status in (sweep.STATUS_OK, "boundary")
    best = max(row.kappa for row in result.rows)
    assert result.argmax_kappa_lambda == min(row.lam for row in result.rows if row.kappa == best)


def test_argmax_prefers_lowest_lambda():
    """Tests equal scores resolve to the lowest lambda and failed rows are skipped"""
    rows = [sweep.SweepRow(0.0, sweep.STATUS_OK, kappa=0.5), sweep.SweepRow(1.0, sweep.STATUS_OK, kappa=0.8),
            sweep.SweepRow(2.0, sweep.STATUS_OK, kappa=0.8), sweep.SweepRow(3.0, sweep.STATUS_FAILED)]
    assert sweep._argmax_lambda(rows, "kappa") == 1.0
    assert sweep._argmax_lambda([sweep.SweepRow(0.0, sweep.STATUS_FAILED)], "kappa") is None


def test_export_and_read_back(tmp_path):
    """Tests the exported CSV layout, sidecars and re-import"""
    result = run(np.linspace(-1.0, 5.0, 61).tolist(), plot_data=True)
    path = str(tmp_path / "sweep.csv")
    sweep.export_sweep(result, path, plot_data=True)
    lines = open(path).read().splitlines()
    assert len(lines) == 62
    assert lines[0] == ",".join(sweep.sweep_columns(2))
    assert lines[0].startswith("lambda,kappa,precision,accuracy,recall_0,recall_1,cm_0_0")
    assert lines[0].endswith("cm_1_1,status")
    assert sweep.read_sweep(path) == result.rows
    with open(sweep.sidecar_path(path, "annotations.json")) as f:
        annotations = json.load(f)
    assert annotations["argmax_kappa_lambda"] == result.argmax_kappa_lambda
    assert len(open(sweep.sidecar_path(path, "timing.csv")).read().splitlines()) == 62
    long_lines = open(sweep.sidecar_path(path, "long.csv")).read().splitlines()
    assert long_lines[0] == "lambda,metric,value"


def test_sweep_is_deterministic(tmp_path):
    """Tests repeated and parallel sweeps write bitwise identical CSVs"""
    lambdas = [-0.5, 0.0, 0.5, 1.0, 1.5, 2.0]
    paths = []
    for index, workers in enumerate([1, 1, 3]):
        path = str(tmp_path / "sweep_{0}.csv".format(index))
        sweep.export_sweep(run(lambdas, workers), path)
        paths.append(path)
    contents = [open(path, "rb").read() for path in paths]
    assert contents[0] == contents[1] == contents[2]
    annotations = [open(sweep.sidecar_path(path, "annotations.json"), "rb").read() for path in paths]
    assert annotations[0] == annotations[1] == annotations[2]


def test_sidecar_path():
    """Tests sweep.sidecar_path function"""
    assert sweep.sidecar_path("out/sweep.csv", "timing.csv") == "out/sweep.timing.csv"
    assert sweep.sidecar_path("out/sweep", "annotations.json") == "out/sweep.annotations.json"


@pytest.mark.slow
def test_full_sweep_on_512_image_runs_within_a_minute():
    """Tests a 61 point LDA sweep of a 512x512 image finishes single threaded in under 60 seconds"""
    img, mask = synthetic.two_class_image((512, 512), seed=0)
    config = run_config(classifier="LDA", workers=1)
    cfg = sweep.SweepConfig.from_config(config)
    start = time.perf_counter()
    result = sweep.run_sweep(img, mask, cfg, config)
    assert time.perf_counter() - start < 60.0
    assert len(result.rows) == 61
    assert all(row.ok for row in result.rows)
