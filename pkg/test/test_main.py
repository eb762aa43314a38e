import json
import os

import numpy as np
import pytest
from PIL import Image

from boxcoxseg.__main__ import main
from boxcoxseg.utils import raster
from boxcoxseg.utils.config import get_default_run_config


@pytest.fixture
def two_class_files(tmp_path):
    image, mask = str(tmp_path / "image.pgm"), str(tmp_path / "mask.pgm")
    assert main(["synth", "--kind", "two-class", "--size", "64x64", "--output", image, "--mask-output", mask,
                 "--seed", "4"]) == 0
    return image, mask


def test_synth(tmp_path, two_class_files):
    """Tests the synth command writes the image, its mask and a manifest"""
    image, mask = two_class_files
    assert raster.load_gray(image).shape == (64, 64)
    labels = raster.load_mask(mask, pytest.binary_palette).labels
    assert int(labels.sum()) == round(0.08 * 64 * 64)
    with open(image + ".manifest.json") as f:
        manifest = json.load(f)
    assert manifest["command"] == "synth"
    assert manifest["config"]["seed"] == 4 and manifest["sources"]["seed"] == "flag"
    assert manifest["outputs"]["mask"] == mask


def test_transform_and_estimate(tmp_path, two_class_files, capsys):
    """Tests transform and estimate-lambda print the lambda and write their outputs"""
    image, _ = two_class_files
    output = str(tmp_path / "prefiltered.png")
    assert main(["transform", "--input", image, "--output", output, "--range", "0:255"]) == 0
    transformed = raster.load_gray(output)
    assert transformed.pixels.min() == 0.0 and transformed.pixels.max() == 255.0
    assert "lambda" in capsys.readouterr().out
    trace = str(tmp_path / "trace.csv")
    assert main(["estimate-lambda", "--input", image, "--output", trace]) == 0
    assert "lambda_hat" in capsys.readouterr().out
    assert len(open(trace).read().splitlines()) == 62
    assert main(["transform", "--input", image, "--output", output, "--method", "gamma", "--gamma", "0.5"]) == 0


def test_segment_and_evaluate(tmp_path, two_class_files):
    """Tests segment with a saved model reproduces the trained segmentation and evaluate scores it"""
    image, mask = two_class_files
    predicted, report, model = (str(tmp_path / name) for name in ("pred.pgm", "report.csv", "model.json"))
    assert main(["segment", "--input", image, "--mask", mask, "--output", predicted, "--report", report,
                 "--model-out", model]) == 0
    assert os.path.isfile(report) and os.path.isfile(predicted + ".manifest.json")
    reloaded = str(tmp_path / "reloaded.pgm")
    assert main(["segment", "--input", image, "--mask", mask, "--output", reloaded, "--model-in", model]) == 0
    first = raster.load_mask(predicted, pytest.binary_palette).labels
    assert np.array_equal(first, raster.load_mask(reloaded, pytest.binary_palette).labels)
    scores = str(tmp_path / "scores.csv")
    assert main(["evaluate", "--prediction", predicted, "--truth", mask, "--output", scores]) == 0
    assert open(scores, "rb").read() == open(report, "rb").read()
    small = str(tmp_path / "small.pgm")
    Image.fromarray(np.zeros((4, 4), dtype=np.uint8)).save(small)
    assert main(["evaluate", "--prediction", small, "--truth", mask, "--output", scores]) == 2


def test_transform_identity_lambda(tmp_path):
    """Tests lambda 1 without a shift gives the plain stretch up to rounding"""
    ramp = np.arange(1, 256, dtype=np.uint8).reshape(15, 17)
    source, output = str(tmp_path / "ramp.pgm"), str(tmp_path / "out.pgm")
    Image.fromarray(ramp).save(source)
    assert main(["transform", "--input", source, "--output", output, "--lambda", "1", "--shift", "0",
                 "--range", "0:255"]) == 0
    expected = (ramp.astype(np.float64) - 1.0) * 255.0 / 254.0
    assert np.max(np.abs(raster.load_gray(output).pixels - expected)) <= 0.5 + 1e-9


def test_sweep_is_reproducible(tmp_path, two_class_files):
    """Tests two sweep runs with the same seed write identical files"""
    image, mask = two_class_files
    paths = [str(tmp_path / "sweep_{0}.csv".format(index)) for index in range(2)]
    for path in paths:
        assert main(["sweep", "--input", image, "--mask", mask, "--output", path, "--sweep-lo", "0",
                     "--sweep-hi", "2", "--sweep-points", "5"]) == 0
    assert open(paths[0], "rb").read() == open(paths[1], "rb").read()
    assert len(open(paths[0]).read().splitlines()) == 6


def test_compare(tmp_path, two_class_files):
    """Tests compare writes one row per classifier and condition"""
    image, mask = two_class_files
    output = str(tmp_path / "compare.csv")
    assert main(["compare", "--input", image, "--mask", mask, "--output", output, "--classifiers", "LDA,QDA"]) == 0
    assert len(open(output).read().splitlines()) == 5


def test_exit_statuses(tmp_path, two_class_files):
    """Tests usage errors exit 2, degenerate data exits 3 and a bracket edge exits 4"""
    image, mask = two_class_files
    output = str(tmp_path / "out.png")
    assert main(["transform", "--input", str(tmp_path / "missing.png"), "--output", output]) == 2
    assert main(["segment", "--input", image, "--mask", mask, "--output", output, "--classifier", "GBDT"]) == 2
    constant = str(tmp_path / "constant.pgm")
    Image.fromarray(np.full((8, 8), 90, dtype=np.uint8)).save(constant)
    assert main(["estimate-lambda", "--input", constant, "--output", str(tmp_path / "trace.csv")]) == 3
    assert not os.path.exists(output + ".manifest.json")
    lognormal, trace = str(tmp_path / "lognormal.pgm"), str(tmp_path / "edge.csv")
    assert main(["synth", "--kind", "lognormal", "--size", "64x64", "--output", lognormal]) == 0
    assert main(["estimate-lambda", "--input", lognormal, "--output", trace, "--bracket-lo", "2",
                 "--bracket-hi", "5"]) == 4
    # the trace is still written for a boundary estimate
    assert len(open(trace).read().splitlines()) == 62


def replay(manifest_path: str, output: str, tmp_path) -> list:
    """Rebuilds a command line from a manifest: run config keys through a config file, arguments as flags"""
    with open(manifest_path) as f:
        manifest = json.load(f)
    known = set(get_default_run_config())
    config_path = str(tmp_path / "replay.json")
    with open(config_path, "w") as f:
        json.dump({key: value for key, value in manifest["config"].items() if key in known}, f)
    argv = [manifest["command"], "--config", config_path]
    for key, value in sorted(manifest["config"].items()):
        if key in known or key == "config_file" or value is None:
            continue
        if key == "output":
            value = output
        elif key == "size":
            value = "{0}x{1}".format(*value)
        argv += ["--" + key.replace("_", "-"), str(value)]
    return argv


def test_synth_manifest_replays(tmp_path):
    """Tests a synth manifest records every generator setting and replays to the same image"""
    first, second = str(tmp_path / "first.pgm"), str(tmp_path / "second.pgm")
    assert main(["synth", "--kind", "lognormal", "--output", first, "--mu", "3.0", "--sigma", "0.5",
                 "--size", "8x8", "--seed", "11"]) == 0
    with open(first + ".manifest.json") as f:
        manifest = json.load(f)
    assert manifest["config"]["mu"] == 3.0 and manifest["sources"]["mu"] == "flag"
    assert manifest["config"]["size"] == [8, 8]
    assert "lambda_star" not in manifest["results"]
    assert main(replay(first + ".manifest.json", second, tmp_path)) == 0
    assert open(first, "rb").read() == open(second, "rb").read()


def test_synth_manifest_records_fallbacks(tmp_path):
    """Tests the generator settings a kind falls back to are written out with source default"""
    output = str(tmp_path / "boxcox.pgm")
    assert main(["synth", "--kind", "boxcox", "--output", output, "--size", "16x16"]) == 0
    with open(output + ".manifest.json") as f:
        manifest = json.load(f)
    assert manifest["config"]["lambda_star"] == 0.5 and manifest["sources"]["lambda_star"] == "default"
    assert (manifest["config"]["mu"], manifest["config"]["sigma"]) == (10.0, 1.0)
    assert manifest["results"]["lambda_star"] == 0.5
    assert manifest["sources"]["output"] == "flag"


def test_segment_manifest_replays(tmp_path, two_class_files):
    """Tests a segment manifest holds the input paths and replays to the same mask"""
    image, mask = two_class_files
    first, second = str(tmp_path / "first.pgm"), str(tmp_path / "second.pgm")
    assert main(["segment", "--input", image, "--mask", mask, "--output", first, "--classifier", "QDA",
                 "--seed", "3", "--palette", "0=background;255=minority"]) == 0
    with open(first + ".manifest.json") as f:
        manifest = json.load(f)
    assert (manifest["config"]["input"], manifest["config"]["mask"]) == (image, mask)
    assert main(replay(first + ".manifest.json", second, tmp_path)) == 0
    assert open(first, "rb").read() == open(second, "rb").read()
