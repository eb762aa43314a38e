import logging
import time

import numpy as np

from boxcoxseg.models.classifier import Classifier
from boxcoxseg.models.image import GrayImage, LabelMask, vectorize
from boxcoxseg.models.metrics import ConfusionMatrix, MetricReport, confusion_from_labels
from boxcoxseg.models.segmentation import build_classifier, predict_features
from boxcoxseg.utils import likelihood, pipeline, prefilter
from boxcoxseg.utils.errors import DegenerateDataError
from boxcoxseg.utils.features import FeaturizerSpec, featurize, stratified_split
from boxcoxseg.utils.tables import format_real, write_rows_csv


def featurizer_from_config(config: dict) -> FeaturizerSpec:
    return FeaturizerSpec(config.get("featurizer", "intensity"), config.get("window", 3))


def stretch_range_from_config(config: dict) -> prefilter.StretchRange:
    return prefilter.StretchRange(config.get("stretch_min", 0.0), config.get("stretch_max", 255.0))


def estimate_lambda(gray: GrayImage, config: dict) -> likelihood.LambdaEstimate:
    """Runs the maximum likelihood lambda estimation with the bracket, shift and seed of a run config"""
    return likelihood.fit_lambda(vectorize(gray), (config.get("bracket_lo", -3.0), config.get("bracket_hi", 5.0)),
                                 shift=config.get("shift", 1.0), grid_points=config.get("grid_points", 61),
                                 full_data=config.get("full_data", False), seed=config.get("seed", 0),
                                 workers=config.get("workers", 1))


def prepare_image(gray: GrayImage, lam, config: dict) -> tuple:
    """Produces the image a classifier sees under one condition

    :param gray: the gray input image
    :param lam: None for the untransformed grayscale, "mle" to estimate lambda, or a fixed lambda
    :param config: run config keys (shift, stretch range, bracket, seed)
    :return: the image, the BoxCoxParams used (None without prefilter) and the LambdaEstimate (None unless estimated)
    """
    if lam is None:
        return gray, None, None
    estimate = None
    if lam == "mle":
        estimate = estimate_lambda(gray, config)
        lam = estimate.lambda_hat
    params = prefilter.BoxCoxParams(float(lam), config.get("shift", 1.0))
    return pipeline.boxcox_stretch(gray, params, stretch_range_from_config(config)), params, estimate


class HoldoutResult(object):
    """Outcome of fitting on the training pixels and scoring the held-out pixels of one image"""

    def __init__(self, model: Classifier, matrix: ConfusionMatrix, report: MetricReport, fit_seconds: float,
                 image: GrayImage, params: prefilter.BoxCoxParams = None,
                 estimate: likelihood.LambdaEstimate = None):
        self.model = model
        self.matrix = matrix
        self.report = report
        self.fit_seconds = fit_seconds
        self.image = image
        self.params = params
        self.estimate = estimate


def run_holdout(gray: GrayImage, mask: LabelMask, lam, config: dict, split: tuple = None,
                kind: str = None) -> HoldoutResult:
    """Prefilter, featurize, stratified split, fit, predict the held-out pixels and score them

    :param gray: the gray input image
    :param mask: the ground truth aligned with the image
    :param lam: None for the untransformed condition, "mle", or a fixed lambda
    :param config: run config keys (classifier, featurizer, prefilter and classifier settings, seed, workers)
    :param split: precomputed (train, test) pixel indices, drawn from the mask with the run seed when omitted
    :param kind: the classifier kind, config["classifier"] when omitted
    :return: the HoldoutResult
    """
    if gray.shape != mask.shape:
        raise ValueError("image {0} and mask {1} differ in shape".format(gray.shape, mask.shape))
    kind = kind or config.get("classifier", "LDA")
    train, test = split if split is not None else stratified_split(mask, config.get("seed", 0))
    if test.size == 0:
        raise DegenerateDataError("the split left no pixels to evaluate on")
    image, params, estimate = prepare_image(gray, lam, config)
    spec = featurizer_from_config(config)
    features = featurize(image, spec)
    labels = mask.labels.ravel()
    model = build_classifier(kind, spec, config)
    started = time.perf_counter()
    model.fit(features[train], labels[train])
    fit_seconds = time.perf_counter() - started
    predicted = predict_features(model, features[test], config.get("workers", 1))
    matrix = confusion_from_labels(predicted, labels[test], mask.num_classes)
    report = MetricReport(matrix, mask.names())
    logging.info("models.experiment.run_holdout {0} at lambda {1}: accuracy {2:.4f} fitted in {3:.3f}s".format(
        kind, "none" if params is None else params.lam, report.accuracy, fit_seconds))
    return HoldoutResult(model, matrix, report, fit_seconds, image, params, estimate)


COMPARISON_COLUMNS = ["classifier", "condition", "lambda", "accuracy", "kappa", "macro_precision", "macro_recall",
                      "macro_f1", "weighted_precision", "weighted_recall", "weighted_f1", "fit_seconds"]


def compare_classifiers(gray: GrayImage, mask: LabelMask, config: dict) -> list:
    """Runs every configured classifier on the untransformed and on the prefiltered image

    Lambda is resolved once and both conditions share the same split.

    :param gray: the gray input image
    :param mask: the ground truth
    :param config: run config keys, classifiers lists the kinds to compare
    :return: a list of (classifier, condition, HoldoutResult) tuples in classifier order, before then after
    """
    split = stratified_split(mask, config.get("seed", 0))
    lam = config.get("lambda", "mle")
    if lam == "mle":
        lam = estimate_lambda(gray, config).lambda_hat
    results = []
    for kind in config.get("classifiers", ["LDA", "QDA", "KNN", "SVM"]):
        for condition, condition_lambda in (("before", None), ("after", float(lam))):
            result = run_holdout(gray, mask, condition_lambda, config, split, kind)
            results.append((kind, condition, result))
    return results


def comparison_rows(results: list) -> list:
    rows = []
    for kind, condition, result in results:
        report = result.report
        rows.append({
            "classifier": kind,
            "condition": condition,
            "lambda": "" if result.params is None else format_real(result.params.lam),
            "accuracy": format_real(report.accuracy),
            "kappa": format_real(report.kappa),
            "macro_precision": format_real(report.macro["precision"]),
            "macro_recall": format_real(report.macro["recall"]),
            "macro_f1": format_real(report.macro["f1"]),
            "weighted_precision": format_real(report.weighted["precision"]),
            "weighted_recall": format_real(report.weighted["recall"]),
            "weighted_f1": format_real(report.weighted["f1"]),
            "fit_seconds": format_real(result.fit_seconds)
        })
    return rows


def export_comparison(results: list, path: str):
    """Writes the comparison as CSV, one row per classifier and condition"""
    write_rows_csv(path, COMPARISON_COLUMNS, comparison_rows(results))


def minority_recall(report: MetricReport) -> float:
    """Recall of the class with the smallest support in the evaluated pixels"""
    return float(report.recall[int(np.argmin(report.support))])
