import logging

import numpy as np

from boxcoxseg.models.experiment import estimate_lambda, run_holdout
from boxcoxseg.models.image import GrayImage, LabelMask
from boxcoxseg.models.metrics import SUPPORTED_AVERAGES, ConfusionMatrix
from boxcoxseg.utils.config import SweepDefaults
from boxcoxseg.utils.errors import BoxCoxSegError
from boxcoxseg.utils.executor import ordered_map
from boxcoxseg.utils.features import stratified_split
from boxcoxseg.utils.likelihood import BracketBoundaryError
from boxcoxseg.utils.tables import format_real, parse_real, read_rows_csv, write_json, write_rows_csv

STATUS_OK = "ok"
STATUS_FAILED = "failed"


class SweepConfig(object):
    """The lambda grid and experiment settings of a sweep"""

    def __init__(self, lambdas, classifier: str = "LDA", precision_average: str = "macro",
                 seed: int = SweepDefaults.SPLIT_SEED, workers: int = 1, plot_data: bool = False):
        self.lambdas = [float(lam) for lam in lambdas]
        self.classifier = classifier
        self.precision_average = precision_average
        self.seed = int(seed)
        self.workers = int(workers)
        self.plot_data = bool(plot_data)
        self._validate_args()

    def _validate_args(self):
        if not self.lambdas:
            raise ValueError("the lambda grid is empty")
        if any(b <= a for a, b in zip(self.lambdas, self.lambdas[1:])):
            raise ValueError("the lambda grid must be strictly increasing")
        if not all(np.isfinite(self.lambdas)):
            raise ValueError("the lambda grid must be finite")
        if self.precision_average not in SUPPORTED_AVERAGES:
            raise ValueError("precision average {0} is not one of {1}".format(
                self.precision_average, sorted(SUPPORTED_AVERAGES)))

    @classmethod
    def from_config(cls, config: dict):
        """Builds the sweep from run config keys: an explicit lambdas list or sweep_lo, sweep_hi, sweep_points"""
        lambdas = config.get("lambdas")
        if lambdas is None:
            points = int(config.get("sweep_points", SweepDefaults.POINTS))
            if points < 1:
                raise ValueError("a sweep needs at least one point, got {0}".format(points))
            lo, hi = config.get("sweep_lo", SweepDefaults.LAMBDA_LO), config.get("sweep_hi", SweepDefaults.LAMBDA_HI)
            lambdas = [float(lo)] if points == 1 else np.linspace(lo, hi, points).tolist()
        return cls(lambdas, config.get("classifier", "LDA"), config.get("precision_average", "macro"),
                   config.get("seed", SweepDefaults.SPLIT_SEED), config.get("workers", 1),
                   config.get("plot_data", False))

    def to_dict(self) -> dict:
        return {
            "lambdas": self.lambdas,
            "classifier": self.classifier,
            "precision_average": self.precision_average,
            "seed": self.seed
        }


class SweepRow(object):
    """Scores of one grid point; metrics are None when the point failed"""

    def __init__(self, lam: float, status: str, matrix: ConfusionMatrix = None, kappa: float = None,
                 precision: float = None, accuracy: float = None, recall: list = None,
                 fit_seconds: float = None, message: str = None):
        self.lam = float(lam)
        self.status = status
        self.matrix = matrix
        self.kappa = kappa
        self.precision = precision
        self.accuracy = accuracy
        self.recall = list(recall) if recall is not None else None
        self.fit_seconds = fit_seconds
        self.message = message

    @property
    def ok(self) -> bool:
        return self.status == STATUS_OK

    def cells(self, num_classes: int) -> dict:
        """The row as formatted CSV cells"""
        cells = {"lambda": format_real(self.lam), "status": self.status,
                 "kappa": format_real(self.kappa), "precision": format_real(self.precision),
                 "accuracy": format_real(self.accuracy)}
        for k in range(num_classes):
            cells["recall_{0}".format(k)] = format_real(self.recall[k]) if self.ok else ""
        for t in range(num_classes):
            for p in range(num_classes):
                cells["cm_{0}_{1}".format(t, p)] = str(int(self.matrix.counts[t, p])) if self.ok else ""
        return cells

    def __eq__(self, other):
        return (isinstance(other, SweepRow) and self.lam == other.lam and self.status == other.status
                and self.kappa == other.kappa and self.precision == other.precision
                and self.accuracy == other.accuracy and self.recall == other.recall and self.matrix == other.matrix)

    def __repr__(self):
        return "SweepRow(lambda={0}, status={1}, kappa={2}, precision={3})".format(
            self.lam, self.status, self.kappa, self.precision)


def _argmax_lambda(rows: list, attribute: str):
    """Lambda of the largest value of attribute over successful rows, the lowest lambda on ties"""
    best = None
    for row in rows:
        value = getattr(row, attribute)
        if row.ok and value is not None and (best is None or value > getattr(best, attribute)):
            best = row
    return None if best is None else best.lam


class SweepResult(object):

    def __init__(self, rows: list, num_classes: int, class_names: list, config: SweepConfig,
                 mle_lambda: float = None, mle_status: str = None):
        self.rows = rows
        self.num_classes = num_classes
        self.class_names = class_names
        self.config = config
        self.mle_lambda = mle_lambda
        self.mle_status = mle_status
        self.argmax_kappa_lambda = _argmax_lambda(rows, "kappa")
        self.argmax_precision_lambda = _argmax_lambda(rows, "precision")

    @property
    def columns(self) -> list:
        return sweep_columns(self.num_classes)

    def annotations(self) -> dict:
        return {
            "mle_lambda": self.mle_lambda,
            "mle_status": self.mle_status,
            "argmax_kappa_lambda": self.argmax_kappa_lambda,
            "argmax_precision_lambda": self.argmax_precision_lambda,
            "class_names": self.class_names,
            "failed_lambdas": [row.lam for row in self.rows if not row.ok],
            "sweep": self.config.to_dict()
        }


def sweep_columns(num_classes: int) -> list:
    columns = ["lambda", "kappa", "precision", "accuracy"]
    columns += ["recall_{0}".format(k) for k in range(num_classes)]
    columns += ["cm_{0}_{1}".format(t, p) for t in range(num_classes) for p in range(num_classes)]
    # status trails the metric columns
    return columns + ["status"]


def _mle_annotation(gray: GrayImage, config: dict) -> tuple:
    """The lambda estimate marked on the sweep curves and whether it was cleanly found"""
    try:
        return estimate_lambda(gray, config).lambda_hat, STATUS_OK
    except BracketBoundaryError as e:
        logging.warning("models.sweep MLE lambda lies on the bracket boundary: {0}".format(e))
        return e.estimate.lambda_hat, "boundary"
    except BoxCoxSegError as e:
        logging.warning("models.sweep MLE lambda could not be estimated: {0}".format(e))
        return None, STATUS_FAILED


def run_sweep(img: GrayImage, mask: LabelMask, cfg: SweepConfig, config: dict = None) -> SweepResult:
    """Scores the holdout segmentation at every lambda of the grid

    Every grid point re-transforms, re-stretches and retrains on the same stratified split. Points whose
    transform or fit fails are kept as failed rows. Rows come back in grid order whatever the parallelism.

    :param img: the gray input image
    :param mask: the aligned ground truth
    :param cfg: the sweep grid and experiment settings
    :param config: run config keys for the prefilter, featurizer and classifier
    :return: the SweepResult
    """
    config = dict(config or {})
    config.update({"classifier": cfg.classifier, "seed": cfg.seed})
    split = stratified_split(mask, cfg.seed)
    point_config = dict(config, workers=1)

    def evaluate(lam: float) -> SweepRow:
        try:
            result = run_holdout(img, mask, lam, point_config, split)
        except BoxCoxSegError as e:
            logging.warning("models.sweep.run_sweep lambda {0} failed: {1}".format(lam, e))
            return SweepRow(lam, STATUS_FAILED, message=str(e))
        report = result.report
        return SweepRow(lam, STATUS_OK, result.matrix, report.kappa,
                        report.average("precision", cfg.precision_average), report.accuracy,
                        [float(value) for value in report.recall], result.fit_seconds)

    rows = ordered_map(evaluate, cfg.lambdas, cfg.workers)
    mle_lambda, mle_status = _mle_annotation(img, config)
    result = SweepResult(rows, mask.num_classes, mask.names(), cfg, mle_lambda, mle_status)
    logging.info("models.sweep.run_sweep {0} points, argmax kappa at {1}, argmax precision at {2}".format(
        len(rows), result.argmax_kappa_lambda, result.argmax_precision_lambda))
    return result


def sidecar_path(path: str, suffix: str) -> str:
    """Derives <out>.<suffix> from the <out>.csv path of a sweep"""
    base = path[:-4] if path.endswith(".csv") else path
    return "{0}.{1}".format(base, suffix)


def export_sweep(result: SweepResult, path: str, plot_data: bool = None):
    """Writes the sweep CSV with its annotations sidecar, the timing CSV and optionally the long format CSV

    :param result: the completed sweep
    :param path: the main CSV destination
    :param plot_data: also write lambda,metric,value rows, the sweep config setting when omitted
    """
    write_rows_csv(path, result.columns, [row.cells(result.num_classes) for row in result.rows])
    write_json(sidecar_path(path, "annotations.json"), result.annotations())
    write_rows_csv(sidecar_path(path, "timing.csv"), ["lambda", "fit_seconds"],
                   [{"lambda": format_real(row.lam), "fit_seconds": format_real(row.fit_seconds)}
                    for row in result.rows])
    if plot_data is None:
        plot_data = result.config.plot_data
    if plot_data:
        long_rows = []
        for row in result.rows:
            if not row.ok:
                continue
            metrics = [("kappa", row.kappa), ("precision", row.precision), ("accuracy", row.accuracy)]
            metrics += [("recall_{0}".format(k), value) for k, value in enumerate(row.recall)]
            long_rows += [{"lambda": format_real(row.lam), "metric": metric, "value": format_real(value)}
                          for metric, value in metrics if value is not None]
        write_rows_csv(sidecar_path(path, "long.csv"), ["lambda", "metric", "value"], long_rows)
    logging.info("models.sweep.export_sweep wrote {0} rows to {1}".format(len(result.rows), path))


def read_sweep(path: str) -> list:
    """Parses an exported sweep CSV back into SweepRows (fit times live in the timing CSV)

    :param path: the main sweep CSV
    :return: the rows in file order
    """
    records = read_rows_csv(path)
    if not records:
        return []
    num_classes = sum(1 for column in records[0] if column.startswith("recall_"))
    rows = []
    for record in records:
        if record["status"] != STATUS_OK:
            rows.append(SweepRow(float(record["lambda"]), record["status"]))
            continue
        rows.append(SweepRow(float(record["lambda"]), record["status"],
                             ConfusionMatrix.from_cells(record, num_classes), parse_real(record["kappa"]),
                             parse_real(record["precision"]), parse_real(record["accuracy"]),
                             [float(record["recall_{0}".format(k)]) for k in range(num_classes)]))
    return rows
