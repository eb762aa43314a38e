import numpy as np

from boxcoxseg.models.image import LabelMask
from boxcoxseg.utils.errors import DegenerateDataError
from boxcoxseg.utils.tables import format_real, write_rows_csv

SUPPORTED_AVERAGES = {"macro", "weighted"}


class ConfusionMatrix(object):
    """K x K pixel counts, rows are the true class and columns the predicted class"""

    def __init__(self, counts: np.ndarray):
        counts = np.asarray(counts)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1] or counts.shape[0] < 1:
            raise ValueError("a confusion matrix must be square and non-empty, got shape {0}".format(counts.shape))
        if not np.all(counts == np.round(counts)) or counts.min() < 0:
            raise ValueError("confusion matrix entries must be nonnegative integers")
        self.counts = counts.astype(np.int64)
        self.counts.setflags(write=False)

    @property
    def num_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def truth_totals(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    def predicted_totals(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    def normalized(self) -> np.ndarray:
        """Row-normalized percentages, each row with support summing to 100; rows without support stay 0"""
        rows = self.truth_totals().astype(np.float64)[:, None]
        return np.divide(100.0 * self.counts, rows, out=np.zeros(self.counts.shape), where=rows > 0)

    def cells(self) -> dict:
        """Flattens the counts as cm_<truth>_<predicted> entries"""
        return {"cm_{0}_{1}".format(t, p): int(self.counts[t, p])
                for t in range(self.num_classes) for p in range(self.num_classes)}

    @classmethod
    def from_cells(cls, cells: dict, num_classes: int):
        """Rebuilds a matrix from its cm_<truth>_<predicted> entries"""
        counts = np.zeros((num_classes, num_classes), dtype=np.int64)
        for t in range(num_classes):
            for p in range(num_classes):
                counts[t, p] = int(cells["cm_{0}_{1}".format(t, p)])
        return cls(counts)

    def __eq__(self, other):
        return isinstance(other, ConfusionMatrix) and np.array_equal(self.counts, other.counts)

    def __repr__(self):
        return "ConfusionMatrix({0})".format(self.counts.tolist())


def confusion_from_labels(predicted: np.ndarray, truth: np.ndarray, num_classes: int) -> ConfusionMatrix:
    """Counts label pairs of two equally long label arrays

    :param predicted: the predicted labels
    :param truth: the true labels
    :param num_classes: K
    :return: the ConfusionMatrix
    """
    predicted = np.asarray(predicted, dtype=np.int64).ravel()
    truth = np.asarray(truth, dtype=np.int64).ravel()
    if predicted.shape != truth.shape:
        raise ValueError("{0} predictions for {1} true labels".format(predicted.size, truth.size))
    if predicted.size and (min(predicted.min(), truth.min()) < 0 or max(predicted.max(), truth.max()) >= num_classes):
        raise ValueError("labels must lie in [0, {0})".format(num_classes))
    counts = np.bincount(truth * num_classes + predicted, minlength=num_classes * num_classes)
    return ConfusionMatrix(counts.reshape(num_classes, num_classes))


def confusion(pred: LabelMask, truth: LabelMask) -> ConfusionMatrix:
    """Confusion matrix of a predicted mask against the ground truth

    :param pred: the predicted mask
    :param truth: the ground truth mask
    :return: counts[t][p] = number of pixels of true class t predicted as p
    """
    if pred.shape != truth.shape:
        raise ValueError("predicted mask {0} and ground truth {1} differ in shape".format(pred.shape, truth.shape))
    if pred.num_classes != truth.num_classes:
        raise ValueError("predicted mask has {0} classes, ground truth {1}".format(
            pred.num_classes, truth.num_classes))
    return confusion_from_labels(pred.labels, truth.labels, truth.num_classes)


def _ratio(numerator: np.ndarray, denominator: np.ndarray, empty: float) -> np.ndarray:
    numerator = np.asarray(numerator, dtype=np.float64)
    denominator = np.asarray(denominator, dtype=np.float64)
    return np.divide(numerator, denominator, out=np.full(numerator.shape, empty), where=denominator > 0)


def kappa(m: ConfusionMatrix) -> float:
    """Cohen's kappa (p0 - pe) / (1 - pe) with pe the agreement expected from the marginals

    :param m: the confusion matrix
    :return: kappa in [-1, 1]
    """
    total = m.total
    if total == 0:
        raise DegenerateDataError("kappa is undefined on an empty confusion matrix")
    p0 = np.trace(m.counts) / total
    pe = float(np.dot(m.truth_totals().astype(np.float64), m.predicted_totals().astype(np.float64))) / total ** 2
    if pe >= 1.0:
        raise DegenerateDataError("kappa is undefined when truth and prediction hold a single shared category")
    return float((p0 - pe) / (1.0 - pe))


class MetricReport(object):
    """Per class precision, recall, F1, IoU and Dice with accuracy, averages and kappa

    Precision or recall of a class whose denominator is zero is reported as 0 and listed in
    undefined_precision / undefined_recall. IoU and Dice of a class absent from both masks are 1.
    """

    def __init__(self, matrix: ConfusionMatrix, class_names: list = None):
        if matrix.total == 0:
            raise DegenerateDataError("metrics are undefined on an empty confusion matrix")
        counts = matrix.counts
        hits = np.diag(counts).astype(np.float64)
        truth, predicted = matrix.truth_totals(), matrix.predicted_totals()
        self.matrix = matrix
        self.class_names = list(class_names) if class_names else [str(k) for k in range(matrix.num_classes)]
        self.support = truth
        self.precision = _ratio(hits, predicted, 0.0)
        self.recall = _ratio(hits, truth, 0.0)
        self.f1 = _ratio(2.0 * self.precision * self.recall, self.precision + self.recall, 0.0)
        self.iou = _ratio(hits, truth + predicted - hits, 1.0)
        self.dice = _ratio(2.0 * hits, truth + predicted, 1.0)
        self.undefined_precision = [k for k in range(matrix.num_classes) if predicted[k] == 0]
        self.undefined_recall = [k for k in range(matrix.num_classes) if truth[k] == 0]
        self.accuracy = float(hits.sum() / matrix.total)
        weights = truth / float(matrix.total)
        self.macro = {name: float(np.mean(values)) for name, values in self._per_class().items()}
        self.weighted = {name: float(np.dot(weights, values)) for name, values in self._per_class().items()}
        try:
            self.kappa = kappa(matrix)
        except DegenerateDataError:
            self.kappa = None

    def _per_class(self) -> dict:
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1}

    def average(self, metric: str, average: str = "macro") -> float:
        """Retrieves the macro or support-weighted average of precision, recall or f1"""
        if average not in SUPPORTED_AVERAGES:
            raise ValueError("average {0} is not one of {1}".format(average, sorted(SUPPORTED_AVERAGES)))
        return (self.macro if average == "macro" else self.weighted)[metric]

    def rows(self) -> list:
        """Long format metric,class,value rows; class is empty for image-wide metrics"""
        rows = []
        for k, name in enumerate(self.class_names):
            for metric, values in [("precision", self.precision), ("recall", self.recall), ("f1", self.f1),
                                   ("iou", self.iou), ("dice", self.dice)]:
                rows.append({"metric": metric, "class": name, "value": format_real(values[k])})
            rows.append({"metric": "support", "class": name, "value": str(int(self.support[k]))})
        for average, values in [("macro", self.macro), ("weighted", self.weighted)]:
            for metric in ("precision", "recall", "f1"):
                rows.append({"metric": "{0}_{1}".format(average, metric), "class": "",
                             "value": format_real(values[metric])})
        rows.append({"metric": "accuracy", "class": "", "value": format_real(self.accuracy)})
        rows.append({"metric": "kappa", "class": "", "value": format_real(self.kappa)})
        return rows

    def to_csv(self, path: str):
        write_rows_csv(path, ["metric", "class", "value"], self.rows())

    def to_dict(self) -> dict:
        return {
            "classes": self.class_names,
            "precision": self.precision.tolist(),
            "recall": self.recall.tolist(),
            "f1": self.f1.tolist(),
            "iou": self.iou.tolist(),
            "dice": self.dice.tolist(),
            "support": self.support.tolist(),
            "accuracy": self.accuracy,
            "macro": self.macro,
            "weighted": self.weighted,
            "kappa": self.kappa,
            "confusion": self.matrix.counts.tolist()
        }

    def format_table(self) -> str:
        """Human readable report with percentages rounded for display"""
        width = max(8, max(len(name) for name in self.class_names))
        lines = ["{0:<{w}} {1:>9} {2:>9} {3:>9} {4:>9} {5:>9} {6:>10}".format(
            "class", "precision", "recall", "f1", "iou", "dice", "support", w=width)]
        for k, name in enumerate(self.class_names):
            lines.append("{0:<{w}} {1:>9.2f} {2:>9.2f} {3:>9.2f} {4:>9.2f} {5:>9.2f} {6:>10d}".format(
                name, 100 * self.precision[k], 100 * self.recall[k], 100 * self.f1[k], 100 * self.iou[k],
                100 * self.dice[k], int(self.support[k]), w=width))
        for average, values in [("macro", self.macro), ("weighted", self.weighted)]:
            lines.append("{0:<{w}} {1:>9.2f} {2:>9.2f} {3:>9.2f}".format(
                average, 100 * values["precision"], 100 * values["recall"], 100 * values["f1"], w=width))
        lines.append("accuracy {0:.2f}".format(100 * self.accuracy))
        lines.append("kappa {0}".format("undefined" if self.kappa is None else "{0:.4f}".format(self.kappa)))
        normalized = self.matrix.normalized()
        lines.append("normalized confusion (% of each true class)")
        for k, name in enumerate(self.class_names):
            lines.append("{0:<{w}} ".format(name, w=width) + " ".join("{0:>7.2f}".format(v) for v in normalized[k]))
        return "\n".join(lines)


def scalar_metrics(m: ConfusionMatrix, class_names: list = None) -> MetricReport:
    """Builds the full metric report of a confusion matrix

    :param m: the confusion matrix
    :param class_names: optional class names for display
    :return: the MetricReport
    """
    return MetricReport(m, class_names)


def overlap_metrics(pred: LabelMask, truth: LabelMask, k: int) -> tuple:
    """IoU and Dice of the predicted and true pixel sets of class k

    :param pred: the predicted mask
    :param truth: the ground truth mask
    :param k: the class label
    :return: (IoU, Dice), both 1 when neither mask holds class k
    """
    if pred.shape != truth.shape:
        raise ValueError("predicted mask {0} and ground truth {1} differ in shape".format(pred.shape, truth.shape))
    predicted_set = pred.labels == k
    true_set = truth.labels == k
    intersection = int(np.count_nonzero(predicted_set & true_set))
    union = int(np.count_nonzero(predicted_set | true_set))
    sizes = int(np.count_nonzero(predicted_set)) + int(np.count_nonzero(true_set))
    if union == 0:
        return 1.0, 1.0
    return intersection / union, 2.0 * intersection / sizes
