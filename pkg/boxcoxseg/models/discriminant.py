import logging

import numpy as np

from boxcoxseg.models.classifier import Classifier
from boxcoxseg.utils.config import ClassifierConfig
from boxcoxseg.utils.errors import DegenerateDataError, NumericalError
from boxcoxseg.utils.features import FeaturizerSpec


class DiscriminantModel(Classifier):
    """Gaussian class-conditional classifier, pooled covariance (LDA) or one covariance per class (QDA)"""

    kind = None

    def __init__(self, featurizer: FeaturizerSpec = None, ridge: float = None):
        super().__init__(featurizer)
        if ridge is not None and ridge < 0:
            raise ValueError("the covariance ridge must be >= 0, got {0}".format(ridge))
        self.ridge = ridge
        self.ridges = None
        self.priors = None
        self.means = None
        self.covariances = None
        self._precisions = None
        self._log_dets = None

    @property
    def pooled(self) -> bool:
        return self.kind == "LDA"

    def fit(self, features: np.ndarray, labels: np.ndarray):
        """Estimates priors N_k / N, class means and the covariance(s), then adds the ridge to the diagonal

        LDA pools the within-class scatter with divisor N - K; QDA uses divisor N_k - 1 per class.

        :param features: the (N, d) training feature matrix
        :param labels: the N integer class labels
        :returns a reference to this instance
        """
        features = self._check_features(features)
        labels = self._register_classes(labels)
        if features.shape[0] != labels.size:
            raise ValueError("{0} feature rows for {1} labels".format(features.shape[0], labels.size))
        n, d = features.shape
        counts = np.array([np.count_nonzero(labels == label) for label in self.classes])
        if counts.min() < d + 1:
            raise DegenerateDataError("every class needs at least {0} training pixels, class {1} has {2}".format(
                d + 1, self.classes[int(np.argmin(counts))], counts.min()))
        means = np.array([features[labels == label].mean(axis=0) for label in self.classes])
        scatters = []
        for index, label in enumerate(self.classes):
            centered = features[labels == label] - means[index]
            scatters.append(centered.T @ centered)
        if self.pooled:
            covariances = [sum(scatters) / (n - len(self.classes))]
        else:
            covariances = [scatter / (count - 1) for scatter, count in zip(scatters, counts)]
        if self.ridge is None:
            # scaled to each covariance being regularized; a class of identical pixels borrows the overall spread
            overall = float(np.trace(np.atleast_2d(np.cov(features.T))))
            self.ridges = [ClassifierConfig.RIDGE_FACTOR * (float(np.trace(covariance)) or overall) / d
                           for covariance in covariances]
        else:
            self.ridges = [self.ridge] * len(covariances)
        covariances = [covariance + ridge * np.eye(d) for covariance, ridge in zip(covariances, self.ridges)]
        self._set_parameters(counts / n, means, covariances)
        logging.info("models.discriminant fitted {0} on {1} pixels with ridges {2}".format(
            self.kind, n, self.ridges))
        return self

    def _set_parameters(self, priors, means, covariances):
        """Installs priors, means and covariances and precomputes their inverses and log determinants"""
        self.priors = np.asarray(priors, dtype=np.float64)
        self.means = np.atleast_2d(np.asarray(means, dtype=np.float64))
        self.covariances = [np.atleast_2d(np.asarray(covariance, dtype=np.float64)) for covariance in covariances]
        precisions, log_dets = [], []
        for covariance in self.covariances:
            if not np.allclose(covariance, covariance.T):
                raise NumericalError("{0} covariance is not symmetric".format(self.kind))
            try:
                np.linalg.cholesky(covariance)
            except np.linalg.LinAlgError as e:
                raise NumericalError("{0} covariance is singular even after the ridge".format(self.kind)) from e
            precisions.append(np.linalg.inv(covariance))
            log_dets.append(np.linalg.slogdet(covariance)[1])
        self._precisions = precisions
        self._log_dets = np.array(log_dets)

    @classmethod
    def from_parameters(cls, priors, means, covariances, classes=None, featurizer: FeaturizerSpec = None):
        """Builds a model from given parameters instead of fitting it

        :param priors: the K class probabilities
        :param means: the (K, d) class means
        :param covariances: one (d, d) matrix for LDA, K matrices for QDA
        :param classes: the class labels, 0..K-1 when omitted
        :param featurizer: the featurizer the model applies to
        :returns the model
        """
        means = np.atleast_2d(np.asarray(means, dtype=np.float64))
        model = cls(featurizer or FeaturizerSpec("intensity" if means.shape[1] == 1 else "window"))
        priors = np.asarray(priors, dtype=np.float64)
        if not np.isclose(priors.sum(), 1.0):
            raise ValueError("priors must sum to 1, got {0}".format(priors.sum()))
        model.classes = np.asarray(classes if classes is not None else np.arange(priors.size), dtype=np.int64)
        model.num_classes = int(model.classes.max()) + 1
        model._set_parameters(priors, means, covariances)
        return model

    def decision_function(self, features: np.ndarray) -> np.ndarray:
        """Evaluates delta_k(x) for every row and class

        :param features: the (n, d) feature matrix
        :returns the (n, K) discriminant scores
        """
        self._check_fitted()
        features = self._check_features(features)
        log_priors = np.log(self.priors)
        if self.pooled:
            precision = self._precisions[0]
            projected = self.means @ precision
            offsets = -0.5 * np.einsum("kd,kd->k", projected, self.means) + log_priors
            return features @ projected.T + offsets
        scores = np.empty((features.shape[0], self.priors.size))
        for index, precision in enumerate(self._precisions):
            centered = features - self.means[index]
            mahalanobis = np.einsum("nd,de,ne->n", centered, precision, centered)
            scores[:, index] = -0.5 * self._log_dets[index] - 0.5 * mahalanobis + log_priors[index]
        return scores

    def predict(self, features: np.ndarray) -> np.ndarray:
        """Assigns every row to argmax_k delta_k(x), ties going to the smallest class index"""
        return self.classes[np.argmax(self.decision_function(features), axis=1)]

    def parameters(self) -> dict:
        return {
            "ridge": self.ridge,
            "ridges": self.ridges,
            "priors": self.priors.tolist(),
            "means": self.means.tolist(),
            "covariances": [covariance.tolist() for covariance in self.covariances]
        }

    def load_parameters(self, parameters: dict):
        self.ridge = parameters["ridge"]
        self.ridges = parameters.get("ridges")
        self._set_parameters(parameters["priors"], parameters["means"], parameters["covariances"])
        return self


class LinearDiscriminant(DiscriminantModel):

    kind = "LDA"


class QuadraticDiscriminant(DiscriminantModel):

    kind = "QDA"


def fit_discriminant(features: np.ndarray, labels: np.ndarray, kind: str = "LDA", ridge: float = None,
                     featurizer: FeaturizerSpec = None) -> DiscriminantModel:
    """Fits LDA or QDA on a training set

    :param features: the (N, d) training features
    :param labels: the N training labels
    :param kind: LDA or QDA
    :param ridge: the covariance ridge, 1e-6 * trace / d of each covariance when omitted
    :param featurizer: the featurizer the features came from, derived from d when omitted
    :return: the fitted DiscriminantModel
    """
    kind_to_class_map = {"LDA": LinearDiscriminant, "QDA": QuadraticDiscriminant}
    if kind not in kind_to_class_map:
        raise ValueError("discriminant kind {0} is not one of {1}".format(kind, sorted(kind_to_class_map)))
    features = np.asarray(features, dtype=np.float64)
    if features.ndim == 1:
        features = features.reshape(-1, 1)
    featurizer = featurizer or FeaturizerSpec("intensity" if features.shape[1] == 1 else "window")
    return kind_to_class_map[kind](featurizer, ridge=ridge).fit(features, labels)


def predict_discriminant(model: DiscriminantModel, features: np.ndarray) -> np.ndarray:
    return model.predict(features)
