from abc import ABC, abstractmethod

import numpy as np

from boxcoxseg.utils.errors import DegenerateDataError
from boxcoxseg.utils.features import FeaturizerSpec


class Classifier(ABC):
    """A pixel classifier fitted on feature rows produced by a featurizer"""

    kind = None

    def __init__(self, featurizer: FeaturizerSpec = None):
        super().__init__()
        self.featurizer = featurizer or FeaturizerSpec()
        self.classes = None
        self.num_classes = None

    @property
    def dimension(self) -> int:
        return self.featurizer.dimension

    @property
    def is_fitted(self) -> bool:
        return self.classes is not None

    @abstractmethod
    def fit(self, features: np.ndarray, labels: np.ndarray):
        """Estimates the model parameters

        :param features: the (N, d) training feature matrix
        :param labels: the N integer class labels
        :returns a reference to this instance
        """
        pass

    @abstractmethod
    def predict(self, features: np.ndarray) -> np.ndarray:
        """Predicts one class label per feature row

        :param features: the (n, d) feature matrix
        :returns the n predicted labels
        """
        pass

    @abstractmethod
    def parameters(self) -> dict:
        """Retrieves every fitted numeric parameter as JSON-ready lists and floats"""
        pass

    @abstractmethod
    def load_parameters(self, parameters: dict):
        """Restores the fitted state written by parameters

        :param parameters: the dictionary produced by parameters()
        :returns a reference to this instance
        """
        pass

    def _register_classes(self, labels: np.ndarray, minimum: int = 2) -> np.ndarray:
        """Records the class labels present in the training set

        :param labels: the training labels
        :param minimum: the fewest distinct classes the model can be fitted with
        :returns the labels as an integer array
        """
        labels = np.asarray(labels).astype(np.int64).ravel()
        if labels.size == 0:
            raise DegenerateDataError("{0} cannot be fitted on an empty training set".format(self.kind))
        classes = np.unique(labels)
        if classes.size < minimum:
            raise DegenerateDataError("{0} needs at least {1} classes, the training labels hold {2}".format(
                self.kind, minimum, classes.tolist()))
        self.classes = classes
        self.num_classes = int(classes.max()) + 1
        return labels

    def _check_features(self, features: np.ndarray) -> np.ndarray:
        """Validates a feature matrix against the featurizer dimension"""
        features = np.asarray(features, dtype=np.float64)
        if features.ndim == 1:
            features = features.reshape(-1, 1)
        if features.ndim != 2 or features.shape[1] != self.dimension:
            raise ValueError("{0} expects {1} features per row, got shape {2}".format(
                self.kind, self.dimension, features.shape))
        return features

    def _check_fitted(self):
        if not self.is_fitted:
            raise ValueError("{0} model must be fitted before predicting".format(self.kind))

    def to_dict(self) -> dict:
        """Retrieves the documented JSON model schema: kind, featurizer spec and all numeric parameters"""
        self._check_fitted()
        return {
            "kind": self.kind,
            "featurizer": self.featurizer.to_dict(),
            "classes": self.classes.tolist(),
            "num_classes": self.num_classes,
            "parameters": self.parameters()
        }
