import logging

import numpy as np

from boxcoxseg.models.classifier import Classifier
from boxcoxseg.utils.config import ClassifierConfig
from boxcoxseg.utils.errors import DegenerateDataError
from boxcoxseg.utils.features import FeaturizerSpec

# upper bound on the number of query x train distances held at once
_DISTANCE_BUDGET = 2 ** 24


class KnnModel(Classifier):
    """Majority vote of the K nearest training pixels under squared Euclidean distance

    Equal distances are resolved by preferring the lower training row; equal votes go to the smallest label.
    """

    kind = "KNN"

    def __init__(self, featurizer: FeaturizerSpec = None, k_neighbors: int = ClassifierConfig.K_NEIGHBORS):
        super().__init__(featurizer)
        if int(k_neighbors) < 1:
            raise ValueError("K must be a positive integer, got {0}".format(k_neighbors))
        self.k_neighbors = int(k_neighbors)
        self.train_features = None
        self.train_labels = None

    def fit(self, features: np.ndarray, labels: np.ndarray):
        """Stores the training set

        :param features: the (N, d) training feature matrix
        :param labels: the N integer class labels
        :returns a reference to this instance
        """
        features = self._check_features(features)
        if features.shape[0] == 0:
            raise DegenerateDataError("KNN cannot be fitted on an empty training set")
        labels = self._register_classes(labels, minimum=1)
        if features.shape[0] != labels.size:
            raise ValueError("{0} feature rows for {1} labels".format(features.shape[0], labels.size))
        if self.k_neighbors > labels.size:
            raise ValueError("K = {0} exceeds the {1} training pixels".format(self.k_neighbors, labels.size))
        self.train_features = features.copy()
        self.train_labels = labels
        logging.info("models.knn stored {0} training pixels with K = {1}".format(labels.size, self.k_neighbors))
        return self

    def _chunk_rows(self) -> int:
        n_train, d = self.train_features.shape
        return int(max(1, min(ClassifierConfig.KNN_QUERY_CHUNK, _DISTANCE_BUDGET // max(1, n_train * d))))

    def _neighbors(self, queries: np.ndarray) -> np.ndarray:
        """Finds the K nearest training rows of every query, lower rows first among equal distances

        :param queries: an (m, d) block of query rows
        :return: an (m, K) matrix of training row indices
        """
        k = self.k_neighbors
        differences = queries[:, None, :] - self.train_features[None, :, :]
        distances = np.einsum("mnd,mnd->mn", differences, differences)
        if k == distances.shape[1]:
            return np.broadcast_to(np.arange(k), (queries.shape[0], k))
        kth = np.partition(distances, k - 1, axis=1)[:, k - 1:k]
        closer = distances < kth
        # fill what remains of K with the lowest-index rows sitting exactly at the kth distance
        needed = k - closer.sum(axis=1, keepdims=True)
        at_kth = distances == kth
        chosen = closer | (at_kth & (np.cumsum(at_kth, axis=1) <= needed))
        rows = np.nonzero(chosen)[1]
        return rows.reshape(queries.shape[0], k)

    def votes(self, features: np.ndarray) -> np.ndarray:
        """Counts the neighbour labels of every row

        :param features: the (n, d) feature matrix
        :return: an (n, C) vote matrix, columns ordered as self.classes
        """
        self._check_fitted()
        features = self._check_features(features)
        class_index = np.searchsorted(self.classes, self.train_labels)
        one_hot = np.eye(self.classes.size, dtype=np.int64)[class_index]
        chunk = self._chunk_rows()
        votes = np.empty((features.shape[0], self.classes.size), dtype=np.int64)
        for start in range(0, features.shape[0], chunk):
            neighbors = self._neighbors(features[start:start + chunk])
            votes[start:start + chunk] = one_hot[neighbors].sum(axis=1)
        return votes

    def predict(self, features: np.ndarray) -> np.ndarray:
        return self.classes[np.argmax(self.votes(features), axis=1)]

    def predict_proba(self, features: np.ndarray) -> np.ndarray:
        """Retrieves the share of the K neighbours voting for each class

        :param features: the (n, d) feature matrix
        :return: an (n, C) matrix whose rows sum to 1
        """
        return self.votes(features) / float(self.k_neighbors)

    def parameters(self) -> dict:
        return {
            "k_neighbors": self.k_neighbors,
            "train_features": self.train_features.tolist(),
            "train_labels": self.train_labels.tolist()
        }

    def load_parameters(self, parameters: dict):
        self.k_neighbors = int(parameters["k_neighbors"])
        self.train_features = np.asarray(parameters["train_features"], dtype=np.float64).reshape(-1, self.dimension)
        self.train_labels = np.asarray(parameters["train_labels"], dtype=np.int64)
        return self


def fit_knn(features: np.ndarray, labels: np.ndarray, k_neighbors: int = ClassifierConfig.K_NEIGHBORS,
            featurizer: FeaturizerSpec = None) -> KnnModel:
    """Stores a training set for K nearest neighbour prediction

    :param features: the (N, d) training features
    :param labels: the N training labels
    :param k_neighbors: K
    :param featurizer: the featurizer the features came from, derived from d when omitted
    :return: the fitted KnnModel
    """
    features = np.asarray(features, dtype=np.float64)
    if features.ndim == 1:
        features = features.reshape(-1, 1)
    featurizer = featurizer or FeaturizerSpec("intensity" if features.shape[1] == 1 else "window")
    return KnnModel(featurizer, k_neighbors).fit(features, labels)


def predict_knn(model: KnnModel, features: np.ndarray) -> np.ndarray:
    return model.predict(features)
