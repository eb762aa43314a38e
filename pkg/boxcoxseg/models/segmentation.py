import json
import logging

import numpy as np

from boxcoxseg.models.classifier import Classifier
from boxcoxseg.models.discriminant import LinearDiscriminant, QuadraticDiscriminant
from boxcoxseg.models.image import GrayImage, LabelMask
from boxcoxseg.models.knn import KnnModel
from boxcoxseg.models.svm import SvmModel
from boxcoxseg.utils.config import ClassifierConfig
from boxcoxseg.utils.errors import RasterError
from boxcoxseg.utils.executor import ordered_map
from boxcoxseg.utils.features import FeaturizerSpec, featurize

SUPPORTED_CLASSIFIERS = {"LDA", "QDA", "KNN", "SVM"}

# pixels predicted per parallel task
_PREDICT_CHUNK = 65536


def get_classifier(kind: str, supported_classifiers: set = None):
    """Retrieve a classifier class to instantiate from the given name and set of supported kinds

    :param kind: the kind of classifier to retrieve
    :param supported_classifiers: a set of supported kinds that can be retrieved
    :returns a reference to a Classifier class that can be instantiated by the client
    """
    if not supported_classifiers:
        supported_classifiers = SUPPORTED_CLASSIFIERS
    if kind not in supported_classifiers:
        raise ValueError(
            "the given classifier kind of {0} is not one of the supported classifiers: {1}".format(
                kind, sorted(supported_classifiers))
        )
    kind_to_class_map = {
        "LDA": LinearDiscriminant,
        "QDA": QuadraticDiscriminant,
        "KNN": KnnModel,
        "SVM": SvmModel
    }
    return kind_to_class_map[kind]


def build_classifier(kind: str, featurizer: FeaturizerSpec, config: dict = None) -> Classifier:
    """Instantiates an unfitted classifier configured from run config keys

    :param kind: one of LDA, QDA, KNN, SVM
    :param featurizer: the featurizer the classifier will be fitted on
    :param config: run config keys (ridge, k_neighbors, svm_* and kernel_* settings)
    :returns the classifier
    """
    config = config or {}
    classifier_class = get_classifier(kind)
    if classifier_class is KnnModel:
        return KnnModel(featurizer, config.get("k_neighbors", ClassifierConfig.K_NEIGHBORS))
    if classifier_class is SvmModel:
        return SvmModel.from_config(config, featurizer)
    return classifier_class(featurizer, ridge=config.get("ridge"))


def predict_features(model: Classifier, features: np.ndarray, workers: int = 1, executor=None) -> np.ndarray:
    """Predicts feature rows in fixed chunks, possibly concurrently; the result does not depend on workers

    :param model: a fitted classifier
    :param features: the (n, d) feature matrix
    :param workers: threads predicting chunks of rows
    :param executor: an optional injected executor
    :returns the n predicted labels
    """
    if features.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    chunks = [features[start:start + _PREDICT_CHUNK] for start in range(0, features.shape[0], _PREDICT_CHUNK)]
    return np.concatenate(ordered_map(model.predict, chunks, workers, executor))


def segment_image(img: GrayImage, model: Classifier, spec: FeaturizerSpec, workers: int = 1,
                  executor=None, num_classes: int = None, class_names: list = None) -> LabelMask:
    """Featurizes an image and predicts the label of every pixel

    :param img: the (prefiltered) gray image
    :param model: a fitted classifier
    :param spec: the featurizer to apply, which must be the one the model was fitted with
    :param workers: threads predicting chunks of pixels
    :param executor: an optional injected executor
    :param num_classes: the class count of the mask, at least the one the model was fitted with
    :param class_names: optional names of the mask classes
    :returns a LabelMask with the dimensions of the image
    """
    if spec != model.featurizer:
        raise ValueError("the model was fitted with {0} but segmentation was asked for {1}".format(
            model.featurizer, spec))
    labels = predict_features(model, featurize(img, spec), workers, executor).reshape(img.shape)
    return LabelMask(labels, max(num_classes or 0, model.num_classes), class_names)


def model_from_dict(payload: dict) -> Classifier:
    """Rebuilds a fitted classifier from its JSON model schema

    :param payload: the dictionary written by Classifier.to_dict
    :returns the classifier
    """
    classifier_class = get_classifier(payload["kind"])
    featurizer = FeaturizerSpec.from_dict(payload["featurizer"])
    if classifier_class is SvmModel:
        kernel = payload["parameters"]["kernel"]
        model = SvmModel(featurizer, mode=payload["parameters"]["mode"], kernel=kernel["kernel"],
                         kernel_gamma=kernel["gamma"], kernel_coef0=kernel["coef0"], kernel_degree=kernel["degree"])
    else:
        model = classifier_class(featurizer)
    model.classes = np.asarray(payload["classes"], dtype=np.int64)
    model.num_classes = int(payload["num_classes"])
    return model.load_parameters(payload["parameters"])


def save_model(model: Classifier, path: str):
    """Writes a fitted classifier as JSON; floats are written with their shortest exact representation

    :param model: the fitted classifier
    :param path: the destination file
    """
    try:
        with open(path, "w") as f:
            json.dump(model.to_dict(), f, indent=2)
    except OSError as e:
        logging.critical("models.segmentation.save_model could not write {0}".format(path))
        logging.exception(e)
        raise RasterError("could not write model file {0}: {1}".format(path, e)) from e
    logging.info("models.segmentation.save_model wrote {0} model to {1}".format(model.kind, path))


def load_model(path: str) -> Classifier:
    """Reads a classifier written by save_model

    :param path: the model file
    :returns the fitted classifier
    """
    try:
        with open(path, "r") as f:
            payload = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        logging.critical("models.segmentation.load_model could not read {0}".format(path))
        logging.exception(e)
        raise RasterError("could not read model file {0}: {1}".format(path, e)) from e
    return model_from_dict(payload)
