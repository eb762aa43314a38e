import json

from importlib import resources


class PrefilterConfig:
    SHIFT = 1.0
    STRETCH_MIN = 0.0
    STRETCH_MAX = 255.0
    LAMBDA_ZERO_THRESHOLD = 1e-8


class LambdaConfig:
    BRACKET_LO = -3.0
    BRACKET_HI = 5.0
    GRID_POINTS = 61
    GOLDEN_TOLERANCE = 1e-4
    GOLDEN_MAX_ITERATIONS = 200
    SUBSAMPLE_CAP = 2 ** 20
    SUBSAMPLE_SEED = 0


class ClassifierConfig:
    RIDGE_FACTOR = 1e-6
    K_NEIGHBORS = 5
    KNN_QUERY_CHUNK = 512
    SVM_LAMBDA_REG = 1e-3
    SVM_EPOCHS = 20
    SVM_BATCH_SIZE = 64
    SVM_C = 1.0
    SVM_CAP = 2000
    SVM_KKT_TOLERANCE = 1e-3
    SVM_OBJECTIVE_TOLERANCE = 1e-3
    SVM_MAX_PASSES = 200
    SVM_SEED = 0


class SweepDefaults:
    LAMBDA_LO = -1.0
    LAMBDA_HI = 5.0
    POINTS = 61
    SPLIT_SEED = 0


def get_default_run_config() -> dict:
    """Retrieves the packaged run config holding every default a command can be configured with

    :returns the dictionary parsed from the config JSON
    """
    config_file = resources.files('boxcoxseg').joinpath('configs/default_run_config.json')
    with config_file.open("r") as f:
        config_object = json.load(f)
    return config_object


def load_run_config(path: str) -> dict:
    """Reads a user run config; a JSON object of key value pairs overriding the packaged defaults

    :param path: the location of the JSON config file
    :returns the parsed key value pairs
    """
    with open(path, "r") as f:
        config_object = json.load(f)
    if not isinstance(config_object, dict):
        raise ValueError("run config {0} must hold a JSON object of key value pairs".format(path))
    return config_object
