import logging

import boxcoxseg
from boxcoxseg.models import kernels
from boxcoxseg.models.image import Palette
from boxcoxseg.models.metrics import SUPPORTED_AVERAGES
from boxcoxseg.models.segmentation import SUPPORTED_CLASSIFIERS
from boxcoxseg.models.svm import SUPPORTED_MODES as SVM_MODES
from boxcoxseg.utils.config import get_default_run_config, load_run_config
from boxcoxseg.utils.features import SUPPORTED_MODES as FEATURIZER_MODES
from boxcoxseg.utils.tables import write_json

SUPPORTED_METHODS = {"boxcox", "gamma"}


class RunConfig(object):
    """The fully materialized settings of one command: packaged defaults, then a config file, then flags"""

    def __init__(self, command: str):
        self.command = command
        self.values = {}
        self.sources = {}

    def _merge(self, values: dict, source: str):
        for key, value in values.items():
            if value is None and key in self.values:
                continue
            self.values[key] = value
            self.sources[key] = source

    def add_defaults(self):
        """Adds the packaged defaults

        :return: a reference to this instance
        """
        self._merge(get_default_run_config(), "default")
        return self

    def add_config_file(self, path: str = None):
        """Overrides defaults with the key value pairs of a JSON config file; unknown keys are rejected

        :param path: the config file, nothing is read when omitted
        :return: a reference to this instance
        """
        if not path:
            return self
        values = load_run_config(path)
        unknown = sorted(set(values) - set(get_default_run_config()))
        if unknown:
            raise ValueError("config file {0} holds unknown keys {1}".format(path, unknown))
        self._merge(values, "file")
        return self

    def add_flags(self, flags: dict):
        """Overrides everything with the command line flags that were given (None means not given)

        :param flags: flag names mapped to their parsed values
        :return: a reference to this instance
        """
        self._merge({key: value for key, value in flags.items() if value is not None}, "flag")
        return self

    def add_arguments(self, arguments: dict):
        """Records the command's own arguments (paths and other settings without a run config key)

        Arguments left out on the command line are recorded with source default.

        :param arguments: argument names mapped to their parsed values, None for arguments not given
        :return: a reference to this instance
        """
        for key, value in arguments.items():
            self.values[key] = list(value) if isinstance(value, tuple) else value
            self.sources[key] = "default" if value is None else "flag"
        return self

    def resolve_default(self, key: str, value):
        """Fills in the value a command falls back to for an argument that was not given

        :return: the recorded value of key
        """
        if self.values.get(key) is None:
            self.values[key] = list(value) if isinstance(value, tuple) else value
            self.sources[key] = "default"
        return self.values[key]

    def get(self, key: str, default=None):
        return self.values.get(key, default)

    def __getitem__(self, key: str):
        return self.values[key]

    @staticmethod
    def _parse_lambda(value):
        if isinstance(value, str) and value.strip().lower() == "mle":
            return "mle"
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ValueError("lambda must be a number or mle, got {0}".format(value))

    def _validate_args(self):
        """Validates every setting before any computation starts"""
        v = self.values
        v["lambda"] = self._parse_lambda(v["lambda"])
        if v["method"] not in SUPPORTED_METHODS:
            raise ValueError("method {0} is not one of {1}".format(v["method"], sorted(SUPPORTED_METHODS)))
        if v["shift"] < 0:
            raise ValueError("the shift must be >= 0, got {0}".format(v["shift"]))
        if not v["stretch_max"] > v["stretch_min"]:
            raise ValueError("the stretch range needs max > min, got {0}:{1}".format(
                v["stretch_min"], v["stretch_max"]))
        if not (v["gain"] > 0 and v["gamma"] > 0):
            raise ValueError("gamma correction needs gain > 0 and gamma > 0")
        if not v["bracket_lo"] < v["bracket_hi"]:
            raise ValueError("the lambda bracket needs lo < hi, got [{0}, {1}]".format(
                v["bracket_lo"], v["bracket_hi"]))
        if v["grid_points"] < 3:
            raise ValueError("the lambda grid needs at least 3 points, got {0}".format(v["grid_points"]))
        for kind in [v["classifier"]] + list(v["classifiers"]):
            if kind not in SUPPORTED_CLASSIFIERS:
                raise ValueError("classifier {0} is not one of {1}".format(kind, sorted(SUPPORTED_CLASSIFIERS)))
        if v["featurizer"] not in FEATURIZER_MODES:
            raise ValueError("featurizer {0} is not one of {1}".format(v["featurizer"], sorted(FEATURIZER_MODES)))
        if v["window"] < 3 or v["window"] % 2 == 0:
            raise ValueError("the window must be an odd integer >= 3, got {0}".format(v["window"]))
        if v["ridge"] is not None and v["ridge"] < 0:
            raise ValueError("the ridge must be >= 0, got {0}".format(v["ridge"]))
        if v["k_neighbors"] < 1:
            raise ValueError("K must be a positive integer, got {0}".format(v["k_neighbors"]))
        if v["svm_mode"] not in SVM_MODES:
            raise ValueError("SVM mode {0} is not one of {1}".format(v["svm_mode"], sorted(SVM_MODES)))
        kernels.get_kernel(v["kernel"], gamma=v["kernel_gamma"] or 1.0, coef0=v["kernel_coef0"],
                           degree=v["kernel_degree"])
        if v["sweep_points"] < 1 or (v["sweep_points"] > 1 and not v["sweep_lo"] < v["sweep_hi"]):
            raise ValueError("the sweep needs at least one point and lo < hi")
        if v["precision_average"] not in SUPPORTED_AVERAGES:
            raise ValueError("precision average {0} is not one of {1}".format(
                v["precision_average"], sorted(SUPPORTED_AVERAGES)))
        if int(v["seed"]) < 0 or int(v["workers"]) < 1:
            raise ValueError("the seed must be >= 0 and workers >= 1")
        Palette.from_string(v["palette"])

    def build(self):
        """Validates the merged settings

        :return: a reference to this instance
        """
        self._validate_args()
        logging.info("models.run_config built {0} config with {1} flag overrides".format(
            self.command, sum(1 for source in self.sources.values() if source == "flag")))
        return self

    @property
    def payload(self) -> dict:
        return dict(self.values)

    def manifest(self, outputs: dict = None, results: dict = None) -> dict:
        """The replay record of a run: every materialized setting, where it came from, outputs and results"""
        return {
            "command": self.command,
            "version": boxcoxseg.__version__,
            "config": self.payload,
            "sources": dict(self.sources),
            "outputs": outputs or {},
            "results": results or {}
        }

    def write_manifest(self, primary_output: str, outputs: dict = None, results: dict = None) -> str:
        """Writes <primary_output>.manifest.json

        :return: the manifest path
        """
        path = "{0}.manifest.json".format(primary_output)
        write_json(path, self.manifest(outputs, results))
        return path


class RunConfigBuilder(object):

    def build_from_args(self, command: str, flags: dict, config_path: str = None, arguments: dict = None) -> RunConfig:
        """Builds a validated RunConfig with flags over the config file over the packaged defaults

        :param command: the subcommand being run
        :param flags: the parsed command line flags, None for flags that were not given
        :param config_path: an optional JSON config file
        :param arguments: the command's arguments that have no run config key, recorded for replay
        :return: the validated RunConfig
        """
        config = RunConfig(command).add_defaults().add_config_file(config_path).add_flags(flags).build()
        return config.add_arguments(dict(arguments or {}, config_file=config_path))
