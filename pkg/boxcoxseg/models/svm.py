import logging

import numpy as np

from boxcoxseg.models.classifier import Classifier
from boxcoxseg.models.kernels import get_kernel
from boxcoxseg.utils.config import ClassifierConfig
from boxcoxseg.utils.features import FeaturizerSpec

SUPPORTED_MODES = {"linear", "kernel"}


def _linear_machine(features: np.ndarray, targets: np.ndarray, lambda_reg: float, epochs: int,
                    batch_size: int, rng: np.random.Generator) -> tuple:
    """Mini-batch subgradient descent on hinge loss + (lambda_reg / 2) * ||w||^2

    Step sizes follow 1 / (lambda_reg * (t + t0)) with t0 = 1 / lambda_reg, w is projected onto the ball of
    radius 1 / sqrt(lambda_reg) and the returned w, b average the iterates of the final epoch.

    :return: w, b and the diagnostics of the run
    """
    n, d = features.shape
    w, b = np.zeros(d), 0.0
    radius = 1.0 / np.sqrt(lambda_reg)
    offset = 1.0 / lambda_reg
    step = 0
    objectives = []
    w_avg, b_avg = w, b
    for _ in range(epochs):
        w_sum, b_sum, updates = np.zeros(d), 0.0, 0
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            batch = order[start:start + batch_size]
            step += 1
            eta = 1.0 / (lambda_reg * (step + offset))
            x, t = features[batch], targets[batch]
            active = t * (x @ w + b) < 1.0
            grad_w = lambda_reg * w - (t[active, None] * x[active]).sum(axis=0) / batch.size
            grad_b = -t[active].sum() / batch.size
            w = w - eta * grad_w
            b = b - eta * grad_b
            norm = np.linalg.norm(w)
            if norm > radius:
                w = w * (radius / norm)
            w_sum += w
            b_sum += b
            updates += 1
        w_avg, b_avg = w_sum / updates, b_sum / updates
        hinge = np.maximum(0.0, 1.0 - targets * (features @ w_avg + b_avg)).mean()
        objectives.append(float(0.5 * lambda_reg * (w_avg @ w_avg) + hinge))
    change = 0.0
    if len(objectives) > 1:
        change = abs(objectives[-1] - objectives[-2]) / max(abs(objectives[-2]), 1e-12)
    diagnostics = {
        "epochs": epochs,
        "objective": objectives[-1] if objectives else None,
        "relative_change": change,
        "converged": bool(objectives) and change < ClassifierConfig.SVM_OBJECTIVE_TOLERANCE
    }
    return w_avg, float(b_avg), diagnostics


def _dual_machine(features: np.ndarray, targets: np.ndarray, kernel, c: float, tolerance: float,
                  max_passes: int, rng: np.random.Generator) -> tuple:
    """Coordinate ascent on the box-constrained dual, 0 <= alpha_i <= C

    The bias is folded into the kernel as K + 1, so b = sum(alpha_i * t_i) and no equality constraint remains.
    Passes visit the coordinates in a seeded order until the largest projected gradient is below the tolerance.

    :return: support rows, dual coefficients alpha_i * t_i, b and the diagnostics of the run
    """
    n = targets.size
    q = (kernel.gram(features, features) + 1.0) * np.outer(targets, targets)
    diagonal = np.maximum(np.diag(q), 1e-12)
    alpha = np.zeros(n)
    q_alpha = np.zeros(n)
    violation = np.inf
    passes = 0
    while passes < max_passes and violation >= tolerance:
        passes += 1
        violation = 0.0
        for i in rng.permutation(n):
            gradient = q_alpha[i] - 1.0
            if alpha[i] <= 0.0:
                projected = min(gradient, 0.0)
            elif alpha[i] >= c:
                projected = max(gradient, 0.0)
            else:
                projected = gradient
            violation = max(violation, abs(projected))
            if projected == 0.0:
                continue
            updated = min(max(alpha[i] - gradient / diagonal[i], 0.0), c)
            delta = updated - alpha[i]
            if delta != 0.0:
                q_alpha += delta * q[i]
                alpha[i] = updated
    support = alpha > 0.0
    coefficients = alpha[support] * targets[support]
    diagnostics = {
        "passes": passes,
        "kkt_violation": float(violation),
        "support_vectors": int(support.sum()),
        "converged": bool(violation < tolerance)
    }
    return features[support], coefficients, float(coefficients.sum()), diagnostics


def _capped_rows(labels: np.ndarray, cap: int, rng: np.random.Generator) -> np.ndarray:
    """Stratified subsample of at most cap rows keeping every class represented"""
    if labels.size <= cap:
        return np.arange(labels.size)
    classes, counts = np.unique(labels, return_counts=True)
    if classes.size > cap:
        raise ValueError("a cap of {0} rows cannot keep all {1} classes".format(cap, classes.size))
    # largest remainder apportionment of the cap, at least one row per class
    shares = cap * counts / labels.size
    quotas = np.maximum(np.floor(shares).astype(int), 1)
    remainders = shares - np.floor(shares)
    leftover = cap - int(quotas.sum())
    for index in np.argsort(-remainders, kind="stable"):
        if leftover <= 0:
            break
        if quotas[index] < counts[index]:
            quotas[index] += 1
            leftover -= 1
    while leftover < 0:
        quotas[int(np.argmax(quotas))] -= 1
        leftover += 1
    rows = [np.sort(rng.choice(np.flatnonzero(labels == label), size=int(take), replace=False))
            for label, take in zip(classes, quotas)]
    return np.sort(np.concatenate(rows))


class SvmModel(Classifier):
    """Support vector machine: linear primal or kernel dual, one-vs-rest beyond two classes

    Features are standardized with the training mean and standard deviation before either solver runs.
    """

    kind = "SVM"

    def __init__(self, featurizer: FeaturizerSpec = None, mode: str = "linear",
                 lambda_reg: float = ClassifierConfig.SVM_LAMBDA_REG, epochs: int = ClassifierConfig.SVM_EPOCHS,
                 batch_size: int = ClassifierConfig.SVM_BATCH_SIZE, c: float = ClassifierConfig.SVM_C,
                 cap: int = ClassifierConfig.SVM_CAP, kernel: str = "rbf", kernel_gamma: float = None,
                 kernel_coef0: float = 0.0, kernel_degree: int = 3, seed: int = ClassifierConfig.SVM_SEED):
        super().__init__(featurizer)
        self.mode = mode
        self.lambda_reg = float(lambda_reg)
        self.epochs = int(epochs)
        self.batch_size = int(batch_size)
        self.c = float(c)
        self.cap = int(cap)
        gamma = 1.0 / self.dimension if kernel_gamma is None else kernel_gamma
        self.kernel = get_kernel(kernel, gamma=gamma, coef0=kernel_coef0, degree=kernel_degree)
        self.seed = int(seed)
        self._validate_args()
        self.mean = None
        self.scale = None
        self.machines = []
        self.diagnostics = []

    def _validate_args(self):
        if self.mode not in SUPPORTED_MODES:
            raise ValueError("SVM mode {0} is not one of {1}".format(self.mode, sorted(SUPPORTED_MODES)))
        if not self.lambda_reg > 0:
            raise ValueError("the SVM regularization must be > 0, got {0}".format(self.lambda_reg))
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("SVM epochs and batch size must be positive")
        if not self.c > 0:
            raise ValueError("the SVM box constraint C must be > 0, got {0}".format(self.c))
        if self.cap < 2:
            raise ValueError("the SVM training cap must be at least 2, got {0}".format(self.cap))

    @classmethod
    def from_config(cls, config: dict, featurizer: FeaturizerSpec = None):
        """Instantiates an SVM from run config keys (svm_mode, svm_lambda_reg, svm_epochs, svm_c, svm_cap,
        kernel, kernel_gamma, kernel_coef0, kernel_degree, seed)"""
        config = config or {}
        return cls(featurizer,
                   mode=config.get("svm_mode", "linear"),
                   lambda_reg=config.get("svm_lambda_reg", ClassifierConfig.SVM_LAMBDA_REG),
                   epochs=config.get("svm_epochs", ClassifierConfig.SVM_EPOCHS),
                   c=config.get("svm_c", ClassifierConfig.SVM_C),
                   cap=config.get("svm_cap", ClassifierConfig.SVM_CAP),
                   kernel=config.get("kernel", "rbf"),
                   kernel_gamma=config.get("kernel_gamma"),
                   kernel_coef0=config.get("kernel_coef0", 0.0),
                   kernel_degree=config.get("kernel_degree", 3),
                   seed=config.get("seed", ClassifierConfig.SVM_SEED))

    def _standardize(self, features: np.ndarray) -> np.ndarray:
        return (features - self.mean) / self.scale

    def _binary_targets(self) -> list:
        """The positive class of every machine: the larger label for two classes, each class for one-vs-rest"""
        if self.classes.size == 2:
            return [self.classes[1]]
        return list(self.classes)

    def fit(self, features: np.ndarray, labels: np.ndarray):
        """Trains one binary machine for two classes, one machine per class otherwise

        Non-converged machines are logged and recorded in self.diagnostics; the model is still usable.

        :param features: the (N, d) training feature matrix
        :param labels: the N integer labels, {-1, 1} or any set of at least two classes
        :returns a reference to this instance
        """
        features = self._check_features(features)
        labels = self._register_classes(labels)
        if features.shape[0] != labels.size:
            raise ValueError("{0} feature rows for {1} labels".format(features.shape[0], labels.size))
        self.mean = features.mean(axis=0)
        scale = features.std(axis=0)
        self.scale = np.where(scale > 0, scale, 1.0)
        standardized = self._standardize(features)
        rng = np.random.default_rng(self.seed)
        if self.mode == "kernel":
            rows = _capped_rows(labels, self.cap, rng)
            standardized, labels = standardized[rows], labels[rows]
        self.machines, self.diagnostics = [], []
        for positive in self._binary_targets():
            targets = np.where(labels == positive, 1.0, -1.0)
            if self.mode == "linear":
                w, b, diagnostics = _linear_machine(standardized, targets, self.lambda_reg, self.epochs,
                                                    self.batch_size, rng)
                self.machines.append({"w": w, "b": b})
            else:
                support, coefficients, b, diagnostics = _dual_machine(
                    standardized, targets, self.kernel, self.c, ClassifierConfig.SVM_KKT_TOLERANCE,
                    ClassifierConfig.SVM_MAX_PASSES, rng)
                self.machines.append({"support_vectors": support, "dual_coef": coefficients, "b": b})
            diagnostics["positive_class"] = int(positive)
            if not diagnostics["converged"]:
                logging.warning("models.svm machine for class {0} did not converge: {1}".format(
                    positive, diagnostics))
            self.diagnostics.append(diagnostics)
        logging.info("models.svm fitted {0} {1} machine(s) on {2} pixels".format(
            len(self.machines), self.mode, labels.size))
        return self

    def decision_function(self, features: np.ndarray) -> np.ndarray:
        """Evaluates every machine on every row

        :param features: the (n, d) feature matrix
        :return: an (n, M) matrix of decision values, one column per machine
        """
        self._check_fitted()
        standardized = self._standardize(self._check_features(features))
        columns = []
        for machine in self.machines:
            if self.mode == "linear":
                columns.append(standardized @ machine["w"] + machine["b"])
            else:
                gram = self.kernel.gram(standardized, machine["support_vectors"])
                columns.append(gram @ machine["dual_coef"] + machine["b"])
        return np.column_stack(columns)

    def predict(self, features: np.ndarray) -> np.ndarray:
        """Binary: the positive class where w.x + b > 0; one-vs-rest: the largest decision value, lowest on ties"""
        decisions = self.decision_function(features)
        if self.classes.size == 2:
            return np.where(decisions[:, 0] > 0, self.classes[1], self.classes[0])
        return self.classes[np.argmax(decisions, axis=1)]

    def parameters(self) -> dict:
        machines = []
        for machine in self.machines:
            machines.append({key: value.tolist() if isinstance(value, np.ndarray) else value
                             for key, value in machine.items()})
        return {
            "mode": self.mode,
            "lambda_reg": self.lambda_reg,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "c": self.c,
            "cap": self.cap,
            "kernel": self.kernel.to_dict(),
            "seed": self.seed,
            "mean": self.mean.tolist(),
            "scale": self.scale.tolist(),
            "machines": machines,
            "diagnostics": self.diagnostics
        }

    def load_parameters(self, parameters: dict):
        self.mode = parameters["mode"]
        self.lambda_reg = parameters["lambda_reg"]
        self.epochs = parameters["epochs"]
        self.batch_size = parameters["batch_size"]
        self.c = parameters["c"]
        self.cap = parameters["cap"]
        kernel = dict(parameters["kernel"])
        self.kernel = get_kernel(kernel.pop("kernel"), **kernel)
        self.seed = parameters["seed"]
        self._validate_args()
        self.mean = np.asarray(parameters["mean"], dtype=np.float64)
        self.scale = np.asarray(parameters["scale"], dtype=np.float64)
        self.machines = []
        for machine in parameters["machines"]:
            if self.mode == "linear":
                self.machines.append({"w": np.asarray(machine["w"], dtype=np.float64), "b": machine["b"]})
            else:
                self.machines.append({
                    "support_vectors": np.asarray(machine["support_vectors"],
                                                  dtype=np.float64).reshape(-1, self.dimension),
                    "dual_coef": np.asarray(machine["dual_coef"], dtype=np.float64),
                    "b": machine["b"]
                })
        self.diagnostics = parameters.get("diagnostics", [])
        return self


def fit_svm(features: np.ndarray, labels: np.ndarray, config: dict = None,
            featurizer: FeaturizerSpec = None) -> SvmModel:
    """Trains an SVM from run config keys

    :param features: the (N, d) training features
    :param labels: the training labels, {-1, 1} for a single binary machine
    :param config: run config keys, see SvmModel.from_config
    :param featurizer: the featurizer the features came from, derived from d when omitted
    :return: the fitted SvmModel
    """
    features = np.asarray(features, dtype=np.float64)
    if features.ndim == 1:
        features = features.reshape(-1, 1)
    featurizer = featurizer or FeaturizerSpec("intensity" if features.shape[1] == 1 else "window")
    return SvmModel.from_config(config, featurizer).fit(features, labels)
