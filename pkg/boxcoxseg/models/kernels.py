import numpy as np


class Kernel(object):

    name = "base"

    def __init__(self, gamma: float = 1.0, coef0: float = 0.0, degree: int = 3):
        self.gamma = float(gamma)
        self.coef0 = float(coef0)
        self.degree = int(degree)
        self._validate_args()

    def _validate_args(self):
        """Validates the kernel parameters before the kernel is used"""
        pass

    def gram(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Evaluates the kernel between every row of x and every row of y

        :param x: an (m, d) matrix
        :param y: an (n, d) matrix
        :return: the (m, n) kernel matrix
        """
        raise NotImplementedError

    def __call__(self, x, y) -> float:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        y = np.atleast_2d(np.asarray(y, dtype=np.float64))
        return float(self.gram(x, y)[0, 0])

    def to_dict(self) -> dict:
        return {"kernel": self.name, "gamma": self.gamma, "coef0": self.coef0, "degree": self.degree}


class LinearKernel(Kernel):

    name = "linear"

    def gram(self, x, y):
        return x @ y.T


class PolynomialKernel(Kernel):

    name = "polynomial"

    def _validate_args(self):
        if not self.gamma > 0:
            raise ValueError("the polynomial kernel needs gamma > 0, got {0}".format(self.gamma))
        if self.degree < 1:
            raise ValueError("the polynomial kernel needs a positive integer degree, got {0}".format(self.degree))
        if self.coef0 < 0:
            raise ValueError("the polynomial kernel needs r >= 0, got {0}".format(self.coef0))

    def gram(self, x, y):
        return (self.gamma * (x @ y.T) + self.coef0) ** self.degree


class RbfKernel(Kernel):

    name = "rbf"

    def _validate_args(self):
        if not self.gamma > 0:
            raise ValueError("the RBF kernel needs gamma > 0, got {0}".format(self.gamma))

    def gram(self, x, y):
        squared = (x * x).sum(axis=1)[:, None] + (y * y).sum(axis=1)[None, :] - 2.0 * (x @ y.T)
        return np.exp(-self.gamma * np.maximum(squared, 0.0))


class SigmoidKernel(Kernel):

    name = "sigmoid"

    def _validate_args(self):
        if not self.gamma > 0:
            raise ValueError("the sigmoid kernel needs gamma > 0, got {0}".format(self.gamma))

    def gram(self, x, y):
        return np.tanh(self.gamma * (x @ y.T) + self.coef0)


def get_kernel(kernel_name: str, **params) -> Kernel:
    """Factory function for the kernels an SVM can be trained with

    :param kernel_name: one of linear, polynomial, rbf, sigmoid
    :param params: gamma, coef0 (r) and degree as the kernel requires
    :return: an instantiated kernel
    """
    kernel_types = [LinearKernel, PolynomialKernel, RbfKernel, SigmoidKernel]
    kernel_map = {kernel.name: kernel for kernel in kernel_types}
    if kernel_name not in kernel_map:
        raise ValueError("kernel {0} is not one of the supported kernels: {1}".format(
            kernel_name, sorted(kernel_map)))
    return kernel_map[kernel_name](**params)


def kernel_eval(kind: str, params: dict, x, x_prime) -> float:
    """Evaluates one kernel function on a pair of feature vectors

    :param kind: the kernel name
    :param params: the kernel parameters (gamma, coef0, degree)
    :param x: the first feature vector
    :param x_prime: the second feature vector
    :return: K(x, x')
    """
    return get_kernel(kind, **params)(x, x_prime)
