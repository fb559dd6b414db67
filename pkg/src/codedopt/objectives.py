"""Black-box objectives: evaluation-only wrappers plus test oracles."""
from __future__ import annotations

import threading
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.special import log_softmax


class BlackBoxObjective:
    """Counts every evaluation; exposes an analytic gradient only for testing.

    ``value`` is the uncounted evaluation used for bookkeeping (trace costs);
    optimizers must query through ``__call__`` / ``evaluate_many``.
    """

    def __init__(self, fn, dim, batch_fn=None, oracle_gradient=None, name="objective"):
        self._fn = fn
        self._batch_fn = batch_fn
        self.dim = int(dim)
        self.oracle_gradient = oracle_gradient
        self.name = name
        self._count = 0
        self._lock = threading.Lock()

    @property
    def eval_count(self) -> int:
        return self._count

    def _checked(self, theta):
        theta = np.asarray(theta, dtype=float)
        if theta.shape[-1] != self.dim:
            raise ValueError(f"{self.name}: expected dimension {self.dim}, got {theta.shape[-1]}")
        return theta

    def __call__(self, theta) -> float:
        theta = self._checked(theta)
        with self._lock:
            self._count += 1
        return float(self._fn(theta))

    def evaluate_many(self, thetas) -> np.ndarray:
        thetas = np.atleast_2d(self._checked(thetas))
        with self._lock:
            self._count += thetas.shape[0]
        if self._batch_fn is not None:
            return np.asarray(self._batch_fn(thetas), dtype=float)
        return np.array([self._fn(t) for t in thetas], dtype=float)

    def value(self, theta) -> float:
        return float(self._fn(self._checked(theta)))


def _check_linear(A, b):
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.ndim != 2 or b.shape != (A.shape[0],):
        raise ValueError(f"shape mismatch: A is {A.shape}, b is {b.shape}")
    return A, b


def l1_objective(A, b, kink_tol: float = 0.0) -> BlackBoxObjective:
    """``||A theta - b||_1``; the oracle subgradient refuses points on a kink."""
    A, b = _check_linear(A, b)

    def fn(theta):
        return np.abs(A @ theta - b).sum()

    def batch(thetas):
        return np.abs(thetas @ A.T - b).sum(axis=1)

    def grad(theta):
        r = A @ np.asarray(theta, dtype=float) - b
        if np.any(np.abs(r) <= kink_tol):
            raise ValueError("gradient undefined: a residual sits on a kink")
        return A.T @ np.sign(r)

    return BlackBoxObjective(fn, A.shape[1], batch, grad, name="l1")


def l2sq_objective(A, b) -> BlackBoxObjective:
    """``0.5 * ||A theta - b||^2`` with gradient ``A^T (A theta - b)``."""
    A, b = _check_linear(A, b)

    def fn(theta):
        r = A @ theta - b
        return 0.5 * (r @ r)

    def batch(thetas):
        r = thetas @ A.T - b
        return 0.5 * np.einsum("ij,ij->i", r, r)

    def grad(theta):
        return A.T @ (A @ np.asarray(theta, dtype=float) - b)

    return BlackBoxObjective(fn, A.shape[1], batch, grad, name="l2sq")


def quartic_objective(A, b, weight: float = 0.1) -> BlackBoxObjective:
    """Smooth non-quadratic test function ``0.5||A theta - b||^2 + weight * sum(theta**4)``."""
    A, b = _check_linear(A, b)

    def fn(theta):
        r = A @ theta - b
        return 0.5 * (r @ r) + weight * np.sum(theta**4)

    def batch(thetas):
        r = thetas @ A.T - b
        return 0.5 * np.einsum("ij,ij->i", r, r) + weight * np.sum(thetas**4, axis=1)

    def grad(theta):
        theta = np.asarray(theta, dtype=float)
        return A.T @ (A @ theta - b) + 4.0 * weight * theta**3

    return BlackBoxObjective(fn, A.shape[1], batch, grad, name="quartic")


@dataclass(frozen=True)
class SyntheticClassifier:
    """Fixed two-layer network ``softmax(W2 tanh(W1 x + c1) + c2)``."""

    W1: np.ndarray
    c1: np.ndarray
    W2: np.ndarray
    c2: np.ndarray

    @property
    def n_inputs(self) -> int:
        return self.W1.shape[1]

    @property
    def n_classes(self) -> int:
        return self.W2.shape[0]

    def logits(self, x):
        h = np.tanh(np.asarray(x, dtype=float) @ self.W1.T + self.c1)
        return h @ self.W2.T + self.c2

    def log_probs(self, x):
        return log_softmax(self.logits(x), axis=-1)

    def probs(self, x):
        return np.exp(self.log_probs(x))

    def predict(self, x):
        return np.argmax(self.logits(x), axis=-1)

    @classmethod
    def random(cls, seed, n_inputs=48, n_hidden=32, n_classes=10, input_scale=1.0, output_scale=1.0):
        rng = np.random.default_rng(seed)
        return cls(
            W1=input_scale * rng.standard_normal((n_hidden, n_inputs)) / np.sqrt(n_inputs),
            c1=0.1 * rng.standard_normal(n_hidden),
            W2=output_scale * rng.standard_normal((n_classes, n_hidden)),
            c2=0.1 * rng.standard_normal(n_classes),
        )

    _FILES = ("W1", "c1", "W2", "c2")

    def save(self, directory):
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        for name in self._FILES:
            write_matrix_csv(directory / f"{name}.csv", getattr(self, name))

    @classmethod
    def load(cls, directory=None):
        """Load weights from a directory of CSV files; defaults to the bundled model."""
        if directory is None:
            directory = data_path("classifier")
        directory = Path(directory)
        arrays = {name: read_matrix_csv(directory / f"{name}.csv") for name in cls._FILES}
        arrays["c1"] = arrays["c1"].ravel()
        arrays["c2"] = arrays["c2"].ravel()
        return cls(**arrays)


def _margin_terms(log_p, cls):
    others = np.delete(log_p, cls, axis=-1)
    return others.max(axis=-1), log_p[..., cls]


def _check_attack(model, theta0, cls, c, kappa):
    theta0 = np.asarray(theta0, dtype=float)
    if not 0 <= cls < model.n_classes:
        raise ValueError(f"class index {cls} out of range for {model.n_classes} classes")
    if c < 0 or kappa < 0:
        raise ValueError("c and kappa must be non-negative")
    if theta0.shape != (model.n_inputs,):
        raise ValueError(f"theta0 must have length {model.n_inputs}")
    return theta0


def targeted_attack_objective(model, theta0, target, c=0.1, kappa=0.0, literal=False) -> BlackBoxObjective:
    """Distance to ``theta0`` plus a hinge pushing class ``target`` to the top.

    With ``literal=True`` the competing classes enter as probabilities
    rather than log-probabilities.
    """
    theta0 = _check_attack(model, theta0, target, c, kappa)

    def batch(thetas):
        log_p = model.log_probs(thetas)
        best_other, log_t = _margin_terms(log_p, target)
        if literal:
            best_other = np.exp(best_other)
        hinge = np.maximum(best_other - log_t, -kappa)
        return np.sum((thetas - theta0) ** 2, axis=-1) + c * hinge

    return BlackBoxObjective(lambda t: batch(t[None])[0], model.n_inputs, batch, name="targeted_attack")


def untargeted_attack_objective(model, theta0, true_class, c=0.1, kappa=0.0) -> BlackBoxObjective:
    """Distance to ``theta0`` plus a hinge pushing ``true_class`` off the top."""
    theta0 = _check_attack(model, theta0, true_class, c, kappa)

    def batch(thetas):
        log_p = model.log_probs(thetas)
        best_other, log_t0 = _margin_terms(log_p, true_class)
        hinge = np.maximum(log_t0 - best_other, -kappa)
        return np.sum((thetas - theta0) ** 2, axis=-1) + c * hinge

    return BlackBoxObjective(lambda t: batch(t[None])[0], model.n_inputs, batch, name="untargeted_attack")


def data_path(name: str) -> Path:
    return Path(str(resources.files("codedopt") / "data" / name))


def read_matrix_csv(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", ndmin=2)


def write_matrix_csv(path, array) -> None:
    array = np.asarray(array, dtype=float)
    if array.ndim == 1:
        array = array[:, None]
    np.savetxt(path, array, delimiter=",", fmt="%.17g", newline="\n")


def load_l1_fixture():
    """The bundled 200x32 least-absolute-deviations instance ``(A, b)``."""
    A = read_matrix_csv(data_path("l1_A.csv"))
    b = read_matrix_csv(data_path("l1_b.csv")).ravel()
    return A, b
