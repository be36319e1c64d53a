"""Benchmark objectives, search-space wrappers and the adversarial objective.

All benchmark functions are minimized, are non-negative and equal 0 at the
optimum (the origin, or the all-ones vector for Rosenbrock).
"""

from __future__ import annotations

import math
import threading
from typing import Callable, Optional, Protocol, Sequence

import numpy as np

from .rng import GaussianStream

BENCHMARK_IDS = ("sphere", "ellipsoid", "rosenbrock", "discus", "cigar", "diffpow")


class ObjectiveFunction:
    """A counted scalar field over R^n.

    ``func`` maps one vector to a float. ``batch_func``, when given, maps a
    ``(k, n)`` array to ``k`` values and must agree with ``func`` row by row;
    :meth:`evaluate_many` charges ``k`` evaluations either way.
    """

    def __init__(
        self,
        id: str,
        n: int,
        func: Callable[[np.ndarray], float],
        batch_func: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    ):
        self.id = id
        self.n = int(n)
        self._func = func
        self._batch_func = batch_func
        self._lock = threading.Lock()
        self.evaluations = 0

    def _count(self, k: int) -> None:
        with self._lock:
            self.evaluations += k

    def _check(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.n:
            raise ValueError(f"{self.id}: expected dimension {self.n}, got {x.shape[-1]}")
        return x

    def evaluate(self, x) -> float:
        x = self._check(x)
        self._count(1)
        return float(self._func(x))

    __call__ = evaluate

    def evaluate_many(self, X) -> np.ndarray:
        X = self._check(X)
        if X.ndim != 2:
            raise ValueError("evaluate_many expects a 2-d array of row vectors")
        self._count(X.shape[0])
        if self._batch_func is not None:
            return np.asarray(self._batch_func(X), dtype=np.float64)
        return np.array([self._func(x) for x in X], dtype=np.float64)

    def reset_counter(self) -> None:
        with self._lock:
            self.evaluations = 0

    def __repr__(self) -> str:
        return f"ObjectiveFunction({self.id!r}, n={self.n})"


# Table of raw formulas. Each works on the last axis so it serves 1-d and 2-d input.

def _powers(n: int, top: float) -> np.ndarray:
    return top * np.arange(n) / (n - 1)


def _sphere(x):
    return np.sum(x * x, axis=-1)


def _ellipsoid_factory(n):
    scale = 10.0 ** _powers(n, 6.0)
    return lambda x: np.sum(scale * x * x, axis=-1)


def _rosenbrock(x):
    head, tail = x[..., :-1], x[..., 1:]
    return np.sum(100.0 * (head * head - tail) ** 2 + (head - 1.0) ** 2, axis=-1)


def _discus(x):
    return 1e6 * x[..., 0] ** 2 + np.sum(x[..., 1:] ** 2, axis=-1)


def _cigar(x):
    return x[..., 0] ** 2 + 1e6 * np.sum(x[..., 1:] ** 2, axis=-1)


def _diffpow_factory(n):
    exponents = 2.0 + _powers(n, 4.0)
    return lambda x: np.sum(np.abs(x) ** exponents, axis=-1)


def make_benchmark(id: str, n: int) -> ObjectiveFunction:
    """Build one of the six benchmark functions in dimension ``n``.

    Sphere accepts ``n >= 1``; the others need ``n >= 2``.
    """
    if id not in BENCHMARK_IDS:
        raise ValueError(f"unknown function id {id!r}; choose from {', '.join(BENCHMARK_IDS)}")
    n = int(n)
    minimum = 1 if id == "sphere" else 2
    if n < minimum:
        raise ValueError(f"{id} needs n >= {minimum}, got {n}")
    if id == "ellipsoid":
        f = _ellipsoid_factory(n)
    elif id == "diffpow":
        f = _diffpow_factory(n)
    else:
        f = {"sphere": _sphere, "rosenbrock": _rosenbrock, "discus": _discus, "cigar": _cigar}[id]
    return ObjectiveFunction(id, n, f, f)


def optimum(id: str, n: int) -> np.ndarray:
    return np.ones(n) if id == "rosenbrock" else np.zeros(n)


def make_rotation(n: int, seed: int) -> np.ndarray:
    """Random orthogonal matrix with uniformly distributed unit columns.

    Columns of a Gaussian matrix are orthonormalized one at a time with
    classical Gram-Schmidt followed by a second projection pass. A column
    whose residual collapses is redrawn.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    stream = GaussianStream(seed)
    Q = np.empty((n, n))
    for j in range(n):
        while True:
            v = stream.next_normal_vector(n)
            norm0 = np.linalg.norm(v)
            for _ in range(2):
                basis = Q[:, :j]
                v = v - basis @ (basis.T @ v)
            norm = np.linalg.norm(v)
            if norm > 1e-8 * norm0:
                break
        Q[:, j] = v / norm
    return Q


def rotate_wrap(f: ObjectiveFunction, R: np.ndarray) -> ObjectiveFunction:
    """x -> f(R x)."""
    R = np.asarray(R, dtype=np.float64)
    if R.shape != (f.n, f.n):
        raise ValueError(f"rotation shape {R.shape} does not match dimension {f.n}")
    inner, inner_batch = f._func, f._batch_func
    batch = None if inner_batch is None else (lambda X: inner_batch(X @ R.T))
    return ObjectiveFunction(f"rot-{f.id}", f.n, lambda x: inner(R @ x), batch)


def translate_wrap(f: ObjectiveFunction, offset) -> ObjectiveFunction:
    """x -> f(x - offset)."""
    offset = np.asarray(offset, dtype=np.float64)
    if offset.shape != (f.n,):
        raise ValueError(f"offset shape {offset.shape} does not match dimension {f.n}")
    inner, inner_batch = f._func, f._batch_func
    batch = None if inner_batch is None else (lambda X: inner_batch(X - offset))
    return ObjectiveFunction(f"shift-{f.id}", f.n, lambda x: inner(x - offset), batch)


def monotone_wrap(f: ObjectiveFunction, g: Callable, vectorized: bool = True) -> ObjectiveFunction:
    """x -> g(f(x)) for a strictly increasing ``g``.

    With ``vectorized`` the batch path applies ``g`` to the whole value array
    (fine for numpy ufuncs such as ``np.cbrt``).
    """
    inner, inner_batch = f._func, f._batch_func
    batch = None
    if inner_batch is not None:
        if vectorized:
            batch = lambda X: g(inner_batch(X))  # noqa: E731
        else:
            batch = lambda X: np.array([g(v) for v in inner_batch(X)])  # noqa: E731
    return ObjectiveFunction(f"mono-{f.id}", f.n, lambda x: g(inner(x)), batch)


class ClassifierOracle(Protocol):
    n: int
    classes: int

    def predict_proba(self, x: np.ndarray) -> np.ndarray: ...


class BoxClassifier:
    """Piecewise-constant classifier over axis-aligned boxes.

    The first box containing ``x`` decides the probability vector; points in
    no box get ``default``. Boxes are half-open ``[lower, upper)``.
    """

    def __init__(self, n: int, default: Sequence[float], boxes=()):
        self.n = int(n)
        self.default = self._normalize(default)
        self.classes = len(self.default)
        self.boxes = []
        for lower, upper, proba in boxes:
            lower = np.asarray(lower, dtype=np.float64)
            upper = np.asarray(upper, dtype=np.float64)
            if lower.shape != (self.n,) or upper.shape != (self.n,):
                raise ValueError("box bounds must have length n")
            proba = self._normalize(proba)
            if len(proba) != self.classes:
                raise ValueError("every probability vector needs the same class count")
            self.boxes.append((lower, upper, proba))

    @staticmethod
    def _normalize(p) -> np.ndarray:
        p = np.asarray(p, dtype=np.float64)
        if p.ndim != 1 or np.any(p < 0) or p.sum() <= 0:
            raise ValueError("probability vector must be non-negative with positive mass")
        return p / p.sum()

    def predict_proba(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        for lower, upper, proba in self.boxes:
            if np.all(x >= lower) and np.all(x < upper):
                return proba.copy()
        return self.default.copy()

    @classmethod
    def random(cls, n: int, classes: int, boxes: int, seed: int, width: float = 1.0):
        """Random stub: ``boxes`` boxes of side ``width`` with random label votes."""
        rng = np.random.default_rng(seed)
        layout = []
        for _ in range(boxes):
            lower = rng.uniform(-2.0, 2.0, n)
            layout.append((lower, lower + width, rng.dirichlet(np.ones(classes))))
        return cls(n, rng.dirichlet(np.ones(classes)), layout)


def predicted_class(proba: np.ndarray) -> int:
    """Argmax with ties broken toward the smallest index."""
    return int(np.argmax(proba))


def classified_as(proba: np.ndarray, label: int) -> bool:
    # a tie involving the label counts as classified as the label
    others = np.delete(proba, label)
    return others.size == 0 or proba[label] >= others.max()


def adversarial_objective(oracle: ClassifierOracle, x0, y0: int) -> ObjectiveFunction:
    """Objective rewarding misclassified points close to ``x0``.

    Correctly classified inputs score the margin ``h(x)[y0] - max_{i != y0} h(x)[i]``
    (non-negative); misclassified inputs score ``-1 / ||x - x0||``, with
    ``-inf`` at zero distance.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.shape != (oracle.n,):
        raise ValueError(f"x0 has shape {x0.shape}, oracle expects ({oracle.n},)")
    if not 0 <= y0 < oracle.classes:
        raise ValueError(f"class index {y0} outside [0, {oracle.classes})")

    def f(x):
        h = np.asarray(oracle.predict_proba(x), dtype=np.float64)
        if classified_as(h, y0):
            return float(h[y0] - np.delete(h, y0).max()) if h.size > 1 else float(h[y0])
        dist = float(np.linalg.norm(x - x0))
        return -math.inf if dist == 0.0 else -1.0 / dist

    return ObjectiveFunction("adversarial", oracle.n, f)
