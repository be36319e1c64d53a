"""Internal cost per sampled solution, excluding objective evaluation."""

from __future__ import annotations

import csv
import math
import statistics
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..objectives import ObjectiveFunction
from ..rng import GaussianStream
from ..strategies import EvolutionStrategy, default_hyperparameters


@dataclass
class TimingRow:
    n: int
    strategy: str
    ns_per_sample: float
    reps: list = field(default_factory=list)


def dummy_objective(n: int) -> ObjectiveFunction:
    """Constant objective: every candidate scores 0."""
    return ObjectiveFunction("dummy", n, lambda x: 0.0, lambda X: np.zeros(X.shape[0]))


def _cycle(es: EvolutionStrategy, stream: GaussianStream, objective: ObjectiveFunction) -> tuple[int, int]:
    t0 = time.perf_counter_ns()
    z, d = es.ask(stream)
    x = es.candidates(d)
    t1 = time.perf_counter_ns()
    f = objective.evaluate_many(x)
    t2 = time.perf_counter_ns()
    es.tell(z, d, f)
    t3 = time.perf_counter_ns()
    return (t1 - t0) + (t3 - t2), t2 - t1


def measure(
    strategy: str,
    n: int,
    reps: int = 5,
    generations: Optional[int] = None,
    min_rep_seconds: float = 0.2,
    seed: int = 0,
) -> tuple[TimingRow, TimingRow]:
    """Median internal and dummy-objective cost per sample for one dimension.

    The memory of the limited-memory variants is filled before timing so
    every measured generation applies the full set of factors.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    hyper = default_hyperparameters(n, strategy)
    es = EvolutionStrategy(strategy, np.zeros(n), 1.0, hyper=hyper)
    stream = GaussianStream(seed)
    objective = dummy_objective(n)
    warmup = (hyper.m or hyper.m_max or 0) + 1
    for _ in range(warmup):
        _cycle(es, stream, objective)
    if generations is None:
        probe, _ = _cycle(es, stream, objective)
        generations = max(3, math.ceil(min_rep_seconds * 1e9 / max(probe, 1)))
    internal, dummy = [], []
    for _ in range(reps):
        total = [0, 0]
        for _ in range(generations):
            a, b = _cycle(es, stream, objective)
            total[0] += a
            total[1] += b
        samples = generations * hyper.lam
        internal.append(total[0] / samples)
        dummy.append(total[1] / samples)
    return (
        TimingRow(n, strategy, statistics.median(internal), internal),
        TimingRow(n, "dummy", statistics.median(dummy), dummy),
    )


def dummy_alone(n: int, lam: int, reps: int = 5, calls: int = 2000, seed: int = 0) -> TimingRow:
    """Per-sample cost of the dummy objective evaluated on its own, outside any strategy cycle."""
    objective = dummy_objective(n)
    X = np.random.default_rng(seed).normal(size=(lam, n))
    per_rep = []
    for _ in range(reps):
        t0 = time.perf_counter_ns()
        for _ in range(calls):
            objective.evaluate_many(X)
        per_rep.append((time.perf_counter_ns() - t0) / (calls * lam))
    return TimingRow(n, "dummy-alone", statistics.median(per_rep), per_rep)


def timing_study(strategies: Sequence[str], dims: Sequence[int], samples_per_point: int = 5, **kwargs) -> list[TimingRow]:
    """Cost rows for every strategy and dimension, plus two dummy rows per dimension.

    ``dummy`` is the objective cost measured inside the strategy cycles;
    ``dummy-alone`` times the same objective in a tight loop of its own.
    """
    dims = list(dims)
    if dims != sorted(dims):
        raise ValueError("dims must be sorted ascending")
    rows = []
    for n in dims:
        dummy_rows = []
        for strategy in strategies:
            row, dummy = measure(strategy, n, samples_per_point, **kwargs)
            rows.append(row)
            dummy_rows.append(dummy)
        rows.append(TimingRow(n, "dummy", statistics.median(r.ns_per_sample for r in dummy_rows),
                              [v for r in dummy_rows for v in r.reps]))
        rows.append(dummy_alone(n, default_hyperparameters(n, strategies[0]).lam, samples_per_point))
    return rows


def write_timing(rows: Sequence[TimingRow], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "strategy", "ns_per_sample", "reps"])
        for r in rows:
            writer.writerow([r.n, r.strategy, repr(float(r.ns_per_sample)), ";".join(f"{v:.1f}" for v in r.reps)])


def cost_ratio(rows: Sequence[TimingRow], strategy: str, n_small: int, n_large: int) -> float:
    cost = {r.n: r.ns_per_sample for r in rows if r.strategy == strategy}
    return cost[n_large] / cost[n_small]
