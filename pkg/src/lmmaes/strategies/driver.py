"""Ask/tell wrapper and the generation loop."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ..records import GenerationRow, RunRecord
from ..rng import GaussianStream
from .kernels import SAMPLERS, UPDATERS, EsState, init_state, rank_order
from .params import HyperParameters, default_hyperparameters

log = logging.getLogger(__name__)


class NonFiniteObjectiveError(RuntimeError):
    """Raised when the objective keeps returning no usable value.

    ``record`` holds the trace up to the abort.
    """

    def __init__(self, message: str, record: RunRecord):
        super().__init__(message)
        self.record = record


class EvolutionStrategy:
    """Ask/tell front end over one strategy variant.

    >>> es = EvolutionStrategy("lmmaes", np.zeros(10), 1.0)
    >>> z, d = es.ask(GaussianStream(0))
    >>> x = es.candidates(d)
    """

    def __init__(self, variant: str, y0, sigma0: float, hyper: Optional[HyperParameters] = None, **overrides):
        y0 = np.asarray(y0, dtype=np.float64)
        if hyper is None:
            hyper = default_hyperparameters(y0.size, variant, **overrides)
        elif overrides:
            raise ValueError("pass either hyper or overrides, not both")
        if hyper.variant != variant:
            raise ValueError(f"hyperparameters are for {hyper.variant!r}, not {variant!r}")
        self.variant = variant
        self.state: EsState = init_state(hyper, y0, sigma0)
        self._sample = SAMPLERS[variant]
        self._update = UPDATERS[variant]

    @property
    def hyper(self) -> HyperParameters:
        return self.state.hyper

    def ask(self, stream: GaussianStream):
        """Draw one generation: returns ``(z, d)``, both ``(lam, n)``."""
        return self._sample(self.state, stream)

    def candidates(self, d: np.ndarray) -> np.ndarray:
        return self.state.y + self.state.sigma * d

    def tell(self, z: np.ndarray, d: np.ndarray, f) -> np.ndarray:
        """Rank the generation by ``f`` and update; returns the ranking."""
        f = np.asarray(f, dtype=np.float64)
        if f.shape != (z.shape[0],):
            raise ValueError(f"expected {z.shape[0]} objective values, got shape {f.shape}")
        order = rank_order(f)
        self.state = self._update(self.state, z[order], d[order])
        return order


@dataclass
class StoppingCriteria:
    """Termination tests, checked after every generation.

    ``stagnation_generations=None`` means ``1000 * ceil(n / lam)``.
    """

    target: float = 1e-10
    max_evals: Optional[int] = None
    sigma_min: float = 1e-20
    sigma_max: float = 1e20
    stagnation_generations: Optional[int] = None


def default_log_every(n: int, lam: int) -> int:
    return 1 if n <= 1024 else math.ceil(n / lam)


def run(
    variant: str,
    objective,
    y0,
    sigma0: float,
    seed: int,
    stopping: Optional[StoppingCriteria] = None,
    hyper: Optional[HyperParameters] = None,
    callback: Optional[Callable[[EsState], None]] = None,
    log_every: Optional[int] = None,
    config: Optional[dict] = None,
    **overrides,
) -> RunRecord:
    """Optimize ``objective`` from mean ``y0`` and step size ``sigma0``.

    Generations are synchronous: all ``lam`` candidates are evaluated before
    the update. ``callback`` sees the state after every update.
    """
    stopping = stopping or StoppingCriteria()
    es = EvolutionStrategy(variant, y0, sigma0, hyper=hyper, **overrides)
    h = es.hyper
    lam, n = h.lam, h.n
    stagnation = stopping.stagnation_generations or 1000 * math.ceil(n / lam)
    every = log_every or default_log_every(n, lam)
    stream = GaussianStream(seed)

    record = RunRecord(config=dict(config or {}))
    evals = 0
    gen = 0
    best_f = math.inf
    best_x = None
    last_improvement = 0
    bad_generations = 0
    start = time.perf_counter_ns()
    pending = None

    def finish(reason: str) -> RunRecord:
        if pending is not None:
            record.rows.append(pending)
        record.termination = reason
        record.total_evaluations = evals
        record.best_f = best_f
        record.best_x = best_x
        return record

    while True:
        if stopping.max_evals is not None and evals + lam > stopping.max_evals:
            return finish("budget")
        z, d = es.ask(stream)
        x = es.candidates(d)
        f = objective.evaluate_many(x)
        evals += lam
        gen += 1

        usable = ~(np.isnan(f) | (f == np.inf))
        if usable.any():
            bad_generations = 0
            k = int(rank_order(f)[0])
            if f[k] < best_f:
                best_f = float(f[k])
                best_x = x[k].copy()
                last_improvement = gen
            gen_best = float(f[k])
        else:
            bad_generations += 1
            gen_best = math.nan
            if bad_generations > lam:
                record.rows.append(GenerationRow(gen, evals, best_f, gen_best, es.state.sigma, time.perf_counter_ns() - start))
                pending = None
                finish("nonfinite")
                raise NonFiniteObjectiveError(
                    f"{objective.id}: no finite objective value for {bad_generations} consecutive generations "
                    f"(generation {gen}, {evals} evaluations)",
                    record,
                )

        es.tell(z, d, f)
        if callback is not None:
            callback(es.state)
        row = GenerationRow(gen, evals, best_f, gen_best, es.state.sigma, time.perf_counter_ns() - start)
        if gen % every == 0 or gen == 1:
            record.rows.append(row)
            pending = None
        else:
            pending = row

        if best_f <= stopping.target:
            record.evals_to_target = evals
            return finish("target")
        sigma = es.state.sigma
        if not stopping.sigma_min <= sigma <= stopping.sigma_max:
            return finish("sigma")
        if gen - last_improvement >= stagnation:
            return finish("stagnation")
