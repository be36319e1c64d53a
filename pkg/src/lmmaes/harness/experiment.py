"""Experiment grids: configuration, replicated runs and median summaries."""

from __future__ import annotations

import csv
import logging
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from ..objectives import BENCHMARK_IDS, ObjectiveFunction, make_benchmark, make_rotation, rotate_wrap, translate_wrap
from ..records import RunRecord
from ..rng import init_generator
from ..strategies import VARIANTS, StoppingCriteria, default_hyperparameters, run
from .logs import read_log, write_log

log = logging.getLogger(__name__)


@dataclass
class ExperimentConfig:
    """One strategy on one objective in one dimension, over several seeds.

    Initial means are drawn uniformly from ``[init_low, init_high]^n`` with
    a generator derived from each seed; the offset (if any) moves the
    optimum, not the initial region.
    """

    strategy: str
    objective: str
    n: int
    seeds: Sequence[int] = (1,)
    sigma0: float = 3.0
    f_tar: float = 1e-10
    max_evals: Optional[int] = None
    rotate: bool = False
    rot_seed: int = 0
    offset: Optional[np.ndarray] = None
    log_dir: Optional[str] = None
    overrides: dict = field(default_factory=dict)
    init_low: float = -5.0
    init_high: float = 5.0
    stagnation_generations: Optional[int] = None

    def validate(self) -> None:
        if self.strategy not in VARIANTS:
            raise ValueError(f"unknown strategy {self.strategy!r}; choose from {', '.join(VARIANTS)}")
        if self.objective not in BENCHMARK_IDS:
            raise ValueError(f"unknown objective {self.objective!r}; choose from {', '.join(BENCHMARK_IDS)}")
        if len(self.seeds) == 0:
            raise ValueError("at least one seed is required")
        if self.n < 2:
            raise ValueError(f"dimension must be >= 2, got {self.n}")
        if not self.sigma0 > 0:
            raise ValueError("sigma0 must be positive")
        if self.max_evals is not None and self.max_evals < 0:
            raise ValueError("max_evals must be non-negative")
        if self.offset is not None and np.shape(self.offset) != (self.n,):
            raise ValueError(f"offset must have length {self.n}")
        self.hyperparameters()

    def hyperparameters(self):
        return default_hyperparameters(self.n, self.strategy, **self.overrides)

    def build_objective(self) -> ObjectiveFunction:
        f = make_benchmark(self.objective, self.n)
        if self.rotate:
            f = rotate_wrap(f, make_rotation(self.n, self.rot_seed))
        if self.offset is not None:
            f = translate_wrap(f, self.offset)
        return f

    def initial_mean(self, seed: int) -> np.ndarray:
        return init_generator(seed).uniform(self.init_low, self.init_high, self.n)

    def snapshot(self, seed: int) -> dict:
        snap = {
            "algo": self.strategy,
            "func": self.objective,
            "dim": self.n,
            "seed": seed,
            "sigma0": repr(float(self.sigma0)),
            "target": repr(float(self.f_tar)),
            "max_evals": "" if self.max_evals is None else self.max_evals,
            "rotate": int(self.rotate),
            "rot_seed": self.rot_seed,
            "offset": "" if self.offset is None else ";".join(repr(float(v)) for v in self.offset),
            "init": f"{self.init_low!r};{self.init_high!r}",
        }
        for key, value in self.hyperparameters().effective().items():
            if key not in ("variant", "n"):
                snap[f"hp.{key}"] = value
        return snap

    def log_name(self, seed: int) -> str:
        rot = "_rot" if self.rotate else ""
        return f"{self.strategy}_{self.objective}{rot}_n{self.n}_s{seed}.csv"


def run_experiment(config: ExperimentConfig) -> list[RunRecord]:
    """Run every seed of ``config``; writes one log per seed when ``log_dir`` is set."""
    config.validate()
    hyper = config.hyperparameters()
    if hyper.clamped:
        log.info("active clamps for %s n=%d: %s", config.strategy, config.n, ", ".join(hyper.clamped))
    stopping = StoppingCriteria(
        target=config.f_tar,
        max_evals=config.max_evals,
        stagnation_generations=config.stagnation_generations,
    )
    records = []
    for seed in config.seeds:
        objective = config.build_objective()
        record = run(
            config.strategy,
            objective,
            config.initial_mean(seed),
            config.sigma0,
            seed,
            stopping,
            hyper=hyper,
            config=config.snapshot(seed),
        )
        log.info(
            "%s %s n=%d seed=%d: %s after %d evaluations (best %.3e)",
            config.strategy, config.objective, config.n, seed,
            record.termination, record.total_evaluations, record.best_f,
        )
        if config.log_dir is not None:
            write_log(record, Path(config.log_dir) / config.log_name(seed))
        records.append(record)
    return records


@dataclass
class Summary:
    runs: int
    successes: int
    median_evals: Optional[float]


def aggregate_median(records: Sequence[RunRecord]) -> Summary:
    """Median evaluations-to-target over the successful runs.

    Failed runs only enter the success count.
    """
    if not records:
        raise ValueError("cannot aggregate an empty set of runs")
    hits = [r.evals_to_target for r in records if r.evals_to_target is not None]
    median = float(statistics.median(hits)) if hits else None
    return Summary(len(records), len(hits), median)


def summarize_dir(in_dir, out_path) -> list[dict]:
    """Group every log in ``in_dir`` by (algo, func, dim, rotate) and write medians."""
    groups: dict[tuple, list[RunRecord]] = {}
    paths = sorted(Path(in_dir).glob("*.csv"))
    if not paths:
        raise ValueError(f"no .csv logs found in {in_dir}")
    for path in paths:
        record = read_log(path)
        c = record.config
        key = (c.get("algo", ""), c.get("func", ""), int(c.get("dim", 0)), int(c.get("rotate", 0)))
        groups.setdefault(key, []).append(record)
    rows = []
    for (algo, func, dim, rotate), records in sorted(groups.items()):
        s = aggregate_median(records)
        rows.append(dict(
            algo=algo, func=func, dim=dim, rotate=rotate,
            runs=s.runs, successes=s.successes,
            median_evals="" if s.median_evals is None else repr(s.median_evals),
        ))
    with open(out_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["algo", "func", "dim", "rotate", "runs", "successes", "median_evals"])
        writer.writeheader()
        writer.writerows(rows)
    return rows
