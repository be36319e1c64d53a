"""Per-run trace records shared by the strategy driver and the harness."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

COLUMNS = ("generation", "evaluations", "best_f", "gen_best_f", "sigma", "wall_ns")


class GenerationRow(NamedTuple):
    generation: int
    evaluations: int
    best_f: float
    gen_best_f: float
    sigma: float
    wall_ns: int


@dataclass
class RunRecord:
    """Trace of one optimizer run.

    ``evals_to_target`` is the evaluation count after the first generation
    whose best-so-far value reached the target, and ``None`` otherwise.
    """

    config: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)
    termination: str = ""
    total_evaluations: int = 0
    evals_to_target: Optional[int] = None
    best_f: float = float("inf")
    best_x: Optional[np.ndarray] = None

    @property
    def success(self) -> bool:
        return self.evals_to_target is not None

    def column(self, name: str) -> np.ndarray:
        idx = COLUMNS.index(name)
        dtype = np.int64 if name in ("generation", "evaluations", "wall_ns") else np.float64
        return np.array([row[idx] for row in self.rows], dtype=dtype)
