"""Limited-memory matrix adaptation evolution strategies."""

from .objectives import (
    BENCHMARK_IDS,
    BoxClassifier,
    ObjectiveFunction,
    adversarial_objective,
    make_benchmark,
    make_rotation,
    monotone_wrap,
    rotate_wrap,
    translate_wrap,
)
from .records import RunRecord
from .rng import GaussianStream, create_stream
from .strategies import EvolutionStrategy, StoppingCriteria, default_hyperparameters, run

__version__ = "0.1.0"
