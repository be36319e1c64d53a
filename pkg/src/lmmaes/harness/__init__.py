"""Experiment runner, trace logs and the internal-cost timing study."""

from .experiment import ExperimentConfig, Summary, aggregate_median, run_experiment, summarize_dir
from .logs import read_log, strip_wall_time, write_log
from .timing import TimingRow, cost_ratio, dummy_alone, dummy_objective, measure, timing_study, write_timing
