"""Command line entry point: ``lmmaes optimize | timing | summarize``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from ..objectives import BENCHMARK_IDS
from ..strategies import VARIANTS
from .experiment import ExperimentConfig, aggregate_median, run_experiment, summarize_dir
from .timing import timing_study, write_timing

log = logging.getLogger("lmmaes")


class ConfigError(ValueError):
    pass


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers, got {text!r}") from None


def _parse_value(text: str):
    if "," in text:
        return [_parse_value(v) for v in text.split(",")]
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def parse_overrides(items) -> dict:
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        out[key.strip()] = _parse_value(value.strip())
    return out


def _load_offset(path: str, n: int) -> np.ndarray:
    try:
        offset = np.atleast_1d(np.loadtxt(path, dtype=np.float64).ravel())
    except OSError as exc:
        raise ConfigError(f"cannot read offset file {path}: {exc}") from exc
    if offset.shape != (n,):
        raise ConfigError(f"offset file {path} holds {offset.size} values, expected {n}")
    return offset


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lmmaes", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log per-run progress")
    sub = parser.add_subparsers(dest="command", required=True)

    opt = sub.add_parser("optimize", help="run one strategy on one benchmark for several seeds")
    opt.add_argument("--algo", required=True, choices=VARIANTS)
    opt.add_argument("--func", required=True, choices=BENCHMARK_IDS)
    opt.add_argument("--dim", required=True, type=int)
    opt.add_argument("--seeds", type=_int_list, default=[1], help="comma separated, e.g. 1,2,3")
    opt.add_argument("--sigma0", type=float, default=3.0)
    opt.add_argument("--target", type=float, default=1e-10)
    opt.add_argument("--max-evals", type=int, default=None)
    opt.add_argument("--rotate", action="store_true")
    opt.add_argument("--rot-seed", type=int, default=0)
    opt.add_argument("--offset", metavar="VEC_FILE", help="whitespace separated optimum offset")
    opt.add_argument("--set", action="append", metavar="KEY=VALUE", help="hyperparameter override")
    opt.add_argument("--out", required=True, help="directory for per-seed CSV logs")

    tim = sub.add_parser("timing", help="internal cost per sampled solution")
    tim.add_argument("--algos", required=True, help="comma separated strategy names")
    tim.add_argument("--dims", required=True, type=_int_list)
    tim.add_argument("--reps", type=int, default=5)
    tim.add_argument("--out", required=True)

    summ = sub.add_parser("summarize", help="median evaluations-to-target per configuration")
    summ.add_argument("--in", dest="in_dir", required=True)
    summ.add_argument("--out", required=True)
    return parser


def _optimize(args) -> int:
    offset = _load_offset(args.offset, args.dim) if args.offset else None
    config = ExperimentConfig(
        strategy=args.algo,
        objective=args.func,
        n=args.dim,
        seeds=args.seeds,
        sigma0=args.sigma0,
        f_tar=args.target,
        max_evals=args.max_evals,
        rotate=args.rotate,
        rot_seed=args.rot_seed,
        offset=offset,
        log_dir=args.out,
        overrides=parse_overrides(args.set),
    )
    try:
        config.validate()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    Path(args.out).mkdir(parents=True, exist_ok=True)
    records = run_experiment(config)
    for seed, record in zip(config.seeds, records):
        print(f"seed={seed} termination={record.termination} evaluations={record.total_evaluations} "
              f"best_f={record.best_f:.6e}")
    s = aggregate_median(records)
    median = "n/a" if s.median_evals is None else f"{s.median_evals:.0f}"
    print(f"successes={s.successes}/{s.runs} median_evals={median}")
    return 0


def _timing(args) -> int:
    algos = [a.strip() for a in args.algos.split(",") if a.strip()]
    bad = [a for a in algos if a not in VARIANTS]
    if bad or not algos:
        raise ConfigError(f"unknown strategies: {', '.join(bad) or '(none given)'}")
    if args.reps < 1:
        raise ConfigError("--reps must be >= 1")
    dims = sorted(args.dims)
    if any(n < 2 for n in dims):
        raise ConfigError("dimensions must be >= 2")
    rows = timing_study(algos, dims, args.reps)
    write_timing(rows, args.out)
    for r in rows:
        print(f"n={r.n} strategy={r.strategy} ns_per_sample={r.ns_per_sample:.1f}")
    return 0


def _summarize(args) -> int:
    try:
        rows = summarize_dir(args.in_dir, args.out)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    for row in rows:
        print(",".join(str(v) for v in row.values()))
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    handler = {"optimize": _optimize, "timing": _timing, "summarize": _summarize}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"lmmaes {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"lmmaes {args.command}: I/O error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
