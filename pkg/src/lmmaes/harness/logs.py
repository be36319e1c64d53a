"""CSV trace files.

Each file starts with ``# key=value`` lines holding the effective
configuration and the run outcome, followed by the column header and one
row per logged generation. Floats are written with ``repr`` so they parse
back to the same doubles.
"""

from __future__ import annotations

import os
from pathlib import Path

from ..records import COLUMNS, GenerationRow, RunRecord

_OUTCOME_KEYS = ("termination", "total_evaluations", "evals_to_target", "best_f")


def _fmt(value) -> str:
    return repr(float(value)) if isinstance(value, float) else str(value)


def write_log(record: RunRecord, path) -> None:
    path = Path(path)
    lines = [f"# {key}={value}" for key, value in record.config.items()]
    lines.append(f"# termination={record.termination}")
    lines.append(f"# total_evaluations={record.total_evaluations}")
    lines.append(f"# evals_to_target={'' if record.evals_to_target is None else record.evals_to_target}")
    lines.append(f"# best_f={record.best_f!r}")
    lines.append(",".join(COLUMNS))
    for row in record.rows:
        lines.append(",".join(_fmt(v) for v in row))
    try:
        if path.parent and not path.parent.exists():
            os.makedirs(path.parent, exist_ok=True)
        path.write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write log {path}: {exc}") from exc


def _parse_row(parts: list[str]) -> GenerationRow:
    if len(parts) != len(COLUMNS):
        raise ValueError(f"expected {len(COLUMNS)} fields, got {len(parts)}")
    g, e, b, gb, s, w = parts
    return GenerationRow(int(g), int(e), float(b), float(gb), float(s), int(w))


def read_log(path) -> RunRecord:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise OSError(f"cannot read log {path}: {exc}") from exc
    record = RunRecord()
    header_seen = False
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line:
            continue
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            if key in _OUTCOME_KEYS:
                if key == "termination":
                    record.termination = value
                elif key == "total_evaluations":
                    record.total_evaluations = int(value)
                elif key == "evals_to_target":
                    record.evals_to_target = int(value) if value else None
                else:
                    record.best_f = float(value)
            else:
                record.config[key] = value
        elif not header_seen:
            if tuple(line.split(",")) != COLUMNS:
                raise ValueError(f"{path}:{lineno}: unexpected column header {line!r}")
            header_seen = True
        else:
            try:
                record.rows.append(_parse_row(line.split(",")))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
    if not header_seen:
        raise ValueError(f"{path}: missing column header")
    return record


def strip_wall_time(path) -> str:
    """File contents with the wall-clock column blanked, for reproducibility diffs."""
    out = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#") or line == ",".join(COLUMNS):
            out.append(line)
        else:
            out.append(line.rsplit(",", 1)[0])
    return "\n".join(out)
