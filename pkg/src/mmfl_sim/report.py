"""Plot-ready CSV and JSON emission.

All files are written to a temporary sibling and renamed into place, so a
reader never sees a half-written file. Floats carry 9 significant digits;
missing values (an unreached target) are empty cells in CSV and ``null`` in
JSON; infinities print as ``inf``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable, List, Sequence

from .experiments import REFERENCE_ARM, AlphaSweep, Comparison
from .simengine import SimulationResult

SIG_DIGITS = 9

ROUND_COLUMNS = ["round", "wall_clock", "cumulative_time", "deadline", "percentile",
                 "active_models", "participants", "mean_idle_fraction", "objective",
                 "sentinel_pairs", "skipped"]
COMPARISON_COLUMNS = ["arm", "seed", "model_id", "time_to_accuracy", "rounds_to_accuracy",
                      "final_accuracy", "mean_idle_fraction", "reference_time", "speedup"]
SWEEP_COLUMNS = ["alpha", "seed", "model_id", "time_to_accuracy", "final_accuracy"]
ORACLE_COLUMNS = ["instance_id", "n", "m", "objective_exact", "objective_oracle", "equal"]


def fmt(value: Any) -> str:
    """Format one CSV cell."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.{SIG_DIGITS}g}"
    return str(value)


def fmt_objective(objective) -> str:
    """Two-phase objective as ``<never-selected pairs>*inf+<finite sum>``."""
    n_sentinel, finite = objective
    return f"{n_sentinel}*inf+{fmt(float(finite))}"


def _json_ready(value: Any) -> Any:
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return float(f"{value:.{SIG_DIGITS}g}")
    if isinstance(value, dict):
        return {str(k): _json_ready(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_ready(v) for v in value]
    return value


def _atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    _atomic_write(path, buf.getvalue())


def write_json(path, data: Any) -> None:
    _atomic_write(path, json.dumps(_json_ready(data), indent=2, sort_keys=True) + "\n")


# --- per-command tables ---------------------------------------------------

def round_table(result: SimulationResult):
    ids = result.model_ids
    header = list(ROUND_COLUMNS)
    for mid in ids:
        header += [f"accuracy[{mid}]", f"participants[{mid}]", f"mean_batch[{mid}]"]
    rows = []
    for r in result.records:
        row: List[Any] = [r.round_index, r.wall_clock, r.cumulative_time, r.deadline,
                          float(r.percentile), r.active_models, len(r.busy),
                          r.mean_idle_fraction, float(r.objective), r.sentinel_pairs, r.skipped]
        for mid in ids:
            row += [r.accuracy[mid], r.participants.get(mid, 0), r.mean_batch.get(mid)]
        rows.append(row)
    return header, rows


def comparison_table(cmp: Comparison):
    rows = []
    for arm in cmp.arms:
        for mid in cmp.model_ids:
            for s in cmp.seeds:
                run = cmp.runs[(arm.name, s)]
                rows.append([arm.name, s, mid, run.time_to_accuracy[mid],
                             run.rounds_to_accuracy[mid], run.final_accuracy[mid],
                             run.mean_idle_fraction,
                             cmp.runs[(REFERENCE_ARM, s)].time_to_accuracy[mid],
                             cmp.speedup(arm.name, s, mid)])
            rows.append([arm.name, "median", mid, cmp.median_time(arm.name, mid), None, None,
                         cmp.mean_idle(arm.name), cmp.median_time(REFERENCE_ARM, mid),
                         cmp.median_speedup(arm.name, mid)])
    return COMPARISON_COLUMNS, rows


def sweep_table(sweep: AlphaSweep):
    rows = []
    for a in sweep.alphas:
        for mid in sweep.model_ids:
            for s in sweep.seeds:
                run = sweep.runs[(a, s)]
                rows.append([a, s, mid, run.time_to_accuracy[mid], run.final_accuracy[mid]])
            rows.append([a, "median", mid, sweep.median_time(a, mid),
                         sweep.median_accuracy(a, mid)])
    return SWEEP_COLUMNS, rows
