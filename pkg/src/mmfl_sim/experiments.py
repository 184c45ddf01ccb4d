"""Multi-arm, multi-seed experiment orchestration.

Every (arm, seed) run is an independent pure function of its configuration,
so runs may be fanned out over worker processes; results are collected in
submission order and are identical to a serial run.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .config import ArmConfig, Selector, SimulationConfig, default_arms
from .domain import ConfigurationError
from .simengine import run_simulation

logger = logging.getLogger(__name__)

THREADS_ENV = "MMFL_SIM_THREADS"
REFERENCE_ARM = "flammable"

ABLATION_ARMS = (
    ArmConfig("no_batch", batch_adaptation=False),
    ArmConfig("no_multi_model", multi_model=False),
)


def builtin_arms() -> Dict[str, ArmConfig]:
    arms = {a.name: a for a in default_arms()}
    arms.update({a.name: a for a in ABLATION_ARMS})
    return arms


def worker_count(requested: Optional[int] = None) -> int:
    """Process count: ``requested`` or the CPU count, capped by ``MMFL_SIM_THREADS``."""
    n = requested if requested is not None else (os.cpu_count() or 1)
    raw = os.environ.get(THREADS_ENV)
    if raw is not None and raw.strip():
        try:
            cap = int(raw)
        except ValueError:
            raise ConfigurationError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
        if cap < 1:
            raise ConfigurationError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
        n = min(n, cap)
    return max(1, n)


def lower_median(values: Sequence[float]) -> float:
    """Median that picks the lower middle element for even-length input."""
    if not values:
        raise ValueError("median of an empty sequence")
    ordered = sorted(values)
    return ordered[(len(ordered) - 1) // 2]


def arm_config(base: SimulationConfig, arm: ArmConfig, seed: int) -> SimulationConfig:
    return base.replace(**{
        "seed": seed,
        "selection.selector": arm.selector,
        "batch.adaptation": arm.batch_adaptation,
        "selection.multi_model": arm.multi_model,
        "deadline.dynamic": arm.dynamic_deadline,
    })


@dataclass(frozen=True)
class RunMetrics:
    """What the comparison tables need from one simulation."""

    label: str
    seed: int
    model_ids: Tuple[str, ...]
    time_to_accuracy: Dict[str, Optional[float]]
    rounds_to_accuracy: Dict[str, Optional[int]]
    final_accuracy: Dict[str, float]
    mean_idle_fraction: float
    rounds_run: int
    total_time: float


def _run_one(job: Tuple[str, SimulationConfig]) -> RunMetrics:
    label, cfg = job
    res = run_simulation(cfg)
    return RunMetrics(
        label=label, seed=cfg.seed, model_ids=tuple(res.model_ids),
        time_to_accuracy=dict(res.time_to_accuracy),
        rounds_to_accuracy=dict(res.rounds_to_accuracy),
        final_accuracy=dict(res.final_accuracy),
        mean_idle_fraction=res.mean_idle_fraction,
        rounds_run=len(res.records), total_time=res.total_time,
    )


def run_jobs(jobs: Sequence[Tuple[str, SimulationConfig]],
             workers: Optional[int] = None) -> List[RunMetrics]:
    workers = min(worker_count(workers), max(1, len(jobs)))
    if workers == 1:
        return [_run_one(j) for j in jobs]
    logger.info("running %d simulations on %d processes", len(jobs), workers)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_one, jobs))


def resolve_arms(config: SimulationConfig, names: Optional[Iterable[str]] = None) -> List[ArmConfig]:
    """Arms from the config, or picked by name from the config and built-ins.

    The reference arm is always included because speedups are relative to it.
    """
    if names is None:
        arms = list(config.experiment.arms)
    else:
        known = builtin_arms()
        known.update({a.name: a for a in config.experiment.arms})
        arms = []
        for name in names:
            if name not in known:
                raise ConfigurationError(
                    f"unknown arm {name!r}; known arms: {', '.join(sorted(known))}")
            if name not in [a.name for a in arms]:
                arms.append(known[name])
    if REFERENCE_ARM not in [a.name for a in arms]:
        arms.insert(0, builtin_arms()[REFERENCE_ARM])
    return arms


@dataclass
class Comparison:
    arms: List[ArmConfig]
    seeds: List[int]
    model_ids: List[str]
    runs: Dict[Tuple[str, int], RunMetrics]

    def time(self, arm: str, seed: int, model_id: str) -> float:
        t = self.runs[(arm, seed)].time_to_accuracy[model_id]
        return math.inf if t is None else t

    def speedup(self, arm: str, seed: int, model_id: str) -> float:
        """Baseline time over reference time; inf when only the reference finished."""
        base = self.time(arm, seed, model_id)
        ref = self.time(REFERENCE_ARM, seed, model_id)
        if math.isinf(ref):
            return math.nan
        if ref == 0:
            return 1.0 if base == 0 else math.inf
        return base / ref

    def median_time(self, arm: str, model_id: str) -> float:
        return lower_median([self.time(arm, s, model_id) for s in self.seeds])

    def median_speedup(self, arm: str, model_id: str) -> float:
        vals = [self.speedup(arm, s, model_id) for s in self.seeds]
        if any(math.isnan(v) for v in vals):
            return math.nan
        return lower_median(vals)

    def mean_idle(self, arm: str) -> float:
        return math.fsum(self.runs[(arm, s)].mean_idle_fraction for s in self.seeds) / len(self.seeds)


def compare(config: SimulationConfig, arm_names: Optional[Iterable[str]] = None,
            seeds: Optional[Sequence[int]] = None, workers: Optional[int] = None) -> Comparison:
    arms = resolve_arms(config, arm_names)
    seeds = list(config.experiment.seeds if seeds is None else seeds)
    jobs = [(a.name, arm_config(config, a, s)) for a in arms for s in seeds]
    results = run_jobs(jobs, workers)
    runs = {(r.label, r.seed): r for r in results}
    return Comparison(arms=arms, seeds=seeds, model_ids=list(results[0].model_ids), runs=runs)


@dataclass
class AlphaSweep:
    alphas: List[float]
    seeds: List[int]
    model_ids: List[str]
    runs: Dict[Tuple[float, int], RunMetrics]

    def median_time(self, alpha: float, model_id: str) -> float:
        return lower_median([
            math.inf if self.runs[(alpha, s)].time_to_accuracy[model_id] is None
            else self.runs[(alpha, s)].time_to_accuracy[model_id] for s in self.seeds])

    def median_accuracy(self, alpha: float, model_id: str) -> float:
        return lower_median([self.runs[(alpha, s)].final_accuracy[model_id] for s in self.seeds])


def sweep_alpha(config: SimulationConfig, seeds: Optional[Sequence[int]] = None,
                workers: Optional[int] = None) -> AlphaSweep:
    """Flammable runs per exploration weight, all trained for the same round budget."""
    seeds = list(config.experiment.seeds if seeds is None else seeds)
    alphas = [float(a) for a in config.sweep.alphas]
    jobs = []
    for a in alphas:
        for s in seeds:
            cfg = config.replace(**{
                "seed": s, "selection.alpha": a, "selection.selector": Selector.FLAMMABLE,
                "rounds": config.sweep.rounds, "continue_after_target": True})
            jobs.append((repr(a), cfg))
    results = run_jobs(jobs, workers)
    runs = {(float(r.label), r.seed): r for r in results}
    return AlphaSweep(alphas=alphas, seeds=seeds, model_ids=list(results[0].model_ids), runs=runs)
