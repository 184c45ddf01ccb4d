"""Deterministic round-loop simulator for multi-model federated training.

Real training is replaced by a synthetic learning model. Each trained
(client, model) pair contributes statistical progress
``m * k * (phi + m0) / (phi + m)`` scaled by a data-novelty factor, and a
model's accuracy follows ``a_max * (1 - exp(-rate * P))`` in its cumulative
effective progress ``P``. Per round, the summed contributions are discounted
by ``1 - beta * CV`` where CV is the coefficient of variation of the
contributions, so imbalanced rounds count for less.

Novelty models diminishing returns from re-training on the same client's
data before the global model has moved on: a pair last trained ``g`` rounds
ago contributes a ``1 - exp(-g / novelty_rounds)`` share; a first visit
contributes fully.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np

from .batch_adapt import optimize_batch_table
from .config import Selector, SimulationConfig
from .deadline import DeadlineController, compute_deadline
from .domain import (SENTINEL_NEVER_SELECTED, AssignmentMatrix, ClientState,
                     DeviceKind, DeviceProfile, ModelState, RosterEntry,
                     RoundRecord)
from .scenario import resolve_profiles, resolve_roster
from .selection import (SelectionInstance, select_greedy_per_model,
                        select_random, select_round_robin, solve_exact)
from .utility import build_utility_table, data_utility, synthetic_losses

logger = logging.getLogger(__name__)

KINDS = (DeviceKind.GPU, DeviceKind.CPU, DeviceKind.MOBILE)


def availability(rate: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Independent Bernoulli(rate) availability draw for ``n`` clients."""
    draw = rng.random(n)
    return draw < rate


def coefficient_of_variation(values: Sequence[float]) -> float:
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return 0.0
    mean = v.mean()
    return float(v.std() / mean) if mean > 0 else 0.0


@dataclass
class SimulationResult:
    config: SimulationConfig
    model_ids: List[str]
    records: List[RoundRecord]
    time_to_accuracy: Dict[str, Optional[float]]
    rounds_to_accuracy: Dict[str, Optional[int]]
    final_accuracy: Dict[str, float]
    total_time: float

    @property
    def mean_idle_fraction(self) -> float:
        """Average idle fraction of selected clients over rounds with >= 2 active models."""
        vals = [r.mean_idle_fraction for r in self.records
                if not r.skipped and r.active_models >= 2]
        return float(np.mean(vals)) if vals else 0.0

    @property
    def reached_all(self) -> bool:
        return all(v is not None for v in self.time_to_accuracy.values())

    def summary(self) -> dict:
        return {
            "seed": self.config.seed,
            "rounds_run": len(self.records),
            "total_time": self.total_time,
            "time_to_accuracy": dict(self.time_to_accuracy),
            "rounds_to_accuracy": dict(self.rounds_to_accuracy),
            "final_accuracy": dict(self.final_accuracy),
            "unreached": [m for m, v in self.time_to_accuracy.items() if v is None],
            "mean_idle_fraction": self.mean_idle_fraction,
            "config": self.config.to_dict(),
        }


class Simulator:
    """Owns all mutable state of one simulation run."""

    def __init__(self, config: SimulationConfig,
                 profiles: Optional[Mapping[DeviceKind, DeviceProfile]] = None,
                 roster: Optional[Sequence[RosterEntry]] = None):
        self.config = config
        ss = np.random.SeedSequence(config.seed)
        scenario_ss, avail_ss, loss_ss, select_ss = ss.spawn(4)
        self.rng_avail = np.random.default_rng(avail_ss)
        self.rng_loss = np.random.default_rng(loss_ss)
        self.rng_select = np.random.default_rng(select_ss)

        self.models: List[ModelState] = [mc.build(config.learning.beta) for mc in config.models]
        self.model_ids = [m.model_id for m in self.models]
        self.profiles = dict(profiles) if profiles is not None else resolve_profiles(
            config.profiles, self.model_ids)
        self.roster = list(roster) if roster is not None else resolve_roster(
            config.clients, config.models, np.random.default_rng(scenario_ss))

        n, M = len(self.roster), len(self.models)
        b = config.batch
        self.client_ids = [e.client_id for e in self.roster]
        self.kind = np.array([KINDS.index(e.device_kind) for e in self.roster])
        self.speed = np.array([e.speed_factor for e in self.roster], dtype=float)
        self.size = np.array([[e.datasets.get(mid, 0) for mid in self.model_ids]
                              for e in self.roster], dtype=int).reshape(n, M)
        self.hetero = np.array([[e.heterogeneity.get(mid, 1.0) for mid in self.model_ids]
                                for e in self.roster], dtype=float).reshape(n, M)

        self.theta = np.ones((len(KINDS), M, b.m_max - b.m_min + 1))
        used_kinds = set(self.kind.tolist())
        for q, kind in enumerate(KINDS):
            if q in used_kinds:
                for j, mid in enumerate(self.model_ids):
                    self.theta[q, j] = self.profiles[kind].throughput_table(mid, b.m_min, b.m_max)

        self.m = np.full((n, M), b.m0, dtype=int)
        self.k = np.full((n, M), b.k0, dtype=int)
        self.selected = np.zeros((n, M), dtype=int)
        self.last_round = np.full((n, M), -1, dtype=int)
        self.u_data = np.full((n, M), SENTINEL_NEVER_SELECTED)

        d = config.deadline
        self.controller = DeadlineController(
            percentile=d.p_init, epsilon=d.epsilon, window=d.window,
            p_min=d.p_min, direction=d.direction)
        self.round = 0
        self.elapsed = 0.0
        self.signals = 0
        self.records: List[RoundRecord] = []
        self.tta: Dict[str, Optional[float]] = {mid: None for mid in self.model_ids}
        self.rta: Dict[str, Optional[int]] = {mid: None for mid in self.model_ids}
        for mdl in self.models:
            if not mdl.active:
                self.tta[mdl.model_id], self.rta[mdl.model_id] = 0.0, 0

    # -- views -------------------------------------------------------------

    @property
    def n_clients(self) -> int:
        return len(self.roster)

    def client_state(self, i: int) -> ClientState:
        e = self.roster[i]
        ids = self.model_ids
        return ClientState(
            client_id=e.client_id,
            device=self.profiles[e.device_kind],
            batch_size={mid: int(self.m[i, j]) for j, mid in enumerate(ids)},
            iterations={mid: int(self.k[i, j]) for j, mid in enumerate(ids)},
            selected_rounds={mid: int(self.selected[i, j]) for j, mid in enumerate(ids)},
            reported_utility={mid: float(self.u_data[i, j]) for j, mid in enumerate(ids)},
            eligible={mid: bool(self.size[i, j] > 0) for j, mid in enumerate(ids)},
            data_heterogeneity={mid: float(self.hetero[i, j]) for j, mid in enumerate(ids)},
            dataset_size={mid: int(self.size[i, j]) for j, mid in enumerate(ids)},
        )

    def training_models(self) -> List[int]:
        if self.config.continue_after_target:
            return list(range(len(self.models)))
        return [j for j, mdl in enumerate(self.models) if mdl.active]

    def finished(self) -> bool:
        if self.config.continue_after_target:
            return False
        return not any(mdl.active for mdl in self.models)

    def exec_times(self, cols: Sequence[int]) -> np.ndarray:
        cols = np.asarray(cols)
        mm, kk = self.m[:, cols], self.k[:, cols]
        th = self.theta[self.kind[:, None], cols[None, :], mm - self.config.batch.m_min]
        return kk * mm / (th * self.speed[:, None])

    # -- one round ---------------------------------------------------------

    def _select(self, instance: SelectionInstance) -> AssignmentMatrix:
        sel = self.config.selection.selector
        if sel is Selector.FLAMMABLE:
            return solve_exact(instance)
        if sel is Selector.RANDOM:
            return select_random(instance, self.rng_select)
        if sel is Selector.ROUND_ROBIN:
            return select_round_robin(instance, self.rng_select)
        return select_greedy_per_model(instance)

    def run_round(self) -> RoundRecord:
        cfg = self.config
        self.round += 1
        R = self.round
        cols = self.training_models()
        ids = [self.model_ids[j] for j in cols]
        avail = availability(cfg.clients.availability_rate, self.n_clients, self.rng_avail)
        eligible = avail[:, None] & (self.size[:, cols] > 0)
        times = self.exec_times(cols)

        if not eligible.any():
            logger.warning("round %d skipped: no eligible clients", R)
            rec = RoundRecord(
                round_index=R, wall_clock=0.0, cumulative_time=self.elapsed,
                deadline=0.0, percentile=self.controller.percentile,
                accuracy={mid: mdl.current_accuracy for mid, mdl in zip(self.model_ids, self.models)},
                participants={mid: 0 for mid in ids}, mean_batch={},
                busy={}, idle={}, chosen={}, active_models=len(cols), skipped=True)
            self.records.append(rec)
            return rec

        dynamic = cfg.dynamic_deadline
        percentile = self.controller.percentile if dynamic else cfg.deadline.p_init
        deadline = compute_deadline(times[eligible], percentile)

        u_sys = deadline / times
        table = build_utility_table(u_sys, self.u_data[:, cols], eligible,
                                    self.selected[:, cols], cfg.selection.alpha, R)
        instance = SelectionInstance(
            scores=table.boosted, times=times, eligible=eligible, deadline=deadline,
            required=cfg.selection.per_model_clients * len(cols),
            max_models_per_client=None if cfg.selection.multi_model else 1)
        assign = self._select(instance)
        x = assign.x

        # training with the current (m, k), then post-training adaptation
        b = cfg.batch
        tau = cfg.learning.novelty_rounds
        contributions: Dict[int, List[float]] = {c: [] for c in range(len(cols))}
        chosen = {}
        pre_loss = [self.models[j].loss for j in cols]
        plans = {}
        for i, c in zip(*np.nonzero(x)):
            j = cols[c]
            mdl = self.models[j]
            phi = mdl.gns
            mi, ki = int(self.m[i, j]), int(self.k[i, j])
            chosen[(int(i), mdl.model_id)] = (mi, ki)
            sigma = mi * ki * (phi + b.m0) / (phi + mi)
            gap = R - self.last_round[i, j]
            if tau > 0 and self.last_round[i, j] >= 0:
                sigma *= -math.expm1(-gap / tau)
            contributions[c].append(sigma)

            if b.adaptation:
                key = (int(self.kind[i]), j)
                if key not in plans:
                    plans[key] = optimize_batch_table(
                        phi, b.m0, b.k0, self.theta[key[0], j], b.m_min, b.iteration_rule)
                self.m[i, j], self.k[i, j] = plans[key].m_star, plans[key].k_star

            losses = synthetic_losses(pre_loss[c], self.hetero[i, j],
                                      int(self.m[i, j] * self.k[i, j]), int(self.size[i, j]),
                                      self.rng_loss, cfg.learning.loss_dispersion)
            self.u_data[i, j] = data_utility(losses)
            self.selected[i, j] += 1
            self.last_round[i, j] = R

        busy = assign.busy_times()
        part = assign.participants()
        wall = float(busy[part].max()) if len(part) else 0.0
        self.elapsed += wall

        for c, j in enumerate(cols):
            mdl = self.models[j]
            sig = contributions[c]
            if sig:
                eff = math.fsum(sig) * max(0.0, 1.0 - mdl.bias_penalty * coefficient_of_variation(sig))
                mdl.advance(eff)
            mdl.gns = mdl.gns_schedule.at(R)
            if self.tta[mdl.model_id] is None and mdl.current_accuracy >= mdl.target_accuracy:
                self.tta[mdl.model_id] = self.elapsed
                self.rta[mdl.model_id] = R

        if dynamic and len(part):
            test_loss = float(np.mean([self.models[j].loss for j in cols]))
            self.controller.record_signal(test_loss, deadline)
            self.signals += 1
            self.controller.update_percentile(self.signals)

        counts = x.sum(axis=0)
        mean_batch = {}
        for c, j in enumerate(cols):
            rows = x[:, c]
            if rows.any():
                mean_batch[self.model_ids[j]] = float(
                    np.mean([chosen[(int(i), self.model_ids[j])][0] for i in np.flatnonzero(rows)]))
        rec = RoundRecord(
            round_index=R, wall_clock=wall, cumulative_time=self.elapsed,
            deadline=deadline, percentile=percentile,
            accuracy={mid: mdl.current_accuracy for mid, mdl in zip(self.model_ids, self.models)},
            participants={mid: int(counts[c]) for c, mid in enumerate(ids)},
            mean_batch=mean_batch,
            busy={int(i): float(busy[i]) for i in part},
            idle={int(i): wall - float(busy[i]) for i in part},
            chosen=chosen,
            objective=assign.objective_value,
            sentinel_pairs=assign.sentinel_pairs,
            active_models=len(cols),
        )
        self.records.append(rec)
        return rec

    def run(self) -> SimulationResult:
        while self.round < self.config.rounds and not self.finished():
            self.run_round()
        return SimulationResult(
            config=self.config,
            model_ids=list(self.model_ids),
            records=self.records,
            time_to_accuracy=dict(self.tta),
            rounds_to_accuracy=dict(self.rta),
            final_accuracy={m.model_id: m.current_accuracy for m in self.models},
            total_time=self.elapsed,
        )


def run_simulation(config: SimulationConfig, **kwargs) -> SimulationResult:
    return Simulator(config, **kwargs).run()
