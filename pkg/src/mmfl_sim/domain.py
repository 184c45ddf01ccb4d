"""Core data types shared by the scheduler and the simulator.

Throughput curves, per-client and per-model state, the round assignment and
the per-round record all live here. The simulator keeps its hot state as
numpy arrays; the dataclasses below are the public, inspectable view of it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

# Utility of a (client, model) pair that has never been selected. Compares
# greater than every finite utility, so unexplored pairs are picked first.
SENTINEL_NEVER_SELECTED = math.inf


class ConfigurationError(ValueError):
    """Invalid configuration, profile or roster data."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class DeviceKind(str, Enum):
    GPU = "gpu"
    CPU = "cpu"
    MOBILE = "mobile"


@dataclass(frozen=True)
class DeviceProfile:
    """Profiled throughput (samples/sec) against batch size, per model."""

    device_kind: DeviceKind
    curves: Mapping[str, Tuple[Tuple[int, float], ...]]

    def __post_init__(self):
        object.__setattr__(self, "device_kind", DeviceKind(self.device_kind))
        normalized = {}
        for model_id, points in self.curves.items():
            pts = tuple((int(b), float(v)) for b, v in points)
            if len(pts) < 2:
                raise ConfigurationError(
                    f"{self.device_kind.value}/{model_id}: curve needs >= 2 points")
            batches = [b for b, _ in pts]
            if any(b < 1 for b in batches) or any(
                    b2 <= b1 for b1, b2 in zip(batches, batches[1:])):
                raise ConfigurationError(
                    f"{self.device_kind.value}/{model_id}: batch sizes must be "
                    "positive and strictly increasing")
            if any(not (v > 0 and math.isfinite(v)) for _, v in pts):
                raise ConfigurationError(
                    f"{self.device_kind.value}/{model_id}: throughputs must be positive")
            normalized[model_id] = pts
        object.__setattr__(self, "curves", normalized)

    def throughput(self, model_id: str, m: float) -> float:
        return throughput(self, model_id, m)

    def throughput_table(self, model_id: str, m_min: int, m_max: int) -> np.ndarray:
        """Throughput at every integer batch size in [m_min, m_max]."""
        pts = self._curve(model_id)
        xs = np.array([b for b, _ in pts], dtype=float)
        ys = np.array([v for _, v in pts], dtype=float)
        # np.interp clamps to the endpoint values outside [xs[0], xs[-1]]
        return np.interp(np.arange(m_min, m_max + 1, dtype=float), xs, ys)

    def _curve(self, model_id):
        try:
            return self.curves[model_id]
        except KeyError:
            raise ConfigurationError(
                f"no throughput curve for model {model_id!r} on "
                f"{self.device_kind.value}") from None


def throughput(profile: DeviceProfile, model_id: str, m: float) -> float:
    """Piecewise-linear throughput at batch size ``m``, clamped outside the profile."""
    if not m >= 1:
        raise DomainError(f"batch size must be >= 1, got {m}")
    pts = profile._curve(model_id)
    if m <= pts[0][0]:
        return pts[0][1]
    if m >= pts[-1][0]:
        return pts[-1][1]
    for (b0, v0), (b1, v1) in zip(pts, pts[1:]):
        if b0 <= m <= b1:
            return v0 + (v1 - v0) * (m - b0) / (b1 - b0)
    raise AssertionError("unreachable")


@dataclass(frozen=True)
class GNSSchedule:
    """Deterministic gradient-noise-scale trajectory of one model.

    Grows geometrically from ``phi0`` to ``phi0 * growth`` over
    ``ramp_rounds`` rounds, then stays flat.
    """

    phi0: float
    growth: float = 10.0
    ramp_rounds: int = 200

    def __post_init__(self):
        if self.phi0 <= 0 or self.growth < 1 or self.ramp_rounds < 1:
            raise ConfigurationError(
                "GNS schedule needs phi0 > 0, growth >= 1, ramp_rounds >= 1")

    def at(self, round_index: int) -> float:
        frac = min(max(round_index, 0) / self.ramp_rounds, 1.0)
        return self.phi0 * self.growth ** frac


@dataclass
class ClientState:
    """Snapshot of one client's per-model scheduling state."""

    client_id: str
    device: DeviceProfile
    batch_size: Dict[str, int]
    iterations: Dict[str, int]
    selected_rounds: Dict[str, int]
    reported_utility: Dict[str, float]
    eligible: Dict[str, bool]
    data_heterogeneity: Dict[str, float]
    dataset_size: Dict[str, int]

    def __post_init__(self):
        for model_id, size in self.dataset_size.items():
            if size == 0 and self.eligible.get(model_id, False):
                raise ValueError(
                    f"client {self.client_id} marked eligible for {model_id} "
                    "without training data")


@dataclass
class ModelState:
    model_id: str
    target_accuracy: float
    gns_schedule: GNSSchedule
    a_max: float = 0.9
    rate: float = 1e-5
    bias_penalty: float = 0.3
    loss0: float = 2.3
    current_accuracy: float = 0.0
    cumulative_progress: float = 0.0
    gns: float = field(default=0.0)

    def __post_init__(self):
        if not 0 <= self.target_accuracy <= 1:
            raise ConfigurationError(f"{self.model_id}: target accuracy outside [0, 1]")
        if not 0 < self.a_max <= 1:
            raise ConfigurationError(f"{self.model_id}: a_max outside (0, 1]")
        if self.rate <= 0 or self.loss0 <= 0:
            raise ConfigurationError(f"{self.model_id}: rate and loss0 must be positive")
        if not 0 <= self.bias_penalty < 1:
            raise ConfigurationError(f"{self.model_id}: bias penalty outside [0, 1)")
        if self.gns <= 0:
            self.gns = self.gns_schedule.at(0)

    @property
    def active(self) -> bool:
        return self.current_accuracy < self.target_accuracy

    @property
    def loss(self) -> float:
        return self.loss0 * max(0.0, 1.0 - self.current_accuracy / self.a_max)

    def advance(self, effective_progress: float) -> None:
        self.cumulative_progress += max(0.0, effective_progress)
        self.current_accuracy = self.a_max * -math.expm1(-self.rate * self.cumulative_progress)


@dataclass
class AssignmentMatrix:
    """One round's client-to-model allocation.

    ``objective_value`` is the finite part of the selection objective;
    ``sentinel_pairs`` counts chosen pairs whose score was the never-selected
    sentinel (the first, dominant phase of the objective).
    """

    x: np.ndarray
    t: np.ndarray
    deadline: float
    objective_value: float = 0.0
    sentinel_pairs: int = 0
    relaxed: bool = False

    @property
    def objective(self) -> Tuple[int, float]:
        return (self.sentinel_pairs, self.objective_value)

    def participants(self) -> np.ndarray:
        return np.flatnonzero(self.x.any(axis=1))

    def busy_times(self) -> np.ndarray:
        return np.where(self.x, self.t, 0.0).sum(axis=1)

    def per_model_counts(self) -> np.ndarray:
        return self.x.sum(axis=0)

    def violations(self, eligible: np.ndarray, required: int,
                   max_models_per_client: Optional[int] = None) -> List[str]:
        """List the constraints this assignment breaks (empty when feasible)."""
        problems = []
        if np.any(self.x & ~eligible):
            problems.append("assigned an ineligible pair")
        if np.any(self.busy_times() > self.deadline):
            problems.append("client busy past the deadline")
        n_part = len(self.participants())
        if self.relaxed:
            if n_part > required:
                problems.append("relaxed assignment exceeds the participant count")
        elif n_part != required:
            problems.append(f"{n_part} participants, expected {required}")
        if max_models_per_client is not None and np.any(
                self.x.sum(axis=1) > max_models_per_client):
            problems.append("client assigned too many models")
        return problems


@dataclass
class RoundRecord:
    round_index: int
    wall_clock: float
    cumulative_time: float
    deadline: float
    percentile: float
    accuracy: Dict[str, float]
    participants: Dict[str, int]
    mean_batch: Dict[str, float]
    busy: Dict[int, float]
    idle: Dict[int, float]
    chosen: Dict[Tuple[int, str], Tuple[int, int]]
    objective: float = 0.0
    sentinel_pairs: int = 0
    active_models: int = 0
    skipped: bool = False

    @property
    def idle_fractions(self) -> Dict[int, float]:
        if self.wall_clock <= 0:
            return {i: 0.0 for i in self.idle}
        return {i: v / self.wall_clock for i, v in self.idle.items()}

    @property
    def mean_idle_fraction(self) -> float:
        fr = self.idle_fractions
        return float(np.mean(list(fr.values()))) if fr else 0.0


# --- JSON ingestion -------------------------------------------------------

def profiles_from_records(records: Sequence[Mapping]) -> Dict[DeviceKind, DeviceProfile]:
    curves: Dict[DeviceKind, Dict[str, list]] = {}
    for n, rec in enumerate(records):
        try:
            kind = DeviceKind(rec["device_kind"])
            model_id = str(rec["model_id"])
            points = [(p[0], p[1]) for p in rec["points"]]
        except (KeyError, ValueError, TypeError, IndexError) as exc:
            raise ConfigurationError(f"profile entry {n}: {exc!r}") from None
        if model_id in curves.setdefault(kind, {}):
            raise ConfigurationError(
                f"profile entry {n}: duplicate curve {kind.value}/{model_id}")
        curves[kind][model_id] = points
    return {kind: DeviceProfile(kind, c) for kind, c in curves.items()}


def profiles_to_records(profiles: Mapping[DeviceKind, DeviceProfile]) -> List[dict]:
    out = []
    for kind in DeviceKind:
        if kind not in profiles:
            continue
        for model_id, pts in profiles[kind].curves.items():
            out.append({"device_kind": kind.value, "model_id": model_id,
                        "points": [[b, v] for b, v in pts]})
    return out


def load_profiles(path) -> Dict[DeviceKind, DeviceProfile]:
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, list):
        raise ConfigurationError(f"{path}: expected a JSON array of curves")
    return profiles_from_records(data)


@dataclass(frozen=True)
class RosterEntry:
    client_id: str
    device_kind: DeviceKind
    datasets: Mapping[str, int]
    heterogeneity: Mapping[str, float]
    # multiplies the device-type throughput curve (device-to-device spread)
    speed_factor: float = 1.0


def roster_from_records(records: Sequence[Mapping]) -> List[RosterEntry]:
    out = []
    seen = set()
    for n, rec in enumerate(records):
        try:
            entry = RosterEntry(
                client_id=str(rec["client_id"]),
                device_kind=DeviceKind(rec["device_kind"]),
                datasets={str(k): int(v) for k, v in rec["datasets"].items()},
                heterogeneity={str(k): float(v)
                               for k, v in rec.get("heterogeneity", {}).items()},
                speed_factor=float(rec.get("speed_factor", 1.0)),
            )
        except (KeyError, ValueError, TypeError, AttributeError) as exc:
            raise ConfigurationError(f"roster entry {n}: {exc!r}") from None
        if entry.client_id in seen:
            raise ConfigurationError(f"roster entry {n}: duplicate client_id")
        if any(v < 0 for v in entry.datasets.values()):
            raise ConfigurationError(f"roster entry {n}: negative dataset size")
        if any(not v > 0 for v in entry.heterogeneity.values()):
            raise ConfigurationError(f"roster entry {n}: heterogeneity must be positive")
        if not entry.speed_factor > 0:
            raise ConfigurationError(f"roster entry {n}: speed_factor must be positive")
        seen.add(entry.client_id)
        out.append(entry)
    return out


def roster_to_records(roster: Sequence[RosterEntry]) -> List[dict]:
    return [{"client_id": e.client_id, "device_kind": e.device_kind.value,
             "datasets": dict(e.datasets), "heterogeneity": dict(e.heterogeneity),
             "speed_factor": e.speed_factor}
            for e in roster]


def load_roster(path) -> List[RosterEntry]:
    with open(Path(path)) as fh:
        data = json.load(fh)
    if not isinstance(data, list):
        raise ConfigurationError(f"{path}: expected a JSON array of clients")
    return roster_from_records(data)
