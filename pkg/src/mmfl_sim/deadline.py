"""Percentile-based round deadline with loss-over-deadline feedback."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Sequence

from .domain import ConfigurationError, DomainError


class Direction(str, Enum):
    # earlier window above recent window: tighten the deadline
    STABLE_DECREASE = "stable_decrease"
    # the opposite reading: loosen it
    STABLE_INCREASE = "stable_increase"


def compute_deadline(times: Sequence[float], p: float) -> float:
    """Nearest-rank ``p``-th percentile of the candidate execution times."""
    ts = sorted(float(t) for t in times)
    if not ts:
        raise DomainError("deadline needs at least one execution time")
    if not all(math.isfinite(t) and t > 0 for t in ts):
        raise DomainError("execution times must be finite and positive")
    rank = max(1, math.ceil(p / 100.0 * len(ts)))
    return ts[min(rank, len(ts)) - 1]


@dataclass
class DeadlineController:
    percentile: float = 100.0
    epsilon: float = 5.0
    window: int = 5
    p_min: float = 10.0
    direction: Direction = Direction.STABLE_DECREASE
    history: List[float] = field(default_factory=list)

    def __post_init__(self):
        self.direction = Direction(self.direction)
        if not 0 < self.p_min <= 100:
            raise ConfigurationError("deadline.p_min must lie in (0, 100]")
        if self.epsilon <= 0 or self.window < 1:
            raise ConfigurationError("deadline.epsilon must be > 0 and deadline.window >= 1")
        self.percentile = self._clamp(self.percentile)

    def _clamp(self, p: float) -> float:
        return min(100.0, max(self.p_min, p))

    def deadline(self, times: Sequence[float]) -> float:
        return compute_deadline(times, self.percentile)

    def record_signal(self, test_loss: float, deadline: float) -> float:
        if not deadline > 0:
            raise DomainError("deadline must be positive")
        if test_loss < 0:
            raise DomainError("test loss must be nonnegative")
        g = test_loss / deadline
        self.history.append(g)
        return g

    def update_percentile(self, round_index: int) -> float:
        """Move the percentile one step after comparing the last two windows.

        ``round_index`` is the number of signals recorded so far; before two
        full windows exist the percentile is left alone.
        """
        w = self.window
        if round_index < 2 * w:
            return self.percentile
        g = self.history
        earlier = math.fsum(g[round_index - 2 * w:round_index - w])
        recent = math.fsum(g[round_index - w:round_index])
        step = -self.epsilon if earlier > recent else self.epsilon
        if self.direction is Direction.STABLE_INCREASE:
            step = -step
        self.percentile = self._clamp(self.percentile + step)
        return self.percentile
