"""Annealed correctness gate applied to the combined parent and offspring pool."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

from .objectives import DesignCandidate

logger = logging.getLogger(__name__)

__all__ = ["GateSchedule", "GateResult", "gate_threshold", "apply_gate"]


@dataclass(frozen=True)
class GateSchedule:
    theta_min: float = 0.25
    theta_max: float = 1.0
    alpha: float = 2.0
    total_generations: int = 10

    def __post_init__(self):
        if not (0.0 <= self.theta_min <= self.theta_max <= 1.0):
            raise ValueError("need 0 <= theta_min <= theta_max <= 1")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.total_generations < 1:
            raise ValueError("total_generations must be >= 1")


def gate_threshold(schedule: GateSchedule, t: int) -> float:
    """Minimum correctness admitted at generation ``t`` (1-based)."""
    G = schedule.total_generations
    if not 1 <= t <= G:
        raise ValueError(f"generation {t} outside 1..{G}")
    if t == G:
        return schedule.theta_max
    span = schedule.theta_max - schedule.theta_min
    return schedule.theta_min + span * (t / G) ** schedule.alpha


@dataclass(frozen=True)
class GateResult:
    gated: list
    rejected: list
    fallback: bool = False


def apply_gate(
    pool: Sequence[DesignCandidate], theta: float, capacity: Optional[int] = None
) -> GateResult:
    """Split ``pool`` into candidates with ``c >= theta`` and the rest.

    If nobody passes, the top ``min(len(pool), capacity)`` candidates by
    correctness are admitted instead so the generation keeps survivors.
    """
    gated = [c for c in pool if c.correctness.value >= theta]
    if gated or not pool:
        rejected = [c for c in pool if c.correctness.value < theta]
        return GateResult(gated, rejected)

    keep = len(pool) if capacity is None else min(len(pool), capacity)
    ranked = sorted(pool, key=lambda c: -c.correctness.value)
    admitted = ranked[:keep]
    admitted_ids = {id(c) for c in admitted}
    logger.warning(
        "correctness gate %.4f admitted nobody; falling back to top %d by correctness",
        theta,
        keep,
    )
    return GateResult(admitted, [c for c in pool if id(c) not in admitted_ids], fallback=True)
