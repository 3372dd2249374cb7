"""Survivor selection: non-dominated sorting, intra-level ranking, slot allocation."""
from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from typing import Sequence

from .objectives import DesignCandidate, dominates, is_synthesized, objective_vector

__all__ = [
    "IntraLevelCriterion",
    "non_dominated_sort",
    "level_weight",
    "allocate_slots",
    "rank_within_level",
    "select_survivors",
    "pareto_front",
]

_OBJECTIVES = ("correctness", "area", "delay", "power")
_SCALAR_KINDS = ("correctness", "area", "delay", "power", "ppa_product")


@dataclass(frozen=True)
class IntraLevelCriterion:
    """How candidates inside one Pareto level are ordered.

    ``kind`` is one of ``correctness`` (descending, the default), ``area``,
    ``delay``, ``power``, ``ppa_product`` (all ascending, failed synthesis
    last) or ``nds`` together with a non-empty ``objectives`` subset.
    """

    kind: str = "correctness"
    objectives: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind == "nds":
            if not self.objectives:
                raise ValueError("secondary non-dominated sorting needs at least one objective")
            unknown = set(self.objectives) - set(_OBJECTIVES)
            if unknown:
                raise ValueError(f"unknown objectives {sorted(unknown)}; choose from {_OBJECTIVES}")
        elif self.kind not in _SCALAR_KINDS:
            raise ValueError(f"unknown intra-level criterion {self.kind!r}")

    @classmethod
    def parse(cls, text: str) -> "IntraLevelCriterion":
        """Parse ``"power"`` or ``"nds:area,power"`` style strings."""
        text = text.strip().lower()
        if text.startswith("nds"):
            _, _, rest = text.partition(":")
            return cls("nds", tuple(p.strip() for p in rest.split(",") if p.strip()))
        return cls(text)

    def __str__(self) -> str:
        if self.kind == "nds":
            return "nds:" + ",".join(self.objectives)
        return self.kind


def _coordinate(candidate: DesignCandidate, name: str) -> float:
    # All coordinates are minimized; failed synthesis maps to +inf.
    if name == "correctness":
        return -candidate.correctness.value
    if not is_synthesized(candidate.ppa):
        return math.inf
    if name == "ppa_product":
        return candidate.ppa.product
    return getattr(candidate.ppa, name)


def non_dominated_sort(pool: Sequence[DesignCandidate]) -> list[list[DesignCandidate]]:
    """Partition ``pool`` into Pareto levels, best first.

    Uses the dominance-count scheme; members keep input order within a level.
    """
    n = len(pool)
    vectors = [objective_vector(c) for c in pool]
    dominated_by_me: list[list[int]] = [[] for _ in range(n)]
    count = [0] * n
    for i in range(n):
        for j in range(i + 1, n):
            if dominates(vectors[i], vectors[j]):
                dominated_by_me[i].append(j)
                count[j] += 1
            elif dominates(vectors[j], vectors[i]):
                dominated_by_me[j].append(i)
                count[i] += 1

    levels: list[list[int]] = []
    current = [i for i in range(n) if count[i] == 0]
    while current:
        levels.append(current)
        nxt = []
        for i in current:
            for j in dominated_by_me[i]:
                count[j] -= 1
                if count[j] == 0:
                    nxt.append(j)
        current = sorted(nxt)
    return [[pool[i] for i in level] for level in levels]


def _sub_levels(level: Sequence[DesignCandidate], objectives: Sequence[str]) -> list[int]:
    coords = [tuple(_coordinate(c, o) for o in objectives) for c in level]

    def weakly_dominates(x, y):
        return all(a <= b for a, b in zip(x, y)) and any(a < b for a, b in zip(x, y))

    rank = [0] * len(level)
    remaining = set(range(len(level)))
    depth = 0
    while remaining:
        front = {
            i for i in remaining
            if not any(weakly_dominates(coords[j], coords[i]) for j in remaining if j != i)
        }
        for i in front:
            rank[i] = depth
        remaining -= front
        depth += 1
    return rank


def rank_within_level(
    level: Sequence[DesignCandidate], criterion: IntraLevelCriterion = IntraLevelCriterion()
) -> list[DesignCandidate]:
    """Stable total order over ``level`` according to ``criterion``."""
    if criterion.kind == "nds":
        ranks = _sub_levels(level, criterion.objectives)
        order = sorted(range(len(level)), key=lambda i: ranks[i])
        return [level[i] for i in order]
    return sorted(level, key=lambda c: _coordinate(c, criterion.kind))


def level_weight(k: int) -> float:
    """Weight of the 1-based level ``k``."""
    return 1.0 / (k + 1)


def _round_half_up(x: Fraction) -> int:
    return int((Decimal(x.numerator) / Decimal(x.denominator)).quantize(Decimal(1), rounding=ROUND_HALF_UP))


def allocate_slots(level_count: int, capacity: int) -> list[int]:
    """Slots per level, proportional to ``1/(k+1)``, summing to ``capacity``.

    Shares are rounded half-up. Any excess is then removed one slot at a time
    walking from the last level backwards; any shortfall is added one slot at a
    time walking forward from the first level.
    """
    if level_count < 1:
        raise ValueError("level_count must be >= 1")
    if capacity < 0:
        raise ValueError("capacity must be >= 0")
    # exact rational shares so half-way cases round the same on every platform
    weights = [Fraction(1, k + 1) for k in range(1, level_count + 1)]
    total_w = sum(weights)
    slots = [_round_half_up(w / total_w * capacity) for w in weights]

    k = 0
    while sum(slots) < capacity:
        slots[k % level_count] += 1
        k += 1
    k = level_count - 1
    while sum(slots) > capacity:
        if slots[k] > 0:
            slots[k] -= 1
        k = k - 1 if k > 0 else level_count - 1
    return slots


def select_survivors(
    pool: Sequence[DesignCandidate],
    capacity: int,
    criterion: IntraLevelCriterion = IntraLevelCriterion(),
) -> list[DesignCandidate]:
    """Reduce ``pool`` to ``min(capacity, len(pool))`` survivors.

    Levels are filled in rank order up to their slot allocation; unused slots
    cascade to the following level. Capacity still open after the last level
    is backfilled level by level from the unselected candidates.
    """
    if capacity < 1:
        raise ValueError("capacity must be >= 1")
    if len(pool) <= capacity:
        return list(pool)
    levels = [rank_within_level(level, criterion) for level in non_dominated_sort(pool)]
    slots = allocate_slots(len(levels), capacity)

    taken = [0] * len(levels)
    carry = 0
    for k, level in enumerate(levels):
        quota = slots[k] + carry
        taken[k] = min(quota, len(level))
        carry = quota - taken[k]

    remaining = capacity - sum(taken)
    for k, level in enumerate(levels):
        if remaining <= 0:
            break
        extra = min(remaining, len(level) - taken[k])
        taken[k] += extra
        remaining -= extra

    survivors: list[DesignCandidate] = []
    for k, level in enumerate(levels):
        survivors.extend(level[: taken[k]])
    return survivors


def pareto_front(
    pool: Sequence[DesignCandidate], criterion: IntraLevelCriterion = IntraLevelCriterion()
) -> list[DesignCandidate]:
    """The first Pareto level of ``pool``, ordered by ``criterion``."""
    if not pool:
        return []
    return rank_within_level(non_dominated_sort(pool)[0], criterion)
