"""UCB scoring with softmax sampling for adaptive operator selection."""
from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .objectives import PpaMetrics, PpaResult, is_synthesized

__all__ = [
    "OperatorCategory",
    "OperatorStats",
    "BanditState",
    "MAX_SCORE",
    "ucb_score",
    "softmax_probabilities",
    "select_operator",
    "ppa_improved",
    "compute_reward",
    "record_reward",
    "componentwise_best",
]

MAX_SCORE = math.inf


class OperatorCategory(str, enum.Enum):
    CORRECTNESS = "correctness"
    PPA = "ppa"
    JOINT = "joint"


@dataclass
class OperatorStats:
    selections: int = 0
    cumulative_reward: float = 0.0

    @property
    def mean_reward(self) -> float:
        return self.cumulative_reward / self.selections if self.selections else 0.0


@dataclass
class BanditState:
    """Per-operator statistics plus the two knobs of the selector.

    ``total_selections`` counts pulls over the whole run, not per generation.
    """

    stats: dict[str, OperatorStats] = field(default_factory=dict)
    explore_coef: float = 2.0
    softmax_temperature: float = 1.0

    @classmethod
    def for_operators(cls, operators: Iterable[str], **kwargs) -> "BanditState":
        return cls({op: OperatorStats() for op in operators}, **kwargs)

    @property
    def operators(self) -> list[str]:
        return list(self.stats)

    @property
    def total_selections(self) -> int:
        return sum(s.selections for s in self.stats.values())

    def to_dict(self) -> dict:
        return {
            "explore_coef": self.explore_coef,
            "softmax_temperature": self.softmax_temperature,
            # a list, not a mapping: operator order drives the cumulative draw and must survive sort_keys
            "stats": [
                [op, {"selections": s.selections, "cumulative_reward": s.cumulative_reward}]
                for op, s in self.stats.items()
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BanditState":
        stats = {op: OperatorStats(**s) for op, s in data["stats"]}
        return cls(stats, data["explore_coef"], data["softmax_temperature"])


def ucb_score(state: BanditState, operator: str) -> float:
    s = state.stats[operator]
    total = state.total_selections
    if s.selections == 0 or total < 1:
        return MAX_SCORE
    return s.mean_reward + state.explore_coef * math.sqrt(math.log(total) / s.selections)


def softmax_probabilities(scores: Sequence[float], temperature: float = 1.0) -> list[float]:
    """Selection probabilities; infinite scores share all the mass uniformly."""
    unvisited = [i for i, s in enumerate(scores) if s == MAX_SCORE]
    if unvisited:
        p = 1.0 / len(unvisited)
        return [p if s == MAX_SCORE else 0.0 for s in scores]
    top = max(scores)
    exps = [math.exp((s - top) / temperature) for s in scores]
    z = math.fsum(exps)
    return [e / z for e in exps]


def select_operator(state: BanditState, rng: random.Random) -> str:
    if not state.stats:
        raise ValueError("no operators registered")
    ops = state.operators
    probs = softmax_probabilities([ucb_score(state, op) for op in ops], state.softmax_temperature)
    u = rng.random()
    acc = 0.0
    for op, p in zip(ops, probs):
        acc += p
        if u < acc:
            return op
    return next(op for op, p in zip(reversed(ops), reversed(probs)) if p > 0)


def ppa_improved(child: Optional[PpaResult], parent: Optional[PpaResult]) -> bool:
    """Pareto improvement of ``child`` over ``parent`` in (area, delay, power)."""
    if not is_synthesized(child):
        return False
    if not is_synthesized(parent):
        return True
    pairs = list(zip(child.as_tuple(), parent.as_tuple()))
    return all(x <= y for x, y in pairs) and any(x < y for x, y in pairs)


def compute_reward(
    category: OperatorCategory,
    child: tuple[float, Optional[PpaResult]],
    parent: tuple[float, Optional[PpaResult]],
) -> int:
    c_child, m_child = child
    c_parent, m_parent = parent
    category = OperatorCategory(category)
    if category is OperatorCategory.CORRECTNESS:
        return int(c_child > c_parent)
    if category is OperatorCategory.PPA:
        return int(ppa_improved(m_child, m_parent) and c_child >= c_parent)
    return int(c_child > c_parent and ppa_improved(m_child, m_parent))


def record_reward(state: BanditState, operator: str, reward: float) -> BanditState:
    s = state.stats[operator]
    s.selections += 1
    s.cumulative_reward += reward
    return state


def componentwise_best(bases: Sequence[tuple[float, Optional[PpaResult]]]):
    """Reward basis combining several parents: best correctness, per-axis min PPA."""
    c = max(b[0] for b in bases)
    synthesized = [b[1] for b in bases if is_synthesized(b[1])]
    if not synthesized:
        return c, bases[0][1]
    m = PpaMetrics(
        min(p.area for p in synthesized),
        min(p.delay for p in synthesized),
        min(p.power for p in synthesized),
    )
    return c, m
