"""Candidate representation and the four-objective Pareto dominance relation.

Objectives are ``(1 - c, area, delay, power)``, all minimized. A failed
synthesis result compares worse than any synthesized metrics on every PPA
coordinate, and equal to another failed result.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Union

__all__ = [
    "PpaMetrics",
    "SynthesisFailed",
    "PpaResult",
    "CorrectnessScore",
    "Lineage",
    "DesignCandidate",
    "ObjectiveVector",
    "UnevaluatedCandidateError",
    "objective_vector",
    "dominates",
    "is_synthesized",
]


class UnevaluatedCandidateError(ValueError):
    """Raised when an objective is requested for a candidate that was never evaluated."""


@dataclass(frozen=True)
class PpaMetrics:
    """Area (um^2), critical-path delay (ns) and power (uW) of a synthesized design."""

    area: float
    delay: float
    power: float

    def __post_init__(self):
        for name in ("area", "delay", "power"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ValueError(f"{name} must be finite and >= 0, got {value!r}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.area, self.delay, self.power)

    @property
    def product(self) -> float:
        return self.area * self.delay * self.power


@dataclass(frozen=True)
class SynthesisFailed:
    """The bottom PPA value. ``reason`` is informational and ignored by comparisons."""

    reason: str = field(default="", compare=False)


PpaResult = Union[PpaMetrics, SynthesisFailed]


def is_synthesized(ppa: Optional[PpaResult]) -> bool:
    return isinstance(ppa, PpaMetrics)


@dataclass(frozen=True)
class CorrectnessScore:
    passed: int
    total: int

    def __post_init__(self):
        if self.total < 1:
            raise ValueError("total must be a positive integer")
        if not 0 <= self.passed <= self.total:
            raise ValueError(f"passed={self.passed} outside [0, {self.total}]")

    @property
    def value(self) -> float:
        return self.passed / self.total

    @classmethod
    def zero(cls, total: int = 1) -> "CorrectnessScore":
        return cls(0, total)


@dataclass(frozen=True)
class Lineage:
    parents: tuple[str, ...] = ()
    operator: Optional[str] = None
    generation: int = 0
    strategy: Optional[str] = None
    repair_of: Optional[str] = None
    repair_round: int = 0


@dataclass(frozen=True)
class DesignCandidate:
    id: str
    source: str
    correctness: Optional[CorrectnessScore] = None
    ppa: Optional[PpaResult] = None
    test_report: tuple = ()
    synthesis_diagnosis: Optional[object] = None
    lineage: Lineage = field(default_factory=Lineage)

    @property
    def evaluated(self) -> bool:
        return self.correctness is not None and self.ppa is not None

    @property
    def c(self) -> float:
        if self.correctness is None:
            raise UnevaluatedCandidateError(f"candidate {self.id} has no correctness score")
        return self.correctness.value

    def with_evaluation(self, correctness, ppa, test_report=(), diagnosis=None) -> "DesignCandidate":
        return replace(
            self,
            correctness=correctness,
            ppa=ppa,
            test_report=tuple(test_report),
            synthesis_diagnosis=diagnosis,
        )


@dataclass(frozen=True)
class ObjectiveVector:
    incorrectness: float
    ppa: PpaResult

    @property
    def correctness(self) -> float:
        return 1.0 - self.incorrectness


def objective_vector(candidate: DesignCandidate) -> ObjectiveVector:
    if not candidate.evaluated:
        raise UnevaluatedCandidateError(
            f"candidate {candidate.id} must be evaluated before entering objective space"
        )
    return ObjectiveVector(1.0 - candidate.correctness.value, candidate.ppa)


def _ppa_compare(a: PpaResult, b: PpaResult) -> tuple[bool, bool]:
    """Return ``(a no worse than b on all PPA axes, a strictly better on some axis)``."""
    a_ok, b_ok = is_synthesized(a), is_synthesized(b)
    if not a_ok and not b_ok:
        return True, False
    if not a_ok:
        return False, False
    if not b_ok:
        return True, True
    pairs = list(zip(a.as_tuple(), b.as_tuple()))
    return all(x <= y for x, y in pairs), any(x < y for x, y in pairs)


def dominates(a: ObjectiveVector, b: ObjectiveVector) -> bool:
    """Strict Pareto dominance of ``a`` over ``b``.

    Floating-point comparisons are exact; tolerance-based comparison would
    break transitivity.
    """
    weak_ppa, strict_ppa = _ppa_compare(a.ppa, b.ppa)
    if not weak_ppa or a.incorrectness > b.incorrectness:
        return False
    return strict_ppa or a.incorrectness < b.incorrectness
