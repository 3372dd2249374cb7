"""A deterministic stand-in design space for exercising the engine without LLMs or EDA tools.

A genome has 32 functional bits scored against a hidden 32-bit target, 8
cost bits that inflate area and power, and an architecture tag selecting a
base (area, delay, power) point. Setting all cost bits is the illegal
pattern that fails synthesis.
"""
from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass
from typing import Optional, Sequence

from ..evaluation import SynthesisDiagnosis, TestCaseResult, TestbenchArtifact, render_case_lines
from ..objectives import CorrectnessScore, PpaMetrics, PpaResult, SynthesisFailed
from .base import GenerationRequest, ToolResult

FUNC_BITS = 32
COST_BITS = 8
BASE_TABLE = {
    0: (100.0, 1.0, 50.0),
    1: (90.0, 1.2, 45.0),
    2: (140.0, 0.6, 70.0),
    3: (80.0, 1.4, 40.0),
    4: (95.0, 1.1, 42.0),
}
_GENOME_LINE = re.compile(r"SYNTH v1 func=([01]{32}) cost=([01]{8}) tag=(\d+)")
_SPEC_TARGET = re.compile(r"\btarget=([01]{32})\b")
INIT_BIT_ACCURACY = 0.96


@dataclass(frozen=True)
class SyntheticGenome:
    func_bits: tuple[bool, ...]
    cost_bits: tuple[bool, ...]
    arch_tag: int

    def __post_init__(self):
        if len(self.func_bits) != FUNC_BITS or len(self.cost_bits) != COST_BITS:
            raise ValueError("genome needs 32 functional and 8 cost bits")
        if self.arch_tag not in BASE_TABLE:
            raise ValueError(f"arch_tag must be in 0..4, got {self.arch_tag}")

    def encode(self) -> str:
        return f"SYNTH v1 func={bits_to_str(self.func_bits)} cost={bits_to_str(self.cost_bits)} tag={self.arch_tag}"

    @classmethod
    def decode(cls, text: str) -> "SyntheticGenome":
        m = _GENOME_LINE.search(text or "")
        if m is None:
            raise ValueError("no synthetic genome line in source")
        return cls(
            tuple(ch == "1" for ch in m.group(1)),
            tuple(ch == "1" for ch in m.group(2)),
            int(m.group(3)),
        )

    @classmethod
    def random(cls, rng: random.Random, arch_tag: Optional[int] = None) -> "SyntheticGenome":
        func = tuple(rng.random() < 0.5 for _ in range(FUNC_BITS))
        cost = tuple(rng.random() < 0.5 for _ in range(COST_BITS))
        tag = rng.randrange(len(BASE_TABLE)) if arch_tag is None else arch_tag
        return cls(func, cost, tag)


def random_target(rng: random.Random) -> tuple[bool, ...]:
    return tuple(rng.random() < 0.5 for _ in range(FUNC_BITS))


def bits_to_str(bits: Sequence[bool]) -> str:
    return "".join("1" if b else "0" for b in bits)


def synthetic_spec(target: Sequence[bool]) -> str:
    """Task text for a synthetic design; initialization reads the target from it."""
    return f"Synthetic design task: implement the 32-bit function target={bits_to_str(target)}"


def spec_target(spec: str) -> Optional[tuple[bool, ...]]:
    m = _SPEC_TARGET.search(spec or "")
    return None if m is None else tuple(ch == "1" for ch in m.group(1))


def noisy_implementation(
    target: Sequence[bool], rng: random.Random, arch_tag: int, accuracy: float = INIT_BIT_ACCURACY
) -> SyntheticGenome:
    """Initial design written from the spec: each functional bit is right with probability ``accuracy``."""
    func = tuple(bool(b) if rng.random() < accuracy else not b for b in target)
    cost = tuple(rng.random() < 0.5 for _ in range(COST_BITS))
    return SyntheticGenome(func, cost, arch_tag)


def synthetic_evaluate(
    genome: SyntheticGenome, target: Sequence[bool]
) -> tuple[CorrectnessScore, PpaResult, list[TestCaseResult]]:
    results = []
    for i, (bit, want) in enumerate(zip(genome.func_bits, target)):
        if bit == want:
            results.append(TestCaseResult(str(i), True))
        else:
            results.append(TestCaseResult(str(i), False, f"func[{i}]", str(int(want)), str(int(bit))))
    matched = sum(r.passed for r in results)
    score = CorrectnessScore(matched, FUNC_BITS)
    if all(genome.cost_bits):
        return score, SynthesisFailed("illegal cost pattern: multi-driver conflict"), results
    area, delay, power = BASE_TABLE[genome.arch_tag]
    ones = sum(genome.cost_bits)
    ppa = PpaMetrics(area + 10 * ones, delay + 0.05 * (FUNC_BITS - matched), power + 5 * ones)
    return score, ppa, results


def _mismatches(genome: SyntheticGenome, failing: Sequence[int]) -> list[int]:
    return sorted(i for i in set(failing) if 0 <= i < FUNC_BITS)


def _flip(bits: tuple[bool, ...], i: int) -> tuple[bool, ...]:
    return bits[:i] + (not bits[i],) + bits[i + 1:]


def _clear(bits: tuple[bool, ...], positions) -> tuple[bool, ...]:
    positions = set(positions)
    return tuple(False if i in positions else b for i, b in enumerate(bits))


def _lowest_delay_tag_other_than(tag: int) -> int:
    return min((t for t in BASE_TABLE if t != tag), key=lambda t: BASE_TABLE[t][1])


def synthetic_operator_apply(
    operator: str,
    parents: Sequence[SyntheticGenome],
    rng: random.Random,
    failing: Sequence[int] = (),
    parent_scores: Sequence[tuple[float, float]] = (),
) -> SyntheticGenome:
    """Apply one operator's intent to synthetic genomes.

    ``failing`` lists the mismatched case indices of the (first) parent.
    ``parent_scores`` gives ``(correctness, ppa_product)`` per parent, with
    ``inf`` product for failed synthesis; only fusion uses it.
    """
    if operator == "explore":
        return SyntheticGenome.random(rng)
    p = parents[0]
    mismatched = _mismatches(p, failing)
    if operator in ("fix", "ppa_aware_fix"):
        if not mismatched:
            return p
        return SyntheticGenome(_flip(p.func_bits, rng.choice(mismatched)), p.cost_bits, p.arch_tag)
    if operator == "simplify":
        set_bits = [i for i, b in enumerate(p.cost_bits) if b]
        cleared = rng.sample(set_bits, min(2, len(set_bits)))
        func = p.func_bits
        if mismatched and rng.random() < 0.5:
            func = _flip(func, rng.choice(mismatched))
        return SyntheticGenome(func, _clear(p.cost_bits, cleared), p.arch_tag)
    if operator in ("optimize", "repair"):
        set_bits = [i for i, b in enumerate(p.cost_bits) if b]
        if not set_bits:
            return p
        return SyntheticGenome(p.func_bits, _clear(p.cost_bits, [rng.choice(set_bits)]), p.arch_tag)
    if operator == "restructure":
        return SyntheticGenome(p.func_bits, p.cost_bits, _lowest_delay_tag_other_than(p.arch_tag))
    if operator == "architecture_fusion":
        q = parents[1] if len(parents) > 1 else p
        scores = list(parent_scores) or [(0.0, 0.0), (0.0, 0.0)]
        if len(scores) == 1:
            scores = scores * 2
        correct = p if scores[0][0] >= scores[1][0] else q
        cheap = p if scores[0][1] <= scores[1][1] else q
        return SyntheticGenome(correct.func_bits, cheap.cost_bits, cheap.arch_tag)
    raise ValueError(f"unknown operator {operator!r}")


def _fence(text: str) -> str:
    return f"```\n{text}\n```"


class SyntheticGenerationBackend:
    """Answers generation requests from their structured ``context``, not the prompt text.

    Initial designs follow the target stated in the task spec with per-bit
    accuracy ``init_accuracy`` (uniformly random if the spec states none).
    """

    def __init__(self, strategies: Optional[Sequence[str]] = None, init_accuracy: float = INIT_BIT_ACCURACY):
        self.strategies = list(strategies) if strategies else None
        self.init_accuracy = init_accuracy

    def generate(self, request: GenerationRequest) -> str:
        ctx = request.context
        rng = random.Random(ctx.get("seed", 0))
        kind = request.operator
        if kind == "strategy_query":
            return ", ".join(ctx.get("strategies", self.strategies or []))
        if kind == "init":
            tag = ctx.get("strategy_index", 0) % len(BASE_TABLE)
            target = spec_target(ctx.get("spec", ""))
            if target is None:
                genome = SyntheticGenome.random(rng, arch_tag=tag)
            else:
                genome = noisy_implementation(target, rng, tag, self.init_accuracy)
            return _fence(genome.encode())
        if kind == "testbench":
            return "synthetic tasks ship their own testbench"
        parents = [SyntheticGenome.decode(s) for s in ctx.get("parent_sources", ())]
        failing = [int(i) for i in ctx.get("failing_cases", ()) if str(i).isdigit()]
        scores = [tuple(s) for s in ctx.get("parent_scores", ())]
        child = synthetic_operator_apply(kind, parents, rng, failing, scores)
        return "Revised design:\n" + _fence(child.encode())


class SyntheticSimulationBackend:
    def __init__(self, target: Sequence[bool]):
        if len(target) != FUNC_BITS:
            raise ValueError("target needs 32 bits")
        self.target = tuple(bool(b) for b in target)

    def testbench(self) -> TestbenchArtifact:
        return TestbenchArtifact("synthetic", FUNC_BITS, "provided")

    def simulate(self, design: str, testbench: str, timeout: float = 60.0) -> ToolResult:
        try:
            genome = SyntheticGenome.decode(design)
        except ValueError as exc:
            return ToolResult(f"compile error: {exc}", "error", 1)
        _, _, results = synthetic_evaluate(genome, self.target)
        return ToolResult(render_case_lines(results, FUNC_BITS))


class SyntheticSynthesisBackend:
    report_format = "json"

    def __init__(self, target: Sequence[bool]):
        self.target = tuple(bool(b) for b in target)

    def synthesize(self, design: str, timeout: float = 300.0) -> ToolResult:
        try:
            genome = SyntheticGenome.decode(design)
        except ValueError as exc:
            record = {"synthesis_failed": True, "reason": f"parse error: {exc}"}
            return ToolResult(json.dumps(record), "error", 1)
        _, ppa, _ = synthetic_evaluate(genome, self.target)
        ones = sum(genome.cost_bits)
        if isinstance(ppa, SynthesisFailed):
            record = {"synthesis_failed": True, "reason": ppa.reason}
            return ToolResult(json.dumps(record), "error", 1)
        base_delay = BASE_TABLE[genome.arch_tag][1]
        diagnosis = SynthesisDiagnosis(
            cell_count=10 + 4 * ones,
            critical_path=(("arch_core", base_delay), ("func_mismatch_logic", ppa.delay - base_delay)),
            resource_notes=(f"cost bits set: {ones}", f"architecture tag {genome.arch_tag}"),
        )
        record = {
            "area_um2": ppa.area,
            "delay_ns": ppa.delay,
            "power_uw": ppa.power,
            "diagnosis": diagnosis.to_dict(),
        }
        return ToolResult(json.dumps(record))
