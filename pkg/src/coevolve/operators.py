"""Evolutionary operators, initialization, parent selection and prompt handling."""
from __future__ import annotations

import logging
import math
import random
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

from ._seeding import derive_seed
from .backends.base import BackendError, GenerationBackend, GenerationRequest
from .bandit import OperatorCategory
from .evaluation import SynthesisDiagnosis, TestCaseResult
from .objectives import DesignCandidate, Lineage, is_synthesized
from .pareto import level_weight

logger = logging.getLogger(__name__)

__all__ = [
    "OperatorSpec",
    "OPERATORS",
    "ArchitectureStrategy",
    "DEFAULT_STRATEGIES",
    "ParseFailure",
    "PromptLibrary",
    "multi_arch_init",
    "select_parents",
    "build_prompt",
    "parse_generation",
]

DEFAULT_TEMPERATURE = 0.8
DEFAULT_TOP_P = 0.95
MAX_DIAGNOSTIC_LINES = 20


@dataclass(frozen=True)
class OperatorSpec:
    id: str
    category: OperatorCategory
    arity: int
    uses_tests: bool = False
    uses_synthesis: bool = False


OPERATORS: dict[str, OperatorSpec] = {
    op.id: op
    for op in (
        OperatorSpec("fix", OperatorCategory.CORRECTNESS, 1, uses_tests=True),
        OperatorSpec("simplify", OperatorCategory.CORRECTNESS, 1, uses_tests=True),
        OperatorSpec("optimize", OperatorCategory.PPA, 1, uses_synthesis=True),
        OperatorSpec("restructure", OperatorCategory.PPA, 1, uses_synthesis=True),
        OperatorSpec("explore", OperatorCategory.PPA, 0),
        OperatorSpec("ppa_aware_fix", OperatorCategory.JOINT, 1, uses_tests=True, uses_synthesis=True),
        OperatorSpec("architecture_fusion", OperatorCategory.JOINT, 2),
    )
}


@dataclass(frozen=True)
class ArchitectureStrategy:
    name: str
    description: str


DEFAULT_STRATEGIES = (
    ArchitectureStrategy("behavioral", "Describe the function at a high level with always blocks and operators, letting synthesis infer the structure."),
    ArchitectureStrategy("structural", "Compose the design explicitly from smaller gate-level or module-level building blocks."),
    ArchitectureStrategy("pipeline", "Split long combinational paths into register-separated stages where the interface timing allows it."),
    ArchitectureStrategy("resource-shared", "Reuse arithmetic and logic units across operations through multiplexing to save area."),
    ArchitectureStrategy("fsm-minimized", "Use the smallest state machine and encoding that implements the required behavior."),
)


class ParseFailure(ValueError):
    """The generation reply contained no extractable design source."""


class PromptLibrary:
    """Loads ``<name>.txt`` templates from ``directory`` or the bundled defaults."""

    def __init__(self, directory: Optional[str | Path] = None):
        self.directory = Path(directory) if directory else None
        self._cache: dict[str, str] = {}

    def template(self, name: str) -> str:
        if name not in self._cache:
            if self.directory is not None and (self.directory / f"{name}.txt").exists():
                text = (self.directory / f"{name}.txt").read_text()
            else:
                text = resources.files("coevolve.templates").joinpath(f"{name}.txt").read_text()
            self._cache[name] = text
        return self._cache[name]

    def render(self, name: str, **values) -> str:
        return self.template(name).format_map(_Missing(values))


class _Missing(dict):
    def __missing__(self, key):
        return f"(no {key.replace('_', ' ')} available)"


def _failing_lines(report: Sequence[TestCaseResult]) -> str:
    failing = [r for r in report if not r.passed]
    if not failing:
        return "(No failing-test diagnostics are available for this design.)"
    lines = [r.describe() for r in failing[:MAX_DIAGNOSTIC_LINES]]
    if len(failing) > MAX_DIAGNOSTIC_LINES:
        lines.append(f"... and {len(failing) - MAX_DIAGNOSTIC_LINES} more failing cases")
    return "\n".join(lines)


def _diagnosis_text(diagnosis: Optional[SynthesisDiagnosis], ppa=None) -> str:
    parts = []
    if is_synthesized(ppa):
        parts.append(f"area {ppa.area:g} um^2, delay {ppa.delay:g} ns, power {ppa.power:g} uW")
    elif ppa is not None:
        parts.append(f"synthesis failed: {ppa.reason or 'unknown reason'}")
    if diagnosis is not None:
        parts.append(diagnosis.describe())
    if not parts:
        return "(No synthesis diagnosis is available for this design.)"
    return "\n".join(parts)


def _summary(c: DesignCandidate) -> str:
    ppa = f"A*D*P={c.ppa.product:.4g}" if is_synthesized(c.ppa) else "synthesis failed"
    strategy = c.lineage.strategy or c.lineage.operator or "unknown"
    return f"c={c.correctness.value:.3f}, {ppa}, origin: {strategy}"


def _adp(c: DesignCandidate) -> float:
    return c.ppa.product if is_synthesized(c.ppa) else math.inf


def population_digest(population: Sequence[DesignCandidate]) -> str:
    if not population:
        return "(empty population)"
    return "\n".join(f"- {c.id}: {_summary(c)}" for c in population)


def build_prompt(
    operator: OperatorSpec,
    spec: str,
    parents: Sequence[DesignCandidate],
    library: Optional[PromptLibrary] = None,
    *,
    population: Sequence[DesignCandidate] = (),
    generation: int = 0,
    seed: int = 0,
    temperature: float = DEFAULT_TEMPERATURE,
    top_p: float = DEFAULT_TOP_P,
) -> GenerationRequest:
    """Fill ``operator``'s template with the spec and the parents' artifacts."""
    if len(parents) != operator.arity:
        raise ValueError(f"{operator.id} takes {operator.arity} parent(s), got {len(parents)}")
    library = library or PromptLibrary()
    values = {"spec": spec}
    context: dict = {"seed": seed}
    if parents:
        first = parents[0]
        values["parent_source"] = first.source
        values["diagnostics"] = _failing_lines(first.test_report)
        values["synthesis_diagnosis"] = _diagnosis_text(first.synthesis_diagnosis, first.ppa)
        context["parent_sources"] = [p.source for p in parents]
        context["failing_cases"] = [r.case_id for r in first.test_report if not r.passed]
        context["parent_scores"] = [(p.correctness.value, _adp(p)) for p in parents]
    if operator.arity == 2:
        a, b = parents
        values["parent_label"] = _summary(a)
        values["second_parent_label"] = _summary(b)
        values["second_parent_source"] = b.source
    if operator.id == "explore":
        values["population_digest"] = population_digest(population)
    return GenerationRequest(
        prompt=library.render(operator.id, **values),
        temperature=temperature,
        top_p=top_p,
        operator=operator.id,
        parent_ids=tuple(p.id for p in parents),
        generation=generation,
        context=context,
    )


_FENCE = re.compile(r"```[^\n`]*\n(.*?)```", re.DOTALL)
_MODULE = re.compile(r"\bmodule\b.*\bendmodule\b", re.DOTALL)


def parse_generation(reply: str) -> str:
    """Extract design source from a model reply.

    The last fenced block wins; without fences, the text from the first
    ``module`` keyword to the last ``endmodule`` is used.
    """
    blocks = [b.strip() for b in _FENCE.findall(reply or "")]
    blocks = [b for b in blocks if b]
    if blocks:
        return blocks[-1]
    if m := _MODULE.search(reply or ""):
        return m.group(0).strip()
    raise ParseFailure("reply contains no design source")


def _parse_strategy_reply(reply: str, strategies: Sequence[ArchitectureStrategy]):
    text = reply.lower()
    chosen = [s for s in strategies if re.search(rf"(?<![\w-]){re.escape(s.name.lower())}(?![\w-])", text)]
    return chosen or list(strategies)


def multi_arch_init(
    spec: str,
    population_size: int,
    strategies: Sequence[ArchitectureStrategy],
    backend: GenerationBackend,
    library: Optional[PromptLibrary] = None,
    *,
    seed: int = 0,
    temperature: float = DEFAULT_TEMPERATURE,
    top_p: float = DEFAULT_TOP_P,
) -> list[DesignCandidate]:
    """Generate the unevaluated initial population across architecture strategies.

    Each applicable strategy gets ``ceil(N / |strategies|)`` requests in
    turn until ``N`` candidates exist. A failed request leaves an
    empty-source candidate in its place.
    """
    if population_size < 1:
        raise ValueError("population_size must be >= 1")
    if not strategies:
        raise ValueError("at least one architecture strategy is required")
    library = library or PromptLibrary()
    names = [s.name for s in strategies]
    query = GenerationRequest(
        prompt=library.render(
            "strategy_query", spec=spec, strategy_list="\n".join(f"- {s.name}: {s.description}" for s in strategies)
        ),
        temperature=temperature,
        top_p=top_p,
        operator="strategy_query",
        context={"seed": derive_seed(seed, "strategy_query"), "strategies": names},
    )
    try:
        applicable = _parse_strategy_reply(backend.generate(query), strategies)
    except BackendError as exc:
        logger.warning("strategy query failed (%s); using all strategies", exc)
        applicable = list(strategies)

    per_strategy = math.ceil(population_size / len(applicable))
    candidates: list[DesignCandidate] = []
    for strategy in applicable:
        for _ in range(per_strategy):
            if len(candidates) == population_size:
                break
            k = len(candidates)
            request = GenerationRequest(
                prompt=library.render(
                    "init", spec=spec, strategy=strategy.name, strategy_description=strategy.description
                ),
                temperature=temperature,
                top_p=top_p,
                operator="init",
                context={
                    "seed": derive_seed(seed, 0, "init", k),
                    "spec": spec,
                    "strategy_index": names.index(strategy.name),
                },
            )
            try:
                source = parse_generation(backend.generate(request))
            except (BackendError, ParseFailure) as exc:
                logger.warning("initial candidate %d (%s) failed: %s", k, strategy.name, exc)
                source = ""
            candidates.append(
                DesignCandidate(
                    id=f"g0-i{k:02d}",
                    source=source,
                    lineage=Lineage(operator="init", generation=0, strategy=strategy.name),
                )
            )
    return candidates


def select_parents(
    levels: Sequence[Sequence[DesignCandidate]],
    operator: OperatorSpec,
    rng: random.Random,
) -> list[DesignCandidate]:
    """Pick ``operator.arity`` parents from a population already split into Pareto levels.

    Each candidate is drawn with weight ``1/(k+1)`` of its level ``k``. A
    second parent is the complement of the first: the most correct remaining
    candidate when the first is not the most correct, otherwise the remaining
    synthesized candidate with the lowest area x delay x power. Two-parent
    results are ordered correctness-strong first.
    """
    members = [c for level in levels for c in level]
    if not members:
        raise ValueError("cannot select parents from an empty population")
    if operator.arity == 0:
        return []
    weights = [level_weight(k) for k, level in enumerate(levels, 1) for _ in level]
    first = rng.choices(members, weights=weights, k=1)[0]
    if operator.arity == 1:
        return [first]

    rest = [c for c in members if c is not first]
    if not rest:
        return [first, first]
    best_rest_c = max(c.correctness.value for c in rest)
    if first.correctness.value >= best_rest_c:
        synthesized = [c for c in rest if is_synthesized(c.ppa)]
        pool = synthesized or rest
        second = min(pool, key=_adp) if synthesized else max(pool, key=lambda c: c.correctness.value)
    else:
        second = max(rest, key=lambda c: c.correctness.value)
    pair = [first, second]
    pair.sort(key=lambda c: (-c.correctness.value, _adp(c)))
    return pair


def build_repair_prompt(
    candidate: DesignCandidate,
    spec: str,
    library: Optional[PromptLibrary] = None,
    *,
    generation: int = 0,
    seed: int = 0,
    temperature: float = DEFAULT_TEMPERATURE,
    top_p: float = DEFAULT_TOP_P,
) -> GenerationRequest:
    library = library or PromptLibrary()
    prompt = library.render(
        "repair",
        spec=spec,
        parent_source=candidate.source,
        synthesis_diagnosis=_diagnosis_text(candidate.synthesis_diagnosis, candidate.ppa),
    )
    return GenerationRequest(
        prompt=prompt,
        temperature=temperature,
        top_p=top_p,
        operator="repair",
        parent_ids=(candidate.id,),
        generation=generation,
        context={
            "seed": seed,
            "parent_sources": [candidate.source],
            "failing_cases": [r.case_id for r in candidate.test_report if not r.passed],
        },
    )
