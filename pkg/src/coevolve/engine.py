"""The generational loop: initialize, breed, evaluate, repair, reward, gate, select.

Every step is appended to a JSONL run log and a JSON checkpoint is written at
each generation boundary, so an interrupted run can be resumed and replays
the exact same log.
"""
from __future__ import annotations

import json
import logging
import os
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

from ._seeding import derive_rng, derive_seed
from .backends.base import (
    BackendProtocolError,
    BackendUnavailable,
    GenerationBackend,
    SimulationBackend,
    SynthesisBackend,
)
from .bandit import BanditState, componentwise_best, compute_reward, record_reward, select_operator
from .evaluation import ConfigurationError, TestbenchArtifact, parse_ppa_report, score_correctness
from .gate import GateSchedule, apply_gate, gate_threshold
from .objectives import CorrectnessScore, DesignCandidate, Lineage, SynthesisFailed, is_synthesized
from .operators import (
    DEFAULT_STRATEGIES,
    OPERATORS,
    ArchitectureStrategy,
    ParseFailure,
    PromptLibrary,
    build_prompt,
    build_repair_prompt,
    multi_arch_init,
    parse_generation,
    select_parents,
)
from .pareto import IntraLevelCriterion, non_dominated_sort, pareto_front, select_survivors
from .records import candidate_from_dict, candidate_to_dict

logger = logging.getLogger(__name__)

__all__ = ["RunConfig", "Task", "Backends", "RunState", "RunInterrupted", "CoEvolutionEngine", "Evaluator"]

CHECKPOINT_VERSION = 1


class RunInterrupted(RuntimeError):
    """The run stopped early; the last checkpoint can be resumed."""


@dataclass(frozen=True)
class RunConfig:
    population_size: int = 10
    offspring_count: int = 10
    generations: int = 10
    repair_budget: int = 3
    theta_min: float = 0.25
    theta_max: float = 1.0
    gate_alpha: float = 2.0
    explore_coef: float = 2.0
    softmax_temperature: float = 1.0
    criterion: IntraLevelCriterion = field(default_factory=IntraLevelCriterion)
    seed: int = 0
    temperature: float = 0.8
    top_p: float = 0.95
    strategies: tuple[ArchitectureStrategy, ...] = DEFAULT_STRATEGIES
    simulation_timeout: float = 60.0
    synthesis_timeout: float = 300.0
    workers: int = 1

    def __post_init__(self):
        if self.population_size < 1 or self.generations < 1:
            raise ConfigurationError("population_size and generations must be >= 1")
        if self.offspring_count < 0 or self.repair_budget < 0:
            raise ConfigurationError("offspring_count and repair_budget must be >= 0")
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")
        if isinstance(self.criterion, str):
            object.__setattr__(self, "criterion", IntraLevelCriterion.parse(self.criterion))
        self.gate  # validates the schedule

    @property
    def gate(self) -> GateSchedule:
        return GateSchedule(self.theta_min, self.theta_max, self.gate_alpha, self.generations)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["criterion"] = str(self.criterion)
        d["strategies"] = [[s.name, s.description] for s in self.strategies]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigurationError(f"unknown run settings: {sorted(unknown)}")
        if "criterion" in d:
            d["criterion"] = IntraLevelCriterion.parse(str(d["criterion"]))
        if "strategies" in d:
            d["strategies"] = tuple(
                ArchitectureStrategy(*s) if isinstance(s, (list, tuple)) else ArchitectureStrategy(s["name"], s.get("description", ""))
                for s in d["strategies"]
            )
        return cls(**d)


@dataclass(frozen=True)
class Task:
    """One design problem. ``scoring_testbench`` (if any) re-scores the final population for Pass@k."""

    id: str
    spec: str
    testbench: TestbenchArtifact
    scoring_testbench: Optional[TestbenchArtifact] = None


@dataclass
class Backends:
    generation: GenerationBackend
    simulation: SimulationBackend
    synthesis: SynthesisBackend


@dataclass
class RunState:
    generation: int
    population: list
    bandit: BanditState
    rng_state: object
    archive: list
    log_position: int = 0

    def to_dict(self) -> dict:
        return {
            "generation": self.generation,
            "population": [c.id for c in self.population],
            "bandit": self.bandit.to_dict(),
            "rng_state": _rng_state_to_json(self.rng_state),
            "archive": [candidate_to_dict(c) for c in self.archive],
            "log_position": self.log_position,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunState":
        archive = [candidate_from_dict(c) for c in d["archive"]]
        by_id = {c.id: c for c in archive}
        return cls(
            generation=d["generation"],
            population=[by_id[i] for i in d["population"]],
            bandit=BanditState.from_dict(d["bandit"]),
            rng_state=_rng_state_from_json(d["rng_state"]),
            archive=archive,
            log_position=d["log_position"],
        )


def _rng_state_to_json(state):
    version, internal, gauss = state
    return [version, list(internal), gauss]


def _rng_state_from_json(data):
    version, internal, gauss = data
    return (version, tuple(internal), gauss)


class EventLog:
    """Append-only JSONL writer with canonical encoding (byte-stable across runs)."""

    def __init__(self, path: Optional[str | Path], truncate_to: Optional[int] = None):
        self.path = Path(path) if path else None
        self.events: list[dict] = []
        self._fh = None
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            if truncate_to is None:
                self._fh = open(self.path, "wb")
            else:
                self._fh = open(self.path, "r+b")
                self._fh.truncate(truncate_to)
                self._fh.seek(truncate_to)

    def emit(self, event: str, generation: int, candidate: Optional[str] = None, **payload):
        record = {"event": event, "generation": generation, "candidate": candidate, "payload": payload}
        self.events.append(record)
        if self._fh is not None:
            line = json.dumps(record, sort_keys=True, separators=(",", ":"), allow_nan=False)
            self._fh.write(line.encode() + b"\n")

    def position(self) -> int:
        if self._fh is None:
            return 0
        self._fh.flush()
        return self._fh.tell()

    def close(self):
        if self._fh is not None:
            self._fh.flush()
            os.fsync(self._fh.fileno())
            self._fh.close()
            self._fh = None


class Evaluator:
    """Simulates then synthesizes one candidate."""

    def __init__(self, testbench: TestbenchArtifact, backends: Backends, config: RunConfig):
        self.testbench = testbench
        self.backends = backends
        self.config = config

    def correctness(self, source: str, testbench: Optional[TestbenchArtifact] = None):
        tb = testbench or self.testbench
        if not source.strip():
            return CorrectnessScore.zero(tb.case_count), ()
        run = self.backends.simulation.simulate(source, tb.source, self.config.simulation_timeout)
        results = tb.check(run.output)
        return score_correctness(results, tb.case_count), tuple(results)

    def ppa(self, source: str):
        if not source.strip():
            return SynthesisFailed("empty design"), None
        synth = self.backends.synthesis
        run = synth.synthesize(source, self.config.synthesis_timeout)
        if run.status == "timeout":
            return SynthesisFailed("synthesis timed out"), None
        ppa, diagnosis = parse_ppa_report(run.output, synth.report_format)
        if not run.ok and is_synthesized(ppa):
            return SynthesisFailed(f"synthesis tool exited with status {run.exit_code}"), diagnosis
        return ppa, diagnosis

    def evaluate(self, candidate: DesignCandidate) -> DesignCandidate:
        score, report = self.correctness(candidate.source)
        ppa, diagnosis = self.ppa(candidate.source)
        return candidate.with_evaluation(score, ppa, report, diagnosis)


@dataclass
class _Slot:
    index: int
    operator: str
    parents: list
    request: object
    candidate: Optional[DesignCandidate] = None
    attempts: list = field(default_factory=list)
    failed: bool = False


class CoEvolutionEngine:
    def __init__(
        self,
        config: RunConfig,
        task: Task,
        backends: Backends,
        *,
        log_path: Optional[str | Path] = None,
        checkpoint_path: Optional[str | Path] = None,
        library: Optional[PromptLibrary] = None,
    ):
        self.config = config
        self.task = task
        self.backends = backends
        self.log_path = Path(log_path) if log_path else None
        self.checkpoint_path = Path(checkpoint_path) if checkpoint_path else None
        self.library = library or PromptLibrary()
        self.evaluator = Evaluator(task.testbench, backends, config)
        self.state: Optional[RunState] = None
        self.log: Optional[EventLog] = None

    # -- public entry points -------------------------------------------------

    def run(self, stop_after: Optional[int] = None) -> list[DesignCandidate]:
        """Run from scratch. ``stop_after=t`` halts after checkpointing generation ``t``."""
        self.log = EventLog(self.log_path)
        try:
            self._start()
            return self._loop(stop_after)
        finally:
            self.log.close()

    def resume(self, stop_after: Optional[int] = None) -> list[DesignCandidate]:
        """Continue from ``checkpoint_path``, discarding log events written after it."""
        if self.checkpoint_path is None or not self.checkpoint_path.exists():
            raise ConfigurationError("no checkpoint to resume from")
        data = json.loads(self.checkpoint_path.read_text())
        if data.get("version") != CHECKPOINT_VERSION:
            raise ConfigurationError("unsupported checkpoint version")
        if data["config"] != self.config.to_dict():
            raise ConfigurationError("checkpoint was written with a different configuration")
        self.state = RunState.from_dict(data["state"])
        self.log = EventLog(self.log_path, truncate_to=self.state.log_position)
        try:
            return self._loop(stop_after)
        finally:
            self.log.close()

    # -- loop ----------------------------------------------------------------

    def _start(self):
        cfg = self.config
        self.log.emit(
            "run_start",
            0,
            task=self.task.id,
            config=cfg.to_dict(),
            testbench={"case_count": self.task.testbench.case_count, "origin": self.task.testbench.origin},
        )
        initial = multi_arch_init(
            self.task.spec,
            cfg.population_size,
            cfg.strategies,
            self.backends.generation,
            self.library,
            seed=cfg.seed,
            temperature=cfg.temperature,
            top_p=cfg.top_p,
        )
        evaluated = self._map(self.evaluator.evaluate, initial)
        for c in evaluated:
            self.log.emit("candidate", 0, c.id, record=candidate_to_dict(c))
        bandit = BanditState.for_operators(
            OPERATORS, explore_coef=cfg.explore_coef, softmax_temperature=cfg.softmax_temperature
        )
        rng = random.Random(cfg.seed)
        self.state = RunState(0, list(evaluated), bandit, rng.getstate(), list(evaluated))
        self.log.emit("population", 0, ids=[c.id for c in evaluated])
        self._checkpoint()

    def _loop(self, stop_after: Optional[int]) -> list[DesignCandidate]:
        cfg = self.config
        state = self.state
        for t in range(state.generation + 1, cfg.generations + 1):
            if stop_after is not None and state.generation >= stop_after:
                raise RunInterrupted(f"stopped after generation {state.generation}")
            theta = gate_threshold(cfg.gate, t)
            self.log.emit("generation_start", t, theta=theta)
            offspring = self.produce_offspring(t)
            pool = state.population + offspring
            gate = apply_gate(pool, theta, cfg.population_size)
            if gate.fallback:
                self.log.emit("gate_fallback", t, theta=theta, admitted=[c.id for c in gate.gated])
            survivors = select_survivors(gate.gated, cfg.population_size, cfg.criterion)
            self.log.emit(
                "population", t, ids=[c.id for c in survivors], gated=len(gate.gated), rejected=len(gate.rejected)
            )
            state.population = survivors
            state.generation = t
            self._checkpoint()
        if stop_after is not None and state.generation >= stop_after and state.generation < cfg.generations:
            raise RunInterrupted(f"stopped after generation {state.generation}")

        front = pareto_front(state.population, cfg.criterion)
        if self.task.scoring_testbench is not None and self.task.scoring_testbench is not self.task.testbench:
            rescored = {}
            for c in state.population:
                score, _ = self.evaluator.correctness(c.source, self.task.scoring_testbench)
                rescored[c.id] = {"passed": score.passed, "total": score.total}
            self.log.emit("final_rescore", state.generation, scores=rescored)
        self.log.emit("run_end", state.generation, front=[c.id for c in front])
        return front

    # -- offspring -----------------------------------------------------------

    def produce_offspring(self, t: int) -> list[DesignCandidate]:
        """Breed, evaluate and repair ``offspring_count`` children for generation ``t``.

        Operators and parents for all slots are drawn from the bandit state at
        the start of the generation; rewards are folded in afterwards in slot
        order. Each slot has its own random stream, so running slots
        concurrently does not change the outcome.
        """
        cfg, state = self.config, self.state
        levels = non_dominated_sort(state.population)
        slots = []
        for j in range(1, cfg.offspring_count + 1):
            rng = derive_rng(cfg.seed, t, j)
            op = select_operator(state.bandit, rng)
            parents = select_parents(levels, OPERATORS[op], rng)
            request = build_prompt(
                OPERATORS[op],
                self.task.spec,
                parents,
                self.library,
                population=state.population,
                generation=t,
                seed=derive_seed(cfg.seed, t, j, "generate"),
                temperature=cfg.temperature,
                top_p=cfg.top_p,
            )
            slots.append(_Slot(j, op, parents, request))

        self._map(lambda s: self._fill_slot(t, s), slots)

        offspring = []
        for slot in slots:
            child = slot.candidate
            for attempt in slot.attempts:
                self.log.emit("candidate", t, attempt.id, record=candidate_to_dict(attempt))
                state.archive.append(attempt)
            if slot.failed:
                reward = 0
            else:
                reward = compute_reward(OPERATORS[slot.operator].category, _basis([child])[0], self._reward_basis(slot))
            record_reward(state.bandit, slot.operator, reward)
            self.log.emit(
                "offspring",
                t,
                child.id,
                slot=slot.index,
                operator=slot.operator,
                parents=[p.id for p in slot.parents],
                reward=reward,
                placeholder=slot.failed,
            )
            offspring.append(child)
        return offspring

    def _reward_basis(self, slot: _Slot):
        if slot.parents:
            return componentwise_best(_basis(slot.parents))
        return componentwise_best(_basis(self.state.population))

    def _fill_slot(self, t: int, slot: _Slot):
        cid = f"g{t}-s{slot.index:02d}"
        lineage = Lineage(tuple(p.id for p in slot.parents), slot.operator, t)
        try:
            source = parse_generation(self.backends.generation.generate(slot.request))
        except (BackendProtocolError, ParseFailure) as exc:
            logger.warning("slot %d of generation %d produced no design: %s", slot.index, t, exc)
            placeholder = DesignCandidate(cid, "", lineage=lineage).with_evaluation(
                CorrectnessScore.zero(self.task.testbench.case_count), SynthesisFailed(f"generation failed: {exc}")
            )
            slot.candidate, slot.failed = placeholder, True
            slot.attempts.append(placeholder)
            return
        child = self.evaluator.evaluate(DesignCandidate(cid, source, lineage=lineage))
        slot.attempts.append(child)
        if not is_synthesized(child.ppa):
            child = self.synthesis_repair(child, t, slot.index, slot.attempts)
        slot.candidate = child

    def synthesis_repair(
        self, candidate: DesignCandidate, t: int = 0, slot: int = 0, attempts: Optional[list] = None
    ) -> DesignCandidate:
        """Try up to ``repair_budget`` rewrites of a design that failed synthesis.

        The first rewrite that synthesizes without lowering correctness
        replaces the candidate; otherwise the original is kept.
        """
        if not candidate.source.strip():
            return candidate
        for r in range(1, self.config.repair_budget + 1):
            request = build_repair_prompt(
                candidate,
                self.task.spec,
                self.library,
                generation=t,
                seed=derive_seed(self.config.seed, t, slot, "repair", r),
                temperature=self.config.temperature,
                top_p=self.config.top_p,
            )
            lineage = replace(candidate.lineage, repair_of=candidate.id, repair_round=r)
            try:
                source = parse_generation(self.backends.generation.generate(request))
            except (BackendProtocolError, ParseFailure) as exc:
                logger.info("repair round %d of %s produced no design: %s", r, candidate.id, exc)
                continue
            repaired = self.evaluator.evaluate(DesignCandidate(f"{candidate.id}-r{r}", source, lineage=lineage))
            if attempts is not None:
                attempts.append(repaired)
            if is_synthesized(repaired.ppa) and repaired.correctness.value >= candidate.correctness.value:
                return repaired
        return candidate

    # -- plumbing ------------------------------------------------------------

    def _map(self, fn, items: Sequence):
        if self.config.workers == 1 or len(items) < 2:
            return [fn(x) for x in items]
        with ThreadPoolExecutor(max_workers=self.config.workers) as pool:
            return list(pool.map(fn, items))

    def _checkpoint(self):
        self.state.log_position = self.log.position()
        if self.checkpoint_path is None:
            return
        doc = {"version": CHECKPOINT_VERSION, "task": self.task.id, "config": self.config.to_dict(), "state": self.state.to_dict()}
        tmp = self.checkpoint_path.with_suffix(".tmp")
        tmp.parent.mkdir(parents=True, exist_ok=True)
        tmp.write_text(json.dumps(doc, sort_keys=True))
        os.replace(tmp, self.checkpoint_path)


def _basis(candidates):
    return [(c.correctness.value, c.ppa) for c in candidates]
