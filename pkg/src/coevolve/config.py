"""Run configuration documents, task manifests and backend construction."""
from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from ._seeding import derive_rng
from .backends import (
    CommandSimulationBackend,
    CommandSynthesisBackend,
    HttpGenerationBackend,
    SyntheticGenerationBackend,
    SyntheticSimulationBackend,
    SyntheticSynthesisBackend,
)
from .backends.synthetic import random_target, synthetic_spec
from .engine import Backends, RunConfig, Task
from .evaluation import ConfigurationError, TestbenchArtifact
from .operators import PromptLibrary
from .testbench import DEFAULT_CASE_COUNT, build_enhanced_testbench

_ENV = re.compile(r"\$\{([A-Za-z_][A-Za-z0-9_]*)\}")


def interpolate_env(value, environ=None):
    """Replace ``${NAME}`` in every string of a JSON-like value."""
    environ = os.environ if environ is None else environ
    if isinstance(value, str):
        def sub(m):
            if m.group(1) not in environ:
                raise ConfigurationError(f"environment variable {m.group(1)} is not set")
            return environ[m.group(1)]
        return _ENV.sub(sub, value)
    if isinstance(value, list):
        return [interpolate_env(v, environ) for v in value]
    if isinstance(value, dict):
        return {k: interpolate_env(v, environ) for k, v in value.items()}
    return value


@dataclass(frozen=True)
class TaskManifest:
    id: str
    spec_path: Path
    golden_reference: Optional[Path] = None
    testbench: Optional[Path] = None
    testbench_cases: int = DEFAULT_CASE_COUNT
    overrides: dict = field(default_factory=dict)
    target: Optional[str] = None

    def spec_text(self) -> str:
        if not self.spec_path.is_file():
            raise ConfigurationError(f"task {self.id}: spec file {self.spec_path} does not exist")
        text = self.spec_path.read_text()
        if not text.strip():
            raise ConfigurationError(f"task {self.id}: spec file {self.spec_path} is empty")
        return text


@dataclass
class Settings:
    """A parsed configuration document."""

    run: dict
    backend: str
    generation: dict
    simulation: dict
    synthesis: dict
    tasks: dict
    output_dir: Path
    templates: Optional[Path] = None
    keep_artifacts: bool = False
    base_dir: Path = Path(".")

    def task(self, task_id: str) -> TaskManifest:
        try:
            return self.tasks[task_id]
        except KeyError:
            raise ConfigurationError(f"unknown task {task_id!r}; known: {sorted(self.tasks)}") from None

    def run_config(self, manifest: Optional[TaskManifest] = None, **overrides) -> RunConfig:
        d = dict(self.run)
        if manifest is not None:
            d.update(manifest.overrides)
        d.update({k: v for k, v in overrides.items() if v is not None})
        try:
            return RunConfig.from_dict(d)
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(str(exc)) from exc

    def library(self) -> PromptLibrary:
        return PromptLibrary(self.templates)


def _resolve(base: Path, p) -> Optional[Path]:
    if p is None:
        return None
    p = Path(p)
    return p if p.is_absolute() else base / p


def _load_tasks(entries, base: Path) -> dict:
    tasks = {}
    for e in entries:
        try:
            m = TaskManifest(
                id=str(e["id"]),
                spec_path=_resolve(base, e["spec"]),
                golden_reference=_resolve(base, e.get("golden_reference")),
                testbench=_resolve(base, e.get("testbench")),
                testbench_cases=int(e.get("testbench_cases", DEFAULT_CASE_COUNT)),
                overrides=dict(e.get("overrides", {})),
                target=e.get("target"),
            )
        except KeyError as exc:
            raise ConfigurationError(f"task entry missing field {exc}") from None
        tasks[m.id] = m
    return tasks


def load_settings(path: str | Path, environ=None) -> Settings:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigurationError(f"config file {path} not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config file {path} is not valid JSON: {exc}") from None
    doc = interpolate_env(doc, environ)
    base = path.parent
    entries = doc.get("tasks", [])
    if "manifest" in doc:
        manifest_path = _resolve(base, doc["manifest"])
        try:
            entries = entries + json.loads(manifest_path.read_text())["tasks"]
        except (OSError, ValueError, KeyError) as exc:
            raise ConfigurationError(f"cannot read task manifest {manifest_path}: {exc}") from None
        tasks = _load_tasks(entries, manifest_path.parent)
    else:
        tasks = _load_tasks(entries, base)
    return Settings(
        run=doc.get("run", {}),
        backend=doc.get("backend", "synthetic"),
        generation=doc.get("generation", {}),
        simulation=doc.get("simulation", {}),
        synthesis=doc.get("synthesis", {}),
        tasks=tasks,
        output_dir=_resolve(base, doc.get("output_dir", "runs")),
        templates=_resolve(base, doc.get("templates")),
        keep_artifacts=bool(doc.get("keep_artifacts", False)),
        base_dir=base,
    )


def synthetic_target(manifest: TaskManifest, seed: int):
    if manifest.target is not None:
        bits = str(manifest.target)
        if not re.fullmatch(r"[01]{32}", bits):
            raise ConfigurationError(f"task {manifest.id}: target must be 32 binary digits")
        return tuple(ch == "1" for ch in bits)
    return random_target(derive_rng("target", manifest.id, seed))


def build_task(
    settings: Settings,
    manifest: TaskManifest,
    seed: int,
    backend: Optional[str] = None,
    keep_artifacts: Optional[bool] = None,
    testbench: Optional[TestbenchArtifact] = None,
) -> tuple[Task, Backends]:
    """Instantiate backends and the task's scoring testbench.

    ``testbench`` short-circuits testbench construction (used on resume).
    """
    kind = backend or settings.backend
    spec = manifest.spec_text()
    keep = settings.keep_artifacts if keep_artifacts is None else keep_artifacts
    if kind == "synthetic":
        target = synthetic_target(manifest, seed)
        sim = SyntheticSimulationBackend(target)
        backends = Backends(SyntheticGenerationBackend(), sim, SyntheticSynthesisBackend(target))
        spec = f"{spec.rstrip()}\n{synthetic_spec(target)}"
        return Task(manifest.id, spec, testbench or sim.testbench()), backends
    if kind != "external":
        raise ConfigurationError(f"unknown backend {kind!r}; use 'synthetic' or 'external'")

    gen = dict(settings.generation)
    if "base_url" not in gen or "model" not in gen:
        raise ConfigurationError("generation backend needs base_url and model")
    if "command" not in settings.simulation or "command" not in settings.synthesis:
        raise ConfigurationError("external backends need simulation.command and synthesis.command")
    backends = Backends(
        HttpGenerationBackend(**gen),
        CommandSimulationBackend(settings.simulation["command"], keep_artifacts=keep),
        CommandSynthesisBackend(
            settings.synthesis["command"],
            settings.synthesis.get("report_format", "yosys-sta"),
            keep_artifacts=keep,
        ),
    )
    provided = None
    if manifest.testbench is not None:
        provided = TestbenchArtifact(manifest.testbench.read_text(), manifest.testbench_cases, "provided")
    if testbench is None:
        if manifest.golden_reference is not None:
            testbench = build_enhanced_testbench(
                spec,
                manifest.golden_reference.read_text(),
                backends.generation,
                backends.simulation,
                provided=provided,
                case_count=manifest.testbench_cases,
                library=settings.library(),
                seed=seed,
            )
        elif provided is not None:
            testbench = provided
        else:
            raise ConfigurationError(f"task {manifest.id} has neither a golden reference nor a testbench")
    return Task(manifest.id, spec, testbench, provided), backends


def testbench_to_dict(tb: TestbenchArtifact) -> dict:
    return {"source": tb.source, "case_count": tb.case_count, "origin": tb.origin, "expected": tb.expected}


def testbench_from_dict(d: dict) -> TestbenchArtifact:
    return TestbenchArtifact(d["source"], d["case_count"], d["origin"], d.get("expected"))
