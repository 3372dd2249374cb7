from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Protocol, runtime_checkable

__all__ = [
    "BackendError",
    "BackendUnavailable",
    "BackendProtocolError",
    "GenerationRequest",
    "ToolResult",
    "GenerationBackend",
    "SimulationBackend",
    "SynthesisBackend",
]


class BackendError(Exception):
    pass


class BackendUnavailable(BackendError):
    """The backend could not be reached after exhausting retries."""


class BackendProtocolError(BackendError):
    """The backend answered, but not in the expected shape."""


@dataclass(frozen=True)
class GenerationRequest:
    """One prompt to the generation backend.

    ``context`` carries the structured material the prompt was built from
    (parent sources, failing case ids, strategy, seed). Language-model
    backends ignore it; the synthetic backend works from it alone.
    """

    prompt: str
    temperature: float = 0.8
    top_p: float = 0.95
    operator: Optional[str] = None
    parent_ids: tuple[str, ...] = ()
    generation: int = 0
    context: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class ToolResult:
    """Captured output of a simulation or synthesis invocation.

    ``status`` is ``"ok"``, ``"error"`` or ``"timeout"``.
    """

    output: str
    status: str = "ok"
    exit_code: Optional[int] = 0

    @property
    def ok(self) -> bool:
        return self.status == "ok"


@runtime_checkable
class GenerationBackend(Protocol):
    def generate(self, request: GenerationRequest) -> str: ...


@runtime_checkable
class SimulationBackend(Protocol):
    def simulate(self, design: str, testbench: str, timeout: float = 60.0) -> ToolResult: ...


@runtime_checkable
class SynthesisBackend(Protocol):
    report_format: str

    def synthesize(self, design: str, timeout: float = 300.0) -> ToolResult: ...
