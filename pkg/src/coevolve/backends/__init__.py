from .base import (
    BackendError,
    BackendProtocolError,
    BackendUnavailable,
    GenerationBackend,
    GenerationRequest,
    SimulationBackend,
    SynthesisBackend,
    ToolResult,
)
from .http import HttpGenerationBackend
from .process import CommandSimulationBackend, CommandSynthesisBackend
from .synthetic import (
    SyntheticGenerationBackend,
    SyntheticGenome,
    SyntheticSimulationBackend,
    SyntheticSynthesisBackend,
    synthetic_evaluate,
    synthetic_operator_apply,
)

__all__ = [
    "BackendError",
    "BackendProtocolError",
    "BackendUnavailable",
    "GenerationBackend",
    "GenerationRequest",
    "SimulationBackend",
    "SynthesisBackend",
    "ToolResult",
    "HttpGenerationBackend",
    "CommandSimulationBackend",
    "CommandSynthesisBackend",
    "SyntheticGenerationBackend",
    "SyntheticGenome",
    "SyntheticSimulationBackend",
    "SyntheticSynthesisBackend",
    "synthetic_evaluate",
    "synthetic_operator_apply",
]
