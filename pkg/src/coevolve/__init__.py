"""Multi-objective co-evolution of hardware designs: correctness first, then area, delay and power."""
from .bandit import BanditState, OperatorCategory, compute_reward, select_operator, ucb_score
from .engine import Backends, CoEvolutionEngine, RunConfig, RunInterrupted, Task
from .estimator import CoEvolutionarySearch, ParetoSurvivorSelector, objective_matrix
from .evaluation import (
    ConfigurationError,
    SynthesisDiagnosis,
    TaskAborted,
    TestbenchArtifact,
    TestCaseResult,
    parse_ppa_report,
)
from .gate import GateSchedule, apply_gate, gate_threshold
from .objectives import (
    CorrectnessScore,
    DesignCandidate,
    Lineage,
    ObjectiveVector,
    PpaMetrics,
    SynthesisFailed,
    dominates,
    objective_vector,
)
from .operators import OPERATORS, multi_arch_init, parse_generation, select_parents
from .pareto import IntraLevelCriterion, allocate_slots, non_dominated_sort, pareto_front, select_survivors
from .reporting import export_front, pass_at_k, summarize_run, suite_report

__version__ = "0.1.0"
