"""Estimator-style front-ends.

``CoEvolutionarySearch`` wraps the engine: hyperparameters go to the
constructor, ``fit`` runs one search and exposes the results as trailing
underscore attributes. ``ParetoSurvivorSelector`` applies the sorting and
survivor selection to plain objective arrays.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .backends.synthetic import SyntheticGenerationBackend, SyntheticSimulationBackend, SyntheticSynthesisBackend
from .backends.synthetic import synthetic_spec
from .engine import Backends, CoEvolutionEngine, RunConfig, Task
from .gate import apply_gate, gate_threshold
from .objectives import is_synthesized
from .operators import DEFAULT_STRATEGIES
from .pareto import IntraLevelCriterion, non_dominated_sort, select_survivors
from .validation import check_fraction, check_int, check_objectives, check_target_bits, row_ppa

__all__ = ["CoEvolutionarySearch", "ParetoSurvivorSelector", "objective_matrix"]


def objective_matrix(candidates) -> np.ndarray:
    """``(n, 4)`` rows of ``(correctness, area, delay, power)``; NaN PPA marks a failed synthesis."""
    rows = []
    for c in candidates:
        if is_synthesized(c.ppa):
            rows.append((c.correctness.value, *c.ppa.as_tuple()))
        else:
            rows.append((c.correctness.value, np.nan, np.nan, np.nan))
    return np.asarray(rows, dtype=np.float64).reshape(len(rows), 4)


class CoEvolutionarySearch(BaseEstimator):
    """Search for correct, low-cost designs with the co-evolutionary loop.

    ``fit(task, backends)`` takes a :class:`~coevolve.engine.Task` and its
    :class:`~coevolve.engine.Backends`. As a shortcut, ``fit(bits)`` with 32
    zero/one values sets up the built-in synthetic task for that target.
    """

    def __init__(
        self,
        population_size: int = 10,
        offspring_count: int = 10,
        generations: int = 10,
        repair_budget: int = 3,
        theta_min: float = 0.25,
        theta_max: float = 1.0,
        gate_alpha: float = 2.0,
        explore_coef: float = 2.0,
        softmax_temperature: float = 1.0,
        criterion: str = "correctness",
        temperature: float = 0.8,
        top_p: float = 0.95,
        workers: int = 1,
        random_state: int = 0,
        log_path: Optional[str] = None,
    ):
        self.population_size = population_size
        self.offspring_count = offspring_count
        self.generations = generations
        self.repair_budget = repair_budget
        self.theta_min = theta_min
        self.theta_max = theta_max
        self.gate_alpha = gate_alpha
        self.explore_coef = explore_coef
        self.softmax_temperature = softmax_temperature
        self.criterion = criterion
        self.temperature = temperature
        self.top_p = top_p
        self.workers = workers
        self.random_state = random_state
        self.log_path = log_path

    def _run_config(self) -> RunConfig:
        return RunConfig(
            population_size=check_int(self.population_size, "population_size", 1),
            offspring_count=check_int(self.offspring_count, "offspring_count", 0),
            generations=check_int(self.generations, "generations", 1),
            repair_budget=check_int(self.repair_budget, "repair_budget", 0),
            theta_min=check_fraction(self.theta_min, "theta_min"),
            theta_max=check_fraction(self.theta_max, "theta_max"),
            gate_alpha=self.gate_alpha,
            explore_coef=self.explore_coef,
            softmax_temperature=self.softmax_temperature,
            criterion=IntraLevelCriterion.parse(str(self.criterion)),
            seed=check_int(self.random_state, "random_state", 0),
            temperature=self.temperature,
            top_p=self.top_p,
            strategies=DEFAULT_STRATEGIES,
            workers=check_int(self.workers, "workers", 1),
        )

    def fit(self, task, backends: Optional[Backends] = None):
        config = self._run_config()
        if not isinstance(task, Task):
            target = check_target_bits(task)
            sim = SyntheticSimulationBackend(target)
            backends = Backends(SyntheticGenerationBackend(), sim, SyntheticSynthesisBackend(target))
            task = Task("synthetic", synthetic_spec(target), sim.testbench())
        elif backends is None:
            raise ValueError("fit(task) needs the matching backends")
        engine = CoEvolutionEngine(config, task, backends, log_path=self.log_path)
        front = engine.run()
        state = engine.state
        self.pareto_front_ = front
        self.population_ = list(state.population)
        self.archive_ = list(state.archive)
        self.bandit_ = state.bandit
        self.gate_trajectory_ = [gate_threshold(config.gate, t) for t in range(1, config.generations + 1)]
        self.operator_counts_ = dict(
            Counter(
                c.lineage.operator
                for c in state.archive
                if c.lineage.generation > 0 and c.lineage.repair_of is None
            )
        )
        self.best_ = min(
            self.population_,
            key=lambda c: (-c.correctness.value, c.ppa.product if is_synthesized(c.ppa) else np.inf),
        )
        self.n_generations_ = state.generation
        return self

    def transform(self, candidates=None) -> np.ndarray:
        """Objective matrix of ``candidates`` (the fitted Pareto front by default)."""
        check_is_fitted(self, "pareto_front_")
        return objective_matrix(self.pareto_front_ if candidates is None else candidates)

    def score(self, X=None, y=None) -> float:
        """Correctness of the best design found."""
        check_is_fitted(self, "best_")
        return self.best_.correctness.value


@dataclass(frozen=True)
class _Score:
    value: float


@dataclass(frozen=True)
class _Point:
    index: int
    correctness: _Score
    ppa: object
    evaluated: bool = True


class ParetoSurvivorSelector(BaseEstimator):
    """Rank rows of ``(correctness, area, delay, power)`` and keep ``capacity`` of them.

    ``theta`` filters rows by correctness before selection (with the same
    fallback as the engine's gate when nothing passes). ``fit_predict``
    returns each row's 1-based Pareto level; ``transform`` keeps the
    surviving rows in their original order.
    """

    def __init__(self, capacity: int = 10, criterion: str = "correctness", theta: float = 0.0):
        self.capacity = capacity
        self.criterion = criterion
        self.theta = theta

    def fit(self, X, y=None):
        X = check_objectives(X)
        capacity = check_int(self.capacity, "capacity", 1)
        theta = check_fraction(self.theta, "theta")
        criterion = IntraLevelCriterion.parse(str(self.criterion))
        points = [_Point(i, _Score(float(row[0])), row_ppa(row)) for i, row in enumerate(X)]
        levels = np.zeros(len(points), dtype=int)
        for k, level in enumerate(non_dominated_sort(points), 1):
            for p in level:
                levels[p.index] = k
        gated = apply_gate(points, theta, capacity).gated if points else []
        survivors = select_survivors(gated, capacity, criterion)
        support = np.zeros(len(points), dtype=bool)
        support[[p.index for p in survivors]] = True
        self.levels_ = levels
        self.support_ = support
        self.n_features_in_ = 4
        return self

    def get_support(self, indices: bool = False):
        check_is_fitted(self, "support_")
        return np.flatnonzero(self.support_) if indices else self.support_.copy()

    def transform(self, X):
        check_is_fitted(self, "support_")
        X = check_objectives(X)
        if len(X) != len(self.support_):
            raise ValueError("transform expects the array passed to fit")
        return X[self.support_]

    def fit_transform(self, X, y=None):
        return self.fit(X).transform(X)

    def fit_predict(self, X, y=None):
        return self.fit(X).levels_
