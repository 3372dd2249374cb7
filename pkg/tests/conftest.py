import random

import pytest

from coevolve.backends.synthetic import (
    SyntheticGenerationBackend,
    SyntheticSimulationBackend,
    SyntheticSynthesisBackend,
    random_target,
    synthetic_spec,
)
from coevolve.engine import Backends, Task


def synthetic_problem(seed=0, generation=None):
    target = random_target(random.Random(f"target-{seed}"))
    sim = SyntheticSimulationBackend(target)
    backends = Backends(generation or SyntheticGenerationBackend(), sim, SyntheticSynthesisBackend(target))
    return Task(f"synthetic-{seed}", synthetic_spec(target), sim.testbench()), backends


@pytest.fixture
def problem():
    return synthetic_problem


def pytest_terminal_summary(terminalreporter):
    module = __import__("sys").modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        ok, detail = results[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
