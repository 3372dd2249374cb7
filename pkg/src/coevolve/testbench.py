"""Enhanced testbench construction against a golden reference."""
from __future__ import annotations

import logging
from typing import Optional

from .backends.base import BackendError, GenerationBackend, GenerationRequest, SimulationBackend
from .evaluation import TaskAborted, TestbenchArtifact, parse_observations
from .operators import ParseFailure, PromptLibrary, parse_generation

logger = logging.getLogger(__name__)

DEFAULT_CASE_COUNT = 20


def build_enhanced_testbench(
    spec: str,
    golden_reference: str,
    backend: GenerationBackend,
    simulator: SimulationBackend,
    *,
    provided: Optional[TestbenchArtifact] = None,
    case_count: int = DEFAULT_CASE_COUNT,
    attempts: int = 2,
    timeout: float = 60.0,
    library: Optional[PromptLibrary] = None,
    seed: int = 0,
) -> TestbenchArtifact:
    """Have the backend write stimuli, then record the golden reference's outputs.

    The returned artifact carries the golden observations as ``expected`` and
    is checked host-side. After ``attempts`` unusable stimulus testbenches the
    provided testbench is returned instead.

    Raises :class:`TaskAborted` when the golden reference itself does not
    simulate, since no candidate could then be scored.
    """
    library = library or PromptLibrary()
    if provided is not None:
        check = simulator.simulate(golden_reference, provided.source, timeout)
        if not check.ok:
            raise TaskAborted(f"golden reference fails its provided testbench ({check.status}): {check.output[:300]}")
        failing = [r.case_id for r in provided.check(check.output) if not r.passed]
        if failing:
            raise TaskAborted(f"golden reference fails provided test cases {failing[:10]}")

    golden_failures = 0
    for attempt in range(attempts):
        request = GenerationRequest(
            prompt=library.render("testbench", spec=spec, parent_source=golden_reference, case_count=case_count),
            operator="testbench",
            context={"seed": seed + attempt},
        )
        try:
            source = parse_generation(backend.generate(request))
        except (BackendError, ParseFailure) as exc:
            logger.warning("testbench generation attempt %d failed: %s", attempt + 1, exc)
            continue
        run = simulator.simulate(golden_reference, source, timeout)
        if not run.ok:
            golden_failures += 1
            logger.warning("golden run of generated testbench failed (%s)", run.status)
            continue
        expected = parse_observations(run.output)
        if not expected:
            logger.warning("generated testbench produced no observations")
            continue
        return TestbenchArtifact(source, len(expected), "backend-generated", expected)

    if provided is not None:
        logger.warning("falling back to the provided testbench")
        return provided
    if golden_failures == attempts:
        raise TaskAborted("golden reference did not simulate with any generated testbench")
    raise TaskAborted("no usable testbench: generation failed and none was provided")
