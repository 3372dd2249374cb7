"""JSON-ready dictionaries for candidates, used by the run log and checkpoints."""
from __future__ import annotations

from .evaluation import SynthesisDiagnosis, TestCaseResult, ppa_from_record, ppa_to_record
from .objectives import CorrectnessScore, DesignCandidate, Lineage


def candidate_to_dict(c: DesignCandidate) -> dict:
    lin = c.lineage
    return {
        "id": c.id,
        "source": c.source,
        "correctness": None if c.correctness is None else {"passed": c.correctness.passed, "total": c.correctness.total},
        "ppa": None if c.ppa is None else ppa_to_record(c.ppa),
        "test_report": [r.to_dict() for r in c.test_report],
        "synthesis_diagnosis": None if c.synthesis_diagnosis is None else c.synthesis_diagnosis.to_dict(),
        "lineage": {
            "parents": list(lin.parents),
            "operator": lin.operator,
            "generation": lin.generation,
            "strategy": lin.strategy,
            "repair_of": lin.repair_of,
            "repair_round": lin.repair_round,
        },
    }


def candidate_from_dict(d: dict) -> DesignCandidate:
    lin = d.get("lineage") or {}
    corr = d.get("correctness")
    return DesignCandidate(
        id=d["id"],
        source=d.get("source", ""),
        correctness=None if corr is None else CorrectnessScore(corr["passed"], corr["total"]),
        ppa=None if d.get("ppa") is None else ppa_from_record(d["ppa"]),
        test_report=tuple(TestCaseResult(**r) for r in d.get("test_report", ())),
        synthesis_diagnosis=(
            None if d.get("synthesis_diagnosis") is None else SynthesisDiagnosis.from_dict(d["synthesis_diagnosis"])
        ),
        lineage=Lineage(
            parents=tuple(lin.get("parents", ())),
            operator=lin.get("operator"),
            generation=lin.get("generation", 0),
            strategy=lin.get("strategy"),
            repair_of=lin.get("repair_of"),
            repair_round=lin.get("repair_round", 0),
        ),
    )
