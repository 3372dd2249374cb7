import random
import re
from collections import Counter

import pytest

from coevolve.backends.base import BackendProtocolError, GenerationRequest
from coevolve.evaluation import SynthesisDiagnosis, TestCaseResult
from coevolve.objectives import CorrectnessScore, DesignCandidate, PpaMetrics, SynthesisFailed
from coevolve.operators import (
    DEFAULT_STRATEGIES,
    OPERATORS,
    ParseFailure,
    PromptLibrary,
    build_prompt,
    build_repair_prompt,
    multi_arch_init,
    parse_generation,
    select_parents,
)
from coevolve.pareto import non_dominated_sort
from oracles import make

SPEC = "Implement a 4-bit counter with synchronous reset."


def rich_candidate(cid, c=0.5, ppa=(10.0, 1.0, 5.0)):
    report = tuple(
        [TestCaseResult("0", True)] + [TestCaseResult(str(i), False, "q", "1", "0", str(i * 10)) for i in range(1, 30)]
    )
    return DesignCandidate(cid, f"module {cid}(); endmodule").with_evaluation(
        CorrectnessScore(1, 30),
        PpaMetrics(*ppa) if ppa else SynthesisFailed("latch inferred"),
        report,
        SynthesisDiagnosis(12, (("u1", 0.4),), ("LUT: 12",)),
    )


def test_registry_categories_and_arity():
    cats = Counter(op.category.value for op in OPERATORS.values())
    assert cats == {"correctness": 2, "ppa": 3, "joint": 2}
    assert OPERATORS["architecture_fusion"].arity == 2
    assert OPERATORS["explore"].arity == 0


@pytest.mark.parametrize("op_id", sorted(OPERATORS))
def test_prompts_fill_every_placeholder(op_id):
    op = OPERATORS[op_id]
    parents = [rich_candidate("p1"), rich_candidate("p2", ppa=(2.0, 0.5, 1.0))][: op.arity]
    req = build_prompt(op, SPEC, parents, population=[rich_candidate("p1")], generation=3, seed=9)
    assert SPEC in req.prompt
    assert not re.search(r"\{[a-z_]+\}", req.prompt)
    assert "available)" not in req.prompt
    for p in parents:
        assert p.source in req.prompt
    assert req.operator == op_id and req.generation == 3
    assert req.temperature == 0.8 and req.top_p == 0.95


def test_fix_prompt_caps_diagnostics():
    req = build_prompt(OPERATORS["fix"], SPEC, [rich_candidate("p")])
    assert req.prompt.count("expected 1 got 0") == 20
    assert "and 9 more failing cases" in req.prompt


def test_optimize_prompt_carries_synthesis_diagnosis():
    req = build_prompt(OPERATORS["optimize"], SPEC, [rich_candidate("p")])
    assert "critical path: u1" in req.prompt and "LUT: 12" in req.prompt


def test_wrong_arity_rejected():
    with pytest.raises(ValueError):
        build_prompt(OPERATORS["fix"], SPEC, [])


def test_custom_template_directory(tmp_path):
    (tmp_path / "fix.txt").write_text("FIX {spec} :: {parent_source}")
    req = build_prompt(OPERATORS["fix"], SPEC, [rich_candidate("p")], PromptLibrary(tmp_path))
    assert req.prompt == f"FIX {SPEC} :: module p(); endmodule"
    # templates not overridden fall back to the bundled ones
    assert "fenced code block" in PromptLibrary(tmp_path).template("simplify")


def test_repair_prompt():
    req = build_repair_prompt(rich_candidate("p", ppa=None), SPEC)
    assert "latch inferred" in req.prompt and req.operator == "repair"


def test_parse_last_fence_wins():
    reply = "first\n```verilog\nmodule a; endmodule\n```\nthen\n```\nmodule b; endmodule\n```\n"
    assert parse_generation(reply) == "module b; endmodule"


def test_parse_bare_module():
    reply = "Sure! module top(input a); assign x = a; endmodule Hope it helps."
    assert parse_generation(reply) == "module top(input a); assign x = a; endmodule"


@pytest.mark.parametrize("reply", ["", "I cannot help with that.", "```\n\n```"])
def test_parse_failure(reply):
    with pytest.raises(ParseFailure):
        parse_generation(reply)


class ScriptedGen:
    def __init__(self, strategy_reply="behavioral, pipeline", fail_on=()):
        self.strategy_reply = strategy_reply
        self.fail_on = set(fail_on)
        self.requests = []

    def generate(self, request: GenerationRequest) -> str:
        self.requests.append(request)
        if request.operator == "strategy_query":
            return self.strategy_reply
        k = len(self.requests) - 2
        if k in self.fail_on:
            raise BackendProtocolError("boom")
        return f"```\nmodule m{k}; endmodule\n```"


def test_init_covers_applicable_strategies():
    gen = ScriptedGen()
    pop = multi_arch_init(SPEC, 5, DEFAULT_STRATEGIES, gen)
    assert [c.lineage.strategy for c in pop] == ["behavioral"] * 3 + ["pipeline"] * 2
    assert [c.id for c in pop] == [f"g0-i0{k}" for k in range(5)]
    assert len(gen.requests) == 6
    assert all(not c.evaluated for c in pop)


def test_init_unparseable_strategy_reply_uses_all():
    pop = multi_arch_init(SPEC, 10, DEFAULT_STRATEGIES, ScriptedGen("no idea"))
    assert Counter(c.lineage.strategy for c in pop) == {s.name: 2 for s in DEFAULT_STRATEGIES}


def test_init_failure_leaves_empty_candidate():
    pop = multi_arch_init(SPEC, 3, DEFAULT_STRATEGIES, ScriptedGen(fail_on={1}))
    assert [bool(c.source) for c in pop] == [True, False, True]


def test_init_validation():
    with pytest.raises(ValueError):
        multi_arch_init(SPEC, 0, DEFAULT_STRATEGIES, ScriptedGen())
    with pytest.raises(ValueError):
        multi_arch_init(SPEC, 3, (), ScriptedGen())


def test_parent_selection_follows_level_weights():
    a = make("a", 1.0, (1, 1, 1))
    b = make("b", 0.5, (2, 2, 2))
    levels = non_dominated_sort([a, b])
    rng = random.Random(1)
    n = 50_000
    counts = Counter(select_parents(levels, OPERATORS["fix"], rng)[0].id for _ in range(n))
    assert counts["a"] / n == pytest.approx(0.6, abs=0.01)


def test_explore_takes_no_parents():
    levels = non_dominated_sort([make("a")])
    assert select_parents(levels, OPERATORS["explore"], random.Random(0)) == []


def test_fusion_pairs_complementary_parents():
    correct = make("correct", 1.0, (9, 9, 9))
    cheap = make("cheap", 0.5, (1, 1, 1))
    mid = make("mid", 0.75, (5, 5, 5))
    levels = non_dominated_sort([correct, cheap, mid])
    rng = random.Random(0)
    for _ in range(200):
        pair = select_parents(levels, OPERATORS["architecture_fusion"], rng)
        assert pair[0].correctness.value >= pair[1].correctness.value
        ids = {p.id for p in pair}
        assert len(ids) == 2
        if "correct" in ids and pair[0].id == "correct":
            assert pair[1].id in ("cheap", "mid")


def test_fusion_with_single_member():
    only = make("only")
    assert [p.id for p in select_parents([[only]], OPERATORS["architecture_fusion"], random.Random(0))] == ["only", "only"]


def test_empty_population_rejected():
    with pytest.raises(ValueError):
        select_parents([], OPERATORS["fix"], random.Random(0))
