import json
from pathlib import Path

import pytest

from coevolve.evaluation import (
    ConfigurationError,
    SynthesisDiagnosis,
    TestbenchArtifact,
    TestCaseResult,
    parse_case_lines,
    parse_observations,
    parse_ppa_report,
    ppa_from_record,
    ppa_product,
    ppa_to_record,
    render_case_lines,
    score_correctness,
)
from coevolve.objectives import PpaMetrics, SynthesisFailed

FIXTURES = Path(__file__).parent / "fixtures"


def test_case_protocol():
    out = "\n".join([
        "sim banner",
        "CASE 0 PASS",
        "CASE 1 FAIL signal=q expected=1 actual=0 time=35",
        "CASE 2 garbage",
        "CASE 0 FAIL signal=q expected=1 actual=0 time=1",
        "TOTAL 5",
    ])
    results, total = parse_case_lines(out)
    assert total == 5
    assert [(r.case_id, r.passed) for r in results] == [("0", True), ("1", False), ("2", False)]
    assert results[1].describe() == "case 1: q expected 1 got 0 at t=35"
    assert score_correctness(results, 5).value == pytest.approx(0.2)


def test_render_then_parse_round_trip():
    results = [TestCaseResult("a", True), TestCaseResult("b", False, "y", "3", "4", "10")]
    parsed, total = parse_case_lines(render_case_lines(results, 7))
    assert parsed == results and total == 7


def test_too_many_results_rejected():
    with pytest.raises(ValueError):
        score_correctness([TestCaseResult(str(i), True) for i in range(3)], 2)


def test_self_checking_artifact_counts_missing_cases_as_failures():
    tb = TestbenchArtifact("tb", 4)
    results = tb.check("CASE 0 PASS\nCASE 1 PASS\n")
    assert score_correctness(results, tb.case_count).value == 0.5


def test_observation_artifact_compares_against_expected():
    tb = TestbenchArtifact("tb", 2, "backend-generated", {"0": {"y": "1"}, "1": {"y": "0", "z": "1"}})
    results = tb.check("OBS 0 y=1\nOBS 1 y=0\nOBS 1 z=0\n")
    assert results[0].passed
    assert not results[1].passed and results[1].signal == "z" and results[1].actual == "0"
    assert parse_observations("OBS c sig=5\njunk") == {"c": {"sig": "5"}}


def test_artifact_validation():
    with pytest.raises(ConfigurationError):
        TestbenchArtifact("tb", 0)
    with pytest.raises(ValueError):
        TestbenchArtifact("tb", 1, "downloaded")


def read(name):
    return (FIXTURES / name).read_text()


def test_yosys_sta_fixture_coevo():
    m, diag = parse_ppa_report(read("fsm_evolved.rpt"), "yosys-sta")
    assert m.as_tuple() == pytest.approx((26.07, 0.14, 20.8))
    assert ppa_product(m) == pytest.approx(75.92, rel=5e-3)
    assert diag.cell_count == 19
    assert [n for n, _ in diag.critical_path] == ["state_reg[0]/Q", "_12_/ZN", "_15_/ZN"]
    assert "NOR2_X1: 5" in diag.resource_notes


def test_yosys_sta_fixture_reference():
    m, _ = parse_ppa_report(read("fsm_baseline.rpt"), "yosys-sta")
    assert ppa_product(m) == pytest.approx(429.1, rel=5e-3)


def test_yosys_errors_become_failed_synthesis():
    m, diag = parse_ppa_report(read("synth_failed.rpt"), "yosys-sta")
    assert isinstance(m, SynthesisFailed)
    assert "Multiple edge" in m.reason
    assert diag.raw_log_digest.count("Multiple edge") == 1


def test_zero_cells_is_failure():
    raw = "   Number of cells:                  0\n   Chip area for module '\\top': 0.000000\n"
    m, _ = parse_ppa_report(raw, "yosys-sta")
    assert isinstance(m, SynthesisFailed) and "zero cells" in m.reason


def test_missing_power_is_failure():
    text = "\n".join(l for l in read("fsm_evolved.rpt").splitlines() if not l.startswith("Total"))
    m, _ = parse_ppa_report(text, "yosys-sta")
    assert isinstance(m, SynthesisFailed) and "power" in m.reason


def test_json_report():
    raw = json.dumps({"area_um2": 80, "delay_ns": 1.4, "power_uw": 40,
                      "diagnosis": {"cell_count": 3, "critical_path": [["a", 1.0], ["b", 0.4]]}})
    m, diag = parse_ppa_report(raw, "json")
    assert m == PpaMetrics(80, 1.4, 40)
    assert diag.critical_path == (("a", 1.0), ("b", 0.4))


def test_json_inconsistent_path_dropped():
    raw = json.dumps({"area_um2": 1, "delay_ns": 1.0, "power_uw": 1,
                      "diagnosis": {"critical_path": [["a", 5.0]]}})
    _, diag = parse_ppa_report(raw, "json")
    assert diag.critical_path == ()


@pytest.mark.parametrize("raw", ["", "   ", "{not json", json.dumps({"area_um2": -1, "delay_ns": 1, "power_uw": 1})])
def test_bad_reports_are_failures(raw):
    m, _ = parse_ppa_report(raw, "json")
    assert isinstance(m, SynthesisFailed)


def test_unknown_format():
    with pytest.raises(ConfigurationError):
        parse_ppa_report("x", "vivado")


def test_product_rejects_failure():
    with pytest.raises(ValueError):
        ppa_product(SynthesisFailed())


def test_record_round_trip():
    for m in [PpaMetrics(1.5, 2, 3), SynthesisFailed("nope")]:
        assert ppa_from_record(ppa_to_record(m)) == m


def test_diagnosis_round_trip_and_text():
    d = SynthesisDiagnosis(4, (("u1", 0.2),), ("LUT: 4",), "warn")
    assert SynthesisDiagnosis.from_dict(d.to_dict()) == d
    assert "u1 (+0.2 ns)" in d.describe()
