import json
import shutil
from pathlib import Path

import pytest

from coevolve.cli import EXIT_ABORTED, EXIT_BACKEND, EXIT_CONFIG, EXIT_OK, main
from coevolve.config import build_task, interpolate_env, load_settings
from coevolve.evaluation import ConfigurationError

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def config(tmp_path):
    shutil.copytree(FIXTURES / "tasks", tmp_path / "tasks")
    shutil.copy(FIXTURES / "synthetic.json", tmp_path / "config.json")
    return tmp_path / "config.json"


def test_env_interpolation():
    assert interpolate_env({"a": ["${X}/v1"]}, {"X": "http://h"}) == {"a": ["http://h/v1"]}
    with pytest.raises(ConfigurationError):
        interpolate_env("${MISSING}", {})


def test_settings_and_overrides(config):
    s = load_settings(config)
    assert sorted(s.tasks) == ["accu", "fsm"]
    cfg = s.run_config(s.task("fsm"), generations=2, criterion=None)
    assert (cfg.generations, cfg.population_size, cfg.offspring_count) == (2, 6, 6)
    with pytest.raises(ConfigurationError):
        s.task("nope")


def test_fixed_target_is_used(config):
    s = load_settings(config)
    task, _ = build_task(s, s.task("accu"), seed=0)
    assert "target=10110011100011110000111100001111" in task.spec


def test_manifest_file(tmp_path):
    (tmp_path / "m").mkdir()
    (tmp_path / "m" / "spec.txt").write_text("adder")
    (tmp_path / "m" / "manifest.json").write_text(json.dumps({"tasks": [{"id": "add", "spec": "spec.txt"}]}))
    (tmp_path / "c.json").write_text(json.dumps({"manifest": "m/manifest.json"}))
    s = load_settings(tmp_path / "c.json")
    assert s.task("add").spec_text() == "adder"


def test_external_backend_needs_settings(config):
    s = load_settings(config)
    with pytest.raises(ConfigurationError):
        build_task(s, s.task("fsm"), 0, backend="external")


def test_run_then_front_then_report(config, tmp_path, capsys):
    out = tmp_path / "one"
    assert main(["run", "--config", str(config), "--task", "fsm", "--seed", "3", "--out", str(out)]) == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert summary["task"] == "fsm" and summary["generations_used"] == 4
    assert {p.name for p in out.iterdir()} >= {"log.jsonl", "checkpoint.json", "testbench.json", "summary.json"}

    front_csv = tmp_path / "front.csv"
    assert main(["front", "--log", str(out / "log.jsonl"), "--out", str(front_csv)]) == EXIT_OK
    assert front_csv.read_text().startswith("id,c,area_um2")

    assert main(["report", str(out), "--csv", str(tmp_path / "r.csv")]) == EXIT_OK
    assert "fsm" in capsys.readouterr().out


def test_suite(config, tmp_path, capsys):
    out = tmp_path / "suite"
    code = main(["suite", "--config", str(config), "--repeats", "2", "--workers", "2", "--generations", "2", "--out", str(out)])
    assert code == EXIT_OK
    table = json.loads((out / "report.json").read_text())
    assert set(table) == {"accu", "fsm"} and table["fsm"]["n"] == 2
    assert (out / "accu" / "seed-1" / "log.jsonl").exists()
    assert len((out / "report.csv").read_text().splitlines()) == 5


def test_resume_subcommand(config, tmp_path, capsys):
    out = tmp_path / "r"
    main(["run", "--config", str(config), "--task", "fsm", "--out", str(out)])
    full = (out / "log.jsonl").read_bytes()
    # rewind to an intermediate checkpoint by re-running with a stop
    from coevolve.cli import CHECKPOINT_NAME, LOG_NAME
    from coevolve.config import testbench_from_dict
    from coevolve.engine import CoEvolutionEngine, RunInterrupted

    s = load_settings(config)
    cfg = s.run_config(s.task("fsm"), seed=0)
    task, backends = build_task(s, s.task("fsm"), 0)
    engine = CoEvolutionEngine(cfg, task, backends, log_path=out / LOG_NAME, checkpoint_path=out / CHECKPOINT_NAME)
    with pytest.raises(RunInterrupted):
        engine.run(stop_after=2)
    assert main(["resume", "--config", str(config), "--run", str(out)]) == EXIT_OK
    assert (out / "log.jsonl").read_bytes() == full


def test_exit_codes(config, tmp_path):
    assert main(["run", "--config", str(tmp_path / "missing.json"), "--task", "fsm"]) == EXIT_CONFIG
    assert main(["run", "--config", str(config), "--task", "nope", "--out", str(tmp_path / "x")]) == EXIT_CONFIG
    assert main(["run", "--config", str(config), "--task", "fsm", "--criterion", "speed", "--out", str(tmp_path / "y")]) == EXIT_CONFIG
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"event":"run_start","generation":0,"candidate":null,"payload":{}}\n')
    assert main(["front", "--log", str(bad)]) == EXIT_CONFIG


def _external_config(tmp_path, golden_ok=True, gen_url="http://127.0.0.1:9"):
    (tmp_path / "spec.txt").write_text("buffer")
    (tmp_path / "golden.v").write_text("module golden; endmodule" if golden_ok else "syntax error here")
    (tmp_path / "tb.v").write_text("tb")
    sim = tmp_path / "sim.py"
    sim.write_text(
        "import sys\n"
        "d = open(sys.argv[1]).read()\n"
        "if 'syntax error' in d:\n    print('ERROR'); sys.exit(1)\n"
        "print('CASE 0 PASS'); print('TOTAL 1')\n"
    )
    import sys

    doc = {
        "backend": "external",
        "generation": {"base_url": gen_url, "model": "m", "max_attempts": 1, "timeout": 2},
        "simulation": {"command": f"{sys.executable} {sim} {{design}} {{testbench}}"},
        "synthesis": {"command": "true"},
        "tasks": [{"id": "buf", "spec": "spec.txt", "golden_reference": "golden.v", "testbench": "tb.v", "testbench_cases": 1}],
    }
    path = tmp_path / "ext.json"
    path.write_text(json.dumps(doc))
    return path


def test_golden_failure_exit_code(tmp_path):
    path = _external_config(tmp_path, golden_ok=False)
    assert main(["run", "--config", str(path), "--task", "buf", "--out", str(tmp_path / "o")]) == EXIT_ABORTED


def test_backend_unavailable_exit_code(tmp_path):
    # nothing listens on port 9: the testbench falls back to the provided one, then generation is unreachable
    path = _external_config(tmp_path)
    assert main(["run", "--config", str(path), "--task", "buf", "--out", str(tmp_path / "o")]) == EXIT_BACKEND
