"""Command-line entry point: ``coevolve {run,suite,resume,front,report}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .backends.base import BackendUnavailable
from .config import build_task, load_settings, testbench_from_dict, testbench_to_dict
from .engine import CoEvolutionEngine, RunConfig, RunInterrupted
from .evaluation import ConfigurationError, TaskAborted
from .reporting import TruncatedLog, export_front, summarize_run, suite_report

logger = logging.getLogger("coevolve")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BACKEND = 3
EXIT_ABORTED = 4

LOG_NAME = "log.jsonl"
CHECKPOINT_NAME = "checkpoint.json"
TESTBENCH_NAME = "testbench.json"
SUMMARY_NAME = "summary.json"


def _overrides(args) -> dict:
    return {
        "generations": args.generations,
        "population_size": args.population,
        "offspring_count": args.offspring,
        "criterion": args.criterion,
        "workers": getattr(args, "engine_workers", None),
    }


def run_dir(settings, task_id: str, seed: int, out=None) -> Path:
    return Path(out) if out else settings.output_dir / task_id / f"seed-{seed}"


def execute(settings, task_id: str, seed: int, args, out=None) -> dict:
    """Run one (task, seed) to completion and return its summary."""
    manifest = settings.task(task_id)
    config = settings.run_config(manifest, seed=seed, **_overrides(args))
    task, backends = build_task(settings, manifest, seed, args.backend, args.keep_artifacts or None)
    directory = run_dir(settings, task_id, seed, out)
    directory.mkdir(parents=True, exist_ok=True)
    (directory / TESTBENCH_NAME).write_text(json.dumps(testbench_to_dict(task.testbench)))
    engine = CoEvolutionEngine(
        config, task, backends,
        log_path=directory / LOG_NAME,
        checkpoint_path=directory / CHECKPOINT_NAME,
        library=settings.library(),
    )
    engine.run()
    summary = summarize_run(directory / LOG_NAME)
    (directory / SUMMARY_NAME).write_text(json.dumps(summary, indent=2))
    return summary


def cmd_run(args) -> int:
    settings = load_settings(args.config)
    summary = execute(settings, args.task, args.seed, args, args.out)
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def cmd_suite(args) -> int:
    settings = load_settings(args.config)
    task_ids = [args.task] if args.task else sorted(settings.tasks)
    jobs = [(t, args.seed + i) for t in task_ids for i in range(args.repeats)]
    out = Path(args.out) if args.out else settings.output_dir

    def job(item):
        task_id, seed = item
        return execute(settings, task_id, seed, args, out / task_id / f"seed-{seed}")

    with ThreadPoolExecutor(max_workers=args.workers) as pool:
        summaries = list(pool.map(job, jobs))
    report = suite_report(summaries)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.csv").write_text(report["csv"])
    (out / "report.json").write_text(json.dumps(report["pass_at_k"], indent=2))
    print(report["text"])
    return EXIT_OK


def cmd_resume(args) -> int:
    settings = load_settings(args.config)
    directory = Path(args.run)
    checkpoint = json.loads((directory / CHECKPOINT_NAME).read_text())
    manifest = settings.task(checkpoint["task"])
    testbench = testbench_from_dict(json.loads((directory / TESTBENCH_NAME).read_text()))
    config = RunConfig.from_dict(checkpoint["config"])
    task, backends = build_task(
        settings, manifest, config.seed, args.backend, args.keep_artifacts or None, testbench=testbench
    )
    engine = CoEvolutionEngine(
        config, task, backends,
        log_path=directory / LOG_NAME,
        checkpoint_path=directory / CHECKPOINT_NAME,
        library=settings.library(),
    )
    engine.resume()
    summary = summarize_run(directory / LOG_NAME)
    (directory / SUMMARY_NAME).write_text(json.dumps(summary, indent=2))
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def cmd_front(args) -> int:
    text = export_front(args.log, args.format)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    return EXIT_OK


def _log_paths(paths):
    for p in map(Path, paths):
        if p.is_dir():
            yield from sorted(p.rglob(LOG_NAME))
        else:
            yield p


def cmd_report(args) -> int:
    summaries = [summarize_run(p) for p in _log_paths(args.runs)]
    if not summaries:
        raise ConfigurationError("no run logs found")
    report = suite_report(summaries)
    if args.csv:
        Path(args.csv).write_text(report["csv"])
    print(report["text"])
    return EXIT_OK


def _common(p, task_required=False):
    p.add_argument("--config", required=True, help="JSON configuration document")
    p.add_argument("--task", required=task_required, help="task id from the manifest")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--backend", choices=["synthetic", "external"], help="override the configured backend")
    p.add_argument("--generations", type=int)
    p.add_argument("--population", type=int)
    p.add_argument("--offspring", type=int)
    p.add_argument("--criterion", help="correctness | area | delay | power | ppa_product | nds:<objectives>")
    p.add_argument("--keep-artifacts", action="store_true", help="keep per-candidate tool scratch directories")
    p.add_argument("--out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coevolve", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="evolve one task")
    _common(p, task_required=True)
    p.add_argument("--workers", dest="engine_workers", type=int, help="concurrent offspring slots")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("suite", help="run every task of the manifest with repeated seeds")
    _common(p)
    p.add_argument("--repeats", type=int, default=10, help="independent runs per task (seeds seed..seed+n-1)")
    p.add_argument("--workers", type=int, default=1, help="runs executed in parallel")
    p.set_defaults(func=cmd_suite)

    p = sub.add_parser("resume", help="continue an interrupted run from its checkpoint")
    p.add_argument("--config", required=True)
    p.add_argument("--run", required=True, help="run directory holding the checkpoint and log")
    p.add_argument("--backend", choices=["synthetic", "external"])
    p.add_argument("--keep-artifacts", action="store_true")
    p.set_defaults(func=cmd_resume)

    p = sub.add_parser("front", help="export the final Pareto front of a run log")
    p.add_argument("--log", required=True)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_front)

    p = sub.add_parser("report", help="aggregate Pass@k and PPA over run logs")
    p.add_argument("runs", nargs="+", help="run logs or directories searched for log.jsonl")
    p.add_argument("--csv", help="write the per-run CSV here")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except TaskAborted as exc:
        logger.error("task aborted: %s", exc)
        return EXIT_ABORTED
    except (ConfigurationError, TruncatedLog, FileNotFoundError) as exc:
        logger.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except (BackendUnavailable, RunInterrupted) as exc:
        logger.error("run interrupted, resume from the last checkpoint: %s", exc)
        return EXIT_BACKEND


if __name__ == "__main__":
    sys.exit(main())
