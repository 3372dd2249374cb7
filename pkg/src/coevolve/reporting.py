"""Pass@k, run summaries and Pareto-front export, all computed from run logs."""
from __future__ import annotations

import csv
import io
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .objectives import is_synthesized
from .pareto import IntraLevelCriterion, pareto_front
from .records import candidate_from_dict

__all__ = [
    "TruncatedLog",
    "pass_at_k",
    "read_log",
    "RunLog",
    "export_front",
    "summarize_run",
    "suite_report",
    "REPORT_COLUMNS",
]

REPORT_COLUMNS = [
    "task", "seed", "pass", "best_c", "area_um2", "delay_ns", "power_uw", "adp_product", "generations_used",
]
FRONT_COLUMNS = ["id", "c", "area_um2", "delay_ns", "power_uw", "adp_product"]
PASS_K = (1, 5, 10)


class TruncatedLog(ValueError):
    def __init__(self, path, last_generation: Optional[int]):
        super().__init__(f"{path}: run log is incomplete (last complete generation: {last_generation})")
        self.last_generation = last_generation


def pass_at_k(n: int, f: int, k: int) -> float:
    """Unbiased estimate of the chance that at least one of ``k`` draws from ``n`` runs succeeds."""
    if not 0 <= f <= n:
        raise ValueError(f"need 0 <= f <= n, got f={f}, n={n}")
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    if n - f < k:
        return 1.0
    return 1.0 - math.comb(n - f, k) / math.comb(n, k)


@dataclass
class RunLog:
    path: Path
    events: list
    complete: bool
    candidates: dict = field(default_factory=dict)

    @property
    def start(self) -> dict:
        return self.events[0]["payload"]

    @property
    def criterion(self) -> IntraLevelCriterion:
        return IntraLevelCriterion.parse(self.start["config"]["criterion"])

    def populations(self) -> dict[int, list[str]]:
        return {e["generation"]: e["payload"]["ids"] for e in self.events if e["event"] == "population"}

    def last_generation(self) -> Optional[int]:
        pops = self.populations()
        return max(pops) if pops else None

    def final_population(self) -> list:
        pops = self.populations()
        return [self.candidates[i] for i in pops[max(pops)]]


def read_log(path: str | Path, require_complete: bool = True) -> RunLog:
    path = Path(path)
    events = []
    with open(path, "rb") as fh:
        for raw in fh:
            if not raw.endswith(b"\n"):
                break
            try:
                events.append(json.loads(raw))
            except json.JSONDecodeError:
                break
    if not events or events[0]["event"] != "run_start":
        raise TruncatedLog(path, None)
    log = RunLog(path, events, complete=events[-1]["event"] == "run_end")
    for e in events:
        if e["event"] == "candidate":
            log.candidates[e["candidate"]] = candidate_from_dict(e["payload"]["record"])
    if require_complete and not log.complete:
        raise TruncatedLog(path, log.last_generation())
    return log


def _row(c) -> dict:
    ok = is_synthesized(c.ppa)
    return {
        "id": c.id,
        "c": c.correctness.value,
        "area_um2": c.ppa.area if ok else None,
        "delay_ns": c.ppa.delay if ok else None,
        "power_uw": c.ppa.power if ok else None,
        "adp_product": c.ppa.product if ok else None,
    }


def export_front(log_path: str | Path, format: str = "csv") -> str:
    """Non-dominated subset of the final population as CSV or JSON text."""
    log = read_log(log_path)
    front = pareto_front(log.final_population(), log.criterion)
    rows = [_row(c) for c in front]
    if format == "json":
        return json.dumps(rows, indent=2)
    if format != "csv":
        raise ValueError(f"unknown export format {format!r}")
    out = io.StringIO()
    writer = csv.DictWriter(out, fieldnames=FRONT_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: "" if v is None else v for k, v in r.items()})
    return out.getvalue()


def _best(candidates):
    return min(
        candidates,
        key=lambda c: (-c.correctness.value, c.ppa.product if is_synthesized(c.ppa) else math.inf),
    )


def summarize_run(log_path: str | Path) -> dict:
    """Per-run report: success, best candidate, front size, operator usage, gate trajectory."""
    log = read_log(log_path)
    final = log.final_population()
    best = _best(final)
    rescore = next((e["payload"]["scores"] for e in log.events if e["event"] == "final_rescore"), None)
    if rescore is None:
        passed = any(c.correctness.value == 1.0 for c in final)
    else:
        passed = any(s["passed"] == s["total"] for s in rescore.values())
    usage = Counter(e["payload"]["operator"] for e in log.events if e["event"] == "offspring")
    row = _row(best)
    return {
        "task": log.start["task"],
        "seed": log.start["config"]["seed"],
        "pass": passed,
        "best_id": best.id,
        "best_c": best.correctness.value,
        "area_um2": row["area_um2"],
        "delay_ns": row["delay_ns"],
        "power_uw": row["power_uw"],
        "adp_product": row["adp_product"],
        "front_size": len(pareto_front(final, log.criterion)),
        "generations_used": log.last_generation(),
        "operator_usage": dict(sorted(usage.items())),
        "gate_trajectory": [e["payload"]["theta"] for e in log.events if e["event"] == "generation_start"],
        "gate_fallbacks": sum(1 for e in log.events if e["event"] == "gate_fallback"),
    }


def suite_report(summaries: Sequence[dict], ks: Iterable[int] = PASS_K) -> dict:
    """Aggregate run summaries into per-task Pass@k plus a CSV of the runs."""
    ks = tuple(ks)
    by_task: dict[str, list[dict]] = {}
    for s in summaries:
        by_task.setdefault(s["task"], []).append(s)
    table = {}
    for task, runs in sorted(by_task.items()):
        n, f = len(runs), sum(1 for r in runs if r["pass"])
        table[task] = {
            "n": n,
            "successes": f,
            "seeds": sorted(r["seed"] for r in runs),
            **{f"pass@{k}": pass_at_k(n, f, k) for k in ks if k <= n},
        }

    out = io.StringIO()
    writer = csv.DictWriter(out, fieldnames=REPORT_COLUMNS, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for s in sorted(summaries, key=lambda r: (r["task"], r["seed"])):
        writer.writerow({k: "" if s.get(k) is None else s[k] for k in REPORT_COLUMNS})

    lines = ["task  n  successes  " + "  ".join(f"pass@{k}" for k in ks)]
    for task, row in table.items():
        cells = [f"{row[f'pass@{k}']:.4f}" if f"pass@{k}" in row else "-" for k in ks]
        lines.append(f"{task}  {row['n']}  {row['successes']}  " + "  ".join(cells))
    return {"pass_at_k": table, "csv": out.getvalue(), "text": "\n".join(lines)}
