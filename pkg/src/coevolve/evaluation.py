"""Correctness scoring from testbench output and PPA extraction from synthesis reports."""
from __future__ import annotations

import json
import logging
import math
import re
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

from .objectives import CorrectnessScore, PpaMetrics, PpaResult, SynthesisFailed, is_synthesized

logger = logging.getLogger(__name__)

__all__ = [
    "ConfigurationError",
    "TaskAborted",
    "TestCaseResult",
    "TestbenchArtifact",
    "SynthesisDiagnosis",
    "score_correctness",
    "parse_case_lines",
    "parse_observations",
    "render_case_lines",
    "parse_ppa_report",
    "ppa_product",
    "ppa_to_record",
    "ppa_from_record",
    "PPA_FORMATS",
]

DIGEST_LIMIT = 2000


class ConfigurationError(Exception):
    """Task or run configuration that cannot be executed."""


class TaskAborted(ConfigurationError):
    """The task cannot be scored, e.g. the golden reference does not simulate."""


@dataclass(frozen=True)
class TestCaseResult:
    __test__ = False  # not a pytest class

    case_id: str
    passed: bool
    signal: str = ""
    expected: str = ""
    actual: str = ""
    time: Optional[str] = None

    def to_dict(self) -> dict:
        return asdict(self)

    def describe(self) -> str:
        if self.passed:
            return f"case {self.case_id}: pass"
        at = f" at t={self.time}" if self.time is not None else ""
        return f"case {self.case_id}: {self.signal} expected {self.expected} got {self.actual}{at}"


def score_correctness(results: Sequence[TestCaseResult], total: int) -> CorrectnessScore:
    """Fraction of the task's ``total`` cases that passed; absent cases are failures."""
    if len(results) > total:
        raise ValueError(f"{len(results)} results for a testbench of {total} cases")
    return CorrectnessScore(sum(1 for r in results if r.passed), total)


_CASE_PASS = re.compile(r"^CASE\s+(\S+)\s+PASS\s*$")
_CASE_FAIL = re.compile(
    r"^CASE\s+(\S+)\s+FAIL\s+signal=(\S*)\s+expected=(\S*)\s+actual=(\S*)\s+time=(\S*)\s*$"
)
_CASE_ANY = re.compile(r"^CASE\s+(\S+)\b")
_TOTAL = re.compile(r"^TOTAL\s+(\d+)\s*$")
_OBS = re.compile(r"^OBS\s+(\S+)\s+(\S+?)=(\S*)\s*$")


def parse_case_lines(text: str) -> tuple[list[TestCaseResult], Optional[int]]:
    """Parse self-checking testbench output.

    Malformed ``CASE`` lines count as failures; duplicates keep the first
    report. Returns the results and the ``TOTAL`` value if one was printed.
    """
    results: dict[str, TestCaseResult] = {}
    total = None
    for raw in text.splitlines():
        line = raw.strip()
        if m := _TOTAL.match(line):
            total = int(m.group(1))
            continue
        if not (m := _CASE_ANY.match(line)):
            continue
        case_id = m.group(1)
        if case_id in results:
            continue
        if _CASE_PASS.match(line):
            results[case_id] = TestCaseResult(case_id, True)
        elif f := _CASE_FAIL.match(line):
            results[case_id] = TestCaseResult(
                case_id, False, f.group(2), f.group(3), f.group(4), f.group(5) or None
            )
        else:
            results[case_id] = TestCaseResult(case_id, False, "?", "?", "malformed")
    return list(results.values()), total


def parse_observations(text: str) -> dict[str, dict[str, str]]:
    """Collect ``OBS <case> <signal>=<value>`` lines into ``{case: {signal: value}}``."""
    observed: dict[str, dict[str, str]] = {}
    for raw in text.splitlines():
        if m := _OBS.match(raw.strip()):
            observed.setdefault(m.group(1), {})[m.group(2)] = m.group(3)
    return observed


def render_case_lines(results: Sequence[TestCaseResult], total: int) -> str:
    lines = []
    for r in results:
        if r.passed:
            lines.append(f"CASE {r.case_id} PASS")
        else:
            lines.append(
                f"CASE {r.case_id} FAIL signal={r.signal} expected={r.expected} "
                f"actual={r.actual} time={r.time if r.time is not None else '-'}"
            )
    lines.append(f"TOTAL {total}")
    return "\n".join(lines)


@dataclass(frozen=True)
class TestbenchArtifact:
    """Testbench used to score every candidate of one task.

    With ``expected`` unset the testbench is self-checking and prints the
    ``CASE`` protocol itself. Otherwise it prints ``OBS`` observation lines
    which are compared host-side against the golden-reference observations.
    """

    __test__ = False

    source: str
    case_count: int
    origin: str = "provided"
    expected: Optional[dict] = None

    def __post_init__(self):
        if self.case_count < 1:
            raise ConfigurationError("a testbench needs at least one test case")
        if self.origin not in ("provided", "backend-generated"):
            raise ValueError(f"unknown testbench origin {self.origin!r}")

    def check(self, output: str) -> list[TestCaseResult]:
        if self.expected is None:
            results, _ = parse_case_lines(output)
            return results[: self.case_count]
        observed = parse_observations(output)
        results = []
        for case_id, signals in self.expected.items():
            got = observed.get(case_id)
            if got is None:
                continue
            failure = next(
                ((sig, val) for sig, val in signals.items() if got.get(sig) != val), None
            )
            if failure is None:
                results.append(TestCaseResult(case_id, True))
            else:
                sig, val = failure
                results.append(TestCaseResult(case_id, False, sig, val, got.get(sig, "missing")))
        return results


@dataclass(frozen=True)
class SynthesisDiagnosis:
    cell_count: int = 0
    critical_path: tuple[tuple[str, float], ...] = ()
    resource_notes: tuple[str, ...] = ()
    raw_log_digest: str = ""

    def to_dict(self) -> dict:
        return {
            "cell_count": self.cell_count,
            "critical_path": [list(p) for p in self.critical_path],
            "resource_notes": list(self.resource_notes),
            "raw_log_digest": self.raw_log_digest,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SynthesisDiagnosis":
        return cls(
            int(data.get("cell_count", 0)),
            tuple((str(n), float(d)) for n, d in data.get("critical_path", ())),
            tuple(data.get("resource_notes", ())),
            data.get("raw_log_digest", ""),
        )

    def describe(self) -> str:
        lines = [f"cells: {self.cell_count}"]
        if self.critical_path:
            path = " -> ".join(f"{n} (+{d:g} ns)" for n, d in self.critical_path)
            lines.append(f"critical path: {path}")
        lines.extend(self.resource_notes)
        if self.raw_log_digest:
            lines.append(self.raw_log_digest)
        return "\n".join(lines)


def ppa_product(m: PpaResult) -> float:
    if not is_synthesized(m):
        raise ValueError("area x delay x power is undefined for a failed synthesis")
    return m.area * m.delay * m.power


def ppa_to_record(ppa: PpaResult) -> dict:
    if is_synthesized(ppa):
        return {"area_um2": ppa.area, "delay_ns": ppa.delay, "power_uw": ppa.power}
    return {"synthesis_failed": True, "reason": ppa.reason}


def ppa_from_record(record: dict) -> PpaResult:
    if record.get("synthesis_failed"):
        return SynthesisFailed(str(record.get("reason", "")))
    return PpaMetrics(
        float(record["area_um2"]), float(record["delay_ns"]), float(record["power_uw"])
    )


def _finite_nonneg(x) -> bool:
    return isinstance(x, (int, float)) and math.isfinite(x) and x >= 0


def _check_path(diag: SynthesisDiagnosis, delay: float) -> SynthesisDiagnosis:
    if sum(d for _, d in diag.critical_path) > delay + 1e-6:
        return SynthesisDiagnosis(
            diag.cell_count,
            (),
            diag.resource_notes + ("critical path breakdown inconsistent with reported delay",),
            diag.raw_log_digest,
        )
    return diag


def _parse_json(raw: str):
    try:
        record = json.loads(raw) if raw.strip() else None
    except json.JSONDecodeError as exc:
        return SynthesisFailed(f"unparseable PPA record: {exc}"), None
    if not isinstance(record, dict):
        return SynthesisFailed("empty synthesis report"), None
    diag = SynthesisDiagnosis.from_dict(record["diagnosis"]) if "diagnosis" in record else None
    if record.get("synthesis_failed"):
        reason = str(record.get("reason", "synthesis failed"))
        if diag is None:
            diag = SynthesisDiagnosis(raw_log_digest=reason)
        return SynthesisFailed(reason), diag
    values = [record.get(k) for k in ("area_um2", "delay_ns", "power_uw")]
    if not all(_finite_nonneg(v) for v in values):
        reason = "PPA record missing or invalid metric"
        return SynthesisFailed(reason), SynthesisDiagnosis(raw_log_digest=reason)
    m = PpaMetrics(*map(float, values))
    return m, _check_path(diag, m.delay) if diag else None


_AREA = re.compile(r"Chip area for (?:top )?module\s+'?\\?([^':]*)'?:\s*([0-9.eE+-]+)")
_CELLS = re.compile(r"Number of cells:\s*(\d+)")
_CELL_TYPE = re.compile(r"^\s{4,}(\$?[A-Za-z_][\w$]*)\s+(\d+)\s*$")
_ARRIVAL = re.compile(r"^\s*(-?[0-9.]+(?:[eE][+-]?\d+)?)\s+data arrival time")
_PATH_ROW = re.compile(r"^\s*(-?\d+\.\d+)\s+(-?\d+\.\d+)\s+[\^v]\s+(\S+)")
_POWER_TOTAL = re.compile(
    r"^Total\s+([0-9.eE+-]+)\s+([0-9.eE+-]+)\s+([0-9.eE+-]+)\s+([0-9.eE+-]+)"
)
_ERROR = re.compile(r"^\s*(ERROR|Error)\b[:\s]*(.*)$")


def _parse_yosys_sta(raw: str):
    """Yosys ``stat -liberty`` followed by OpenSTA ``report_checks``/``report_power``.

    Power in the OpenSTA report is in watts and converted to microwatts.
    """
    lines = raw.splitlines()
    errors = [m.group(0).strip() for line in lines if (m := _ERROR.match(line))]
    cells = [int(m.group(1)) for line in lines if (m := _CELLS.search(line))]
    cell_count = cells[-1] if cells else 0

    notes = []
    in_stat = False
    for line in lines:
        if _CELLS.search(line):
            in_stat = True
            continue
        if in_stat:
            if m := _CELL_TYPE.match(line):
                notes.append(f"{m.group(1)}: {m.group(2)}")
            elif line.strip() and not line.startswith(" "):
                in_stat = False

    path = []
    arrivals = []
    for line in lines:
        if m := _ARRIVAL.match(line):
            arrivals.append(float(m.group(1)))
            if len(arrivals) == 1:
                continue
        if not arrivals and (m := _PATH_ROW.match(line)):
            incr = float(m.group(1))
            if incr > 0:
                path.append((m.group(3), incr))

    area = None
    for line in lines:
        if m := _AREA.search(line):
            area = float(m.group(2))
    power = None
    for line in lines:
        if m := _POWER_TOTAL.match(line.strip()):
            power = float(m.group(4)) * 1e6
    delay = max(arrivals) if arrivals else None

    digest_lines = errors + [l.strip() for l in lines if "Warning" in l]
    digest = "\n".join(digest_lines)[:DIGEST_LIMIT]

    reason = None
    if errors:
        reason = "; ".join(errors)
    elif cells and cell_count == 0:
        reason = "logic optimized to zero cells"
    else:
        missing = [n for n, v in (("area", area), ("delay", delay), ("power", power)) if v is None]
        if missing:
            reason = "report missing " + ", ".join(missing)
        elif not all(_finite_nonneg(v) for v in (area, delay, power)):
            reason = "report contains invalid metric values"
    if reason is not None:
        if reason not in digest:
            digest = (reason + ("\n" + digest if digest else ""))[:DIGEST_LIMIT]
        return SynthesisFailed(reason), SynthesisDiagnosis(cell_count, (), tuple(notes), digest)

    m = PpaMetrics(area, delay, power)
    diag = SynthesisDiagnosis(cell_count, tuple(path), tuple(notes), digest)
    return m, _check_path(diag, delay)


PPA_FORMATS = {"json": _parse_json, "yosys-sta": _parse_yosys_sta}


def parse_ppa_report(raw: str, format: str = "json") -> tuple[PpaResult, Optional[SynthesisDiagnosis]]:
    """Normalize a synthesis/timing/power report into PPA metrics and a diagnosis."""
    try:
        parser = PPA_FORMATS[format]
    except KeyError:
        raise ConfigurationError(
            f"unknown PPA report format {format!r}; known: {sorted(PPA_FORMATS)}"
        ) from None
    if not raw or not raw.strip():
        return SynthesisFailed("empty synthesis report"), SynthesisDiagnosis(
            raw_log_digest="empty synthesis report"
        )
    return parser(raw)
