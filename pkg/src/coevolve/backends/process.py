"""Simulation and synthesis through external tools driven by templated command lines."""
from __future__ import annotations

import logging
import os
import shlex
import signal
import shutil
import subprocess
import tempfile
from pathlib import Path
from typing import Optional

from .base import ToolResult

logger = logging.getLogger(__name__)

KILL_GRACE = 5.0


def run_command(argv: list[str], cwd: Path, timeout: float) -> ToolResult:
    """Run ``argv`` and capture stdout+stderr; the child is killed on timeout."""
    try:
        proc = subprocess.Popen(
            argv, cwd=cwd, stdout=subprocess.PIPE, stderr=subprocess.STDOUT, text=True,
            start_new_session=True,
        )
    except OSError as exc:
        return ToolResult(f"cannot start {argv[0]}: {exc}", "error", None)
    try:
        out, _ = proc.communicate(timeout=timeout)
    except subprocess.TimeoutExpired:
        try:
            os.killpg(proc.pid, signal.SIGKILL)
        except ProcessLookupError:
            pass
        try:
            out, _ = proc.communicate(timeout=KILL_GRACE)
        except subprocess.TimeoutExpired:
            out = ""
        return ToolResult(out or "", "timeout", None)
    return ToolResult(out, "ok" if proc.returncode == 0 else "error", proc.returncode)


class _ScratchTool:
    def __init__(self, command: str, keep_artifacts: bool = False, scratch_root: Optional[str] = None):
        self.command = command
        self.keep_artifacts = keep_artifacts
        self.scratch_root = scratch_root

    def _run(self, files: dict[str, str], timeout: float) -> ToolResult:
        workdir = Path(tempfile.mkdtemp(prefix="coevolve-", dir=self.scratch_root))
        try:
            paths = {}
            for key, (name, text) in files.items():
                path = workdir / name
                path.write_text(text)
                paths[key] = str(path)
            outdir = workdir / "out"
            outdir.mkdir()
            argv = [a.format(outdir=str(outdir), **paths) for a in shlex.split(self.command)]
            return run_command(argv, workdir, timeout)
        finally:
            if self.keep_artifacts:
                logger.info("kept tool artifacts in %s", workdir)
            else:
                shutil.rmtree(workdir, ignore_errors=True)


class CommandSimulationBackend(_ScratchTool):
    """``command`` may use ``{design}``, ``{testbench}`` and ``{outdir}``."""

    def simulate(self, design: str, testbench: str, timeout: float = 60.0) -> ToolResult:
        return self._run({"design": ("design.v", design), "testbench": ("tb.v", testbench)}, timeout)


class CommandSynthesisBackend(_ScratchTool):
    """``command`` may use ``{design}`` and ``{outdir}``; its output is parsed as ``report_format``."""

    def __init__(self, command: str, report_format: str = "yosys-sta", **kwargs):
        super().__init__(command, **kwargs)
        self.report_format = report_format

    def synthesize(self, design: str, timeout: float = 300.0) -> ToolResult:
        return self._run({"design": ("design.v", design)}, timeout)
