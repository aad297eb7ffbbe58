"""Build and test execution against patched working copies."""

from __future__ import annotations

import enum
import os
import re
import shlex
import shutil
import signal
import subprocess
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import ToolchainUnavailable
from .panic_report import iter_headers

DEFAULT_BUDGET = 120.0
DEFAULT_BUILD = "cargo test --no-run"
DEFAULT_TRIGGER = "cargo test {test_name}"
DEFAULT_REGRESSION = "cargo test --no-fail-fast -- --skip {test_name}"
PANIC_EXIT_STATUS = 101
EXCERPT_LINES = 40

_RUNNING = re.compile(r"^\s*Running (?:unittests )?(\S+)")
_DOCTESTS = re.compile(r"^\s*Doc-tests (\S+)")
_VERDICT = re.compile(r"^test (\S+) \.\.\. (ok|FAILED|ignored)\b")
_TEST_RESULT = re.compile(r"^test result: ", re.M)


class ValidationStatus(str, enum.Enum):
    Correct = "Correct"
    Plausible = "Plausible"
    Failed = "Failed"
    CompileError = "CompileError"
    Timeout = "Timeout"


@dataclass
class ValidationOutcome:
    status: ValidationStatus
    trigger_panicked: Optional[bool]
    regression_passed: Optional[bool] = None
    log_excerpt: str = ""
    elapsed_seconds: float = 0.0

    @property
    def regression_executed(self) -> bool:
        return self.regression_passed is not None

    def to_dict(self):
        return {
            "status": self.status.value,
            "trigger_panicked": self.trigger_panicked,
            "regression_passed": self.regression_passed,
            "regression_executed": self.regression_executed,
            "log_excerpt": self.log_excerpt,
        }


@dataclass
class TestCommands:
    __test__ = False  # not a pytest class despite the name

    trigger: str
    build: str = DEFAULT_BUILD
    trigger_template: str = DEFAULT_TRIGGER
    regression_template: str = DEFAULT_REGRESSION

    @property
    def is_test_name(self) -> bool:
        return not re.search(r"\s", self.trigger)

    @property
    def test_name(self) -> str:
        return self.trigger if self.is_test_name else ""

    def trigger_argv(self) -> list[str]:
        cmd = self.trigger_template.format(test_name=self.trigger) if self.is_test_name else self.trigger
        return shlex.split(cmd)

    def regression_argv(self) -> list[str]:
        if self.is_test_name:
            return shlex.split(self.regression_template.format(test_name=self.trigger))
        return shlex.split(self.regression_template.replace("-- --skip {test_name}", "").format(test_name=""))

    def build_argv(self) -> list[str]:
        return shlex.split(self.build)


class StageTimeout(Exception):
    def __init__(self, output: str):
        super().__init__("stage exceeded its time budget")
        self.output = output


def require_toolchain(tool: str = "cargo") -> str:
    path = shutil.which(tool)
    if path is None:
        raise ToolchainUnavailable(f"{tool} not found on PATH")
    return path


def run_command(argv: list[str], cwd, env: dict, timeout: float) -> tuple[int, str]:
    """Run with combined stdout/stderr; the whole process group dies on timeout."""
    if timeout <= 0:
        raise StageTimeout("")
    try:
        proc = subprocess.Popen(argv, cwd=cwd, env=env, stdout=subprocess.PIPE, stderr=subprocess.STDOUT,
                                start_new_session=True)
    except FileNotFoundError as exc:
        raise ToolchainUnavailable(str(exc)) from exc
    try:
        out, _ = proc.communicate(timeout=timeout)
    except subprocess.TimeoutExpired:
        try:
            os.killpg(proc.pid, signal.SIGKILL)
        except ProcessLookupError:
            pass
        out, _ = proc.communicate()
        raise StageTimeout(out.decode("utf-8", "replace"))
    return proc.returncode, out.decode("utf-8", "replace")


def stage_env(target_dir=None, backtrace: bool = False) -> dict:
    env = dict(os.environ)
    env["CARGO_TERM_COLOR"] = "never"
    if target_dir is not None:
        env["CARGO_TARGET_DIR"] = str(target_dir)
    if backtrace:
        env["RUST_BACKTRACE"] = "full"
    return env


def _is_test_assertion(file: str, message: str) -> bool:
    parts = Path(file.replace("\\", "/")).parts
    return "tests" in parts[:-1] and message.lstrip().startswith("assertion")


def panic_detector(output: str, exit_status: int) -> bool:
    """True iff the run panicked in the program under repair.

    An assertion failing inside an integration-test file is a test verdict,
    not a panic of the program, and does not count.
    """
    headers = list(iter_headers(output))
    if any(not _is_test_assertion(f, msg) for f, msg in headers):
        return True
    if headers:
        return False
    return exit_status == PANIC_EXIT_STATUS and not _TEST_RESULT.search(output)


def parse_test_verdicts(output: str) -> dict[tuple[str, str], str]:
    """(test binary, test name) -> ok / FAILED / ignored."""
    verdicts = {}
    binary = ""
    for line in output.splitlines():
        m = _RUNNING.match(line) or _DOCTESTS.match(line)
        if m:
            binary = re.sub(r"-[0-9a-f]{16}$", "", m.group(1).strip("()"))
            continue
        m = _VERDICT.match(line)
        if m:
            verdicts[(binary, m.group(1))] = m.group(2)
    return verdicts


def excerpt(output: str, lines: int = EXCERPT_LINES) -> str:
    tail = output.rstrip().splitlines()[-lines:]
    return "\n".join(tail)


@dataclass
class Baseline:
    verdicts: dict = field(default_factory=dict)
    exit_status: int = 0

    def matches(self, verdicts: dict, exit_status: int) -> bool:
        if self.verdicts or verdicts:
            return verdicts == self.verdicts
        return exit_status == self.exit_status


def run_trigger(workspace, commands: TestCommands, timeout: float, target_dir=None) -> tuple[bool, str]:
    code, out = run_command(commands.trigger_argv(), workspace, stage_env(target_dir, backtrace=True), timeout)
    return panic_detector(out, code), out


def record_baseline(workspace, commands: TestCommands, budget: float = DEFAULT_BUDGET,
                    target_dir=None) -> Baseline:
    env = stage_env(target_dir)
    code, out = run_command(commands.regression_argv(), workspace, env, budget)
    return Baseline(parse_test_verdicts(out), code)


def validate(workspace, commands: TestCommands, budget: float = DEFAULT_BUDGET, *,
             baseline: Optional[Baseline] = None, target_dir=None) -> ValidationOutcome:
    """Build, run the trigger, then (only if the panic is gone) the regression suite."""
    started = time.monotonic()
    deadline = started + budget
    log = []

    def remaining():
        return deadline - time.monotonic()

    def done(status, panicked, regression=None):
        return ValidationOutcome(status, panicked, regression, excerpt("\n".join(log)),
                                 time.monotonic() - started)

    try:
        code, out = run_command(commands.build_argv(), workspace, stage_env(target_dir), remaining())
        log.append(out)
        if code != 0:
            return done(ValidationStatus.CompileError, None)

        panicked, out = run_trigger(workspace, commands, remaining(), target_dir)
        log.append(out)
        if panicked:
            return done(ValidationStatus.Failed, True)

        code, out = run_command(commands.regression_argv(), workspace, stage_env(target_dir), remaining())
        log.append(out)
        verdicts = parse_test_verdicts(out)
        if baseline is None:
            passed = code == 0 and all(v != "FAILED" for v in verdicts.values())
        else:
            passed = baseline.matches(verdicts, code)
        return done(ValidationStatus.Correct if passed else ValidationStatus.Plausible, False, passed)
    except StageTimeout as exc:
        log.append(exc.output)
        return done(ValidationStatus.Timeout, None)


def copy_project(src, dst) -> Path:
    """Clean working copy without build output or VCS data.

    Files get fresh mtimes so a reused target directory never treats them as up to date.
    """
    dst = Path(dst)
    shutil.copytree(src, dst, ignore=shutil.ignore_patterns("target", ".git"), dirs_exist_ok=True,
                    copy_function=shutil.copy)
    return dst

