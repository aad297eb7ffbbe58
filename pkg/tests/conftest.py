import json
import shutil
from pathlib import Path

import pytest

from panicfix.localization import SuspiciousLocation
from panicfix.panic_report import parse_backtrace
from panicfix.patch_engine import CandidatePatch, patch_id, unified_diff
from panicfix.transformers import Edit

ROOT = Path(__file__).resolve().parent.parent
DATA = Path(__file__).resolve().parent / "data"
CORPUS = ROOT / "corpus"
MINI_CRASH = DATA / "mini_crash"
RUNNING_EXAMPLE = DATA / "running_example"

HAVE_CARGO = shutil.which("cargo") is not None

# criterion number -> (title, outcome); filled by pytest_runtest_makereport
_ACCEPTANCE: dict = {}


def corpus_manifest() -> dict:
    return json.loads((CORPUS / "manifest.json").read_text())["programs"]


def mini_crash_raw() -> str:
    return (MINI_CRASH / "backtrace.txt").read_text().replace("@PROJECT_ROOT@", str(MINI_CRASH))


def hand_patch(model, old: str, new: str, file: str = "src/lib.rs", name: str = "Manual") -> CandidatePatch:
    """A patch replacing the single occurrence of ``old`` in ``file``."""
    data = model.unit(file).data
    start = data.index(old.encode())
    assert data.count(old.encode()) == 1
    edits = [Edit(file, (start, start + len(old.encode())), new)]
    el = model.file_element(file)
    loc = SuspiciousLocation(el, 0, 1.0, 1, 1, 2.0, rank=1, focus=el)
    return CandidatePatch(patch_id(edits), loc, name, 0, edits, unified_diff(model, edits), name, 1.0)


@pytest.fixture
def mini_crash_report():
    return parse_backtrace(mini_crash_raw(), MINI_CRASH)


def pytest_collection_modifyitems(config, items):
    if HAVE_CARGO:
        return
    skip = pytest.mark.skip(reason="cargo not on PATH")
    for item in items:
        if "cargo" in item.keywords:
            item.add_marker(skip)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    number, title = marker.args
    if report.when == "call" or (report.when == "setup" and not report.passed):
        status = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
        _ACCEPTANCE[number] = (title, status, report.duration)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, status, duration = _ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {status}  {title}  ({duration:.1f}s)")
