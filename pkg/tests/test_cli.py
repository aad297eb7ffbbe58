import json
import os
import shutil
import tempfile

import pytest

from conftest import CORPUS, MINI_CRASH, RUNNING_EXAMPLE, hand_patch, mini_crash_raw
from panicfix import cli
from panicfix.cli import RunConfig, main, run
from panicfix.patch_engine import apply_to_workspace
from panicfix.source_model import load_project
from panicfix.validation import copy_project

DIFF = "--- a/src/lib.rs\n+++ b/src/lib.rs\n@@ -1 +1 @@\n-    a + b\n+    a.saturating_add(b)\n"


def test_compare_patches(tmp_path, capsys):
    a, b = tmp_path / "a.diff", tmp_path / "b.diff"
    a.write_text(DIFF)
    b.write_text(DIFF)
    assert main(["compare-patches", str(a), str(b)]) == 0
    assert json.loads(capsys.readouterr().out) == {"score": 1.0, "verdict": "similar"}


def test_compare_patches_malformed(tmp_path, capsys):
    a, b = tmp_path / "a.diff", tmp_path / "b.diff"
    a.write_text(DIFF)
    b.write_text("not a diff\n")
    assert main(["compare-patches", str(a), str(b)]) == 1
    assert "cli: MalformedDiff" in capsys.readouterr().err


def test_invalid_lambda_is_reported(capsys):
    code = main(["repair", "--project", str(MINI_CRASH), "--trigger", "t", "--lambda", "0", "--loc-only"])
    assert code == 1
    assert "localization: InvalidLambda" in capsys.readouterr().err


@pytest.fixture
def backtrace_file(tmp_path):
    path = tmp_path / "backtrace.txt"
    path.write_text(mini_crash_raw())
    return path


def test_loc_only_with_backtrace_file_needs_no_workspaces(backtrace_file, monkeypatch, capsys):
    monkeypatch.setenv("PATH", "")

    def no_slots(*args, **kwargs):
        raise AssertionError("loc-only mode must not create workspaces")

    monkeypatch.setattr(cli, "_Slot", no_slots)
    code = main(["repair", "--project", str(MINI_CRASH), "--trigger", "t", "--loc-only",
                 "--backtrace-file", str(backtrace_file)])
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["root_cause"]["kind"] == "IndexOutOfBounds"
    top = doc["locations"][0]
    assert (top["file"], top["line"], top["con"], top["rank"]) == ("src/lib.rs", 4, 1.0, 1)
    assert "patches" not in doc


def test_dump_graph(backtrace_file, tmp_path):
    out = tmp_path / "graph.json"
    run(RunConfig(MINI_CRASH, "t", backtrace_file=backtrace_file, loc_only=True, dump_graph=out))
    graph = json.loads(out.read_text())
    assert {"nodes", "edges"} <= graph.keys()
    assert any(e["kind"] == "AssignFlow" for e in graph["edges"])


def test_run_config_validation(tmp_path):
    with pytest.raises(ValueError):
        RunConfig(tmp_path / "missing", "t")
    with pytest.raises(ValueError):
        RunConfig(tmp_path, "t", top_k=0)
    with pytest.raises(ValueError):
        RunConfig(tmp_path, "t", output_format="xml")


# -- full runs --------------------------------------------------------------------------------------


@pytest.mark.cargo
def test_unwrap_none_program_is_repaired():
    result = run(RunConfig(CORPUS / "unwrap_none", "trigger_panic"))
    assert result.exit_status == 0
    doc = json.loads(result.document)
    correct = [p for p in doc["patches"] if p["validation"] == "Correct"]
    assert any(p["pattern_name"] == "InsertMatchUnwrapper" for p in correct)
    assert doc["elapsed_seconds"] > 0


@pytest.mark.cargo
def test_loc_only_capture_creates_no_workspaces(monkeypatch):
    def no_slots(*args, **kwargs):
        raise AssertionError("loc-only mode must not create workspaces")

    monkeypatch.setattr(cli, "_Slot", no_slots)
    result = run(RunConfig(RUNNING_EXAMPLE, "trigger_panic", loc_only=True))
    doc = json.loads(result.document)
    assert doc["locations"][0]["line"] == 6
    assert not (RUNNING_EXAMPLE / "target").exists()


@pytest.mark.cargo
def test_non_panicking_trigger_exits_4(tmp_path, capsys):
    ws = copy_project(RUNNING_EXAMPLE, tmp_path / "fixed")
    model = load_project(ws)
    apply_to_workspace(model, hand_patch(model, "    let diff = num1 - arr[num2];",
                                         "    let diff = num1 - arr.get(num2).copied().unwrap_or(num1);"), ws)
    assert main(["repair", "--project", str(ws), "--trigger", "trigger_panic"]) == 4
    assert "TriggerDoesNotPanic" in capsys.readouterr().err


def _strip_time(document):
    doc = json.loads(document)
    doc.pop("elapsed_seconds")
    return doc


@pytest.mark.cargo
def test_runs_are_deterministic_and_clean_up(monkeypatch):
    made = []
    real = tempfile.mkdtemp

    def recording(*args, **kwargs):
        path = real(*args, **kwargs)
        made.append(path)
        return path

    monkeypatch.setattr(cli.tempfile, "mkdtemp", recording)
    config = dict(project_root=RUNNING_EXAMPLE, trigger="trigger_panic", include_failed=True)
    first, second = run(RunConfig(**config)), run(RunConfig(**config))
    assert _strip_time(first.document) == _strip_time(second.document)
    assert len(made) == 2
    assert not any(os.path.exists(p) for p in made)


@pytest.mark.cargo
def test_keep_workspaces(tmp_path):
    result = run(RunConfig(RUNNING_EXAMPLE, "trigger_panic", keep_workspaces=True, parallel_validations=1))
    try:
        assert (result.workspace_root / "ws-0" / "src/lib.rs").read_bytes() == \
            (RUNNING_EXAMPLE / "src/lib.rs").read_bytes()
    finally:
        shutil.rmtree(result.workspace_root)


@pytest.mark.cargo
def test_text_format(capsys):
    assert main(["repair", "--project", str(RUNNING_EXAMPLE), "--trigger", "trigger_panic", "--format", "text"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("root cause: IndexOutOfBounds")
    assert "#1 InsertRangeChecker at src/lib.rs:6:5" in out
    assert "```diff" in out
