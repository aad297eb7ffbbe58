"""One test per acceptance criterion; the conftest summary prints a PASS/FAIL line for each."""

import json
import math
import random
import time
from fractions import Fraction

import pytest

from conftest import CORPUS, RUNNING_EXAMPLE, corpus_manifest, hand_patch
from panicfix.catalog import generation_order, load_catalog
from panicfix.cli import RunConfig, run
from panicfix.dep_graph import DependencyGraph, Edge, EdgeKind, build_graph, distance_to_seeds
from panicfix.localization import SuspiciousLocation, confidence, rank_locations, suspicion
from panicfix.panic_report import classify_root_cause, parse_backtrace
from panicfix.patch_engine import (CandidatePatch, apply_edits, apply_to_workspace, check_syntax, generate_all,
                                   revert)
from panicfix.errors import SyntacticallyInvalid
from panicfix.ranking import compare_diffs, emit_report, prioritize, score_patches, similarity
from panicfix.source_model import CodeElement, Granularity, load_project, parses_cleanly
from panicfix.transformers import Edit
from panicfix.validation import (TestCommands, ValidationOutcome, ValidationStatus, copy_project, record_baseline,
                                 run_trigger, validate)

acceptance = pytest.mark.acceptance


def within(started, seconds):
    elapsed = time.monotonic() - started
    assert elapsed < seconds, f"took {elapsed:.1f}s, limit {seconds}s"


# -- 1 ------------------------------------------------------------------------------------------------

@acceptance(1, "formula fidelity: confidence and suspicion")
def test_formula_fidelity():
    started = time.monotonic()
    assert confidence(0, 2) == 1.0
    assert confidence(1, 2) == 0.5
    for d in list(range(2, 100)) + [math.inf]:
        assert confidence(d, 2) == 0.0
    rng = random.Random(1)
    for _ in range(1000):
        n, d, c = rng.randint(0, 100), rng.randint(1, 50), rng.random()
        exact = Fraction(n) * (Fraction(1, d) + Fraction(c))
        assert abs(suspicion(n, d, c) - float(exact)) <= 1e-12
    within(started, 1)


# -- 2 ------------------------------------------------------------------------------------------------

def _injected(name, con, sim, status, order):
    el = CodeElement(f"src/lib.rs:{name}", "src/lib.rs", None, Granularity.Statement)
    loc = SuspiciousLocation(el, 0, con, 1, 1, 1 + con, rank=1)
    p = CandidatePatch(name, loc, name, 0, [], "", name, con, catalog_order=order)
    p.sim = sim
    p.validation = ValidationOutcome(status, status is ValidationStatus.Failed)
    return p


@acceptance(2, "three-patch scenario: ranks 3, 2, 1 and totals 1.1, 1.1, 1.7")
def test_three_patch_scenario():
    started = time.monotonic()
    patches = [
        _injected("patch1", 0.7, 0.4, ValidationStatus.Failed, 1),
        _injected("patch2", 1.0, 0.1, ValidationStatus.Correct, 5),
        _injected("patch3", 1.0, 0.7, ValidationStatus.Correct, 6),
    ]
    ranked = {r.patch.id: r for r in prioritize(patches)}
    assert [ranked[p.id].rank for p in patches] == [3, 2, 1]
    assert [ranked[p.id].total for p in patches] == [1.1, 1.1, 1.7]
    within(started, 1)


# -- 3 ------------------------------------------------------------------------------------------------

INJECTED_OUTCOMES = {
    "InsertMatchUnwrapper": ValidationStatus.Failed,
    "MutateBinaryOperator": ValidationStatus.Correct,
    "InsertRangeChecker": ValidationStatus.Correct,
}


@pytest.mark.cargo
@acceptance(3, "running example: IMU, MBO and IRC candidates; IRC ranks first")
def test_running_example(tmp_path):
    started = time.monotonic()
    ws = copy_project(RUNNING_EXAMPLE, tmp_path / "ws")
    panicked, raw = run_trigger(ws, TestCommands("trigger_panic"), 120, tmp_path / "target")
    assert panicked
    report = parse_backtrace(raw, ws)
    model = load_project(RUNNING_EXAMPLE)
    locations = rank_locations(report, model, build_graph(model))
    candidates = generate_all(locations, generation_order(load_catalog(), report.root_cause), model)
    score_patches(candidates, report.message)

    lines = {(p.pattern_name, p.location.line) for p in candidates}
    assert {("InsertMatchUnwrapper", 2), ("MutateBinaryOperator", 6), ("InsertRangeChecker", 6)} <= lines

    injected = [p for p in candidates if p.pattern_name in INJECTED_OUTCOMES]
    for p in injected:
        p.validation = ValidationOutcome(INJECTED_OUTCOMES[p.pattern_name], None)
    top = prioritize(injected)[0]
    assert top.patch.pattern_name == "InsertRangeChecker"
    assert top.con == 1.0

    # The same holds with real validation of every candidate.
    real = run(RunConfig(RUNNING_EXAMPLE, "trigger_panic"))
    assert real.ranked[0].patch.pattern_name == "InsertRangeChecker"
    assert real.ranked[0].patch.validation.status is ValidationStatus.Correct
    within(started, 30)


# -- 4 ------------------------------------------------------------------------------------------------

@pytest.mark.cargo
@acceptance(4, "mini-corpus: >=8/10 Correct in top-5, >=6/10 similar to the reference fix")
def test_corpus_repair_rate():
    started = time.monotonic()
    correct, similar = [], []
    for name, meta in sorted(corpus_manifest().items()):
        root = CORPUS / name
        result = run(RunConfig(root, meta["trigger"], top_k=5))
        reference = (root / meta["reference_fix"]).read_text()
        statuses = [r.patch.validation.status for r in result.ranked]
        scores = [compare_diffs(r.patch.diff, reference)[0] for r in result.ranked]
        best = max(scores, default=0.0)
        print(f"{name}: top-5 {[s.value for s in statuses]} best similarity {best:.4f}")
        if ValidationStatus.Correct in statuses:
            correct.append(name)
        if any(compare_diffs(r.patch.diff, reference)[1] for r in result.ranked):
            similar.append(name)
    print(f"correct {len(correct)}/10, similar {len(similar)}/10")
    assert len(correct) >= 8, correct
    assert len(similar) >= 6, similar
    within(started, 600)


# -- 5 ------------------------------------------------------------------------------------------------

def _floyd_warshall(n, pairs):
    d = [[0 if i == j else math.inf for j in range(n)] for i in range(n)]
    for a, b in pairs:
        if a != b:
            d[a][b] = d[b][a] = 1
    for k in range(n):
        for i in range(n):
            for j in range(n):
                d[i][j] = min(d[i][j], d[i][k] + d[k][j])
    return d


def _check_graph_oracle(rng):
    for _ in range(200):
        n = rng.randint(1, 12)
        pairs = [(rng.randrange(n), rng.randrange(n)) for _ in range(rng.randint(0, 2 * n))]
        seeds = {str(s) for s in rng.sample(range(n), rng.randint(1, n))}
        nodes = {str(i): CodeElement(str(i), "f.rs", None, Granularity.Statement) for i in range(n)}
        graph = DependencyGraph(nodes, [Edge(str(a), str(b), EdgeKind.AssignFlow) for a, b in pairs])
        d = _floyd_warshall(n, pairs)
        for v in range(n):
            assert distance_to_seeds(graph, str(v), seeds) == min(d[int(s)][v] for s in seeds)


def _check_confidence(rng):
    for _ in range(10_000):
        lam = rng.randint(1, 20)
        d1, d2 = sorted(rng.choice([rng.randint(0, 40), math.inf]) for _ in range(2))
        c1, c2 = confidence(d1, lam), confidence(d2, lam)
        assert c1 >= c2
        assert 0.0 <= c1 <= 1.0 and 0.0 <= c2 <= 1.0


def _all_statement_candidates(model):
    locs = [SuspiciousLocation(s, 0, 1.0, 1, 1, 2.0, rank=i, focus=s)
            for i, s in enumerate(model.statements(), start=1)]
    return generate_all(locs, load_catalog(), model)


def _tree(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def _check_corpus_patches(tmp_path):
    total = 0
    for name in sorted(corpus_manifest()):
        model = load_project(CORPUS / name)
        ws = copy_project(CORPUS / name, tmp_path / name)
        pristine = _tree(ws)
        cands = _all_statement_candidates(model)
        assert cands, name
        for p in cands:
            for f, es in {e.file: [x for x in p.edits if x.file == e.file] for e in p.edits}.items():
                assert parses_cleanly(apply_edits(model.unit(f).data, es)), (name, p.pattern_name)
            originals = apply_to_workspace(model, p, ws)
            assert _tree(ws) != pristine
            revert(ws, originals)
            assert _tree(ws) == pristine, (name, p.pattern_name, p.variant_index)
        # the gate refuses text that no longer parses
        broken = [Edit("src/lib.rs", (0, 0), "fn {{{ ")]
        with pytest.raises(SyntacticallyInvalid):
            check_syntax(model, broken)
        total += len(cands)
    return total


def _check_similarity(rng):
    vocab = "index out of bounds the len is borrow add with overflow unwrap none value range".split()
    for _ in range(1000):
        a = " ".join(rng.choice(vocab) for _ in range(rng.randint(0, 10)))
        b = " ".join(rng.choice(vocab) for _ in range(rng.randint(0, 10)))
        s = similarity(a, b)
        assert s == similarity(b, a)
        assert 0.0 <= s <= 1.0


@acceptance(5, "property suites: graph oracle, confidence, apply/revert, syntax gate, similarity")
def test_property_suites(tmp_path):
    started = time.monotonic()
    rng = random.Random(5)
    _check_graph_oracle(rng)
    _check_confidence(rng)
    patches = _check_corpus_patches(tmp_path)
    _check_similarity(rng)
    print(f"apply/revert checked on {patches} corpus candidates")
    within(started, 120)


# -- 6 ------------------------------------------------------------------------------------------------

@pytest.mark.cargo
@acceptance(6, "root-cause classifier on captured corpus messages (10/10)")
def test_classifier_on_captured_messages(tmp_path):
    started = time.monotonic()
    hits = 0
    target = tmp_path / "target"
    for name, meta in sorted(corpus_manifest().items()):
        ws = copy_project(CORPUS / name, tmp_path / name)
        panicked, raw = run_trigger(ws, TestCommands(meta["trigger"]), 120, target)
        assert panicked, name
        message = parse_backtrace(raw, ws).message
        got = classify_root_cause(message).kind.value
        print(f"{name}: {message!r} -> {got}")
        hits += got == meta["root_cause"]
    assert hits == 10
    within(started, 60)


# -- 7 ------------------------------------------------------------------------------------------------

TRUE_FIX = ("    let diff = num1 - arr[num2];",
            "    if num2 >= arr.len() {\n        return 0;\n    }\n    let diff = num1 - arr[num2];")
# Removes the panic but also short-circuits every positive input.
BEHAVIOR_CHANGING = ("    let diff = num1 - arr[num2];",
                     "    if num2 >= arr.len() || num1 > 0 {\n        return 0;\n    }\n    let diff = num1 - arr[num2];")
# Touches only the negative-input branch, which the trigger never reaches.
IRRELEVANT = ("        return 0;", "        return -1;")


@pytest.mark.cargo
@acceptance(7, "validation trichotomy: Correct / Plausible / Failed")
def test_validation_trichotomy(tmp_path):
    started = time.monotonic()
    model = load_project(RUNNING_EXAMPLE)
    ws = copy_project(RUNNING_EXAMPLE, tmp_path / "ws")
    target = tmp_path / "target"
    commands = TestCommands("trigger_panic")
    baseline = record_baseline(ws, commands, 120, target)
    outcomes = {}
    for label, (old, new) in [("true fix", TRUE_FIX), ("behavior-changing", BEHAVIOR_CHANGING),
                              ("irrelevant", IRRELEVANT)]:
        patch = hand_patch(model, old, new, name=label)
        originals = apply_to_workspace(model, patch, ws)
        try:
            patch.validation = validate(ws, commands, 120, baseline=baseline, target_dir=target)
        finally:
            revert(ws, originals)
        patch.sim = 0.0
        outcomes[label] = patch
    status = {k: p.validation.status for k, p in outcomes.items()}
    assert status == {"true fix": ValidationStatus.Correct, "behavior-changing": ValidationStatus.Plausible,
                      "irrelevant": ValidationStatus.Failed}

    failed = outcomes["irrelevant"]
    assert failed.validation.trigger_panicked is True
    assert not failed.validation.regression_executed
    record = json.loads(emit_report(prioritize([failed]), "json"))["patches"][0]
    assert record["validation"] == "Failed"
    assert record["regression_executed"] is False and record["regression_passed"] is None
    assert "regression not executed" in emit_report(prioritize([failed]), "text")
    within(started, 60)
