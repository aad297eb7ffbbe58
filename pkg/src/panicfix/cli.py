"""Command-line entry point: ``panicfix repair`` and ``panicfix compare-patches``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import shutil
import sys
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .catalog import generation_order, load_catalog
from .dep_graph import build_graph
from .errors import InvalidLambda, PanicFixError, TriggerDoesNotPanic
from .localization import LocalizationConfig, rank_locations
from .panic_report import parse_backtrace
from .patch_engine import apply_to_workspace, generate_all, revert
from .ranking import (DEFAULT_TOP_K, EMITTABLE, SCHEMA_VERSION, compare_diffs, emit_report, exit_status,
                      ordering_key, prioritize, score_patches, status_of)
from .source_model import load_project
from .validation import (DEFAULT_BUDGET, TestCommands, copy_project, record_baseline, require_toolchain,
                         run_trigger, validate)

log = logging.getLogger("panicfix")

EXIT_TRIGGER_DOES_NOT_PANIC = 4
EXIT_ERROR = 1


@dataclass
class RunConfig:
    project_root: Path
    trigger: str
    backtrace_file: Optional[Path] = None
    lambda_: int = 2
    top_k: int = DEFAULT_TOP_K
    max_candidates: int = 20
    validation_budget: float = DEFAULT_BUDGET
    parallel_validations: int = 2
    output_format: str = "json"
    catalog_path: Optional[Path] = None
    loc_only: bool = False
    include_failed: bool = False
    dump_graph: Optional[Path] = None
    keep_workspaces: bool = False
    color: bool = False

    def __post_init__(self):
        self.project_root = Path(self.project_root).resolve()
        if not self.project_root.is_dir():
            raise ValueError(f"project root {self.project_root} does not exist")
        if not isinstance(self.lambda_, int) or self.lambda_ < 1:
            raise InvalidLambda(f"lambda must be an integer >= 1, got {self.lambda_!r}")
        for name in ("top_k", "max_candidates", "parallel_validations"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.validation_budget <= 0:
            raise ValueError("validation budget must be positive")
        if self.output_format not in ("json", "text"):
            raise ValueError(f"unknown output format {self.output_format!r}")


@dataclass
class RunResult:
    document: str
    exit_status: int
    report: object = None
    locations: list = None
    candidates: list = None
    ranked: list = None
    workspace_root: Optional[Path] = None


class _Slot:
    def __init__(self, root: Path, index: int, project: Path):
        self.workspace = root / f"ws-{index}"
        self.target_dir = root / f"target-{index}"
        if not self.workspace.exists():
            copy_project(project, self.workspace)


def _validate_lazily(candidates, slots, model, commands, budget, baseline, k, include_failed):
    """Validate in score order; stop once later candidates cannot reach the top-k."""
    pending = sorted(candidates, key=ordering_key)
    done = []

    def work(slot, patch):
        originals = apply_to_workspace(model, patch, slot.workspace)
        try:
            patch.validation = validate(slot.workspace, commands, budget, baseline=baseline,
                                        target_dir=slot.target_dir)
        finally:
            revert(slot.workspace, originals)
        return patch

    def settled(next_total):
        pool = done if include_failed else [p for p in done if status_of(p) in EMITTABLE]
        if len(pool) < k:
            return False
        kth = sorted(pool, key=ordering_key)[k - 1]
        return next_total < kth.total

    with ThreadPoolExecutor(max_workers=len(slots)) as ex:
        i = 0
        while i < len(pending):
            if settled(pending[i].total):
                break
            batch = pending[i:i + len(slots)]
            i += len(batch)
            done.extend(ex.map(work, slots[:len(batch)], batch))
    log.info("validated %d of %d candidates", len(done), len(candidates))
    return done


def run(config: RunConfig) -> RunResult:
    started = time.monotonic()
    catalog = load_catalog(config.catalog_path)
    commands = TestCommands(config.trigger)
    root = config.project_root
    tmp = Path(tempfile.mkdtemp(prefix="panicfix-"))
    slots: list[_Slot] = []
    try:
        raw, capture_root = None, root
        if config.backtrace_file is not None:
            raw = Path(config.backtrace_file).read_text("utf-8", errors="replace")
        if not config.loc_only:
            require_toolchain()
            slots.append(_Slot(tmp, 0, root))
            panicked, out = run_trigger(slots[0].workspace, commands, config.validation_budget,
                                        slots[0].target_dir)
            if not panicked:
                raise TriggerDoesNotPanic(f"trigger {config.trigger!r} does not panic before patching")
            if raw is None:
                raw, capture_root = out, slots[0].workspace
        elif raw is None:
            require_toolchain()
            panicked, raw = run_trigger(root, commands, config.validation_budget, tmp / "target")
            if not panicked:
                raise TriggerDoesNotPanic(f"trigger {config.trigger!r} does not panic")

        report = parse_backtrace(raw, capture_root)
        model = load_project(root)
        graph = build_graph(model)
        if config.dump_graph is not None:
            Path(config.dump_graph).write_text(json.dumps(graph.to_dict(), indent=2))
        locations = rank_locations(report, model, graph,
                                   LocalizationConfig(config.lambda_, config.max_candidates))

        if config.loc_only:
            doc = {
                "schema_version": SCHEMA_VERSION,
                "elapsed_seconds": time.monotonic() - started,
                "root_cause": report.root_cause.to_dict(),
                "locations": [loc.to_dict() for loc in locations],
            }
            return RunResult(json.dumps(doc, indent=2), 0, report, locations)

        candidates = generate_all(locations, generation_order(catalog, report.root_cause), model)
        score_patches(candidates, report.message)
        log.info("%d candidate patches from %d locations", len(candidates), len(locations))

        baseline = record_baseline(slots[0].workspace, commands, config.validation_budget, slots[0].target_dir)
        for i in range(1, config.parallel_validations):
            slots.append(_Slot(tmp, i, root))
        validated = _validate_lazily(candidates, slots, model, commands, config.validation_budget, baseline,
                                     config.top_k, config.include_failed)
        ranked = prioritize(validated, config.top_k, include_failed=config.include_failed)
        doc = emit_report(ranked, config.output_format, root_cause=report.root_cause,
                          elapsed_seconds=time.monotonic() - started, color=config.color)
        return RunResult(doc, exit_status(ranked), report, locations, candidates, ranked,
                         tmp if config.keep_workspaces else None)
    finally:
        if config.keep_workspaces:
            log.warning("workspaces kept in %s", tmp)
        else:
            shutil.rmtree(tmp, ignore_errors=True)


def compare_patches(generated, reference) -> tuple[float, bool]:
    return compare_diffs(Path(generated).read_text("utf-8"), Path(reference).read_text("utf-8"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="panicfix", description="Localize and repair Rust panics.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    rp = sub.add_parser("repair", help="localize a panic and propose ranked patches")
    rp.add_argument("--project", required=True, type=Path, help="Cargo project root")
    rp.add_argument("--trigger", required=True, help="test name (or a full command) that panics")
    rp.add_argument("--backtrace-file", type=Path, help="use a saved backtrace instead of running the trigger")
    rp.add_argument("--lambda", dest="lambda_", type=int, default=2, help="confidence normalization constant (>= 1)")
    rp.add_argument("--top-k", type=int, default=DEFAULT_TOP_K, help="patches to report")
    rp.add_argument("--max-candidates", type=int, default=20, help="suspicious locations to keep")
    rp.add_argument("--budget", type=float, default=DEFAULT_BUDGET, help="seconds per patch")
    rp.add_argument("--jobs", type=int, default=min(4, os.cpu_count() or 1), help="parallel validation workspaces")
    rp.add_argument("--format", choices=("json", "text"), default="json")
    rp.add_argument("--catalog", type=Path, help="fix-pattern catalog (JSON) to use instead of the built-in one")
    rp.add_argument("--loc-only", action="store_true", help="stop after localization")
    rp.add_argument("--include-failed", action="store_true", help="also report Failed patches")
    rp.add_argument("--dump-graph", type=Path, help="write the dependency graph as JSON")
    rp.add_argument("--keep-workspaces", action="store_true", help="leave validation copies on disk")

    cp = sub.add_parser("compare-patches", help="TF-IDF similarity of two unified diffs")
    cp.add_argument("generated", type=Path, help="unified diff to score")
    cp.add_argument("reference", type=Path, help="reference unified diff")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "compare-patches":
            score, similar = compare_patches(args.generated, args.reference)
            print(json.dumps({"score": score, "verdict": "similar" if similar else "not similar"}))
            return 0
        color = sys.stdout.isatty() and "NO_COLOR" not in os.environ
        config = RunConfig(
            project_root=args.project, trigger=args.trigger, backtrace_file=args.backtrace_file,
            lambda_=args.lambda_, top_k=args.top_k, max_candidates=args.max_candidates,
            validation_budget=args.budget, parallel_validations=args.jobs, output_format=args.format,
            catalog_path=args.catalog, loc_only=args.loc_only, include_failed=args.include_failed,
            dump_graph=args.dump_graph, keep_workspaces=args.keep_workspaces, color=color,
        )
        result = run(config)
    except TriggerDoesNotPanic as exc:
        print(exc.diagnostic(), file=sys.stderr)
        return EXIT_TRIGGER_DOES_NOT_PANIC
    except PanicFixError as exc:
        print(exc.diagnostic(), file=sys.stderr)
        return EXIT_ERROR
    except (ValueError, OSError) as exc:
        print(f"panicfix: {exc}", file=sys.stderr)
        return EXIT_ERROR
    sys.stdout.write(result.document if result.document.endswith("\n") else result.document + "\n")
    return result.exit_status


if __name__ == "__main__":
    sys.exit(main())
