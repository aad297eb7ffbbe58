"""Suspicious-location scoring from backtrace frames and graph proximity."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .dep_graph import DependencyGraph, seed_distances
from .errors import InvalidDepth, InvalidLambda, NoProjectLocation
from .panic_report import BacktraceFrame, PanicReport, project_frames
from .source_model import CodeElement, ProjectModel, locate_element

DEFAULT_LAMBDA = 2


@dataclass(frozen=True)
class LocalizationConfig:
    lambda_: int = DEFAULT_LAMBDA
    max_candidates: int = 20

    def __post_init__(self):
        if not isinstance(self.lambda_, int) or self.lambda_ < 1:
            raise InvalidLambda(f"lambda must be an integer >= 1, got {self.lambda_!r}")
        if self.max_candidates < 1:
            raise ValueError("max_candidates must be positive")


@dataclass
class SuspiciousLocation:
    element: CodeElement
    dist: float
    con: float
    file_frequency: int
    depth: int
    suspicion: float
    rank: int = 0
    focus: CodeElement = field(default=None, repr=False)

    @property
    def file(self) -> str:
        return self.element.file

    @property
    def line(self) -> int:
        return self.element.position[0]

    @property
    def column(self) -> int:
        return self.element.position[1]

    def sort_key(self):
        return (-self.suspicion, self.dist, self.depth, self.file, self.line, self.column)

    def to_dict(self):
        return {
            "rank": self.rank,
            "file": self.file,
            "line": self.line,
            "column": self.column,
            "element": self.element.id,
            "granularity": self.element.granularity.value,
            "dist": None if math.isinf(self.dist) else self.dist,
            "con": self.con,
            "file_frequency": self.file_frequency,
            "depth": self.depth,
            "suspicion": self.suspicion,
        }


def confidence(dist, lambda_: int) -> float:
    """Graph-proximity confidence in [0, 1]; unreachable saturates at 0."""
    if not isinstance(lambda_, int) or lambda_ < 1:
        raise InvalidLambda(f"lambda must be an integer >= 1, got {lambda_!r}")
    if dist < 0:
        raise ValueError("distance must be non-negative")
    return 1.0 - min(dist, lambda_) / lambda_


def suspicion(file_frequency: int, depth: int, con: float) -> float:
    if depth < 1:
        raise InvalidDepth(f"depth must be >= 1, got {depth}")
    return file_frequency * (1.0 / depth + con)


def frame_statistics(report: PanicReport, frames: list[BacktraceFrame]) -> dict[str, tuple[int, int]]:
    """file -> (occurrences among project frames, 1-based depth of first occurrence)."""
    stats: dict[str, tuple[int, int]] = {}
    for pos, frame in enumerate(frames, start=1):
        rel = report.relative(frame.file)
        if rel is None:
            continue
        n, d = stats.get(rel, (0, pos))
        stats[rel] = (n + 1, d)
    return stats


def seed_elements(report: PanicReport, model: ProjectModel) -> list[tuple[CodeElement, CodeElement]]:
    """(statement-level seed, located element) pairs, panic site first, deduplicated."""
    locs = []
    if report.site_in_project():
        s = report.panic_site
        locs.append((report.relative(s.file), s.line, s.column))
    for f in project_frames(report):
        locs.append((report.relative(f.file), f.line, f.column))
    seeds, seen = [], set()
    for rel, line, col in locs:
        if rel is None or rel not in model.units:
            continue
        located = locate_element(model, rel, line, col)
        stmt = model.statement_element(located)
        if stmt.id in seen:
            continue
        seen.add(stmt.id)
        seeds.append((stmt, located))
    return seeds


def rank_locations(report: PanicReport, model: ProjectModel, graph: DependencyGraph,
                   config: LocalizationConfig = LocalizationConfig()) -> list[SuspiciousLocation]:
    frames = project_frames(report)
    seeds = seed_elements(report, model)
    if not seeds:
        raise NoProjectLocation("no backtrace location resolves to a parsed project source file")

    stats = frame_statistics(report, frames)
    if report.site_in_project():
        stats.setdefault(report.relative(report.panic_site.file), (1, 1))

    seed_ids = [s.id for s, _ in seeds]
    focus = {s.id: located for s, located in seeds}
    reach = seed_distances(graph, seed_ids)
    elements = {s.id: s for s, _ in seeds}
    for nid, (d, _) in reach.items():
        if d <= config.lambda_ and nid in graph.nodes:
            elements.setdefault(nid, graph.nodes[nid])

    out = []
    for eid, el in elements.items():
        dist, origin = reach.get(eid, (math.inf, eid))
        con = confidence(dist, config.lambda_)
        n, d = stats.get(el.file) or stats.get(elements[origin].file, (0, 1))
        out.append(SuspiciousLocation(el, dist, con, n, d, suspicion(n, d, con), focus=focus.get(eid, el)))

    out.sort(key=SuspiciousLocation.sort_key)
    out = out[: config.max_candidates]
    for i, loc in enumerate(out, start=1):
        loc.rank = i
    return out


def order_locations(locations: list[SuspiciousLocation]) -> list[SuspiciousLocation]:
    """Sort by the ranking rule and assign ranks 1..k in place."""
    ordered = sorted(locations, key=SuspiciousLocation.sort_key)
    for i, loc in enumerate(ordered, start=1):
        loc.rank = i
    return ordered
