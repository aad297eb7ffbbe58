"""Candidate patch generation, application to working copies and diff rendering."""

from __future__ import annotations

import difflib
import hashlib
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .catalog import SLOT, FixPattern, MatchBinding, match_at
from .errors import MissingSlot, OverlappingEdits, SyntacticallyInvalid, UnsynthesizableBinding
from .localization import SuspiciousLocation
from .source_model import Granularity, ProjectModel, descend, parses_cleanly
from .transformers import Edit

log = logging.getLogger(__name__)


@dataclass
class CandidatePatch:
    id: str
    location: SuspiciousLocation
    pattern_name: str
    variant_index: int
    edits: list[Edit]
    diff: str
    interpretation: str
    con: float
    catalog_order: int = 0
    flags: tuple = ()
    sim: Optional[float] = None
    total: Optional[float] = None
    validation: Optional[object] = None
    node_span: tuple[int, int] = (0, 0)

    @property
    def edit_key(self) -> tuple:
        return tuple(sorted(self.edits))

    @property
    def position(self) -> str:
        return f"{self.location.file}:{self.location.line}:{self.location.column}"


def render_interpretation(binding: MatchBinding) -> str:
    """Fill every [slot] of the pattern's template from the binding."""
    def sub(m):
        name = m.group(1)
        if name not in binding.slots:
            raise MissingSlot(f"{binding.pattern.name}: slot [{name}] is not bound")
        return binding.slots[name]
    return SLOT.sub(sub, binding.pattern.interpretation_template)


def synthesize(binding: MatchBinding, variant_index: int) -> list[Edit]:
    variants = binding.variants()
    if not 0 <= variant_index < len(variants):
        raise UnsynthesizableBinding(f"{binding.pattern.name} has no variant {variant_index}")
    return list(variants[variant_index].edits)


def apply_edits(data: bytes, edits: list[Edit]) -> bytes:
    """Splice ``edits`` (all for one file) into ``data``, right to left."""
    ordered = sorted(edits, key=lambda e: (e.span[0], e.span[1]), reverse=True)
    prev_start = None
    for e in ordered:
        s, t = e.span
        if not 0 <= s <= t <= len(data):
            raise OverlappingEdits(f"edit span {e.span} outside file of {len(data)} bytes")
        if prev_start is not None and t > prev_start:
            raise OverlappingEdits(f"edits overlap at {e.span}")
        if prev_start is not None and s == t == prev_start:
            raise OverlappingEdits(f"two insertions at offset {s}")
        data = data[:s] + e.replacement.encode("utf-8") + data[t:]
        prev_start = s
    return data


def edits_by_file(edits: list[Edit]) -> dict[str, list[Edit]]:
    out: dict[str, list[Edit]] = {}
    for e in edits:
        out.setdefault(e.file, []).append(e)
    return out


def patched_sources(model: ProjectModel, edits: list[Edit]) -> dict[str, bytes]:
    return {f: apply_edits(model.unit(f).data, es) for f, es in edits_by_file(edits).items()}


def unified_diff(model: ProjectModel, edits: list[Edit]) -> str:
    chunks = []
    for f, new in sorted(patched_sources(model, edits).items()):
        old = model.unit(f).data.decode("utf-8").splitlines(keepends=True)
        lines = new.decode("utf-8").splitlines(keepends=True)
        for line in difflib.unified_diff(old, lines, f"a/{f}", f"b/{f}", n=3):
            chunks.append(line if line.endswith("\n") else line + "\n\\ No newline at end of file\n")
    return "".join(chunks)


def check_syntax(model: ProjectModel, edits: list[Edit]) -> None:
    for f, data in patched_sources(model, edits).items():
        if not parses_cleanly(data):
            raise SyntacticallyInvalid(f"patched {f} does not parse")


def patch_id(edits: list[Edit]) -> str:
    h = hashlib.sha1()
    for e in sorted(edits):
        h.update(f"{e.file}\0{e.span[0]}\0{e.span[1]}\0{e.replacement}\0".encode())
    return h.hexdigest()[:12]


def _prune_nested_blocks(n):
    return n.raw_type in ("block", "closure_expression", "function_item")


def generate_patches(location: SuspiciousLocation, patterns: list[FixPattern],
                     model: ProjectModel) -> list[CandidatePatch]:
    """Try every pattern at the location's statement and every node beneath it.

    Nested blocks are left to their own statement-level locations. Syntactically
    invalid results are dropped; identical edit sets are emitted once.
    """
    el = location.element
    if el.granularity is Granularity.File or el.file not in model.units or el.node is None:
        return []
    out: list[CandidatePatch] = []
    seen = set()
    for node in descend(el.node, prune=_prune_nested_blocks):
        for pattern in patterns:
            try:
                bindings = match_at(pattern, node)
            except UnsynthesizableBinding:
                continue
            for binding in bindings:
                try:
                    count = len(binding.variants())
                except UnsynthesizableBinding as exc:
                    log.debug("%s at %s: %s", pattern.name, node, exc)
                    continue
                for vi in range(count):
                    b = binding.for_variant(vi)
                    edits = synthesize(b, vi)
                    key = tuple(sorted(edits))
                    if not edits or key in seen:
                        continue
                    try:
                        check_syntax(model, edits)
                    except (SyntacticallyInvalid, OverlappingEdits) as exc:
                        log.debug("dropping %s variant %d: %s", pattern.name, vi, exc)
                        continue
                    seen.add(key)
                    flags = tuple(dict.fromkeys(pattern.review_flags + b.variants()[vi].flags))
                    out.append(CandidatePatch(
                        id=patch_id(edits),
                        location=location,
                        pattern_name=pattern.name,
                        variant_index=vi,
                        edits=list(edits),
                        diff=unified_diff(model, edits),
                        interpretation=render_interpretation(b),
                        con=location.con,
                        catalog_order=pattern.catalog_order,
                        flags=flags,
                        node_span=node.span,
                    ))
    return out


def generate_all(locations: list[SuspiciousLocation], patterns: list[FixPattern],
                 model: ProjectModel) -> list[CandidatePatch]:
    """Patches for every location in rank order; a duplicate keeps its best-ranked location."""
    out, seen = [], set()
    for loc in locations:
        for p in generate_patches(loc, patterns, model):
            if p.edit_key in seen:
                continue
            seen.add(p.edit_key)
            out.append(p)
    return out


def apply_to_workspace(model: ProjectModel, patch: CandidatePatch, workspace) -> dict[str, bytes]:
    """Write the patched files into ``workspace``; returns the original bytes for :func:`revert`."""
    workspace = Path(workspace)
    check_syntax(model, patch.edits)
    new = patched_sources(model, patch.edits)
    originals = {}
    for f, data in new.items():
        target = workspace / f
        originals[f] = target.read_bytes()
        if originals[f] != model.unit(f).data:
            raise OverlappingEdits(f"{target} differs from the parsed project; workspace is not clean")
    for f, data in new.items():
        (workspace / f).write_bytes(data)
    return originals


def revert(workspace, originals: dict[str, bytes]) -> None:
    workspace = Path(workspace)
    for f, data in originals.items():
        (workspace / f).write_bytes(data)
