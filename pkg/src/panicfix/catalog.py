"""Declarative fix-pattern catalog: loading, cause filtering and matching."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Callable, Optional, Union

import jsonschema

from .errors import CatalogSchemaError, UnsynthesizableBinding
from .panic_report import RootCauseKind
from .source_model import Kind, SyntaxNode, descend
from .transformers import TRANSFORMERS, Variant, is_poll_site

ALL_CAUSES = frozenset(RootCauseKind)
SLOT = re.compile(r"\[([^\[\]]+)\]")

# Patterns carrying this flag are only tried when the root cause is one of theirs.
CAUSE_RESTRICTED = "cause-restricted"

CATALOG_SCHEMA = {
    "type": "object",
    "required": ["patterns"],
    "properties": {
        "catalog_version": {"type": "integer"},
        "patterns": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "applicable_causes", "matcher", "transformer_id",
                             "interpretation_template", "catalog_order"],
                "additionalProperties": False,
                "properties": {
                    "name": {"type": "string", "minLength": 1},
                    "applicable_causes": {
                        "type": "array", "minItems": 1,
                        "items": {"enum": [c.value for c in RootCauseKind]},
                    },
                    "matcher": {
                        "type": "object",
                        "required": ["kind"],
                        "properties": {
                            "kind": {
                                "anyOf": [
                                    {"enum": [k.value for k in Kind]},
                                    {"type": "array", "minItems": 1, "items": {"enum": [k.value for k in Kind]}},
                                ]
                            }
                        },
                    },
                    "transformer_id": {"type": "string"},
                    "interpretation_template": {"type": "string", "minLength": 1},
                    "catalog_order": {"type": "integer", "minimum": 1},
                    "flags": {"type": "array", "items": {"type": "string"}},
                },
            },
        },
    },
}


# -- matcher constraints ----------------------------------------------------------
# Each constraint only applies to the node kinds it is meaningful for; other
# kinds pass it unchanged so one matcher can span several kinds.

def _callee_in(node: SyntaxNode, names) -> bool:
    if node.kind not in (Kind.MethodCall, Kind.FunctionCall):
        return True
    return node.callee in names


def _operator_in(node: SyntaxNode, ops) -> bool:
    return node.operator in ops


def _index_is_range(node: SyntaxNode, want: bool) -> bool:
    if node.kind is not Kind.IndexExpr:
        return True
    idx = [c for c in node.children if c.raw_type not in ("line_comment", "block_comment")]
    return len(idx) == 2 and (idx[1].raw_type == "range_expression") == want


def _condition_is_let(node: SyntaxNode, want: bool) -> bool:
    cond = node.child("condition")
    is_let = cond is not None and any(n.raw_type == "let_condition" for n in descend(cond))
    return is_let == want


def _in_assignment_target(node: SyntaxNode, want: bool) -> bool:
    inside = False
    child = node
    for a in node.ancestors():
        if a.raw_type in ("assignment_expression", "compound_assignment_expr"):
            inside = a.child("left") is child or (a.child("left") is not None and a.child("left").contains(node))
            break
        if a.is_statement:
            break
        child = a
    return inside == want


def _polls_future(node: SyntaxNode, want: bool) -> bool:
    return is_poll_site(node) == want


CONSTRAINTS: dict[str, Callable[[SyntaxNode, object], bool]] = {
    "callee_in": _callee_in,
    "operator_in": _operator_in,
    "index_is_range": _index_is_range,
    "condition_is_let": _condition_is_let,
    "in_assignment_target": _in_assignment_target,
    "polls_future": _polls_future,
}


@dataclass(frozen=True)
class Matcher:
    kinds: frozenset
    constraints: tuple = ()

    @classmethod
    def from_dict(cls, doc: dict, entry: str) -> "Matcher":
        kind = doc["kind"]
        kinds = frozenset(Kind(k) for k in ([kind] if isinstance(kind, str) else kind))
        cons = []
        for key, value in doc.items():
            if key == "kind":
                continue
            if key not in CONSTRAINTS:
                raise CatalogSchemaError(f"unknown matcher constraint {key!r}", entry)
            cons.append((key, tuple(value) if isinstance(value, list) else value))
        return cls(kinds, tuple(cons))

    def accepts(self, node: SyntaxNode) -> bool:
        if node.kind not in self.kinds:
            return False
        return all(CONSTRAINTS[k](node, v) for k, v in self.constraints)


@dataclass(frozen=True)
class FixPattern:
    name: str
    applicable_causes: frozenset
    matcher: Matcher
    transformer_id: str
    interpretation_template: str
    catalog_order: int
    flags: tuple = ()

    @property
    def slots(self) -> list[str]:
        return SLOT.findall(self.interpretation_template)

    @property
    def cause_agnostic(self) -> bool:
        return self.applicable_causes >= ALL_CAUSES

    @property
    def transformer(self):
        return TRANSFORMERS[self.transformer_id]

    @property
    def review_flags(self) -> tuple:
        """Flags surfaced to users (internal scheduling flags excluded)."""
        return tuple(f for f in self.flags if f != CAUSE_RESTRICTED)


@dataclass
class MatchBinding:
    pattern: FixPattern
    node: SyntaxNode
    slots: dict[str, str]
    context: dict = field(default_factory=dict, repr=False)
    variant_index: Optional[int] = None
    _variants: Optional[list] = field(default=None, repr=False)

    def variants(self) -> list[Variant]:
        """Concrete edit alternatives; raises UnsynthesizableBinding when context is missing."""
        if self._variants is None:
            self._variants = self.pattern.transformer.variants(self.node, self.context)
        return self._variants

    def for_variant(self, index: int) -> "MatchBinding":
        v = self.variants()[index]
        return replace(self, slots={**self.slots, **v.slots}, variant_index=index, _variants=self._variants)


def _entry_name(entry, i):
    return entry.get("name", f"#{i}") if isinstance(entry, dict) else f"#{i}"


def _build(entry: dict, i: int) -> FixPattern:
    name = entry["name"]
    if entry["transformer_id"] not in TRANSFORMERS:
        raise CatalogSchemaError(f"unknown transformer_id {entry['transformer_id']!r}", name)
    pattern = FixPattern(
        name=name,
        applicable_causes=frozenset(RootCauseKind(c) for c in entry["applicable_causes"]),
        matcher=Matcher.from_dict(entry["matcher"], name),
        transformer_id=entry["transformer_id"],
        interpretation_template=entry["interpretation_template"],
        catalog_order=entry["catalog_order"],
        flags=tuple(entry.get("flags", ())),
    )
    missing = set(pattern.slots) - pattern.transformer.provides
    if missing:
        raise CatalogSchemaError(f"template slots not bound by the transformer: {sorted(missing)}", name)
    return pattern


def default_catalog_document() -> dict:
    return json.loads(resources.files("panicfix").joinpath("data/catalog.json").read_text("utf-8"))


def load_catalog(source: Union[None, str, Path, dict] = None) -> list[FixPattern]:
    """Load and validate a catalog; ``None`` selects the built-in one."""
    if source is None:
        doc = default_catalog_document()
    elif isinstance(source, dict):
        doc = source
    else:
        try:
            doc = json.loads(Path(source).read_text("utf-8"))
        except json.JSONDecodeError as exc:
            raise CatalogSchemaError(f"not valid JSON: {exc}") from exc

    validator = jsonschema.Draft7Validator(CATALOG_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.path))
    if errors:
        err = errors[0]
        path = list(err.path)
        entry = None
        if len(path) >= 2 and path[0] == "patterns":
            entry = _entry_name(doc["patterns"][path[1]], path[1])
        raise CatalogSchemaError(err.message, entry)

    patterns, names, orders = [], set(), set()
    for i, entry in enumerate(doc["patterns"]):
        if entry["name"] in names:
            raise CatalogSchemaError("duplicate pattern name", entry["name"])
        if entry["catalog_order"] in orders:
            raise CatalogSchemaError("duplicate catalog_order", entry["name"])
        names.add(entry["name"])
        orders.add(entry["catalog_order"])
        patterns.append(_build(entry, i))
    return sorted(patterns, key=lambda p: p.catalog_order)


def applicable_patterns(catalog: list[FixPattern], cause) -> list[FixPattern]:
    """Cause-specific patterns first, then the cause-agnostic ones, each in catalog order."""
    kind = getattr(cause, "kind", cause)
    kind = RootCauseKind(kind)
    specific = [p for p in catalog if kind in p.applicable_causes and not p.cause_agnostic]
    agnostic = [p for p in catalog if p.cause_agnostic]
    return specific + agnostic


def generation_order(catalog: list[FixPattern], cause) -> list[FixPattern]:
    """Every pattern that may be tried for ``cause``: applicable ones first, then the rest.

    Patterns flagged cause-restricted are dropped unless they apply.
    """
    first = applicable_patterns(catalog, cause)
    taken = {p.name for p in first}
    rest = [p for p in catalog if p.name not in taken and CAUSE_RESTRICTED not in p.flags]
    return first + rest


def match_at(pattern: FixPattern, node: SyntaxNode) -> list[MatchBinding]:
    """Bindings rooted exactly at ``node``."""
    if not pattern.matcher.accepts(node):
        return []
    out = []
    for slots, ctx in pattern.transformer.bind(node):
        b = MatchBinding(pattern, node, slots, ctx)
        try:
            if b.variants():
                b = b.for_variant(0)
        except UnsynthesizableBinding:
            pass
        out.append(b)
    return out


def match_pattern(pattern: FixPattern, node: SyntaxNode) -> list[MatchBinding]:
    """All bindings at ``node`` or below it, in source-span order."""
    out = []
    for n in descend(node):
        try:
            out.extend(match_at(pattern, n))
        except UnsynthesizableBinding:
            continue
    out.sort(key=lambda b: (b.node.start, -b.node.end))
    return out
