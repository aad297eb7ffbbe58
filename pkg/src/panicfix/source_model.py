"""Syntax model of a Rust project: parsed units, byte/line mapping, element lookup.

Parsing is delegated to tree-sitter; the rest of the toolkit only sees the
small :class:`SyntaxNode` tree built here, whose spans are exact byte offsets
into the original file.
"""

from __future__ import annotations

import bisect
import enum
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator, Optional

import tree_sitter
import tree_sitter_rust

from .errors import EmptyProject, UnknownFile

log = logging.getLogger(__name__)

RUST_LANGUAGE = tree_sitter.Language(tree_sitter_rust.language())
DEFAULT_SOURCE_DIRS = ("src",)


class Kind(str, enum.Enum):
    MethodCall = "MethodCall"
    FunctionCall = "FunctionCall"
    BinaryExpr = "BinaryExpr"
    IndexExpr = "IndexExpr"
    MatchExpr = "MatchExpr"
    IfExpr = "IfExpr"
    LetStmt = "LetStmt"
    Assignment = "Assignment"
    Block = "Block"
    Literal = "Literal"
    Path = "Path"
    RangeExpr = "RangeExpr"
    StructFieldInit = "StructFieldInit"
    Other = "Other"


class Granularity(str, enum.Enum):
    File = "File"
    Statement = "Statement"
    Expression = "Expression"


_LITERALS = {
    "integer_literal", "float_literal", "string_literal", "raw_string_literal",
    "char_literal", "boolean_literal",
}
_PATHS = {"identifier", "self", "scoped_identifier", "field_expression"}
_DIRECT_KINDS = {
    "binary_expression": Kind.BinaryExpr,
    "index_expression": Kind.IndexExpr,
    "match_expression": Kind.MatchExpr,
    "if_expression": Kind.IfExpr,
    "let_declaration": Kind.LetStmt,
    "assignment_expression": Kind.Assignment,
    "compound_assignment_expr": Kind.Assignment,
    "block": Kind.Block,
    "range_expression": Kind.RangeExpr,
    "field_initializer": Kind.StructFieldInit,
    "shorthand_field_initializer": Kind.StructFieldInit,
}
_NON_EXPRESSION_SUFFIX_TYPES = {"let_condition"}
_EXTRA_EXPRESSIONS = _LITERALS | {
    "identifier", "self", "scoped_identifier", "macro_invocation", "unsafe_block",
    "async_block", "const_block", "generic_function", "compound_assignment_expr",
}
ITEM_TYPES = {
    "function_item", "struct_item", "enum_item", "impl_item", "trait_item", "mod_item",
    "use_declaration", "const_item", "static_item", "type_item", "macro_definition",
    "union_item", "extern_crate_declaration", "foreign_mod_item", "attribute_item",
    "inner_attribute_item", "function_signature_item", "associated_type",
}
COMMENT_TYPES = {"line_comment", "block_comment"}
LEAF_KINDS = {Kind.Path, Kind.Literal}


@dataclass(eq=False)
class SyntaxNode:
    kind: Kind
    span: tuple[int, int]
    children: list["SyntaxNode"] = field(default_factory=list)
    operator: Optional[str] = None
    callee: Optional[str] = None
    raw_type: str = ""
    role: Optional[str] = None  # grammar field name under the parent
    parent: Optional["SyntaxNode"] = field(default=None, repr=False)
    unit: Optional["SourceUnit"] = field(default=None, repr=False)

    @property
    def start(self) -> int:
        return self.span[0]

    @property
    def end(self) -> int:
        return self.span[1]

    @property
    def text(self) -> str:
        return self.unit.data[self.start:self.end].decode("utf-8")

    def child(self, role: str) -> Optional["SyntaxNode"]:
        for c in self.children:
            if c.role == role:
                return c
        return None

    def contains(self, other: "SyntaxNode") -> bool:
        return self.start <= other.start and other.end <= self.end

    @property
    def is_expression(self) -> bool:
        t = self.raw_type
        if t in _NON_EXPRESSION_SUFFIX_TYPES or self.role in ("pattern", "type", "macro"):
            return False
        return t.endswith("_expression") or t in _EXTRA_EXPRESSIONS or t == "block"

    @property
    def is_statement(self) -> bool:
        """True for direct children of a block that are not items or comments."""
        p = self.parent
        return (
            p is not None
            and p.raw_type == "block"
            and self.raw_type not in ITEM_TYPES
            and self.raw_type not in COMMENT_TYPES
            and self.raw_type != "empty_statement"
        )

    def ancestors(self) -> Iterator["SyntaxNode"]:
        n = self.parent
        while n is not None:
            yield n
            n = n.parent

    def __repr__(self):
        return f"SyntaxNode({self.kind.value}, {self.raw_type}, {self.span})"


def descend(node: SyntaxNode, prune: Optional[Callable[[SyntaxNode], bool]] = None) -> Iterator[SyntaxNode]:
    """Yield ``node`` and its descendants in pre-order.

    ``prune`` stops descent below (but not at) any non-root node for which it
    returns True.
    """
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        if prune is not None and n is not node and prune(n):
            continue
        stack.extend(reversed(n.children))


class LineIndex:
    """Byte offset <-> (line, column), both 1-based; columns count characters."""

    def __init__(self, data: bytes):
        self.data = data
        self.line_starts = [0]
        for i, b in enumerate(data):
            if b == 0x0A:
                self.line_starts.append(i + 1)

    @property
    def line_count(self) -> int:
        return len(self.line_starts)

    def line_bounds(self, line: int) -> tuple[int, int]:
        start = self.line_starts[line - 1]
        end = self.line_starts[line] - 1 if line < len(self.line_starts) else len(self.data)
        return start, end

    def position_of(self, offset: int) -> tuple[int, int]:
        if not 0 <= offset <= len(self.data):
            raise ValueError(f"offset {offset} outside file")
        line = bisect.bisect_right(self.line_starts, offset)
        start = self.line_starts[line - 1]
        col = len(self.data[start:offset].decode("utf-8", errors="replace")) + 1
        return line, col

    def offset_of(self, line: int, column: int) -> int:
        if not 1 <= line <= len(self.line_starts):
            raise ValueError(f"line {line} outside file")
        start, end = self.line_bounds(line)
        text = self.data[start:end].decode("utf-8", errors="replace")
        if not 1 <= column <= len(text) + 1:
            raise ValueError(f"column {column} outside line {line}")
        return start + len(text[: column - 1].encode("utf-8"))


@dataclass(eq=False)
class SourceUnit:
    file: str  # project-relative posix path
    data: bytes
    tree: Optional[SyntaxNode]
    line_index: LineIndex
    parse_error: bool = False

    @property
    def text(self) -> str:
        return self.data.decode("utf-8")

    def render(self, node: Optional[SyntaxNode] = None) -> bytes:
        """Rebuild the bytes of ``node`` (default: whole file) from its children and the gaps."""
        node = node or self.tree
        out = []
        pos = node.start
        for c in node.children:
            out.append(self.data[pos:c.start])
            out.append(self.render(c))
            pos = c.end
        out.append(self.data[pos:node.end])
        return b"".join(out)

    def position(self, node: SyntaxNode) -> tuple[int, int]:
        return self.line_index.position_of(node.start)


@dataclass(frozen=True, eq=False)
class CodeElement:
    id: str
    file: str
    node: Optional[SyntaxNode]
    granularity: Granularity
    unit: Optional[SourceUnit] = field(default=None, repr=False, compare=False)

    def __eq__(self, other):
        return isinstance(other, CodeElement) and self.id == other.id

    def __hash__(self):
        return hash(self.id)

    @property
    def position(self) -> tuple[int, int]:
        if self.node is None or self.unit is None:
            return (1, 1)
        return self.unit.position(self.node)


def _new_parser() -> tree_sitter.Parser:
    return tree_sitter.Parser(RUST_LANGUAGE)


def _kind_for(ts_node) -> tuple[Kind, Optional[str], Optional[str]]:
    t = ts_node.type
    if t == "call_expression":
        fn = ts_node.child_by_field_name("function")
        target = fn
        if fn is not None and fn.type == "generic_function":
            target = fn.child_by_field_name("function")
        if target is not None and target.type == "field_expression":
            name = target.child_by_field_name("field")
            return Kind.MethodCall, None, name.text.decode() if name is not None else None
        return Kind.FunctionCall, None, fn.text.decode() if fn is not None else None
    if t in ("binary_expression", "compound_assignment_expr"):
        op = ts_node.child_by_field_name("operator")
        return _DIRECT_KINDS[t], op.text.decode() if op is not None else None, None
    if t == "assignment_expression":
        return Kind.Assignment, "=", None
    if t in _DIRECT_KINDS:
        return _DIRECT_KINDS[t], None, None
    if t in _LITERALS:
        return Kind.Literal, None, None
    if t in _PATHS:
        return Kind.Path, None, None
    return Kind.Other, None, None


def _convert(ts_root, unit: SourceUnit) -> SyntaxNode:
    def build(ts_node, role, parent):
        kind, op, callee = _kind_for(ts_node)
        node = SyntaxNode(kind, (ts_node.start_byte, ts_node.end_byte), [], op, callee,
                          ts_node.type, role, parent, unit)
        # Macro arguments stay token trees: no expression nodes exist inside them.
        for i, c in enumerate(ts_node.children):
            if c.is_named:
                node.children.append(build(c, ts_node.field_name_for_child(i), node))
        return node

    root = build(ts_root, None, None)
    root.span = (0, len(unit.data))
    return root


def parse_source(file: str, data: bytes, parser=None) -> SourceUnit:
    parser = parser or _new_parser()
    tree = parser.parse(data)
    unit = SourceUnit(file, data, None, LineIndex(data), parse_error=tree.root_node.has_error)
    unit.tree = _convert(tree.root_node, unit)
    return unit


def parses_cleanly(data: bytes) -> bool:
    return not _new_parser().parse(data).root_node.has_error


class ProjectModel:
    """All parsed source files of one project plus element bookkeeping."""

    def __init__(self, root: Path, units: dict[str, SourceUnit], unparsed: dict[str, SourceUnit],
                 source_dirs=DEFAULT_SOURCE_DIRS):
        self.root = Path(root)
        self.units = units
        self.unparsed = unparsed
        self.source_dirs = tuple(source_dirs)
        self._elements: dict[str, CodeElement] = {}

    @property
    def files(self) -> list[str]:
        return sorted(set(self.units) | set(self.unparsed))

    def unit(self, file: str) -> SourceUnit:
        if file in self.units:
            return self.units[file]
        if file in self.unparsed:
            return self.unparsed[file]
        raise UnknownFile(file)

    def element(self, unit: SourceUnit, node: Optional[SyntaxNode], granularity: Granularity) -> CodeElement:
        if node is None or granularity is Granularity.File:
            eid = f"{unit.file}"
            node = unit.tree
            granularity = Granularity.File
        else:
            eid = f"{unit.file}:{node.start}-{node.end}:{node.raw_type}"
        el = self._elements.get(eid)
        if el is None:
            el = CodeElement(eid, unit.file, node, granularity, unit)
            self._elements[eid] = el
        return el

    def file_element(self, file: str) -> CodeElement:
        return self.element(self.unit(file), None, Granularity.File)

    def statement_element(self, element: CodeElement) -> CodeElement:
        """Lift an element to its enclosing statement (or the file when there is none)."""
        if element.granularity is Granularity.File:
            return element
        node = element.node
        while node is not None and not node.is_statement:
            node = node.parent
        if node is None:
            return self.file_element(element.file)
        return self.element(element.unit, node, Granularity.Statement)

    def statements(self, file: Optional[str] = None) -> list[CodeElement]:
        files = [file] if file else sorted(self.units)
        out = []
        for f in files:
            unit = self.units[f]
            for n in descend(unit.tree):
                if n.is_statement:
                    out.append(self.element(unit, n, Granularity.Statement))
        return out

    def functions(self) -> list[tuple[str, SyntaxNode]]:
        out = []
        for f in sorted(self.units):
            for n in descend(self.units[f].tree):
                if n.raw_type == "function_item":
                    out.append((f, n))
        return out


def load_project(root, source_dirs=DEFAULT_SOURCE_DIRS, jobs: int = 4) -> ProjectModel:
    root = Path(root)
    paths = []
    for d in source_dirs:
        base = root / d
        if base.is_dir():
            paths.extend(sorted(p for p in base.rglob("*.rs") if p.is_file()))
    if not paths:
        raise EmptyProject(f"no .rs files under {', '.join(str(root / d) for d in source_dirs)}")

    def parse(p: Path) -> SourceUnit:
        rel = p.relative_to(root).as_posix()
        return parse_source(rel, p.read_bytes())

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        parsed = list(pool.map(parse, paths))
    units, unparsed = {}, {}
    for u in parsed:
        if u.parse_error:
            log.warning("%s has syntax errors; excluded from matching", u.file)
            unparsed[u.file] = u
        else:
            units[u.file] = u
    return ProjectModel(root, units, unparsed, source_dirs)


def locate_element(model: ProjectModel, file: str, line: int, column: int) -> CodeElement:
    """Resolve a source position to the most specific useful code element.

    Preference order: the innermost non-leaf expression (identifiers and
    literals are passed over in favour of the call, index or operator that
    contains them), then the innermost statement or block, then the file.
    """
    unit = model.unit(file)
    if file not in model.units:
        return model.file_element(file)
    try:
        offset = unit.line_index.offset_of(line, column)
    except ValueError:
        return model.file_element(file)

    chain = []
    node = unit.tree
    while True:
        chain.append(node)
        nxt = None
        for c in node.children:
            if c.start <= offset < c.end:
                nxt = c
                break
        if nxt is None:
            break
        node = nxt

    for n in reversed(chain):
        if n.is_expression and n.kind not in LEAF_KINDS and n.raw_type != "block":
            return model.element(unit, n, Granularity.Expression)
    for n in reversed(chain):
        if n.is_statement or n.raw_type == "block":
            return model.element(unit, n, Granularity.Statement)
    return model.file_element(file)
