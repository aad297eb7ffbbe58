"""Code element dependency graph over statements, with seed-distance queries."""

from __future__ import annotations

import enum
import math
import re
from collections import defaultdict, deque
from dataclasses import dataclass
from typing import Iterable, Optional

from .source_model import CodeElement, ProjectModel, SyntaxNode, descend

# Names bound to more in-project functions than this are treated as unresolvable.
MAX_CALLEE_CANDIDATES = 8

_PATTERN_TYPES_SUFFIX = "_pattern"
_SKIP_ROLES = {"type", "macro", "name", "field", "type_arguments", "return_type", "trait"}


class EdgeKind(str, enum.Enum):
    AssignFlow = "AssignFlow"
    ParamFlow = "ParamFlow"
    CallBody = "CallBody"


@dataclass(frozen=True, order=True)
class Edge:
    src: str
    dst: str
    kind: EdgeKind


class DependencyGraph:
    def __init__(self, nodes: dict[str, CodeElement], edges: Iterable[Edge]):
        self.nodes = dict(nodes)
        self.edges = set()
        adj = defaultdict(set)
        for e in edges:
            if e.src not in self.nodes or e.dst not in self.nodes:
                raise ValueError(f"edge endpoint not a node: {e}")
            if e.src == e.dst:
                continue
            self.edges.add(e)
            adj[e.src].add(e.dst)
            adj[e.dst].add(e.src)
        self.adjacency = {n: tuple(sorted(adj.get(n, ()))) for n in self.nodes}

    def __contains__(self, element) -> bool:
        return _eid(element) in self.nodes

    def neighbors(self, node_id: str) -> tuple[str, ...]:
        return self.adjacency.get(node_id, ())

    def to_dict(self):
        nodes = []
        for nid, el in sorted(self.nodes.items()):
            line, col = el.position
            nodes.append({"id": nid, "file": el.file, "line": line, "column": col,
                          "kind": el.node.kind.value if el.node else None})
        return {
            "nodes": nodes,
            "edges": [{"from": e.src, "to": e.dst, "kind": e.kind.value} for e in sorted(self.edges)],
        }


def _eid(element) -> str:
    return element if isinstance(element, str) else element.id


# -- def/use extraction ------------------------------------------------------

def _in_pattern(node: SyntaxNode, stop: SyntaxNode) -> bool:
    n = node
    while n is not None and n is not stop:
        if n.role == "pattern" or n.raw_type.endswith(_PATTERN_TYPES_SUFFIX) or n.raw_type == "parameter":
            return True
        n = n.parent
    return False


def pattern_names(pattern: Optional[SyntaxNode]) -> set[str]:
    names = set()
    if pattern is None:
        return names
    for n in descend(pattern, prune=lambda x: x.raw_type == "scoped_identifier" or x.role == "type"):
        if n.raw_type == "identifier" and n.role != "type" and n.parent.raw_type != "scoped_identifier":
            names.add(n.text)
    return names


def _path_text(node: SyntaxNode) -> Optional[str]:
    """`a.b.c` style place paths; None for anything else."""
    if node.raw_type in ("identifier", "self"):
        return node.text
    if node.raw_type == "field_expression":
        value, fld = node.child("value"), node.child("field")
        if value is None or fld is None:
            return None
        base = _path_text(value)
        return None if base is None else f"{base}.{fld.text}"
    return None


def lvalue_name(node: SyntaxNode) -> Optional[str]:
    """Variable written by an assignment target: `x`, `self.f`, the base of `v[i]`, `*p`."""
    if node is None:
        return None
    if node.raw_type == "index_expression" and node.children:
        return lvalue_name(node.children[0])
    if node.raw_type == "unary_expression" and node.children:
        return lvalue_name(node.children[-1])
    if node.raw_type == "parenthesized_expression" and node.children:
        return lvalue_name(node.children[0])
    return _path_text(node)


def _inner_expression(stmt: SyntaxNode) -> SyntaxNode:
    if stmt.raw_type == "expression_statement" and stmt.children:
        return stmt.children[0]
    return stmt


def statement_defs(stmt: SyntaxNode) -> set[str]:
    if stmt.raw_type == "let_declaration":
        return pattern_names(stmt.child("pattern"))
    e = _inner_expression(stmt)
    if e.raw_type in ("assignment_expression", "compound_assignment_expr"):
        name = lvalue_name(e.child("left"))
        return {name} if name else set()
    if e.raw_type == "for_expression":
        return pattern_names(e.child("pattern"))
    if e.raw_type in ("if_expression", "while_expression"):
        names = set()
        cond = e.child("condition")
        if cond is not None:
            for n in descend(cond, prune=lambda x: x.raw_type == "block"):
                if n.raw_type == "let_condition":
                    names |= pattern_names(n.child("pattern"))
        return names
    return set()


def statement_uses(stmt: SyntaxNode) -> set[str]:
    """Names read anywhere inside ``stmt`` (including nested blocks and macro arguments)."""
    excluded: set[int] = set()
    e = _inner_expression(stmt)
    if e.raw_type == "assignment_expression":
        left = e.child("left")
        target = left
        while target is not None and target.raw_type in ("index_expression", "unary_expression",
                                                          "parenthesized_expression"):
            target = target.children[0] if target.raw_type != "unary_expression" else target.children[-1]
        if target is not None:
            excluded.update(id(n) for n in descend(target))

    names = set()
    for n in descend(stmt, prune=lambda x: x.raw_type in ("function_item", "scoped_identifier")):
        if id(n) in excluded or n.role in _SKIP_ROLES:
            continue
        if n.raw_type in ("identifier", "self", "field_expression"):
            if n.role == "function" or _in_pattern(n, stmt):
                continue
            if n.parent is not None and n.parent.raw_type == "scoped_identifier":
                continue
            path = _path_text(n)
            if path is not None:
                names.add(path)
    return names


# -- function index ----------------------------------------------------------

@dataclass
class FunctionInfo:
    file: str
    node: SyntaxNode
    name: str
    has_self: bool
    params: list[str]
    statements: list[SyntaxNode]  # every statement in the body, pre-order
    top_statements: list[SyntaxNode]


def _function_info(file: str, fn: SyntaxNode) -> Optional[FunctionInfo]:
    name_node, body = fn.child("name"), fn.child("body")
    if name_node is None or body is None:
        return None
    params, has_self = [], False
    plist = fn.child("parameters")
    for p in (plist.children if plist else []):
        if p.raw_type == "self_parameter":
            has_self = True
            params.append("self")
        elif p.raw_type == "parameter":
            names = pattern_names(p.child("pattern"))
            params.append(sorted(names)[0] if len(names) == 1 else ",".join(sorted(names)))
    stmts = [n for n in descend(body, prune=lambda x: x.raw_type == "function_item")
             if n.is_statement and n is not body]
    top = [c for c in body.children if c.is_statement]
    return FunctionInfo(file, fn, name_node.text, has_self, params, stmts, top)


def _callee_name(call: SyntaxNode) -> Optional[str]:
    if call.callee is None:
        return None
    name = re.sub(r"::<.*>$", "", call.callee)
    return name.rsplit("::", 1)[-1].strip()


def _arguments(call: SyntaxNode) -> list[SyntaxNode]:
    args = call.child("arguments")
    return [a for a in (args.children if args else []) if a.raw_type not in ("line_comment", "block_comment")]


# -- construction --------------------------------------------------------------

def build_graph(model: ProjectModel) -> DependencyGraph:
    statements = model.statements()
    nodes = {el.id: el for el in statements}
    by_node = {id(el.node): el for el in statements}
    edges: set[Edge] = set()

    functions: list[FunctionInfo] = []
    for file, fn in model.functions():
        info = _function_info(file, fn)
        if info is not None:
            functions.append(info)
    by_name: dict[str, list[FunctionInfo]] = defaultdict(list)
    for info in functions:
        by_name[info.name].append(info)

    uses_cache: dict[int, set[str]] = {}

    def uses(n: SyntaxNode) -> set[str]:
        if id(n) not in uses_cache:
            uses_cache[id(n)] = statement_uses(n)
        return uses_cache[id(n)]

    # intra-procedural def -> use
    for info in functions:
        ordered = sorted(info.statements, key=lambda n: n.start)
        defs = [(s, statement_defs(s)) for s in ordered]
        for t in ordered:
            used = uses(t)
            if not used:
                continue
            for s, d in defs:
                if s.start >= t.start:
                    break
                if s is t or not (d & used):
                    continue
                if s.parent.contains(t) or s.contains(t):
                    edges.add(Edge(by_node[id(s)].id, by_node[id(t)].id, EdgeKind.AssignFlow))

    # inter-procedural, one call level
    for info in functions:
        for s in info.statements:
            src = by_node[id(s)].id
            calls = [n for n in descend(s, prune=lambda x: x.raw_type == "block")
                     if n.raw_type == "call_expression"]
            for call in calls:
                name = _callee_name(call)
                if not name:
                    continue
                method = call.kind.value == "MethodCall"
                targets = [f for f in by_name.get(name, ()) if f.has_self or not method]
                if not targets or len(targets) > MAX_CALLEE_CANDIDATES:
                    continue
                nargs = len(_arguments(call))
                for target in targets:
                    if method:
                        fed = ["self"] + target.params[1:1 + nargs]
                    else:
                        fed = target.params[:nargs]
                    fed_names = set()
                    for p in fed:
                        fed_names.update(p.split(","))
                    for t in target.statements:
                        if uses(t) & fed_names:
                            edges.add(Edge(src, by_node[id(t)].id, EdgeKind.ParamFlow))
                    for t in target.top_statements:
                        edges.add(Edge(src, by_node[id(t)].id, EdgeKind.CallBody))

    return DependencyGraph(nodes, edges)


# -- queries -------------------------------------------------------------------

def seed_distances(graph: DependencyGraph, seeds) -> dict[str, tuple[int, str]]:
    """Multi-source BFS over undirected edges: node id -> (hops, nearest seed id).

    Seeds are expanded in the order given, so ties go to the earlier seed.
    """
    out: dict[str, tuple[int, str]] = {}
    queue = deque()
    for s in seeds:
        sid = _eid(s)
        if sid in out:
            continue
        out[sid] = (0, sid)
        if sid in graph.nodes:
            queue.append(sid)
    while queue:
        cur = queue.popleft()
        d, origin = out[cur]
        for nb in graph.neighbors(cur):
            if nb not in out:
                out[nb] = (d + 1, origin)
                queue.append(nb)
    return out


def distance_to_seeds(graph: DependencyGraph, element, seeds) -> float:
    eid = _eid(element)
    seed_ids = [_eid(s) for s in seeds]
    if eid in seed_ids:
        return 0
    if eid not in graph.nodes:
        return math.inf
    hit = seed_distances(graph, seed_ids).get(eid)
    return math.inf if hit is None else hit[0]


def candidate_elements(graph: DependencyGraph, seeds, radius: int) -> set[CodeElement]:
    if radius < 0:
        raise ValueError("radius must be >= 0")
    dist = seed_distances(graph, seeds)
    return {graph.nodes[nid] for nid, (d, _) in dist.items() if d <= radius and nid in graph.nodes}
