import itertools
import math
import re

import pytest
from hypothesis import given, settings, strategies as st

from panicfix.dep_graph import (DependencyGraph, Edge, EdgeKind, build_graph, candidate_elements,
                                distance_to_seeds, seed_distances)
from panicfix.source_model import CodeElement, Granularity, load_project


def _model(tmp_path, source):
    (tmp_path / "src").mkdir()
    (tmp_path / "src/lib.rs").write_text(source)
    return load_project(tmp_path)


def _edges(graph, kind):
    return {(graph.nodes[e.src].node.text, graph.nodes[e.dst].node.text) for e in graph.edges if e.kind is kind}


FIVE_STATEMENTS = """fn f(b: i32) -> i32 {
    let a = b + 1;
    let c = a;
    let d = c * a;
    let e = b - 2;
    e + d
}
"""


def _def_use_oracle(source):
    """Edges s -> t for straight-line `let` code: t (later) reads a name s binds."""
    body = [l.strip() for l in source.splitlines()[1:-1]]
    defs, uses = [], []
    for stmt in body:
        m = re.match(r"let (\w+) = (.*);$", stmt)
        defs.append({m.group(1)} if m else set())
        rhs = m.group(2) if m else stmt
        uses.append(set(re.findall(r"[A-Za-z_]\w*", rhs)))
    return {(body[i], body[j]) for i, j in itertools.combinations(range(len(body)), 2) if defs[i] & uses[j]}


def test_assign_flow_matches_def_use_oracle(tmp_path):
    graph = build_graph(_model(tmp_path, FIVE_STATEMENTS))
    expected = _def_use_oracle(FIVE_STATEMENTS)
    assert ("let a = b + 1;", "let c = a;") in expected
    assert _edges(graph, EdgeKind.AssignFlow) == expected
    assert len(graph.nodes) == 5


PARAM_FLOW = """fn g(x: i32) -> i32 {
    let unused = 3;
    let y = x * 2;
    y + unused
}
fn caller(v: i32) -> i32 {
    let r = g(v);
    let m = std::cmp::max(v, 1);
    let k = v.abs();
    r + m + k
}
"""


def test_param_flow_to_parameter_reading_statement(tmp_path):
    graph = build_graph(_model(tmp_path, PARAM_FLOW))
    assert _edges(graph, EdgeKind.ParamFlow) == {("let r = g(v);", "let y = x * 2;")}
    body = _edges(graph, EdgeKind.CallBody)
    assert ("let r = g(v);", "let unused = 3;") in body


def test_external_calls_add_no_interprocedural_edges(tmp_path):
    graph = build_graph(_model(tmp_path, PARAM_FLOW))
    inter = _edges(graph, EdgeKind.ParamFlow) | _edges(graph, EdgeKind.CallBody)
    sources = {s for s, _ in inter}
    assert "let m = std::cmp::max(v, 1);" not in sources
    assert "let k = v.abs();" not in sources


def _synthetic(n, pairs):
    nodes = {str(i): CodeElement(str(i), "f.rs", None, Granularity.Statement) for i in range(n)}
    return DependencyGraph(nodes, [Edge(str(a), str(b), EdgeKind.AssignFlow) for a, b in pairs])


def test_distance_examples():
    chain = _synthetic(3, [(0, 1), (1, 2)])
    assert distance_to_seeds(chain, "0", {"0"}) == 0
    assert distance_to_seeds(chain, "2", {"0"}) == 2
    island = _synthetic(3, [(0, 1)])
    assert distance_to_seeds(island, "2", {"0"}) == math.inf
    assert distance_to_seeds(island, "not-a-node", {"0"}) == math.inf


def test_candidate_elements_examples():
    chain = _synthetic(3, [(0, 1), (1, 2)])
    ids = lambda els: {e.id for e in els}
    assert ids(candidate_elements(chain, {"0"}, 0)) == {"0"}
    assert ids(candidate_elements(chain, {"0"}, 2)) == {"0", "1", "2"}
    island = _synthetic(4, [(2, 3)])
    assert ids(candidate_elements(island, {"0"}, 1)) == {"0"}
    with pytest.raises(ValueError):
        candidate_elements(chain, {"0"}, -1)


def _floyd_warshall(n, pairs):
    d = [[0 if i == j else math.inf for j in range(n)] for i in range(n)]
    for a, b in pairs:
        if a != b:
            d[a][b] = d[b][a] = 1
    for k in range(n):
        for i in range(n):
            for j in range(n):
                if d[i][k] + d[k][j] < d[i][j]:
                    d[i][j] = d[i][k] + d[k][j]
    return d


@st.composite
def graphs(draw):
    n = draw(st.integers(1, 12))
    pairs = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=3 * n))
    seeds = draw(st.sets(st.integers(0, n - 1), min_size=1))
    return n, pairs, seeds


@settings(max_examples=200)
@given(graphs())
def test_distance_equals_all_pairs_oracle(case):
    n, pairs, seeds = case
    graph = _synthetic(n, pairs)
    d = _floyd_warshall(n, pairs)
    for v in range(n):
        expected = min(d[s][v] for s in seeds)
        assert distance_to_seeds(graph, str(v), {str(s) for s in seeds}) == expected


@settings(max_examples=200)
@given(graphs())
def test_triangle_property(case):
    n, pairs, seeds = case
    graph = _synthetic(n, pairs)
    seed_ids = sorted(str(s) for s in seeds)
    reach = seed_distances(graph, seed_ids)
    dist = lambda v: reach[v][0] if v in reach else math.inf
    for v in graph.nodes:
        for w in graph.neighbors(v):
            assert dist(v) <= 1 + dist(w)


@settings(max_examples=200)
@given(graphs(), st.sets(st.integers(0, 11)))
def test_more_seeds_never_increase_distance(case, extra):
    n, pairs, seeds = case
    graph = _synthetic(n, pairs)
    small = {str(s) for s in seeds}
    large = small | {str(e) for e in extra if e < n}
    for v in graph.nodes:
        assert distance_to_seeds(graph, v, large) <= distance_to_seeds(graph, v, small)
