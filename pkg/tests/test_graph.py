import json
import re

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cellular_ia.graph import (
    build_graph,
    cardinality_formulas,
    classify_vertices,
    graph_from_dict,
    graph_to_dict,
    to_dot,
    to_json,
    triangle_sum_check,
)
from cellular_ia.lattice import OMEGA, ONE, UNITS, CosetClass, EisensteinInt, coset
from conftest import graph

E = EisensteinInt


def oracle_edges(r):
    """Brute force: every unit-distance pair in the region, typed by its triangle anchor.

    The upward triangle with corners ``{z, z+w, z+w+1}`` containing a segment is
    found by trying all anchors near the segment, independently of the
    construction used by ``build_graph``.
    """
    g = graph(r)
    labels = [n.label for n in g.nodes]
    idx = {z: i for i, z in enumerate(labels)}
    out, intra = set(), set()
    for p in labels:
        for u in UNITS:
            q = p + u
            if q not in idx or idx[q] < idx[p]:
                continue
            anchors = []
            for da in range(-2, 3):
                for db in range(-2, 3):
                    z = p + E(da, db)
                    tri = {z, z + OMEGA, z + OMEGA + ONE}
                    if p in tri and q in tri:
                        anchors.append(z)
            assert len(anchors) == 1
            (intra if coset(anchors[0]) is CosetClass.SQUARE else out).add((idx[p], idx[q]))
    return out, intra


def test_r1_counts_and_flag():
    g = build_graph(1)
    assert (len(g), len(g.out_edges), len(g.intra_edges)) == (7, 8, 4)
    h = build_graph(1, include_intra=False)
    assert h.intra_edges == () and h.out_edges == g.out_edges
    assert len(build_graph(2)) == 23
    with pytest.raises(ValueError):
        build_graph(0)


@pytest.mark.parametrize("r", [1, 2, 3, 4, 6])
def test_edges_match_oracle(r):
    g = graph(r)
    out, intra = oracle_edges(r)
    assert set(g.out_edges) == out
    assert set(g.intra_edges) == intra


@pytest.mark.parametrize("r", range(1, 9))
def test_graph_invariants(r):
    g = graph(r)
    assert not set(g.out_edges) & set(g.intra_edges)
    for u, v in (*g.out_edges, *g.intra_edges):
        assert u < v
        assert g.label(v) - g.label(u) in UNITS or g.label(u) - g.label(v) in UNITS
        assert g.coset_of(u) != g.coset_of(v)
        assert not (g.coset_of(u) is CosetClass.CIRCLE and g.coset_of(v) is CosetClass.CIRCLE)
    for t in g.triangles:
        assert coset(t.anchor) is not CosetClass.SQUARE
        z = t.anchor
        assert [g.label(v) for v in t.members] == [z, z + OMEGA, z + OMEGA + ONE]


def test_r1_triangles_and_classes():
    g = graph(1)
    assert sorted((t.anchor.a, t.anchor.b) for t in g.triangles) == [(-1, -1), (0, -1)]
    counts, v_in, v_ex = classify_vertices(g)
    zero = g.node_at(E(0, 0))
    assert v_in == {zero} and counts[zero] == 2
    assert len(v_ex) == 6
    assert len(graph(2).triangles) == 8


def test_r1_cells():
    g = graph(1)
    cell = {c.label: c for c in g.cells}
    full = cell[OMEGA]
    assert full.is_full
    assert g.label(full.secondary_b) == ONE + OMEGA
    assert g.label(full.secondary_c) == E(0, 0)
    assert g.label(full.external_d) == -ONE
    lone = cell[ONE]
    assert lone.members == (lone.primary,) and lone.secondary_b is None and lone.secondary_c is None
    assert g.label(lone.external_d) == -OMEGA


@pytest.mark.parametrize("r", range(1, 8))
def test_full_cells_have_intra_triangle(r):
    g = graph(r)
    for c in g.cells:
        if c.primary is not None:
            assert g.coset_of(c.primary) is CosetClass.CIRCLE
        if c.is_full:
            a, b, cc = c.primary, c.secondary_b, c.secondary_c
            for u, v in ((a, b), (a, cc), (b, cc)):
                assert g.has_intra_edge(u, v) and not g.has_out_edge(u, v)
        if c.external_d is not None:
            for m in (c.primary, c.secondary_c):
                if m is not None:
                    assert g.has_out_edge(m, c.external_d)


def test_cardinality_examples():
    assert cardinality_formulas(1) == (7, 2, 14)
    assert cardinality_formulas(2) == (23, 8, 26)
    assert cardinality_formulas(4)[0] == 77


@pytest.mark.parametrize("r", range(1, 13))
def test_cardinality_formulas_match_enumeration(r):
    g = graph(r)
    n_v, n_t, vex_bound = cardinality_formulas(r)
    _, _, v_ex = classify_vertices(g)
    assert len(g) == n_v and len(g.triangles) == n_t
    assert len(v_ex) <= vex_bound
    assert 3 * len(g.triangles) <= 2 * len(g)


def test_triangle_sum_examples():
    g = graph(1)
    assert triangle_sum_check(g, np.zeros(7)) == (0.0, 0.0)
    assert triangle_sum_check(g, np.ones(7)) == pytest.approx((7.0, 7.0))


@given(st.integers(1, 10), st.integers(0, 2**32 - 1))
def test_triangle_sum_identity(r, seed):
    g = graph(r)
    x = np.random.default_rng(seed).uniform(-1, 1, len(g))
    lhs, rhs = triangle_sum_check(g, x)
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, np.abs(x).sum())


def test_dot_export():
    g = graph(2)
    text = to_dot(g)
    assert text.startswith("graph ")
    assert len(re.findall(r"^\s*n\d+ \[label=", text, flags=re.M)) == 23
    assert text.count(" -- ") == len(g.out_edges) + len(g.intra_edges)
    ranked = to_dot(g, rank=list(range(len(g))))
    assert ranked.startswith("digraph ") and ranked.count(" -> ") == len(g.out_edges) + len(g.intra_edges)


@pytest.mark.parametrize("r", [1, 3])
def test_json_round_trip(r):
    g = graph(r)
    h = graph_from_dict(json.loads(to_json(g)))
    assert graph_to_dict(h) == graph_to_dict(g)
    assert [t.members for t in h.triangles] == [t.members for t in g.triangles]
