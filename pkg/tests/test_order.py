import json

import pytest

from cellular_ia.graph import InterferenceGraph
from cellular_ia.lattice import OMEGA, ONE, CosetClass, EisensteinInt, embed
from cellular_ia.order import (
    EdgeSelector,
    OrderKind,
    in_degrees,
    make_order,
    order_pi_s,
    order_pi_star,
    orient_edges,
)
from conftest import graph

E = EisensteinInt


def test_pi_star_examples():
    g = graph(1)
    o = order_pi_star(g)
    zero, w, m1 = g.node_at(E(0, 0)), g.node_at(OMEGA), g.node_at(-ONE)
    assert o.precedes(w, zero)
    assert o.precedes(m1, zero)
    # 0 decodes before 1, so 1 interferes at 0
    assert (g.node_at(ONE), zero) in orient_edges(g, o, EdgeSelector.OUT)
    assert orient_edges(g, o, None) == frozenset()


@pytest.mark.parametrize("r", [1, 2, 5])
def test_pi_star_matches_float_sort(r):
    g = graph(r)
    o = order_pi_star(g)
    pts = [embed(n.label) for n in g.nodes]
    ref = sorted(range(len(g)), key=lambda v: (-round(pts[v].imag, 9), round(pts[v].real, 9)))
    assert [v for v in sorted(range(len(g)), key=lambda v: o.rank[v])] == ref
    assert all(len(s) == 1 for s in o.stages())


@pytest.mark.parametrize("r", range(1, 9))
def test_directed_edges_are_strict(r):
    g = graph(r)
    for o in (order_pi_star(g), order_pi_s(g)):
        D = orient_edges(g, o, EdgeSelector.BOTH)
        for u, v in D:
            assert o.rank[v] < o.rank[u]
            assert g.has_out_edge(u, v) or g.has_intra_edge(u, v)
        assert not any((v, u) in D for u, v in D)


@pytest.mark.parametrize("r", range(2, 7))
def test_order_properties(r):
    g = graph(r)
    ps, pst = order_pi_s(g), order_pi_star(g)
    # P1
    assert orient_edges(g, ps, "out") == orient_edges(g, pst, "out")
    # P2
    for c in g.cells:
        if c.is_full and c.external_d is not None:
            assert ps.rank[c.external_d] < ps.rank[c.secondary_b] == ps.rank[c.secondary_c]
            assert ps.rank[c.primary] < ps.rank[c.secondary_b]
    # P3
    for u, v in g.out_edges:
        assert not (g.coset_of(u) is CosetClass.CIRCLE and g.coset_of(v) is CosetClass.CIRCLE)
    deg = in_degrees(len(g), orient_edges(g, pst, EdgeSelector.OUT))
    cap = {CosetClass.CIRCLE: 1, CosetClass.DIAMOND: 2, CosetClass.SQUARE: 3}
    for n in g.nodes:
        assert deg[n.id] <= cap[n.coset]


@pytest.mark.parametrize("r", [2, 4])
def test_pi_s_joint_groups(r):
    g = graph(r)
    o = order_pi_s(g)
    for grp in o.joint_groups:
        assert len({o.rank[v] for v in grp}) == 1
        if len(grp) > 1:
            cell = g.cell_of[next(iter(grp))]
            assert set(grp) == set(cell.secondaries)
    assert make_order(g, "pi-s") == o and make_order(g, OrderKind.PI_STAR) == order_pi_star(g)


def test_order_json():
    g = graph(2)
    d = json.loads(order_pi_s(g).to_json())
    assert d["kind"] == "pi-s" and len(d["rank"]) == 23
    assert all(len(grp) == 2 for grp in d["joint_groups"])


def test_intra_selector_on_graph_without_intra():
    g = graph(3, False)
    assert isinstance(g, InterferenceGraph)
    assert orient_edges(g, order_pi_star(g), EdgeSelector.INTRA) == frozenset()
