"""Sectored-network interference graph on the bounded Eisenstein lattice.

Every unit lattice segment belongs to exactly one upward triangle
``[z, z+w, z+w+1]``.  Triangles anchored on the square coset are the three
sectors of a cell (intra-cell edges); all other triangles carry out-of-cell
interference.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from .lattice import (
    OMEGA,
    ONE,
    CosetClass,
    EisensteinInt,
    coset,
    in_region,
    raster_key,
    region_points,
)

Edge = tuple[int, int]


@dataclass(frozen=True)
class SectorNode:
    id: int
    label: EisensteinInt
    coset: CosetClass


@dataclass(frozen=True)
class Triangle:
    anchor: EisensteinInt
    members: tuple[int, int, int]  # labels [z, z+w, z+w+1]


@dataclass(frozen=True)
class Cell:
    """Sectors ``{z, z+1, z-w}`` of the cell whose primary label is ``z``.

    ``external_d`` (label ``z-w-1``) is the out-of-cell diamond that
    interferes with both ``a`` and ``c``.  Members outside the region are
    ``None``; the primary itself may be missing on the boundary.
    """

    label: EisensteinInt
    primary: int | None
    secondary_b: int | None
    secondary_c: int | None
    external_d: int | None

    @property
    def members(self) -> tuple[int, ...]:
        return tuple(
            v for v in (self.primary, self.secondary_b, self.secondary_c) if v is not None
        )

    @property
    def secondaries(self) -> tuple[int, ...]:
        return tuple(v for v in (self.secondary_b, self.secondary_c) if v is not None)

    @property
    def is_full(self) -> bool:
        return None not in (self.primary, self.secondary_b, self.secondary_c)


def cell_label_of(z: EisensteinInt) -> EisensteinInt:
    """Primary (circle) label of the cell containing sector label ``z``."""
    k = coset(z)
    if k is CosetClass.CIRCLE:
        return z
    if k is CosetClass.DIAMOND:
        return z - ONE
    return z + OMEGA


class InterferenceGraph:
    """Immutable interference graph; build it with :func:`build_graph`."""

    def __init__(
        self,
        r: int,
        nodes: Sequence[SectorNode],
        out_edges: Iterable[Edge],
        intra_edges: Iterable[Edge],
        include_intra: bool,
    ):
        self.r = r
        self.nodes = tuple(nodes)
        self.out_edges = tuple(sorted(out_edges))
        self.intra_edges = tuple(sorted(intra_edges))
        self.include_intra = include_intra
        self._index = {n.label: n.id for n in self.nodes}
        self._out_set = frozenset(self.out_edges)
        self._intra_set = frozenset(self.intra_edges)

    def __len__(self) -> int:
        return len(self.nodes)

    def __repr__(self) -> str:
        return (
            f"InterferenceGraph(r={self.r}, nodes={len(self.nodes)}, "
            f"out_edges={len(self.out_edges)}, intra_edges={len(self.intra_edges)})"
        )

    def node_at(self, z: EisensteinInt) -> int | None:
        return self._index.get(z)

    def label(self, v: int) -> EisensteinInt:
        return self.nodes[v].label

    def coset_of(self, v: int) -> CosetClass:
        return self.nodes[v].coset

    def has_out_edge(self, u: int, v: int) -> bool:
        return (min(u, v), max(u, v)) in self._out_set

    def has_intra_edge(self, u: int, v: int) -> bool:
        return (min(u, v), max(u, v)) in self._intra_set

    @cached_property
    def out_neighbors(self) -> tuple[tuple[int, ...], ...]:
        return _adjacency(len(self.nodes), self.out_edges)

    @cached_property
    def intra_neighbors(self) -> tuple[tuple[int, ...], ...]:
        return _adjacency(len(self.nodes), self.intra_edges)

    @cached_property
    def triangles(self) -> tuple[Triangle, ...]:
        return tuple(triangles(self))

    @cached_property
    def cells(self) -> tuple[Cell, ...]:
        return tuple(cells(self))

    @cached_property
    def cell_of(self) -> dict[int, Cell]:
        return {v: c for c in self.cells for v in c.members}

    def nodes_of_coset(self, k: CosetClass) -> list[int]:
        return [n.id for n in self.nodes if n.coset is k]


def _adjacency(n: int, edges: Iterable[Edge]) -> tuple[tuple[int, ...], ...]:
    adj: list[list[int]] = [[] for _ in range(n)]
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    return tuple(tuple(sorted(a)) for a in adj)


def build_graph(r: int, include_intra: bool = True) -> InterferenceGraph:
    """Interference graph on ``Z[w] ∩ B_r``.

    Node ids follow the raster ("left-to-right, top-down") order of the labels.
    """
    if not isinstance(r, (int, np.integer)) or r < 1:
        raise ValueError(f"r must be a positive integer, got {r!r}")
    r = int(r)
    labels = sorted(region_points(r), key=raster_key)
    nodes = [SectorNode(i, z, coset(z)) for i, z in enumerate(labels)]
    index = {z: i for i, z in enumerate(labels)}

    out_edges: set[Edge] = set()
    intra_edges: set[Edge] = set()
    # Walk each in-region point p and its three "upward" segments; the
    # segment's triangle anchor may lie outside the region.
    for p in labels:
        for step, anchor in ((OMEGA, p), (ONE + OMEGA, p), (ONE, p - OMEGA)):
            q = p + step
            if q not in index:
                continue
            e = tuple(sorted((index[p], index[q])))
            if coset(anchor) is CosetClass.SQUARE:
                if include_intra:
                    intra_edges.add(e)
            else:
                out_edges.add(e)
    return InterferenceGraph(r, nodes, out_edges, intra_edges, include_intra)


def triangles(g: InterferenceGraph) -> list[Triangle]:
    """Out-of-cell vertex triangles with all three corners in the region."""
    found = []
    for n in g.nodes:
        z = n.label
        if n.coset is CosetClass.SQUARE:
            continue
        v = g.node_at(z + OMEGA)
        w = g.node_at(z + OMEGA + ONE)
        if v is not None and w is not None:
            found.append(Triangle(z, (n.id, v, w)))
    return found


def classify_vertices(g: InterferenceGraph) -> tuple[list[int], frozenset[int], frozenset[int]]:
    """Triangle-membership counts plus the interior (``n_v = 2``) / exterior split."""
    counts = [0] * len(g)
    for t in g.triangles:
        for v in t.members:
            counts[v] += 1
    v_in = frozenset(v for v, c in enumerate(counts) if c == 2)
    v_ex = frozenset(v for v, c in enumerate(counts) if c < 2)
    return counts, v_in, v_ex


def cells(g: InterferenceGraph) -> list[Cell]:
    """One cell per circle label whose sector triple meets the region.

    Cells are sorted by the raster order of their primary label.
    """
    keys = {cell_label_of(n.label) for n in g.nodes}
    out = []
    for z in sorted(keys, key=raster_key):
        out.append(
            Cell(
                label=z,
                primary=g.node_at(z),
                secondary_b=g.node_at(z + ONE),
                secondary_c=g.node_at(z - OMEGA),
                external_d=g.node_at(z - OMEGA - ONE),
            )
        )
    return out


def cardinality_formulas(r: int) -> tuple[int, int, int]:
    """Closed forms ``(|V|, |T|, bound on |V_ex|)`` for region radius ``r``."""
    if r < 1:
        raise ValueError(f"r must be >= 1, got {r}")
    n_v = 4 * r * r + 3 * r + (1 if r % 2 == 0 else 0)
    n_t = r * (4 * r - (r - 2) // 3 - 2 * ((r - 1) // 3) - (r + 1) // 3 - 3)
    return n_v, n_t, 12 * r + 2


def triangle_sum_check(
    g: InterferenceGraph, x: Sequence[float] | Mapping[int, float]
) -> tuple[float, float]:
    """Both sides of the triangle-sum decomposition of ``sum_v x_v``."""
    xs = np.array([x[v] for v in range(len(g))], dtype=float)
    counts, _, v_ex = classify_vertices(g)
    lhs = float(xs.sum())
    tri = sum(xs[list(t.members)].sum() / 2 for t in g.triangles)
    ext = sum((1 - counts[u] / 2) * xs[u] for u in v_ex)
    return lhs, float(tri + ext)


_DOT_SHAPE = {
    CosetClass.SQUARE: "box",
    CosetClass.CIRCLE: "ellipse",
    CosetClass.DIAMOND: "diamond",
}


def to_dot(g: InterferenceGraph, rank: Sequence[int] | None = None) -> str:
    """Graphviz source.  With ``rank`` the edges point from interferer to victim.

    An edge ``u -> v`` means the transmitter of ``u`` still interferes at
    receiver ``v`` because ``v`` decodes first; equal-rank pairs are drawn
    undirected.
    """
    lines = ["digraph interference {" if rank is not None else "graph interference {"]
    lines.append("  node [fontsize=10];")
    for n in g.nodes:
        pos = f"{2 * n.label.a - n.label.b:g},{n.label.b * 1.7320508075688772:.6f}"
        lines.append(
            f'  n{n.id} [label="{n.label}", shape={_DOT_SHAPE[n.coset]}, pos="{pos}!"];'
        )
    conn = "->" if rank is not None else "--"
    for edges, style in ((g.out_edges, "solid"), (g.intra_edges, "dashed")):
        for u, v in edges:
            attrs = [f"style={style}"]
            if rank is not None:
                if rank[u] < rank[v]:
                    u, v = v, u
                elif rank[u] == rank[v]:
                    attrs.append("dir=none")
            lines.append(f"  n{u} {conn} n{v} [{', '.join(attrs)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def graph_to_dict(g: InterferenceGraph) -> dict:
    return {
        "r": g.r,
        "nodes": [
            {"id": n.id, "a": n.label.a, "b": n.label.b, "coset": int(n.coset)} for n in g.nodes
        ],
        "out_edges": [list(e) for e in g.out_edges],
        "intra_edges": [list(e) for e in g.intra_edges],
    }


def to_json(g: InterferenceGraph) -> str:
    return json.dumps(graph_to_dict(g), indent=2)


def graph_from_dict(data: Mapping) -> InterferenceGraph:
    nodes = [
        SectorNode(int(n["id"]), EisensteinInt(int(n["a"]), int(n["b"])), CosetClass(int(n["coset"])))
        for n in data["nodes"]
    ]
    return InterferenceGraph(
        int(data["r"]),
        nodes,
        [tuple(e) for e in data["out_edges"]],
        [tuple(e) for e in data["intra_edges"]],
        include_intra=bool(data["intra_edges"]),
    )
