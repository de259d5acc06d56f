"""Decoding orders and the directed interference edges they induce.

``rank[v]`` is the decoding stage of node ``v``; lower ranks decode first and
nodes sharing a rank decode jointly.  A surviving interference edge
``[u, v]`` means transmitter ``u`` still interferes at receiver ``v`` because
``v`` decodes strictly before ``u``.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

from .graph import InterferenceGraph, cell_label_of
from .lattice import ONE, CosetClass, EisensteinInt, coset, raster_key


class OrderKind(str, enum.Enum):
    PI_STAR = "pi-star"
    PI_S = "pi-s"


class EdgeSelector(str, enum.Enum):
    OUT = "out"
    INTRA = "intra"
    BOTH = "both"


class OrderConsistencyError(RuntimeError):
    """A constructed decoding order violates a property it must satisfy."""


@dataclass(frozen=True)
class DecodingOrder:
    kind: OrderKind
    rank: tuple[int, ...]
    joint_groups: tuple[frozenset[int], ...] = field(repr=False)

    def stages(self) -> list[list[int]]:
        """Nodes grouped by rank, in decoding order."""
        by_rank: dict[int, list[int]] = {}
        for v, k in enumerate(self.rank):
            by_rank.setdefault(k, []).append(v)
        return [sorted(by_rank[k]) for k in sorted(by_rank)]

    def precedes(self, v: int, u: int) -> bool:
        return self.rank[v] < self.rank[u]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "rank": list(self.rank),
            "joint_groups": [sorted(g) for g in self.joint_groups if len(g) > 1],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _from_keys(kind: OrderKind, keys: list[tuple]) -> DecodingOrder:
    distinct = sorted(set(keys))
    pos = {k: i for i, k in enumerate(distinct)}
    rank = tuple(pos[k] for k in keys)
    groups: dict[int, set[int]] = {}
    for v, k in enumerate(rank):
        groups.setdefault(k, set()).add(v)
    return DecodingOrder(kind, rank, tuple(frozenset(groups[k]) for k in sorted(groups)))


def order_pi_star(g: InterferenceGraph) -> DecodingOrder:
    """Raster order: higher imaginary part first, ties broken by smaller real part."""
    return _from_keys(OrderKind.PI_STAR, [raster_key(n.label) for n in g.nodes])


def cell_coordinates(z: EisensteinInt) -> tuple[int, int]:
    """``(p, q)`` with ``z = 1 + p (2+w) + q (-1+w)`` for a circle label ``z``.

    ``p`` runs along the up-right diagonal, ``q`` across diagonals towards the
    upper left.
    """
    if coset(z) is not CosetClass.CIRCLE:
        raise ValueError(f"{z} is not a circle label")
    y = z - ONE
    p3 = y.a + y.b
    # y in the square sublattice, so p3 is a multiple of 3
    p = p3 // 3
    return p, y.b - p


def _pi_s_key(z: EisensteinInt) -> tuple[int, int, int]:
    p, q = cell_coordinates(cell_label_of(z))
    if coset(z) is CosetClass.CIRCLE:
        # primaries of a diagonal first, top-down
        return (-q, 0, -p)
    # then the secondary pairs, bottom-up
    return (-q, 1, p)


def order_pi_s(g: InterferenceGraph) -> DecodingOrder:
    """Curly-S cell order with jointly decoded secondary pairs.

    Diagonals of cells are processed starting from the upper-left one.  In a
    diagonal all primaries decode top-down, then the ``{b, c}`` pairs decode
    bottom-up.  Raises :class:`OrderConsistencyError` if the result does not
    keep the raster order's out-of-cell edge directions or if an external
    ``d`` does not precede its cell's pair.
    """
    order = _from_keys(OrderKind.PI_S, [_pi_s_key(n.label) for n in g.nodes])
    ref = order_pi_star(g)
    if orient_edges(g, order, EdgeSelector.OUT) != orient_edges(g, ref, EdgeSelector.OUT):
        raise OrderConsistencyError("pi_s changes an out-of-cell interference direction")
    for c in g.cells:
        for s in c.secondaries:
            if c.primary is not None and not order.precedes(c.primary, s):
                raise OrderConsistencyError(f"primary of cell {c.label} does not lead")
            if c.external_d is not None and not order.precedes(c.external_d, s):
                raise OrderConsistencyError(f"external d of cell {c.label} decodes too late")
        if c.secondary_b is not None and c.secondary_c is not None:
            if order.rank[c.secondary_b] != order.rank[c.secondary_c]:
                raise OrderConsistencyError(f"secondary pair of cell {c.label} is split")
    return order


def make_order(g: InterferenceGraph, kind: OrderKind | str) -> DecodingOrder:
    kind = OrderKind(kind)
    return order_pi_star(g) if kind is OrderKind.PI_STAR else order_pi_s(g)


def orient_edges(
    g: InterferenceGraph,
    order: DecodingOrder,
    selector: EdgeSelector | str | None = EdgeSelector.OUT,
) -> frozenset[tuple[int, int]]:
    """Directed edges ``(u, v)``: ``u`` interferes at ``v`` since ``v`` decodes first.

    ``selector=None`` selects no edges.  Same-rank pairs yield nothing.
    """
    if selector is None:
        return frozenset()
    selector = EdgeSelector(selector)
    edges: list[tuple[int, int]] = []
    if selector in (EdgeSelector.OUT, EdgeSelector.BOTH):
        edges.extend(g.out_edges)
    if selector in (EdgeSelector.INTRA, EdgeSelector.BOTH):
        edges.extend(g.intra_edges)
    rank = order.rank
    directed = set()
    for u, v in edges:
        if rank[v] < rank[u]:
            directed.add((u, v))
        elif rank[u] < rank[v]:
            directed.add((v, u))
    return frozenset(directed)


def in_degrees(n: int, directed: frozenset[tuple[int, int]]) -> list[int]:
    deg = [0] * n
    for _, v in directed:
        deg[v] += 1
    return deg
