"""Converse side: per-triangle DoF cap, triangle upper bound, exact Q1 and the compound bound.

Q1 maximises ``sum d_v`` over integers ``0 <= d_v <= M`` with ``d_u + d_v <= M``
on every out-of-cell edge.  Small instances are enumerated outright, larger
ones go through a depth-first branch-and-bound that prunes with per-node caps
tightened by vertex-disjoint triangles (each capped at ``s*``).
"""

from __future__ import annotations

import itertools
import json
import sys
from dataclasses import asdict, dataclass

import numpy as np

from .graph import InterferenceGraph, classify_vertices
from .lattice import CosetClass

PLAIN_ENUM_LIMIT = 10**6
DEFAULT_NODE_BUDGET = 5 * 10**6


class BudgetExceeded(RuntimeError):
    """The exact Q1 search would exceed its node budget."""


def s_star(M: int) -> int:
    """Largest ``d_i + d_j + d_k`` with all pairwise sums at most ``M``."""
    if M < 1:
        raise ValueError(f"M must be >= 1, got {M}")
    return 3 * M // 2 if M % 2 == 0 else (3 * M - 1) // 2


def brute_force_s_star(M: int) -> tuple[int, tuple[int, int, int]]:
    """Exhaustive search over ``{0..M}^3``; returns the optimum and a witness."""
    if not 1 <= M <= 12:
        raise ValueError("brute_force_s_star is limited to 1 <= M <= 12")
    best, arg = -1, (0, 0, 0)
    for t in itertools.product(range(M + 1), repeat=3):
        i, j, k = t
        if i + j <= M and j + k <= M and i + k <= M and i + j + k > best:
            best, arg = i + j + k, t
    return best, arg


def achievable_upper_bound(g: InterferenceGraph, M: int) -> float:
    """``|T| s* / (2|V|) + M |V_ex| / |V|``."""
    _, _, v_ex = classify_vertices(g)
    n_v, n_t = len(g), len(g.triangles)
    return n_t * s_star(M) / (2 * n_v) + M * len(v_ex) / n_v


def q1_feasible(g: InterferenceGraph, d, M: int) -> bool:
    if any(x < 0 or x > M for x in d):
        return False
    return all(d[u] + d[v] <= M for u, v in g.out_edges)


def _enumerate_q1(n: int, edges: np.ndarray, M: int) -> tuple[int, list[int]]:
    base = M + 1
    total = base**n
    best, arg = -1, None
    chunk = 1 << 16
    weights = base ** np.arange(n)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(total, start + chunk))
        digits = (idx[:, None] // weights[None, :]) % base
        if len(edges):
            ok = np.all(digits[:, edges[:, 0]] + digits[:, edges[:, 1]] <= M, axis=1)
        else:
            ok = np.ones(len(idx), dtype=bool)
        if not ok.any():
            continue
        sums = np.where(ok, digits.sum(axis=1), -1)
        i = int(np.argmax(sums))
        if sums[i] > best:
            best, arg = int(sums[i]), digits[i].tolist()
    return best, arg  # type: ignore[return-value]


def _branch_and_bound(g: InterferenceGraph, M: int, budget: int) -> tuple[int, list[int]]:
    n = len(g)
    nbrs = g.out_neighbors
    s_cap = s_star(M)
    # vertex-disjoint cover by triangles (capped at s*), then edges (capped at M)
    used: set[int] = set()
    groups: list[tuple[tuple[int, ...], int]] = []
    for t in g.triangles:
        if not used & set(t.members):
            groups.append((t.members, s_cap))
            used |= set(t.members)
    for u, v in g.out_edges:
        if u not in used and v not in used:
            groups.append(((u, v), M))
            used |= {u, v}
    group_of = {v: i for i, (members, _) in enumerate(groups) for v in members}
    limits = [lim for _, lim in groups]

    d = [-1] * n
    seed = _design_assignment(g, M)
    best = [sum(seed), seed]
    visited = [0]

    def cap(v: int) -> int:
        c = M
        for u in nbrs[v]:
            if d[u] >= 0:
                c = min(c, M - d[u])
        return c

    def bound(pos: int) -> int:
        total = 0
        part: dict[int, int] = {}
        for v in range(pos, n):
            c = cap(v)
            if v in group_of:
                part[group_of[v]] = part.get(group_of[v], 0) + c
            else:
                total += c
        return total + sum(min(limits[i], c) for i, c in part.items())

    def dfs(pos: int, acc: int) -> None:
        visited[0] += 1
        if visited[0] > budget:
            raise BudgetExceeded(f"Q1 search exceeded {budget} nodes")
        if pos == n:
            if acc > best[0]:
                best[0], best[1] = acc, d.copy()
            return
        if acc + bound(pos) <= best[0]:
            return
        for x in range(cap(pos), -1, -1):
            d[pos] = x
            dfs(pos + 1, acc + x)
        d[pos] = -1

    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 4 * n + 100))
    try:
        dfs(0, 0)
    finally:
        sys.setrecursionlimit(old)
    return best[0], best[1]


def _design_assignment(g: InterferenceGraph, M: int) -> list[int]:
    """Feasible starting point: the stream counts of the alignment design."""
    if M % 2 == 0:
        return [M // 2] * len(g)
    squares = g.nodes_of_coset(CosetClass.SQUARE)
    diamonds = g.nodes_of_coset(CosetClass.DIAMOND)
    star = set(diamonds if len(diamonds) >= len(squares) else squares)
    return [(M + 1) // 2 if v in star else (M - 1) // 2 for v in range(len(g))]


def brute_force_q1(
    g: InterferenceGraph,
    M: int,
    budget: int = DEFAULT_NODE_BUDGET,
    method: str = "auto",
) -> tuple[int, list[int]]:
    """Exact optimum of Q1 and one optimal assignment (indexed by node id).

    ``method`` is ``"enumerate"``, ``"bnb"`` or ``"auto"`` (enumerate when
    ``(M+1)^|V|`` is at most ``PLAIN_ENUM_LIMIT``).  Raises
    :class:`BudgetExceeded` when the search is too large.
    """
    n = len(g)
    space = (M + 1) ** n
    if method == "auto":
        method = "enumerate" if space <= PLAIN_ENUM_LIMIT else "bnb"
    if method == "enumerate":
        if space > 10**8:
            raise BudgetExceeded(f"(M+1)^|V| = {space} is beyond plain enumeration")
        edges = np.array(g.out_edges, dtype=int).reshape(-1, 2)
        return _enumerate_q1(n, edges, M)
    if method == "bnb":
        return _branch_and_bound(g, M, budget)
    raise ValueError(f"unknown method {method!r}")


def compound_triangles(g: InterferenceGraph) -> list[tuple[int, int, int]]:
    """Triangles anchored on diamond labels with all three corners present."""
    return [t.members for t in g.triangles if g.coset_of(t.members[0]) is CosetClass.DIAMOND]


def compound_upper_bound(g: InterferenceGraph, M: int, m_factor: bool = False) -> float:
    """``|T^| s* / |V| + |V^_ex| / |V|`` over the diamond-anchored triangles.

    ``m_factor=True`` multiplies the boundary term by ``M``, mirroring the
    non-compound bound.
    """
    tris = compound_triangles(g)
    covered = {v for t in tris for v in t}
    n = len(g)
    ex = n - len(covered)
    return len(tris) * s_star(M) / n + (M if m_factor else 1) * ex / n


@dataclass
class DofBoundReport:
    M: int
    r: int
    s_star: int
    nT: int
    nV: int
    nVex: int
    upper_avg: float
    achievable_avg: float
    q1_exact: int | None = None
    compound_upper: float | None = None
    compound_upper_m_factor: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def achieved_average(g: InterferenceGraph, M: int) -> float:
    """Average streams per node of the alignment design (no channel needed)."""
    if M % 2 == 0:
        return M / 2
    squares = len(g.nodes_of_coset(CosetClass.SQUARE))
    diamonds = len(g.nodes_of_coset(CosetClass.DIAMOND))
    return (M - 1) / 2 + max(squares, diamonds) / len(g)


def bound_report(
    g: InterferenceGraph,
    M: int,
    exact_q1: bool = False,
    budget: int = DEFAULT_NODE_BUDGET,
) -> DofBoundReport:
    _, _, v_ex = classify_vertices(g)
    q1 = None
    if exact_q1:
        try:
            q1 = brute_force_q1(g, M, budget)[0]
        except BudgetExceeded:
            q1 = None
    return DofBoundReport(
        M=M,
        r=g.r,
        s_star=s_star(M),
        nT=len(g.triangles),
        nV=len(g),
        nVex=len(v_ex),
        upper_avg=achievable_upper_bound(g, M),
        achievable_avg=achieved_average(g, M),
        q1_exact=q1,
        compound_upper=compound_upper_bound(g, M),
        compound_upper_m_factor=compound_upper_bound(g, M, m_factor=True),
    )
