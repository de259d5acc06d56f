"""One-shot linear interference-alignment beamformers for the raster order.

Even ``M``: every node sends ``M/2`` streams.  Transmit subspaces are chained
so that at every receiver all surviving interference lands in one
``M/2``-dimensional subspace, which the receive filter then nulls:

* square ``v0``: aligned with circle ``v0-1-w`` at diamond receiver ``v0-1``;
* circle ``v1``: aligned with diamond ``v1+1`` at square receiver ``v1+1+w``;
* diamond ``v2``: aligned with circle ``v2+1+w`` at square receiver ``v2+w``.

Odd ``M``: the even recursion is run with ``(M-1)/2`` transmit and
``(M+1)/2`` receive dimensions, and an independent set of nodes (the larger
of the square and diamond classes) gets one extra stream that its victims
absorb in their spare receive dimension.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .channels import ChannelSet
from .graph import InterferenceGraph
from .lattice import OMEGA, ONE, CosetClass

RANK_RTOL = 1e-9


class DegenerateInputError(ValueError):
    """Rank-deficient or singular input where full rank is required."""


class DesignError(RuntimeError):
    """Internal inconsistency in the beamformer construction."""


def _rank_tol(s: np.ndarray, shape: tuple[int, int]) -> float:
    return RANK_RTOL * (s[0] if s.size else 0.0) * max(shape)


def numerical_rank(A: np.ndarray) -> int:
    if A.size == 0:
        return 0
    s = np.linalg.svd(A, compute_uv=False)
    return int(np.sum(s > _rank_tol(s, A.shape)))


def orthonormalize(A: np.ndarray) -> np.ndarray:
    """Orthonormal basis of ``span(A)`` (A must have full column rank)."""
    if A.shape[1] == 0:
        return A.astype(complex)
    q, r = np.linalg.qr(A)
    d = np.abs(np.diag(r))
    if d.min() <= RANK_RTOL * d.max() * max(A.shape):
        raise DegenerateInputError("matrix to orthonormalize is rank deficient")
    return q


def nullspace_basis(A: np.ndarray) -> np.ndarray:
    """Orthonormal ``P`` (``m x (m-n)``) with ``P^H A = 0`` for full-column-rank ``A``."""
    A = np.atleast_2d(np.asarray(A, dtype=complex))
    m, n = A.shape
    if n > m:
        raise DegenerateInputError(f"{m}x{n} matrix has no left nullspace of dimension m-n")
    if n == 0:
        return np.eye(m, dtype=complex)
    u, s, _ = np.linalg.svd(A, full_matrices=True)
    if s[-1] <= _rank_tol(s, A.shape) or s[0] == 0:
        raise DegenerateInputError("nullspace_basis needs a full column rank matrix")
    return u[:, n:]


def random_orthonormal(rng: np.random.Generator, M: int, d: int) -> np.ndarray:
    g = (rng.standard_normal((M, d)) + 1j * rng.standard_normal((M, d))) / np.sqrt(2)
    return orthonormalize(g)


@dataclass(frozen=True)
class BeamformerSet:
    M: int
    d: tuple[int, ...]
    V: tuple[np.ndarray, ...] = field(repr=False)
    U: tuple[np.ndarray, ...] = field(repr=False)
    rule: tuple[str, ...] = field(repr=False)
    star_set: frozenset[int] | None = None
    base_V: tuple[np.ndarray, ...] | None = field(default=None, repr=False)
    base_U: tuple[np.ndarray, ...] | None = field(default=None, repr=False)
    seed: int = 0

    @property
    def average_dof(self) -> float:
        return float(np.mean(self.d))

    def to_dict(self) -> dict:
        def enc(m: np.ndarray) -> list:
            return [[float(x.real), float(x.imag)] for x in m.reshape(-1)]

        return {
            "M": self.M,
            "seed": self.seed,
            "d": list(self.d),
            "rule": list(self.rule),
            "star_set": sorted(self.star_set) if self.star_set is not None else None,
            "V": [enc(v) for v in self.V],
            "U": [enc(u) for u in self.U],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _alignment_rules(g: InterferenceGraph) -> list[tuple[str, int | None, int | None]]:
    """For each node: (rule, source transmitter, shared receiver) or ('random', None, None)."""
    rules: list[tuple[str, int | None, int | None]] = []
    for n in g.nodes:
        z = n.label
        if n.coset is CosetClass.SQUARE:
            src, rx, tag = g.node_at(z - ONE - OMEGA), g.node_at(z - ONE), "a"
        elif n.coset is CosetClass.CIRCLE:
            src, rx, tag = g.node_at(z + ONE), g.node_at(z + ONE + OMEGA), "b"
        else:
            src, rx, tag = g.node_at(z + ONE + OMEGA), g.node_at(z + OMEGA), "c"
        if src is None or rx is None:
            rules.append(("random", None, None))
        else:
            rules.append((tag, src, rx))
    return rules


def _transmit_chain(
    g: InterferenceGraph,
    ch: ChannelSet,
    dim: int,
    rng: np.random.Generator,
) -> tuple[list[np.ndarray], list[str]]:
    rules = _alignment_rules(g)
    n = len(g)
    V: list[np.ndarray | None] = [None] * n
    for v, (tag, _, _) in enumerate(rules):
        if tag == "random":
            V[v] = random_orthonormal(rng, ch.M, dim)

    state = [0] * n  # 0 unvisited, 1 in progress, 2 done
    for start in range(n):
        if V[start] is not None:
            continue
        # iterative DFS along the dependency chain
        stack = [start]
        while stack:
            v = stack[-1]
            if V[v] is not None:
                stack.pop()
                continue
            _, src, rx = rules[v]
            if V[src] is None:
                if state[src] == 1:
                    raise DesignError(f"alignment dependency cycle through node {src}")
                state[v] = 1
                stack.append(src)
                continue
            try:
                mapped = np.linalg.solve(ch.H(rx, v), ch.H(rx, src) @ V[src])
            except np.linalg.LinAlgError as exc:
                raise DegenerateInputError(f"singular channel H[{rx},{v}]") from exc
            V[v] = orthonormalize(mapped)
            state[v] = 2
            stack.pop()
    return V, [t for t, _, _ in rules]  # type: ignore[return-value]


def _in_neighbors(n: int, directed: Iterable[tuple[int, int]]) -> list[list[int]]:
    inc: list[list[int]] = [[] for _ in range(n)]
    for tx, rx in directed:
        inc[rx].append(tx)
    return [sorted(x) for x in inc]


def _receive_filters(
    ch: ChannelSet,
    V: list[np.ndarray],
    incoming: list[list[int]],
    dim: int,
    rng: np.random.Generator,
) -> list[np.ndarray]:
    U = []
    for u, srcs in enumerate(incoming):
        if srcs:
            v = srcs[0]
            U.append(nullspace_basis(ch.H(u, v) @ V[v]))
        else:
            U.append(random_orthonormal(rng, ch.M, dim))
    return U


def select_star_set(
    g: InterferenceGraph, directed_out_edges: Iterable[tuple[int, int]]
) -> frozenset[int]:
    """Larger of the square / diamond classes (ties go to diamonds).

    The result is an independent set of the graph and no receiver outside it
    hears more than one of its members.
    """
    squares = g.nodes_of_coset(CosetClass.SQUARE)
    diamonds = g.nodes_of_coset(CosetClass.DIAMOND)
    star = frozenset(diamonds if len(diamonds) >= len(squares) else squares)
    for u, v in g.out_edges:
        if u in star and v in star:
            raise DesignError(f"star set is not independent: edge ({u}, {v})")
    hits = [0] * len(g)
    for tx, rx in directed_out_edges:
        if tx in star and rx not in star:
            hits[rx] += 1
    if max(hits, default=0) > 1:
        raise DesignError("a receiver hears more than one star-set transmitter")
    return star


def design(
    g: InterferenceGraph,
    directed_out_edges: Iterable[tuple[int, int]],
    channels: ChannelSet,
    M: int | None = None,
    seed: int = 0,
) -> BeamformerSet:
    """Alignment beamformers for the raster-order directed out-of-cell edges.

    ``seed`` drives the random boundary subspaces and the odd-``M``
    augmentation columns; the design never looks at a compound state.
    """
    M = channels.M if M is None else M
    if M != channels.M:
        raise ValueError(f"channels were sampled for M={channels.M}, not {M}")
    if len(channels.direct) != len(g):
        raise ValueError("channel set does not match the graph")
    directed = sorted(directed_out_edges)
    rng = np.random.default_rng(seed)
    n = len(g)
    incoming = _in_neighbors(n, directed)

    if M % 2 == 0:
        dim = M // 2
        V, rule = _transmit_chain(g, channels, dim, rng)
        U = _receive_filters(channels, V, incoming, dim, rng)
        return BeamformerSet(M, (dim,) * n, tuple(V), tuple(U), tuple(rule), seed=seed)

    base_d = (M - 1) // 2
    Vt, rule = _transmit_chain(g, channels, base_d, rng)
    Ut = _receive_filters(channels, Vt, incoming, base_d + 1, rng)
    star = select_star_set(g, directed)

    extra: dict[int, np.ndarray] = {}
    V, d = list(Vt), [base_d] * n
    for v in sorted(star):
        while True:
            col = (rng.standard_normal((M, 1)) + 1j * rng.standard_normal((M, 1))) / np.sqrt(2)
            col /= np.linalg.norm(col)
            resid = col - Vt[v] @ (Vt[v].conj().T @ col)
            # reject columns within ~1e-6 rad of span(Vt)
            if np.linalg.norm(resid) > 1e-6:
                break
        extra[v] = col
        V[v] = orthonormalize(np.hstack([Vt[v], col]))
        d[v] = base_d + 1

    U: list[np.ndarray] = []
    for u in range(n):
        if u in star:
            U.append(Ut[u])
            continue
        star_src = [v for v in incoming[u] if v in star]
        if star_src:
            v0 = star_src[0]
            proj = Ut[u].conj().T @ channels.H(u, v0) @ extra[v0]
            P = nullspace_basis(proj)
            U.append(orthonormalize(Ut[u] @ P) if P.shape[1] else Ut[u][:, :0])
        else:
            U.append(Ut[u][:, :base_d])
    return BeamformerSet(
        M,
        tuple(d),
        tuple(V),
        tuple(U),
        tuple(rule),
        star_set=star,
        base_V=tuple(Vt),
        base_U=tuple(Ut),
        seed=seed,
    )


@dataclass
class AlignmentReport:
    max_zero_forcing_residual: float
    min_desired_singular_value: float
    ok: bool
    edges: list[dict] = field(default_factory=list)
    desired: list[dict] = field(default_factory=list)

    def to_dict(self, details: bool = False) -> dict:
        out = {
            "max_zero_forcing_residual": self.max_zero_forcing_residual,
            "min_desired_singular_value": self.min_desired_singular_value,
            "ok": self.ok,
        }
        if details:
            out["edges"] = self.edges
            out["desired"] = self.desired
        return out


def verify_alignment(
    g: InterferenceGraph,
    directed_edges: Iterable[tuple[int, int]],
    channels: ChannelSet,
    bf: BeamformerSet,
    tol: float = 1e-6,
    residual_tol: float = 1e-8,
) -> AlignmentReport:
    """Zero-forcing residuals on every directed edge and desired-link conditioning.

    The residual of edge ``[v, u]`` is ``||U_u^H H_uv V_v||_F / ||H_uv||_F``.
    """
    edges = []
    max_res = 0.0
    for v, u in sorted(directed_edges):
        H = channels.H(u, v)
        res = float(np.linalg.norm(bf.U[u].conj().T @ H @ bf.V[v]) / np.linalg.norm(H))
        edges.append({"tx": v, "rx": u, "residual": res})
        max_res = max(max_res, res)
    desired = []
    min_sv = np.inf
    for v in range(len(g)):
        if bf.d[v] == 0:
            continue
        eff = bf.U[v].conj().T @ channels.H(v, v) @ bf.V[v]
        sv = float(np.linalg.svd(eff, compute_uv=False).min())
        desired.append({"node": v, "sigma_min": sv})
        min_sv = min(min_sv, sv)
    ok = max_res <= residual_tol and (min_sv > tol if desired else True)
    return AlignmentReport(max_res, float(min_sv), ok, edges, desired)


def check_orthonormal(bf: BeamformerSet, tol: float = 1e-10) -> float:
    """Largest Gram-matrix deviation from identity over all V and U."""
    worst = 0.0
    for m in (*bf.V, *bf.U):
        if m.shape[1] == 0:
            continue
        worst = max(worst, float(np.abs(m.conj().T @ m - np.eye(m.shape[1])).max()))
    return worst


def interference_rank(
    channels: ChannelSet,
    bf: BeamformerSet,
    u: int,
    sources: Iterable[int],
    V: Mapping[int, np.ndarray] | None = None,
) -> int:
    """Numerical rank of the stacked interference ``[H_uv V_v]`` seen at ``u``."""
    V = V if V is not None else dict(enumerate(bf.V))
    blocks = [channels.H(u, v) @ V[v] for v in sources]
    if not blocks:
        return 0
    return numerical_rank(np.hstack(blocks))
