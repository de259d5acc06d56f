"""Transmission and message-passing decode simulation.

A decode run is compiled into a list of :class:`DecodeStep` objects from the
graph, the order and the mode alone; executing the plan then only needs the
channels, beamformers and random symbols.  Each step stacks observations
(raw ``y`` or projected ``U^H y``), cancels the messages of neighbours that
were released earlier, and solves the residual linear system by minimum-norm
least squares.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .beamforming import BeamformerSet, numerical_rank
from .channels import ChannelSet
from .graph import InterferenceGraph
from .order import DecodingOrder, EdgeSelector, OrderKind, orient_edges, order_pi_star

IDENT_TOL = 1e-8


class SymbolModel(str, enum.Enum):
    GAUSSIAN = "gaussian"
    QPSK = "qpsk"


class Mode(str, enum.Enum):
    NO_INTRA = "no-intra"
    INTRA_JOINT = "intra-joint"
    ROBUST = "robust"


class DecodeContractError(AssertionError):
    """A decode step read a message it should not have access to."""


@dataclass(frozen=True)
class SimulationConfig:
    power: float = 1e4
    noise_variance: float = 0.0
    symbol_model: SymbolModel = SymbolModel.GAUSSIAN
    mode: Mode = Mode.NO_INTRA
    tolerance: float = 1e-6
    trials: int = 1
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.power > 0:
            raise ValueError(f"power must be > 0, got {self.power}")
        if self.noise_variance < 0:
            raise ValueError(f"noise_variance must be >= 0, got {self.noise_variance}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        object.__setattr__(self, "symbol_model", SymbolModel(self.symbol_model))
        object.__setattr__(self, "mode", Mode(self.mode))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["symbol_model"] = self.symbol_model.value
        d["mode"] = self.mode.value
        return d


@dataclass
class NodeResult:
    node: int
    d: int
    decoded: bool
    symbol_error: float
    effective_channel_sigma_min: float
    rate_bits: float


@dataclass
class SimulationResult:
    nodes: list[NodeResult]
    avg_rate: float
    avg_dof_achieved: float
    avg_dof_estimate: float
    max_alignment_residual: float
    max_cancellation_residual: float
    config: SimulationConfig = field(repr=False)

    @property
    def all_decoded(self) -> bool:
        return all(n.decoded for n in self.nodes)

    @property
    def max_symbol_error(self) -> float:
        return max((n.symbol_error for n in self.nodes), default=0.0)

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "nodes": [asdict(n) for n in self.nodes],
            "aggregate": {
                "all_decoded": self.all_decoded,
                "max_symbol_error": self.max_symbol_error,
                "avg_rate": self.avg_rate,
                "avg_dof_achieved": self.avg_dof_achieved,
                "avg_dof_estimate": self.avg_dof_estimate,
                "max_alignment_residual": self.max_alignment_residual,
                "max_cancellation_residual": self.max_cancellation_residual,
            },
        }


@dataclass(frozen=True)
class DecodeStep:
    rank: int
    targets: tuple[int, ...]
    observers: tuple[tuple[int, bool], ...]  # (receiver, projected)
    unknowns: tuple[int, ...]
    known: tuple[tuple[int, tuple[int, ...]], ...]  # per observer: released neighbours
    full_rank: bool


def _neighbors(g: InterferenceGraph, mode: Mode) -> list[tuple[int, ...]]:
    if mode is Mode.NO_INTRA or not g.include_intra:
        return list(g.out_neighbors)
    return [tuple(sorted(set(a) | set(b))) for a, b in zip(g.out_neighbors, g.intra_neighbors)]


def _groups(g: InterferenceGraph, mode: Mode) -> list[tuple[list[int], int | None, int | None]]:
    """Decode groups as (members, primary, external d)."""
    if mode is Mode.NO_INTRA or not g.include_intra:
        return [([v], None, None) for v in range(len(g))]
    out = []
    for c in g.cells:
        out.append((list(c.members), c.primary, c.external_d))
    return out


def build_plan(
    g: InterferenceGraph,
    order: DecodingOrder,
    mode: Mode | str,
    zero_forced: frozenset[tuple[int, int]],
) -> list[DecodeStep]:
    """Compile the decode schedule.

    ``zero_forced`` holds the directed out-of-cell edges ``(v, u)`` whose
    interference the receive filter ``U_u`` removes.
    """
    mode = Mode(mode)
    want = OrderKind.PI_S if mode is Mode.ROBUST else OrderKind.PI_STAR
    if order.kind is not want:
        raise ValueError(f"mode {mode.value} needs the {want.value} order")
    nbrs = _neighbors(g, mode)
    rank = order.rank

    # (rank, targets, observers-with-flags, full_rank)
    raw_steps: list[tuple[int, list[int], list[tuple[int, bool]], bool]] = []
    for members, primary, ext_d in _groups(g, mode):
        if len(members) == 1:
            v = members[0]
            raw_steps.append((rank[v], [v], [(v, True)], True))
            continue
        raw_primary = primary is not None and ext_d is not None
        obs = [(v, not (raw_primary and v == primary)) for v in members]
        if mode is Mode.INTRA_JOINT:
            raw_steps.append((min(rank[v] for v in members), members, obs, True))
        else:
            secs = [v for v in members if v != primary]
            if primary is not None:
                raw_steps.append((rank[primary], [primary], obs, False))
            sec_obs = [(v, True) for v in secs]
            raw_steps.append((min(rank[v] for v in secs), secs, sec_obs, True))

    raw_steps.sort(key=lambda s: (s[0], s[1]))
    plan = []
    for step_rank, targets, obs, full in raw_steps:
        unknowns = set(targets)
        known = []
        for o, projected in obs:
            rel = []
            for v in nbrs[o]:
                if rank[v] < step_rank:
                    rel.append(v)
                elif not (projected and (v, o) in zero_forced):
                    unknowns.add(v)
            known.append((o, tuple(rel)))
        unk = tuple(sorted(unknowns, key=lambda v: (v not in targets, targets.index(v) if v in targets else v)))
        plan.append(DecodeStep(step_rank, tuple(targets), tuple(obs), unk, tuple(known), full))
    return plan


def _draw_symbols(rng: np.random.Generator, d: int, model: SymbolModel) -> np.ndarray:
    if model is SymbolModel.QPSK:
        bits = rng.integers(0, 2, size=(d, 2))
        return ((2 * bits[:, 0] - 1) + 1j * (2 * bits[:, 1] - 1)) / np.sqrt(2)
    return (rng.standard_normal(d) + 1j * rng.standard_normal(d)) / np.sqrt(2)


def _complement_basis(B: np.ndarray, m: int) -> np.ndarray:
    if B.shape[1] == 0:
        return np.eye(m, dtype=complex)
    u, s, _ = np.linalg.svd(B, full_matrices=True)
    tol = 1e-9 * (s[0] if s.size else 0.0) * max(B.shape)
    k = int(np.sum(s > tol))
    return u[:, k:]


def ql_decompose(H: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Thin QL factorization ``H = Q L`` (``Q`` orthonormal columns, ``L`` lower triangular)."""
    q, r = np.linalg.qr(H[:, ::-1])
    return q[:, ::-1], r[::-1, ::-1]


def joint_cell_decode(
    y: np.ndarray,
    H: np.ndarray,
    block_sizes: Sequence[int],
    method: str = "ls",
    tol: float = IDENT_TOL,
) -> list[np.ndarray] | None:
    """Solve ``y = H s`` for the stacked cell unknowns.

    Returns the symbol blocks, or ``None`` if ``H`` lacks full column rank.
    ``method="ql"`` decodes the blocks successively: ``Q^H y = L s`` with ``L``
    lower triangular, so the first block is recovered first.
    """
    if sum(block_sizes) != H.shape[1]:
        raise ValueError("block sizes do not match the column count")
    if H.shape[1] > H.shape[0] or numerical_rank(H) < H.shape[1]:
        return None
    if method == "ls":
        s = np.linalg.lstsq(H, y, rcond=None)[0]
    elif method == "ql":
        Q, L = ql_decompose(H)
        rhs = Q.conj().T @ y
        s = np.zeros(H.shape[1], dtype=complex)
        for i in range(H.shape[1]):
            s[i] = (rhs[i] - L[i, :i] @ s[:i]) / L[i, i]
    else:
        raise ValueError(f"unknown method {method!r}")
    out, k = [], 0
    for n in block_sizes:
        out.append(s[k : k + n])
        k += n
    return out


@dataclass
class _StepSystem:
    A: np.ndarray
    cols: dict[int, slice]
    rows: list[tuple[int, bool, slice]]


def _step_matrix(step: DecodeStep, ch: ChannelSet, bf: BeamformerSet, nbrs) -> _StepSystem:
    cols, k = {}, 0
    for v in step.unknowns:
        cols[v] = slice(k, k + bf.d[v])
        k += bf.d[v]
    blocks, rows, r0 = [], [], 0
    for o, projected in step.observers:
        W = bf.U[o].conj().T if projected else np.eye(ch.M, dtype=complex)
        row = np.zeros((W.shape[0], k), dtype=complex)
        reach = set(nbrs[o]) | {o}
        for v in step.unknowns:
            if v in reach:
                row[:, cols[v]] = W @ ch.H(o, v) @ bf.V[v]
        blocks.append(row)
        rows.append((o, projected, slice(r0, r0 + W.shape[0])))
        r0 += W.shape[0]
    A = np.vstack(blocks) if blocks else np.zeros((0, k), dtype=complex)
    return _StepSystem(A, cols, rows)


def _identifiable(A: np.ndarray, cols: slice) -> bool:
    # e_j in rowspan(A) for every column j of the target block
    n = A.shape[1]
    if n == 0 or A.shape[0] == 0:
        return False
    P = np.linalg.pinv(A, rcond=1e-10) @ A
    E = np.eye(n)[:, cols]
    return bool(np.linalg.norm(P[:, cols] - E) <= IDENT_TOL * math.sqrt(E.shape[1]))


def effective_channels(
    plan: Sequence[DecodeStep],
    ch: ChannelSet,
    bf: BeamformerSet,
    g: InterferenceGraph,
    mode: Mode,
) -> dict[int, tuple[np.ndarray | None, bool]]:
    """Per node: post-cancellation, post-projection desired channel and decodability."""
    nbrs = _neighbors(g, mode)
    out: dict[int, tuple[np.ndarray | None, bool]] = {}
    for step in plan:
        sys = _step_matrix(step, ch, bf, nbrs)
        full = numerical_rank(sys.A) == sys.A.shape[1] if step.full_rank else True
        for t in step.targets:
            c = sys.cols[t]
            ok = full and _identifiable(sys.A, c)
            others = np.delete(sys.A, np.arange(sys.A.shape[1])[c], axis=1)
            Qp = _complement_basis(others, sys.A.shape[0])
            out[t] = (Qp.conj().T @ sys.A[:, c], ok)
    return out


def _rate(Heff: np.ndarray | None, snr_per_stream: float) -> float:
    if Heff is None or Heff.shape[1] == 0:
        return 0.0
    G = np.eye(Heff.shape[1]) + snr_per_stream * (Heff.conj().T @ Heff)
    sign, logdet = np.linalg.slogdet(G)
    return float(logdet / np.log(2))


def _sigma_min(Heff: np.ndarray | None) -> float:
    if Heff is None or Heff.size == 0:
        return 0.0
    return float(np.linalg.svd(Heff, compute_uv=False).min())


def _alignment_residual(g: InterferenceGraph, ch: ChannelSet, bf: BeamformerSet) -> float:
    worst = 0.0
    for v, u in orient_edges(g, order_pi_star(g), EdgeSelector.OUT):
        H = ch.H(u, v)
        nh = np.linalg.norm(H)
        if nh == 0:
            continue
        worst = max(worst, float(np.linalg.norm(bf.U[u].conj().T @ H @ bf.V[v]) / nh))
    return worst


def simulate(
    g: InterferenceGraph,
    order: DecodingOrder,
    channels: ChannelSet,
    bf: BeamformerSet,
    cfg: SimulationConfig,
) -> SimulationResult:
    """Transmit, then decode along the order in the configured mode.

    ``channels`` is what the receivers experience (already compound-masked if
    relevant).  A decode that succeeds forwards the message itself to the
    neighbours, as a decoded codeword would be; in noiseless mode success
    also requires the estimate to be within ``cfg.tolerance``.  A failed
    decode forwards its (possibly useless) estimate so errors propagate.
    """
    mode = cfg.mode
    n = len(g)
    ref_edges = orient_edges(g, order_pi_star(g), EdgeSelector.OUT)
    plan = build_plan(g, order, mode, ref_edges)
    nbrs = _neighbors(g, mode)
    P, sigma2 = cfg.power, cfg.noise_variance
    amp = [math.sqrt(P / bf.d[v]) if bf.d[v] else 0.0 for v in range(n)]

    eff = effective_channels(plan, channels, bf, g, mode)
    snr_ref = P / (sigma2 if sigma2 > 0 else 1.0)
    rates = [_rate(eff[v][0], snr_ref / bf.d[v]) if bf.d[v] else 0.0 for v in range(n)]

    decoded = [True] * n
    sym_err = [0.0] * n
    max_cancel = 0.0
    systems = [_step_matrix(step, channels, bf, nbrs) for step in plan]
    full_ok = [numerical_rank(s.A) == s.A.shape[1] if st.full_rank else True for st, s in zip(plan, systems)]

    for trial in range(cfg.trials):
        rng = np.random.default_rng([cfg.seed, trial])
        s_true = [amp[v] * _draw_symbols(rng, bf.d[v], cfg.symbol_model) for v in range(n)]
        x = [bf.V[v] @ s_true[v] for v in range(n)]
        noise = [
            math.sqrt(sigma2) * (rng.standard_normal(channels.M) + 1j * rng.standard_normal(channels.M)) / math.sqrt(2)
            for _ in range(n)
        ]
        y = []
        for u in range(n):
            acc = channels.H(u, u) @ x[u] + noise[u]
            for v in nbrs[u]:
                acc = acc + channels.H(u, v) @ x[v]
            y.append(acc)

        released: dict[int, np.ndarray] = {}
        release_rank: dict[int, int] = {}
        for step, sys, full in zip(plan, systems, full_ok):
            parts = []
            for (o, projected, rs), (o2, rel) in zip(sys.rows, step.known):
                assert o == o2
                W = bf.U[o].conj().T if projected else np.eye(channels.M, dtype=complex)
                obs = W @ y[o]
                for v in rel:
                    if v not in released or release_rank[v] >= step.rank:
                        raise DecodeContractError(f"step at rank {step.rank} read unreleased message of {v}")
                    if v not in nbrs[o]:
                        raise DecodeContractError(f"receiver {o} read message of non-neighbour {v}")
                    obs = obs - W @ channels.H(o, v) @ bf.V[v] @ released[v]
                parts.append(obs)
            rhs = np.concatenate(parts)
            if sigma2 == 0:
                s_unk = np.concatenate([s_true[v] for v in step.unknowns])
                ref = max(np.linalg.norm(rhs), 1e-300)
                max_cancel = max(max_cancel, float(np.linalg.norm(rhs - sys.A @ s_unk) / ref))
            est = np.linalg.pinv(sys.A, rcond=1e-10) @ rhs
            for t in step.targets:
                if bf.d[t] == 0:
                    released[t] = np.zeros(0, dtype=complex)
                    release_rank[t] = order.rank[t]
                    continue
                ok = full and eff[t][1]
                s_hat = est[sys.cols[t]] if ok else np.zeros(bf.d[t], dtype=complex)
                err = float(np.max(np.abs(s_hat - s_true[t])) / amp[t])
                sym_err[t] = max(sym_err[t], err)
                # a verified decode forwards the message itself, not the soft estimate
                verified = ok and (sigma2 > 0 or err <= cfg.tolerance)
                decoded[t] = decoded[t] and verified
                released[t] = s_true[t] if verified else s_hat
                release_rank[t] = order.rank[t]

    nodes = [
        NodeResult(
            node=v,
            d=bf.d[v],
            decoded=decoded[v],
            symbol_error=sym_err[v],
            effective_channel_sigma_min=_sigma_min(eff[v][0]),
            rate_bits=rates[v],
        )
        for v in range(n)
    ]
    avg_rate = float(np.mean(rates))
    return SimulationResult(
        nodes=nodes,
        avg_rate=avg_rate,
        avg_dof_achieved=float(np.mean([bf.d[v] if decoded[v] else 0 for v in range(n)])),
        avg_dof_estimate=avg_rate / math.log2(1 + snr_ref),
        max_alignment_residual=_alignment_residual(g, channels, bf),
        max_cancellation_residual=max_cancel,
        config=cfg,
    )


def rate_slope(r1: float, r2: float, P1: float, P2: float) -> float:
    return (r2 - r1) / (math.log2(P2) - math.log2(P1))


def estimate_dof(
    g: InterferenceGraph,
    order: DecodingOrder,
    channels: ChannelSet,
    bf: BeamformerSet,
    cfg: SimulationConfig,
    P1: float,
    P2: float,
) -> list[float]:
    """Per-node high-SNR rate slope between powers ``P1`` and ``P2``.

    Rates use ``log2 det(I + P/(d sigma^2) Heff^H Heff)`` with ``sigma^2`` the
    configured noise variance (1 when the config is noiseless).
    """
    if not P2 > P1 > 0:
        raise ValueError("need P2 > P1 > 0")
    plan = build_plan(g, order, cfg.mode, orient_edges(g, order_pi_star(g), EdgeSelector.OUT))
    eff = effective_channels(plan, channels, bf, g, cfg.mode)
    sigma2 = cfg.noise_variance if cfg.noise_variance > 0 else 1.0
    out = []
    for v in range(len(g)):
        if bf.d[v] == 0:
            out.append(0.0)
            continue
        H = eff[v][0]
        r1 = _rate(H, P1 / (sigma2 * bf.d[v]))
        r2 = _rate(H, P2 / (sigma2 * bf.d[v]))
        out.append(rate_slope(r1, r2, P1, P2))
    return out


def slope_from_channel(H: np.ndarray, d: int, P1: float, P2: float, sigma2: float = 1.0) -> float:
    """Rate slope of a single effective channel; a zero channel gives 0."""
    return rate_slope(_rate(H, P1 / (sigma2 * d)), _rate(H, P2 / (sigma2 * d)), P1, P2)


def per_node_table(result: SimulationResult) -> list[Mapping]:
    return [asdict(n) for n in result.nodes]
