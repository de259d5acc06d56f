"""Compound-state robustness of the cell decoders.

The local system around a full cell ``{a, b, c}`` with external diamond ``d``
is ``y~ = H~(alpha) s~`` with ``s~ = [s_a; s_b; s_c; s_d]`` and rows
``[y_a; U_b^H y_b; U_c^H y_c]``.  The eight bits
``alpha = [ab, ac, ad, ba, bc, ca, cb, cd]`` switch the corresponding cross
links (``xy`` is transmitter ``y`` heard at receiver ``x``).
"""

from __future__ import annotations

import itertools
import json
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .beamforming import BeamformerSet, numerical_rank
from .channels import ChannelSet, CompoundState, apply_compound
from .decode import Mode, SimulationConfig, SimulationResult, simulate
from .graph import Cell, InterferenceGraph
from .order import EdgeSelector, order_pi_s, order_pi_star, orient_edges

ALPHA_LINKS = ("ab", "ac", "ad", "ba", "bc", "ca", "cb", "cd")
JOINT_FAILURE_STATE = (0, 0, 0, 0, 1, 0, 1, 1)
SPAN_TOL = 1e-8


def rowspan_contains(H: np.ndarray, target: np.ndarray, tol: float = SPAN_TOL) -> bool:
    """Whether the row vector ``target`` is a combination of the rows of ``H``."""
    H = np.atleast_2d(np.asarray(H, dtype=complex))
    t = np.asarray(target, dtype=complex).reshape(-1)
    if H.shape[1] != t.size:
        raise ValueError("target length must match the column count")
    nt = np.linalg.norm(t)
    if nt == 0:
        return True
    if H.shape[0] == 0:
        return False
    # solve H^T x = t in the least-squares sense (rank-revealing SVD inside lstsq)
    x = np.linalg.lstsq(H.T, t, rcond=None)[0]
    return bool(np.linalg.norm(H.T @ x - t) <= tol * nt)


def blocks_identifiable(H: np.ndarray, cols: slice | Sequence[int]) -> bool:
    """Every unit row selecting one of ``cols`` lies in ``rowspan(H)``."""
    idx = range(H.shape[1])[cols] if isinstance(cols, slice) else cols
    if len(idx) == 0:
        return True
    E = np.eye(H.shape[1])
    return all(rowspan_contains(H, E[j]) for j in idx)


# -- masked Gaussian matrices -----------------------------------------------


def hadamard_full_rank_trial(n: int, mask: np.ndarray, seed: int) -> bool:
    """Gaussian ``H`` masked pointwise by a unit-diagonal 0/1 ``mask``: full rank?"""
    mask = np.asarray(mask)
    if mask.shape != (n, n):
        raise ValueError(f"mask must be {n}x{n}")
    if not np.all(np.diag(mask) == 1):
        raise ValueError("mask diagonal must be all ones")
    rng = np.random.default_rng(seed)
    H = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    return numerical_rank(mask * H) == n


def mask_families(n: int, rng: np.random.Generator) -> dict[str, np.ndarray]:
    """Representative unit-diagonal masks; ``random`` is redrawn per call."""
    rand = (rng.random((n, n)) < 0.5).astype(int)
    np.fill_diagonal(rand, 1)
    return {
        "identity": np.eye(n, dtype=int),
        "all-ones": np.ones((n, n), dtype=int),
        "upper": np.triu(np.ones((n, n), dtype=int)),
        "lower": np.tril(np.ones((n, n), dtype=int)),
        "random": rand,
    }


def hadamard_sweep(n_max: int = 6, trials: int = 1000, seed: int = 0) -> dict[str, dict[int, int]]:
    """Full-rank counts per mask family and size."""
    out: dict[str, dict[int, int]] = {}
    rng = np.random.default_rng(seed)
    seeds = iter(np.random.SeedSequence(seed).generate_state(n_max * trials * 5))
    for n in range(1, n_max + 1):
        for _ in range(trials):
            for name, mask in mask_families(n, rng).items():
                ok = hadamard_full_rank_trial(n, mask, seed=int(next(seeds)))
                out.setdefault(name, {}).setdefault(n, 0)
                out[name][n] += int(ok)
    return out


# -- local cell system -----------------------------------------------------


def classify_case(alpha: Sequence[int]) -> int:
    """Case 1: ``cd = 0``; case 2: ``ad = 1``; else case 3 / 4 on ``ab * ac``."""
    if len(alpha) != 8:
        raise ValueError("alpha must have 8 bits")
    a = dict(zip(ALPHA_LINKS, alpha))
    if a["cd"] == 0:
        return 1
    if a["ad"] == 1:
        return 2
    return 4 if a["ab"] * a["ac"] == 1 else 3


@dataclass
class LocalCell:
    """Per-block pieces of the cell system for one channel draw."""

    d: dict[str, int]
    raw: dict[tuple[str, str], np.ndarray]  # observation block of receiver x for transmitter y
    Ua: np.ndarray


def local_cell(ch: ChannelSet, bf: BeamformerSet, cell: Cell) -> LocalCell:
    if not cell.is_full or cell.external_d is None:
        raise ValueError("local robustness analysis needs a full cell with its external d")
    ids = {"a": cell.primary, "b": cell.secondary_b, "c": cell.secondary_c, "d": cell.external_d}
    raw = {}
    for x in "abc":
        W = np.eye(ch.M) if x == "a" else bf.U[ids[x]].conj().T
        for y in "abcd":
            if x == "b" and y == "d":
                continue
            raw[(x, y)] = W @ ch.H(ids[x], ids[y]) @ bf.V[ids[y]]
    d = {k: bf.d[v] for k, v in ids.items()}
    return LocalCell(d, raw, bf.U[ids["a"]])


def _alpha(bits: Sequence[int], x: str, y: str) -> int:
    if x == y:
        return 1
    key = x + y
    return dict(zip(ALPHA_LINKS, bits)).get(key, 0)


def cell_matrix(
    lc: LocalCell,
    bits: Sequence[int],
    rows: str = "abc",
    cols: str = "abcd",
    project_a: bool = False,
) -> np.ndarray:
    """Masked stacked matrix for the chosen receivers and unknown transmitters."""
    blocks = []
    for x in rows:
        row = []
        for y in cols:
            blk = lc.raw.get((x, y))
            if blk is None:
                blk = np.zeros((lc.raw[(x, x)].shape[0], lc.d[y]), dtype=complex)
            blk = blk * _alpha(bits, x, y)
            if x == "a" and project_a:
                blk = lc.Ua.conj().T @ blk
            row.append(blk)
        blocks.append(np.hstack(row))
    return np.vstack(blocks)


def _col_slices(lc: LocalCell, cols: str) -> dict[str, slice]:
    out, k = {}, 0
    for y in cols:
        out[y] = slice(k, k + lc.d[y])
        k += lc.d[y]
    return out


def _noiseless_ok(A: np.ndarray, sl: slice, rng: np.random.Generator, tol: float = 1e-6) -> bool:
    s = (rng.standard_normal(A.shape[1]) + 1j * rng.standard_normal(A.shape[1])) / np.sqrt(2)
    est = np.linalg.pinv(A, rcond=1e-10) @ (A @ s)
    return bool(np.max(np.abs(est[sl] - s[sl]), initial=0.0) <= tol)


def decode_pi_s(lc: LocalCell, bits: Sequence[int], rng: np.random.Generator) -> dict[str, bool]:
    """Primary from the 4-block system via the rowspan test, then the ``{b, c}`` pair."""
    A = cell_matrix(lc, bits)
    sl = _col_slices(lc, "abcd")
    ok_a = blocks_identifiable(A, sl["a"]) and _noiseless_ok(A, sl["a"], rng)
    # s_a and s_d cancelled; projected observations of b and c only
    B = cell_matrix(lc, bits, rows="bc", cols="bc")
    full = numerical_rank(B) == B.shape[1]
    slb = _col_slices(lc, "bc")
    ok_b = full and _noiseless_ok(B, slb["b"], rng)
    ok_c = full and _noiseless_ok(B, slb["c"], rng)
    return {"a": ok_a, "b": ok_b, "c": ok_c}


def decode_pi_star_joint(lc: LocalCell, bits: Sequence[int], rng: np.random.Generator) -> dict[str, bool]:
    """Joint cell decoding at the primary's turn: needs full column rank."""
    A = cell_matrix(lc, bits)
    sl = _col_slices(lc, "abcd")
    full = numerical_rank(A) == A.shape[1]
    out = {}
    for k in "abc":
        out[k] = full and blocks_identifiable(A, sl[k]) and _noiseless_ok(A, sl[k], rng)
    return out


def member_identifiability(lc: LocalCell, bits: Sequence[int]) -> dict[str, bool]:
    """Which of ``s_a, s_b, s_c`` the 4-block system pins down on its own."""
    A = cell_matrix(lc, bits)
    sl = _col_slices(lc, "abcd")
    return {k: blocks_identifiable(A, sl[k]) for k in "abc"}


def case_oracle(lc: LocalCell, bits: Sequence[int]) -> bool:
    """Primary decodability by the case-specific recipe.

    The recipes assume every node carries the same number of streams (even
    ``M``).  With odd ``M`` the case-4 full solve can be rank deficient while
    ``s_a`` is still recoverable, so disagreements there are expected.
    """
    case = classify_case(bits)
    a = dict(zip(ALPHA_LINKS, bits))
    if case == 1:
        # U_a already nulls H_ad V_d; solve the 3-block projected system
        A = cell_matrix(lc, bits, cols="abc", project_a=True)
        return numerical_rank(A) == A.shape[1]
    if case in (2, 4):
        A = cell_matrix(lc, bits)
        return numerical_rank(A) == A.shape[1]
    # case 3: at most one interferer at a, zero-forced from y_a alone
    cols = "a" + "".join(k for k in "bc" if a["a" + k])
    A = cell_matrix(lc, bits, rows="a", cols=cols)
    return blocks_identifiable(A, _col_slices(lc, cols)["a"])


@dataclass
class RobustnessReport:
    cell: str
    mode: str
    configs_tested: int
    failures: list[tuple[tuple[int, ...], str]] = field(default_factory=list)
    dC_achieved: float = 0.0
    case_histogram: dict[int, int] = field(default_factory=dict)
    oracle_disagreements: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["failures"] = [{"alpha": list(b), "node": n} for b, n in self.failures]
        d["case_histogram"] = {str(k): v for k, v in sorted(self.case_histogram.items())}
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def check_cell_alignment(g: InterferenceGraph, ch: ChannelSet, bf: BeamformerSet, cell: Cell) -> float:
    """Largest zero-forcing residual on the out-of-cell in-edges of the cell's receivers."""
    worst = 0.0
    members = set(cell.members)
    for v, u in orient_edges(g, order_pi_star(g), EdgeSelector.OUT):
        if u in members:
            H = ch.H(u, v)
            worst = max(worst, float(np.linalg.norm(bf.U[u].conj().T @ H @ bf.V[v]) / np.linalg.norm(H)))
    return worst


def sweep_neighborhood(
    g: InterferenceGraph,
    channels: ChannelSet,
    bf: BeamformerSet,
    cell: Cell,
    mode: str = "pi_s_robust",
    seed: int = 0,
) -> RobustnessReport:
    """Decode the cell under all 256 local compound states.

    Interference from outside the neighbourhood is idealised: earlier
    decoders' messages are cancelled exactly and later transmitters are
    zero-forced by the design (checked before the sweep).
    """
    if mode not in ("pi_s_robust", "pi_star_joint"):
        raise ValueError(f"unknown mode {mode!r}")
    res = check_cell_alignment(g, channels, bf, cell)
    if res > 1e-8:
        raise ValueError(f"design does not zero-force around the cell (residual {res:.2e})")
    lc = local_cell(channels, bf, cell)
    rng = np.random.default_rng(seed)
    report = RobustnessReport(str(cell.label), mode, 0)
    worst = np.inf
    for bits in itertools.product((0, 1), repeat=8):
        report.configs_tested += 1
        case = classify_case(bits)
        report.case_histogram[case] = report.case_histogram.get(case, 0) + 1
        ok = decode_pi_s(lc, bits, rng) if mode == "pi_s_robust" else decode_pi_star_joint(lc, bits, rng)
        for k in "abc":
            if not ok[k]:
                report.failures.append((bits, k))
        if mode == "pi_s_robust" and case_oracle(lc, bits) != ok["a"]:
            report.oracle_disagreements += 1
        got = sum(lc.d[k] for k in "abc" if ok[k])
        worst = min(worst, got / 3)
    report.dC_achieved = float(worst)
    return report


def simulate_robust_full(
    g: InterferenceGraph,
    channels: ChannelSet,
    bf: BeamformerSet,
    cfg: SimulationConfig,
    state: CompoundState,
) -> SimulationResult:
    """Whole-network decode along the curly-S order under a compound state."""
    if cfg.mode is not Mode.ROBUST:
        cfg = SimulationConfig(**{**cfg.to_dict(), "mode": Mode.ROBUST})
    return simulate(g, order_pi_s(g), apply_compound(channels, state), bf, cfg)


def secondary_pair_conditions(lc: LocalCell) -> dict[tuple[int, int], float]:
    """``sigma_min / sigma_max`` of the pair matrix for each ``(alpha_bc, alpha_cb)``."""
    out = {}
    for bc, cb in itertools.product((0, 1), repeat=2):
        bits = [0] * 8
        bits[ALPHA_LINKS.index("bc")] = bc
        bits[ALPHA_LINKS.index("cb")] = cb
        s = np.linalg.svd(cell_matrix(lc, bits, rows="bc", cols="bc"), compute_uv=False)
        out[(bc, cb)] = float(s[-1] / s[0])
    return out
