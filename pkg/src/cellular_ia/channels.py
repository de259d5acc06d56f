"""Random MIMO channel matrices and compound (link on/off) states.

Matrices are keyed ``(rx, tx)`` so ``cross[(v, u)]`` is ``H_vu``, the gain
from transmitter ``u`` to receiver ``v``.  Direct links are keyed by node.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .graph import InterferenceGraph

RNG_ALGORITHM = "numpy.random.Generator(PCG64)"

Link = tuple[int, int]


@dataclass(frozen=True)
class ChannelSet:
    M: int
    direct: Mapping[int, np.ndarray]
    cross: Mapping[Link, np.ndarray]
    seed: int

    def H(self, rx: int, tx: int) -> np.ndarray:
        if rx == tx:
            return self.direct[rx]
        return self.cross[(rx, tx)]

    def to_dict(self) -> dict:
        """Row-major ``[re, im]`` pairs for every matrix."""

        def enc(m: np.ndarray) -> list:
            return [[float(x.real), float(x.imag)] for x in m.reshape(-1)]

        return {
            "M": self.M,
            "seed": self.seed,
            "rng": RNG_ALGORITHM,
            "direct": {str(v): enc(m) for v, m in sorted(self.direct.items())},
            "cross": [
                {"rx": rx, "tx": tx, "H": enc(m)} for (rx, tx), m in sorted(self.cross.items())
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: Mapping) -> "ChannelSet":
        M = int(data["M"])

        def dec(pairs) -> np.ndarray:
            arr = np.asarray(pairs, dtype=float)
            return (arr[:, 0] + 1j * arr[:, 1]).reshape(M, M)

        direct = {int(v): dec(p) for v, p in data["direct"].items()}
        cross = {(int(e["rx"]), int(e["tx"])): dec(e["H"]) for e in data["cross"]}
        return cls(M, direct, cross, int(data["seed"]))


@dataclass(frozen=True)
class CompoundState:
    """Presence bit per cross link (``alpha[(rx, tx)]``)."""

    alpha: Mapping[Link, int]

    @classmethod
    def all_ones(cls, ch: ChannelSet) -> "CompoundState":
        return cls({k: 1 for k in ch.cross})

    @classmethod
    def all_zeros(cls, ch: ChannelSet) -> "CompoundState":
        return cls({k: 0 for k in ch.cross})

    @classmethod
    def random(cls, ch: ChannelSet, rng: np.random.Generator, p_on: float = 0.5) -> "CompoundState":
        keys = sorted(ch.cross)
        bits = rng.random(len(keys)) < p_on
        return cls({k: int(b) for k, b in zip(keys, bits)})


def link_keys(g: InterferenceGraph) -> list[Link]:
    """Both orientations of every edge, sorted."""
    keys = []
    for u, v in (*g.out_edges, *g.intra_edges):
        keys.append((u, v))
        keys.append((v, u))
    return sorted(keys)


def _cn(rng: np.random.Generator, M: int) -> np.ndarray:
    # CN(0,1): real and imaginary parts N(0, 1/2); drawn row-major, re before im
    x = rng.standard_normal((M, M, 2)) * np.sqrt(0.5)
    return x[..., 0] + 1j * x[..., 1]


def sample_channels(g: InterferenceGraph, M: int, seed: int) -> ChannelSet:
    """i.i.d. CN(0,1) matrices for all direct and cross links.

    Draw order is lexicographic over the link key ``(rx, tx)`` with direct
    links keyed ``(v, v)``.
    """
    if M < 1:
        raise ValueError(f"M must be >= 1, got {M}")
    rng = np.random.default_rng(seed)
    keys = sorted([(v, v) for v in range(len(g))] + link_keys(g))
    direct: dict[int, np.ndarray] = {}
    cross: dict[Link, np.ndarray] = {}
    for rx, tx in keys:
        m = _cn(rng, M)
        if rx == tx:
            direct[rx] = m
        else:
            cross[(rx, tx)] = m
    return ChannelSet(M, direct, cross, seed)


def apply_compound(ch: ChannelSet, state: CompoundState) -> ChannelSet:
    """Scale every cross matrix by its presence bit; direct links are untouched."""
    if set(state.alpha) != set(ch.cross):
        raise ValueError("compound state keys do not match the channel's cross links")
    cross = {k: m * state.alpha[k] for k, m in ch.cross.items()}
    return ChannelSet(ch.M, ch.direct, cross, ch.seed)
