"""Compound-state robustness: local 256-state sweeps and whole-network random states.

For each seed the script sweeps every full cell under both local decoders and
then draws random compound states for the whole network, decoding them with
the curly-S robust pipeline and with joint cell decoding along the raster
order.  The latter has no robustness guarantee and its failure rate is
reported for contrast.

    python scripts/robustness_sweep.py --r 3 --M 2 --seeds 5 --states 50
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass

import numpy as np

from cellular_ia.beamforming import design
from cellular_ia.channels import CompoundState, apply_compound, sample_channels
from cellular_ia.decode import SimulationConfig, simulate
from cellular_ia.graph import build_graph
from cellular_ia.order import EdgeSelector, order_pi_star, orient_edges
from cellular_ia.robustness import simulate_robust_full, sweep_neighborhood


@dataclass
class Config:
    r: int = 3
    M: int = 2
    seeds: int = 5
    states: int = 50
    p_on: float = 0.5


def run(cfg: Config) -> dict:
    g = build_graph(cfg.r)
    E = orient_edges(g, order_pi_star(g), EdgeSelector.OUT)
    cells = [c for c in g.cells if c.is_full and c.external_d is not None]
    local = {"pi_s_robust": [0, 0], "pi_star_joint": [0, 0]}  # failed configs, configs
    network = {"robust": [0, 0], "intra-joint": [0, 0]}  # failed runs, runs
    for s in range(cfg.seeds):
        ch = sample_channels(g, cfg.M, s)
        bf = design(g, E, ch, seed=s)
        for c in cells:
            for mode in local:
                rep = sweep_neighborhood(g, ch, bf, c, mode, seed=s)
                local[mode][0] += len({bits for bits, _ in rep.failures})
                local[mode][1] += rep.configs_tested
        rng = np.random.default_rng([s, 7])
        for t in range(cfg.states):
            st = CompoundState.random(ch, rng, cfg.p_on)
            sim = SimulationConfig(seed=s * 1000 + t)
            res = simulate_robust_full(g, ch, bf, sim, st)
            network["robust"][0] += not res.all_decoded
            network["robust"][1] += 1
            res = simulate(g, order_pi_star(g), apply_compound(ch, st), bf, SimulationConfig(mode="intra-joint", seed=sim.seed))
            network["intra-joint"][0] += not res.all_decoded
            network["intra-joint"][1] += 1
    return {
        "config": asdict(cfg),
        "full_cells": len(cells),
        "local_failure_rate": {k: v[0] / v[1] for k, v in local.items()},
        "network_failure_rate": {k: v[0] / v[1] for k, v in network.items()},
    }


def main(argv=None) -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--r", type=int, default=3)
    p.add_argument("--M", type=int, default=2)
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--states", type=int, default=50)
    p.add_argument("--p-on", type=float, default=0.5)
    args = p.parse_args(argv)
    json.dump(run(Config(args.r, args.M, args.seeds, args.states, args.p_on)), sys.stdout, indent=2)
    print()


if __name__ == "__main__":
    main()
