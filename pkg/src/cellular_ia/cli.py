"""Command-line entry point: ``cellular-ia <command> [flags]``.

Exit status is 0 when every verdict holds, 1 when a numerical verdict fails
(the report is still written) and 2 for usage errors.  Reports go to
``--out``, else to ``$CELLIA_OUTPUT_DIR/<command>.<ext>``, else to stdout.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from typing import Sequence

import numpy as np

from . import __version__
from .beamforming import check_orthonormal, design, verify_alignment
from .bounds import achievable_upper_bound, bound_report
from .channels import RNG_ALGORITHM, CompoundState, sample_channels
from .decode import Mode, SimulationConfig, estimate_dof, simulate
from .graph import (
    build_graph,
    cardinality_formulas,
    classify_vertices,
    graph_to_dict,
    to_dot,
)
from .order import EdgeSelector, make_order, order_pi_s, order_pi_star, orient_edges
from .robustness import (
    JOINT_FAILURE_STATE,
    decode_pi_star_joint,
    local_cell,
    simulate_robust_full,
    sweep_neighborhood,
)

OUTPUT_ENV = "CELLIA_OUTPUT_DIR"
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
COMMANDS = ("graph", "design", "simulate", "bounds", "robust", "verify", "all")


@dataclass
class RunConfig:
    command: str
    r: int = 2
    M: int = 2
    seed: int = 0
    seeds: int = 1
    order: str = "pi-star"
    mode: str = "no-intra"
    snr_db: list[float] = field(default_factory=lambda: [40.0, 60.0])
    trials: int = 1
    out: str | None = None
    format: str = "json"
    exact_q1: bool = False
    exhaustive_neighborhood: bool = False
    random_states: int = 0
    no_intra_edges: bool = False

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        if self.r < 1:
            raise ValueError("--r must be >= 1")
        if self.M < 1:
            raise ValueError("--M must be >= 1")
        if self.seeds < 1:
            raise ValueError("--seeds must be >= 1")
        if self.command == "simulate" and not self.snr_db:
            raise ValueError("simulate needs at least one --snr-db value")
        if self.format == "dot" and self.command != "graph":
            raise ValueError("--format dot is only available for the graph command")


def _verdict(report: dict, name: str, ok: bool) -> None:
    report.setdefault("verdicts", {})[name] = bool(ok)


def _graph_report(cfg: RunConfig) -> tuple[dict, list[dict], str | None]:
    g = build_graph(cfg.r, include_intra=not cfg.no_intra_edges)
    counts, v_in, v_ex = classify_vertices(g)
    n_v, n_t, vex_bound = cardinality_formulas(cfg.r)
    order = make_order(g, cfg.order)
    rep = {
        "graph": graph_to_dict(g),
        "order": order.to_dict(),
        "census": {
            "nV": len(g),
            "nT": len(g.triangles),
            "nVex": len(v_ex),
            "out_edges": len(g.out_edges),
            "intra_edges": len(g.intra_edges),
            "cells": len(g.cells),
        },
    }
    _verdict(rep, "node_count_formula", len(g) == n_v)
    _verdict(rep, "triangle_count_formula", len(g.triangles) == n_t)
    _verdict(rep, "vex_bound", len(v_ex) <= vex_bound)
    _verdict(rep, "triangle_density", 3 * len(g.triangles) <= 2 * len(g))
    rows = [
        {
            "id": n.id,
            "a": n.label.a,
            "b": n.label.b,
            "coset": int(n.coset),
            "n_v": counts[n.id],
            "rank": order.rank[n.id],
        }
        for n in g.nodes
    ]
    dot = to_dot(g, order.rank if cfg.order else None)
    return rep, rows, dot


def _design_report(cfg: RunConfig) -> tuple[dict, list[dict]]:
    g = build_graph(cfg.r)
    E = orient_edges(g, order_pi_star(g), EdgeSelector.OUT)
    runs, rows = [], []
    worst_res, worst_sv, worst_orth = 0.0, math.inf, 0.0
    for k in range(cfg.seeds):
        s = cfg.seed + k
        ch = sample_channels(g, cfg.M, s)
        bf = design(g, E, ch, seed=s)
        al = verify_alignment(g, E, ch, bf)
        worst_res = max(worst_res, al.max_zero_forcing_residual)
        worst_sv = min(worst_sv, al.min_desired_singular_value)
        worst_orth = max(worst_orth, check_orthonormal(bf))
        runs.append(
            {
                "seed": s,
                "avg_dof": bf.average_dof,
                "star_set_size": len(bf.star_set) if bf.star_set is not None else None,
                **al.to_dict(),
            }
        )
        if k == 0:
            sv = {e["node"]: e["sigma_min"] for e in al.desired}
            rows = [{"node": v, "d": bf.d[v], "rule": bf.rule[v], "sigma_min": sv.get(v, 0.0)} for v in range(len(g))]
    avg = runs[0]["avg_dof"]
    rep = {
        "runs": runs,
        "aggregate": {
            "max_zero_forcing_residual": worst_res,
            "min_desired_singular_value": worst_sv,
            "max_orthonormality_error": worst_orth,
            "avg_dof": avg,
            "upper_bound": achievable_upper_bound(g, cfg.M),
        },
    }
    _verdict(rep, "zero_forcing_residual", worst_res <= 1e-8)
    _verdict(rep, "desired_rank", worst_sv > 1e-6)
    _verdict(rep, "orthonormal", worst_orth <= 1e-10)
    _verdict(rep, "converse", avg <= achievable_upper_bound(g, cfg.M) + 1e-12)
    if cfg.M % 2 == 0:
        _verdict(rep, "design_dof", math.isclose(avg, cfg.M / 2))
    else:
        _verdict(rep, "design_dof", avg >= cfg.M / 2 - 1 / 6 - 1e-12)
    return rep, rows


def _simulate_report(cfg: RunConfig) -> tuple[dict, list[dict]]:
    g = build_graph(cfg.r)
    mode = Mode(cfg.mode)
    order = order_pi_s(g) if mode is Mode.ROBUST else order_pi_star(g)
    E = orient_edges(g, order_pi_star(g), EdgeSelector.OUT)
    ch = sample_channels(g, cfg.M, cfg.seed)
    bf = design(g, E, ch, seed=cfg.seed)
    points, rows = [], []
    noiseless = simulate(g, order, ch, bf, SimulationConfig(mode=mode, seed=cfg.seed, trials=cfg.trials))
    for snr in cfg.snr_db:
        P = 10 ** (snr / 10)
        res = simulate(
            g, order, ch, bf, SimulationConfig(power=P, noise_variance=1.0, mode=mode, seed=cfg.seed, trials=cfg.trials)
        )
        points.append({"snr_db": snr, **res.to_dict()["aggregate"]})
        for n in res.nodes:
            rows.append({"snr_db": snr, **asdict(n)})
    rep: dict = {"noiseless": noiseless.to_dict()["aggregate"], "points": points}
    _verdict(rep, "noiseless_all_decoded", noiseless.all_decoded)
    _verdict(rep, "noiseless_symbol_error", noiseless.max_symbol_error <= 1e-6)
    if len(cfg.snr_db) >= 2:
        lo, hi = min(cfg.snr_db), max(cfg.snr_db)
        slopes = estimate_dof(g, order, ch, bf, SimulationConfig(mode=mode), 10 ** (lo / 10), 10 ** (hi / 10))
        rel = [abs(s - d) / d for s, d in zip(slopes, bf.d) if d > 0]
        rep["dof_slope"] = {
            "snr_db": [lo, hi],
            "mean": float(np.mean(slopes)),
            "per_node": slopes,
            "max_relative_error": max(rel, default=0.0),
        }
        _verdict(rep, "dof_slope_within_5pct", max(rel, default=0.0) <= 0.05)
    return rep, rows


def _bounds_report(cfg: RunConfig) -> tuple[dict, list[dict]]:
    g = build_graph(cfg.r)
    b = bound_report(g, cfg.M, exact_q1=cfg.exact_q1)
    rep = {"bounds": b.to_dict()}
    _verdict(rep, "achievable_le_upper", b.achievable_avg <= b.upper_avg + 1e-12)
    if b.q1_exact is not None:
        _verdict(rep, "q1_le_upper", b.q1_exact / b.nV <= b.upper_avg + 1e-12)
    return rep, [b.to_dict()]


def _robust_report(cfg: RunConfig) -> tuple[dict, list[dict]]:
    g = build_graph(cfg.r)
    E = orient_edges(g, order_pi_star(g), EdgeSelector.OUT)
    full_cells = [c for c in g.cells if c.is_full and c.external_d is not None]
    do_sweep = cfg.exhaustive_neighborhood or cfg.random_states == 0
    sweeps, fulls, rows = [], [], []
    joint_fails = True
    for k in range(cfg.seeds):
        s = cfg.seed + k
        ch = sample_channels(g, cfg.M, s)
        bf = design(g, E, ch, seed=s)
        if do_sweep:
            for c in full_cells:
                rs = sweep_neighborhood(g, ch, bf, c, "pi_s_robust", seed=s)
                sweeps.append({"seed": s, **rs.to_dict()})
                rows.append({"seed": s, "cell": rs.cell, "failures": len(rs.failures), "dC": rs.dC_achieved})
            if full_cells and cfg.M == 2:
                ok = decode_pi_star_joint(local_cell(ch, bf, full_cells[0]), JOINT_FAILURE_STATE, np.random.default_rng(s))
                joint_fails = joint_fails and not all(ok.values())
        rng = np.random.default_rng([s, 1])
        for t in range(cfg.random_states):
            st = CompoundState.random(ch, rng)
            res = simulate_robust_full(g, ch, bf, SimulationConfig(seed=s * 100003 + t), st)
            fulls.append({"seed": s, "state": t, "all_decoded": res.all_decoded, "max_symbol_error": res.max_symbol_error})
    rep: dict = {
        "full_cells": len(full_cells),
        "neighborhood_sweeps": sweeps,
        "random_state_runs": fulls,
    }
    if do_sweep:
        _verdict(rep, "pi_s_no_failures", all(not s["failures"] for s in sweeps))
        if cfg.M % 2 == 0:
            # the case recipes assume equal stream counts across the cell
            _verdict(rep, "case_oracle_agrees", all(s["oracle_disagreements"] == 0 for s in sweeps))
        if full_cells and cfg.M == 2:
            _verdict(rep, "pi_star_joint_fails_on_known_state", joint_fails)
    if cfg.random_states:
        _verdict(rep, "random_states_all_decoded", all(f["all_decoded"] for f in fulls))
    return rep, rows


def _verify_report(cfg: RunConfig) -> tuple[dict, list[dict]]:
    rep, rows = _design_report(cfg)
    g = build_graph(cfg.r)
    E = orient_edges(g, order_pi_star(g), EdgeSelector.OUT)
    decode_runs = []
    for k in range(cfg.seeds):
        s = cfg.seed + k
        ch = sample_channels(g, cfg.M, s)
        bf = design(g, E, ch, seed=s)
        for mode, order in (("no-intra", order_pi_star(g)), ("intra-joint", order_pi_star(g)), ("robust", order_pi_s(g))):
            res = simulate(g, order, ch, bf, SimulationConfig(mode=mode, seed=s))
            decode_runs.append(
                {"seed": s, "mode": mode, "all_decoded": res.all_decoded, "max_symbol_error": res.max_symbol_error}
            )
    rep["decode_runs"] = decode_runs
    _verdict(rep, "noiseless_decode", all(d["all_decoded"] and d["max_symbol_error"] <= 1e-6 for d in decode_runs))
    return rep, rows


def _all_report(cfg: RunConfig) -> tuple[dict, list[dict]]:
    parts = {
        "graph": _graph_report(cfg)[0],
        "bounds": _bounds_report(cfg)[0],
        "verify": _verify_report(cfg)[0],
        "robust": _robust_report(cfg)[0],
    }
    rep: dict = {"sections": parts}
    for name, part in parts.items():
        for k, v in part.get("verdicts", {}).items():
            _verdict(rep, f"{name}.{k}", v)
    return rep, []


def run(cfg: RunConfig, stdout=None) -> int:
    """Execute one command and emit its report; returns the exit status."""
    stdout = stdout or sys.stdout
    cfg.validate()
    dot = None
    if cfg.command == "graph":
        body, rows, dot = _graph_report(cfg)
    else:
        body, rows = {
            "design": _design_report,
            "simulate": _simulate_report,
            "bounds": _bounds_report,
            "robust": _robust_report,
            "verify": _verify_report,
            "all": _all_report,
        }[cfg.command](cfg)

    verdicts = body.pop("verdicts", {})
    report = {
        "command": cfg.command,
        "config": asdict(cfg),
        "seed": cfg.seed,
        "version": __version__,
        "rng": RNG_ALGORITHM,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "verdicts": verdicts,
        "passed": all(verdicts.values()),
        **body,
    }
    if cfg.format == "dot":
        text = dot or ""
    elif cfg.format == "csv":
        buf = io.StringIO()
        if rows:
            writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
        text = buf.getvalue()
    else:
        text = json.dumps(report, indent=2, sort_keys=True, default=_json_default) + "\n"

    path = cfg.out
    if path is None and os.environ.get(OUTPUT_ENV):
        path = os.path.join(os.environ[OUTPUT_ENV], f"{cfg.command}.{cfg.format}")
    if path is None:
        stdout.write(text)
    else:
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, "w") as fh:
            fh.write(text)
        failed = sorted(k for k, v in verdicts.items() if not v)
        print(f"{cfg.command}: wrote {path}; " + ("all verdicts pass" if not failed else f"FAILED: {', '.join(failed)}"), file=stdout)
    return EXIT_OK if report["passed"] else EXIT_FAIL


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cellular-ia", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("--r", type=int, default=2, help="region radius (>= 1)")
        sp.add_argument("--M", type=int, default=2, help="antennas per node (>= 1)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--seeds", type=int, default=1, help="number of consecutive seeds")
        sp.add_argument("--out", default=None, help="output file (default: $%s or stdout)" % OUTPUT_ENV)
        sp.add_argument("--format", choices=("json", "csv", "dot"), default="json")

    for name in COMMANDS:
        sp = sub.add_parser(name)
        common(sp)
        if name == "graph":
            sp.add_argument("--order", choices=("pi-star", "pi-s"), default="pi-star")
            sp.add_argument("--no-intra-edges", action="store_true")
        if name == "simulate":
            sp.add_argument("--mode", choices=[m.value for m in Mode], default="no-intra")
            sp.add_argument("--snr-db", type=float, nargs="+", default=[40.0, 60.0])
            sp.add_argument("--trials", type=int, default=1)
        if name in ("bounds", "all"):
            sp.add_argument("--exact-q1", action="store_true")
        if name in ("robust", "all"):
            sp.add_argument("--exhaustive-neighborhood", action="store_true")
            sp.add_argument("--random-states", type=int, default=0)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    fields = {k: v for k, v in vars(args).items() if k in RunConfig.__dataclass_fields__}
    cfg = RunConfig(**fields)
    try:
        cfg.validate()
    except ValueError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
