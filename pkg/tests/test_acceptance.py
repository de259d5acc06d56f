"""Acceptance criteria 1-11, each at its stated tolerance.

Every test records one PASS/FAIL line that pytest prints in its terminal
summary; ``python tests/test_acceptance.py`` runs them standalone.
"""

import io
import math
import re
import time

import numpy as np

from cellular_ia.beamforming import design, verify_alignment
from cellular_ia.bounds import (
    achievable_upper_bound,
    brute_force_q1,
    brute_force_s_star,
    s_star,
)
from cellular_ia.channels import CompoundState, sample_channels
from cellular_ia.cli import RunConfig, run
from cellular_ia.decode import SimulationConfig, estimate_dof, simulate
from cellular_ia.graph import build_graph, cardinality_formulas, classify_vertices, triangle_sum_check
from cellular_ia.lattice import CosetClass
from cellular_ia.order import EdgeSelector, order_pi_s, order_pi_star, orient_edges
from cellular_ia.robustness import (
    JOINT_FAILURE_STATE,
    decode_pi_star_joint,
    hadamard_sweep,
    local_cell,
    simulate_robust_full,
    sweep_neighborhood,
)

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # standalone run
    ACCEPTANCE_LINES = {}

RESIDUAL_TOL = 1e-8
SIGMA_TOL = 1e-6
SYMBOL_TOL = 1e-6
SLOPE_REL_TOL = 0.05


def _record(k: int, name: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {k:2d} {name}: {detail}"
    ACCEPTANCE_LINES[k] = line
    print(line)
    assert ok, line


def _design(r: int, M: int, seed: int):
    g = build_graph(r)
    E = orient_edges(g, order_pi_star(g), EdgeSelector.OUT)
    ch = sample_channels(g, M, seed)
    return g, E, ch, design(g, E, ch, seed=seed)


def test_criterion_01_cardinality():
    t0 = time.perf_counter()
    bad = []
    for r in range(1, 21):
        g = build_graph(r)
        n_v, n_t, vex_bound = cardinality_formulas(r)
        _, _, v_ex = classify_vertices(g)
        if (len(g), len(g.triangles)) != (n_v, n_t) or len(v_ex) > vex_bound or 3 * len(g.triangles) > 2 * len(g):
            bad.append(r)
    dt = time.perf_counter() - t0
    _record(1, "cardinality formulas", not bad and dt < 5, f"r=1..20 mismatches={bad}, {dt:.2f}s")


def test_criterion_02_triangle_sum():
    rng = np.random.default_rng(2)
    worst = 0.0
    for r in range(1, 11):
        g = build_graph(r)
        for _ in range(20):
            lhs, rhs = triangle_sum_check(g, rng.standard_normal(len(g)))
            worst = max(worst, abs(lhs - rhs) / max(abs(lhs), 1e-300))
    _record(2, "triangle-sum identity", worst <= 1e-12, f"max relative gap {worst:.1e}")


# designs of criterion 3, reused by criterion 5:
# (r, M, residual, sigma_min, average DoF, |star set|, |V|)
_ALIGN_RUNS: list[tuple[int, int, float, float, float, int, int]] = []


def _alignment_runs():
    if not _ALIGN_RUNS:
        for r in (3, 5):
            for M in (2, 3, 4, 5):
                for s in range(20):
                    g, E, ch, bf = _design(r, M, s)
                    rep = verify_alignment(g, E, ch, bf)
                    _ALIGN_RUNS.append(
                        (
                            r,
                            M,
                            rep.max_zero_forcing_residual,
                            rep.min_desired_singular_value,
                            bf.average_dof,
                            len(bf.star_set or ()),
                            len(g),
                        )
                    )
    return _ALIGN_RUNS


def test_criterion_03_alignment():
    runs = _alignment_runs()
    res = max(x[2] for x in runs)
    sv = min(x[3] for x in runs)
    dof_ok = True
    for r, M, _, _, avg, star, n in runs:
        if M % 2 == 0:
            dof_ok &= avg == M / 2
        else:
            dof_ok &= math.isclose(avg, (M - 1) / 2 + star / n) and avg >= M / 2 - 1 / 6
    ok = res <= RESIDUAL_TOL and sv >= SIGMA_TOL and dof_ok
    _record(3, "alignment", ok, f"{len(runs)} designs, max residual {res:.1e}, min sigma {sv:.1e}, DoF ok={dof_ok}")


def test_criterion_04_decode():
    worst, failed, n = 0.0, 0, 0
    for M in (2, 3, 4):
        for s in range(10):
            g, E, ch, bf = _design(4, M, s)
            for mode, order in (
                ("no-intra", order_pi_star(g)),
                ("intra-joint", order_pi_star(g)),
                ("robust", order_pi_s(g)),
            ):
                if mode == "robust":
                    out = simulate_robust_full(g, ch, bf, SimulationConfig(seed=s), CompoundState.all_ones(ch))
                else:
                    out = simulate(g, order, ch, bf, SimulationConfig(mode=mode, seed=s))
                n += 1
                failed += not out.all_decoded
                worst = max(worst, out.max_symbol_error)
    ok = failed == 0 and worst <= SYMBOL_TOL
    _record(4, "end-to-end decode", ok, f"{n} runs, {failed} with undecoded nodes, max symbol error {worst:.1e}")


def test_criterion_05_converse():
    over = 0
    for r, M, _, _, avg, _, _ in _alignment_runs():
        over += avg > achievable_upper_bound(build_graph(r), M) + 1e-12
    gaps = []
    for r in range(2, 13):
        g = build_graph(r)
        gaps.append(achievable_upper_bound(g, 2) - 1 - 7 / math.sqrt(len(g)))
    g1 = build_graph(1)
    q_auto = brute_force_q1(g1, 2)[0]
    q_enum = brute_force_q1(g1, 2, method="enumerate")[0]
    q_bnb = brute_force_q1(g1, 2, method="bnb")[0]
    ok = over == 0 and max(gaps) <= 0 and q_auto == q_enum == q_bnb == 8
    _record(
        5,
        "converse",
        ok,
        f"runs over bound={over}, max(bound-1-7/sqrt|V|)={max(gaps):.3f}, Q1(r=1,M=2)={q_auto}/{q_enum}/{q_bnb}",
    )


def test_criterion_06_s_star():
    bad = [M for M in range(1, 9) if brute_force_s_star(M)[0] != s_star(M)]
    _record(6, "s* lemma", not bad, f"M=1..8 mismatches={bad}")


def test_criterion_07_robustness():
    g, E, ch, bf = _design(3, 2, 0)
    cells = [c for c in g.cells if c.is_full and c.external_d is not None]
    sweep_fail, disagree, configs = 0, 0, 0
    for c in cells:
        rep = sweep_neighborhood(g, ch, bf, c, "pi_s_robust")
        configs += rep.configs_tested
        sweep_fail += len({bits for bits, _ in rep.failures})
        disagree += rep.oracle_disagreements
    joint = decode_pi_star_joint(local_cell(ch, bf, cells[0]), JOINT_FAILURE_STATE, np.random.default_rng(0))
    joint_fails = not joint["b"]
    full_fail = 0
    for s in range(100):
        g3, _, ch3, bf3 = _design(3, 2, s)
        state = CompoundState.random(ch3, np.random.default_rng([s, 7]))
        res = simulate_robust_full(g3, ch3, bf3, SimulationConfig(seed=s), state)
        full_fail += not (res.all_decoded and res.max_symbol_error <= SYMBOL_TOL)
    ok = sweep_fail == 0 and joint_fails and full_fail == 0 and disagree == 0
    _record(
        7,
        "robustness",
        ok,
        f"{len(cells)} cells x 256 configs ({configs}), failed configs={sweep_fail}, "
        f"joint fails at known state={joint_fails}, random states failed={full_fail}/100, oracle disagreements={disagree}",
    )


def test_criterion_08_hadamard():
    counts = hadamard_sweep(n_max=6, trials=1000, seed=0)
    short = {f"{fam}:{n}": c for fam, per in counts.items() for n, c in per.items() if c != 1000}
    _record(8, "masked full rank", not short, f"{len(counts)} families x n=1..6 x 1000 trials, deficient={short}")


def test_criterion_09_order_equivalence():
    bad = []
    for r in range(2, 7):
        g = build_graph(r)
        ps, pst = order_pi_s(g), order_pi_star(g)
        p1 = orient_edges(g, ps, "out") == orient_edges(g, pst, "out")
        p2 = all(
            ps.rank[c.external_d] < ps.rank[c.secondary_b] == ps.rank[c.secondary_c]
            for c in g.cells
            if c.is_full and c.external_d is not None
        )
        deg = [0] * len(g)
        for _, v in orient_edges(g, pst, "out"):
            deg[v] += 1
        cap = {CosetClass.CIRCLE: 1, CosetClass.DIAMOND: 2, CosetClass.SQUARE: 3}
        p3 = all(deg[n.id] <= cap[n.coset] for n in g.nodes) and not any(
            g.coset_of(u) is CosetClass.CIRCLE and g.coset_of(v) is CosetClass.CIRCLE for u, v in g.out_edges
        )
        if not (p1 and p2 and p3):
            bad.append(r)
    _record(9, "order equivalence", not bad, f"r=2..6 violations={bad}")


def test_criterion_10_dof_slope():
    # 40 dB and 60 dB at unit noise; default seed 0
    P1, P2 = 10 ** 4, 10 ** 6
    worst = 0.0
    for M in (2, 4):
        g, E, ch, bf = _design(4, M, 0)
        for mode, order in (
            ("no-intra", order_pi_star(g)),
            ("intra-joint", order_pi_star(g)),
            ("robust", order_pi_s(g)),
        ):
            sl = estimate_dof(g, order, ch, bf, SimulationConfig(mode=mode), P1, P2)
            worst = max(worst, max(abs(x - d) / d for x, d in zip(sl, bf.d)))
    _record(10, "DoF slope", worst <= SLOPE_REL_TOL, f"M=2,4 r=4 seed 0, max per-node relative error {worst:.3f}")


def _report_text(cfg: RunConfig) -> str:
    buf = io.StringIO()
    run(cfg, stdout=buf)
    return re.sub(r'"timestamp": "[^"]*"', '"timestamp": ""', buf.getvalue())


def test_criterion_11_determinism():
    cfgs = [
        RunConfig("all", r=2, M=2, seed=3),
        RunConfig("simulate", r=3, M=3, seed=1, mode="intra-joint"),
        RunConfig("design", r=3, M=5, seed=2, seeds=2, format="csv"),
    ]
    same = [_report_text(c) == _report_text(c) for c in cfgs]
    g, _, ch, bf = _design(3, 4, 9)
    _, _, ch2, bf2 = _design(3, 4, 9)
    same.append(ch.to_json() == ch2.to_json() and bf.to_json() == bf2.to_json())
    _record(11, "determinism", all(same), f"{sum(same)}/{len(same)} repeated runs identical")


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                pass
