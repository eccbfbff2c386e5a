"""Acceptance criteria 1-9 at their stated tolerances.

Each test records a one-line ``detail`` property; ``conftest.py`` prints one
PASS/FAIL line per criterion at the end of the session.
"""
import csv
import time

import numpy as np
import pytest

from vqeg import cli
from vqeg.exact_solver import solve_lp, solve_support_enum
from vqeg.extragradient import EPSILON, EGConfig, run
from vqeg.game_core import embed_dominated, gen_dominant_row, gen_matching_pennies, gen_random, nash_gap
from vqeg.oracle import EXACT, JointParams, expected_payoff, grad_col, grad_row, saddle_operator
from vqeg.qstate import AnsatzSpec, substream

SEEDS = range(5)
ETA = 0.1


def best(runs):
    return min(runs, key=lambda rt: rt[0].best_gap)


def run_seeds(game, steps, **kw):
    return [run(game, EGConfig(steps=steps, eta=ETA, seed=s, record_every=10, **kw)) for s in SEEDS]


@pytest.fixture(scope="module")
def structured_runs():
    """Best-of-5 exact runs on the three structured instances, shared with criterion 8."""
    t0 = time.perf_counter()
    runs = {
        "dominant-4": run_seeds(gen_dominant_row(4, 0), 3000),
        "dominant-8": run_seeds(gen_dominant_row(8, 0), 3000),
        "pennies-4": run_seeds(gen_matching_pennies(4), 5000),
    }
    return runs, time.perf_counter() - t0


def test_c1_embedding_equivalence(record_property):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    worst_value = worst_mass = 0.0
    for size in (3, 5, 6):
        for _ in range(50):
            a = rng.uniform(-1, 1, (size, size))
            emb = embed_dominated(a)
            sol = solve_lp(emb.tilde_a)
            worst_value = max(worst_value, abs(sol.value - solve_lp(a).value))
            worst_mass = max(worst_mass, sol.x_star.probs[size:].sum(), sol.y_star.probs[size:].sum())
    elapsed = time.perf_counter() - t0
    record_property("detail", f"max |v(A~)-v(A)|={worst_value:.1e} max dummy mass={worst_mass:.1e} "
                              f"({elapsed:.1f}s)")
    assert worst_value <= 1e-9 and worst_mass <= 1e-9
    assert elapsed < 10


def test_c2_lp_correctness(record_property):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    worst_diff = worst_gap = 0.0
    for _ in range(200):
        m, n = rng.integers(2, 5, size=2)
        a = rng.uniform(-1, 1, (m, n))
        sol = solve_lp(a)
        worst_diff = max(worst_diff, abs(sol.value - solve_support_enum(a).value))
        worst_gap = max(worst_gap, nash_gap(a, sol.x_star, sol.y_star))
    elapsed = time.perf_counter() - t0
    record_property("detail", f"max value diff={worst_diff:.1e} max gap={worst_gap:.1e} ({elapsed:.1f}s)")
    assert worst_diff <= 1e-9 and worst_gap <= 1e-9
    assert elapsed < 30


def test_c3_gradient_exactness(record_property):
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    worst, h = 0.0, 1e-5
    for _ in range(20):
        m, n = rng.integers(2, 9, size=2)
        game = embed_dominated(rng.uniform(-1, 1, (m, n)))
        ar = AnsatzSpec.for_actions(game.M, int(rng.integers(1, 4)))
        ac = AnsatzSpec.for_actions(game.N, int(rng.integers(1, 4)))
        w = JointParams(rng.uniform(-np.pi, np.pi, ar.param_count), rng.uniform(-np.pi, np.pi, ac.param_count))
        vec, d_r = w.vector(), ar.param_count
        fd = np.empty(vec.size)
        for k in range(vec.size):
            e = np.zeros(vec.size)
            e[k] = h
            fd[k] = (expected_payoff(game, ar, ac, JointParams.from_vector(vec + e, d_r))
                     - expected_payoff(game, ar, ac, JointParams.from_vector(vec - e, d_r))) / (2 * h)
        grad = np.concatenate([grad_row(game, ar, ac, w), grad_col(game, ar, ac, w)])
        worst = max(worst, float(np.abs(grad - fd).max()))
    elapsed = time.perf_counter() - t0
    record_property("detail", f"max |shift - finite diff|={worst:.1e} ({elapsed:.1f}s)")
    assert worst <= 1e-6
    assert elapsed < 30


def test_c4_variance_contract(record_property):
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    game = embed_dominated(rng.uniform(-1, 1, (4, 4)))
    ar = ac = AnsatzSpec.for_actions(4, 2)
    w = JointParams(rng.uniform(-np.pi, np.pi, ar.param_count), rng.uniform(-np.pi, np.pi, ac.param_count))
    bound = game.inf_norm() ** 2 / (2 * 256)
    var = {}
    for shots in (256, 1024):
        stream = substream(4, shots)
        draws = np.array([saddle_operator(game, ar, ac, w, shots, stream).g for _ in range(500)])
        var[shots] = draws.var(axis=0, ddof=1)
    ratio = var[256] / var[1024]
    elapsed = time.perf_counter() - t0
    record_property("detail", f"max var/bound={var[256].max() / bound:.2f} (limit 1.5) "
                              f"ratio in [{ratio.min():.2f}, {ratio.max():.2f}] ({elapsed:.1f}s)")
    assert np.all(var[256] <= bound * 1.5)
    assert np.all((ratio >= 2.5) & (ratio <= 6))
    assert elapsed < 120


def test_c5_structured_equilibria(structured_runs, record_property):
    runs, elapsed = structured_runs
    gaps = {name: best(rs)[0].best_gap for name, rs in runs.items()}
    record_property("detail", " ".join(f"{k} best gap={v:.1e}" for k, v in gaps.items()) + f" ({elapsed:.0f}s)")
    assert all(g <= EPSILON for g in gaps.values())
    assert elapsed < 300


@pytest.mark.slow
def test_c6_large_instances(record_property):
    t0 = time.perf_counter()
    gaps = {}
    for kind, gen in (("dominant", gen_dominant_row), ("random", gen_random)):
        for size in (16, 32):
            gaps[f"{kind}-{size}"] = best(run_seeds(gen(size, 0), 3000))[0].best_gap
    elapsed = time.perf_counter() - t0
    record_property("detail", " ".join(f"{k}={v:.1e}" for k, v in gaps.items())
                    + f" (random reported only, {elapsed:.0f}s)")
    assert gaps["dominant-16"] <= EPSILON and gaps["dominant-32"] <= EPSILON
    assert elapsed < 1800


def test_c7_leakage_certificate(record_property):
    game = gen_random(5, 0)
    runs = run_seeds(game, 5000)
    worst_leak = 0.0
    passing = 0
    for res, trace in runs:
        for rec in trace.records:
            if rec.gap <= EPSILON:
                worst_leak = max(worst_leak, rec.leak_row, rec.leak_col)
        if res.passed:
            passing += 1
            worst_leak = max(worst_leak, res.leak_row, res.leak_col)
    record_property("detail", f"{passing}/5 runs reach gap <= eps, max leakage there={worst_leak:.1e}")
    assert passing >= 1
    assert worst_leak <= 1e-3


def test_c8_stationarity_trend(structured_runs, record_property):
    runs, _ = structured_runs
    trend_ok = []
    for name, rs in runs.items():
        for res, trace in rs:
            r = trace.column("residual")
            k = max(1, len(r) // 10)
            trend_ok.append(r[-k:].mean() <= r[:k].mean())

    # Shot-noise plateau near a converged point, one level per shot budget.
    game = gen_matching_pennies(4)
    start = best(runs["pennies-4"])[0].final_params
    plateau = {}
    for shots in (64, 256, 1024):
        _, trace = run(game, EGConfig(steps=400, eta=ETA, shots=shots, seed=0), w0=start)
        r = trace.column("residual")
        plateau[shots] = float(np.median(r[len(r) // 2:]))
    levels = [plateau[s] for s in (64, 256, 1024)]
    record_property("detail", f"{sum(trend_ok)}/{len(trend_ok)} runs with late <= early residual; plateau "
                    + " ".join(f"S={s}:{v:.3f}" for s, v in plateau.items()))
    assert all(trend_ok)
    assert levels[0] >= levels[1] >= levels[2]


def test_c9_sweep_determinism(tmp_path, monkeypatch, record_property, capsys):
    argv = ["sweep", "--game", "dominant,pennies", "--size", "2,4", "--shots", "exact,64", "--seeds", "2",
            "--steps", "150", "--record-every", "10"]
    tables = []
    for i, threads in enumerate(("1", "8", "1", "8")):
        monkeypatch.setenv("VQEG_THREADS", threads)
        out_dir = tmp_path / f"run{i}"
        assert cli.main(argv + ["--out-dir", str(out_dir)]) == 0
        lines = (out_dir / "summary.csv").read_text().splitlines()
        rows = [{k: v for k, v in row.items() if k != "wall_ms"} for row in csv.DictReader(lines[1:])]
        traces = {p.name: p.read_bytes() for p in (out_dir / "traces").iterdir()}
        tables.append((lines[0], rows, traces))
    capsys.readouterr()
    same = all(t == tables[0] for t in tables[1:])
    record_property("detail", f"{len(tables[0][1])} cells, threads 1/8 x2: "
                              f"{'identical' if same else 'DIFFERENT'} CSV and traces")
    assert same
