import json
import math

import numpy as np
import pytest

from vqeg.errors import ConfigError, InvalidArgumentError
from vqeg.exact_solver import solve_lp
from vqeg.extragradient import (EGConfig, build_oracle, default_layers, eg_step, initial_point, project_box,
                                projected_residual, run, run_best_of, value_error, write_trace)
from vqeg.game_core import gen_dominant_row, gen_matching_pennies, nash_gap
from vqeg.oracle import EXACT, JointParams

TWO_PI = 2 * math.pi


def bilinear(w, key=()):
    # Field of min_theta max_phi theta * phi in the w - eta F convention.
    return np.array([w[1], -w[0]])


class TestProjectBox:
    def test_examples(self):
        np.testing.assert_array_equal(project_box(np.array([7.0, -7.0, 1.0]), TWO_PI), [TWO_PI, -TWO_PI, 1.0])
        assert project_box(np.zeros(4), 1.0).tolist() == [0.0] * 4

    def test_idempotent(self):
        w = np.random.default_rng(0).normal(scale=10, size=20)
        once = project_box(w, 2.0)
        np.testing.assert_array_equal(project_box(once, 2.0), once)
        assert np.abs(once).max() <= 2.0

    def test_joint_params_round_trip(self):
        out = project_box(JointParams([9.0, 0.5], [-9.0]), 3.0)
        assert isinstance(out, JointParams)
        np.testing.assert_array_equal(out.vector(), [3.0, 0.5, -3.0])

    def test_halfwidth_must_be_positive(self):
        with pytest.raises(InvalidArgumentError):
            project_box(np.zeros(2), 0.0)


class TestEgStep:
    def test_zero_operator_is_fixed_point(self):
        w = np.array([0.3, -1.2, 4.0])
        w_next, w_half = eg_step(w, lambda v, k: np.zeros_like(v), 0.1)
        np.testing.assert_array_equal(w_next, w)
        np.testing.assert_array_equal(w_half, w)

    def test_bilinear_matches_closed_form(self):
        eta = 0.1
        J = np.array([[0.0, 1.0], [-1.0, 0.0]])
        step = np.eye(2) - eta * J - eta**2 * np.eye(2)
        w = np.array([1.0, 1.0])
        for t in range(100):
            w, _ = eg_step(w, bilinear, eta, halfwidth=10.0, t=t)
        np.testing.assert_allclose(w, np.linalg.matrix_power(step, 100) @ [1.0, 1.0], atol=1e-12)
        assert np.linalg.norm(w) < np.sqrt(2)

    def test_plain_descent_ascent_spirals_out(self):
        eta, w = 0.1, np.array([1.0, 1.0])
        for _ in range(100):
            w = project_box(w - eta * bilinear(w), 10.0)
        assert np.linalg.norm(w) > np.sqrt(2)

    def test_boundary_is_projected(self):
        w_next, w_half = eg_step(np.array([TWO_PI, 0.0]), lambda v, k: np.array([-1.0, 0.0]), 0.5)
        np.testing.assert_array_equal(w_next, [TWO_PI, 0.0])
        np.testing.assert_array_equal(w_half, [TWO_PI, 0.0])

    def test_keys_passed_to_operator(self):
        seen = []

        def op(v, key):
            seen.append(key)
            return np.zeros_like(v)

        eg_step(np.zeros(2), op, 0.1, t=7)
        assert seen == [(7, 0), (7, 1)]


class TestResidual:
    def test_interior_equals_field_norm(self):
        g = np.array([3.0, 4.0])
        assert projected_residual(np.zeros(2), lambda v: g, 0.1) == pytest.approx(5.0)

    def test_zero_at_stationary_point(self):
        assert projected_residual(np.zeros(2), bilinear, 0.1) == 0.0

    def test_boundary_pushing_outward_is_stationary(self):
        # Field points out of the box at the face, so the clipped step stays put.
        w = np.array([TWO_PI, -TWO_PI])
        assert projected_residual(w, lambda v: np.array([-1.0, 1.0]), 0.1) == 0.0


def test_default_layers():
    assert [default_layers(k) for k in (2, 4, 8, 16, 32)] == [3, 3, 3, 4, 4]


class TestConfig:
    @pytest.mark.parametrize("field,value", [("shots", 0), ("steps", 0), ("eta", 0.0), ("box_halfwidth", -1.0),
                                             ("record_every", 0), ("layers_r", 0), ("tail_fraction", 0.0),
                                             ("seed", -1)])
    def test_rejects(self, field, value):
        with pytest.raises(ConfigError):
            EGConfig(**{field: value})

    def test_exact_string(self):
        assert EGConfig(shots="exact").shots is EXACT
        assert EGConfig(shots=64).to_dict()["shots"] == 64
        assert EGConfig().to_dict()["shots"] == "exact"


def test_initial_point_is_seeded_and_small():
    a, b = initial_point(24, 3), initial_point(24, 3)
    np.testing.assert_array_equal(a, b)
    assert np.abs(a).max() <= 0.1
    assert not np.array_equal(a, initial_point(24, 4))


class TestRun:
    def test_pennies_two_converges(self):
        game = gen_matching_pennies(2)
        res, trace = run(game, EGConfig(steps=400, record_every=10))
        assert res.passed
        assert value_error(res, game) <= 1e-2
        assert res.leak_row == 0.0 and res.leak_col == 0.0

    def test_dominant_four_best_of_five(self):
        game = gen_dominant_row(4, 0)
        runs = run_best_of(game, EGConfig(steps=800, layers_r=2, layers_c=2, record_every=20), range(5))
        best = min((r for r, _ in runs), key=lambda r: r.best_gap)
        assert best.passed
        x, _ = best.last_iterate_strategies
        assert x.probs[-1] >= 0.99

    def test_stays_in_box(self):
        res, _ = run(gen_matching_pennies(4), EGConfig(steps=50, eta=5.0, box_halfwidth=0.5))
        assert np.abs(res.final_params.vector()).max() <= 0.5

    def test_eval_accounting(self):
        cfg = EGConfig(steps=30, record_every=7, layers_r=1, layers_c=2)
        res, trace = run(gen_matching_pennies(4), cfg)
        d = 2 * 2 * 1 + 2 * 2 * 2
        assert [r.t for r in trace.records] == [6, 13, 20, 27, 29]
        assert [r.evals for r in trace.records] == [4 * d * (r.t + 1) + 2 * (k + 1)
                                                     for k, r in enumerate(trace.records)]
        assert res.evals == trace.records[-1].evals

    @pytest.mark.parametrize("shots", [EXACT, 32])
    def test_deterministic(self, shots):
        cfg = EGConfig(steps=40, shots=shots, seed=11, record_every=5)
        (r1, t1), (r2, t2) = run(gen_dominant_row(4, 2), cfg), run(gen_dominant_row(4, 2), cfg)
        assert t1 == t2
        assert r1.final_params == r2.final_params

    def test_seed_changes_shot_run(self):
        game = gen_dominant_row(4, 2)
        r1, _ = run(game, EGConfig(steps=20, shots=32, seed=1))
        r2, _ = run(game, EGConfig(steps=20, shots=32, seed=2))
        assert r1.final_params != r2.final_params

    def test_trace_fields_are_consistent(self):
        game = gen_matching_pennies(3)
        res, trace = run(game, EGConfig(steps=60, record_every=3))
        a = game.matrix
        x, y = res.last_iterate_strategies
        assert trace.records[-1].gap == pytest.approx(nash_gap(a, x, y), abs=1e-15)
        assert res.final_gap_avg == pytest.approx(nash_gap(a, *res.tail_avg_strategies), abs=1e-15)
        assert np.all(trace.column("residual") >= 0)
        assert np.all((trace.column("leak_row") >= 0) & (trace.column("leak_row") <= 1))

    def test_warm_start(self):
        game = gen_matching_pennies(2)
        first, _ = run(game, EGConfig(steps=300))
        again, _ = run(game, EGConfig(steps=1), w0=first.final_params)
        assert again.final_gap_last <= first.final_gap_last + 1e-6
        with pytest.raises(InvalidArgumentError):
            run(game, EGConfig(steps=1), w0=np.zeros(3))

    def test_dummy_corner_reports_full_leakage(self):
        a = np.random.default_rng(0).uniform(-1, 1, (3, 3))
        cfg = EGConfig(steps=1, layers_r=1, layers_c=1)
        _, oracle = build_oracle(a, cfg)
        w = np.zeros(oracle.d)
        w[[0, 1, 4, 5]] = np.pi  # RY(pi) on every qubit selects the padded action |11>
        res, _ = run(a, cfg, w0=w)
        assert res.leak_row == pytest.approx(1.0) and res.leak_col == pytest.approx(1.0)

    def test_rejects_one_action_games(self):
        with pytest.raises(InvalidArgumentError):
            run([[1.0, 2.0]], EGConfig(steps=1))

    def test_value_error_against_lp(self):
        game = gen_dominant_row(4, 0)
        res, _ = run(game, EGConfig(steps=5))
        assert value_error(res, game) == pytest.approx(abs(res.final_value - solve_lp(game.matrix).value))


def test_write_trace(tmp_path):
    res, trace = run(gen_matching_pennies(2), EGConfig(steps=10, shots=16, record_every=5))
    path = tmp_path / "trace.jsonl"
    write_trace(path, trace, res)
    lines = [json.loads(line) for line in path.read_text().splitlines()]
    assert len(lines) == 3
    assert set(lines[0]) == {"t", "value", "gap", "avg_gap", "residual", "leak_row", "leak_col", "evals"}
    summary = lines[-1]
    for key in ("final_gap_last", "final_gap_avg", "passed", "seed", "eta", "shots", "layers", "T"):
        assert key in summary
    assert summary["shots"] == 16 and summary["T"] == 10
