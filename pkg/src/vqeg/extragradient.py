"""Projected stochastic extragradient over circuit parameters.

Each iteration evaluates the operator twice: once at the current point
(predictor) and once at the extrapolated point (corrector). Iterates live in
the box ``[-h, h]^d`` and the induced strategies are certified in the
original game by the Nash gap.

``eg_step`` and ``projected_residual`` use the variational-inequality
convention ``w - eta F(w)``. The row player maximizes, so the field fed to
them by :func:`run` is ``F = -G`` with ``G = (grad_theta L, -grad_phi L)``
the saddle operator: theta ascends the payoff and phi descends it.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .errors import ConfigError, InvalidArgumentError
from .exact_solver import solve_lp
from .game_core import (EmbeddedGame, GameInstance, MatrixLike, MixedStrategy, PayoffMatrix, as_matrix,
                        embed_dominated, nash_gap, restrict_strategy)
from .oracle import EXACT, JointParams, Oracle, Shots, check_shots
from .qstate import AnsatzSpec, substream

EPSILON = 5e-3
INIT_SCALE = 0.1

Operator = Callable[[np.ndarray, tuple], np.ndarray]


def default_layers(actions: int) -> int:
    """Ansatz depth for a register holding ``actions`` outcomes."""
    return 3 if actions <= 8 else 4


@dataclass
class EGConfig:
    steps: int = 2000
    eta: float = 0.1
    shots: Shots = EXACT
    box_halfwidth: float = 2 * math.pi
    seed: int = 0
    layers_r: Optional[int] = None
    layers_c: Optional[int] = None
    record_every: int = 1
    c_margin: float = 1.0
    opponent: str = "sampled"
    epsilon: float = EPSILON
    tail_fraction: float = 0.2

    def __post_init__(self):
        self.shots = check_shots(self.shots)
        if int(self.steps) < 1:
            raise ConfigError(f"steps must be >= 1, got {self.steps}")
        if not self.eta > 0:
            raise ConfigError(f"eta must be positive, got {self.eta}")
        if not self.box_halfwidth > 0:
            raise ConfigError(f"box half-width must be positive, got {self.box_halfwidth}")
        if int(self.record_every) < 1:
            raise ConfigError(f"record_every must be >= 1, got {self.record_every}")
        for name in ("layers_r", "layers_c"):
            value = getattr(self, name)
            if value is not None and int(value) < 1:
                raise ConfigError(f"{name} must be >= 1, got {value}")
        if not 0 < self.tail_fraction <= 1:
            raise ConfigError(f"tail_fraction must be in (0, 1], got {self.tail_fraction}")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError(f"seed must fit in 64 unsigned bits, got {self.seed}")
        self.steps, self.seed, self.record_every = int(self.steps), int(self.seed), int(self.record_every)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["shots"] = "exact" if self.shots is EXACT else self.shots
        return out


@dataclass(frozen=True)
class TraceRecord:
    t: int
    value: float
    gap: float
    avg_gap: float
    residual: float
    leak_row: float
    leak_col: float
    evals: int


@dataclass
class RunTrace:
    records: list[TraceRecord] = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])


@dataclass
class RunResult:
    final_params: JointParams
    last_iterate_strategies: tuple[MixedStrategy, MixedStrategy]
    tail_avg_strategies: tuple[MixedStrategy, MixedStrategy]
    final_gap_last: float
    final_gap_avg: float
    passed: bool
    final_value: float
    leak_row: float
    leak_col: float
    evals: int
    layers: tuple[int, int]
    config: EGConfig

    @property
    def best_gap(self) -> float:
        return min(self.final_gap_last, self.final_gap_avg)

    def summary(self) -> dict:
        cfg = self.config
        return {
            "final_gap_last": self.final_gap_last,
            "final_gap_avg": self.final_gap_avg,
            "passed": self.passed,
            "seed": cfg.seed,
            "eta": cfg.eta,
            "shots": "exact" if cfg.shots is EXACT else cfg.shots,
            "layers": list(self.layers),
            "T": cfg.steps,
            "config": cfg.to_dict(),
        }


def _as_vector(w) -> np.ndarray:
    return w.vector() if isinstance(w, JointParams) else np.asarray(w, dtype=float)


def _like(template, vec: np.ndarray):
    if isinstance(template, JointParams):
        return JointParams.from_vector(vec, template.theta.size)
    return vec


def project_box(w, halfwidth: float):
    """Euclidean projection onto ``[-halfwidth, halfwidth]^d`` (coordinate clamp)."""
    if not halfwidth > 0:
        raise InvalidArgumentError(f"half-width must be positive, got {halfwidth}")
    return _like(w, np.clip(_as_vector(w), -halfwidth, halfwidth))


def _extragradient(w: np.ndarray, operator: Operator, eta: float, halfwidth: float, t: int,
                   g_t: Optional[np.ndarray] = None):
    if g_t is None:
        g_t = operator(w, (t, 0))
    w_half = np.clip(w - eta * g_t, -halfwidth, halfwidth)
    g_half = operator(w_half, (t, 1))
    w_next = np.clip(w - eta * g_half, -halfwidth, halfwidth)
    return w_next, w_half, g_t


def eg_step(w_t, operator: Operator, eta: float, halfwidth: float = 2 * math.pi, t: int = 0):
    """One predictor/corrector update; returns ``(w_next, w_half)``.

    ``operator(w, key)`` returns the (possibly stochastic) saddle operator at a
    flat vector; ``key = (t, 0)`` for the predictor and ``(t, 1)`` for the
    corrector.
    """
    w_next, w_half, _ = _extragradient(_as_vector(w_t), operator, eta, halfwidth, t)
    return _like(w_t, w_next), _like(w_t, w_half)


def projected_residual(w, operator_exact: Callable[[np.ndarray], np.ndarray], eta: float,
                       halfwidth: float = 2 * math.pi, g: Optional[np.ndarray] = None) -> float:
    """Norm of ``(w - clip(w - eta G(w))) / eta``; zero iff ``w`` is box-stationary."""
    vec = _as_vector(w)
    if g is None:
        g = operator_exact(vec)
    return float(np.linalg.norm((vec - np.clip(vec - eta * g, -halfwidth, halfwidth)) / eta))


def _game_matrix(game: Union[GameInstance, MatrixLike]) -> PayoffMatrix:
    return game.matrix if isinstance(game, GameInstance) else as_matrix(game)


def build_oracle(game: Union[GameInstance, MatrixLike], cfg: EGConfig) -> tuple[EmbeddedGame, Oracle]:
    a = _game_matrix(game)
    if a.m < 2 or a.n < 2:
        raise InvalidArgumentError(f"games need at least two actions per player, got {a.shape}")
    emb = embed_dominated(a, cfg.c_margin)
    layers_r = cfg.layers_r or default_layers(emb.M)
    layers_c = cfg.layers_c or default_layers(emb.N)
    oracle = Oracle(emb, AnsatzSpec.for_actions(emb.M, layers_r), AnsatzSpec.for_actions(emb.N, layers_c),
                    shots=cfg.shots, seed=cfg.seed, opponent=cfg.opponent)
    return emb, oracle


def initial_point(d: int, seed: int) -> np.ndarray:
    """Start uniformly in ``[-0.1, 0.1]^d`` from the run seed's root stream."""
    return substream(seed).uniform(-INIT_SCALE, INIT_SCALE, size=d)


def run(game: Union[GameInstance, MatrixLike], cfg: EGConfig, w0=None) -> tuple[RunResult, RunTrace]:
    """Run projected extragradient and certify the iterates in the original game.

    ``w0`` warm-starts from given parameters instead of the seeded initial point.
    """
    a = _game_matrix(game)
    emb, oracle = build_oracle(a, cfg)
    m, n, d = emb.m, emb.n, oracle.d
    eta, hw = cfg.eta, cfg.box_halfwidth
    exact_oracle = oracle if oracle.exact else None

    def operator(vec, key):
        return -oracle(vec, key)

    if w0 is None:
        w = initial_point(d, cfg.seed)
    else:
        w = _as_vector(w0).copy()
        if w.size != d:
            raise InvalidArgumentError(f"warm start has {w.size} parameters, expected {d}")
    w = project_box(w, hw)
    g_next = None
    trace = RunTrace()
    xs: list[np.ndarray] = []
    ys: list[np.ndarray] = []
    sum_x, sum_y = np.zeros(m), np.zeros(n)
    evals = 0
    records = 0
    leak_r = leak_c = 0.0
    x = y = None

    for t in range(cfg.steps):
        w, _, _ = _extragradient(w, operator, eta, hw, t, g_next)
        evals += 4 * d
        # The exact operator at the new point doubles as the next predictor.
        g_next = -oracle(w, exact=True) if exact_oracle is not None else None

        if (t + 1) % cfg.record_every and t != cfg.steps - 1:
            continue
        xt, yt = oracle.strategies(w)
        x, leak_r = restrict_strategy(xt, m)
        y, leak_c = restrict_strategy(yt, n)
        g_exact = g_next if g_next is not None else -oracle(w, exact=True)
        records += 1
        evals += 2
        xs.append(x.probs)
        ys.append(y.probs)
        sum_x += x.probs
        sum_y += y.probs
        trace.records.append(TraceRecord(
            t=t,
            value=float(xt @ emb.tilde_a @ yt),
            gap=nash_gap(a, x, y),
            avg_gap=nash_gap(a, sum_x / records, sum_y / records),
            residual=projected_residual(w, None, eta, hw, g=g_exact),
            leak_row=leak_r,
            leak_col=leak_c,
            evals=evals,
        ))

    n_tail = max(1, math.ceil(cfg.tail_fraction * records))
    x_avg = MixedStrategy(np.mean(xs[-n_tail:], axis=0))
    y_avg = MixedStrategy(np.mean(ys[-n_tail:], axis=0))
    gap_last = trace.records[-1].gap
    gap_avg = nash_gap(a, x_avg, y_avg)
    result = RunResult(
        final_params=oracle.split(w),
        last_iterate_strategies=(x, y),
        tail_avg_strategies=(x_avg, y_avg),
        final_gap_last=gap_last,
        final_gap_avg=gap_avg,
        passed=min(gap_last, gap_avg) <= cfg.epsilon,
        final_value=trace.records[-1].value,
        leak_row=leak_r,
        leak_col=leak_c,
        evals=evals,
        layers=(oracle.ansatz_r.layers, oracle.ansatz_c.layers),
        config=cfg,
    )
    return result, trace


def run_best_of(game: Union[GameInstance, MatrixLike], cfg: EGConfig, seeds) -> list[tuple[RunResult, RunTrace]]:
    """One run per seed with otherwise identical settings."""
    out = []
    for seed in seeds:
        params = cfg.to_dict()
        params["seed"] = int(seed)
        out.append(run(game, EGConfig(**params)))
    return out


def value_error(result: RunResult, game: Union[GameInstance, MatrixLike]) -> float:
    """``|L_final - v*|`` against the LP value of the original game."""
    return abs(result.final_value - solve_lp(_game_matrix(game)).value)


def write_trace(path, trace: RunTrace, result: RunResult) -> None:
    """JSON Lines: one object per recorded iteration, then the run summary."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in trace.records:
            fh.write(json.dumps(asdict(rec)) + "\n")
        fh.write(json.dumps(result.summary()) + "\n")
