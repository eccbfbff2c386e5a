"""Circuit payoff and parameter-shift gradients for the embedded game.

The payoff of a parameter pair is ``L(theta, phi) = x_theta^T A~ y_phi`` with
``x_theta`` and ``y_phi`` the Born distributions of the two players' circuits.
Gradients use the two-point shift rule with shift pi/2 and prefactor 1/2,
which is exact for RY/RZ generators.

Shot mode replaces each Born distribution with empirical frequencies from
``S`` measurement shots. By default the opponent's circuit is sampled as well
(``opponent="sampled"``); ``opponent="exact"`` conditions on the opponent's
exact distribution instead.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import ConfigError, InvalidArgumentError
from .game_core import EmbeddedGame
from .qstate import AnsatzSpec, born_batch, prepare_batch, sample_frequencies, substream

SHIFT = np.pi / 2


class _Exact(enum.Enum):
    EXACT = "exact"

    def __repr__(self):
        return "EXACT"


EXACT = _Exact.EXACT
Shots = Union[int, _Exact]
OPPONENT_MODES = ("sampled", "exact")


def check_shots(shots) -> Shots:
    """Validate a shot count; ``EXACT`` (or the string ``"exact"``) means infinite shots."""
    if shots is EXACT or shots == "exact":
        return EXACT
    if isinstance(shots, bool) or not isinstance(shots, (int, np.integer)):
        raise ConfigError(f"shots must be a positive integer or EXACT, got {shots!r}")
    if shots < 1:
        raise ConfigError(f"shots must be >= 1 (use EXACT for exact expectations), got {shots}")
    return int(shots)


@dataclass(frozen=True)
class JointParams:
    theta: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        for name in ("theta", "phi"):
            arr = np.array(getattr(self, name), dtype=float).ravel()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def d(self) -> int:
        return self.theta.size + self.phi.size

    def vector(self) -> np.ndarray:
        return np.concatenate([self.theta, self.phi])

    @classmethod
    def from_vector(cls, vec, d_r: int) -> "JointParams":
        vec = np.asarray(vec, dtype=float)
        return cls(vec[:d_r], vec[d_r:])

    def __eq__(self, other):
        if not isinstance(other, JointParams):
            return NotImplemented
        return np.array_equal(self.theta, other.theta) and np.array_equal(self.phi, other.phi)

    __hash__ = None


@dataclass(frozen=True)
class GradientEstimate:
    """Saddle operator value ``(grad_theta L, -grad_phi L)``."""

    g: np.ndarray
    shots_per_eval: Shots
    circuit_evals: int


def _check_dims(game: EmbeddedGame, ansatz_r: AnsatzSpec, ansatz_c: AnsatzSpec, w: JointParams) -> None:
    if ansatz_r.dim != game.M or ansatz_c.dim != game.N:
        raise InvalidArgumentError(
            f"ansatz registers ({ansatz_r.dim}, {ansatz_c.dim}) do not match game ({game.M}, {game.N})")
    if w.theta.size != ansatz_r.param_count or w.phi.size != ansatz_c.param_count:
        raise InvalidArgumentError(
            f"parameter lengths ({w.theta.size}, {w.phi.size}) do not match "
            f"ansatz ({ansatz_r.param_count}, {ansatz_c.param_count})")


def born(ansatz: AnsatzSpec, params) -> np.ndarray:
    """Born distribution(s) of the ansatz at ``params`` (1-D or batched)."""
    params = np.asarray(params, dtype=float)
    probs = born_batch(prepare_batch(ansatz, params))
    return probs[0] if params.ndim == 1 else probs


def shifted_batch(params: np.ndarray) -> np.ndarray:
    """Rows ``params + (pi/2) e_k`` for every ``k``, followed by the ``- (pi/2) e_k`` rows."""
    d = params.size
    shifts = SHIFT * np.eye(d)
    return np.vstack([params + shifts, params - shifts])


def expected_payoff(game: EmbeddedGame, ansatz_r: AnsatzSpec, ansatz_c: AnsatzSpec, w: JointParams) -> float:
    _check_dims(game, ansatz_r, ansatz_c, w)
    return float(born(ansatz_r, w.theta) @ game.tilde_a @ born(ansatz_c, w.phi))


def estimated_payoff(game: EmbeddedGame, ansatz_r: AnsatzSpec, ansatz_c: AnsatzSpec, w: JointParams,
                     shots: int, rng: np.random.Generator) -> float:
    """Payoff from empirical frequencies of both circuits, ``shots`` shots each."""
    _check_dims(game, ansatz_r, ansatz_c, w)
    shots = check_shots(shots)
    if shots is EXACT:
        raise InvalidArgumentError("estimated_payoff needs a finite shot count")
    x_hat = sample_frequencies(born(ansatz_r, w.theta), shots, rng)[0]
    y_hat = sample_frequencies(born(ansatz_c, w.phi), shots, rng)[0]
    return float(x_hat @ game.tilde_a @ y_hat)


def _shift_gradient(own: AnsatzSpec, own_params: np.ndarray, weights_matrix: np.ndarray,
                    opponent_probs: np.ndarray, shots: Shots, rng: Optional[np.random.Generator],
                    opponent: str) -> np.ndarray:
    """Parameter-shift gradient of ``p(own_params)^T W q`` with ``q`` the opponent's strategy.

    ``weights_matrix`` is ``A~`` for the row player and ``A~^T`` for the column player.
    """
    d = own_params.size
    probs = born(own, shifted_batch(own_params))
    if shots is EXACT:
        values = probs @ (weights_matrix @ opponent_probs)
    else:
        if rng is None:
            raise InvalidArgumentError("shot-mode gradients need a random generator")
        if opponent not in OPPONENT_MODES:
            raise ConfigError(f"opponent mode must be one of {OPPONENT_MODES}, got {opponent!r}")
        own_hat = sample_frequencies(probs, shots, rng)
        if opponent == "exact":
            values = own_hat @ (weights_matrix @ opponent_probs)
        else:
            opp_hat = sample_frequencies(np.broadcast_to(opponent_probs, (2 * d, opponent_probs.size)), shots, rng)
            values = np.einsum("bi,ij,bj->b", own_hat, weights_matrix, opp_hat)
    return 0.5 * (values[:d] - values[d:])


def grad_row(game: EmbeddedGame, ansatz_r: AnsatzSpec, ansatz_c: AnsatzSpec, w: JointParams,
             mode: Shots = EXACT, rng: Optional[np.random.Generator] = None,
             opponent: str = "sampled") -> np.ndarray:
    """``dL/dtheta`` by parameter shift; ``mode`` is ``EXACT`` or a shot count."""
    _check_dims(game, ansatz_r, ansatz_c, w)
    mode = check_shots(mode)
    y = born(ansatz_c, w.phi)
    return _shift_gradient(ansatz_r, w.theta, game.tilde_a, y, mode, rng, opponent)


def grad_col(game: EmbeddedGame, ansatz_r: AnsatzSpec, ansatz_c: AnsatzSpec, w: JointParams,
             mode: Shots = EXACT, rng: Optional[np.random.Generator] = None,
             opponent: str = "sampled") -> np.ndarray:
    """``dL/dphi`` by parameter shift against the row player's strategy."""
    _check_dims(game, ansatz_r, ansatz_c, w)
    mode = check_shots(mode)
    x = born(ansatz_r, w.theta)
    return _shift_gradient(ansatz_c, w.phi, game.tilde_a.T, x, mode, rng, opponent)


def saddle_operator(game: EmbeddedGame, ansatz_r: AnsatzSpec, ansatz_c: AnsatzSpec, w: JointParams,
                    mode: Shots = EXACT, rng: Optional[np.random.Generator] = None,
                    opponent: str = "sampled") -> GradientEstimate:
    """Stacked ``(grad_theta L, -grad_phi L)``; the row block ascends, the column block descends.

    In shot mode the two players draw from independent children of ``rng``.
    """
    mode = check_shots(mode)
    rng_r = rng_c = None
    if mode is not EXACT:
        if rng is None:
            raise InvalidArgumentError("shot-mode gradients need a random generator")
        rng_r, rng_c = rng.spawn(2)
    gr = grad_row(game, ansatz_r, ansatz_c, w, mode, rng_r, opponent)
    gc = grad_col(game, ansatz_r, ansatz_c, w, mode, rng_c, opponent)
    return GradientEstimate(np.concatenate([gr, -gc]), mode, 2 * w.d)


class Oracle:
    """Saddle operator bound to one game, ansatz pair and shot budget.

    Shot noise for a call is drawn from streams keyed by ``(seed, *key, side)``
    so a run is reproducible independent of evaluation order.
    """

    def __init__(self, game: EmbeddedGame, ansatz_r: AnsatzSpec, ansatz_c: AnsatzSpec,
                 shots: Shots = EXACT, seed: int = 0, opponent: str = "sampled"):
        if ansatz_r.dim != game.M or ansatz_c.dim != game.N:
            raise InvalidArgumentError(
                f"ansatz registers ({ansatz_r.dim}, {ansatz_c.dim}) do not match game ({game.M}, {game.N})")
        if opponent not in OPPONENT_MODES:
            raise ConfigError(f"opponent mode must be one of {OPPONENT_MODES}, got {opponent!r}")
        self.game = game
        self.ansatz_r = ansatz_r
        self.ansatz_c = ansatz_c
        self.shots = check_shots(shots)
        self.seed = int(seed)
        self.opponent = opponent

    @property
    def d_r(self) -> int:
        return self.ansatz_r.param_count

    @property
    def d(self) -> int:
        return self.ansatz_r.param_count + self.ansatz_c.param_count

    @property
    def exact(self) -> bool:
        return self.shots is EXACT

    def split(self, vec) -> JointParams:
        return JointParams.from_vector(vec, self.d_r)

    def strategies(self, vec) -> tuple[np.ndarray, np.ndarray]:
        """Padded Born strategies ``(x_theta, y_phi)``."""
        w = self.split(vec)
        return born(self.ansatz_r, w.theta), born(self.ansatz_c, w.phi)

    def payoff(self, vec) -> float:
        x, y = self.strategies(vec)
        return float(x @ self.game.tilde_a @ y)

    def __call__(self, vec, key: tuple[int, ...] = (), exact: bool = False) -> np.ndarray:
        """Operator value at a flat parameter vector; ``exact`` forces infinite shots."""
        w = self.split(vec)
        x, y = self.strategies(vec)
        tilde = self.game.tilde_a
        if self.exact or exact:
            gr = _shift_gradient(self.ansatz_r, w.theta, tilde, y, EXACT, None, self.opponent)
            gc = _shift_gradient(self.ansatz_c, w.phi, tilde.T, x, EXACT, None, self.opponent)
        else:
            gr = _shift_gradient(self.ansatz_r, w.theta, tilde, y, self.shots,
                                 substream(self.seed, *key, 0), self.opponent)
            gc = _shift_gradient(self.ansatz_c, w.phi, tilde.T, x, self.shots,
                                 substream(self.seed, *key, 1), self.opponent)
        return np.concatenate([gr, -gc])
