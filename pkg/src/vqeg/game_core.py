"""Zero-sum matrix games, mixed strategies and equilibrium certificates.

The row player maximizes ``x^T A y`` and the column player minimizes it.
Everything here is a pure function over immutable values.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

from .errors import DegenerateStrategyError, InvalidArgumentError

SIMPLEX_TOL = 1e-12


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PayoffMatrix:
    """Row player's payoff matrix ``A`` of shape ``(m, n)``."""

    entries: np.ndarray

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=float)
        if entries.ndim != 2 or entries.shape[0] < 1 or entries.shape[1] < 1:
            raise InvalidArgumentError(f"payoff matrix must be a non-empty 2-D array, got shape {entries.shape}")
        if not np.all(np.isfinite(entries)):
            raise InvalidArgumentError("payoff matrix has non-finite entries")
        object.__setattr__(self, "entries", _frozen(entries))

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    @property
    def n(self) -> int:
        return self.entries.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    def inf_norm(self) -> float:
        """Largest absolute entry (not the operator norm)."""
        return float(np.max(np.abs(self.entries)))

    def __eq__(self, other):
        if not isinstance(other, PayoffMatrix):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.entries, other.entries))

    def __hash__(self):
        return hash((self.shape, self.entries.tobytes()))

    def to_json(self) -> str:
        return json.dumps({"m": self.m, "n": self.n, "entries": self.entries.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "PayoffMatrix":
        try:
            obj = json.loads(text)
            m, n = int(obj["m"]), int(obj["n"])
            entries = np.array(obj["entries"], dtype=float)
        except (ValueError, KeyError, TypeError) as exc:
            raise InvalidArgumentError(f"malformed matrix file: {exc}") from exc
        if entries.shape != (m, n):
            raise InvalidArgumentError(f"declared dims ({m}, {n}) do not match entries {entries.shape}")
        return cls(entries)

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: Union[str, Path]) -> "PayoffMatrix":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


@dataclass(frozen=True)
class MixedStrategy:
    """A point on the probability simplex.

    Tiny negative components (round-off) are clipped to zero and the vector is
    renormalized at construction; anything clearly off the simplex is rejected.
    """

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float).ravel()
        if p.size == 0 or not np.all(np.isfinite(p)):
            raise InvalidArgumentError("strategy must be a non-empty finite vector")
        if p.min() < -1e-9:
            raise InvalidArgumentError(f"strategy has negative component {p.min():.3g}")
        p = np.clip(p, 0.0, None)
        total = p.sum()
        if total <= 0:
            raise InvalidArgumentError("strategy has zero total mass")
        if abs(total - 1.0) > SIMPLEX_TOL:
            p = p / total
        object.__setattr__(self, "probs", _frozen(p))

    def __len__(self):
        return self.probs.size

    def __eq__(self, other):
        if not isinstance(other, MixedStrategy):
            return NotImplemented
        return bool(np.array_equal(self.probs, other.probs))

    def __hash__(self):
        return hash(self.probs.tobytes())

    @classmethod
    def pure(cls, size: int, index: int) -> "MixedStrategy":
        p = np.zeros(size)
        p[index] = 1.0
        return cls(p)

    @classmethod
    def uniform(cls, size: int) -> "MixedStrategy":
        return cls(np.full(size, 1.0 / size))

    def support(self, tol: float = 1e-9) -> list[int]:
        return [int(i) for i in np.flatnonzero(self.probs > tol)]


@dataclass(frozen=True)
class EmbeddedGame:
    """Dominated padding of a game to power-of-two action counts.

    ``tilde_a`` keeps ``A`` in its top-left block; dummy rows pay ``-c`` and
    dummy columns pay ``+c`` against real actions, so every dummy action is
    strictly dominated once ``c`` exceeds the largest absolute payoff.
    """

    tilde_a: np.ndarray
    m: int
    n: int
    c: float
    original: PayoffMatrix = field(repr=False, compare=False)

    @property
    def M(self) -> int:
        return self.tilde_a.shape[0]

    @property
    def N(self) -> int:
        return self.tilde_a.shape[1]

    def matrix(self) -> PayoffMatrix:
        return PayoffMatrix(self.tilde_a)

    def inf_norm(self) -> float:
        return float(np.max(np.abs(self.tilde_a)))


class GameKind(str, enum.Enum):
    DOMINANT_ROW = "dominant"
    MATCHING_PENNIES = "pennies"
    RANDOM = "random"


@dataclass(frozen=True)
class GameInstance:
    matrix: PayoffMatrix
    kind: GameKind
    seed: int
    label: str


StrategyLike = Union[MixedStrategy, np.ndarray, list]
MatrixLike = Union[PayoffMatrix, np.ndarray, list]


def as_matrix(a: MatrixLike) -> PayoffMatrix:
    return a if isinstance(a, PayoffMatrix) else PayoffMatrix(np.asarray(a, dtype=float))


def as_strategy(x: StrategyLike) -> MixedStrategy:
    return x if isinstance(x, MixedStrategy) else MixedStrategy(np.asarray(x, dtype=float))


def _checked(a: MatrixLike, x: StrategyLike, y: StrategyLike):
    a, x, y = as_matrix(a), as_strategy(x), as_strategy(y)
    if len(x) != a.m or len(y) != a.n:
        raise InvalidArgumentError(f"strategy dims ({len(x)}, {len(y)}) do not match game {a.shape}")
    return a.entries, x.probs, y.probs


def payoff(a: MatrixLike, x: StrategyLike, y: StrategyLike) -> float:
    """Expected payoff ``x^T A y`` to the row player."""
    A, xp, yp = _checked(a, x, y)
    return float(xp @ A @ yp)


def row_best_response_value(a: MatrixLike, y: StrategyLike) -> float:
    """``max_i (A y)_i``: what the row player gets by best-responding to ``y``."""
    a, y = as_matrix(a), as_strategy(y)
    if len(y) != a.n:
        raise InvalidArgumentError(f"column strategy has {len(y)} entries, game has {a.n} columns")
    return float(np.max(a.entries @ y.probs))


def col_best_response_value(a: MatrixLike, x: StrategyLike) -> float:
    """``min_j (x^T A)_j``: what the column player concedes by best-responding to ``x``."""
    a, x = as_matrix(a), as_strategy(x)
    if len(x) != a.m:
        raise InvalidArgumentError(f"row strategy has {len(x)} entries, game has {a.m} rows")
    return float(np.min(x.probs @ a.entries))


def deviation_gains(a: MatrixLike, x: StrategyLike, y: StrategyLike) -> tuple[float, float]:
    """Unilateral improvement available to the row and to the column player."""
    A, xp, yp = _checked(a, x, y)
    ay = A @ yp
    xa = xp @ A
    value = float(xp @ ay)
    # Clamp round-off so gains are never reported negative.
    return max(float(ay.max()) - value, 0.0), max(value - float(xa.min()), 0.0)


def nash_gap(a: MatrixLike, x: StrategyLike, y: StrategyLike) -> float:
    """Duality gap ``max_i (Ay)_i - min_j (x^T A)_j``; zero exactly at equilibria."""
    A, xp, yp = _checked(a, x, y)
    return max(float((A @ yp).max() - (xp @ A).min()), 0.0)


def _next_pow2(k: int) -> int:
    return 1 << (k - 1).bit_length()


def embed_dominated(a: MatrixLike, c_margin: float = 1.0) -> EmbeddedGame:
    """Pad ``A`` to ``(2^ceil(log2 m), 2^ceil(log2 n))`` with strictly dominated dummies."""
    if not c_margin > 0:
        raise InvalidArgumentError(f"c_margin must be positive, got {c_margin}")
    a = as_matrix(a)
    m, n = a.shape
    big_m, big_n = _next_pow2(m), _next_pow2(n)
    c = a.inf_norm() + c_margin
    tilde = np.zeros((big_m, big_n))
    tilde[:m, :n] = a.entries
    tilde[m:, :n] = -c
    tilde[:m, n:] = c
    return EmbeddedGame(tilde_a=_frozen(tilde), m=m, n=n, c=c, original=a)


def restrict_strategy(xt: StrategyLike, m: int) -> tuple[MixedStrategy, float]:
    """Drop dummy actions beyond index ``m`` and renormalize.

    Returns the restricted strategy and the leaked mass that sat on dummies.
    """
    p = as_strategy(xt).probs
    if not 1 <= m <= p.size:
        raise InvalidArgumentError(f"cannot restrict a strategy over {p.size} actions to {m}")
    leakage = float(p[m:].sum())
    kept = p[:m]
    if kept.sum() <= 0.0:
        raise DegenerateStrategyError("all probability mass is on dummy actions")
    return MixedStrategy(kept / kept.sum()), leakage


def extend_strategy(x: StrategyLike, big: int) -> MixedStrategy:
    """Append zero-probability dummy actions up to ``big`` entries."""
    p = as_strategy(x).probs
    if big < p.size:
        raise InvalidArgumentError(f"cannot extend a strategy over {p.size} actions to {big}")
    return MixedStrategy(np.concatenate([p, np.zeros(big - p.size)]))


def _check_size(size: int) -> None:
    if size < 2:
        raise InvalidArgumentError(f"instance size must be >= 2, got {size}")


def gen_dominant_row(size: int, seed: int) -> GameInstance:
    """Random game whose last row strictly dominates every other row.

    The pure equilibrium is (last row, argmin of the last row).
    """
    _check_size(size)
    seed = int(seed)
    rng = np.random.default_rng(seed)
    body = rng.uniform(-1.0, 1.0, size=(size - 1, size))
    margin = rng.uniform(0.05, 0.2, size=size)
    a = np.vstack([body, body.max(axis=0) + margin])
    return GameInstance(PayoffMatrix(a), GameKind.DOMINANT_ROW, seed, f"dominant-{size}x{size}-s{seed}")


def gen_matching_pennies(size: int, seed: int = 0) -> GameInstance:
    """``+1`` on the diagonal, ``-1`` elsewhere; the uniform profile is the equilibrium."""
    _check_size(size)
    a = 2.0 * np.eye(size) - 1.0
    return GameInstance(PayoffMatrix(a), GameKind.MATCHING_PENNIES, int(seed), f"pennies-{size}x{size}")


def gen_random(size: int, seed: int) -> GameInstance:
    _check_size(size)
    seed = int(seed)
    rng = np.random.default_rng(seed)
    a = rng.uniform(-1.0, 1.0, size=(size, size))
    return GameInstance(PayoffMatrix(a), GameKind.RANDOM, seed, f"random-{size}x{size}-s{seed}")


GENERATORS = {
    GameKind.DOMINANT_ROW: gen_dominant_row,
    GameKind.MATCHING_PENNIES: gen_matching_pennies,
    GameKind.RANDOM: gen_random,
}


def generate(kind: Union[GameKind, str], size: int, seed: Union[int, str] = 0) -> GameInstance:
    """Build an instance by kind name; ``seed`` may be a decimal string."""
    try:
        kind = GameKind(kind)
    except ValueError:
        raise InvalidArgumentError(f"unknown game kind {kind!r}") from None
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise InvalidArgumentError(f"seed must fit in 64 unsigned bits, got {seed}")
    return GENERATORS[kind](size, seed)
