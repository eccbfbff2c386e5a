"""Statevector simulation of the layered RY/RZ + CZ-ring ansatz.

Qubit 0 is the most significant bit of a basis index, so outcome ``i`` of a
``q``-qubit register reads ``i = sum_k b_k 2^(q-1-k)``.

Two paths exist: single-state gate functions that mirror the textbook gate
definitions, and a batched preparer that evaluates many parameter vectors at
once. The optimizer only uses the batched path; tests pin the two together.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InvalidArgumentError
from .game_core import MixedStrategy

MAX_QUBITS = 20


@dataclass(frozen=True)
class StateVector:
    amps: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amps, dtype=complex)
        q = amps.size.bit_length() - 1
        if amps.ndim != 1 or amps.size != 1 << q or q < 1:
            raise InvalidArgumentError(f"state must have 2^q amplitudes, got {amps.shape}")
        amps.setflags(write=False)
        object.__setattr__(self, "amps", amps)

    @property
    def q(self) -> int:
        return self.amps.size.bit_length() - 1

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amps) ** 2)))


@dataclass(frozen=True)
class AnsatzSpec:
    """Hardware-efficient ansatz with ``q`` qubits and ``layers`` repetitions.

    Parameters are laid out layer by layer; inside a layer the ``q`` RY
    angles come first, then the ``q`` RZ angles.
    """

    q: int
    layers: int

    def __post_init__(self):
        if not 1 <= self.q <= MAX_QUBITS:
            raise InvalidArgumentError(f"qubit count must be in [1, {MAX_QUBITS}], got {self.q}")
        if self.layers < 1:
            raise InvalidArgumentError(f"layer count must be >= 1, got {self.layers}")

    @property
    def param_count(self) -> int:
        return 2 * self.q * self.layers

    @property
    def dim(self) -> int:
        return 1 << self.q

    @classmethod
    def for_actions(cls, count: int, layers: int) -> "AnsatzSpec":
        """Ansatz whose register holds exactly ``count`` outcomes (a power of two)."""
        q = count.bit_length() - 1
        if count < 2 or 1 << q != count:
            raise InvalidArgumentError(f"action count must be a power of two >= 2, got {count}")
        return cls(q, layers)


def ring_pairs(q: int) -> list[tuple[int, int]]:
    """Entangler pairs of the CZ ring; degenerate for one or two qubits."""
    if q == 1:
        return []
    if q == 2:
        return [(0, 1)]
    return [(k, (k + 1) % q) for k in range(q)]


def _check_qubit(q: int, k: int) -> None:
    if not 0 <= k < q:
        raise InvalidArgumentError(f"qubit index {k} out of range for {q} qubits")


def zero_state(q: int) -> StateVector:
    if not 1 <= q <= MAX_QUBITS:
        raise InvalidArgumentError(f"qubit count must be in [1, {MAX_QUBITS}], got {q}")
    amps = np.zeros(1 << q, dtype=complex)
    amps[0] = 1.0
    return StateVector(amps)


def _split(amps: np.ndarray, q: int, k: int) -> np.ndarray:
    # View with the target qubit on axis -2: (..., 2^k, 2, 2^(q-k-1)).
    return amps.reshape(amps.shape[:-1] + (1 << k, 2, 1 << (q - k - 1)))


def apply_ry(s: StateVector, qubit: int, angle: float) -> StateVector:
    _check_qubit(s.q, qubit)
    c, sn = np.cos(angle / 2), np.sin(angle / 2)
    v = _split(s.amps, s.q, qubit)
    out = np.empty_like(v)
    out[..., 0, :] = c * v[..., 0, :] - sn * v[..., 1, :]
    out[..., 1, :] = sn * v[..., 0, :] + c * v[..., 1, :]
    return StateVector(out.reshape(-1))


def apply_rz(s: StateVector, qubit: int, angle: float) -> StateVector:
    _check_qubit(s.q, qubit)
    v = _split(s.amps, s.q, qubit).copy()
    v[..., 0, :] *= np.exp(-0.5j * angle)
    v[..., 1, :] *= np.exp(0.5j * angle)
    return StateVector(v.reshape(-1))


def apply_cz(s: StateVector, q1: int, q2: int) -> StateVector:
    _check_qubit(s.q, q1)
    _check_qubit(s.q, q2)
    if q1 == q2:
        raise InvalidArgumentError("CZ needs two distinct qubits")
    bits = _bits(s.q)
    both = bits[q1] & bits[q2]
    return StateVector(np.where(both, -s.amps, s.amps))


@lru_cache(maxsize=None)
def _bits(q: int) -> np.ndarray:
    """``bits[k, i]`` is bit ``k`` of basis index ``i`` (qubit 0 = MSB)."""
    idx = np.arange(1 << q)
    out = np.array([(idx >> (q - 1 - k)) & 1 for k in range(q)], dtype=np.int64)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def _ring_signs(q: int) -> np.ndarray:
    bits = _bits(q)
    parity = np.zeros(1 << q, dtype=np.int64)
    for a, b in ring_pairs(q):
        parity ^= bits[a] & bits[b]
    out = 1.0 - 2.0 * parity
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def _z_signs(q: int) -> np.ndarray:
    # RZ(t) multiplies by exp(i t (2b - 1) / 2), so a whole RZ layer is one phase.
    out = 2.0 * _bits(q) - 1.0
    out.setflags(write=False)
    return out


def _check_params(spec: AnsatzSpec, params: np.ndarray) -> np.ndarray:
    params = np.asarray(params, dtype=float)
    if params.shape[-1] != spec.param_count:
        raise InvalidArgumentError(f"expected {spec.param_count} parameters, got {params.shape[-1]}")
    return params


def prepare_ansatz(spec: AnsatzSpec, params) -> StateVector:
    """Gate-by-gate preparation of ``U(params)|0...0>``."""
    params = _check_params(spec, params)
    if params.ndim != 1:
        raise InvalidArgumentError("prepare_ansatz takes a single parameter vector")
    q = spec.q
    s = zero_state(q)
    for layer in range(spec.layers):
        block = params[2 * q * layer: 2 * q * (layer + 1)]
        for k in range(q):
            s = apply_ry(s, k, block[k])
        for k in range(q):
            s = apply_rz(s, k, block[q + k])
        for a, b in ring_pairs(q):
            s = apply_cz(s, a, b)
    return s


def prepare_batch(spec: AnsatzSpec, params) -> np.ndarray:
    """Amplitudes for a batch of parameter vectors, shape ``(B, 2^q)``.

    Same circuit as :func:`prepare_ansatz`, but each RZ layer and the CZ ring
    are folded into diagonal phase vectors.
    """
    params = np.atleast_2d(_check_params(spec, params))
    q, batch = spec.q, params.shape[0]
    amps = np.zeros((batch, 1 << q), dtype=complex)
    amps[:, 0] = 1.0
    zsigns, ring = _z_signs(q), _ring_signs(q)
    for layer in range(spec.layers):
        block = params[:, 2 * q * layer: 2 * q * (layer + 1)]
        half = 0.5 * block[:, :q]
        cos, sin = np.cos(half), np.sin(half)
        for k in range(q):
            v = _split(amps, q, k)
            c = cos[:, k, None, None]
            s = sin[:, k, None, None]
            a0, a1 = v[:, :, 0, :], v[:, :, 1, :]
            amps = np.stack([c * a0 - s * a1, s * a0 + c * a1], axis=2).reshape(batch, -1)
        phase = np.exp(0.5j * (block[:, q:] @ zsigns))
        amps = amps * phase * ring
    return amps


def born_distribution(s: StateVector) -> MixedStrategy:
    return MixedStrategy(np.abs(s.amps) ** 2)


def born_batch(amps: np.ndarray) -> np.ndarray:
    """Row-wise Born probabilities, renormalized against round-off."""
    p = amps.real ** 2 + amps.imag ** 2
    return p / p.sum(axis=-1, keepdims=True)


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for the stream addressed by ``(seed, *key)``.

    Streams with different keys are statistically independent, and the
    mapping does not depend on the order in which they are requested.
    """
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key)))


def sample_frequencies(probs: np.ndarray, shots: int, rng: np.random.Generator) -> np.ndarray:
    """Empirical outcome frequencies for each row of ``probs`` from ``shots`` draws.

    Inverse-CDF sampling: one uniform per shot, located in the row's
    cumulative distribution. Row ``b`` consumes the ``b``-th block of
    ``shots`` uniforms from ``rng``.
    """
    if int(shots) < 1:
        raise InvalidArgumentError(f"shots must be >= 1, got {shots}")
    probs = np.atleast_2d(probs)
    batch, k = probs.shape
    cdf = np.cumsum(probs, axis=1)
    cdf /= cdf[:, -1:]
    u = rng.random((batch, shots))
    counts = np.empty((batch, k))
    for b in range(batch):
        idx = np.searchsorted(cdf[b], u[b], side="right")
        counts[b] = np.bincount(np.minimum(idx, k - 1), minlength=k)
    return counts / shots


def sample_counts(s: StateVector, shots: int, rng_stream: np.random.Generator) -> MixedStrategy:
    """Measure ``s`` in the computational basis ``shots`` times; return frequencies."""
    probs = np.abs(s.amps) ** 2
    return MixedStrategy(sample_frequencies(probs, shots, rng_stream)[0])
