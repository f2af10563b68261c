"""Statevector simulation of compiled circuits.

Amplitudes live in a flat complex array indexed with qubit 0 as the most
significant bit; kernels work on a ``(2,) * m`` view so a gate only touches
the slice selected by its control bits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._random import make_rng
from .circuit import CircuitIR, CliquePhase, Hadamard
from .model import DenseDistribution

SIM_LIMIT = 26
DEGENERATE_SUCCESS = 1e-15
# Shots are processed in fixed-size chunks, each with its own random stream
# keyed by (seed, chunk index); results do not depend on how chunks are scheduled.
SHOT_CHUNK = 1 << 16
NOISY_AMPLITUDES = 1 << 22  # per noisy chunk, bounds trajectory memory

_INV_SQRT2 = 1.0 / math.sqrt(2.0)


class DegenerateSuccessError(RuntimeError):
    """The post-selection event has (numerically) zero probability."""


@dataclass
class StateVector:
    amplitudes: np.ndarray
    m: int

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape((2,) * self.m)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True)
class NoiseConfig:
    """Toy trajectory noise.  Not a hardware model.

    ``readout_flip_prob`` is a single probability or one per qubit.
    """

    readout_flip_prob: float | Sequence[float] = 0.0
    depolarizing_prob: float = 0.0
    enabled: bool = True

    def __post_init__(self):
        probs = np.atleast_1d(np.asarray(self.readout_flip_prob, dtype=float))
        if np.any(probs < 0) or np.any(probs > 0.5):
            raise ValueError("readout flip probabilities must lie in [0, 1/2]")
        if not 0.0 <= self.depolarizing_prob <= 0.5:
            raise ValueError("depolarizing probability must lie in [0, 1/2]")

    @property
    def active(self) -> bool:
        return self.enabled and (self.depolarizing_prob > 0 or np.any(np.asarray(self.readout_flip_prob) > 0))

    def readout_vector(self, m: int) -> np.ndarray:
        probs = np.asarray(self.readout_flip_prob, dtype=float)
        if probs.ndim == 0:
            return np.full(m, float(probs))
        if probs.size != m:
            raise ValueError(f"need {m} readout probabilities, got {probs.size}")
        return probs


def _check_size(m, limit):
    limit = SIM_LIMIT if limit is None else limit
    if m > limit:
        raise ValueError(f"{m} qubits exceeds the simulator limit of {limit}")


def prepare_plus(m: int, limit=None) -> StateVector:
    _check_size(m, limit)
    return StateVector(np.full(2 ** m, 2.0 ** (-m / 2), dtype=complex), m)


def _check_qubits(gate, m):
    for q in gate.qubits:
        if not 0 <= q < m:
            raise ValueError(f"gate {gate} addresses qubit {q} outside [0, {m})")


def _apply(t: np.ndarray, gate, offset: int) -> None:
    """Apply ``gate`` in place to tensor ``t`` whose qubit axes start at ``offset``."""
    lead = (slice(None),) * offset
    if isinstance(gate, Hadamard):
        i0 = lead + (slice(None),) * gate.qubit + (0,)
        i1 = lead + (slice(None),) * gate.qubit + (1,)
        a, b = t[i0].copy(), t[i1]
        t[i0] = (a + b) * _INV_SQRT2
        t[i1] = (a - b) * _INV_SQRT2
    elif isinstance(gate, CliquePhase):
        m = t.ndim - offset
        index = [slice(None)] * m
        index[gate.rp_control] = gate.polarity
        for v, b in zip(gate.targets, gate.y):
            index[v] = b
        phase = gate.phase
        index[gate.embed] = 0
        t[lead + tuple(index)] *= phase
        index[gate.embed] = 1
        t[lead + tuple(index)] *= phase.conjugate()
    else:
        raise TypeError(f"unknown gate {gate!r}")


def apply_gate(state: StateVector, gate) -> StateVector:
    _check_qubits(gate, state.m)
    _apply(state.tensor(), gate, 0)
    return state


def run_circuit(circuit: CircuitIR, limit=None) -> StateVector:
    state = prepare_plus(circuit.m, limit)
    for gate in circuit.gates:
        apply_gate(state, gate)
    return state


def _split(probs: np.ndarray, circuit: CircuitIR) -> np.ndarray:
    """Outcome probabilities as ``(2**n, 2, 2**k)``: targets, embed bit, rp bits."""
    n, k = circuit.layout.n_target, circuit.layout.n_cliques
    return probs.reshape(2 ** n, 2, 2 ** k)


def exact_conditional(circuit: CircuitIR, limit=None):
    """Target distribution given all rp auxiliaries read 0, and that event's probability."""
    probs = _split(run_circuit(circuit, limit).probabilities(), circuit)
    accepted = probs[:, :, 0]
    delta = float(accepted.sum())
    if delta < DEGENERATE_SUCCESS:
        raise DegenerateSuccessError(f"success probability {delta:.3g} is degenerate")
    p = accepted.sum(axis=1) / delta
    return DenseDistribution(p, circuit.n), delta


def embed_conditionals(circuit: CircuitIR, limit=None):
    """``P(x | rp = 0, z)`` for z = 0 and z = 1 separately."""
    probs = _split(run_circuit(circuit, limit).probabilities(), circuit)
    out = []
    for z in (0, 1):
        col = probs[:, z, 0]
        out.append(col / col.sum())
    return out


@dataclass(frozen=True)
class ShotRecord:
    target_bits: tuple
    embed_bit: int
    rp_bits: tuple
    accepted: bool


@dataclass(frozen=True, eq=False)
class ShotBatch:
    """Column-oriented shot outcomes; indexing yields :class:`ShotRecord`."""

    target_bits: np.ndarray   # (N, n) uint8
    embed_bits: np.ndarray    # (N,) uint8
    rp_bits: np.ndarray       # (N, k) uint8
    accepted: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "accepted", ~self.rp_bits.any(axis=1))

    def __len__(self):
        return self.target_bits.shape[0]

    def __getitem__(self, i):
        return ShotRecord(
            tuple(int(b) for b in self.target_bits[i]),
            int(self.embed_bits[i]),
            tuple(int(b) for b in self.rp_bits[i]),
            bool(self.accepted[i]),
        )

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def accepted_targets(self) -> np.ndarray:
        return self.target_bits[self.accepted]

    @property
    def success_rate(self) -> float:
        return float(self.accepted.mean()) if len(self) else 0.0


def _decode(indices: np.ndarray, m: int) -> np.ndarray:
    shifts = np.arange(m - 1, -1, -1, dtype=np.int64)
    return ((indices[:, None] >> shifts[None, :]) & 1).astype(np.uint8)


_PAULI_CHOICES = ("X", "Z", "XZ")


def apply_noise_trajectory(state: StateVector, gate, noise: NoiseConfig, rng) -> StateVector:
    """Single-trajectory depolarizing step after ``gate`` has been applied."""
    if not noise.enabled or noise.depolarizing_prob <= 0:
        return state
    t = state.tensor()
    for q in gate.qubits:
        if rng.random() < noise.depolarizing_prob:
            _apply_pauli(t, q, _PAULI_CHOICES[rng.integers(3)], 0)
    return state


def _apply_pauli(t, q, which, offset):
    lead = (slice(None),) * offset + (slice(None),) * q
    if "X" in which:
        a = t[lead + (0,)].copy()
        t[lead + (0,)] = t[lead + (1,)]
        t[lead + (1,)] = a
    if "Z" in which:
        t[lead + (1,)] *= -1


def _noisy_chunk(circuit, size, noise, rng) -> np.ndarray:
    """Sample ``size`` basis-state indices, one depolarizing trajectory per shot."""
    m = circuit.m
    psi = np.full((size,) + (2,) * m, 2.0 ** (-m / 2), dtype=complex)
    p = noise.depolarizing_prob if noise.enabled else 0.0
    for gate in circuit.gates:
        _apply(psi, gate, 1)
        if p <= 0:
            continue
        for q in gate.qubits:
            hit = rng.random(size) < p
            kind = rng.integers(3, size=size)
            for code, which in enumerate(_PAULI_CHOICES):
                rows = np.flatnonzero(hit & (kind == code))
                if rows.size:
                    sub = psi[rows]
                    _apply_pauli(sub, q, which, 1)
                    psi[rows] = sub
    probs = np.abs(psi.reshape(size, -1)) ** 2
    cdf = np.cumsum(probs, axis=1)
    u = rng.random(size) * cdf[:, -1]
    idx = (cdf < u[:, None]).sum(axis=1)
    return np.minimum(idx, 2 ** m - 1)


def sample_shots(circuit: CircuitIR, n_shots: int, seed=0, noise: NoiseConfig | None = None,
                 limit=None) -> ShotBatch:
    if n_shots < 1:
        raise ValueError("need at least one shot")
    m = circuit.m
    _check_size(m, limit)
    noisy_gates = noise is not None and noise.enabled and noise.depolarizing_prob > 0
    parts = []
    if noisy_gates:
        step = max(1, min(8192, NOISY_AMPLITUDES >> m))
        for chunk, start in enumerate(range(0, n_shots, step)):
            size = min(step, n_shots - start)
            parts.append(_noisy_chunk(circuit, size, noise, make_rng(seed, 1, chunk)))
    else:
        cdf = np.cumsum(run_circuit(circuit, limit).probabilities())
        for chunk, start in enumerate(range(0, n_shots, SHOT_CHUNK)):
            size = min(SHOT_CHUNK, n_shots - start)
            u = make_rng(seed, 0, chunk).random(size) * cdf[-1]
            parts.append(np.minimum(np.searchsorted(cdf, u, side="right"), 2 ** m - 1))
    bits = _decode(np.concatenate(parts), m)

    if noise is not None and noise.enabled:
        flip = noise.readout_vector(m)
        if np.any(flip > 0):
            rng = make_rng(seed, 2)
            bits ^= (rng.random(bits.shape) < flip[None, :]).astype(np.uint8)

    n = circuit.n
    return ShotBatch(bits[:, :n].copy(), bits[:, n].copy(), bits[:, n + 1:].copy())
