"""Compile a graphical model into the post-selected sampling circuit.

Qubit layout for ``n`` vertices and ``k`` cliques (``m = n + 1 + k``)::

    0 .. n-1        target register, one qubit per vertex
    n               embedding auxiliary (outcome marginalized)
    n+1 .. n+k      one real-part-extraction auxiliary per clique

Qubit 0 is the most significant bit of a basis-state index.  The circuit
acts on ``|+>^m``; for each clique it applies, for every local configuration
``y``, the diagonal phase ``exp(+-2i*gamma)`` (sign set by the embedding
auxiliary) controlled on the clique's rp auxiliary being 0, its adjoint
controlled on the auxiliary being 1, and finally a Hadamard on that
auxiliary.  Conditioned on every rp auxiliary reading 0 the target register
is distributed exactly as the model.
"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .model import GraphicalModel, normalize_for_circuit
from .pauli import build_statistic, materialize_statistic

THETA_FLOOR = -60.0
BLOCK_LIMIT = 10


@dataclass(frozen=True)
class QubitLayout:
    n_target: int
    n_cliques: int

    @property
    def embed_aux(self) -> int:
        return self.n_target

    def rp_aux(self, c: int) -> int:
        if not 0 <= c < self.n_cliques:
            raise IndexError(c)
        return self.n_target + 1 + c

    @property
    def m(self) -> int:
        return self.n_target + 1 + self.n_cliques


@dataclass(frozen=True)
class Hadamard:
    qubit: int

    @property
    def qubits(self):
        return (self.qubit,)


@dataclass(frozen=True)
class CliquePhase:
    """Diagonal phase on the states where ``rp_control == polarity`` and the
    clique's target bits equal ``y``: ``exp(+2i*gamma)`` when the embedding
    auxiliary is 0, ``exp(-2i*gamma)`` when it is 1, conjugated if ``adjoint``.
    """

    rp_control: int
    polarity: int
    clique: int
    targets: tuple
    y: tuple
    embed: int
    gamma: float
    adjoint: bool = False

    @property
    def qubits(self):
        return (self.rp_control, *self.targets, self.embed)

    @property
    def phase(self) -> complex:
        """Phase applied when the embedding auxiliary is 0."""
        sign = -1.0 if self.adjoint else 1.0
        return complex(np.exp(1j * sign * 2.0 * self.gamma))


@dataclass(frozen=True, eq=False)
class CircuitIR:
    layout: QubitLayout
    cliques: tuple
    gates: tuple
    gammas: dict
    theta: np.ndarray | None = None   # parameters after normalize_for_circuit
    shift: float = 0.0                # constant added to the source theta

    @property
    def m(self) -> int:
        return self.layout.m

    @property
    def n(self) -> int:
        return self.layout.n_target


def theta_to_gamma(theta: float) -> float:
    if theta > 0:
        raise ValueError(f"angle conversion needs theta <= 0, got {theta}")
    return 0.5 * math.acos(math.exp(theta / 2.0))


def gamma_to_theta(gamma: float) -> float:
    # cos(pi/2) evaluates to ~6e-17, so the upper bound is checked on gamma itself
    if not 0.0 <= gamma < math.pi / 4:
        raise ValueError(f"gamma={gamma} outside [0, pi/4)")
    return 2.0 * math.log(math.cos(2.0 * gamma))


def build_circuit(model: GraphicalModel) -> CircuitIR:
    normalized = normalize_for_circuit(model)
    shift = float(normalized.theta[0] - model.theta[0])
    theta = np.array(normalized.theta)
    low = theta < THETA_FLOOR
    if low.any():
        warnings.warn(
            f"{int(low.sum())} parameters below {THETA_FLOOR} after normalization were floored",
            stacklevel=2,
        )
        theta[low] = THETA_FLOOR

    layout = QubitLayout(model.n, len(model.cliques))
    gates, gammas = [], {}
    for c, clique in enumerate(model.cliques):
        rp = layout.rp_aux(c)
        for k, y in enumerate(itertools.product((0, 1), repeat=len(clique))):
            gamma = theta_to_gamma(float(theta[model.offsets[c] + k]))
            gammas[(c, y)] = gamma
            gates.append(CliquePhase(rp, 0, c, clique, y, layout.embed_aux, gamma, adjoint=False))
            gates.append(CliquePhase(rp, 1, c, clique, y, layout.embed_aux, gamma, adjoint=True))
        gates.append(Hadamard(rp))
    theta.flags.writeable = False
    return CircuitIR(layout, model.cliques, tuple(gates), gammas, theta, shift)


def reorder_gates(circuit: CircuitIR, gates) -> CircuitIR:
    return CircuitIR(circuit.layout, circuit.cliques, tuple(gates), circuit.gammas,
                     circuit.theta, circuit.shift)


# -- dense oracle ------------------------------------------------------------

_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Z = np.diag([1.0 + 0j, -1.0])
_P0 = np.diag([1.0 + 0j, 0.0])
_P1 = np.diag([0.0 + 0j, 1.0])


def _permute_operator(op, order):
    """Relabel an operator given on qubits ``order`` (MSB first) into 0..m-1."""
    m = len(order)
    t = op.reshape((2,) * (2 * m))
    inv = np.argsort(order)
    t = t.transpose(list(inv) + [m + i for i in inv])
    return t.reshape(2 ** m, 2 ** m)


def embedding_unitary(stat, gamma: float) -> np.ndarray:
    """``((exp(i gamma Z) (x) I) U_j)^2`` with ``U_j = X (x) (I-Phi) + Z (x) Phi``,
    auxiliary first, built densely from Kronecker products."""
    phi = np.diag(materialize_statistic(stat).astype(complex))
    eye = np.eye(phi.shape[0], dtype=complex)
    U = np.kron(_X, eye - phi) + np.kron(_Z, phi)
    rot = np.kron(np.diag([np.exp(1j * gamma), np.exp(-1j * gamma)]), eye)
    W = rot @ U
    return W @ W


def materialize_block(circuit: CircuitIR, clique: int) -> np.ndarray:
    """Dense operator of one clique block (rp Hadamards excluded), test support."""
    layout, m = circuit.layout, circuit.m
    if m > BLOCK_LIMIT:
        raise ValueError(f"refusing to materialize a {m}-qubit block (limit {BLOCK_LIMIT})")
    n = layout.n_target
    rp = layout.rp_aux(clique)
    others = [q for q in range(n + 1, m) if q != rp]
    block = np.eye(2 ** (n + 1), dtype=complex)
    for (c, y), gamma in circuit.gammas.items():
        if c == clique:
            block = embedding_unitary(build_statistic(circuit.cliques[c], y, n), gamma) @ block
    R = np.kron(_P0, block) + np.kron(_P1, block.conj().T)
    full = np.kron(R, np.eye(2 ** len(others), dtype=complex))
    order = [rp, layout.embed_aux, *range(n), *others]
    return _permute_operator(full, order)


def hadamard_operator(m: int, qubit: int) -> np.ndarray:
    H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
    return np.kron(np.kron(np.eye(2 ** qubit), H), np.eye(2 ** (m - qubit - 1)))
