"""Symbolic Pauli-Markov statistics and the diagonal Hamiltonian.

A statistic for (clique C, local configuration y) is an n-fold tensor product
of the single-qubit factors I, (I+Z)/2 and (I-Z)/2.  Only the n tags are
stored; a diagonal entry is read off bit by bit without building any
``2**n`` matrix.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import GraphicalModel, all_states

MATERIALIZE_LIMIT = 12


class Factor(enum.Enum):
    IDENTITY = "I"
    PROJ_PLUS = "P+"    # (I + Z) / 2, projects on |0>
    PROJ_MINUS = "P-"   # (I - Z) / 2, projects on |1>

    @property
    def diagonal(self) -> tuple:
        return _DIAGONALS[self]


_DIAGONALS = {
    Factor.IDENTITY: (1, 1),
    Factor.PROJ_PLUS: (1, 0),
    Factor.PROJ_MINUS: (0, 1),
}


@dataclass(frozen=True)
class PauliMarkovStatistic:
    factors: tuple
    clique: tuple
    y: tuple

    @property
    def n(self) -> int:
        return len(self.factors)

    def __str__(self):
        return " ⊗ ".join(f.value for f in self.factors)


def build_statistic(clique: Sequence[int], y: Sequence[int], n: int) -> PauliMarkovStatistic:
    clique, y = tuple(int(v) for v in clique), tuple(int(b) for b in y)
    if len(clique) != len(y):
        raise ValueError("clique and local configuration differ in length")
    for v in clique:
        if not 0 <= v < n:
            raise ValueError(f"vertex {v} outside [0, {n})")
    local = dict(zip(clique, y))
    factors = []
    for v in range(n):
        if v not in local:
            factors.append(Factor.IDENTITY)
        elif local[v] == 1:
            factors.append(Factor.PROJ_MINUS)
        else:
            factors.append(Factor.PROJ_PLUS)
    return PauliMarkovStatistic(tuple(factors), clique, y)


def statistic_diag_entry(stat: PauliMarkovStatistic, j: int) -> int:
    n = stat.n
    if not 0 <= j < 2 ** n:
        raise IndexError(f"state index {j} outside [0, {2 ** n})")
    value = 1
    for v, f in enumerate(stat.factors):
        value *= f.diagonal[(j >> (n - 1 - v)) & 1]
    return value


def materialize_statistic(stat: PauliMarkovStatistic) -> np.ndarray:
    """Full ``2**n`` diagonal via Kronecker products (test support only)."""
    if stat.n > MATERIALIZE_LIMIT:
        raise ValueError(f"refusing to materialize a statistic on {stat.n} > {MATERIALIZE_LIMIT} qubits")
    diag = np.ones(1, dtype=np.int64)
    for f in stat.factors:
        diag = np.kron(diag, np.array(f.diagonal, dtype=np.int64))
    return diag


@dataclass(frozen=True)
class Hamiltonian:
    n: int
    terms: tuple  # ((coefficient, PauliMarkovStatistic), ...)

    def __str__(self):
        return "\n".join(f"{coef:+.6g} * {stat}" for coef, stat in self.terms)


def build_hamiltonian(model: GraphicalModel) -> Hamiltonian:
    terms = tuple(
        (-value, build_statistic(model.cliques[c], y, model.n))
        for c, y, value in model.parameters()
    )
    return Hamiltonian(model.n, terms)


def hamiltonian_diag_entry(H: Hamiltonian, j: int) -> float:
    # accumulates in clique order, so the result is bit-identical to -log_potential
    total = 0.0
    for coef, stat in H.terms:
        if statistic_diag_entry(stat, j):
            total += coef
    return float(total)


def hamiltonian_diagonal(H: Hamiltonian) -> np.ndarray:
    """All ``2**n`` diagonal entries at once, same summation order as above."""
    X = all_states(H.n)
    acc = np.zeros(X.shape[0])
    for coef, stat in H.terms:
        mask = np.ones(X.shape[0], dtype=bool)
        for v, f in enumerate(stat.factors):
            if f is Factor.PROJ_PLUS:
                mask &= X[:, v] == 0
            elif f is Factor.PROJ_MINUS:
                mask &= X[:, v] == 1
        acc = np.where(mask, acc + coef, acc)
    return acc
