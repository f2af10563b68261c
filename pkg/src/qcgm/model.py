"""Overcomplete binary graphical models and the exhaustive inference oracle.

A model over ``n`` binary vertices is a list of cliques plus one real
parameter per (clique, local configuration) pair.  Configurations are indexed
with vertex 0 as the most significant bit, i.e. state ``j`` of a 3-vertex
model has bits ``(j >> 2 & 1, j >> 1 & 1, j & 1)``.  Local configurations of a
clique are indexed the same way over the clique's (ascending) vertices.

Everything named ``*_brute`` enumerates all ``2**n`` states and refuses to run
above :data:`ORACLE_LIMIT` vertices.
"""
from __future__ import annotations

import hashlib
import itertools
import json
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.special import logsumexp

ORACLE_LIMIT = 20


class OracleLimitError(ValueError):
    """Raised when exhaustive enumeration is requested for too many vertices."""


def _check_oracle(n, limit):
    limit = ORACLE_LIMIT if limit is None else limit
    if n > limit:
        raise OracleLimitError(
            f"brute-force oracle refuses n={n} > limit {limit}; pass limit= to raise it"
        )


def index_to_bits(j: int, n: int) -> np.ndarray:
    return np.array([(j >> (n - 1 - v)) & 1 for v in range(n)], dtype=np.uint8)


def bits_to_index(bits: Sequence[int]) -> int:
    j = 0
    for b in bits:
        j = (j << 1) | int(b)
    return j


def all_states(n: int) -> np.ndarray:
    """``(2**n, n)`` array of every configuration, row ``j`` is state ``j``."""
    j = np.arange(2 ** n, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((j[:, None] >> shifts[None, :]) & 1).astype(np.uint8)


@dataclass(frozen=True, eq=False)
class GraphicalModel:
    """Binary Markov random field with overcomplete indicator statistics.

    ``theta`` is a flat vector of length ``d = sum_c 2**|C_c|``; the block of
    clique ``c`` starts at ``offsets[c]`` and is ordered by local index.
    """

    n: int
    cliques: tuple
    theta: np.ndarray
    offsets: tuple = field(init=False, repr=False)

    def __post_init__(self):
        n = int(self.n)
        if n < 1:
            raise ValueError("a model needs at least one vertex")
        cliques = tuple(tuple(int(v) for v in c) for c in self.cliques)
        if not cliques:
            raise ValueError("a model needs at least one clique")
        for c in cliques:
            if not c:
                raise ValueError("empty clique")
            if any(b <= a for a, b in zip(c, c[1:])):
                raise ValueError(f"clique {c} must be strictly ascending")
            if c[0] < 0 or c[-1] >= n:
                raise ValueError(f"clique {c} has a vertex outside [0, {n})")
        if len(set(cliques)) != len(cliques):
            raise ValueError("duplicate cliques")
        for a, b in itertools.permutations(cliques, 2):
            if set(a) < set(b):
                warnings.warn(f"clique {a} is contained in clique {b}", stacklevel=3)

        offsets, d = [], 0
        for c in cliques:
            offsets.append(d)
            d += 2 ** len(c)
        theta = np.array(self.theta, dtype=float).reshape(-1)
        if theta.shape != (d,):
            raise ValueError(f"theta must have d={d} entries, got {theta.size}")
        theta.flags.writeable = False
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "cliques", cliques)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "offsets", tuple(offsets))

    @classmethod
    def zeros(cls, n, cliques):
        d = sum(2 ** len(c) for c in cliques)
        return cls(n, cliques, np.zeros(d))

    @property
    def d(self) -> int:
        return self.theta.size

    def param_index(self, c: int, y: Sequence[int]) -> int:
        if len(y) != len(self.cliques[c]):
            raise ValueError("local configuration length does not match clique size")
        return self.offsets[c] + bits_to_index(y)

    def theta_of(self, c: int, y: Sequence[int]) -> float:
        return float(self.theta[self.param_index(c, y)])

    def parameters(self):
        """Yield ``(c, y, value)`` for every parameter in storage order."""
        for c, clique in enumerate(self.cliques):
            for k, y in enumerate(itertools.product((0, 1), repeat=len(clique))):
                yield c, y, float(self.theta[self.offsets[c] + k])

    def with_theta(self, theta) -> "GraphicalModel":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return GraphicalModel(self.n, self.cliques, theta)

    def local_indices(self, X) -> np.ndarray:
        """Flat parameter index active in each clique, ``(N, |cliques|)``."""
        X = np.asarray(X)
        if X.ndim != 2 or X.shape[1] != self.n:
            raise ValueError(f"configurations must have {self.n} bits")
        out = np.empty((X.shape[0], len(self.cliques)), dtype=np.int64)
        for c, clique in enumerate(self.cliques):
            k = np.zeros(X.shape[0], dtype=np.int64)
            for v in clique:
                k = (k << 1) | X[:, v].astype(np.int64)
            out[:, c] = self.offsets[c] + k
        return out

    def energies(self, X, theta=None) -> np.ndarray:
        """``theta^T phi(x)`` for each row of ``X`` (clique-order summation)."""
        theta = self.theta if theta is None else theta
        idx = self.local_indices(X)
        acc = np.zeros(idx.shape[0])
        for c in range(idx.shape[1]):
            acc = acc + theta[idx[:, c]]
        return acc

    def fingerprint(self) -> str:
        blob = json.dumps(model_to_dict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class DenseDistribution:
    """A pmf over ``2**n`` states, vertex 0 as the most significant bit."""

    probabilities: np.ndarray
    n: int

    def __post_init__(self):
        p = np.array(self.probabilities, dtype=float).reshape(-1)
        if p.size != 2 ** self.n:
            raise ValueError(f"expected {2 ** self.n} probabilities, got {p.size}")
        if np.any(p < 0):
            raise ValueError("negative probability")
        p.flags.writeable = False
        object.__setattr__(self, "probabilities", p)

    def __array__(self, dtype=None, copy=None):
        return self.probabilities if dtype is None else self.probabilities.astype(dtype)

    def __len__(self):
        return self.probabilities.size

    def __getitem__(self, j):
        return self.probabilities[j]


@dataclass(frozen=True, eq=False)
class Dataset:
    samples: np.ndarray
    weights: np.ndarray | None = None

    def __post_init__(self):
        X = np.array(self.samples, dtype=np.uint8)
        if X.ndim != 2:
            raise ValueError("samples must be a 2-d array of bits")
        if X.size and X.max() > 1:
            raise ValueError("samples must be binary")
        object.__setattr__(self, "samples", X)
        if self.weights is not None:
            w = np.array(self.weights, dtype=float).reshape(-1)
            if w.size != X.shape[0]:
                raise ValueError("one weight per sample required")
            object.__setattr__(self, "weights", w)

    def __len__(self):
        return self.samples.shape[0]

    @property
    def n(self):
        return self.samples.shape[1]

    def normalized_weights(self) -> np.ndarray:
        if len(self) == 0:
            raise ValueError("empty dataset")
        w = np.ones(len(self)) if self.weights is None else self.weights
        return w / w.sum()


def _as_config(model, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.uint8).reshape(-1)
    if x.size != model.n:
        raise ValueError(f"configuration has {x.size} bits, model has {model.n} vertices")
    return x


def phi_vector(model: GraphicalModel, x) -> np.ndarray:
    x = _as_config(model, x)
    phi = np.zeros(model.d, dtype=np.uint8)
    phi[model.local_indices(x[None, :])[0]] = 1
    return phi


def log_potential(model: GraphicalModel, x) -> float:
    x = _as_config(model, x)
    total = 0.0
    for j in model.local_indices(x[None, :])[0]:
        total += model.theta[j]
    return float(total)


def feature_matrix(model: GraphicalModel, limit=None) -> np.ndarray:
    """Dense ``(2**n, d)`` 0/1 matrix whose row ``j`` is ``phi(x^j)``."""
    _check_oracle(model.n, limit)
    idx = model.local_indices(all_states(model.n))
    F = np.zeros((idx.shape[0], model.d), dtype=np.uint8)
    rows = np.arange(idx.shape[0])
    for c in range(idx.shape[1]):
        F[rows, idx[:, c]] = 1
    return F


def brute_force_pmf(model: GraphicalModel, limit=None) -> DenseDistribution:
    _check_oracle(model.n, limit)
    e = model.energies(all_states(model.n))
    p = np.exp(e - logsumexp(e))
    return DenseDistribution(p / p.sum(), model.n)


def log_partition(model: GraphicalModel, limit=None) -> float:
    _check_oracle(model.n, limit)
    return float(logsumexp(model.energies(all_states(model.n))))


def partition_brute(model: GraphicalModel, limit=None) -> float:
    return float(np.exp(log_partition(model, limit)))


def shift_parameters(model: GraphicalModel, c: float) -> GraphicalModel:
    return model.with_theta(model.theta + c)


def normalize_for_circuit(model: GraphicalModel) -> GraphicalModel:
    """Shift so every parameter is <= 0 and the largest is exactly 0."""
    top = float(np.max(model.theta))
    if top == 0.0:
        return model
    return shift_parameters(model, -top)


def moments(model: GraphicalModel, limit=None) -> np.ndarray:
    p = brute_force_pmf(model, limit).probabilities
    idx = model.local_indices(all_states(model.n))
    mu = np.zeros(model.d)
    for c in range(idx.shape[1]):
        mu += np.bincount(idx[:, c], weights=p, minlength=model.d)
    return mu


def empirical_moments(dataset: Dataset, model: GraphicalModel) -> np.ndarray:
    w = dataset.normalized_weights()
    idx = model.local_indices(dataset.samples)
    mu = np.zeros(model.d)
    for c in range(idx.shape[1]):
        mu += np.bincount(idx[:, c], weights=w, minlength=model.d)
    return mu


def nll(model: GraphicalModel, dataset: Dataset, limit=None) -> float:
    """Average negative log-likelihood of ``dataset`` in nats."""
    w = dataset.normalized_weights()
    e = model.energies(dataset.samples)
    return float(log_partition(model, limit) - np.dot(w, e))


def nll_gradient(model: GraphicalModel, dataset: Dataset, limit=None) -> np.ndarray:
    return moments(model, limit) - empirical_moments(dataset, model)


def map_state_brute(model: GraphicalModel, limit=None) -> np.ndarray:
    """Most probable configuration; ties go to the lowest state index."""
    _check_oracle(model.n, limit)
    e = model.energies(all_states(model.n))
    return index_to_bits(int(np.argmax(e)), model.n)


def random_model(n, cliques, rng, low=-5.0, high=0.0) -> GraphicalModel:
    d = sum(2 ** len(c) for c in cliques)
    return GraphicalModel(n, cliques, rng.uniform(low, high, size=d))


# -- JSON model files --------------------------------------------------------

SCHEMA_VERSION = 1


def model_to_dict(model: GraphicalModel) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "n": model.n,
        "cliques": [list(c) for c in model.cliques],
        "theta": [
            {"clique_index": c, "y_bits": list(y), "value": v}
            for c, y, v in model.parameters()
        ],
    }


def model_from_dict(data: dict) -> GraphicalModel:
    from importlib import resources

    import jsonschema

    schema = json.loads(resources.files("qcgm.schemas").joinpath("model.schema.json").read_text())
    jsonschema.validate(data, schema)
    n, cliques = data["n"], [tuple(c) for c in data["cliques"]]
    proto = GraphicalModel.zeros(n, cliques)
    theta = np.full(proto.d, np.nan)
    for entry in data["theta"]:
        c = entry["clique_index"]
        if not 0 <= c < len(cliques):
            raise ValueError(f"clique_index {c} out of range")
        j = proto.param_index(c, entry["y_bits"])
        if not np.isnan(theta[j]):
            raise ValueError(f"duplicate parameter for clique {c}, y={entry['y_bits']}")
        theta[j] = entry["value"]
    if np.isnan(theta).any():
        raise ValueError(f"model file lists {np.count_nonzero(~np.isnan(theta))} of {proto.d} parameters")
    return proto.with_theta(theta)


def dumps_model(model: GraphicalModel) -> str:
    return json.dumps(model_to_dict(model), indent=2) + "\n"


def save_model(model: GraphicalModel, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_model(model))


def load_model(path) -> GraphicalModel:
    with open(path) as fh:
        return model_from_dict(json.load(fh))


def configs_to_strings(X: Iterable) -> list:
    return ["".join(str(int(b)) for b in row) for row in X]
