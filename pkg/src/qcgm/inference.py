"""Maximum-likelihood training, MAP estimation and partition-function estimates."""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .circuit import build_circuit, gamma_to_theta, theta_to_gamma
from .model import (
    Dataset,
    GraphicalModel,
    empirical_moments,
    log_partition,
    map_state_brute,
    moments,
    nll,
    normalize_for_circuit,
)
from .pauli import build_hamiltonian, hamiltonian_diagonal
from .model import index_to_bits
from .samplers import GibbsConfig, gibbs_sample, qcgm_sample
from .simulator import exact_conditional

log = logging.getLogger(__name__)

GRADIENT_SOURCES = ("exact", "qcgm", "gibbs")


class NoAcceptedSamplesError(RuntimeError):
    """A circuit-based estimate saw zero post-selected shots."""


@dataclass(frozen=True)
class AdamConfig:
    step_size: float = 0.1
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    iterations: int = 30
    n_grad: int = 10000
    source: str = "exact"
    seed: int = 0

    def __post_init__(self):
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValueError("beta1 and beta2 must lie in (0, 1)")
        if self.step_size <= 0:
            raise ValueError("step size must be positive")
        if self.source not in GRADIENT_SOURCES:
            raise ValueError(f"gradient source must be one of {GRADIENT_SOURCES}")


@dataclass
class TraceRecord:
    iteration: int
    theta: np.ndarray
    nll: float
    delta: float          # empirical success rate of the circuit (nan if no circuit was run)
    delta_exact: float    # Z(normalized theta) / 2**n
    grad_norm: float


@dataclass
class TrainingTrace:
    records: list = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def __getitem__(self, i):
        return self.records[i]

    @property
    def nll(self) -> np.ndarray:
        return np.array([r.nll for r in self.records])

    @property
    def delta(self) -> np.ndarray:
        return np.array([r.delta for r in self.records])

    @property
    def delta_exact(self) -> np.ndarray:
        return np.array([r.delta_exact for r in self.records])

    @property
    def grad_norm(self) -> np.ndarray:
        return np.array([r.grad_norm for r in self.records])

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("iteration,nll,delta,grad_norm,delta_exact\n")
            for r in self.records:
                fh.write(f"{r.iteration},{r.nll!r},{r.delta!r},{r.grad_norm!r},{r.delta_exact!r}\n")


def exact_success_probability(model: GraphicalModel) -> float:
    """Success probability of the compiled circuit, ``Z(normalized) / 2**n``."""
    return math.exp(log_partition(normalize_for_circuit(model)) - model.n * math.log(2))


def gradient(model: GraphicalModel, dataset: Dataset, source="exact", n_grad=10000, seed=0,
             gibbs=None):
    """NLL gradient ``mu_hat - mu_tilde``; returns ``(grad, empirical success rate)``.

    The success rate is nan unless the circuit was sampled.
    """
    mu_data = empirical_moments(dataset, model)
    rate = float("nan")
    if source == "exact":
        mu_model = moments(model)
    elif source == "qcgm":
        out = qcgm_sample(model, n_grad, seed=seed)
        rate = out.success_rate
        if out.empty:
            raise NoAcceptedSamplesError(f"0 of {n_grad} shots accepted")
        mu_model = empirical_moments(Dataset(out.samples), model)
    elif source == "gibbs":
        cfg = gibbs or GibbsConfig(seed=seed)
        out = gibbs_sample(model, n_grad, GibbsConfig(cfg.burn_in, cfg.thinning, cfg.sweeps_per_sample, seed))
        mu_model = empirical_moments(Dataset(out.samples), model)
    else:
        raise ValueError(f"unknown gradient source {source!r}")
    return mu_model - mu_data, rate


def learn_mle(model_init: GraphicalModel, dataset: Dataset, adam: AdamConfig | None = None):
    """ADAM on theta.  The circuit is recompiled from the current theta each
    iteration.  An iteration without accepted shots reuses the last gradient."""
    adam = adam or AdamConfig()
    theta = np.array(model_init.theta, dtype=float)
    m1 = np.zeros_like(theta)
    m2 = np.zeros_like(theta)
    trace = TrainingTrace()
    last_grad = None
    for t in range(adam.iterations + 1):
        model = model_init.with_theta(theta)
        try:
            g, rate = gradient(model, dataset, adam.source, adam.n_grad, seed=_iteration_seed(adam.seed, t))
        except NoAcceptedSamplesError:
            if last_grad is None:
                raise
            warnings.warn(f"iteration {t}: no accepted shots, reusing previous gradient", stacklevel=2)
            g, rate = last_grad, 0.0
        last_grad = g
        trace.records.append(TraceRecord(t, theta.copy(), nll(model, dataset), rate,
                                         exact_success_probability(model), float(np.linalg.norm(g))))
        log.debug("iter %d nll %.6f |g| %.3g", t, trace.records[-1].nll, trace.records[-1].grad_norm)
        if t == adam.iterations:
            break
        m1 = adam.beta1 * m1 + (1 - adam.beta1) * g
        m2 = adam.beta2 * m2 + (1 - adam.beta2) * g * g
        m1_hat = m1 / (1 - adam.beta1 ** (t + 1))
        m2_hat = m2 / (1 - adam.beta2 ** (t + 1))
        theta = theta - adam.step_size * m1_hat / (np.sqrt(m2_hat) + adam.eps)
    return model_init.with_theta(theta), trace


def _iteration_seed(seed, t):
    return (int(seed) * 1_000_003 + t) & 0x7FFFFFFFFFFFFFFF


# -- angle parametrization -------------------------------------------------

def gamma_parametrization(model: GraphicalModel) -> np.ndarray:
    return np.array([theta_to_gamma(t) for t in normalize_for_circuit(model).theta])


def theta_from_gamma(gamma) -> np.ndarray:
    return np.array([gamma_to_theta(g) for g in np.asarray(gamma, dtype=float)])


def dtheta_dgamma(gamma) -> np.ndarray:
    """Chain-rule factor for optimizing in angle space."""
    return -4.0 * np.tan(2.0 * np.asarray(gamma, dtype=float))


# -- MAP ---------------------------------------------------------------------

def map_estimate(model: GraphicalModel) -> np.ndarray:
    """Lowest-energy state of the diagonal Hamiltonian (lowest index on ties)."""
    diag = hamiltonian_diagonal(build_hamiltonian(model))
    x = index_to_bits(int(np.argmin(diag)), model.n)
    assert np.array_equal(x, map_state_brute(model))
    return x


# -- partition function ----------------------------------------------------

@dataclass(frozen=True)
class PartitionEstimate:
    z: float
    half_width: float        # 95% normal-approximation half-width on z
    success_rate: float
    trials: int
    shift: float             # constant added to theta before compiling
    correction: float        # factor mapping the shifted Z back to the original
    exact_mode: bool = False

    @property
    def interval(self):
        return self.z - self.half_width, self.z + self.half_width


def estimate_partition(model: GraphicalModel, n_trials=100000, seed=0, exact=False) -> PartitionEstimate:
    """Z from the circuit's success probability: ``Z(shifted) = 2**n * delta``.

    ``Z(original) = Z(shifted) * exp(-shift * |cliques|)``.
    """
    circuit = build_circuit(model)
    correction = math.exp(-circuit.shift * len(model.cliques))
    scale = 2 ** model.n * correction
    if exact:
        _, delta = exact_conditional(circuit)
        return PartitionEstimate(delta * scale, 0.0, delta, 0, circuit.shift, correction, True)
    out = qcgm_sample(model, n_trials, seed=seed, circuit=circuit)
    if out.empty:
        raise NoAcceptedSamplesError(f"0 of {n_trials} shots accepted; cannot estimate Z")
    rate = out.success_rate
    half = 1.959963984540054 * math.sqrt(rate * (1 - rate) / n_trials)
    return PartitionEstimate(rate * scale, half * scale, rate, n_trials, circuit.shift, correction)
