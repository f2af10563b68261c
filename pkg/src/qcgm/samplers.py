"""Circuit sampling with post-selection, plus the Gibbs and perturb-and-MAP baselines."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numba
import numpy as np
from scipy.special import expit

from ._random import make_rng
from .circuit import build_circuit
from .model import GraphicalModel, _check_oracle, all_states
from .simulator import NoiseConfig, sample_shots


@dataclass(frozen=True)
class GibbsConfig:
    burn_in: int = 100
    thinning: int = 100
    sweeps_per_sample: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.burn_in < 0 or self.thinning < 0:
            raise ValueError("burn_in and thinning must be >= 0")
        if self.sweeps_per_sample < 1:
            raise ValueError("sweeps_per_sample must be >= 1")

    @property
    def sweeps_between_samples(self) -> int:
        return max(self.thinning, 1) * self.sweeps_per_sample


@dataclass(frozen=True)
class SoGConfig:
    """Sum-of-gamma perturbation settings; ``k=None`` means one per clique."""

    k: int | None = None
    s: int = 10
    tau: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.k is not None and self.k < 1:
            raise ValueError("k must be >= 1")
        if self.s < 1:
            raise ValueError("s must be >= 1")
        if not self.tau > 0:
            raise ValueError("tau must be > 0")


@dataclass
class SamplerOutput:
    method: str
    samples: np.ndarray        # (accepted, n) uint8
    trials: int
    duration: float = 0.0
    notes: list = field(default_factory=list)

    @property
    def accepted(self) -> int:
        return int(self.samples.shape[0])

    @property
    def success_rate(self) -> float:
        return self.accepted / self.trials if self.trials else 0.0

    @property
    def empty(self) -> bool:
        return self.accepted == 0

    @property
    def status(self) -> str:
        return "empty" if self.empty else "ok"


def qcgm_sample(model: GraphicalModel, n_trials: int, seed=0, noise: NoiseConfig | None = None,
                circuit=None) -> SamplerOutput:
    """Repeat-until-success sampling: run ``n_trials`` shots, keep the accepted ones."""
    start = time.perf_counter()
    circuit = build_circuit(model) if circuit is None else circuit
    shots = sample_shots(circuit, n_trials, seed=seed, noise=noise)
    out = SamplerOutput("qcgm", shots.accepted_targets(), n_trials,
                        time.perf_counter() - start)
    if out.empty:
        out.notes.append("no shot passed post-selection")
    return out


# -- Gibbs -------------------------------------------------------------------

def gibbs_conditional(model: GraphicalModel, x, v: int) -> float:
    """P(x_v = 1 | all other bits of x)."""
    x = np.asarray(x, dtype=np.uint8)
    delta = 0.0
    for c, clique in enumerate(model.cliques):
        if v not in clique:
            continue
        k0 = k1 = 0
        for u in clique:
            b0 = 0 if u == v else int(x[u])
            b1 = 1 if u == v else int(x[u])
            k0, k1 = (k0 << 1) | b0, (k1 << 1) | b1
        delta += model.theta[model.offsets[c] + k1] - model.theta[model.offsets[c] + k0]
    return float(expit(delta))


def conditional_table(model: GraphicalModel, limit=None) -> np.ndarray:
    """``(n, 2**n)`` table of :func:`gibbs_conditional` over every state."""
    _check_oracle(model.n, limit)
    X = all_states(model.n)
    table = np.empty((model.n, X.shape[0]))
    for v in range(model.n):
        X1, X0 = X.copy(), X.copy()
        X1[:, v], X0[:, v] = 1, 0
        idx1, idx0 = model.local_indices(X1), model.local_indices(X0)
        delta = np.zeros(X.shape[0])
        for c, clique in enumerate(model.cliques):
            if v in clique:
                delta += model.theta[idx1[:, c]] - model.theta[idx0[:, c]]
        table[v] = expit(delta)
    return table


@numba.njit(cache=True)
def _gibbs_chain(table, state, uniforms, n_sweeps, emit_every, out, out_start):
    n = table.shape[0]
    u = 0
    k = out_start
    for sweep in range(n_sweeps):
        for v in range(n):
            bit = 1 << (n - 1 - v)
            if uniforms[u] < table[v, state]:
                state |= bit
            else:
                state &= ~bit
            u += 1
        if emit_every > 0 and (sweep + 1) % emit_every == 0:
            out[k] = state
            k += 1
    return state


def gibbs_sample(model: GraphicalModel, n_samples: int, config: GibbsConfig | None = None) -> SamplerOutput:
    """Systematic-scan Gibbs sampling (vertices 0..n-1 each sweep)."""
    config = config or GibbsConfig()
    start = time.perf_counter()
    n = model.n
    table = conditional_table(model)
    rng = make_rng(config.seed)
    state = int(rng.integers(2 ** n))
    gap = config.sweeps_between_samples

    # burn-in
    remaining = config.burn_in
    scratch = np.empty(1, dtype=np.int64)
    while remaining > 0:
        sweeps = min(remaining, max(1, (1 << 22) // n))
        state = _gibbs_chain(table, state, rng.random(sweeps * n), sweeps, 0, scratch, 0)
        remaining -= sweeps

    indices = np.empty(n_samples, dtype=np.int64)
    per_block = max(1, (1 << 22) // (gap * n))
    done = 0
    while done < n_samples:
        count = min(per_block, n_samples - done)
        sweeps = count * gap
        state = _gibbs_chain(table, state, rng.random(sweeps * n), sweeps, gap, indices, done)
        done += count
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    samples = ((indices[:, None] >> shifts[None, :]) & 1).astype(np.uint8)
    out = SamplerOutput("gibbs", samples, n_samples, time.perf_counter() - start)
    out.notes.append(f"burn_in={config.burn_in} thinning={config.thinning} "
                     f"sweeps_per_sample={config.sweeps_per_sample}")
    return out


# -- perturb-and-MAP ---------------------------------------------------------

def sog_noise(config: SoGConfig, rng, size=None, k=None):
    """Sum-of-gamma perturbation; the sum of ``k`` independent draws approximates
    Gumbel(0, tau), exactly so as ``s`` grows."""
    k = config.k if k is None else k
    if k is None:
        raise ValueError("k must be set (the number of cliques by default)")
    shape = () if size is None else (size if isinstance(size, tuple) else (size,))
    i = np.arange(1, config.s + 1, dtype=float)
    gammas = rng.gamma(1.0 / k, k / i, size=shape + (config.s,))
    noise = (config.tau / k) * (gammas.sum(axis=-1) - np.log(config.s))
    return float(noise) if size is None else noise


def _batched_map(model, theta_batch) -> np.ndarray:
    """Index of the best state for each row of perturbed parameters (lowest index on ties)."""
    idx = model.local_indices(all_states(model.n))   # (2**n, |C|)
    scores = np.zeros((theta_batch.shape[0], idx.shape[0]))
    for c in range(idx.shape[1]):
        scores += theta_batch[:, idx[:, c]]
    return np.argmax(scores, axis=1)


def pam_sample(model: GraphicalModel, n_samples: int, config: SoGConfig | None = None,
               perturb: bool = True, limit=None) -> SamplerOutput:
    """Perturb every parameter with independent sum-of-gamma noise and return the
    perturbed MAP state.  Samples are biased: the per-parameter noise is not an
    independent Gumbel per joint configuration."""
    config = config or SoGConfig()
    _check_oracle(model.n, limit)
    start = time.perf_counter()
    k = config.k if config.k is not None else len(model.cliques)
    rng = make_rng(config.seed)
    batch = max(1, min(8192, (1 << 22) // 2 ** model.n))
    indices = []
    for lo in range(0, n_samples, batch):
        size = min(batch, n_samples - lo)
        theta = np.broadcast_to(model.theta, (size, model.d))
        if perturb:
            theta = theta + sog_noise(config, rng, size=(size, model.d), k=k)
        indices.append(_batched_map(model, theta))
    indices = np.concatenate(indices) if indices else np.empty(0, dtype=np.int64)
    shifts = np.arange(model.n - 1, -1, -1, dtype=np.int64)
    samples = ((indices[:, None] >> shifts[None, :]) & 1).astype(np.uint8)
    out = SamplerOutput("pam", samples, n_samples, time.perf_counter() - start)
    out.notes.append("biased: sum-of-gamma noise per parameter, not per joint configuration")
    out.notes.append(f"k={k} s={config.s} tau={config.tau} perturb={perturb}")
    return out
