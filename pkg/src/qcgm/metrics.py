"""Distances between pmfs and per-run comparison records."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .model import DenseDistribution

NORMALIZATION_TOL = 1e-9


def _as_pmf(p) -> np.ndarray:
    p = np.asarray(p, dtype=float).reshape(-1)
    if abs(p.sum() - 1.0) > NORMALIZATION_TOL:
        raise ValueError(f"distribution sums to {p.sum():.12g}, not 1")
    return p


def _pair(p, q):
    p, q = _as_pmf(p), _as_pmf(q)
    if p.shape != q.shape:
        raise ValueError(f"support sizes differ: {p.size} vs {q.size}")
    return p, q


def fidelity(p, q) -> float:
    """``(sum_x sqrt(p(x) q(x)))**2``, clipped into [0, 1]."""
    p, q = _pair(p, q)
    bc = float(np.sum(np.sqrt(p * q)))
    return min(1.0, max(0.0, bc)) ** 2


def hellinger(p, q) -> float:
    """Hellinger distance, ``H**2 = 1 - sqrt(F)``."""
    return float(np.sqrt(max(0.0, 1.0 - np.sqrt(fidelity(p, q)))))


def total_variation(p, q) -> float:
    p, q = _pair(p, q)
    return float(0.5 * np.abs(p - q).sum())


def empirical_distribution(samples, n: int) -> DenseDistribution:
    """Relative frequencies, no smoothing (unseen states get probability 0)."""
    X = np.asarray(samples, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("need a nonempty (N, n) array of samples")
    if X.shape[1] != n:
        raise ValueError(f"samples have {X.shape[1]} bits, expected {n}")
    idx = np.zeros(X.shape[0], dtype=np.int64)
    for v in range(n):
        idx = (idx << 1) | X[:, v]
    counts = np.bincount(idx, minlength=2 ** n)
    return DenseDistribution(counts / counts.sum(), n)


def success_summary(output):
    """(empirical success rate, effective sample count) of a sampler run."""
    return output.success_rate, output.accepted


@dataclass
class ComparisonReport:
    method: str
    fidelity: float
    hellinger: float
    total_variation: float
    trials: int
    accepted: int
    success_rate: float
    seed: int | None = None
    model_id: str | None = None

    @property
    def effective_samples(self) -> int:
        return self.accepted

    def to_dict(self) -> dict:
        d = asdict(self)
        d["effective_samples"] = self.effective_samples
        return d


def compare(output, exact: DenseDistribution, seed=None, model_id=None) -> ComparisonReport:
    """Score a sampler run against the exact pmf; an empty run scores F = 0."""
    if output.empty:
        return ComparisonReport(output.method, 0.0, 1.0, 1.0, output.trials, 0, 0.0, seed, model_id)
    emp = empirical_distribution(output.samples, exact.n)
    return ComparisonReport(
        output.method,
        fidelity(emp, exact),
        hellinger(emp, exact),
        total_variation(emp, exact),
        output.trials,
        output.accepted,
        output.success_rate,
        seed,
        model_id,
    )
