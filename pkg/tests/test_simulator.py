import math

import numpy as np
import pytest

from qcgm.circuit import CircuitIR, CliquePhase, Hadamard, QubitLayout, build_circuit, hadamard_operator
from qcgm.metrics import empirical_distribution, fidelity, total_variation
from qcgm.model import GraphicalModel, brute_force_pmf, normalize_for_circuit, partition_brute
from qcgm.simulator import (
    DegenerateSuccessError,
    NoiseConfig,
    StateVector,
    apply_gate,
    apply_noise_trajectory,
    embed_conditionals,
    exact_conditional,
    prepare_plus,
    run_circuit,
    sample_shots,
)

from conftest import random_models

DELTA_SINGLE = 0.6839397205857212  # (1 + e^-1) / 2


def test_prepare_plus():
    np.testing.assert_allclose(prepare_plus(1).amplitudes, [2 ** -0.5] * 2, atol=1e-16)
    np.testing.assert_allclose(prepare_plus(3).amplitudes, [0.3535533905932738] * 8, atol=1e-15)
    np.testing.assert_allclose(prepare_plus(3).probabilities(), np.full(8, 1 / 8), atol=1e-15)
    with pytest.raises(ValueError):
        prepare_plus(5, limit=4)


def test_hadamard_kernel():
    s = StateVector(np.array([1, 0], dtype=complex), 1)
    apply_gate(s, Hadamard(0))
    np.testing.assert_allclose(s.amplitudes, [2 ** -0.5] * 2, atol=1e-16)
    apply_gate(s, Hadamard(0))
    np.testing.assert_allclose(s.amplitudes, [1, 0], atol=1e-15)


def test_zero_phase_is_identity():
    s = prepare_plus(4)
    before = s.amplitudes.copy()
    apply_gate(s, CliquePhase(3, 0, 0, (0, 1), (1, 1), 2, 0.0))
    np.testing.assert_array_equal(s.amplitudes, before)


def test_gate_out_of_range():
    with pytest.raises(ValueError):
        apply_gate(prepare_plus(2), Hadamard(2))


def _dense_phase(gate, m):
    """Diagonal operator of a CliquePhase, built by enumerating basis states."""
    diag = np.ones(2 ** m, dtype=complex)
    for j in range(2 ** m):
        bits = [(j >> (m - 1 - q)) & 1 for q in range(m)]
        if bits[gate.rp_control] != gate.polarity:
            continue
        if any(bits[v] != b for v, b in zip(gate.targets, gate.y)):
            continue
        phase = np.exp(2j * gate.gamma * (1 if bits[gate.embed] == 0 else -1))
        diag[j] = phase.conjugate() if gate.adjoint else phase
    return np.diag(diag)


def test_kernels_match_dense_operators():
    rng = np.random.default_rng(3)
    for m in range(3, 9):
        for _ in range(4):
            psi = rng.normal(size=2 ** m) + 1j * rng.normal(size=2 ** m)
            psi /= np.linalg.norm(psi)
            q = int(rng.integers(m))
            s = StateVector(psi.copy(), m)
            apply_gate(s, Hadamard(q))
            np.testing.assert_allclose(s.amplitudes, hadamard_operator(m, q) @ psi, atol=1e-12)

            qubits = rng.permutation(m)
            k = int(rng.integers(1, m - 1))
            targets = tuple(sorted(int(v) for v in qubits[:k]))
            gate = CliquePhase(int(qubits[k]), int(rng.integers(2)), 0, targets,
                               tuple(int(b) for b in rng.integers(0, 2, size=k)),
                               int(qubits[k + 1]), float(rng.uniform(0, math.pi / 4)),
                               adjoint=bool(rng.integers(2)))
            s = StateVector(psi.copy(), m)
            apply_gate(s, gate)
            np.testing.assert_allclose(s.amplitudes, _dense_phase(gate, m) @ psi, atol=1e-12)


@pytest.mark.parametrize("model", random_models(6, seed=31, max_n=3, max_cliques=2))
def test_block_kernels_match_materialized_block(model):
    from qcgm.circuit import materialize_block
    circ = build_circuit(model)
    if circ.m > 10:
        pytest.skip("block too large")
    psi = prepare_plus(circ.m).amplitudes
    for c in range(len(model.cliques)):
        s = StateVector(psi.copy(), circ.m)
        block = [g for g in circ.gates if isinstance(g, CliquePhase) and g.clique == c]
        for g in block:
            apply_gate(s, g)
        np.testing.assert_allclose(s.amplitudes, materialize_block(circ, c) @ psi, atol=1e-12)


@pytest.mark.parametrize("model", random_models(15, seed=32, max_n=4, max_cliques=3))
def test_norm_preserved_after_every_gate(model):
    circ = build_circuit(model)
    s = prepare_plus(circ.m)
    for g in circ.gates:
        apply_gate(s, g)
        assert abs(s.norm() - 1) <= 1e-10


def test_exact_conditional_examples(single):
    p, delta = exact_conditional(build_circuit(GraphicalModel.zeros(2, [(0, 1)])))
    np.testing.assert_allclose(p.probabilities, [0.25] * 4, atol=1e-14)
    assert delta == pytest.approx(1.0, abs=1e-14)
    p, delta = exact_conditional(build_circuit(single))
    np.testing.assert_allclose(p.probabilities, [0.2689414213699951, 0.7310585786300049], atol=1e-14)
    assert delta == pytest.approx(DELTA_SINGLE, rel=1e-12)


@pytest.mark.parametrize("model", random_models(50, seed=33))
def test_exact_conditional_matches_pmf(model):
    circ = build_circuit(model)
    p, delta = exact_conditional(circ)
    assert total_variation(p.probabilities, brute_force_pmf(model).probabilities) <= 1e-10
    z = partition_brute(normalize_for_circuit(model))
    assert delta == pytest.approx(z / 2 ** model.n, rel=1e-10)


@pytest.mark.parametrize("model", random_models(15, seed=34))
def test_conditional_independent_of_embed_bit(model):
    p0, p1 = embed_conditionals(build_circuit(model))
    np.testing.assert_allclose(p0, p1, atol=1e-10)


def test_degenerate_success():
    # two pi/4 phases multiply rp = 1 by -1 for either embed value, turning the
    # rp auxiliary from |+> into |->; the closing Hadamard then yields |1>
    layout = QubitLayout(1, 1)
    phase = CliquePhase(2, 1, 0, (), (), 1, math.pi / 4)
    circ = CircuitIR(layout, ((0,),), (phase, phase, Hadamard(2)), {})
    with pytest.raises(DegenerateSuccessError):
        exact_conditional(circ)


def test_shots_deterministic(chain3):
    circ = build_circuit(chain3)
    a = sample_shots(circ, 5000, seed=9)
    b = sample_shots(circ, 5000, seed=9)
    c = sample_shots(circ, 5000, seed=10)
    assert np.array_equal(a.target_bits, b.target_bits) and np.array_equal(a.rp_bits, b.rp_bits)
    assert np.array_equal(a.embed_bits, b.embed_bits)
    assert not np.array_equal(a.target_bits, c.target_bits)


def test_shot_records(chain3):
    shots = sample_shots(build_circuit(chain3), 200, seed=1)
    assert len(shots) == 200
    for rec in shots:
        assert rec.accepted == (not any(rec.rp_bits))
        assert len(rec.target_bits) == 3 and len(rec.rp_bits) == 2
    assert shots.accepted_targets().shape == (int(shots.accepted.sum()), 3)


def test_zero_model_accepts_everything():
    shots = sample_shots(build_circuit(GraphicalModel.zeros(3, [(0, 1), (1, 2)])), 1000, seed=0)
    assert shots.accepted.all()


@pytest.mark.parametrize("model", random_models(10, seed=35))
def test_acceptance_within_three_sigma(model):
    circ = build_circuit(model)
    _, delta = exact_conditional(circ)
    N = 20000
    rate = sample_shots(circ, N, seed=4).success_rate
    assert abs(rate - delta) <= 3 * math.sqrt(delta * (1 - delta) / N) + 1e-12


def test_sampled_distribution_converges(chain3):
    circ = build_circuit(chain3)
    _, delta = exact_conditional(circ)
    shots = sample_shots(circ, int(60000 / delta), seed=2)
    acc = shots.accepted_targets()
    assert acc.shape[0] >= 50000
    emp = empirical_distribution(acc, 3)
    assert fidelity(emp, brute_force_pmf(chain3)) >= 0.999


def test_noise_config_validation():
    with pytest.raises(ValueError):
        NoiseConfig(readout_flip_prob=0.6)
    with pytest.raises(ValueError):
        NoiseConfig(depolarizing_prob=-0.1)
    with pytest.raises(ValueError):
        NoiseConfig(readout_flip_prob=[0.1, 0.1]).readout_vector(3)
    assert not NoiseConfig().active


def test_zero_noise_is_noiseless(chain3):
    circ = build_circuit(chain3)
    a = sample_shots(circ, 3000, seed=5)
    b = sample_shots(circ, 3000, seed=5, noise=NoiseConfig(0.0, 0.0))
    assert np.array_equal(a.target_bits, b.target_bits) and np.array_equal(a.rp_bits, b.rp_bits)
    s = run_circuit(circ)
    before = s.amplitudes.copy()
    apply_noise_trajectory(s, circ.gates[0], NoiseConfig(0.0, 0.0), np.random.default_rng(0))
    np.testing.assert_array_equal(s.amplitudes, before)


def test_trajectory_applies_pauli():
    s = StateVector(np.array([1, 0], dtype=complex), 1)
    rng = np.random.default_rng(0)
    for _ in range(20):
        apply_noise_trajectory(s, Hadamard(0), NoiseConfig(0.0, 0.5), rng)
        assert abs(s.norm() - 1) <= 1e-12
    # with p = 1/2 over 20 steps at least one Pauli has almost surely hit
    assert not np.allclose(s.amplitudes, [1, 0])


def test_depolarizing_lowers_fidelity(chain3):
    circ = build_circuit(chain3)
    exact = brute_force_pmf(chain3)
    clean = sample_shots(circ, 100000, seed=6).accepted_targets()
    noisy = sample_shots(circ, 100000, seed=6, noise=NoiseConfig(0.0, 0.5)).accepted_targets()
    f_clean = fidelity(empirical_distribution(clean, 3), exact)
    f_noisy = fidelity(empirical_distribution(noisy, 3), exact)
    assert f_noisy < f_clean


def test_readout_flip_rate():
    # Hadamards turn |++> into the deterministic |00>
    layout = QubitLayout(1, 0)
    circ = CircuitIR(layout, (), (Hadamard(0), Hadamard(1)), {})
    N, p = 100000, 0.05
    shots = sample_shots(circ, N, seed=7, noise=NoiseConfig([p, 0.0]))
    rate = shots.target_bits[:, 0].mean()
    assert abs(rate - p) <= 3 * math.sqrt(p * (1 - p) / N)
    assert shots.embed_bits.sum() == 0
