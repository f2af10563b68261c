import itertools
import math

import numpy as np
import pytest

from qcgm.circuit import (
    THETA_FLOOR,
    CliquePhase,
    Hadamard,
    QubitLayout,
    build_circuit,
    gamma_to_theta,
    materialize_block,
    reorder_gates,
    theta_to_gamma,
)
from qcgm.model import GraphicalModel, all_states, normalize_for_circuit
from qcgm.simulator import exact_conditional, run_circuit

from conftest import random_models

GAMMA_AT_MINUS_2 = 0.5970344093681608  # 0.5 * acos(exp(-1)), mpmath at 30 digits


def test_layout():
    layout = QubitLayout(3, 2)
    assert layout.m == 6 and layout.embed_aux == 3
    idx = [*range(3), layout.embed_aux, *(layout.rp_aux(c) for c in range(2))]
    assert sorted(idx) == list(range(layout.m))
    with pytest.raises(IndexError):
        layout.rp_aux(2)


def test_theta_to_gamma_examples():
    assert theta_to_gamma(0.0) == 0.0
    assert theta_to_gamma(-2.0) == pytest.approx(GAMMA_AT_MINUS_2, abs=1e-15)
    with pytest.raises(ValueError):
        theta_to_gamma(0.5)


def test_gamma_to_theta_examples():
    assert gamma_to_theta(0.0) == 0.0
    for t in (-5.0, -1.0, -0.01):
        assert gamma_to_theta(theta_to_gamma(t)) == pytest.approx(t, abs=1e-12)
    assert gamma_to_theta(math.pi / 4 - 1e-9) < -30
    with pytest.raises(ValueError):
        gamma_to_theta(math.pi / 4)


def test_build_chain(chain3):
    circ = build_circuit(chain3)
    assert circ.m == 6
    # per clique: 2 gates per y, then the rp Hadamard
    kinds = [type(g).__name__ for g in circ.gates]
    assert kinds == (["CliquePhase"] * 8 + ["Hadamard"]) * 2
    assert circ.gates[8] == Hadamard(4) and circ.gates[17] == Hadamard(5)
    first, second = circ.gates[0], circ.gates[1]
    assert (first.polarity, first.adjoint) == (0, False)
    assert (second.polarity, second.adjoint) == (1, True)
    np.testing.assert_array_equal(circ.theta, normalize_for_circuit(chain3).theta)
    assert circ.shift == pytest.approx(-chain3.theta.max())


def test_gamma_table(chain3):
    circ = build_circuit(chain3)
    for c, y, value in normalize_for_circuit(chain3).parameters():
        assert math.cos(2 * circ.gammas[(c, y)]) == pytest.approx(math.exp(value / 2), abs=1e-14)
        assert 0 <= circ.gammas[(c, y)] <= math.pi / 4


def test_zero_model_is_identity():
    circ = build_circuit(GraphicalModel.zeros(3, [(0, 1), (1, 2)]))
    assert all(g.gamma == 0 for g in circ.gates if isinstance(g, CliquePhase))
    p, delta = exact_conditional(circ)
    assert delta == pytest.approx(1.0, abs=1e-14)


def test_floor_warning():
    m = GraphicalModel(1, [(0,)], [-100.0, 0.0])
    with pytest.warns(UserWarning, match="floored"):
        circ = build_circuit(m)
    assert circ.theta[0] == THETA_FLOOR


def test_clique_phase_has_unit_modulus():
    g = CliquePhase(3, 0, 0, (0, 1), (1, 0), 2, 0.3)
    assert abs(g.phase) == pytest.approx(1.0, abs=1e-15)
    assert g.qubits == (3, 0, 1, 2)


@pytest.mark.parametrize("model", random_models(10, seed=21, max_n=3, max_cliques=3))
def test_blocks_unitary(model):
    circ = build_circuit(model)
    if circ.m > 10:
        pytest.skip("block too large to materialize")
    for c in range(len(model.cliques)):
        G = materialize_block(circ, c)
        np.testing.assert_allclose(G.conj().T @ G, np.eye(G.shape[0]), atol=1e-12)


def test_zero_block_is_identity():
    circ = build_circuit(GraphicalModel.zeros(2, [(0, 1)]))
    np.testing.assert_allclose(materialize_block(circ, 0), np.eye(2 ** circ.m), atol=1e-14)


@pytest.mark.parametrize("model", random_models(8, seed=22, max_n=3, max_cliques=2))
def test_block_real_part_is_sqrt_potential(model):
    """<rp=0| (U + U^dag)/2 |rp=0> restricted to embed=0 is diag(exp(theta_C(x)/2))."""
    circ = build_circuit(model)
    if circ.m > 10:
        pytest.skip("block too large to materialize")
    n, m = model.n, circ.m
    theta = circ.theta
    for c, clique in enumerate(model.cliques):
        G = materialize_block(circ, c)
        rp = circ.layout.rp_aux(c)
        # basis states with rp = 0, every other aux = 0, embed = 0; targets vary
        rows = []
        for x in all_states(n):
            bits = [0] * m
            bits[:n] = x
            rows.append(int("".join(map(str, bits)), 2))
        sub = G[np.ix_(rows, rows)]
        # the rp = 1 branch carries U^dag, so the rp-controlled real part is
        # read off the rp = 0 block: Re(U) = (U + U^dag) / 2
        rows1 = [r | (1 << (m - 1 - rp)) for r in rows]
        sub1 = G[np.ix_(rows1, rows1)]
        real_part = (sub + sub1) / 2
        expected = np.array([
            math.exp(0.5 * theta[model.offsets[c] + int("".join(str(int(x[v])) for v in clique), 2)])
            for x in all_states(n)
        ])
        np.testing.assert_allclose(real_part, np.diag(expected), atol=1e-12)


def _final_state(circ):
    return run_circuit(circ).amplitudes


@pytest.mark.parametrize("model", random_models(6, seed=23, max_n=4, max_cliques=3))
def test_clique_order_irrelevant(model):
    circ = build_circuit(model)
    blocks, cur = [], []
    for g in circ.gates:
        cur.append(g)
        if isinstance(g, Hadamard):
            blocks.append(cur)
            cur = []
    p = exact_conditional(circ)[0].probabilities
    for perm in itertools.islice(itertools.permutations(range(len(blocks))), 1, 4):
        reordered = reorder_gates(circ, [g for i in perm for g in blocks[i]])
        q = exact_conditional(reordered)[0].probabilities
        np.testing.assert_allclose(q, p, atol=1e-12)


@pytest.mark.parametrize("model", random_models(6, seed=24, max_n=4, max_cliques=3))
def test_gates_within_clique_commute(model):
    circ = build_circuit(model)
    rng = np.random.default_rng(0)
    ref = _final_state(circ)
    for _ in range(2):
        gates, out, cur = list(circ.gates), [], []
        for g in gates:
            if isinstance(g, Hadamard):
                out += [cur[i] for i in rng.permutation(len(cur))] + [g]
                cur = []
            else:
                cur.append(g)
        np.testing.assert_allclose(_final_state(reorder_gates(circ, out)), ref, atol=1e-12)


@pytest.mark.parametrize("model", random_models(20, seed=25, max_n=6, max_cliques=4))
def test_depth_bound(model):
    circ = build_circuit(model)
    assert len(circ.gates) <= 2 * model.d + len(model.cliques) + circ.m
    for g in circ.gates:
        assert all(0 <= q < circ.m for q in g.qubits)
