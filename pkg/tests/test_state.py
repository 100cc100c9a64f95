import math

import numpy as np
import pytest

from qubus_qec import state as st


def plus_cat(a=2.0, theta=0.4):
    return st.HybridPureState(1, 1, [[0], [1]], [[a], [a * np.exp(1j * theta)]], np.array([1, 1]) / math.sqrt(2))


def test_overlap_matches_closed_form():
    a, b = 1.2 - 0.3j, -0.4 + 0.9j
    ref = np.exp(-abs(a) ** 2 / 2 - abs(b) ** 2 / 2 + np.conj(a) * b)
    assert abs(st.overlap(a, b) - ref) < 1e-14
    assert st.overlap(a, a) == pytest.approx(1.0)


def test_norm_accounts_for_nonorthogonal_branches(backend):
    s = st.HybridPureState(0, 1, np.zeros((2, 0)), [[0.5], [-0.5]], [1, 1])
    assert s.norm_squared() == pytest.approx(2 + 2 * math.exp(-0.5))
    assert s.normalized().norm() == pytest.approx(1.0)


def test_controlled_rotation_only_touches_one_branches():
    s = st.apply_cr(plus_cat(2.0, 0.0), 0, 0, 0.3)
    assert s.amps[0, 0] == 2.0
    assert s.amps[1, 0] == pytest.approx(2.0 * np.exp(0.3j))


def test_parity_gate_branch_identity():
    a = np.array([0.1, 0.5, 0.7, 0.3 + 0.4j])
    a = a / np.linalg.norm(a)
    s = st.HybridPureState.from_qubit_vector(a, [3.0])
    s = st.apply_cr(s, 0, 0, 0.2)
    s = st.apply_cr(s, 1, 0, -0.2)
    want = {(0, 0): 3.0, (0, 1): 3.0 * np.exp(-0.2j), (1, 0): 3.0 * np.exp(0.2j), (1, 1): 3.0}
    for b in s.branches:
        assert b.mode_amps[0] == pytest.approx(want[b.qubit_basis])


def test_displacement_phase_convention():
    s = st.HybridPureState.product("", [1.0 + 1.0j])
    out = st.apply_displacement(s, 0, 0.5 - 0.2j)
    beta, a = 0.5 - 0.2j, 1.0 + 1.0j
    assert out.amps[0, 0] == pytest.approx(a + beta)
    assert out.coeffs[0] == pytest.approx(np.exp(1j * (beta * np.conj(a)).imag))


def test_displacements_compose_up_to_phase():
    s = st.HybridPureState.product("", [0.3])
    out = st.apply_displacement(st.apply_displacement(s, 0, 1.0), 0, -1.0)
    assert out.amps[0, 0] == pytest.approx(0.3)
    assert abs(out.coeffs[0]) == pytest.approx(1.0)


def test_beamsplitter_rejects_nonunitary():
    s = st.HybridPureState.product("", [1.0, 0.0])
    with pytest.raises(ValueError):
        st.apply_beamsplitter(s, [0, 1], [[1, 1], [0, 1]])


def test_symmetric_splitter_spreads_amplitude():
    s = st.HybridPureState.product("", [2.0, 0.0, 0.0, 0.0])
    out = st.apply_beamsplitter(s, [0, 1, 2, 3], st.symmetric_splitter(4))
    assert np.allclose(out.amps[0], 1.0)


def test_hadamard_merges_equal_branches():
    s = st.HybridPureState.product("0", [1.0])
    s = st.apply_qubit_gate(st.apply_qubit_gate(s, "H", 0), "H", 0)
    assert s.n_branches == 1
    assert s.bits[0, 0] == 0
    assert abs(s.coeffs[0]) == pytest.approx(1.0)


@pytest.mark.parametrize("gate", ["X", "Y", "Z", "S", "SDG", "H"])
def test_single_qubit_gates_match_matrices(gate):
    mats = {
        "X": [[0, 1], [1, 0]], "Y": [[0, -1j], [1j, 0]], "Z": [[1, 0], [0, -1]],
        "S": [[1, 0], [0, 1j]], "SDG": [[1, 0], [0, -1j]], "H": np.array([[1, 1], [1, -1]]) / math.sqrt(2),
    }
    v = np.array([0.6, 0.8j])
    s = st.HybridPureState.from_qubit_vector(v, [])
    out = st.apply_qubit_gate(s, gate, 0).qubit_vector()
    assert np.allclose(out, np.asarray(mats[gate]) @ v)


def test_two_qubit_gates():
    v = np.array([0.1, 0.2, 0.3, 0.9])
    v = v / np.linalg.norm(v)
    s = st.HybridPureState.from_qubit_vector(v, [])
    assert np.allclose(st.apply_qubit_gate(s, "CNOT", (0, 1)).qubit_vector(), v[[0, 1, 3, 2]])
    assert np.allclose(st.apply_qubit_gate(s, "CZ", (0, 1)).qubit_vector(), v * [1, 1, 1, -1])
    with pytest.raises(ValueError):
        st.apply_qubit_gate(s, "CNOT", (1, 1))
    with pytest.raises(ValueError):
        st.apply_qubit_gate(s, "T", 0)


def test_qubit_vector_round_trip_is_big_endian():
    v = np.zeros(8)
    v[0b100] = 1
    s = st.HybridPureState.from_qubit_vector(v, [])
    assert list(s.bits[0]) == [1, 0, 0]
    assert np.allclose(s.qubit_vector(), v)


def test_qubit_vector_requires_no_modes():
    with pytest.raises(ValueError):
        plus_cat().qubit_vector()


def test_merge_combines_coinciding_branches():
    s = st.HybridPureState(1, 1, [[0], [0]], [[1.0], [1.0 + 1e-12]], [0.5, 0.5])
    m = st.merge_branches(s)
    assert m.n_branches == 1
    assert m.coeffs[0] == pytest.approx(1.0)


def test_merge_drops_cancelled_branches():
    s = st.HybridPureState(1, 1, [[0], [0], [1]], [[1.0], [1.0], [2.0]], [0.5, -0.5, 1.0])
    m = st.merge_branches(s)
    assert m.n_branches == 1
    assert list(m.bits[0]) == [1]


def test_embed_is_tensor_product():
    a = st.apply_qubit_gate(st.blank(2, 2), "H", 0)
    a = st.apply_displacement(a, 0, 1.0)
    b = st.apply_displacement(st.apply_qubit_gate(st.blank(2, 2), "X", 1), 1, 2.0)
    out = st.embed(a, b)
    assert out.n_branches == 2
    assert np.all(out.bits[:, 1] == 1)
    assert np.allclose(out.amps[:, 1], 2.0)
    with pytest.raises(ValueError):
        st.embed(a, a)


def test_discard_requires_unentangled_register():
    s = plus_cat()
    with pytest.raises(ValueError):
        st.discard_mode(s, 0)
    with pytest.raises(ValueError):
        st.discard_qubit(s, 0)
    prod = st.HybridPureState.product("1", [1.0, 2.0])
    out = st.discard_mode(st.discard_qubit(prod, 0), 0)
    assert (out.q, out.m) == (0, 1)
    assert out.amps[0, 0] == 2.0


def test_register_growth_and_reset():
    s, q = st.add_qubit(st.blank(0, 0), "+")
    s, m = st.add_mode(s, 3.0)
    assert (q, m) == (0, 0)
    assert s.n_branches == 2
    s = st.set_mode(s, 0, 0.0)
    assert np.allclose(s.amps, 0)
    with pytest.raises(ValueError):
        st.add_qubit(s, "?")
    with pytest.raises(IndexError):
        st.apply_cr(s, 3, 0, 0.1)


def test_mixed_state_rank_one_round_trip(backend):
    s = plus_cat()
    m = st.to_mixed(s)
    assert m.trace() == pytest.approx(s.norm_squared())
    assert m.purity() == pytest.approx(1.0)
    back = m.to_pure()
    assert abs(back.inner(s)) == pytest.approx(1.0)
    ev = m.physical_eigenvalues()
    assert ev.max() == pytest.approx(1.0)


def test_fidelity_and_inner(backend):
    s = plus_cat(2.0, 0.4)
    t = st.apply_cr(s, 0, 0, 1.0)
    assert s.fidelity(s) == pytest.approx(1.0)
    assert 0 < s.fidelity(t) < 1


def test_dense_factor_and_permutation():
    v = np.array([0, 1, 0, 0], dtype=complex)
    s = st.HybridPureState.from_qubit_vector(v, [])
    assert np.allclose(st.dense_factor(s)[:, 0], v)
    p = st.permute_qubits(s, [1, 0])
    assert np.allclose(p.qubit_vector(), [0, 0, 1, 0])


def test_nonfinite_amplitudes_rejected():
    with pytest.raises(ValueError):
        st.HybridPureState(0, 1, np.zeros((1, 0)), [[np.inf]], [1.0])
