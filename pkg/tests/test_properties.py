import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as hs

from oracles import pauli_matrix
from qubus_qec import kernels
from qubus_qec import protocols as proto
from qubus_qec import state as st
from qubus_qec.pauli import PauliFrame, PauliOperator

finite = hs.floats(-6, 6, allow_nan=False)
cplx = hs.builds(complex, finite, finite)
pauli_str = hs.integers(1, 4).flatmap(lambda n: hs.text("IXYZ", min_size=n, max_size=n))


def random_state(seed, q, m, k=3):
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, size=(k, q))
    amps = rng.normal(size=(k, m)) * 2 + 1j * rng.normal(size=(k, m)) * 2
    c = rng.normal(size=k) + 1j * rng.normal(size=k)
    return st.HybridPureState(q, m, bits, amps, c).normalized()


@given(cplx, cplx)
def test_overlap_bounded_and_hermitian(a, b):
    o = st.overlap(a, b)
    assert abs(o) <= 1 + 1e-12
    assert o == pytest.approx(np.conj(st.overlap(b, a)), abs=1e-12)
    assert st.overlap(a, a) == pytest.approx(1.0)


@given(hs.integers(0, 2**32 - 1), hs.floats(-3.2, 3.2), cplx)
def test_operations_preserve_norm(seed, theta, beta):
    s = random_state(seed, 2, 2)
    for out in (st.apply_cr(s, 0, 1, theta), st.apply_rotation(s, 0, theta),
                st.apply_displacement(s, 1, beta), st.apply_qubit_gate(s, "H", 1),
                st.apply_qubit_gate(s, "CNOT", [0, 1])):
        assert out.norm() == pytest.approx(1.0, abs=1e-9)


@given(pauli_str, hs.data())
def test_pauli_product_matches_matrices(a, data):
    b = data.draw(hs.text("IXYZ", min_size=len(a), max_size=len(a)))
    pa, pb = PauliOperator(a), PauliOperator(b)
    assert np.allclose((pa * pb).matrix(), pa.matrix() @ pb.matrix())
    assert np.allclose(pa.matrix(), pauli_matrix(a))
    commute = np.allclose(pa.matrix() @ pb.matrix(), pb.matrix() @ pa.matrix())
    assert pa.commutes(pb) == commute


@given(pauli_str, hs.integers(0, 2**32 - 1))
def test_apply_vector_matches_matrix(letters, seed):
    rng = np.random.default_rng(seed)
    p = PauliOperator(letters, rng.choice([1, -1, 1j, -1j]))
    v = rng.normal(size=1 << p.n) + 1j * rng.normal(size=1 << p.n)
    assert np.allclose(p.apply_vector(v), p.matrix() @ v)


@given(hs.integers(0, 2**32 - 1), hs.integers(1, 30))
def test_group_branches_backends_agree(seed, k):
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, size=(k, 3)).astype(np.uint8)
    amps = rng.choice([0.0, 1.5, 1.5 + 2j], size=(k, 2)).astype(complex)
    results = []
    for name in kernels.available_backends():
        prev = kernels.set_backend(name)
        try:
            first, inv = kernels.group_branches(bits, amps, 1e-9)
        finally:
            kernels.set_backend(prev)
        results.append((np.asarray(first).tolist(), np.asarray(inv).tolist()))
        # branches in one group really are equal
        for i, g in enumerate(inv):
            j = first[g]
            assert (bits[i] == bits[j]).all() and np.allclose(amps[i], amps[j])
    assert all(r == results[0] for r in results)


@given(hs.lists(hs.integers(0, 1), min_size=1, max_size=9))
def test_repetition_decode_majority(bits):
    flagged = proto.repetition_decode(bits)
    ones = sum(bits)
    if 2 * ones == len(bits):
        assert flagged == list(range(len(bits)))
    else:
        fixed = [b ^ (i in flagged) for i, b in enumerate(bits)]
        assert len(set(fixed)) == 1
        assert len(flagged) < len(bits) / 2


@given(hs.booleans(), hs.booleans(), hs.sampled_from(["H", "S", "X", "Z"]))
def test_frame_conjugation(x, z, gate):
    f = PauliFrame()
    f.set(("q", 0), x, z)
    before = PauliOperator.from_xz([x], [z]).matrix()
    f.conjugate(("q", 0), gate)
    after = PauliOperator.from_xz(*map(list, zip(f.get(("q", 0)))))
    U = {"H": np.array([[1, 1], [1, -1]]) / np.sqrt(2), "S": np.diag([1, 1j]),
         "X": pauli_matrix("X"), "Z": pauli_matrix("Z")}[gate]
    conj = U @ before @ U.conj().T
    M = after.matrix()
    # equal up to a global phase
    k = np.vdot(M.ravel(), conj.ravel())
    assert abs(abs(k) - 2) < 1e-9
    if gate == "H":
        f.conjugate(("q", 0), "H")
        assert f.get(("q", 0)) == (x, z)
