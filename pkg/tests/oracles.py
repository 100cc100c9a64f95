"""Independent reference simulators used by the test-suite.

* ``FockSim``: qubits (x) truncated number-state modes, dense state vector.
* ``loss_dilation``: photon loss as a beamsplitter onto a vacuum environment
  followed by a partial trace, in the number basis.
* dense stabilizer helpers built from explicit Kronecker products.

The simulators share no code with the package. The comparison helpers at the
bottom run the same random circuit through both.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.linalg import expm
from scipy.special import comb, eval_hermite, gammaln

from qubus_qec import noise
from qubus_qec import state as st

N_FOCK = 80

_GATES = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.diag([1, -1]).astype(complex),
    "H": np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2),
    "S": np.diag([1, 1j]),
    "SDG": np.diag([1, -1j]),
}


def coherent_vector(a, N=N_FOCK):
    n = np.arange(N)
    a = complex(a)
    if a == 0:
        out = np.zeros(N, dtype=complex)
        out[0] = 1
        return out
    return np.exp(-abs(a) ** 2 / 2 + n * np.log(a) - 0.5 * gammaln(n + 1))


def displacement_matrix(beta, N=N_FOCK, pad=120):
    big = N + pad
    a = np.diag(np.sqrt(np.arange(1, big)), 1)
    D = expm(complex(beta) * a.conj().T - complex(beta).conjugate() * a)
    return D[:N, :N]


def quadrature_wavefunctions(x, N=N_FOCK):
    """``<x|n>`` for the quadrature ``a + a^dagger`` (vacuum variance 1)."""
    n = np.arange(N)
    logn = -0.5 * gammaln(n + 1) - 0.5 * n * math.log(2)
    return (2 * math.pi) ** -0.25 * math.exp(-x * x / 4) * eval_hermite(n, x / math.sqrt(2)) * np.exp(logn)


class FockSim:
    """Dense vector with axes ``(qubit_0, ..., qubit_{q-1}, mode_0, ..., mode_{m-1})``."""

    def __init__(self, qubit_vec, amps, N=N_FOCK):
        self.q = int(round(math.log2(len(qubit_vec))))
        self.m = len(amps)
        self.N = N
        psi = np.asarray(qubit_vec, dtype=complex)
        for a in amps:
            psi = np.multiply.outer(psi, coherent_vector(a, N)).reshape(-1)
        self.psi = psi.reshape((2,) * self.q + (N,) * self.m)

    def _mode_axis(self, mode):
        return self.q + mode

    def _apply_mode(self, mode, M):
        ax = self._mode_axis(mode)
        self.psi = np.moveaxis(np.tensordot(M, self.psi, axes=([1], [ax])), 0, ax)

    def _apply_qubit(self, qubit, U):
        self.psi = np.moveaxis(np.tensordot(U, self.psi, axes=([1], [qubit])), 0, qubit)

    def cr(self, qubit, mode, theta):
        phase = np.exp(1j * theta * np.arange(self.N))
        shape = [1] * self.psi.ndim
        shape[self._mode_axis(mode)] = self.N
        idx = [slice(None)] * self.psi.ndim
        idx[qubit] = 1
        self.psi[tuple(idx)] = self.psi[tuple(idx)] * phase.reshape(shape[:qubit] + shape[qubit + 1:])

    def rotate(self, mode, phi):
        self._apply_mode(mode, np.diag(np.exp(1j * phi * np.arange(self.N))))

    def displace(self, mode, beta):
        self._apply_mode(mode, displacement_matrix(beta, self.N))

    def gate(self, name, qubits):
        if name == "CNOT":
            c, t = qubits
            idx = [slice(None)] * self.psi.ndim
            idx[c] = 1
            sub = self.psi[tuple(idx)]
            t_ax = t if t < c else t - 1
            self.psi[tuple(idx)] = np.flip(sub, axis=t_ax)
        else:
            self._apply_qubit(qubits[0], _GATES[name])

    def homodyne_collapse(self, mode, x):
        """Project ``mode`` on the x-quadrature eigenvector and drop it; returns the normalized rest."""
        w = quadrature_wavefunctions(x, self.N)
        rest = np.tensordot(self.psi, w, axes=([self._mode_axis(mode)], [0]))
        return rest.reshape(-1) / np.linalg.norm(rest)

    def vector(self):
        return self.psi.reshape(-1)


def branch_to_fock(state, N=N_FOCK):
    """Dense number-basis factor (columns) of a branch state, same axis order as :class:`FockSim`."""
    c2 = state._c2()
    dim = (1 << state.q) * N**state.m
    out = np.zeros((dim, c2.shape[1]), dtype=complex)
    for bits, amps, c in zip(state.bits, state.amps, c2):
        v = np.zeros(1 << state.q, dtype=complex)
        v[int("".join(map(str, bits)) or "0", 2)] = 1
        for a in amps:
            v = np.multiply.outer(v, coherent_vector(a, N)).reshape(-1)
        out += np.outer(v, c)
    return out


def loss_dilation(psi, q, eta, N=N_FOCK):
    """Density matrix after loss on the single mode of a ``(2^q, N)`` state vector.

    ``|n>|0>_E -> sum_k sqrt(C(n, k)) t^k r^(n-k) |k>|n-k>_E``, then trace out E.
    """
    psi = np.asarray(psi).reshape(1 << q, N)
    t, r = math.sqrt(eta), math.sqrt(1 - eta)
    rho = np.zeros(((1 << q) * N,) * 2, dtype=complex)
    k = np.arange(N)
    for j in range(N):
        # environment holds j photons: system keeps k = n - j
        n = k + j
        ok = n < N
        col = np.zeros((1 << q, N), dtype=complex)
        col[:, ok] = psi[:, n[ok]] * np.sqrt(comb(n[ok], k[ok])) * t ** k[ok] * r**j
        v = col.reshape(-1)
        rho += np.outer(v, v.conj())
    return rho


def trace_distance(a, b):
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * ((a - b) + (a - b).conj().T)))))


# -- dense stabilizer simulation ----------------------------------------------------------------


def pauli_matrix(letters):
    out = np.array([[1.0 + 0j]])
    for c in letters:
        out = np.kron(out, np.eye(2) if c == "I" else _GATES[c])
    return out


def dense_codespace(generators):
    n = len(generators[0])
    P = np.eye(1 << n, dtype=complex)
    for g in generators:
        P = P @ (np.eye(1 << n) + pauli_matrix(g)) / 2
    return P


def dense_measure_syndrome(generators, vec):
    bits = []
    for g in generators:
        ev = float(np.real(np.vdot(vec, pauli_matrix(g) @ vec)))
        assert abs(abs(ev) - 1) < 1e-9, "not a syndrome eigenstate"
        bits.append(int(ev < 0))
    return tuple(bits)


def dense_lookup(generators, n):
    """Syndrome of every weight-<=1 Pauli error (smallest weight first)."""
    table = {}
    for w in (0, 1):
        for pos in itertools.combinations(range(n), w):
            for letters in itertools.product("XYZ", repeat=w):
                e = ["I"] * n
                for p, L in zip(pos, letters):
                    e[p] = L
                e = "".join(e)
                s = tuple(int(not _commutes(g, e)) for g in generators)
                table.setdefault(s, e)
    return table


def _commutes(a, b):
    anti = sum(1 for x, y in zip(a, b) if x != "I" and y != "I" and x != y)
    return anti % 2 == 0


def dense_qec(generators, vec, error):
    """Apply ``error``, read the syndrome, correct by lookup; returns ``(syndrome, corrected_vec)``."""
    v = pauli_matrix(error) @ vec
    s = dense_measure_syndrome(generators, v)
    corr = dense_lookup(generators, len(error))[s]
    return s, pauli_matrix(corr) @ v


# -- random circuits shared by the oracle tests and the acceptance suite ----------------------------


def random_qubit_vector(rng, q):
    v = rng.normal(size=1 << q) + 1j * rng.normal(size=1 << q)
    return v / np.linalg.norm(v)


def random_circuit(rng, q, m, depth, amp_cap=4.0):
    """Random ops plus the initial amplitudes; amplitudes stay below ``amp_cap``."""
    amps = [complex(*rng.uniform(-2, 2, 2)) for _ in range(m)]
    ops = []
    bound = [abs(a) for a in amps]
    for _ in range(depth):
        kind = rng.choice(["cr", "rot", "disp", "gate", "cnot"] if q > 1 else ["cr", "rot", "disp", "gate"])
        if kind == "cr":
            ops.append(("cr", int(rng.integers(q)), int(rng.integers(m)), float(rng.uniform(-np.pi, np.pi))))
        elif kind == "rot":
            ops.append(("rot", int(rng.integers(m)), float(rng.uniform(-np.pi, np.pi))))
        elif kind == "disp":
            md = int(rng.integers(m))
            beta = complex(*rng.uniform(-0.8, 0.8, 2))
            if bound[md] + abs(beta) > amp_cap:
                continue
            bound[md] += abs(beta)
            ops.append(("disp", md, beta))
        elif kind == "gate":
            ops.append(("gate", str(rng.choice(["H", "S", "X", "Y", "Z", "SDG"])), int(rng.integers(q))))
        else:
            c, t = rng.choice(q, 2, replace=False)
            ops.append(("cnot", int(c), int(t)))
    return amps, ops


def run_both(vec, amps, ops):
    s = st.HybridPureState.from_qubit_vector(vec, amps)
    f = FockSim(vec, amps)
    for op in ops:
        if op[0] == "cr":
            s = st.apply_cr(s, op[1], op[2], op[3])
            f.cr(op[1], op[2], op[3])
        elif op[0] == "rot":
            s = st.apply_rotation(s, op[1], op[2])
            f.rotate(op[1], op[2])
        elif op[0] == "disp":
            s = st.apply_displacement(s, op[1], op[2])
            f.displace(op[1], op[2])
        elif op[0] == "gate":
            s = st.apply_qubit_gate(s, op[1], op[2])
            f.gate(op[1], (op[2],))
        else:
            s = st.apply_qubit_gate(s, "CNOT", (op[1], op[2]))
            f.gate("CNOT", (op[1], op[2]))
    return s, f


def fock_equivalence_error(rng):
    q = int(rng.integers(1, 4))
    m = int(rng.integers(1, 3)) if q < 3 else 1
    vec = random_qubit_vector(rng, q)
    amps, ops = random_circuit(rng, q, m, depth=8)
    s, f = run_both(vec, amps, ops)
    return float(np.linalg.norm(branch_to_fock(s)[:, 0] - f.vector()))


def loss_equivalence_error(rng):
    a = complex(*rng.uniform(-2.5, 2.5, 2))
    theta = float(rng.uniform(0.2, np.pi))
    eta = float(rng.uniform(0.3, 0.99))
    c = random_qubit_vector(rng, 1)
    # qubit-entangled cat: c0 |0>|a> + c1 |1>|a e^{i theta}>
    s = st.HybridPureState(1, 1, [[0], [1]], [[a], [a * np.exp(1j * theta)]], c)
    out = noise.apply_loss(s, 0, eta)
    F = branch_to_fock(out)
    rho = F @ F.conj().T
    psi = branch_to_fock(s)[:, 0]
    return trace_distance(rho, loss_dilation(psi, 1, eta))
