"""Qubits entangled with coherent bus modes, stored as a list of branches.

Each branch is ``coeff * |bits> (x) |a_1> (x) ... (x) |a_m>`` with every bus mode
a single coherent state. Coherent states are not orthogonal, so norms and
probabilities go through the Gram kernel in :mod:`qubus_qec.kernels`.

Conventions (fixed, every transformation below relies on them):

* ``<a|b> = exp(-|a|^2/2 - |b|^2/2 + conj(a) b)``
* controlled rotation: ``a -> a e^{i theta}`` on branches whose control bit is 1,
  no extra phase
* displacement: ``D(beta)|a> = exp(i Im(beta conj(a))) |a + beta>``
* linear optics: the vector of amplitudes of the selected modes is mapped by
  the mode unitary, ``a -> U a``

Mixed states (needed for photon loss) share the branch list and carry a
factor ``F`` with ``rho = F F^dagger`` over branch pairs; every operation in
this module accepts either kind.
"""

from __future__ import annotations

from dataclasses import dataclass

import math

import numpy as np

from . import kernels

DEFAULT_MERGE_TOL = 1e-9
DROP_TOL = 1e-14

_SQRT_HALF = np.sqrt(0.5)


def overlap(a, b):
    """Coherent-state inner product ``<a|b>``; broadcasts over arrays."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    d = a - b
    out = np.exp(-0.5 * (d.real**2 + d.imag**2) + 1j * (a.conj() * b).imag)
    return out if out.ndim else complex(out)


@dataclass(frozen=True)
class Branch:
    coeff: complex
    qubit_basis: tuple
    mode_amps: tuple


class _BranchSet:
    """Shared storage and helpers for pure and mixed branch states."""

    def __init__(self, q, m, bits, amps, coeffs, merge_tol=DEFAULT_MERGE_TOL):
        coeffs = np.asarray(coeffs, dtype=np.complex128)
        K = coeffs.shape[0]
        bits = np.asarray(bits, dtype=np.uint8).reshape(K, q)
        amps = np.asarray(amps, dtype=np.complex128).reshape(K, m)
        if not np.all(np.isfinite(amps)):
            raise ValueError("coherent amplitudes must be finite")
        self.q = int(q)
        self.m = int(m)
        self.bits = bits
        self.amps = amps
        self._c = coeffs
        self.merge_tol = float(merge_tol)

    # -- internal plumbing ---------------------------------------------------

    @property
    def n_branches(self):
        return self.bits.shape[0]

    def _c2(self):
        return self._c if self._c.ndim == 2 else self._c[:, None]

    def _new(self, bits, amps, c2, q=None, m=None):
        raise NotImplementedError

    def _raw(self, cls, q, m, bits, amps, c):
        # internal constructor: inputs come from already validated states
        out = object.__new__(cls)
        K = c.shape[0]
        out.q = self.q if q is None else q
        out.m = self.m if m is None else m
        out.bits = np.asarray(bits, dtype=np.uint8).reshape(K, out.q)
        out.amps = np.asarray(amps, dtype=np.complex128).reshape(K, out.m)
        out._c = c
        out.merge_tol = self.merge_tol
        return out

    def keys(self):
        if self.q == 0:
            return np.zeros(self.n_branches, dtype=np.int64)
        if self.q > 62:
            raise ValueError("at most 62 qubits are supported")
        weights = (np.int64(1) << np.arange(self.q, dtype=np.int64))
        return self.bits.astype(np.int64) @ weights

    # -- norms ---------------------------------------------------------------

    def norm_squared(self):
        return float(kernels.gram_reduce(self.keys(), self.amps, self._c2())[0, 0].real)

    def norm(self):
        return float(np.sqrt(max(self.norm_squared(), 0.0)))

    def normalized(self, norm_squared=None):
        """Unit-norm copy; ``norm_squared`` skips the Gram computation when known."""
        nrm = self.norm() if norm_squared is None else math.sqrt(norm_squared)
        if nrm == 0.0:
            raise ValueError("cannot normalize a zero state")
        return self._new(self.bits, self.amps, self._c2() / nrm)

    def gram(self):
        """Full branch Gram matrix ``G[j, l] = <branch_j|branch_l>``."""
        return kernels.gram_matrix(self.keys(), self.amps)

    def copy(self):
        return self._new(self.bits.copy(), self.amps.copy(), self._c2().copy())


class HybridPureState(_BranchSet):
    """Pure state of ``q`` qubits and ``m`` coherent bus modes.

    Args:
        q: number of qubits.
        m: number of bus modes.
        bits: (K, q) array of 0/1 qubit basis strings, one row per branch.
        amps: (K, m) complex coherent amplitudes.
        coeffs: (K,) complex branch coefficients.
        merge_tol: amplitude distance below which two branches count as equal.
    """

    def __init__(self, q, m, bits, amps, coeffs, merge_tol=DEFAULT_MERGE_TOL):
        coeffs = np.asarray(coeffs, dtype=np.complex128).reshape(-1)
        super().__init__(q, m, bits, amps, coeffs, merge_tol)

    @property
    def coeffs(self):
        return self._c

    def _new(self, bits, amps, c2, q=None, m=None):
        return self._raw(HybridPureState, q, m, bits, amps, np.asarray(c2, dtype=np.complex128)[:, 0])

    @property
    def branches(self):
        return [Branch(complex(c), tuple(int(b) for b in bits), tuple(complex(a) for a in amps))
                for c, bits, amps in zip(self._c, self.bits, self.amps)]

    @classmethod
    def product(cls, qubits="", amps=(), merge_tol=DEFAULT_MERGE_TOL):
        """Single-branch product state, e.g. ``product("010", [alpha, alpha])``."""
        bits = [int(b) for b in qubits]
        amps = list(amps)
        return cls(len(bits), len(amps), [bits], [amps], [1.0], merge_tol)

    @classmethod
    def from_branches(cls, q, m, branches, merge_tol=DEFAULT_MERGE_TOL):
        """Build from ``(coeff, bits, amps)`` triples; equal branches are merged."""
        coeffs = [complex(c) for c, _, _ in branches]
        bits = [[int(b) for b in bb] for _, bb, _ in branches]
        amps = [list(a) for _, _, a in branches]
        return merge_branches(cls(q, m, bits, amps, coeffs, merge_tol))

    @classmethod
    def from_qubit_vector(cls, vec, amps=(), merge_tol=DEFAULT_MERGE_TOL):
        """Qubit state vector (big-endian: qubit 0 is the most significant bit)
        times a product of coherent states."""
        vec = np.asarray(vec, dtype=complex).reshape(-1)
        q = int(round(np.log2(vec.size)))
        if 2**q != vec.size:
            raise ValueError("vector length must be a power of two")
        idx = np.flatnonzero(np.abs(vec) > DROP_TOL)
        bits = ((idx[:, None] >> np.arange(q - 1, -1, -1)) & 1).astype(np.uint8)
        amps = np.tile(np.asarray(amps, dtype=complex), (idx.size, 1))
        return cls(q, len(amps[0]) if idx.size else len(list(amps)), bits, amps, vec[idx], merge_tol)

    def qubit_vector(self):
        """Dense qubit vector; only valid once every bus mode has been removed."""
        if self.m:
            raise ValueError("state still has bus modes; measure or discard them first")
        vec = np.zeros(2**self.q, dtype=complex)
        idx = self.bits.astype(np.int64) @ (1 << np.arange(self.q - 1, -1, -1, dtype=np.int64))
        np.add.at(vec, idx, self._c)
        return vec

    def inner(self, other):
        """``<self|other>`` for states of the same shape."""
        if (self.q, self.m) != (other.q, other.m):
            raise ValueError("shape mismatch")
        keys = np.concatenate([self.keys(), other.keys()])
        amps = np.concatenate([self.amps, other.amps])
        K = self.n_branches
        groups = np.r_[np.zeros(K, dtype=np.int64), np.ones(other.n_branches, dtype=np.int64)]
        c = np.concatenate([self._c, other._c])
        return complex(kernels.gram_reduce(keys, amps, c, groups, 2)[0, 1])

    def fidelity(self, other):
        """``|<a|b>|^2 / (<a|a><b|b>)``."""
        return abs(self.inner(other)) ** 2 / (self.norm_squared() * other.norm_squared())

    def __repr__(self):
        return f"HybridPureState(q={self.q}, m={self.m}, branches={self.n_branches})"


class HybridMixedState(_BranchSet):
    """Mixed state ``sum_jk rho_jk |branch_j><branch_k|`` stored as ``rho = F F^H``."""

    def __init__(self, q, m, bits, amps, factor, merge_tol=DEFAULT_MERGE_TOL):
        factor = np.asarray(factor, dtype=np.complex128)
        if factor.ndim == 1:
            factor = factor[:, None]
        super().__init__(q, m, bits, amps, factor, merge_tol)

    @property
    def factor(self):
        return self._c

    @property
    def rho(self):
        return self._c @ self._c.conj().T

    def _new(self, bits, amps, c2, q=None, m=None):
        return self._raw(HybridMixedState, q, m, bits, amps, np.asarray(c2, dtype=np.complex128))

    def trace(self):
        return self.norm_squared()

    def purity(self):
        G = self.gram()
        rg = self.rho @ G
        return float(np.trace(rg @ rg).real / np.trace(rg).real ** 2)

    def physical_eigenvalues(self):
        """Eigenvalues of the density operator (via ``G^1/2 rho G^1/2``)."""
        G = self.gram()
        w, V = np.linalg.eigh(0.5 * (G + G.conj().T))
        sq = V @ np.diag(np.sqrt(np.clip(w, 0, None))) @ V.conj().T
        return np.linalg.eigvalsh(sq @ self.rho @ sq)

    def compressed(self, tol=1e-13):
        """Re-factor ``rho`` with the minimal number of columns."""
        F = self._c
        if F.shape[1] <= 1:
            return self
        U, s, _ = np.linalg.svd(F, full_matrices=False)
        keep = s > tol * max(s[0], 1e-300)
        return self._new(self.bits, self.amps, U[:, keep] * s[keep])

    def to_pure(self, tol=1e-10):
        """Pure state when ``rho`` has rank one (within ``tol``)."""
        c = self.compressed(tol)
        if c._c.shape[1] != 1:
            raise ValueError("state is not pure")
        return HybridPureState(self.q, self.m, c.bits, c.amps, c._c[:, 0], self.merge_tol)

    def __repr__(self):
        return f"HybridMixedState(q={self.q}, m={self.m}, branches={self.n_branches}, rank={self._c.shape[1]})"


def dense_factor(state):
    """Qubit-only state as a dense ``2^q x R`` factor (``rho = F F^H``)."""
    if state.m:
        raise ValueError("state still has bus modes; measure or discard them first")
    c2 = state._c2()
    out = np.zeros((2**state.q, c2.shape[1]), dtype=complex)
    idx = state.bits.astype(np.int64) @ (1 << np.arange(state.q - 1, -1, -1, dtype=np.int64))
    np.add.at(out, idx, c2)
    return out


def to_mixed(state):
    """Pure state as a rank-one mixed state (mixed input is returned as is)."""
    if isinstance(state, HybridMixedState):
        return state
    return HybridMixedState(state.q, state.m, state.bits, state.amps, state.coeffs[:, None], state.merge_tol)


# -- validation ------------------------------------------------------------------


def _check_qubit(state, qubit):
    if not 0 <= qubit < state.q:
        raise IndexError(f"qubit {qubit} out of range for {state.q} qubits")


def _check_mode(state, mode):
    if not 0 <= mode < state.m:
        raise IndexError(f"mode {mode} out of range for {state.m} modes")


def _scale_rows(c2, v):
    return c2 * np.asarray(v)[:, None]


# -- merging ----------------------------------------------------------------------

def group_rows(key):
    """``(first, inverse)`` of the distinct rows of a float matrix (exact comparison)."""
    if key.shape[1] == 0:
        return np.zeros(1 if len(key) else 0, dtype=np.int64), np.zeros(len(key), dtype=np.int64)
    _, first, inv = np.unique(key, axis=0, return_index=True, return_inverse=True)
    return first, inv.reshape(-1)


def group_branches(bits, amps, tol):
    """Groups of branches with equal bits and amplitudes on a ``tol`` grid."""
    res = kernels.group_branches(bits, amps, tol)
    if res is not None:
        return res
    K = bits.shape[0]
    grid = np.round(amps.view(np.float64).reshape(K, -1) / tol)
    return group_rows(np.concatenate([bits.astype(np.float64), grid], axis=1))


def merge_branches(state, drop_tol=DROP_TOL):
    """Sum branches with equal basis strings and amplitudes equal within
    ``state.merge_tol``; drop branches whose coefficient falls below ``drop_tol``.

    Amplitudes are compared on a grid of spacing ``merge_tol``.
    """
    c2 = state._c2()
    K = state.n_branches
    if K == 0:
        return state
    first, inv = group_branches(state.bits, state.amps, state.merge_tol)
    if first.size == K:
        merged = c2
        bits, amps = state.bits, state.amps
    else:
        merged = np.zeros((first.size, c2.shape[1]), dtype=np.complex128)
        np.add.at(merged, inv, c2)
        bits, amps = state.bits[first], state.amps[first]
    keep = (merged.real ** 2 + merged.imag ** 2).sum(axis=1) >= drop_tol * drop_tol
    if not keep.all():
        merged, bits, amps = merged[keep], bits[keep], amps[keep]
    return state._new(bits, amps, merged)


# -- unitary bus operations --------------------------------------------------------


def apply_cr(state, qubit, mode, theta):
    """Controlled rotation: ``a -> a e^{i theta}`` on the mode where ``qubit`` is 1."""
    _check_qubit(state, qubit)
    _check_mode(state, mode)
    amps = state.amps.copy()
    on = state.bits[:, qubit] == 1
    amps[on, mode] *= np.exp(1j * theta)
    return state._new(state.bits, amps, state._c2())


def apply_rotation(state, mode, phi):
    """Unconditional phase-space rotation ``a -> a e^{i phi}`` of one mode."""
    _check_mode(state, mode)
    amps = state.amps.copy()
    amps[:, mode] *= np.exp(1j * phi)
    return state._new(state.bits, amps, state._c2())


def apply_displacement(state, mode, beta):
    """``D(beta)`` on one mode: ``a -> a + beta`` with phase ``exp(i Im(beta conj(a)))``."""
    _check_mode(state, mode)
    beta = complex(beta)
    a = state.amps[:, mode]
    phase = np.exp(1j * (beta * a.conj()).imag)
    amps = state.amps.copy()
    amps[:, mode] = a + beta
    return state._new(state.bits, amps, _scale_rows(state._c2(), phase))


def apply_beamsplitter(state, modes, U, atol=1e-10):
    """Passive linear optics on ``modes``: amplitude vector ``v -> U v``."""
    modes = list(modes)
    for md in modes:
        _check_mode(state, md)
    U = np.asarray(U, dtype=complex)
    if U.shape != (len(modes), len(modes)):
        raise ValueError("matrix shape does not match the mode list")
    if not np.allclose(U.conj().T @ U, np.eye(len(modes)), atol=atol, rtol=0):
        raise ValueError("beamsplitter matrix is not unitary")
    amps = state.amps.copy()
    amps[:, modes] = state.amps[:, modes] @ U.T
    return merge_branches(state._new(state.bits, amps, state._c2()))


def symmetric_splitter(n):
    """n-port symmetric splitter (DFT matrix); first column is ``1/sqrt(n)``."""
    k = np.arange(n)
    return np.exp(2j * np.pi * np.outer(k, k) / n) / np.sqrt(n)


# -- qubit gates --------------------------------------------------------------------

SINGLE_QUBIT_GATES = ("X", "Y", "Z", "H", "S", "SDG")
TWO_QUBIT_GATES = ("CNOT", "CZ")


def apply_qubit_gate(state, name, qubits):
    """Apply X, Y, Z, H, S, SDG (one qubit) or CNOT, CZ (control, target)."""
    name = name.upper()
    if isinstance(qubits, (int, np.integer)):
        qubits = (int(qubits),)
    qubits = tuple(int(x) for x in qubits)
    for x in qubits:
        _check_qubit(state, x)
    if name in SINGLE_QUBIT_GATES and len(qubits) != 1:
        raise ValueError(f"{name} acts on one qubit")
    if name in TWO_QUBIT_GATES and (len(qubits) != 2 or qubits[0] == qubits[1]):
        raise ValueError(f"{name} needs two distinct qubits")
    if name not in SINGLE_QUBIT_GATES + TWO_QUBIT_GATES:
        raise ValueError(f"unknown gate {name!r}")

    bits = state.bits
    c2 = state._c2()
    t = qubits[-1]
    b = bits[:, t]
    if name == "X":
        bits = bits.copy()
        bits[:, t] ^= 1
    elif name == "Z":
        c2 = _scale_rows(c2, 1 - 2.0 * b)
    elif name == "Y":
        c2 = _scale_rows(c2, np.where(b == 0, 1j, -1j))
        bits = bits.copy()
        bits[:, t] ^= 1
    elif name == "S":
        c2 = _scale_rows(c2, np.where(b == 0, 1, 1j))
    elif name == "SDG":
        c2 = _scale_rows(c2, np.where(b == 0, 1, -1j))
    elif name == "CNOT":
        bits = bits.copy()
        bits[:, t] ^= bits[:, qubits[0]]
    elif name == "CZ":
        c2 = _scale_rows(c2, 1 - 2.0 * (b & bits[:, qubits[0]]))
    elif name == "H":
        b0 = bits.copy()
        b0[:, t] = 0
        b1 = bits.copy()
        b1[:, t] = 1
        new_bits = np.concatenate([b0, b1])
        new_amps = np.concatenate([state.amps, state.amps])
        new_c = np.concatenate([c2 * _SQRT_HALF, _scale_rows(c2, _SQRT_HALF * (1 - 2.0 * b))])
        return merge_branches(state._new(new_bits, new_amps, new_c))
    return state._new(bits, state.amps, c2)


def apply_phase(state, qubit, phi):
    """Diagonal phase ``diag(1, e^{i phi})`` on one qubit."""
    _check_qubit(state, qubit)
    on = state.bits[:, qubit] == 1
    return state._new(state.bits, state.amps, _scale_rows(state._c2(), np.where(on, np.exp(1j * phi), 1.0)))


def apply_branch_phases(state, phases):
    """Multiply branch ``j`` by ``exp(i phases[j])`` (classically computed feed-forward)."""
    return state._new(state.bits, state.amps, _scale_rows(state._c2(), np.exp(1j * np.asarray(phases))))


# -- register management --------------------------------------------------------------


def add_qubit(state, value=0):
    """Append a qubit in ``|0>``, ``|1>`` or ``|+>`` (``value="+"``); returns (state, index)."""
    K = state.n_branches
    if value in (0, 1, "0", "1"):
        bits = np.concatenate([state.bits, np.full((K, 1), int(value), dtype=np.uint8)], axis=1)
        return state._new(bits, state.amps, state._c2(), q=state.q + 1), state.q
    if value == "+":
        grown, idx = add_qubit(state, 0)
        return apply_qubit_gate(grown, "H", idx), idx
    raise ValueError(f"unsupported qubit preparation {value!r}")


def add_mode(state, amp=0.0):
    """Append a bus mode in coherent state ``|amp>``; returns (state, index)."""
    col = np.full((state.n_branches, 1), complex(amp))
    amps = np.concatenate([state.amps, col], axis=1)
    return state._new(state.bits, amps, state._c2(), m=state.m + 1), state.m


def blank(q, m, merge_tol=DEFAULT_MERGE_TOL):
    """Single branch with every qubit in ``|0>`` and every mode in vacuum."""
    return HybridPureState(q, m, np.zeros((1, q), dtype=np.uint8), np.zeros((1, m)), [1.0], merge_tol)


def embed(state, part):
    """Combine two states on disjoint registers of the same shape.

    Every register that ``part`` uses (a qubit that is ever 1, a mode that is
    ever displaced) must be ``|0>`` / vacuum in all branches of ``state``, and
    vice versa; the result is their tensor product in place.
    """
    if (state.q, state.m) != (part.q, part.m):
        raise ValueError("embed needs states of equal shape")
    uq = part.bits.any(axis=0)
    um = (np.abs(part.amps) > 0).any(axis=0)
    if state.bits[:, uq].any() or (np.abs(state.amps[:, um]) > 0).any():
        raise ValueError("registers used by the embedded part are not free")
    Ka, Kb = state.n_branches, part.n_branches
    ia = np.repeat(np.arange(Ka), Kb)
    ib = np.tile(np.arange(Kb), Ka)
    ca, cb = state._c2(), part._c2()
    c2 = (ca[:, None, :, None] * cb[None, :, None, :]).reshape(Ka * Kb, -1)
    out = state._new(state.bits[ia] | part.bits[ib], state.amps[ia] + part.amps[ib], c2)
    return merge_branches(out)


def discard_qubit(state, qubit):
    """Remove a qubit that is in a definite basis state in every branch."""
    _check_qubit(state, qubit)
    col = state.bits[:, qubit]
    if col.size and not np.all(col == col[0]):
        raise ValueError("qubit is entangled; measure it before discarding")
    bits = np.delete(state.bits, qubit, axis=1)
    return merge_branches(state._new(bits, state.amps, state._c2(), q=state.q - 1))


def discard_mode(state, mode):
    """Remove a mode that holds the same amplitude in every branch."""
    _check_mode(state, mode)
    col = state.amps[:, mode]
    if col.size and not np.allclose(col, col[0], atol=state.merge_tol, rtol=0):
        raise ValueError("mode is entangled; measure it before discarding")
    amps = np.delete(state.amps, mode, axis=1)
    return merge_branches(state._new(state.bits, amps, state._c2(), m=state.m - 1))


def set_mode(state, mode, amp=0.0):
    """Overwrite a mode that holds the same amplitude in every branch (reset/reprepare)."""
    _check_mode(state, mode)
    col = state.amps[:, mode]
    if col.size and not np.allclose(col, col[0], atol=state.merge_tol, rtol=0):
        raise ValueError("mode is entangled; measure it before resetting")
    amps = state.amps.copy()
    amps[:, mode] = complex(amp)
    return merge_branches(state._new(state.bits, amps, state._c2()))


def set_qubit(state, qubit, value):
    """Overwrite a qubit that is in a definite basis state (reset)."""
    _check_qubit(state, qubit)
    col = state.bits[:, qubit]
    if col.size and not np.all(col == col[0]):
        raise ValueError("qubit is entangled; measure it before resetting")
    bits = state.bits.copy()
    bits[:, qubit] = int(value)
    return merge_branches(state._new(bits, state.amps, state._c2()))


def permute_qubits(state, order):
    """Reorder qubits: new qubit ``i`` is old qubit ``order[i]``."""
    order = list(order)
    if sorted(order) != list(range(state.q)):
        raise ValueError("order must be a permutation")
    return state._new(state.bits[:, order], state.amps, state._c2())
