"""Pauli operators and the Pauli frame (deferred corrections)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_LETTERS = "IXYZ"
# letter -> (x, z) symplectic bits
_XZ = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_FROM_XZ = {v: k for k, v in _XZ.items()}
_PHASES = {1: "+", 1j: "+i", -1: "-", -1j: "-i"}

_MATS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class PauliOperator:
    """``phase * P_0 (x) P_1 (x) ...`` with letters in ``IXYZ``; qubit 0 first."""

    letters: str
    phase: complex = 1

    def __post_init__(self):
        if any(c not in _LETTERS for c in self.letters):
            raise ValueError(f"invalid Pauli string {self.letters!r}")
        if complex(self.phase) not in (1, -1, 1j, -1j):
            raise ValueError("phase must be one of +1, -1, +i, -i")

    @classmethod
    def from_string(cls, s):
        """Parse ``"XZZI"``, ``"-ZZ"``, ``"+iXY"``."""
        s = s.strip()
        phase = 1
        if s.startswith(("+", "-")):
            phase = -1 if s[0] == "-" else 1
            s = s[1:]
        if s.startswith("i"):
            phase *= 1j
            s = s[1:]
        return cls(s.upper(), phase)

    @classmethod
    def single(cls, n, qubit, letter):
        chars = ["I"] * n
        chars[qubit] = letter
        return cls("".join(chars))

    @classmethod
    def identity(cls, n):
        return cls("I" * n)

    @classmethod
    def from_xz(cls, x, z, phase=1):
        return cls("".join(_FROM_XZ[(int(a), int(b))] for a, b in zip(x, z)), phase)

    @property
    def n(self):
        return len(self.letters)

    @property
    def weight(self):
        return sum(c != "I" for c in self.letters)

    @property
    def support(self):
        return tuple(i for i, c in enumerate(self.letters) if c != "I")

    @property
    def x(self):
        return np.array([_XZ[c][0] for c in self.letters], dtype=np.uint8)

    @property
    def z(self):
        return np.array([_XZ[c][1] for c in self.letters], dtype=np.uint8)

    def commutes(self, other):
        if self.n != other.n:
            raise ValueError("length mismatch")
        return int((self.x @ other.z + self.z @ other.x) % 2) == 0

    def __mul__(self, other):
        if self.n != other.n:
            raise ValueError("length mismatch")
        phase = complex(self.phase) * complex(other.phase)
        out = []
        for a, b in zip(self.letters, other.letters):
            p, c = _mul_letters(a, b)
            phase *= p
            out.append(c)
        return PauliOperator("".join(out), _snap(phase))

    def __neg__(self):
        return PauliOperator(self.letters, _snap(-complex(self.phase)))

    def equal_up_to_phase(self, other):
        return self.letters == other.letters

    def matrix(self):
        """Dense matrix in big-endian order (qubit 0 most significant)."""
        out = np.array([[complex(self.phase)]])
        for c in self.letters:
            out = np.kron(out, _MATS[c])
        return out

    def apply_vector(self, vec):
        """Apply to a dense big-endian vector (or to each column of a matrix)."""
        vec = np.asarray(vec, dtype=complex)
        n = self.n
        idx = np.arange(1 << n)
        xmask = zmask = 0
        for i, L in enumerate(self.letters):
            bit = 1 << (n - 1 - i)
            if L in "XY":
                xmask |= bit
            if L in "ZY":
                zmask |= bit
        parity = np.zeros(idx.size, dtype=np.int64)
        masked = idx & zmask
        while masked.any():
            parity ^= masked & 1
            masked = masked >> 1
        sign = 1 - 2 * parity
        factor = complex(self.phase) * (1j ** self.letters.count("Y")) * sign
        out = np.empty_like(vec)
        out[idx ^ xmask] = factor.reshape((-1,) + (1,) * (vec.ndim - 1)) * vec
        return out

    def __str__(self):
        return _PHASES[_snap(complex(self.phase))] + self.letters


def _snap(p):
    p = complex(p)
    for v in (1, -1, 1j, -1j):
        if abs(p - v) < 1e-9:
            return v
    raise ValueError("phase left the Pauli group")


def _mul_letters(a, b):
    if a == "I":
        return 1, b
    if b == "I":
        return 1, a
    if a == b:
        return 1, "I"
    cyc = {"XY": (1j, "Z"), "YZ": (1j, "X"), "ZX": (1j, "Y"),
           "YX": (-1j, "Z"), "ZY": (-1j, "X"), "XZ": (-1j, "Y")}
    return cyc[a + b]


# -- Pauli frame ------------------------------------------------------------------------

CORRECTIONS = ("X", "Z", "Ztilde", "Xtilde")


@dataclass(frozen=True)
class PauliFrameEntry:
    """One deferred correction.

    ``target`` is ``("q", index)`` or ``("m", index)``. Mode corrections are the
    coherent-logic ``Ztilde`` / ``Xtilde``.
    """

    target: tuple
    correction: str
    origin: str = ""


@dataclass
class PauliFrame:
    """Deferred Pauli corrections; never applied physically, only folded into
    the interpretation of later measurements."""

    entries: list = field(default_factory=list)
    _xz: dict = field(default_factory=dict)

    def add(self, target, correction, origin=""):
        if correction not in CORRECTIONS:
            raise ValueError(f"unknown correction {correction!r}")
        target = (target[0], int(target[1]))
        self.entries.append(PauliFrameEntry(target, correction, origin))
        x, z = self._xz.get(target, (0, 0))
        if correction in ("X", "Xtilde"):
            x ^= 1
        else:
            z ^= 1
        self._xz[target] = (x, z)

    def get(self, target):
        return self._xz.get((target[0], int(target[1])), (0, 0))

    def set(self, target, x, z):
        target = (target[0], int(target[1]))
        if (x, z) == (0, 0):
            self._xz.pop(target, None)
        else:
            self._xz[target] = (int(x), int(z))

    def pop(self, target):
        xz = self.get(target)
        self._xz.pop((target[0], int(target[1])), None)
        return xz

    def transfer(self, src, dst):
        """Move the pending correction of ``src`` onto ``dst`` (teleportation)."""
        x, z = self.pop(src)
        dx, dz = self.get(dst)
        self.set(dst, dx ^ x, dz ^ z)

    def conjugate(self, target, gate):
        """Update the frame when ``gate`` acts physically on ``target``."""
        x, z = self.get(target)
        gate = gate.upper()
        if gate == "H":
            self.set(target, z, x)
        elif gate in ("S", "SDG"):
            # S X S^dag = Y: x stays, z gains x
            self.set(target, x, z ^ x)
        elif gate not in ("X", "Y", "Z"):
            raise ValueError(f"cannot conjugate frame through {gate!r}")

    def pending(self):
        return dict(self._xz)

    def qubit_pauli(self, qubits):
        """Pending corrections on ``qubits`` as a Pauli operator (phase dropped)."""
        x = [self.get(("q", i))[0] for i in qubits]
        z = [self.get(("q", i))[1] for i in qubits]
        return PauliOperator.from_xz(x, z)

    def __len__(self):
        return len(self.entries)
