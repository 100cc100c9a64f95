"""Error channels: qubit Pauli noise, probe photon loss, labeled fault injection."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import circuit as cc
from .state import (
    HybridMixedState,
    HybridPureState,
    _check_mode,
    _check_qubit,
    apply_qubit_gate,
    merge_branches,
    overlap,
    to_mixed,
)

__all__ = [
    "HybridMixedState",
    "to_mixed",
    "apply_loss",
    "apply_pauli_noise",
    "NoiseConfig",
    "Fault",
    "inject_fault",
]

_EIG_TOL = 1e-15


def apply_loss(state, mode, eta):
    """Photon loss with transmissivity ``eta`` on one mode.

    Amplitudes shrink to ``sqrt(eta) a`` and coherences pick up the overlap of
    the leaked environment states,
    ``rho_jk -> rho_jk <sqrt(1-eta) a_k | sqrt(1-eta) a_j>``.
    """
    if not 0 < eta <= 1:
        raise ValueError("transmissivity must lie in (0, 1]")
    _check_mode(state, mode)
    if eta == 1:
        return state
    mixed = to_mixed(state)
    a = mixed.amps[:, mode]
    s = math.sqrt(1 - eta)
    grid = np.round(np.stack([a.real, a.imag], axis=1) / mixed.merge_tol)
    _, first, inv = np.unique(grid, axis=0, return_index=True, return_inverse=True)
    inv = inv.reshape(-1)
    env = s * a[first]
    # E[u, v] = <env_v | env_u> so that rho' = rho * E elementwise
    E = overlap(env[None, :], env[:, None])
    w, V = np.linalg.eigh(0.5 * (E + E.conj().T))
    keep = w > _EIG_TOL * max(w[-1], 1e-300)
    Vu = V[:, keep] * np.sqrt(w[keep])
    Vb = Vu[inv]
    F = mixed.factor
    cols = (F[:, :, None] * Vb[:, None, :]).reshape(F.shape[0], -1)
    amps = mixed.amps.copy()
    amps[:, mode] = math.sqrt(eta) * a
    out = HybridMixedState(mixed.q, mixed.m, mixed.bits, amps, cols, mixed.merge_tol)
    return merge_branches(out).compressed()


def _pauli_branch(state, qubit, letter):
    return state if letter == "I" else apply_qubit_gate(state, letter, qubit)


def apply_pauli_noise(state, qubit, rates, rng=None, channel=None):
    """Pauli noise with probabilities ``(px, py, pz)`` on one qubit.

    Pure states get a sampled Pauli (one trajectory). Mixed states, or
    ``channel=True``, get the full channel as a convex combination.
    """
    _check_qubit(state, qubit)
    px, py, pz = (float(r) for r in rates)
    probs = np.array([1 - px - py - pz, px, py, pz])
    if np.any(probs < -1e-15) or np.any(probs > 1 + 1e-15):
        raise ValueError("Pauli rates must be probabilities summing to at most 1")
    probs = np.clip(probs, 0, 1)
    if channel is None:
        channel = isinstance(state, HybridMixedState)
    if not channel:
        if rng is None:
            raise ValueError("sampling Pauli noise needs an rng")
        letter = "IXYZ"[int(rng.choice(4, p=probs / probs.sum()))]
        return _pauli_branch(state, qubit, letter)
    mixed = to_mixed(state)
    parts = [(p, _pauli_branch(mixed, qubit, L)) for p, L in zip(probs, "IXYZ") if p > 0]
    R = mixed.factor.shape[1]
    K = sum(s.n_branches for _, s in parts)
    F = np.zeros((K, R * len(parts)), dtype=complex)
    row = 0
    for i, (p, s) in enumerate(parts):
        F[row:row + s.n_branches, i * R:(i + 1) * R] = math.sqrt(p) * s.factor
        row += s.n_branches
    bits = np.concatenate([s.bits for _, s in parts])
    amps = np.concatenate([s.amps for _, s in parts])
    return merge_branches(HybridMixedState(mixed.q, mixed.m, bits, amps, F, mixed.merge_tol)).compressed()


# -- faults --------------------------------------------------------------------------------

FAULT_KINDS = ("identity", "pauli", "phase_kick", "loss", "xtilde")


@dataclass(frozen=True)
class Fault:
    """Deterministic fault fired right after a labeled op.

    ``kind``:
        ``identity``; ``pauli`` (``letter`` on ``qubit``, default the op's last qubit);
        ``phase_kick`` (rotate ``mode`` by ``phi``); ``loss`` (transmissivity
        ``eta``); ``xtilde`` (swap ``|alpha>`` and ``|alpha e^{i theta}>`` on the
        mode: rotation by pi, then ``D(alpha (1 + e^{i theta}))``).
    """

    kind: str
    qubit: int | None = None
    mode: int | None = None
    letter: str = "X"
    phi: float = 0.0
    eta: float = 1.0
    alpha: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        if self.kind not in FAULT_KINDS:
            raise ValueError(f"unknown fault kind {self.kind!r}")

    def _mode(self, op):
        md = self.mode if self.mode is not None else getattr(op, "mode", None)
        if md is None:
            raise ValueError(f"fault {self.kind} needs a mode at {op.label!r}")
        return md

    def ops(self, op):
        lbl = (op.label or "") + "/fault"
        if self.kind == "identity":
            return []
        if self.kind == "pauli":
            qb = self.qubit
            if qb is None:
                touched = cc.op_qubits(op)
                qb = touched[-1] if touched else None
            if qb is None:
                raise ValueError(f"Pauli fault needs a qubit at {op.label!r}")
            return [] if self.letter == "I" else [cc.QubitGate(self.letter, (qb,), lbl)]
        if self.kind == "phase_kick":
            return [cc.Rotate(self._mode(op), self.phi, lbl)]
        if self.kind == "loss":
            return [cc.Loss(self._mode(op), self.eta, lbl)]
        md = self._mode(op)
        return [cc.Rotate(md, math.pi, lbl), cc.Displace(md, self.alpha * (1 + np.exp(1j * self.theta)), lbl)]

    def to_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def inject_fault(circuit, label, fault):
    """Copy of ``circuit`` with ``fault`` inserted after every op labeled ``label``."""
    if label not in circuit.labels():
        raise KeyError(f"no op labeled {label!r}")
    ops = []
    for op in circuit.ops:
        ops.append(op)
        if op.label == label:
            ops.extend(fault.ops(op))
    return cc.Circuit(circuit.q, circuit.m, ops, circuit.label)


# -- configuration -------------------------------------------------------------------------


@dataclass
class NoiseConfig:
    """Noise settings for a QEC cycle.

    ``pauli`` maps a location class (``"data"``, ``"ancilla"``) to
    ``(px, py, pz)``; ``eta`` is the probe transmissivity per CR;
    ``inject`` maps circuit labels to lists of :class:`Fault`; ``data_errors``
    lists deterministic ``(qubit, letter)`` errors applied before syndrome
    extraction.
    """

    pauli: dict = field(default_factory=dict)
    eta: float = 1.0
    inject: dict = field(default_factory=dict)
    data_errors: list = field(default_factory=list)

    def __post_init__(self):
        for cls, rates in self.pauli.items():
            if len(rates) != 3 or any(not 0 <= r <= 1 for r in rates) or sum(rates) > 1:
                raise ValueError(f"pauli rates for {cls!r} must be three probabilities summing to at most 1")
        if not 0 < self.eta <= 1:
            raise ValueError("eta must lie in (0, 1]")
        for q, letter in self.data_errors:
            if letter not in "IXYZ" or len(letter) != 1:
                raise ValueError(f"bad data error letter {letter!r}")

    @property
    def is_noiseless(self):
        return (self.eta == 1 and not self.inject and not self.data_errors
                and all(sum(r) == 0 for r in self.pauli.values()))

    def to_dict(self):
        return {
            "pauli": {k: list(v) for k, v in self.pauli.items()},
            "eta": self.eta,
            "inject": {k: [f.to_dict() for f in v] for k, v in self.inject.items()},
            "data_errors": [[int(q), L] for q, L in self.data_errors],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            pauli={k: tuple(float(x) for x in v) for k, v in d.get("pauli", {}).items()},
            eta=float(d.get("eta", 1.0)),
            inject={k: [Fault(**f) for f in v] for k, v in d.get("inject", {}).items()},
            data_errors=[(int(q), str(L)) for q, L in d.get("data_errors", [])],
        )

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def is_pure(state):
    return isinstance(state, HybridPureState)
