"""Circuit operations, JSON serialization, and the executor that runs them.

Every protocol in the package drives an :class:`Executor`, which applies ops
to a state, records the executed ops as a trace :class:`Circuit` (used for
resource tallies), logs measurement outcomes, and fires injected faults at
labeled locations. With ``state=None`` the executor runs dry: it only builds
the trace and returns outcome 0 for every measurement.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import measurement as meas
from . import state as st

# -- ops ----------------------------------------------------------------------------------


@dataclass(frozen=True)
class CR:
    qubit: int
    mode: int
    theta: float
    label: str = ""


@dataclass(frozen=True)
class Displace:
    mode: int
    beta: complex
    label: str = ""


@dataclass(frozen=True)
class Rotate:
    """Unconditional phase-space rotation of one mode."""

    mode: int
    phi: float
    label: str = ""


@dataclass(frozen=True)
class Beamsplitter:
    modes: tuple
    U: tuple
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(int(m) for m in self.modes))
        U = np.asarray(self.U, dtype=complex)
        object.__setattr__(self, "U", tuple(tuple(complex(v) for v in row) for row in U))

    @property
    def matrix(self):
        return np.array(self.U, dtype=complex)


@dataclass(frozen=True)
class QubitGate:
    name: str
    qubits: tuple
    label: str = ""

    def __post_init__(self):
        q = self.qubits
        q = (int(q),) if isinstance(q, (int, np.integer)) else tuple(int(x) for x in q)
        object.__setattr__(self, "qubits", q)
        object.__setattr__(self, "name", self.name.upper())


@dataclass(frozen=True)
class PrepareQubit:
    """Re-prepare a qubit that is currently in a definite basis state."""

    qubit: int
    value: str = "0"
    label: str = ""


@dataclass(frozen=True)
class PrepareMode:
    """Re-prepare a mode (currently unentangled) in the coherent state ``amp``."""

    mode: int
    amp: complex
    label: str = ""


@dataclass(frozen=True)
class MeasureQubit:
    qubit: int
    basis: str = "Z"
    label: str = ""


@dataclass(frozen=True)
class Homodyne:
    angle: float = 0.0


@dataclass(frozen=True)
class PhotonNumber:
    pass


@dataclass(frozen=True)
class Ztilde:
    alpha_ref: complex
    theta_ref: float
    correct_qubit: int | None = None


@dataclass(frozen=True)
class MeasureMode:
    mode: int
    kind: object
    label: str = ""


@dataclass(frozen=True)
class Loss:
    mode: int
    eta: float
    label: str = ""


@dataclass(frozen=True)
class PauliChannel:
    """Stochastic Pauli error; sampled per execution."""

    qubit: int
    px: float = 0.0
    py: float = 0.0
    pz: float = 0.0
    label: str = ""


@dataclass(frozen=True)
class AlternatingPhase:
    """Classically controlled diagonal phase: a branch whose ``qubits`` have
    alternating sum ``beta = b_0 - b_1 + b_2 - ...`` gains ``exp(i phases[beta])``."""

    qubits: tuple
    phases: tuple
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(int(x) for x in self.qubits))
        items = self.phases.items() if isinstance(self.phases, dict) else self.phases
        object.__setattr__(self, "phases", tuple((int(b), float(p)) for b, p in items))


OP_TYPES = {c.__name__: c for c in (CR, Displace, Rotate, Beamsplitter, QubitGate, PrepareQubit,
                                    PrepareMode, MeasureQubit, MeasureMode, Loss, PauliChannel,
                                    AlternatingPhase)}
KIND_TYPES = {c.__name__: c for c in (Homodyne, PhotonNumber, Ztilde)}


def op_qubits(op):
    if isinstance(op, (QubitGate, AlternatingPhase)):
        return op.qubits
    if isinstance(op, MeasureMode):
        cq = getattr(op.kind, "correct_qubit", None)
        return () if cq is None else (cq,)
    q = getattr(op, "qubit", None)
    return () if q is None else (q,)


def op_modes(op):
    if isinstance(op, Beamsplitter):
        return op.modes
    md = getattr(op, "mode", None)
    return () if md is None else (md,)


# -- serialization ---------------------------------------------------------------------------


def _enc(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, tuple):
        return [_enc(x) for x in v]
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


def op_to_dict(op):
    out = {"type": type(op).__name__}
    for f in fields(op):
        v = getattr(op, f.name)
        if f.name == "kind":
            kd = {"type": type(v).__name__}
            kd.update({k: _enc(x) for k, x in asdict(v).items()})
            out["kind"] = kd
        else:
            out[f.name] = _enc(v)
    return out


def _cplx(v):
    if isinstance(v, (list, tuple)):
        return complex(v[0], v[1])
    return complex(v)


def op_from_dict(d):
    d = dict(d)
    t = d.pop("type")
    if t not in OP_TYPES:
        raise ValueError(f"unknown op type {t!r}")
    if t == "Displace":
        d["beta"] = _cplx(d["beta"])
    elif t == "PrepareMode":
        d["amp"] = _cplx(d["amp"])
    elif t == "Beamsplitter":
        d["U"] = [[_cplx(v) for v in row] for row in d["U"]]
    elif t == "MeasureMode":
        kd = dict(d["kind"])
        kt = kd.pop("type")
        if kt == "Ztilde":
            kd["alpha_ref"] = _cplx(kd["alpha_ref"])
        d["kind"] = KIND_TYPES[kt](**kd)
    return OP_TYPES[t](**d)


@dataclass
class Circuit:
    q: int
    m: int
    ops: list = field(default_factory=list)
    label: str = ""

    def append(self, op):
        self.ops.append(op)
        return self

    def extend(self, ops):
        self.ops.extend(ops)
        return self

    def __iter__(self):
        return iter(self.ops)

    def __len__(self):
        return len(self.ops)

    def labels(self):
        return [op.label for op in self.ops]

    def validate(self):
        for i, op in enumerate(self.ops):
            for qb in op_qubits(op):
                if not 0 <= qb < self.q:
                    raise IndexError(f"op {i} ({type(op).__name__}): qubit {qb} out of range")
            for md in op_modes(op):
                if not 0 <= md < self.m:
                    raise IndexError(f"op {i} ({type(op).__name__}): mode {md} out of range")
            if isinstance(op, Beamsplitter):
                U = op.matrix
                if U.shape != (len(op.modes),) * 2 or not np.allclose(U.conj().T @ U, np.eye(len(op.modes)), atol=1e-10, rtol=0):
                    raise ValueError(f"op {i}: beamsplitter matrix is not unitary")
            if isinstance(op, Loss) and not 0 < op.eta <= 1:
                raise ValueError(f"op {i}: transmissivity must lie in (0, 1]")
        return self

    def to_dict(self):
        return {"q": self.q, "m": self.m, "label": self.label, "ops": [op_to_dict(op) for op in self.ops]}

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d):
        return cls(int(d["q"]), int(d["m"]), [op_from_dict(o) for o in d["ops"]], d.get("label", "")).validate()

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


# -- execution --------------------------------------------------------------------------------


class Executor:
    """Applies ops to a state while recording a trace and measurement record.

    Args:
        state: initial state, or ``None`` for a dry run.
        rng: ``numpy.random.Generator``.
        faults: mapping ``label -> list of faults``; each fault provides
            ``ops(op)`` returning the ops to run right after the labeled op.
        loss_eta: probe transmissivity applied after every CR (1 = lossless).
        q, m: register sizes for a dry run.
        ancilla_pauli: ``(px, py, pz)`` sampled onto every freshly prepared qubit.
    """

    def __init__(self, state=None, rng=None, faults=None, loss_eta=1.0, q=0, m=0, label="",
                 ancilla_pauli=None):
        self.state = state
        self.dry = state is None
        self.rng = rng if rng is not None else np.random.default_rng()
        self.faults = {k: list(v) for k, v in (faults or {}).items()}
        self.loss_eta = float(loss_eta)
        self.ancilla_pauli = tuple(ancilla_pauli) if ancilla_pauli and sum(ancilla_pauli) > 0 else None
        self.q = state.q if state is not None else int(q)
        self.m = state.m if state is not None else int(m)
        self.trace = Circuit(self.q, self.m, [], label)
        self.record = meas.MeasurementRecord()
        self.leakage = []
        self.fired = []
        self._free_q = []
        self._free_m = []
        self._parent = None

    # -- register management --

    def fork(self):
        """Executor for ancilla work that starts unentangled with this state.

        It shares the trace, record, frame-free bookkeeping and register pools
        but evolves a blank state of the same shape; :meth:`join` embeds it.
        """
        child = Executor.__new__(Executor)
        child.__dict__.update(self.__dict__)
        child._parent = self
        if not self.dry:
            child.state = st.blank(self.q, self.m, self.state.merge_tol)
        return child

    def join(self, child):
        if not self.dry:
            self.state = st.embed(self.state, child.state)

    def _sync(self):
        parent = self._parent
        if parent is None:
            return
        if not self.dry:
            while self.state.q < parent.q:
                self.state, _ = st.add_qubit(self.state, 0)
            while self.state.m < parent.m:
                self.state, _ = st.add_mode(self.state, 0.0)
        self.q, self.m = parent.q, parent.m

    def alloc_qubit(self):
        parent = self._parent
        if parent is not None:
            idx = parent.alloc_qubit()
            self._sync()
            return idx
        if self._free_q:
            return self._free_q.pop(0)
        if not self.dry:
            self.state, _ = st.add_qubit(self.state, 0)
        self.q += 1
        self.trace.q = self.q
        return self.q - 1

    def release_qubit(self, qubit):
        if self._parent is not None:
            return self._parent.release_qubit(qubit)
        self._free_q.append(qubit)
        self._free_q.sort()

    def alloc_mode(self):
        parent = self._parent
        if parent is not None:
            idx = parent.alloc_mode()
            self._sync()
            return idx
        if self._free_m:
            return self._free_m.pop(0)
        if not self.dry:
            self.state, _ = st.add_mode(self.state, 0.0)
        self.m += 1
        self.trace.m = self.m
        return self.m - 1

    def release_mode(self, mode):
        if self._parent is not None:
            return self._parent.release_mode(mode)
        self._free_m.append(mode)
        self._free_m.sort()

    # -- ops --

    def apply(self, op, record=True, execute=True):
        if record:
            self.trace.ops.append(op)
        if not execute:
            return None
        out = None if self.dry else self._run(op)
        if self.dry and isinstance(op, (MeasureQubit, MeasureMode)):
            out = 0.0 if isinstance(op, MeasureMode) and isinstance(op.kind, Homodyne) else 0
        if isinstance(op, (MeasureQubit, MeasureMode)):
            self.record.append(len(self.trace.ops) - 1, op.label, out)
        if not self.dry:
            if isinstance(op, CR) and self.loss_eta < 1.0:
                from .noise import apply_loss

                self.state = apply_loss(self.state, op.mode, self.loss_eta)
            if isinstance(op, PrepareQubit) and self.ancilla_pauli:
                from .noise import apply_pauli_noise

                self.state = apply_pauli_noise(self.state, op.qubit, self.ancilla_pauli, self.rng)
            for fault in self.faults.get(op.label, ()):
                self.fired.append(op.label)
                for extra in fault.ops(op):
                    self._run(extra)
        return out

    def run(self, ops):
        return [self.apply(op) for op in ops]

    def _run(self, op):
        s = self.state
        if isinstance(op, CR):
            self.state = st.apply_cr(s, op.qubit, op.mode, op.theta)
        elif isinstance(op, Displace):
            self.state = st.apply_displacement(s, op.mode, op.beta)
        elif isinstance(op, Rotate):
            self.state = st.apply_rotation(s, op.mode, op.phi)
        elif isinstance(op, Beamsplitter):
            self.state = st.apply_beamsplitter(s, op.modes, op.matrix)
        elif isinstance(op, QubitGate):
            self.state = st.apply_qubit_gate(s, op.name, op.qubits)
        elif isinstance(op, PrepareQubit):
            self.state = st.set_qubit(s, op.qubit, 0)
            if op.value == "+":
                self.state = st.apply_qubit_gate(self.state, "H", op.qubit)
            elif op.value == "1":
                self.state = st.apply_qubit_gate(self.state, "X", op.qubit)
        elif isinstance(op, PrepareMode):
            self.state = st.set_mode(s, op.mode, op.amp)
        elif isinstance(op, AlternatingPhase):
            signs = np.where(np.arange(len(op.qubits)) % 2 == 0, 1, -1)
            beta = s.bits[:, list(op.qubits)].astype(np.int64) @ signs
            table = dict(op.phases)
            phases = np.array([table.get(int(b), 0.0) for b in beta])
            self.state = st.apply_branch_phases(s, phases)
        elif isinstance(op, MeasureQubit):
            bit, self.state = meas.measure_qubit(s, op.qubit, op.basis, self.rng)
            return bit
        elif isinstance(op, MeasureMode):
            return self._measure_mode(op)
        elif isinstance(op, Loss):
            from .noise import apply_loss

            self.state = apply_loss(s, op.mode, op.eta)
        elif isinstance(op, PauliChannel):
            from .noise import apply_pauli_noise

            self.state = apply_pauli_noise(s, op.qubit, (op.px, op.py, op.pz), self.rng)
        else:
            raise TypeError(f"unknown op {op!r}")
        return None

    def _measure_mode(self, op):
        kind = op.kind
        if isinstance(kind, Homodyne):
            x, self.state = meas.homodyne_measure(self.state, op.mode, kind.angle, self.rng)
            return x
        if isinstance(kind, PhotonNumber):
            n, self.state = meas.photon_sample(self.state, op.mode, self.rng)
            return n
        if isinstance(kind, Ztilde):
            bit, self.state, info = meas.ztilde_measure(
                self.state, op.mode, kind.alpha_ref, kind.theta_ref, self.rng, correct_qubit=kind.correct_qubit)
            if info.leakage:
                self.leakage.append((op.label, info.max_leak_distance))
            return bit
        raise TypeError(f"unknown measurement kind {kind!r}")


def run_circuit(state, circuit, rng_seed=None):
    """Apply ``circuit`` to ``state``; returns ``(state, MeasurementRecord)``."""
    circuit.validate()
    if (state.q, state.m) != (circuit.q, circuit.m):
        raise ValueError(f"circuit shape ({circuit.q}, {circuit.m}) does not match state ({state.q}, {state.m})")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    ex = Executor(state, rng)
    ex.run(circuit.ops)
    return ex.state, ex.record
