"""Stabilizer codes, syndrome extraction over every scheme, lookup decoding."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import circuit as cc
from . import measurement as meas
from . import plans
from . import protocols as proto
from . import state as st
from .noise import NoiseConfig
from .pauli import PauliFrame, PauliOperator
from .resources import tally

SCHEMES = ("single-probe-photon", "single-probe-homodyne", "fault-tolerant")
SCHEME_ALIASES = {"photon": "single-probe-photon", "homodyne": "single-probe-homodyne", "ft": "fault-tolerant"}


class HeraldedFailure(RuntimeError):
    """Syndrome outside the decoder table (more errors than the code corrects)."""

    def __init__(self, syndrome):
        super().__init__(f"syndrome {tuple(syndrome)} is not in the decoder table")
        self.syndrome = tuple(syndrome)


def _pauli(p):
    return p if isinstance(p, PauliOperator) else PauliOperator.from_string(p)


@dataclass(frozen=True)
class StabilizerCode:
    name: str
    n: int
    k: int
    generators: tuple
    logical_x: tuple
    logical_z: tuple
    table: dict = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        gens = tuple(_pauli(g) for g in self.generators)
        lx = tuple(_pauli(g) for g in self.logical_x)
        lz = tuple(_pauli(g) for g in self.logical_z)
        object.__setattr__(self, "generators", gens)
        object.__setattr__(self, "logical_x", lx)
        object.__setattr__(self, "logical_z", lz)
        for p in gens + lx + lz:
            if p.n != self.n:
                raise ValueError(f"{p} does not act on {self.n} qubits")
        if any(g.weight < 1 for g in gens):
            raise ValueError("generators must have weight >= 1")
        for a, b in itertools.combinations(gens, 2):
            if not a.commutes(b):
                raise ValueError(f"generators {a} and {b} anticommute")
        if len(lx) != self.k or len(lz) != self.k:
            raise ValueError("need k logical X and k logical Z operators")
        for L in lx + lz:
            if not all(L.commutes(g) for g in gens):
                raise ValueError(f"logical {L} does not commute with the stabilizer")
        if self.table is None:
            object.__setattr__(self, "table", self._build_table())

    @property
    def is_css(self):
        return all(set(g.letters) <= {"I", "X"} or set(g.letters) <= {"I", "Z"} for g in self.generators)

    def syndrome_of(self, error):
        error = _pauli(error)
        return tuple(0 if g.commutes(error) else 1 for g in self.generators)

    def _build_table(self):
        table = {}
        for q in range(self.n):
            for L in "XZY":
                e = PauliOperator.single(self.n, q, L)
                s = self.syndrome_of(e)
                if any(s):
                    table.setdefault(s, e)
        return table

    def to_dict(self):
        return {
            "name": self.name, "n": self.n, "k": self.k,
            "generators": [str(g) for g in self.generators],
            "logicals": {"x": [str(p) for p in self.logical_x], "z": [str(p) for p in self.logical_z]},
        }

    @classmethod
    def from_dict(cls, d):
        for key in ("name", "n", "k", "generators", "logicals"):
            if key not in d:
                raise ValueError(f"code description lacks {key!r}")
        return cls(str(d["name"]), int(d["n"]), int(d["k"]), tuple(d["generators"]),
                   tuple(d["logicals"]["x"]), tuple(d["logicals"]["z"]))

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def load_code(path_or_name):
    """A built-in code by name, or a code description file."""
    codes = builtin_codes()
    if path_or_name in codes:
        return codes[path_or_name]
    with open(path_or_name) as fh:
        return StabilizerCode.from_json(fh.read())


def _steane():
    supports = ((3, 4, 5, 6), (1, 2, 5, 6), (0, 2, 4, 6))
    gens = []
    for L in "XZ":
        for sup in supports:
            gens.append("".join(L if i in sup else "I" for i in range(7)))
    return StabilizerCode("steane7", 7, 1, tuple(gens), ("X" * 7,), ("Z" * 7,))


def _shor():
    gens = []
    for b in range(3):
        for j in range(2):
            s = ["I"] * 9
            s[3 * b + j] = s[3 * b + j + 1] = "Z"
            gens.append("".join(s))
    gens += ["XXXXXXIII", "IIIXXXXXX"]
    return StabilizerCode("shor9", 9, 1, tuple(gens), ("Z" * 9,), ("X" * 9,))


def builtin_codes():
    return {
        "bitflip3": StabilizerCode("bitflip3", 3, 1, ("ZZI", "IZZ"), ("XXX",), ("ZII",)),
        "shor9": _shor(),
        "steane7": _steane(),
    }


# -- dense helpers (also the oracle used by the tests) ------------------------------------------


def apply_pauli_vector(p, vec):
    """Apply a Pauli operator to a dense big-endian qubit vector."""
    return _pauli(p).apply_vector(vec)


def _project(code, vec, extra=()):
    for g in tuple(code.generators) + tuple(extra):
        vec = 0.5 * (vec + apply_pauli_vector(g, vec))
    return vec


def logical_basis(code):
    """Dense logical basis vectors ``|j_L>`` for ``j`` in ``0 .. 2^k - 1``."""
    dim = 1 << code.n
    seed = np.zeros(dim, dtype=complex)
    seed[0] = 1
    zero = _project(code, seed, code.logical_z)
    if np.linalg.norm(zero) < 1e-9:
        seed = np.random.default_rng(0).normal(size=dim).astype(complex)
        zero = _project(code, seed, code.logical_z)
    zero /= np.linalg.norm(zero)
    out = []
    for j in range(1 << code.k):
        v = zero
        for i in range(code.k):
            if (j >> (code.k - 1 - i)) & 1:
                v = apply_pauli_vector(code.logical_x[i], v)
        out.append(v)
    return out


def encode_vector(code, coeffs):
    coeffs = np.asarray(coeffs, dtype=complex).reshape(-1)
    if coeffs.size != 1 << code.k:
        raise ValueError(f"need {1 << code.k} logical amplitudes")
    coeffs = coeffs / np.linalg.norm(coeffs)
    return sum(c * v for c, v in zip(coeffs, logical_basis(code)))


def encode(code, coeffs):
    """Encoded state carrying the logical amplitudes ``coeffs`` (qubits only)."""
    return st.HybridPureState.from_qubit_vector(encode_vector(code, coeffs), [])


def state_fidelity(reference_vec, state):
    """``<ref| rho |ref>`` for a qubit-only pure or mixed branch state."""
    if state.m:
        raise ValueError("state still has bus modes")
    w = 1 << (state.q - 1 - np.arange(state.q))
    idx = state.bits.astype(np.int64) @ w if state.q else np.zeros(state.n_branches, dtype=np.int64)
    r = np.asarray(reference_vec)[idx].conj()
    F = state._c2()
    amp = r @ F
    tr = float(np.sum(np.abs(F) ** 2))
    return float(np.sum(np.abs(amp) ** 2) / tr)


# -- syndrome extraction ------------------------------------------------------------------------


@dataclass
class SchemeParams:
    """Probe settings for syndrome extraction."""

    alpha: float = 12.0
    theta: float = math.pi / 3
    r3: float = plans.DEFAULT_R3
    repetitions: int = 3
    verify: bool = False
    rounds: int = 2
    max_attempts: int = 5

    def __post_init__(self):
        if self.alpha <= 0 or not 0 < self.theta < math.pi:
            raise ValueError("need alpha > 0 and 0 < theta < pi")
        if self.repetitions < 1 or self.rounds < 1:
            raise ValueError("repetitions and rounds must be >= 1")


@dataclass
class Syndrome:
    bits: tuple
    repetitions: list = field(default_factory=list)
    leakage: list = field(default_factory=list)
    verification_failed: list = field(default_factory=list)

    def __len__(self):
        return len(self.bits)

    @property
    def flagged(self):
        return any(self.leakage) or any(self.verification_failed)

    def to_dict(self):
        return {"bits": list(self.bits), "repetitions": self.repetitions, "leakage": self.leakage,
                "verification_failed": self.verification_failed}


def normalize_scheme(scheme):
    scheme = SCHEME_ALIASES.get(scheme, scheme)
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; choose from {', '.join(SCHEMES)}")
    return scheme


_PLAN_CACHE = {}


def _plan(kind, n, params):
    key = (kind, n, params.theta, params.alpha, params.r3)
    if key not in _PLAN_CACHE:
        if kind == "photon":
            _PLAN_CACHE[key] = plans.solve_photon_plan(n, params.theta, params.alpha)
        else:
            _PLAN_CACHE[key] = plans.solve_homodyne_plan(n, params.theta, params.alpha, params.r3)
    return _PLAN_CACHE[key]


def _extract(ex, code, scheme, params, frame, data):
    bits, reps, leak, vfail = [], [], [], []
    for j, g in enumerate(code.generators):
        label = f"g{j}"
        if scheme == "fault-tolerant":
            n_leak = len(ex.leakage)
            try:
                b, rep = proto._ft_measure(ex, g, data, params.alpha, params.theta, frame, f"{label}/ft",
                                           params.repetitions, params.verify, params.rounds, params.max_attempts)
                reps.append(rep["bits"])
                vfail.append(False)
            except proto.VerificationFailure:
                b = 0
                reps.append([])
                vfail.append(True)
            leak.append(len(ex.leakage) > n_leak)
        else:
            kind = "photon" if scheme == "single-probe-photon" else "homodyne"
            plan = _plan(kind, g.weight, params)
            b, rep = proto._single_probe_measure(ex, g, data, plan, frame, f"{label}/scheme")
            reps.append([b])
            leak.append(rep["leakage"])
            vfail.append(False)
        bits.append(int(b))
    return Syndrome(tuple(bits), reps, leak, vfail)


def extract_syndrome(state, code, scheme="fault-tolerant", params=None, rng=None, noise=None,
                     return_trace=False):
    """Measure every generator of ``code`` on ``state`` with ``scheme``.

    Returns ``(Syndrome, state, tally)``. Ancillas are removed from the
    returned state and any pending data-qubit frame corrections are folded
    into it, so it can be compared with a reference directly.
    """
    scheme = normalize_scheme(scheme)
    params = params or SchemeParams()
    noise = noise or NoiseConfig()
    if state.q != code.n:
        raise ValueError(f"state has {state.q} qubits, code {code.name} needs {code.n}")
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    ex = cc.Executor(state, rng, faults=noise.inject, loss_eta=noise.eta, label=f"{code.name}/{scheme}",
                     ancilla_pauli=noise.pauli.get("ancilla"))
    frame = PauliFrame()
    data = list(range(code.n))
    q0, m0 = state.q, state.m
    syn = _extract(ex, code, scheme, params, frame, data)
    out = proto.fold_frame(proto._trim(ex, q0, m0), frame, data)
    t = tally(ex.trace)
    if return_trace:
        return syn, out, t, ex
    return syn, out, t


def decode(code, syndrome):
    """Lookup-table correction for ``syndrome``; identity for the zero syndrome.

    CSS codes decode their X-type and Z-type halves separately, so a Y error
    shows up as one hit in each half. Raises :class:`HeraldedFailure` for
    syndromes outside the table.
    """
    bits = tuple(int(b) for b in (syndrome.bits if isinstance(syndrome, Syndrome) else syndrome))
    if len(bits) != len(code.generators):
        raise ValueError(f"syndrome has {len(bits)} bits, code has {len(code.generators)} generators")
    if not any(bits):
        return PauliOperator.identity(code.n)
    if code.is_css:
        x_part = tuple(b if set(g.letters) <= {"I", "Z"} else 0 for b, g in zip(bits, code.generators))
        z_part = tuple(b if set(g.letters) <= {"I", "X"} else 0 for b, g in zip(bits, code.generators))
        corr = PauliOperator.identity(code.n)
        for part in (x_part, z_part):
            if any(part):
                if part not in code.table:
                    raise HeraldedFailure(bits)
                corr = corr * code.table[part]
        return PauliOperator(corr.letters, 1)
    if bits not in code.table:
        raise HeraldedFailure(bits)
    return code.table[bits]


def apply_pauli(state, pauli):
    pauli = _pauli(pauli)
    for q in pauli.support:
        state = st.apply_qubit_gate(state, pauli.letters[q], q)
    return state


def qec_cycle(state, code, scheme="fault-tolerant", noise=None, params=None, rng=None, reference=None):
    """Noise, syndrome extraction, decoding and correction for one round.

    ``reference`` is the ideal encoded vector (default: ``state`` itself,
    which must then be qubit-only and noiseless). Returns ``(state, report)``.
    """
    noise = noise or NoiseConfig()
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    if reference is None:
        reference = state.qubit_vector()
    for q, letter in noise.data_errors:
        if letter != "I":
            state = st.apply_qubit_gate(state, letter, q)
    rates = noise.pauli.get("data")
    if rates and sum(rates) > 0:
        from .noise import apply_pauli_noise

        for q in range(code.n):
            state = apply_pauli_noise(state, q, rates, rng)
    syn, state, t = extract_syndrome(state, code, scheme, params, rng, noise)
    heralded = False
    try:
        corr = decode(code, syn)
        state = apply_pauli(state, corr)
    except HeraldedFailure:
        corr = None
        heralded = True
    report = {
        "syndrome": list(syn.bits),
        "repetitions": syn.repetitions,
        "leakage": syn.leakage,
        "verification_failed": syn.verification_failed,
        "correction": None if corr is None else str(corr),
        "heralded_failure": heralded,
        "fidelity": state_fidelity(reference, state),
        "tally": t.to_dict(breakdown=False),
    }
    return state, report


def dense_syndrome(code, vec):
    """Noiseless projective syndrome of an eigenstate (dense oracle); ``None`` if not an eigenstate."""
    bits = []
    for g in code.generators:
        ev = np.vdot(vec, apply_pauli_vector(g, vec)).real
        if abs(abs(ev) - 1) > 1e-9:
            return None
        bits.append(int(ev < 0))
    return tuple(bits)


# -- three-qubit bit-flip code with phase-resolving probes ----------------------------------------


def bitflip_probe_phases(state, theta, alpha=1.0):
    """Two parity gates, probe 0 on qubits (0, 1) and probe 1 on (2, 1).

    Returns ``(probe_state, phases)`` with ``phases[bits] = (m, n)`` the probe
    rotations in units of ``theta``, read off the branch amplitudes.
    """
    if state.q != 3:
        raise ValueError("the bit-flip code has three qubits")
    s, m0 = st.add_mode(state, alpha)
    s, m1 = st.add_mode(s, alpha)
    for op in (plans.build_parity_gate(0, 1, m0, theta, "probe-0").ops
               + plans.build_parity_gate(2, 1, m1, theta, "probe-1").ops):
        s = st.apply_cr(s, op.qubit, op.mode, op.theta)
    phases = {}
    for bits, amps in zip(s.bits, s.amps):
        ph = np.angle(amps[[m0, m1]] / alpha) / theta
        phases[tuple(int(b) for b in bits)] = tuple(int(round(v)) for v in ph)
    return s, phases


def bitflip_location(m, n):
    """Flipped qubit from the probe phase pair ``(m, n)``; ``None`` if no error."""
    if (m, n) == (0, 0):
        return None
    if n == 0:
        return 0
    if m == 0:
        return 2
    if m == n:
        return 1
    raise HeraldedFailure((m, n))


def bitflip_phase_syndrome(state, theta, alpha, rng=None):
    """Measure both probe phases with p-quadrature homodyne; returns ``((m, n), state)``."""
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    s, _ = bitflip_probe_phases(state, theta, alpha)
    out = []
    centers = {k: 2 * alpha * math.sin(k * theta) for k in (-1, 0, 1)}
    for _ in range(2):
        # discarding the first probe shifts the second one into its index
        x, s = meas.homodyne_measure(s, state.m, math.pi / 2, rng, discard=True)
        out.append(min(centers, key=lambda k: abs(x - centers[k])))
    return tuple(out), s
