"""Syndrome-measurement protocols on the qubus.

Coherent-state logic: ``|alpha>`` is logical 0 and ``|alpha e^{i theta}>`` is
logical 1 of a bus mode. One-bit teleportations move a logical state between
a qubit and a bus mode; their measurement-dependent corrections go into a
:class:`~qubus_qec.pauli.PauliFrame` instead of being applied.

Fault-tolerant measurement of a weight-``n`` Z-type Pauli operator runs

1. cat preparation: a qubit in ``|+>`` is teleported onto ``|sqrt(n) alpha>``
   and an ``n``-port splitter spreads it into ``(|alpha>^n + |alpha e^{i theta}>^n)``;
2. H-tilde on every cat mode, split in two halves: bus-to-qubit teleports
   (the cat is now a qubit GHZ state), optional verification of that GHZ
   state, then ``H`` on each qubit and qubit-to-bus teleports;
3. transversal coupling ``CR(data_i, mode_i, -theta)``;
4. Z-tilde readout of every mode; the parity of the bits (corrected by the
   frame) is the measured eigenvalue.

Every protocol has an executor-level form (leading underscore, used by the
code layer so that one trace covers a whole syndrome round) and a public
state-in/state-out wrapper.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.stats import norm as _normal
from scipy.stats import poisson

from . import circuit as cc
from . import measurement as meas
from . import state as st
from .pauli import PauliFrame, PauliOperator
from .plans import detector_kind, plan_ops
from .resources import tally


class VerificationFailure(RuntimeError):
    """Every cat-state attempt was rejected by verification."""


# -- executor helpers ---------------------------------------------------------------------------


def _executor(state, rng, faults=None, loss_eta=1.0, label=""):
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    return cc.Executor(state, rng, faults=faults, loss_eta=loss_eta, label=label)


def _trim(ex, q0, m0):
    """Drop ancilla registers allocated past ``(q0, m0)``; they are all reset."""
    s = ex.state
    for md in range(s.m - 1, m0 - 1, -1):
        s = st.discard_mode(s, md)
    for qb in range(s.q - 1, q0 - 1, -1):
        s = st.discard_qubit(s, qb)
    return s


def _fresh_qubit(ex, frame, value, label):
    qb = ex.alloc_qubit()
    frame.pop(("q", qb))
    ex.apply(cc.PrepareQubit(qb, value, label))
    return qb


def _q2b(ex, qubit, mode, amp, theta, frame, label, leaked=False):
    """Qubit-to-bus teleport; ``amp`` (if given) re-prepares the mode first."""
    if amp is not None:
        frame.pop(("m", mode))
        ex.apply(cc.PrepareMode(mode, complex(amp), f"{label}/probe"))
    if leaked:
        # a leaked level does not drive the CR; its content is lost
        ex.apply(cc.CR(qubit, mode, theta, f"{label}/cr"), execute=False)
        if not ex.dry:
            _, ex.state = meas.measure_qubit(ex.state, qubit, "Z", ex.rng)
    else:
        ex.apply(cc.CR(qubit, mode, theta, f"{label}/cr"))
    bit = ex.apply(cc.MeasureQubit(qubit, "X", f"{label}/meas"))
    frame.transfer(("q", qubit), ("m", mode))
    if bit:
        frame.add(("m", mode), "Ztilde", label)
    return bit


def _b2q(ex, mode, qubit, alpha, theta, frame, label):
    """Bus-to-qubit teleport onto ``qubit`` (re-prepared in ``|+>``)."""
    frame.pop(("q", qubit))
    ex.apply(cc.PrepareQubit(qubit, "+", f"{label}/prep"))
    ex.apply(cc.CR(qubit, mode, -theta, f"{label}/cr"))
    bit = ex.apply(cc.MeasureMode(mode, cc.Ztilde(complex(alpha), theta, qubit), f"{label}/ztilde"))
    frame.transfer(("m", mode), ("q", qubit))
    if bit:
        frame.add(("q", qubit), "X", label)
    return bit


def _prepare_cat(ex, modes, alpha, theta, frame, label):
    n = len(modes)
    for md in modes:
        frame.pop(("m", md))
    cq = _fresh_qubit(ex, frame, "+", f"{label}/prep")
    _q2b(ex, cq, modes[0], math.sqrt(n) * alpha, theta, frame, label)
    ex.release_qubit(cq)
    if n > 1:
        ex.apply(cc.Beamsplitter(modes, st.symmetric_splitter(n), f"{label}/bs"))


def repetition_decode(bits):
    """Indices disagreeing with the majority; a tie flags every index."""
    bits = list(bits)
    ones = sum(bits)
    if 2 * ones == len(bits):
        return list(range(len(bits)))
    maj = int(2 * ones > len(bits))
    return [i for i, b in enumerate(bits) if b != maj]


def _verify_ghz(ex, ghz, alpha, theta, frame, label, rounds):
    """Check a qubit GHZ register against fresh coherent cats, ``rounds`` times."""
    flagged, readings = [], []
    for r in range(rounds):
        lab = f"{label}-{r}"
        vm = [ex.alloc_mode() for _ in ghz]
        _prepare_cat(ex, vm, alpha, theta, frame, f"{lab}/cat")
        for i, (qb, md) in enumerate(zip(ghz, vm)):
            ex.apply(cc.CR(qb, md, -theta, f"{lab}/cr-{i}"))
        bits = []
        for i, (qb, md) in enumerate(zip(ghz, vm)):
            b = ex.apply(cc.MeasureMode(md, cc.Ztilde(complex(alpha), theta, qb), f"{lab}/ztilde-{i}"))
            x, z = frame.pop(("m", md))
            if z:
                frame.add(("q", qb), "Z", lab)
            bits.append(int(b) ^ x ^ frame.get(("q", qb))[0])
            ex.release_mode(md)
        readings.append(bits)
        flagged.append(set(repetition_decode(bits)))
    persistent = sorted(set.intersection(*flagged)) if flagged else []
    return not persistent, {"readings": readings, "flags": [sorted(f) for f in flagged], "persistent": persistent}


def _verify_dual(ex, ghz, alpha, theta, frame, label, rounds):
    """Dual reading: measure the qubit GHZ register, keep the coupled coherent copy.

    Each round couples the register to a fresh cat, reads the register in the
    Z basis and re-aligns every kept mode by its own outcome, which returns the
    copy to an exact cat. The copy is teleported onto fresh qubits and checked
    by the next round. The input register is consumed in round 0, so its
    defects are the round-0 locations; any flag in any round rejects.
    """
    flagged, readings = [], []
    for r in range(rounds):
        lab = f"{label}-{r}"
        # pending X corrections must act physically before the register controls anything
        for i, qb in enumerate(ghz):
            x, z = frame.get(("q", qb))
            if x:
                ex.apply(cc.QubitGate("X", (qb,), f"{lab}/frame-{i}"))
                frame.set(("q", qb), 0, z)
        vm = [ex.alloc_mode() for _ in ghz]
        _prepare_cat(ex, vm, alpha, theta, frame, f"{lab}/cat")
        for i, (qb, md) in enumerate(zip(ghz, vm)):
            ex.apply(cc.CR(qb, md, -theta, f"{lab}/cr-{i}"))
        bits = []
        for i, qb in enumerate(ghz):
            bits.append(int(ex.apply(cc.MeasureQubit(qb, "Z", f"{lab}/meas-{i}"))))
            frame.pop(("q", qb))
            ex.release_qubit(qb)
        readings.append(bits)
        flagged.append(set(repetition_decode(bits)))
        for i, (b, md) in enumerate(zip(bits, vm)):
            if b:
                ex.apply(cc.Rotate(md, theta, f"{lab}/realign-{i}"))
        if r == rounds - 1:
            for md in vm:
                frame.pop(("m", md))
                ex.release_mode(md)
            break
        ghz = []
        for i, md in enumerate(vm):
            qb = ex.alloc_qubit()
            _b2q(ex, md, qb, alpha, theta, frame, f"{lab}/keep-{i}")
            ex.release_mode(md)
            ghz.append(qb)
    located = sorted(flagged[0])
    ok = not any(flagged)
    return ok, {"readings": readings, "flags": [sorted(f) for f in flagged], "persistent": located}


def _ft_round(ex, data, alpha, theta, frame, label, verify=False, rounds=2):
    n = len(data)
    main, ex = ex, ex.fork()
    modes = [ex.alloc_mode() for _ in data]
    _prepare_cat(ex, modes, alpha, theta, frame, f"{label}/cat")
    ghz = []
    for i, md in enumerate(modes):
        qb = ex.alloc_qubit()
        _b2q(ex, md, qb, alpha, theta, frame, f"{label}/htilde-{i}/in")
        ghz.append(qb)
    vinfo = None
    if verify:
        ok, vinfo = _verify_ghz(ex, ghz, alpha, theta, frame, f"{label}/verify", rounds)
        if not ok:
            # the rejected ancilla never touched the data; dropping the fork discards it
            for i, qb in enumerate(ghz):
                ex.apply(cc.MeasureQubit(qb, "Z", f"{label}/reject-{i}"))
                frame.pop(("q", qb))
                ex.release_qubit(qb)
            for md in modes:
                frame.pop(("m", md))
                ex.release_mode(md)
            return None, vinfo
    for i, qb in enumerate(ghz):
        ex.apply(cc.QubitGate("H", (qb,), f"{label}/htilde-{i}/h"))
        frame.conjugate(("q", qb), "H")
    for i, (qb, md) in enumerate(zip(ghz, modes)):
        _q2b(ex, qb, md, alpha, theta, frame, f"{label}/htilde-{i}/out")
        ex.release_qubit(qb)
    main.join(ex)
    ex = main
    for i, (dq, md) in enumerate(zip(data, modes)):
        ex.apply(cc.CR(dq, md, -theta, f"{label}/couple/cr-{i}"))
        x, z = frame.pop(("m", md))
        frame.set(("m", md), x, 0)
        if z:
            frame.add(("q", dq), "Z", f"{label}/couple")
    bits = []
    for i, (dq, md) in enumerate(zip(data, modes)):
        r = ex.apply(cc.MeasureMode(md, cc.Ztilde(complex(alpha), theta, dq), f"{label}/readout-{i}"))
        x, _ = frame.pop(("m", md))
        bits.append(int(r) ^ x)
        ex.release_mode(md)
    return (sum(bits) % 2, bits), vinfo


_TO_Z = {"X": ("H",), "Y": ("SDG", "H"), "Z": ()}
_FROM_Z = {"X": ("H",), "Y": ("H", "S"), "Z": ()}


def _basis_change(ex, pauli, qubits, frame, label, inverse=False):
    table = _FROM_Z if inverse else _TO_Z
    for i in pauli.support:
        for g in table[pauli.letters[i]]:
            ex.apply(cc.QubitGate(g, (qubits[i],), f"{label}/basis-{i}"))
            frame.conjugate(("q", qubits[i]), g)


def _sign_bit(pauli):
    ph = complex(pauli.phase)
    if ph not in (1, -1):
        raise ValueError("only Hermitian Pauli operators (phase +-1) can be measured")
    return int(ph == -1)


def _ft_measure(ex, pauli, qubits, alpha, theta, frame, label, repetitions=3, verify=False,
                rounds=2, max_attempts=5):
    """Executor-level fault-tolerant measurement; returns ``(bit, report)``."""
    if pauli.weight < 1:
        raise ValueError("Pauli operator must have weight >= 1")
    _basis_change(ex, pauli, qubits, frame, label)
    data = [qubits[i] for i in pauli.support]
    sign = _sign_bit(pauli)
    bits, raw, attempts, vinfos = [], [], [], []
    for r in range(repetitions):
        for attempt in range(max_attempts):
            lab = f"{label}/rep-{r}" + (f"/retry-{attempt}" if attempt else "")
            res, vinfo = _ft_round(ex, data, alpha, theta, frame, lab, verify, rounds)
            if vinfo is not None:
                vinfos.append(vinfo)
            if res is not None:
                break
        else:
            raise VerificationFailure(f"{label}: cat rejected {max_attempts} times")
        attempts.append(attempt + 1)
        parity, rb = res
        flip = sum(frame.get(("q", q))[0] for q in data) % 2
        bits.append(parity ^ flip ^ sign)
        raw.append(rb)
    _basis_change(ex, pauli, qubits, frame, label, inverse=True)
    majority = int(2 * sum(bits) > repetitions)
    return majority, {"bits": bits, "raw": raw, "attempts": attempts, "verification": vinfos}


# -- single-probe schemes -------------------------------------------------------------------------


def displacement_phases(plan):
    """Phase ``exp(i Phi(beta))`` picked up by a branch from the plan's displacements."""
    out = {}
    for b in plan.block.beta_values():
        m = np.exp(1j * b * plan.theta)
        g = complex(plan.alpha)
        phi = 0.0
        for kind, k in plan.schedule():
            if kind == "block":
                g *= m
            else:
                beta = plan.displacements[k]
                phi += (beta * g.conjugate()).imag
                g += beta
        out[b] = phi
    return out


def _log_likelihood(plan, points, outcome):
    pts = np.asarray(points, dtype=complex)
    if plan.scheme == "photon":
        lp = poisson.logpmf(int(outcome), np.abs(pts) ** 2)
    else:
        lp = _normal.logpdf(float(outcome), loc=2 * pts.real, scale=1.0)
    lp = lp[np.isfinite(lp)]
    if lp.size == 0:
        return -np.inf
    top = lp.max()
    return top + np.log(np.exp(lp - top).sum() / pts.size)


def parity_decision(plan, outcome):
    """ML parity from a detector outcome, with equal weight on each target point."""
    ev, od = plan.parity_points()
    return int(_log_likelihood(plan, od, outcome) > _log_likelihood(plan, ev, outcome))


def _outcome_phases(plan, outcome):
    """Per-``beta`` phases that make the collapse identical within a parity class."""
    refs = {0: plan.targets["even"][0], 1: plan.targets["odd"][0]}

    def arg(pt):
        if plan.scheme == "photon":
            return int(outcome) * float(np.angle(pt)) if pt != 0 else 0.0
        return float(np.angle(meas.homodyne_kernel(float(outcome), pt)))

    return {b: arg(refs[b % 2]) - arg(pt) for b, pt in plan.landing.items()}


def _probe_leak(state, mode, plan):
    pts = np.array([v for v in plan.landing.values()], dtype=complex)
    weight = np.sqrt((np.abs(state._c2()) ** 2).sum(axis=1))
    a = state.amps[weight > 1e-10, mode]
    if a.size == 0:
        return False
    d = np.min(np.abs(a[:, None] - pts[None, :]), axis=1)
    return bool(d.max() > 1e-6 * max(plan.alpha, 1.0))


def _single_probe(ex, plan, qubits, label):
    mode = ex.alloc_mode()
    ex.apply(cc.PrepareMode(mode, complex(plan.alpha), f"{label}/probe"))
    for op in plan_ops(plan, qubits, mode, label):
        ex.apply(op)
    geo = displacement_phases(plan)
    ex.apply(cc.AlternatingPhase(qubits, {b: -p for b, p in geo.items()}, f"{label}/correct"))
    leak = False if ex.dry else _probe_leak(ex.state, mode, plan)
    out = ex.apply(cc.MeasureMode(mode, detector_kind(plan), f"{label}/detect"))
    parity = parity_decision(plan, out)
    if not ex.dry:
        ex.apply(cc.AlternatingPhase(qubits, _outcome_phases(plan, out), f"{label}/correct"))
    ex.release_mode(mode)
    return parity, leak, out


def _single_probe_measure(ex, pauli, qubits, plan, frame, label):
    if plan.n != pauli.weight:
        raise ValueError(f"plan is for n={plan.n} but the operator has weight {pauli.weight}")
    _basis_change(ex, pauli, qubits, frame, label)
    data = [qubits[i] for i in pauli.support]
    parity, leak, out = _single_probe(ex, plan, data, label)
    flip = sum(frame.get(("q", q))[0] for q in data) % 2
    _basis_change(ex, pauli, qubits, frame, label, inverse=True)
    return parity ^ flip ^ _sign_bit(pauli), {"outcome": out, "leakage": leak}


def run_parity_measurement(state, plan, detector=None, rng=None, qubits=None, label="scheme",
                           faults=None, loss_eta=1.0):
    """Run a single-probe plan on ``qubits`` (default ``0..n-1``) with a fresh probe.

    Returns ``(parity, collapsed_state, leakage_flag)``; the probe mode is
    removed again afterwards.
    """
    if detector is not None and detector != plan.scheme:
        raise ValueError(f"plan was solved for {plan.scheme} detection, not {detector}")
    qubits = list(range(plan.n)) if qubits is None else list(qubits)
    ex = _executor(state, rng, faults, loss_eta, label=label)
    q0, m0 = state.q, state.m
    parity, leak, _ = _single_probe(ex, plan, qubits, label)
    return parity, _trim(ex, q0, m0), leak


def scheme_tally(scheme, n, theta=math.pi / 3, alpha=12.0, verify=False, repetitions=1, rounds=2,
                 r3=None):
    """Resource tally of one constructed measurement of a weight-``n`` operator.

    ``scheme`` is ``photon`` / ``homodyne`` (solved single-probe plan), ``ft``
    or ``verification`` (the verification rounds alone). Built by a dry run,
    so no state is simulated.
    """
    from . import plans

    ex = cc.Executor(None, q=n)
    if scheme in ("photon", "homodyne"):
        th = min(theta, 0.1)
        plan = (plans.solve_photon_plan(n, th, alpha) if scheme == "photon"
                else plans.solve_homodyne_plan(n, th, alpha, r3 or plans.DEFAULT_R3))
        _single_probe(ex, plan, list(range(n)), "scheme")
        return tally(ex.trace)
    if scheme == "ft":
        _ft_measure(ex, PauliOperator("Z" * n), list(range(n)), alpha, theta, PauliFrame(), "ft",
                    repetitions, verify, rounds)
        return tally(ex.trace)
    if scheme == "verification":
        ghz = [ex.alloc_qubit() for _ in range(n)]
        _verify_ghz(ex, ghz, alpha, theta, PauliFrame(), "verify", rounds)
        return tally(ex.trace)
    raise ValueError(f"unknown scheme {scheme!r}")


# -- public wrappers ------------------------------------------------------------------------------


def _frame(frame):
    return PauliFrame() if frame is None else frame


def teleport_qubit_to_bus(state, qubit, mode, theta, frame=None, rng=None):
    """CR from ``qubit`` onto the (already prepared) ``mode``, then X-measure the qubit.

    The qubit is left reset in ``|0>``. Returns ``(state, frame)``.
    """
    frame = _frame(frame)
    ex = _executor(state, rng)
    _q2b(ex, qubit, mode, None, theta, frame, "teleport")
    return ex.state, frame


def teleport_bus_to_qubit(state, mode, qubit, theta, alpha, frame=None, rng=None):
    """Prepare ``qubit`` in ``|+>``, apply ``CR(-theta)`` and Z-tilde-measure ``mode``.

    The mode is left in vacuum. Returns ``(state, frame)``.
    """
    frame = _frame(frame)
    ex = _executor(state, rng)
    _b2q(ex, mode, qubit, alpha, theta, frame, "teleport")
    return ex.state, frame


def empty_state():
    return st.HybridPureState(0, 0, np.zeros((1, 0)), np.zeros((1, 0)), [1.0])


def prepare_cat(n, alpha, theta, frame=None, rng=None):
    """``(|alpha>^n + |alpha e^{i theta}>^n)/norm`` up to a frame-tracked Z-tilde.

    The returned state has the consumed qubit (reset, index 0) and ``n`` modes.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    frame = _frame(frame)
    ex = _executor(empty_state(), rng)
    modes = [ex.alloc_mode() for _ in range(n)]
    _prepare_cat(ex, modes, alpha, theta, frame, "cat")
    return ex.state, frame


def htilde(state, mode, theta, alpha, frame=None, rng=None):
    """Approximate Hadamard on the coherent-logic mode via a qubit round trip."""
    frame = _frame(frame)
    ex = _executor(state, rng)
    q0, m0 = state.q, state.m
    qb = ex.alloc_qubit()
    _b2q(ex, mode, qb, alpha, theta, frame, "htilde/in")
    ex.apply(cc.QubitGate("H", (qb,), "htilde/h"))
    frame.conjugate(("q", qb), "H")
    _q2b(ex, qb, mode, alpha, theta, frame, "htilde/out")
    return _trim(ex, q0, m0), frame


def verify_cat(state, alpha, theta, rounds=2, rng=None, modes=None, frame=None, reading="ghz"):
    """Verify an ``n``-mode coherent cat.

    The cat modes are teleported onto qubits (forming a qubit GHZ register),
    which then control ``CR(-theta)`` onto ``rounds`` fresh ancillary cats whose
    modes are Z-tilde measured. Repetition decoding of each round's bits
    locates X-like defects; locations flagged in every round are reported.
    ``reading="dual"`` instead measures the qubit register and keeps the
    coherent copy (see :func:`_verify_dual`).

    Returns ``(accept, locations, tally)`` where ``tally`` is the verification
    overhead alone.
    """
    if reading not in ("ghz", "dual"):
        raise ValueError(f"unknown reading {reading!r}; use 'ghz' or 'dual'")
    frame = _frame(frame)
    modes = list(range(state.m)) if modes is None else list(modes)
    if len(modes) < 2:
        raise ValueError("verification needs n >= 2")
    ex = _executor(state, rng)
    ghz = []
    for i, md in enumerate(modes):
        qb = ex.alloc_qubit()
        _b2q(ex, md, qb, alpha, theta, frame, f"input/teleport-{i}")
        ghz.append(qb)
    check = _verify_ghz if reading == "ghz" else _verify_dual
    ok, info = check(ex, ghz, alpha, theta, frame, "verify", rounds)
    t = tally(ex.trace).breakdown.get("verify")
    return ok, info["persistent"], t


def ft_measure_pauli(state, pauli, alpha, theta, repetitions=3, verify=False, rng=None, qubits=None,
                     frame=None, rounds=2, faults=None, loss_eta=1.0, label="ft"):
    """Fault-tolerant measurement of ``pauli`` on ``qubits`` (default all).

    Returns ``(bit, state, report)``; ``report`` holds the per-repetition
    bits, the resource tally of the executed trace, the frame, and leakage
    flags. Ancilla registers are removed from the returned state; pending data
    corrections stay in ``report["frame"]``.
    """
    if isinstance(pauli, str):
        pauli = PauliOperator.from_string(pauli)
    qubits = list(range(pauli.n)) if qubits is None else list(qubits)
    frame = _frame(frame)
    ex = _executor(state, rng, faults, loss_eta, label)
    q0, m0 = state.q, state.m
    bit, rep = _ft_measure(ex, pauli, qubits, alpha, theta, frame, label, repetitions, verify, rounds)
    rep.update(tally=tally(ex.trace), frame=frame, leakage=list(ex.leakage), trace=ex.trace)
    return bit, _trim(ex, q0, m0), rep


def leakage_reduction(state, qubit, theta, alpha, frame=None, rng=None, leaked=False):
    """Teleport ``qubit`` to a fresh bus mode and back onto the same (reset) index.

    ``leaked=True`` models an input that left the computational space: it
    does not drive the CR and its content is lost, but the output is always a
    computational-basis qubit carrying at most a Pauli-frame error.
    """
    frame = _frame(frame)
    ex = _executor(state, rng)
    q0, m0 = state.q, state.m
    md = ex.alloc_mode()
    _q2b(ex, qubit, md, alpha, theta, frame, "lru/out", leaked=leaked)
    _b2q(ex, md, qubit, alpha, theta, frame, "lru/in")
    return _trim(ex, q0, m0), frame


def fold_frame(state, frame, qubits):
    """Apply and clear the pending frame corrections of ``qubits``."""
    for q in qubits:
        x, z = frame.pop(("q", q))
        if x:
            state = st.apply_qubit_gate(state, "X", q)
        if z:
            state = st.apply_qubit_gate(state, "Z", q)
    return state


# -- fault containment ----------------------------------------------------------------------------


def choi_state(n):
    """Data qubits ``0..n-1`` maximally entangled with reference qubits ``n..2n-1``."""
    dim = 1 << n
    vec = np.zeros(dim * dim, dtype=complex)
    vec[np.arange(dim) * dim + np.arange(dim)] = 1 / math.sqrt(dim)
    return st.HybridPureState.from_qubit_vector(vec, [])


def error_weight_distribution(state, n, stabilizer):
    """Probability of each data-error weight in a Choi-type output state.

    The output is expanded in the basis ``(P x I)|Phi>`` over Pauli errors
    ``P`` on the ``n`` data qubits. Errors that differ by the measured
    ``stabilizer`` act identically after the measurement, so each pair
    counts with its smaller weight. Returns ``{weight: probability}``.
    """
    stab = stabilizer if isinstance(stabilizer, PauliOperator) else PauliOperator.from_string(stabilizer)
    if stab.n != n:
        raise ValueError("stabilizer must act on the n data qubits")
    F = st.dense_factor(state)
    F = F / math.sqrt(float(np.sum(np.abs(F) ** 2)))
    phi = st.dense_factor(choi_state(n))[:, 0]
    pad = "I" * n
    out = {}
    seen = set()
    for letters in itertools.product("IXYZ", repeat=n):
        P = PauliOperator("".join(letters))
        if P.letters in seen:
            continue
        Q = P * stab
        seen.update((P.letters, Q.letters))
        w = 0.0
        for op in {P.letters, Q.letters}:
            b = PauliOperator(op + pad).apply_vector(phi)
            w += float(np.sum(np.abs(b.conj() @ F) ** 2))
        k = min(P.weight, Q.weight)
        out[k] = out.get(k, 0.0) + w
    return dict(sorted(out.items()))


def probe_fault_sites(trace):
    """``(label, mode)`` pairs for every non-measurement op acting on a bus mode."""
    sites = []
    for op in trace.ops:
        if isinstance(op, cc.MeasureMode) or op.label.endswith("/fault"):
            continue
        for md in cc.op_modes(op):
            sites.append((op.label, md))
    return sites


def standard_faults(alpha, theta):
    """One representative of each probe fault kind, scaled to the probe."""
    from .noise import Fault

    return {
        "phase_kick": lambda md: Fault("phase_kick", mode=md, phi=theta / 2),
        "loss": lambda md: Fault("loss", mode=md, eta=0.9),
        "xtilde": lambda md: Fault("xtilde", mode=md, alpha=alpha, theta=theta),
    }


def fault_containment(scheme, n, alpha, theta, seeds=(0,), kinds=None, plan=None, verify=False):
    """Largest weight->=2 data-error probability for single probe faults.

    ``scheme`` is ``"single-probe"`` (needs ``plan``) or ``"ft"``. Every probe
    location of one measurement of ``Z^n`` gets each fault kind in turn; the
    data qubits start maximally entangled with a reference. Returns
    ``{(label, mode, kind): p(weight >= 2)}`` maximized over ``seeds``.
    """
    stab = "Z" * n
    psi = choi_state(n)
    if scheme == "single-probe":
        if plan is None or plan.n != n:
            raise ValueError("single-probe analysis needs a plan for n qubits")
        ex = cc.Executor(None, q=2 * n)
        _single_probe(ex, plan, list(range(n)), "scheme")
    elif scheme == "ft":
        ex = cc.Executor(None, q=2 * n)
        _ft_measure(ex, PauliOperator(stab + "I" * n), list(range(2 * n)), alpha, theta, PauliFrame(), "ft",
                    repetitions=1, verify=verify)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    makers = standard_faults(alpha, theta)
    kinds = list(makers) if kinds is None else list(kinds)
    results = {}
    for label, md in probe_fault_sites(ex.trace):
        for kind in kinds:
            faults = {label: [makers[kind](md)]}
            worst = 0.0
            for seed in seeds:
                if scheme == "single-probe":
                    _, out, _ = run_parity_measurement(psi, plan, rng=seed, faults=faults)
                else:
                    try:
                        _, out, rep = ft_measure_pauli(psi, stab + "I" * n, alpha, theta, repetitions=1,
                                                       rng=seed, faults=faults, verify=verify)
                    except VerificationFailure:
                        continue
                    out = fold_frame(out, rep["frame"], range(2 * n))
                dist = error_weight_distribution(out, n, stab)
                worst = max(worst, sum(p for k, p in dist.items() if k >= 2))
            results[(label, md, kind)] = worst
    return results
