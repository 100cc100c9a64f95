"""Resource accounting: tallies of executed circuits and closed-form counts."""

from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass, field

from . import circuit as cc

COUNT_FIELDS = ("crs", "displacements", "beamsplitters", "ancilla_preps", "qubit_measurements",
                "ztilde", "homodyne", "photon", "probe_pulses", "qubit_gates")

SCHEMES = ("photon", "homodyne", "ft", "verification")

STAGES = ("cat", "htilde", "verify", "couple", "readout", "probe", "block", "disp", "detect",
          "correct", "parity", "teleport", "basis")

_INDEX = re.compile(r"-\d+$")


@dataclass
class ResourceTally:
    crs: int = 0
    displacements: int = 0
    beamsplitters: int = 0
    ancilla_preps: int = 0
    qubit_measurements: int = 0
    ztilde: int = 0
    homodyne: int = 0
    photon: int = 0
    probe_pulses: int = 0
    qubit_gates: int = 0
    breakdown: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for f in COUNT_FIELDS:
            v = getattr(self, f)
            if int(v) != v or v < 0:
                raise ValueError(f"{f} must be a nonnegative integer")

    def counts(self):
        return {f: getattr(self, f) for f in COUNT_FIELDS}

    def __add__(self, other):
        out = ResourceTally(**{f: getattr(self, f) + getattr(other, f) for f in COUNT_FIELDS})
        for src in (self.breakdown, other.breakdown):
            for k, v in src.items():
                out.breakdown[k] = out.breakdown.get(k, ResourceTally()) + v
        return out

    def __mul__(self, k):
        out = ResourceTally(**{f: getattr(self, f) * int(k) for f in COUNT_FIELDS})
        out.breakdown = {s: v * k for s, v in self.breakdown.items()}
        return out

    __rmul__ = __mul__

    def same_counts(self, other):
        return self.counts() == other.counts()

    def diff(self, other):
        """Fields where the counts differ, as ``{field: (self, other)}``."""
        return {f: (getattr(self, f), getattr(other, f)) for f in COUNT_FIELDS if getattr(self, f) != getattr(other, f)}

    def to_dict(self, breakdown=True):
        d = self.counts()
        if breakdown and self.breakdown:
            d["breakdown"] = {k: v.counts() for k, v in sorted(self.breakdown.items())}
        return d

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


def stage_of(label):
    for seg in label.split("/"):
        name = _INDEX.sub("", seg)
        if name in STAGES:
            return name
    return "other"


def _count(op, t):
    if isinstance(op, cc.CR):
        t.crs += 1
    elif isinstance(op, cc.Displace):
        t.displacements += 1
    elif isinstance(op, cc.Beamsplitter):
        t.beamsplitters += 1
    elif isinstance(op, cc.PrepareQubit):
        t.ancilla_preps += 1
    elif isinstance(op, cc.MeasureQubit):
        t.qubit_measurements += 1
    elif isinstance(op, cc.PrepareMode):
        t.probe_pulses += 1
    elif isinstance(op, cc.QubitGate):
        t.qubit_gates += 1
    elif isinstance(op, cc.MeasureMode):
        if isinstance(op.kind, cc.Ztilde):
            t.ztilde += 1
        elif isinstance(op.kind, cc.Homodyne):
            t.homodyne += 1
        else:
            t.photon += 1


def tally(circuit):
    """Exact op counts of a circuit or execution trace (injected fault ops excluded)."""
    ops = circuit.ops if isinstance(circuit, cc.Circuit) else list(circuit)
    total = ResourceTally()
    for op in ops:
        if op.label.endswith("/fault"):
            continue
        _count(op, total)
        stage = stage_of(op.label)
        _count(op, total.breakdown.setdefault(stage, ResourceTally()))
    return total


def expected(scheme, n, verify=False, repetitions=1, rounds=2):
    """Closed-form counts for measuring a weight-``n`` Pauli operator.

    ``photon``: ``n-1`` displacements and ``n^2-n`` CRs for even ``n``; ``n`` and
    ``n^2`` for odd ``n``. ``homodyne``: ``n+1`` displacements, ``n(n+2)`` CRs.
    ``ft`` (per repetition): ``3n+1`` CRs, ``n+1`` ancilla qubits, ``2n`` Z-tilde
    and ``n+1`` qubit measurements, optionally plus ``rounds`` verification
    rounds of ``n+1`` CRs, one ancilla qubit and ``n`` Z-tilde each.
    ``verification``: the verification overhead alone.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    bs = 1 if n > 1 else 0
    if scheme == "photon":
        even = n % 2 == 0
        return ResourceTally(crs=n * n - n if even else n * n, displacements=n - 1 if even else n,
                             probe_pulses=1, photon=1)
    if scheme == "homodyne":
        return ResourceTally(crs=n * (n + 2), displacements=n + 1, probe_pulses=1, homodyne=1)
    per_round = ResourceTally(crs=n + 1, ancilla_preps=1, qubit_measurements=1, ztilde=n,
                              beamsplitters=bs, probe_pulses=1)
    per_round.breakdown = {
        "verify": ResourceTally(crs=n + 1, ancilla_preps=1, qubit_measurements=1, ztilde=n,
                                beamsplitters=bs, probe_pulses=1),
    }
    if scheme == "verification":
        return per_round * rounds
    if scheme == "ft":
        base = ResourceTally(crs=3 * n + 1, ancilla_preps=n + 1, qubit_measurements=n + 1, ztilde=2 * n,
                             beamsplitters=bs, probe_pulses=n + 1, qubit_gates=n)
        base.breakdown = {
            "cat": ResourceTally(crs=1, ancilla_preps=1, qubit_measurements=1, beamsplitters=bs, probe_pulses=1),
            "htilde": ResourceTally(crs=2 * n, ancilla_preps=n, qubit_measurements=n, ztilde=n,
                                    probe_pulses=n, qubit_gates=n),
            "couple": ResourceTally(crs=n),
            "readout": ResourceTally(ztilde=n),
        }
        if verify:
            base = base + per_round * rounds
        return base * repetitions
    raise ValueError(f"unsupported scheme {scheme!r} (choose from {', '.join(SCHEMES)})")


def comparison_rows(results):
    """Flatten ``[(scheme, n, tally, expected)]`` into table rows."""
    rows = []
    for scheme, n, got, want in results:
        for f in COUNT_FIELDS:
            g, w = getattr(got, f), getattr(want, f)
            rows.append({"scheme": scheme, "n": n, "resource": f, "tally": g, "expected": w,
                         "status": "match" if g == w else "mismatch"})
    return rows


def rows_to_csv(rows):
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    return buf.getvalue()
