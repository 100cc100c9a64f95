"""Bus-mode and qubit measurements: sampling, collapse, and ML error rates.

Homodyne convention: measuring quadrature angle ``phi`` on ``|a>`` gives
``x ~ Normal(2 Re(a e^{-i phi}), 1)``. The collapse kernel is

``K(x, a) = (2 pi)^{-1/4} exp(-(x - 2 a_r)^2 / 4 + i a_i (x - a_r))``

with ``a = a_r + i a_i`` already rotated by ``e^{-i phi}``; it satisfies
``int conj(K(x, a)) K(x, b) dx = <a|b>``.

Measured modes are reset to vacuum and measured qubits to ``|0>`` by default,
so register indices stay stable; pass ``discard=True`` to remove them.
Every function accepts pure and mixed branch states.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, ndtr

from . import kernels
from .state import (
    group_branches,
    _check_mode,
    _check_qubit,
    apply_qubit_gate,
    merge_branches,
)

PHOTON_TAIL_TOL = 1e-10
LEAK_TOL = 1e-3
_LEAK_WEIGHT = 1e-10
_MAX_PHOTON_CUTOFF = 5_000_000


# -- kernels --------------------------------------------------------------------------


def homodyne_kernel(x, a):
    """``K(x, a)`` for x-quadrature homodyne (broadcasts)."""
    x = np.asarray(x, dtype=float)
    a = np.asarray(a, dtype=complex)
    ar, ai = a.real, a.imag
    return (2 * np.pi) ** -0.25 * np.exp(-((x - 2 * ar) ** 2) / 4 + 1j * ai * (x - ar))


def fock_amplitude(n, a):
    """``<n|a> = e^{-|a|^2/2} a^n / sqrt(n!)`` evaluated in log space (broadcasts)."""
    n = np.asarray(n)
    a = np.asarray(a, dtype=complex)
    with np.errstate(divide="ignore", invalid="ignore"):
        loga = np.log(np.where(a == 0, 1.0, a))
        logv = -0.5 * np.abs(a) ** 2 + n * loga - 0.5 * gammaln(n + 1.0)
        out = np.exp(logv)
    zero = np.broadcast_to(a == 0, out.shape)
    return np.where(zero, (np.broadcast_to(n, out.shape) == 0).astype(complex), out)


def _mode_groups(state, mode, rotation=1.0):
    amps = state.amps[:, mode] * rotation
    if amps.size == 0:
        return amps, np.zeros(0, dtype=np.int64)
    first, inv = group_branches(np.zeros((amps.size, 0), dtype=np.uint8), amps[:, None], state.merge_tol)
    return amps[first], inv


def _reduced(state, mode, rotation=1.0):
    uniq, groups = _mode_groups(state, mode, rotation)
    M = kernels.gram_reduce(state.keys(), state.amps, state._c2(), groups, uniq.size, skip=mode)
    return uniq, groups, 0.5 * (M + M.conj().T)


def _quadratic(M, F):
    return np.real(np.sum(F.conj() * (M @ F), axis=0))


def _finish(state, mode, c2, discard, norm_squared=None):
    amps = state.amps.copy()
    amps[:, mode] = 0.0
    out = merge_branches(state._new(state.bits, amps, c2))
    if discard:
        out = out._new(out.bits, np.delete(out.amps, mode, axis=1), out._c2(), m=out.m - 1)
    return out.normalized(norm_squared)


# -- homodyne -------------------------------------------------------------------------


def homodyne_pdf(state, mode, angle, x):
    """Outcome density ``p(x)`` (normalized by the state norm)."""
    _check_mode(state, mode)
    uniq, _, M = _reduced(state, mode, np.exp(-1j * angle))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    F = homodyne_kernel(x[None, :], uniq[:, None])
    return _quadratic(M, F) / state.norm_squared()


def _sample_homodyne(uniq, M, rng, batch=64):
    lam = float(np.linalg.eigvalsh(M)[-1])
    if lam <= 0:
        raise ValueError("state has zero norm")
    means = 2 * uniq.real
    G = uniq.size
    while True:
        u = rng.integers(0, G, size=batch)
        xs = means[u] + rng.standard_normal(batch)
        F = homodyne_kernel(xs[None, :], uniq[:, None])
        p = _quadratic(M, F)
        env = lam * np.sum(np.exp(-0.5 * (xs[None, :] - means[:, None]) ** 2), axis=0) / np.sqrt(2 * np.pi)
        ok = rng.random(batch) * env <= p
        if ok.any():
            return float(xs[np.argmax(ok)])


def homodyne_collapse(state, mode, angle, x, discard=False, norm_squared=None):
    """Project ``mode`` onto quadrature eigenvalue ``x`` and renormalize."""
    rot = np.exp(-1j * angle)
    k = homodyne_kernel(x, state.amps[:, mode] * rot)
    return _finish(state, mode, state._c2() * k[:, None], discard, norm_squared)


def homodyne_measure(state, mode, angle, rng, discard=False):
    """Sample a homodyne outcome on ``mode``; returns ``(x, collapsed_state)``."""
    _check_mode(state, mode)
    rot = np.exp(-1j * angle)
    uniq, _, M = _reduced(state, mode, rot)
    x = _sample_homodyne(uniq, M, rng)
    # the collapsed (unnormalized) norm is the unnormalized density at x
    p = float(_quadratic(M, homodyne_kernel(np.array([x]), uniq)[:, None])[0])
    return x, homodyne_collapse(state, mode, angle, x, discard, p if p > 0 else None)


# -- photon counting -------------------------------------------------------------------


def photon_cutoff(amps):
    mu = float(np.max(np.abs(np.asarray(amps)) ** 2)) if np.size(amps) else 0.0
    return int(math.ceil(mu + 10 * math.sqrt(mu) + 20))


def photon_pmf(state, mode, n_max=None):
    """``P(n)`` for ``n = 0..n_max``; raises if the tail beyond ``n_max`` exceeds 1e-10."""
    _check_mode(state, mode)
    uniq, _, M = _reduced(state, mode)
    if n_max is None:
        n_max = photon_cutoff(uniq)
    if n_max > _MAX_PHOTON_CUTOFF:
        raise ValueError(f"photon cutoff {n_max} too large for a dense pmf")
    n = np.arange(n_max + 1)
    F = fock_amplitude(n[None, :], uniq[:, None])
    p = np.clip(_quadratic(M, F), 0.0, None)
    total = state.norm_squared()
    p /= total
    tail = 1.0 - math.fsum(p)
    # log-space terms carry ~eps * n rounding, which bounds how small a tail can be resolved
    if tail > PHOTON_TAIL_TOL + 1e-14 * n_max:
        raise ValueError(f"photon truncation at n_max={n_max} leaves tail {tail:.3e}")
    return p


def photon_collapse(state, mode, n, discard=False):
    f = fock_amplitude(n, state.amps[:, mode])
    return _finish(state, mode, state._c2() * f[:, None], discard)


def photon_sample(state, mode, rng, n_max=None, discard=False):
    """Sample a photon count; returns ``(n, collapsed_state)``."""
    p = photon_pmf(state, mode, n_max)
    n = int(rng.choice(p.size, p=p / p.sum()))
    return n, photon_collapse(state, mode, n, discard)


def write_pmf_csv(pmf, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "P(n)"])
        for n, p in enumerate(pmf):
            w.writerow([n, repr(float(p))])


# -- Z-tilde ---------------------------------------------------------------------------


@dataclass
class ZtildeInfo:
    x: float
    threshold: float
    epsilon: float
    leakage: bool
    angle: float
    max_leak_distance: float = 0.0


def ztilde_error(alpha_ref, theta_ref):
    """Misassignment probability ``Phi(-|alpha| (1 - cos theta))``."""
    return float(ndtr(-abs(alpha_ref) * (1 - math.cos(theta_ref))))


def ztilde_threshold(alpha_ref, theta_ref):
    return abs(alpha_ref) * (1 + math.cos(theta_ref))


def ztilde_leak_distance(state, mode, alpha_ref, theta_ref):
    """Largest distance from a hypothesis point over branches with non-negligible weight."""
    hyp = complex(alpha_ref) * np.exp(1j * np.array([0.0, theta_ref, -theta_ref]))
    a = state.amps[:, mode]
    weight = np.sqrt((np.abs(state._c2()) ** 2).sum(axis=1))
    d = np.min(np.abs(a[:, None] - hyp[None, :]), axis=1)
    d = d[weight > _LEAK_WEIGHT]
    return float(d.max()) if d.size else 0.0


def ztilde_measure(state, mode, alpha_ref, theta_ref, rng, correct_qubit=None, discard=False):
    """Distinguish ``|alpha>`` (bit 0) from ``|alpha e^{+-i theta}>`` (bit 1).

    Homodyne along ``arg(alpha_ref)`` with the midpoint threshold. If
    ``correct_qubit`` is given and the bit is 1, the relative kernel phase
    between the ``e^{+i theta}`` and ``e^{-i theta}`` hypotheses is removed from
    that qubit (a diagonal feed-forward phase on its ``|1>`` branches). The
    qubit's ``|1>`` is assumed to pair with ``e^{-i theta}``, as after ``CR(-theta)``.

    Returns ``(bit, collapsed_state, ZtildeInfo)``.
    """
    _check_mode(state, mode)
    alpha_ref = complex(alpha_ref)
    angle = float(np.angle(alpha_ref))
    leak = ztilde_leak_distance(state, mode, alpha_ref, theta_ref)
    x, out = homodyne_measure(state, mode, angle, rng, discard=discard)
    thr = ztilde_threshold(alpha_ref, theta_ref)
    bit = int(x < thr)
    if bit and correct_qubit is not None:
        r = abs(alpha_ref)
        kp = homodyne_kernel(x, r * np.exp(1j * theta_ref))
        km = homodyne_kernel(x, r * np.exp(-1j * theta_ref))
        phi = float(np.angle(kp) - np.angle(km))
        on = out.bits[:, correct_qubit] == 1
        out = out._new(out.bits, out.amps, out._c2() * np.where(on, np.exp(1j * phi), 1.0)[:, None])
    info = ZtildeInfo(x=x, threshold=thr, epsilon=ztilde_error(alpha_ref, theta_ref),
                      leakage=leak > LEAK_TOL, angle=angle, max_leak_distance=leak)
    return bit, out, info


# -- qubits ----------------------------------------------------------------------------


def _qubit_probabilities(state, qubit, basis="Z"):
    s = apply_qubit_gate(state, "H", qubit) if basis.upper() == "X" else state
    groups = s.bits[:, qubit].astype(np.int64)
    M = kernels.gram_reduce(s.keys(), s.amps, s._c2(), groups, 2)
    p = np.clip(np.real(np.diag(M)), 0.0, None)
    return p / p.sum(), s, p


def qubit_probabilities(state, qubit, basis="Z"):
    """Outcome probabilities ``[p0, p1]`` and the basis-rotated state."""
    p, s, _ = _qubit_probabilities(state, qubit, basis)
    return p, s


def measure_qubit(state, qubit, basis, rng, reset=True, discard=False):
    """Born-rule measurement in the Z or X basis; returns ``(bit, collapsed_state)``.

    With ``reset`` the qubit is left in ``|0>``; otherwise it keeps the
    measured eigenstate.
    """
    _check_qubit(state, qubit)
    basis = basis.upper()
    if basis not in ("Z", "X"):
        raise ValueError(f"unsupported basis {basis!r}")
    p, s, raw = _qubit_probabilities(state, qubit, basis)
    bit = int(rng.random() < p[1])
    kept = float(raw[bit]) if raw[bit] > 0 else None
    keep = s.bits[:, qubit] == bit
    out = s._new(s.bits[keep], s.amps[keep], s._c2()[keep])
    if discard:
        out = out._new(np.delete(out.bits, qubit, axis=1), out.amps, out._c2(), q=out.q - 1)
        return bit, merge_branches(out).normalized(kept)
    if reset:
        bits = out.bits.copy()
        bits[:, qubit] = 0
        out = out._new(bits, out.amps, out._c2())
    elif basis == "X":
        out = apply_qubit_gate(out, "H", qubit)
    return bit, merge_branches(out).normalized(kept)


# -- discrimination error ------------------------------------------------------------------


def _weights(points, weights):
    points = np.asarray(points, dtype=complex).reshape(-1)
    if points.size == 0:
        raise ValueError("point sets must be nonempty")
    w = np.ones(points.size) if weights is None else np.asarray(weights, dtype=float)
    return points, w / w.sum()


def discrimination_error(points_even, points_odd, method="photon", weights_even=None,
                         weights_odd=None, angle=0.0):
    """Equal-prior ML error ``1/2 sum min(p_even, p_odd)`` for probes landing on
    the given points (incoherent mixtures within each parity class).

    ``method`` is ``"photon"`` (photon counting) or ``"homodyne-x"`` (quadrature
    ``angle``, default the x quadrature).
    """
    pe, we = _weights(points_even, weights_even)
    po, wo = _weights(points_odd, weights_odd)
    if method == "photon":
        n_max = photon_cutoff(np.concatenate([pe, po])) + 20
        n = np.arange(n_max + 1)

        def pmf(pts, w):
            lp = (-np.abs(pts[:, None]) ** 2 + 2 * n[None, :] * np.log(np.maximum(np.abs(pts[:, None]), 1e-300))
                  - gammaln(n[None, :] + 1.0))
            lp = np.where(np.abs(pts[:, None]) == 0, np.where(n[None, :] == 0, 0.0, -np.inf), lp)
            return w @ np.exp(lp)

        return float(0.5 * np.minimum(pmf(pe, we), pmf(po, wo)).sum())
    if method == "homodyne-x":
        rot = np.exp(-1j * angle)
        me = 2 * (pe * rot).real
        mo = 2 * (po * rot).real
        return _gauss_mixture_error(me, we, mo, wo)
    raise ValueError(f"unknown method {method!r}")


def _gauss_mixture_error(me, we, mo, wo):
    # exact on each interval between decision-boundary crossings
    lo = min(me.min(), mo.min()) - 40.0
    hi = max(me.max(), mo.max()) + 40.0
    x = np.linspace(lo, hi, 200_001)
    pe = we @ np.exp(-0.5 * (x[None, :] - me[:, None]) ** 2)
    po = wo @ np.exp(-0.5 * (x[None, :] - mo[:, None]) ** 2)
    choose_even = pe >= po
    flips = np.flatnonzero(choose_even[1:] != choose_even[:-1])
    edges = [-np.inf]
    for i in flips:
        edges.append(_bisect_boundary(me, we, mo, wo, x[i], x[i + 1]))
    edges.append(np.inf)
    err = 0.0
    for k in range(len(edges) - 1):
        a, b = edges[k], edges[k + 1]
        even_region = choose_even[0] if k % 2 == 0 else not choose_even[0]
        mu, w = (mo, wo) if even_region else (me, we)
        err += float(w @ (ndtr(b - mu) - ndtr(a - mu)))
    return 0.5 * err


def _bisect_boundary(me, we, mo, wo, a, b):
    def f(t):
        return we @ np.exp(-0.5 * (t - me) ** 2) - wo @ np.exp(-0.5 * (t - mo) ** 2)

    fa = f(a)
    for _ in range(80):
        mid = 0.5 * (a + b)
        fm = f(mid)
        if (fm >= 0) == (fa >= 0):
            a, fa = mid, fm
        else:
            b = mid
    return 0.5 * (a + b)


# -- records ---------------------------------------------------------------------------------


@dataclass
class MeasurementRecord:
    """Ordered ``(op index, label, outcome)`` entries with optional extras."""

    entries: list = field(default_factory=list)

    def append(self, index, label, outcome, **extra):
        self.entries.append({"index": int(index), "label": label, "outcome": outcome, **extra})

    def outcomes(self, prefix=""):
        return [e["outcome"] for e in self.entries if e["label"].startswith(prefix)]

    def __len__(self):
        return len(self.entries)

    def to_jsonl(self):
        return "".join(json.dumps(e, sort_keys=True) + "\n" for e in self.entries)

    @classmethod
    def from_jsonl(cls, text):
        return cls([json.loads(line) for line in text.splitlines() if line.strip()])
