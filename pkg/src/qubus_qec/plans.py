"""Alternating CR blocks and displacement plans for single-probe parity measurement.

An alternating block applies ``CR(+theta), CR(-theta), ...`` from one probe to
``n`` data qubits, so a basis branch multiplies the probe amplitude by
``m = e^{i beta theta}`` with ``beta = sum_k (-1)^k b_k`` (k from 0). Parity of
the basis string equals the parity of ``beta``.

Interleaving blocks with displacements turns the final probe amplitude into a
polynomial in ``m``:

* photon scheme (block, D1, block, D2, ..., block, D_d):
  ``f(m) = alpha m^d + sum_j beta_j m^{d-j}`` with ``d = n-1`` (n even) or ``n`` (n odd)
* homodyne scheme (block, D1, ..., D_{n+1}, block):
  ``f(m) = alpha m^{n+2} + sum_j beta_j m^{n+2-j}``

The displacements are chosen so that ``f(m_beta)`` depends only on the parity
of ``beta``. Both solves are ill conditioned for small ``theta`` (the nodes
``m_beta`` cluster near 1) and run in extended precision.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import mpmath
import numpy as np

from . import circuit as cc

SOLVER_DPS = 60
DEFAULT_R3 = 6.0


class SolverError(RuntimeError):
    """Raised when a plan cannot be solved; carries the residual."""

    def __init__(self, msg, residual=float("nan")):
        super().__init__(f"{msg} (residual {residual:.3e})")
        self.residual = residual


# -- blocks ------------------------------------------------------------------------------------


@dataclass(frozen=True)
class AlternatingBlock:
    n: int
    theta: float
    pattern: tuple = ()

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("an alternating block needs n >= 2")
        if not self.pattern:
            object.__setattr__(self, "pattern", tuple(1 if k % 2 == 0 else -1 for k in range(self.n)))
        p = self.pattern
        if len(p) != self.n or any(s not in (1, -1) for s in p) or any(p[k] == p[k + 1] for k in range(self.n - 1)):
            raise ValueError("pattern must alternate strictly and have length n")

    def beta(self, bits):
        return int(sum(s * int(b) for s, b in zip(self.pattern, bits)))

    def multiplier(self, bits):
        return complex(np.exp(1j * self.beta(bits) * self.theta))

    def beta_values(self):
        lo = -sum(1 for s in self.pattern if s < 0)
        hi = sum(1 for s in self.pattern if s > 0)
        return list(range(lo, hi + 1))


def build_parity_gate(q1, q2, mode, theta, label="parity"):
    """Two-qubit parity gate: ``CR(q1, +theta)`` then ``CR(q2, -theta)``."""
    if q1 == q2:
        raise ValueError("parity gate needs two distinct qubits")
    return cc.Circuit(max(q1, q2) + 1, mode + 1, [
        cc.CR(q1, mode, theta, f"{label}/cr-0"),
        cc.CR(q2, mode, -theta, f"{label}/cr-1"),
    ], label)


def block_ops(qubits, mode, theta, label="block"):
    blk = AlternatingBlock(len(qubits), theta)
    return [cc.CR(qb, mode, s * theta, f"{label}/cr-{j}") for j, (qb, s) in enumerate(zip(qubits, blk.pattern))]


def build_alternating_block(n, theta, mode, qubits=None, label="block"):
    """Circuit of ``n`` CRs with signs ``+, -, +, ...`` on ``qubits`` (default ``0..n-1``)."""
    if n < 2:
        raise ValueError("an alternating block needs n >= 2")
    qubits = list(range(n)) if qubits is None else list(qubits)
    if len(qubits) != n:
        raise ValueError("qubit list length must equal n")
    return cc.Circuit(max(qubits) + 1, mode + 1, block_ops(qubits, mode, theta, label), label)


# -- plans -------------------------------------------------------------------------------------


@dataclass
class DisplacementPlan:
    """Blocks interleaved with displacements.

    ``landing`` maps each ``beta`` to its final probe amplitude;
    ``targets`` lists the landing points per parity class.
    """

    n: int
    theta: float
    alpha: float
    scheme: str
    blocks: int
    displacements: tuple
    targets: dict
    landing: dict = field(default_factory=dict)
    r3: float | None = None
    residual: float = 0.0
    sign_pattern: tuple = ()
    # extended-precision normalized coefficients (beta_j / alpha) when solved numerically
    exact: tuple = field(default=(), repr=False, compare=False)

    @property
    def cr_count(self):
        return self.blocks * self.n

    @property
    def block(self):
        return AlternatingBlock(self.n, self.theta)

    def schedule(self):
        """Sequence of ``("block", k)`` / ``("disp", j)`` steps in execution order."""
        steps = []
        for k in range(self.blocks):
            steps.append(("block", k))
            if k < len(self.displacements):
                steps.append(("disp", k))
        return steps

    def final_amplitude(self, beta):
        """Probe amplitude after the plan for a branch with block index ``beta``."""
        m = np.exp(1j * beta * self.theta)
        a = complex(self.alpha)
        for kind, k in self.schedule():
            a = a * m if kind == "block" else a + self.displacements[k]
        return a

    def row_sum(self):
        """``sum_j beta_j / alpha`` in extended precision (the ``beta = 0`` equation)."""
        with mpmath.workdps(SOLVER_DPS):
            vals = self.exact or [mpmath.mpc(b) / self.alpha for b in self.displacements]
            return complex(mpmath.fsum(vals))

    def target(self, beta):
        return self.landing[int(beta)]

    def parity_points(self):
        return list(self.targets["even"]), list(self.targets["odd"])

    def to_dict(self):
        enc = lambda z: [float(complex(z).real), float(complex(z).imag)]  # noqa: E731
        return {
            "n": self.n,
            "theta": self.theta,
            "alpha": self.alpha,
            "scheme": self.scheme,
            "blocks": self.blocks,
            "displacements": [enc(b) for b in self.displacements],
            "targets": {k: [enc(z) for z in v] for k, v in self.targets.items()},
            "landing": {str(k): enc(v) for k, v in self.landing.items()},
            "r3": self.r3,
            "residual": self.residual,
            "sign_pattern": list(self.sign_pattern),
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d):
        dec = lambda v: complex(v[0], v[1])  # noqa: E731
        return cls(
            n=int(d["n"]), theta=float(d["theta"]), alpha=float(d["alpha"]), scheme=d["scheme"],
            blocks=int(d["blocks"]), displacements=tuple(dec(b) for b in d["displacements"]),
            targets={k: [dec(z) for z in v] for k, v in d["targets"].items()},
            landing={int(k): dec(v) for k, v in d.get("landing", {}).items()},
            r3=d.get("r3"), residual=float(d.get("residual", 0.0)),
            sign_pattern=tuple(d.get("sign_pattern", ())),
        )

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _check_args(n, theta, alpha):
    if n < 2:
        raise ValueError("plans need n >= 2")
    if not 0 < theta < math.pi / 8:
        raise ValueError("theta must lie in (0, pi/8)")
    if not alpha > 0:
        raise ValueError("alpha must be positive")


def photon_depth(n):
    return n - 1 if n % 2 == 0 else n


def _photon_system(n, theta, pattern, evens):
    """Real square system for unknowns (beta_1..beta_d, P, E), alpha = 1."""
    d = photon_depth(n)
    betas = AlternatingBlock(n, theta).beta_values()
    sign = dict(zip(evens, pattern))
    rows, rhs = [], []
    th = mpmath.mpf(theta)
    for b in betas:
        if b < 0 and -b in betas:
            continue  # conjugate of the +b equation
        m = mpmath.expj(b * th)
        pw = [m ** (d - j) for j in range(1, d + 1)]
        lead = m**d
        tgt = [-1, 0] if b % 2 else [0, -sign[abs(b)]]
        rows.append([mpmath.re(p) for p in pw] + tgt)
        rhs.append(-mpmath.re(lead))
        if b != 0:
            rows.append([mpmath.im(p) for p in pw] + [0, 0])
            rhs.append(-mpmath.im(lead))
    return mpmath.matrix(rows), mpmath.matrix(rhs)


def solve_photon_plan(n, theta, alpha):
    """Displacement plan for photon-counting readout.

    Odd-parity branches land on one point ``P``; even-parity branches land on
    ``+E`` or ``-E``, which photon counting cannot tell apart. Displacements
    are real, so ``beta`` and ``-beta`` land on conjugate points and the
    system is square. Among the sign assignments of even ``beta`` to ``+-E``,
    the one with the largest ``||P| - |E||`` is kept.
    """
    _check_args(n, theta, alpha)
    blk = AlternatingBlock(n, theta)
    if n == 2:
        disp = (complex(-alpha),)
        plan = DisplacementPlan(n, theta, alpha, "photon", 1, disp, {}, sign_pattern=())
        return _finish_plan(plan, residual=0.0)
    evens = sorted({abs(b) for b in blk.beta_values() if b % 2 == 0})
    best = None
    with mpmath.workdps(SOLVER_DPS):
        for pattern in itertools.product((1, -1), repeat=len(evens)):
            if pattern[0] != 1 or len(set(pattern)) == 1:
                continue  # global sign is absorbed by E; equal signs leave the system singular
            A, rhs = _photon_system(n, theta, pattern, evens)
            try:
                x = mpmath.lu_solve(A, rhs)
            except ZeroDivisionError:
                continue
            res = mpmath.norm(A * x - rhs, mpmath.inf)
            scale = max(1, mpmath.norm(x, mpmath.inf))
            if res > mpmath.mpf(10) ** (-SOLVER_DPS // 2) * scale:
                continue
            P, E = x[len(x) - 2], x[len(x) - 1]
            score = abs(abs(P) - abs(E))
            if best is None or score > best[0]:
                best = (score, pattern, x, float(res))
    if best is None:
        raise SolverError(f"no solvable photon plan for n={n}, theta={theta}")
    _, pattern, x, res = best
    d = photon_depth(n)
    disp = tuple(complex(float(x[j]) * alpha) for j in range(d))
    plan = DisplacementPlan(n, theta, alpha, "photon", d, disp, {}, sign_pattern=tuple(pattern),
                            exact=tuple(x[j] for j in range(d)))
    return _finish_plan(plan, residual=res)


def photon_closed_form(theta, alpha):
    """Closed-form n=4 displacements and landing points ``(betas, P, E)``.

    Even branches with ``beta = 0`` land on ``-E`` and ``beta = +-2`` on ``+E``.
    """
    c = math.cos
    b1 = -4 * alpha * c(theta / 2) ** 2 * (2 * c(theta) - 1)
    b2 = alpha * (1 + 2 * c(theta) + 2 * c(3 * theta))
    b3 = alpha * (c(2 * theta) - c(3 * theta) - c(theta) - 1)
    P = -4 * alpha * math.sin(theta / 2) ** 2 * (2 * math.sin(theta) ** 2 + c(theta))
    E = 2 * alpha * math.sin(theta) ** 2 * (2 * c(theta) - 1)
    return (b1, b2, b3), P, E


def photon_plan_from_displacements(n, theta, alpha, displacements):
    d = photon_depth(n)
    if len(displacements) != d:
        raise ValueError(f"photon plan for n={n} needs {d} displacements")
    plan = DisplacementPlan(n, theta, alpha, "photon", d, tuple(complex(b) for b in displacements), {})
    return _finish_plan(plan, residual=0.0)


def solve_homodyne_plan(n, theta, alpha, r3=DEFAULT_R3):
    """Displacement plan for x-homodyne readout: even parity lands at 0, odd at ``r3``.

    In units of ``alpha`` the coefficients ``c_j = beta_j / alpha`` solve the
    Vandermonde system ``sum_j c_j m^{n+1-j} = t_beta / m - m^{n+1}`` over the
    ``n+1`` values of ``beta``.
    """
    _check_args(n, theta, alpha)
    if not r3 > 0:
        raise ValueError("r3 must be positive")
    betas = AlternatingBlock(n, theta).beta_values()
    with mpmath.workdps(SOLVER_DPS):
        th = mpmath.mpf(theta)
        r = mpmath.mpf(r3) / mpmath.mpf(alpha)
        nodes = [mpmath.expj(b * th) for b in betas]
        A = mpmath.matrix([[m ** (n - k) for k in range(n + 1)] for m in nodes])
        rhs = mpmath.matrix([(r if b % 2 else 0) / m - m ** (n + 1) for b, m in zip(betas, nodes)])
        try:
            c = mpmath.lu_solve(A, rhs)
        except ZeroDivisionError as exc:
            raise SolverError("homodyne system is singular (coinciding nodes)") from exc
        res = float(mpmath.norm(A * c - rhs, mpmath.inf))
        if not res < 1e-10 or not all(mpmath.isfinite(mpmath.re(v)) and mpmath.isfinite(mpmath.im(v)) for v in c):
            raise SolverError("homodyne solve did not converge", res)
        disp = tuple(complex(c[k]) * alpha for k in range(n + 1))
        exact = tuple(c[k] for k in range(n + 1))
    plan = DisplacementPlan(n, theta, alpha, "homodyne", n + 2, disp, {}, r3=float(r3), exact=exact)
    return _finish_plan(plan, residual=res)


def _finish_plan(plan, residual):
    blk = plan.block
    with mpmath.workdps(SOLVER_DPS):
        th = mpmath.mpf(plan.theta)
        al = mpmath.mpf(plan.alpha)
        if plan.exact:
            disp = [al * mpmath.mpmathify(c) for c in plan.exact]
        else:
            disp = [mpmath.mpc(b) for b in plan.displacements]
        landing = {}
        for b in blk.beta_values():
            m = mpmath.expj(b * th)
            a = al
            for kind, k in plan.schedule():
                a = a * m if kind == "block" else a + disp[k]
            landing[b] = complex(a)
    plan.landing = landing
    plan.residual = residual
    even = _distinct([v for b, v in landing.items() if b % 2 == 0], plan.alpha)
    odd = _distinct([v for b, v in landing.items() if b % 2], plan.alpha)
    plan.targets = {"even": even, "odd": odd}
    return plan


def _distinct(points, alpha, rel=1e-6):
    out = []
    for p in points:
        if all(abs(p - q) > rel * alpha for q in out):
            out.append(p)
    return out


# -- circuits -------------------------------------------------------------------------------


def plan_ops(plan, qubits, mode, label="scheme"):
    """Blocks and displacements of ``plan`` acting on ``qubits`` and probe ``mode``."""
    if len(qubits) != plan.n:
        raise ValueError("qubit count does not match the plan")
    ops = []
    for kind, k in plan.schedule():
        if kind == "block":
            ops.extend(block_ops(qubits, mode, plan.theta, f"{label}/block-{k}"))
        else:
            ops.append(cc.Displace(mode, plan.displacements[k], f"{label}/disp-{k}"))
    return ops


def detector_kind(plan):
    return cc.PhotonNumber() if plan.scheme == "photon" else cc.Homodyne(0.0)


def plan_circuit(plan, qubits=None, mode=None, measure=True, label="scheme"):
    """Full single-probe circuit: probe preparation, plan, detection."""
    qubits = list(range(plan.n)) if qubits is None else list(qubits)
    mode = 0 if mode is None else mode
    ops = [cc.PrepareMode(mode, complex(plan.alpha), f"{label}/probe")]
    ops += plan_ops(plan, qubits, mode, label)
    if measure:
        ops.append(cc.MeasureMode(mode, detector_kind(plan), f"{label}/detect"))
    return cc.Circuit(max(qubits) + 1, mode + 1, ops, label)


def landing_table(plan):
    """Rows ``(basis string, parity, landing point)`` for all ``2^n`` inputs."""
    blk = plan.block
    rows = []
    for bits in itertools.product((0, 1), repeat=plan.n):
        b = blk.beta(bits)
        rows.append(("".join(map(str, bits)), sum(bits) % 2, plan.landing[b]))
    return rows


def block_landing_table(n, theta, alpha):
    """Landing points of a single bare block (no displacements)."""
    blk = AlternatingBlock(n, theta)
    return [("".join(map(str, bits)), sum(bits) % 2, alpha * blk.multiplier(bits))
            for bits in itertools.product((0, 1), repeat=n)]


def weighted_points(rows):
    """Collapse landing rows into per-parity ``(points, multiplicities)``."""
    out = {0: {}, 1: {}}
    for _, parity, pt in rows:
        key = complex(round(complex(pt).real, 9), round(complex(pt).imag, 9))
        out[parity][key] = out[parity].get(key, 0) + 1
    return {p: (list(d), list(d.values())) for p, d in out.items()}


def parity_error(plan):
    """ML parity-discrimination error of a plan for uniformly random basis inputs."""
    from .measurement import discrimination_error

    pts = weighted_points(landing_table(plan))
    method = "photon" if plan.scheme == "photon" else "homodyne-x"
    return discrimination_error(pts[0][0], pts[1][0], method, weights_even=pts[0][1], weights_odd=pts[1][1])


def bare_block_plan(n, theta, alpha):
    """A single alternating block with no displacements; one landing point per ``beta``."""
    _check_args(n, theta, alpha)
    plan = DisplacementPlan(n, theta, alpha, "block", 1, (), {})
    return _finish_plan(plan, residual=0.0)
