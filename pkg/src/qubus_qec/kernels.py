"""Backend selection for the Gram-kernel hot loops.

The compiled extension ``qubus_qec._kernels`` is used when it imports; set
``QUBUS_QEC_PURE_PYTHON=1`` to force the NumPy fallback. :func:`set_backend`
switches at runtime (tests and the benchmark run both).

All public functions take branch data directly:

``keys``
    int64 array, one entry per branch; branches with different keys (qubit
    basis strings) have zero overlap.
``amps``
    complex array of shape (K, m), coherent amplitudes per mode.
``coeffs``
    complex array of shape (K, R); R = 1 for pure states, R = rank for mixed.
"""

import os

import numpy as np

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # pragma: no cover - depends on build
    _compiled = None

_BACKENDS = {"python": _kernels_py}
if _compiled is not None:
    _BACKENDS["cython"] = _compiled

if _compiled is not None and os.environ.get("QUBUS_QEC_PURE_PYTHON", "") != "1":
    _active = "cython"
else:
    _active = "python"


def available_backends():
    return tuple(_BACKENDS)


def backend():
    return _active


def set_backend(name):
    """Select ``"cython"`` or ``"python"``; returns the previous backend name."""
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"backend {name!r} not available (have {sorted(_BACKENDS)})")
    prev, _active = _active, name
    return prev


def _blocks(keys):
    order = np.argsort(keys, kind="stable").astype(np.int64)
    sk = keys[order]
    edges = np.flatnonzero(sk[1:] != sk[:-1]) + 1
    starts = np.concatenate(([0], edges, [keys.size])).astype(np.int64)
    return order, starts


def gram_reduce(keys, amps, coeffs, groups=None, n_groups=1, skip=-1):
    """Group-reduced Gram form.

    Returns the ``n_groups x n_groups`` matrix
    ``M[u, v] = sum conj(c_j) c_l <branch_j|branch_l>`` over pairs with
    ``groups[j] = u`` and ``groups[l] = v``. Mode ``skip`` is left out of the
    overlap product, which is what a measurement on that mode needs.
    """
    keys = np.ascontiguousarray(keys, dtype=np.int64)
    amps = np.ascontiguousarray(amps, dtype=np.complex128)
    coeffs = np.ascontiguousarray(coeffs, dtype=np.complex128)
    if coeffs.ndim == 1:
        coeffs = coeffs[:, None]
    if groups is None:
        groups = np.zeros(keys.size, dtype=np.int64)
    groups = np.ascontiguousarray(groups, dtype=np.int64)
    if keys.size == 0:
        return np.zeros((n_groups, n_groups), dtype=np.complex128)
    order, starts = _blocks(keys)
    return _BACKENDS[_active].gram_reduce(order, starts, amps, coeffs, groups, int(n_groups), int(skip))


def gram_matrix(keys, amps):
    """Full branch Gram matrix (zero between different basis strings)."""
    keys = np.ascontiguousarray(keys, dtype=np.int64)
    amps = np.ascontiguousarray(amps, dtype=np.complex128)
    order, starts = _blocks(keys)
    return _BACKENDS[_active].gram_matrix(order, starts, amps)


def group_branches(bits, amps, tol):
    """Group branches with equal basis strings and amplitudes on a ``tol`` grid.

    Returns ``(first, inverse)`` with groups numbered in order of first
    appearance, or ``None`` if amplitudes are too large for the grid.
    """
    bits = np.ascontiguousarray(bits, dtype=np.uint8)
    amps = np.ascontiguousarray(amps, dtype=np.complex128)
    flat = amps.view(np.float64).reshape(amps.shape[0], 2 * amps.shape[1])
    return _BACKENDS[_active].group_branches(bits, flat, float(tol))
