"""NumPy implementations of the pair kernels (used when the extension is absent)."""

import numpy as np


def _block_pairs(order, starts):
    sizes = np.diff(starts)
    counts = sizes * sizes
    total = int(counts.sum())
    block = np.repeat(np.arange(sizes.size), counts)
    local = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
    s = sizes[block]
    base = starts[:-1][block]
    return order[base + local // s], order[base + local % s]


def _pair_weights(amps, I, J, skip):
    a = amps[I]
    b = amps[J]
    if skip >= 0:
        a = np.delete(a, skip, axis=1)
        b = np.delete(b, skip, axis=1)
    d = a - b
    expo = (-0.5 * (d.real**2 + d.imag**2) + 1j * (a.conj() * b).imag).sum(axis=1)
    return np.exp(expo)


def gram_reduce(order, starts, amps, coeffs, groups, n_groups, skip):
    I, J = _block_pairs(order, starts)
    w = _pair_weights(amps, I, J, skip)
    val = (coeffs[I].conj() * coeffs[J]).sum(axis=1) * w
    flat = groups[I] * n_groups + groups[J]
    size = n_groups * n_groups
    re = np.bincount(flat, weights=val.real, minlength=size)
    im = np.bincount(flat, weights=val.imag, minlength=size)
    return (re + 1j * im).reshape(n_groups, n_groups)


def gram_matrix(order, starts, amps):
    K = amps.shape[0]
    I, J = _block_pairs(order, starts)
    G = np.zeros((K, K), dtype=np.complex128)
    G[I, J] = _pair_weights(amps, I, J, -1)
    return G


def group_branches(bits, flat, tol):
    grid = np.rint(flat / tol)
    if grid.size and not np.all(np.abs(grid) < 4.5e15):
        return None
    key = np.concatenate([bits.astype(np.float64), grid + 0.0], axis=1)
    if key.shape[1] == 0:
        return np.zeros(1 if len(key) else 0, dtype=np.int64), np.zeros(len(key), dtype=np.int64)
    _, first, inv = np.unique(key, axis=0, return_index=True, return_inverse=True)
    # relabel groups in first-appearance order, matching the compiled kernel
    perm = np.argsort(first, kind="stable")
    rank = np.empty_like(perm)
    rank[perm] = np.arange(perm.size)
    return first[perm].astype(np.int64), rank[inv.reshape(-1)].astype(np.int64)
