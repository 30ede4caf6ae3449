"""Reference implementations that share no code with the package.

They work basis state by basis state with explicit bit arithmetic, so they
are slow but easy to check by hand.
"""
import numpy as np


def bit(index, q, n):
    """Value of qubit ``q`` (0 = most significant) in basis index ``index``."""
    return (index >> (n - 1 - q)) & 1


def expand_by_bits(u, location, n):
    dim = 1 << n
    m = len(location)
    out = np.zeros((dim, dim), dtype=complex)
    for col in range(dim):
        for row in range(dim):
            rest_ok = all(bit(row, q, n) == bit(col, q, n) for q in range(n) if q not in location)
            if not rest_ok:
                continue
            a = sum(bit(row, q, n) << (m - 1 - i) for i, q in enumerate(location))
            b = sum(bit(col, q, n) << (m - 1 - i) for i, q in enumerate(location))
            out[row, col] = u[a, b]
    return out


def apply_to_state(state, u, location, n):
    """Apply a local gate to a state vector without building the full matrix."""
    m = len(location)
    out = np.zeros_like(state)
    for idx, amp in enumerate(state):
        if amp == 0:
            continue
        b = sum(bit(idx, q, n) << (m - 1 - i) for i, q in enumerate(location))
        for a in range(1 << m):
            new = idx
            for i, q in enumerate(location):
                v = (a >> (m - 1 - i)) & 1
                shift = n - 1 - q
                new = (new & ~(1 << shift)) | (v << shift)
            out[new] += u[a, b] * amp
    return out


def simulate_unitary(gates, n):
    """Columns are the images of basis states; ``gates`` is [(matrix, location)]."""
    dim = 1 << n
    cols = []
    for j in range(dim):
        s = np.zeros(dim, dtype=complex)
        s[j] = 1
        for u, loc in gates:
            s = apply_to_state(s, u, loc, n)
        cols.append(s)
    return np.array(cols).T


def matmul_loops(a, b):
    n, k = a.shape
    k2, m = b.shape
    assert k == k2
    out = np.zeros((n, m), dtype=complex)
    for i in range(n):
        for j in range(m):
            acc = 0j
            for t in range(k):
                acc += a[i, t] * b[t, j]
            out[i, j] = acc
    return out


def haar_unitary(dim, rng):
    """Haar-random unitary via QR of a Ginibre matrix (Mezzadri's recipe)."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_env(dim, rng):
    return rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
