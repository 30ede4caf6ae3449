"""Unitary distance functions built on the Hilbert-Schmidt overlap."""
import math

import numpy as np


def _overlap(u, v):
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    if u.shape != v.shape or u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    return complex(np.vdot(v, u)), u.shape[0]


def distance_delta(u, v):
    """1 - |Tr(V^dagger U)| / N; insensitive to global phase."""
    tr, dim = _overlap(u, v)
    # rounding can push |Tr| a hair above N
    return max(0.0, 1.0 - abs(tr) / dim)


def distance_delta_f(u, v):
    """1 - Re Tr(V^dagger U) / N. Range is [0, 2]: V against -V gives 2."""
    tr, dim = _overlap(u, v)
    return 1.0 - tr.real / dim


def distance_delta_p(u, v):
    tr, dim = _overlap(u, v)
    return math.sqrt(max(0.0, 1.0 - (abs(tr) / dim) ** 2))


def frob_cost(u, v):
    """||U - V||_F^2 for unitaries, via 2N (1 - Re Tr(V^dagger U) / N)."""
    tr, dim = _overlap(u, v)
    return 2.0 * dim * (1.0 - tr.real / dim)
