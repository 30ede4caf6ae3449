"""Dense complex linear algebra used throughout the package.

Matrices are plain ``numpy`` complex128 arrays. The SVD is a one-sided
Jacobi iteration provided by the kernel backend.
"""
import json
import math

import numpy as np

from unifactor import kernels
from unifactor.kernels import SVDConvergenceError

UNITARY_TOL = 1e-9

__all__ = [
    "SVDConvergenceError",
    "matmul",
    "dagger",
    "hs_inner",
    "complex_svd",
    "polar_unitary_of_adjoint",
    "is_unitary",
    "random_unitary",
    "load_umat",
    "dump_umat",
]


def _as_matrix(a):
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {a.shape}")
    return a


def matmul(a, b):
    a, b = _as_matrix(a), _as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"dimension mismatch: {a.shape} x {b.shape}")
    return a @ b


def dagger(a):
    """Conjugate transpose."""
    return _as_matrix(a).conj().T


def hs_inner(a, b):
    """Hilbert-Schmidt inner product Tr(a^dagger b)."""
    a, b = _as_matrix(a), _as_matrix(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return complex(np.vdot(a, b))


def complex_svd(m):
    """Return ``(x, d, y)`` with ``m = x @ diag(d) @ y^dagger``.

    ``x`` and ``y`` are unitary, ``d`` is non-negative and sorted in
    descending order. Raises :class:`SVDConvergenceError` when the Jacobi
    iteration does not settle.
    """
    m = _as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"square matrix required, got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise SVDConvergenceError("matrix has non-finite entries")
    return kernels.jacobi_svd(m)


def polar_unitary_of_adjoint(env):
    """Unitary ``u`` maximizing ``Re Tr(env @ u)``.

    With ``env = X D Y^dagger`` this is ``Y X^dagger``; the maximum equals
    the sum of the singular values.
    """
    x, _, y = complex_svd(env)
    return y @ x.conj().T


def is_unitary(m, tol=UNITARY_TOL):
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return bool(np.abs(m.conj().T @ m - np.eye(m.shape[0])).max() <= tol)


def random_unitary(dim, rng):
    """Haar-distributed unitary: QR of a complex Gaussian with phase-fixed diagonal."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def dump_umat(u, path=None):
    """Serialize a 2^n x 2^n unitary as umat-json; returns the text."""
    u = _as_matrix(u)
    dim = u.shape[0]
    n = dim.bit_length() - 1
    if u.shape != (dim, dim) or 1 << n != dim:
        raise ValueError(f"umat requires a 2^n square matrix, got {u.shape}")
    rows_re = ",\n    ".join("[" + ", ".join(f"{v:.17g}" for v in row) + "]" for row in u.real)
    rows_im = ",\n    ".join("[" + ", ".join(f"{v:.17g}" for v in row) + "]" for row in u.imag)
    text = f'{{"n": {n},\n  "re": [\n    {rows_re}\n  ],\n  "im": [\n    {rows_im}\n  ]\n}}\n'
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def load_umat(source):
    """Read umat-json from a path or an already-parsed dict."""
    if isinstance(source, dict):
        data = source
    else:
        with open(source) as fh:
            data = json.load(fh)
    try:
        n = int(data["n"])
        re = np.asarray(data["re"], dtype=float)
        im = np.asarray(data["im"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed umat-json: {exc}") from exc
    dim = 1 << n
    if re.shape != (dim, dim) or im.shape != (dim, dim):
        raise ValueError(f"umat-json arrays must be {dim}x{dim} for n={n}")
    return re + 1j * im
