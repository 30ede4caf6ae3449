"""Pure numpy implementation of the hot kernels.

Same call signatures as the compiled ``_ckernels`` module. Used when the
extension is not built or when ``UNIFACTOR_PURE_PYTHON=1`` is set.
"""
import math

import numpy as np

KIND_FIXED = 0
KIND_UNITARY = 1
KIND_RZ = 2

_EPS = np.finfo(float).eps


class SVDConvergenceError(np.linalg.LinAlgError):
    pass


def gate_offsets(location, n):
    """Index offsets splitting a basis index into (local, rest) parts.

    Qubit 0 is the most significant bit of a basis index. Returns
    ``(loc_off, rest_off)`` with ``idx = rest_off[r] + loc_off[a]``.
    """
    m = len(location)
    weights = [1 << (n - 1 - q) for q in location]
    loc_off = np.zeros(1 << m, dtype=np.intp)
    for a in range(1 << m):
        off = 0
        for j in range(m):
            if (a >> (m - 1 - j)) & 1:
                off += weights[j]
        loc_off[a] = off
    others = [q for q in range(n) if q not in set(location)]
    k = len(others)
    rest_off = np.zeros(1 << k, dtype=np.intp)
    for r in range(1 << k):
        off = 0
        for j, q in enumerate(others):
            if (r >> (k - 1 - j)) & 1:
                off += 1 << (n - 1 - q)
        rest_off[r] = off
    return loc_off, rest_off


def _index_grid(loc_off, rest_off):
    # grid[r, a] = global basis index
    return rest_off[:, None] + loc_off[None, :]


def apply_left(t, u, loc_off, rest_off, inverse=False):
    """In place ``t <- expand(u) @ t`` (or with ``u^dagger``)."""
    op = u.conj().T if inverse else u
    idx = _index_grid(loc_off, rest_off)
    # block[r, a, c] = t[idx[r, a], c]
    block = t[idx]
    t[idx] = np.einsum("ab,rbc->rac", op, block)


def apply_right(t, u, loc_off, rest_off, inverse=False):
    """In place ``t <- t @ expand(u)`` (or with ``u^dagger``)."""
    op = u.conj().T if inverse else u
    idx = _index_grid(loc_off, rest_off)
    block = t[:, idx]
    t[:, idx] = np.einsum("crb,ba->cra", block, op)


def env_matrix(t, loc_off, rest_off):
    """Partial trace over the legs outside ``loc`` so that Tr(E u) = Tr(expand(u) t)."""
    idx = _index_grid(loc_off, rest_off)
    # E[a, b] = sum_r t[idx[r, a], idx[r, b]]
    return t[idx[:, :, None], idx[:, None, :]].sum(axis=0)


def jacobi_svd(m, max_sweeps=60):
    """One-sided (Hestenes) Jacobi SVD of a square complex matrix.

    Returns ``(x, s, y)`` with ``m == x @ diag(s) @ y^dagger`` and ``s``
    sorted descending.
    """
    a = np.array(m, dtype=complex, copy=True)
    dim = a.shape[0]
    if a.ndim != 2 or a.shape[1] != dim:
        raise ValueError(f"square matrix required, got shape {a.shape}")
    v = np.eye(dim, dtype=complex)
    tol = 4.0 * dim * _EPS
    for _ in range(max_sweeps):
        rotated = False
        for p in range(dim - 1):
            for q in range(p + 1, dim):
                ap = a[:, p]
                aq = a[:, q]
                alpha = np.vdot(ap, ap).real
                beta = np.vdot(aq, aq).real
                gamma = np.vdot(ap, aq)
                g = abs(gamma)
                if g == 0.0 or g <= tol * math.sqrt(alpha * beta):
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * g)
                t = math.copysign(1.0, zeta) / (abs(zeta) + math.sqrt(1.0 + zeta * zeta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = c * t
                ph = gamma / g
                new_p = c * ap - s * np.conj(ph) * aq
                new_q = s * ph * ap + c * aq
                a[:, p] = new_p
                a[:, q] = new_q
                vp = v[:, p].copy()
                vq = v[:, q]
                v[:, p] = c * vp - s * np.conj(ph) * vq
                v[:, q] = s * ph * vp + c * vq
        if not rotated:
            break
    else:
        raise SVDConvergenceError(f"Jacobi SVD did not converge in {max_sweeps} sweeps")

    sv = np.linalg.norm(a, axis=0)
    order = np.argsort(-sv, kind="stable")
    sv = sv[order]
    a = a[:, order]
    v = v[:, order]
    x = np.zeros_like(a)
    tiny = dim * _EPS * (sv[0] if dim else 0.0)
    for j in range(dim):
        if sv[j] > tiny and sv[j] > 0.0:
            col = a[:, j] / sv[j]
            col = col - x[:, :j] @ (x[:, :j].conj().T @ col)
            nrm = np.linalg.norm(col)
            if nrm >= 0.5:
                x[:, j] = col / nrm
                continue
        # (numerical) null space: complete with the first usable basis vector
        for i in range(dim):
            col = np.zeros(dim, dtype=complex)
            col[i] = 1.0
            col = col - x[:, :j] @ (x[:, :j].conj().T @ col)
            nrm = np.linalg.norm(col)
            if nrm > 0.5:
                x[:, j] = col / nrm
                break
    return x, sv, v


def polar_update(env, u_old, beta):
    """Unitary maximizing Re Tr(M u) for ``M = (1-beta) env + beta u_old^dagger``."""
    mix = env if beta == 0.0 else (1.0 - beta) * env + beta * u_old.conj().T
    x, _, y = jacobi_svd(mix)
    return y @ x.conj().T


def rz_update(env, u_old, beta):
    mix = env if beta == 0.0 else (1.0 - beta) * env + beta * u_old.conj().T
    theta = math.atan2(-mix[1, 1].imag, mix[1, 1].real)
    return np.array([[1.0, 0.0], [0.0, complex(math.cos(theta), math.sin(theta))]])


def _update(kind, env, u, beta):
    if kind == KIND_UNITARY:
        u[...] = polar_update(env, u, beta)
    elif kind == KIND_RZ:
        u[...] = rz_update(env, u, beta)


def sweep(t, mats, kinds, loc_offs, rest_offs, beta):
    """One backward plus one forward pass over all gates, in place.

    On entry ``t`` holds ``g_p ... g_1 V^dagger``; on exit the same layout
    with every non-fixed gate replaced by its local optimum.
    """
    p = len(mats)
    for g in range(p - 1, -1, -1):
        apply_left(t, mats[g], loc_offs[g], rest_offs[g], inverse=True)
        if kinds[g] != KIND_FIXED:
            env = env_matrix(t, loc_offs[g], rest_offs[g])
            _update(kinds[g], env, mats[g], beta)
        apply_right(t, mats[g], loc_offs[g], rest_offs[g], inverse=False)
    for g in range(p):
        apply_right(t, mats[g], loc_offs[g], rest_offs[g], inverse=True)
        if kinds[g] != KIND_FIXED:
            env = env_matrix(t, loc_offs[g], rest_offs[g])
            _update(kinds[g], env, mats[g], beta)
        apply_left(t, mats[g], loc_offs[g], rest_offs[g], inverse=False)
