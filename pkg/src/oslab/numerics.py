"""Dense complex linear algebra kernel.

Singular values come from a one-sided (Hestenes) Jacobi iteration, i.e. the
Jacobi eigenvalue method applied implicitly to ``a* a``; the LP behind
:func:`min_l1_preimage` is a dense two-phase simplex with Bland's rule.
Both are compiled with numba unless ``OSLAB_DISABLE_NUMBA`` is set.
"""

import numpy as np

from ._jit import USE_NUMBA, njit

JACOBI_TOL = 1e-12
MAX_SWEEPS = 60
CERT_SLACK = 1e-9


class EmptyInputError(ValueError):
    pass


class NoPreimageError(ValueError):
    pass


class DegenerateQuotientError(ValueError):
    pass


def as_cmatrix(a):
    """Validate and convert to a 2-D complex128 array."""
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {arr.shape}")
    if arr.size == 0:
        raise EmptyInputError("matrix has a zero dimension")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix has non-finite entries")
    return arr


# ---------------------------------------------------------------------------
# Jacobi SVD kernels


@njit
def _hestenes(w, v, tol, max_sweeps, want_v):
    # Orthogonalises the columns of w in place; w is (m, n) with m >= n.
    m, n = w.shape
    for _ in range(max_sweeps):
        rotated = False
        for i in range(n - 1):
            for j in range(i + 1, n):
                alpha = 0.0
                beta = 0.0
                gamma = 0j
                for r in range(m):
                    wi = w[r, i]
                    wj = w[r, j]
                    alpha += wi.real * wi.real + wi.imag * wi.imag
                    beta += wj.real * wj.real + wj.imag * wj.imag
                    gamma += wi.conjugate() * wj
                g = abs(gamma)
                if g == 0.0 or g <= tol * np.sqrt(alpha * beta):
                    continue
                rotated = True
                ph = (gamma / g).conjugate()
                zeta = (beta - alpha) / (2.0 * g)
                if zeta >= 0.0:
                    t = 1.0 / (zeta + np.sqrt(1.0 + zeta * zeta))
                else:
                    t = -1.0 / (-zeta + np.sqrt(1.0 + zeta * zeta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                for r in range(m):
                    wi = w[r, i]
                    wj = w[r, j] * ph
                    w[r, i] = c * wi - s * wj
                    w[r, j] = s * wi + c * wj
                if want_v:
                    for r in range(v.shape[0]):
                        vi = v[r, i]
                        vj = v[r, j] * ph
                        v[r, i] = c * vi - s * vj
                        v[r, j] = s * vi + c * vj
        if not rotated:
            break


@njit
def _svd_small(a, tol, max_sweeps):
    m, n = a.shape
    flip = m < n
    if flip:
        w = a.conj().T.copy()
    else:
        w = a.copy()
    mm, nn = w.shape
    v = np.eye(nn, dtype=np.complex128)
    _hestenes(w, v, tol, max_sweeps, True)
    s = np.empty(nn)
    for j in range(nn):
        acc = 0.0
        for r in range(mm):
            acc += w[r, j].real * w[r, j].real + w[r, j].imag * w[r, j].imag
        s[j] = np.sqrt(acc)
    order = np.argsort(-s)
    s_sorted = s[order]
    u = np.zeros((mm, nn), dtype=np.complex128)
    vv = np.empty((nn, nn), dtype=np.complex128)
    for k in range(nn):
        j = order[k]
        if s[j] > 0.0:
            for r in range(mm):
                u[r, k] = w[r, j] / s[j]
        for r in range(nn):
            vv[r, k] = v[r, j]
    if flip:
        # a^H = u s vv^H  =>  a = vv s u^H
        return vv, s_sorted, u.conj().T.copy()
    return u, s_sorted, vv.conj().T.copy()


@njit
def _singular_values_small(a, tol, max_sweeps):
    m, n = a.shape
    if m < n:
        w = a.conj().T.copy()
    else:
        w = a.copy()
    mm, nn = w.shape
    dummy = np.empty((0, 0), dtype=np.complex128)
    _hestenes(w, dummy, tol, max_sweeps, False)
    s = np.empty(nn)
    for j in range(nn):
        acc = 0.0
        for r in range(mm):
            acc += w[r, j].real * w[r, j].real + w[r, j].imag * w[r, j].imag
        s[j] = np.sqrt(acc)
    return -np.sort(-s)


@njit
def _top_triplets_batch(stack, tol, max_sweeps):
    b, m, n = stack.shape
    sig = np.empty(b)
    us = np.empty((b, m), dtype=np.complex128)
    vs = np.empty((b, n), dtype=np.complex128)
    for i in range(b):
        u, s, vh = _svd_small(stack[i], tol, max_sweeps)
        sig[i] = s[0]
        us[i] = u[:, 0]
        vs[i] = vh[0].conj()
    return sig, us, vs


@njit
def _nuclear_batch(stack, tol, max_sweeps):
    # Returns nuclear norms and the subgradients U V^* of each matrix.
    b, m, n = stack.shape
    vals = np.empty(b)
    grads = np.empty((b, m, n), dtype=np.complex128)
    for i in range(b):
        u, s, vh = _svd_small(stack[i], tol, max_sweeps)
        vals[i] = s.sum()
        g = np.zeros((m, n), dtype=np.complex128)
        for k in range(s.shape[0]):
            if s[k] > 0.0:
                for r in range(m):
                    for c in range(n):
                        g[r, c] += u[r, k] * vh[k, c]
        grads[i] = g
    return vals, grads


def _hestenes_numpy(w, tol, max_sweeps):
    """Vectorised one-sided Jacobi over a batch ``w`` of shape (B, m, n), m >= n."""
    w = w.copy()
    bsz, m, n = w.shape
    v = np.broadcast_to(np.eye(n, dtype=np.complex128), (bsz, n, n)).copy()
    for _ in range(max_sweeps):
        rotated = False
        for i in range(n - 1):
            for j in range(i + 1, n):
                wi = w[:, :, i]
                wj = w[:, :, j]
                alpha = np.einsum("br,br->b", wi.conj(), wi).real
                beta = np.einsum("br,br->b", wj.conj(), wj).real
                gamma = np.einsum("br,br->b", wi.conj(), wj)
                g = np.abs(gamma)
                act = (g > 0.0) & (g > tol * np.sqrt(alpha * beta))
                if not act.any():
                    continue
                rotated = True
                gs = np.where(act, g, 1.0)
                ph = np.where(act, (gamma / gs).conj(), 1.0)
                zeta = (beta - alpha) / (2.0 * gs)
                t = np.sign(zeta) / (np.abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                t = np.where(zeta == 0.0, 1.0, t)
                c = np.where(act, 1.0 / np.sqrt(1.0 + t * t), 1.0)
                s = np.where(act, c * t, 0.0)
                wj_ph = wj * ph[:, None]
                w[:, :, i], w[:, :, j] = c[:, None] * wi - s[:, None] * wj_ph, s[:, None] * wi + c[:, None] * wj_ph
                vi = v[:, :, i]
                vj_ph = v[:, :, j] * ph[:, None]
                v[:, :, i], v[:, :, j] = c[:, None] * vi - s[:, None] * vj_ph, s[:, None] * vi + c[:, None] * vj_ph
        if not rotated:
            break
    return w, v


def _svd_batch_numpy(stack, tol=JACOBI_TOL, max_sweeps=MAX_SWEEPS):
    stack = np.asarray(stack, dtype=np.complex128)
    _, m, n = stack.shape
    flip = m < n
    w = np.conj(np.swapaxes(stack, 1, 2)) if flip else stack
    w, v = _hestenes_numpy(w, tol, max_sweeps)
    s = np.sqrt(np.einsum("brj,brj->bj", w.conj(), w).real)
    order = np.argsort(-s, axis=1)
    s = np.take_along_axis(s, order, axis=1)
    w = np.take_along_axis(w, order[:, None, :], axis=2)
    v = np.take_along_axis(v, order[:, None, :], axis=2)
    safe = np.where(s > 0.0, s, 1.0)
    u = np.where(s[:, None, :] > 0.0, w / safe[:, None, :], 0.0)
    if flip:
        return v, s, np.conj(np.swapaxes(u, 1, 2))
    return u, s, np.conj(np.swapaxes(v, 1, 2))


def svd_batch(stack, tol=JACOBI_TOL):
    """Thin SVD of every matrix in a (B, m, n) stack: ``(u, s, vh)``."""
    stack = np.ascontiguousarray(stack, dtype=np.complex128)
    if stack.ndim != 3 or 0 in stack.shape[1:]:
        raise EmptyInputError(f"bad stack shape {stack.shape}")
    if not USE_NUMBA:
        return _svd_batch_numpy(stack, tol)
    b, m, n = stack.shape
    r = min(m, n)
    us = np.empty((b, m, r), dtype=np.complex128)
    ss = np.empty((b, r))
    vhs = np.empty((b, r, n), dtype=np.complex128)
    for i in range(b):
        us[i], ss[i], vhs[i] = _svd_small(stack[i], tol, MAX_SWEEPS)
    return us, ss, vhs


def top_singular_batch(stack, tol=JACOBI_TOL):
    """Largest singular value with its left/right singular vectors, per matrix."""
    stack = np.ascontiguousarray(stack, dtype=np.complex128)
    if stack.ndim != 3 or 0 in stack.shape[1:]:
        raise EmptyInputError(f"bad stack shape {stack.shape}")
    if USE_NUMBA:
        return _top_triplets_batch(stack, tol, MAX_SWEEPS)
    u, s, vh = _svd_batch_numpy(stack, tol)
    return s[:, 0], u[:, :, 0], vh[:, 0, :].conj()


def nuclear_batch(stack, tol=JACOBI_TOL):
    """Nuclear norms and ``U V*`` subgradients of a (B, m, n) stack."""
    stack = np.ascontiguousarray(stack, dtype=np.complex128)
    if stack.ndim != 3 or 0 in stack.shape[1:]:
        raise EmptyInputError(f"bad stack shape {stack.shape}")
    if USE_NUMBA:
        return _nuclear_batch(stack, tol, MAX_SWEEPS)
    u, s, vh = _svd_batch_numpy(stack, tol)
    grads = np.einsum("bik,bk,bkj->bij", u, (s > 0).astype(float), vh)
    return s.sum(axis=1), grads


def svd(a, tol=JACOBI_TOL):
    """Thin SVD ``a = u @ diag(s) @ vh`` with ``s`` sorted descending."""
    a = as_cmatrix(a)
    if USE_NUMBA:
        return _svd_small(a, tol, MAX_SWEEPS)
    u, s, vh = _svd_batch_numpy(a[None], tol)
    return u[0], s[0], vh[0]


def singular_values(a, tol=JACOBI_TOL):
    a = as_cmatrix(a)
    if USE_NUMBA:
        return _singular_values_small(a, tol, MAX_SWEEPS)
    return _svd_batch_numpy(a[None], tol)[1][0]


def spectral_norm(a):
    """Largest singular value."""
    return float(singular_values(a)[0])


def nuclear_norm(a):
    """Sum of singular values (trace-class norm)."""
    return float(singular_values(a).sum())


def frobenius(a):
    a = as_cmatrix(a)
    return float(np.sqrt(np.sum(a.real**2 + a.imag**2)))


def rank(a, rtol=1e-10):
    s = singular_values(a)
    return int(np.sum(s > rtol * max(s[0], 1e-300)))


def kron(a, b):
    """Kronecker product, shape ``(ra*rb, ca*cb)``."""
    return np.kron(as_cmatrix(a), as_cmatrix(b))


# ---------------------------------------------------------------------------
# Torus maximisation for MIN(l1) matrix norms


@njit
def _torus_ascent(stack, starts, max_iter, tol):
    # max over unimodular w of ||sum_m w_m A_m||, by alternating phase alignment
    nm, k, _ = stack.shape
    best = -1.0
    best_w = starts[0].copy()
    for r in range(starts.shape[0]):
        w = starts[r].copy()
        prev = -1.0
        for _ in range(max_iter):
            s_mat = np.zeros((k, k), dtype=np.complex128)
            for m in range(nm):
                s_mat += w[m] * stack[m]
            u, s, vh = _svd_small(s_mat, 1e-13, 60)
            val = s[0]
            if val <= prev * (1.0 + tol):
                prev = max(val, prev)
                break
            prev = val
            uu = u[:, 0]
            vv = vh[0].conj()
            for m in range(nm):
                c = 0j
                for i in range(k):
                    for j in range(k):
                        c += uu[i].conjugate() * stack[m, i, j] * vv[j]
                if abs(c) > 0.0:
                    w[m] = (c / abs(c)).conjugate()
        if prev > best:
            best = prev
            best_w = w.copy()
    return best, best_w


def torus_spectral_max(stack, restarts=16, seed=0, max_iter=200, tol=1e-13):
    """Lower bound on ``sup_w ||sum_m w_m A_m||`` over the torus, with its maximiser.

    Starts are the all-ones phase vector followed by ``restarts - 1`` random
    phase vectors drawn from ``numpy.random.default_rng(seed)``.
    """
    stack = np.ascontiguousarray(stack, dtype=np.complex128)
    nm = stack.shape[0]
    rng = np.random.default_rng(seed)
    starts = np.ones((max(restarts, 1), nm), dtype=np.complex128)
    if restarts > 1:
        starts[1:] = np.exp(2j * np.pi * rng.random((restarts - 1, nm)))
    val, w = _torus_ascent(stack, starts, max_iter, tol)
    return float(val), w


# ---------------------------------------------------------------------------
# Minimum l1-norm preimage (dense simplex, Bland's rule)


@njit
def _pivot(t, row, col):
    t[row] /= t[row, col]
    for i in range(t.shape[0]):
        if i != row:
            f = t[i, col]
            if f != 0.0:
                t[i] -= f * t[row]


@njit
def _ratio_row(t, basis, col, nrows, tol):
    rhs = t.shape[1] - 1
    best = -1
    best_ratio = 0.0
    for i in range(nrows):
        if t[i, col] > tol:
            ratio = t[i, rhs] / t[i, col]
            if best < 0 or ratio < best_ratio - tol:
                best = i
                best_ratio = ratio
            elif ratio <= best_ratio + tol and basis[i] < basis[best]:
                best = i
                best_ratio = min(ratio, best_ratio)
    return best


@njit
def _bland(t, basis, nrows, nallowed, tol):
    obj = nrows
    for _ in range(10000):
        enter = -1
        for j in range(nallowed):
            if t[obj, j] < -tol:
                enter = j
                break
        if enter < 0:
            return 0
        row = _ratio_row(t, basis, enter, nrows, tol)
        if row < 0:
            return 3
        _pivot(t, row, enter)
        basis[row] = enter
    return 4


@njit
def _l1_basis(q, x, tol):
    # status: 0 ok, 1 infeasible, 2 rank deficient, 3 unbounded, 4 cycling
    nr, m = q.shape
    nv = 2 * m
    ncol = nv + nr
    t = np.zeros((nr + 1, ncol + 1))
    for i in range(nr):
        sgn = 1.0 if x[i] >= 0.0 else -1.0
        for j in range(m):
            t[i, j] = sgn * q[i, j]
            t[i, m + j] = -sgn * q[i, j]
        t[i, nv + i] = 1.0
        t[i, ncol] = sgn * x[i]
    basis = np.empty(nr, dtype=np.int64)
    for i in range(nr):
        basis[i] = nv + i
    for i in range(nr):
        for j in range(nv):
            t[nr, j] -= t[i, j]
        t[nr, ncol] -= t[i, ncol]
    status = _bland(t, basis, nr, nv, tol)
    if status != 0:
        return basis, status
    if -t[nr, ncol] > 1e3 * tol:
        return basis, 1
    for i in range(nr):
        if basis[i] >= nv:
            piv = -1
            for j in range(nv):
                if abs(t[i, j]) > 1e3 * tol:
                    piv = j
                    break
            if piv < 0:
                return basis, 2
            _pivot(t, i, piv)
            basis[i] = piv
    # phase 2: unit costs on all split variables
    for j in range(ncol + 1):
        t[nr, j] = 0.0
    for j in range(nv):
        t[nr, j] = 1.0
    for i in range(nr):
        for j in range(ncol + 1):
            t[nr, j] -= t[i, j]
    status = _bland(t, basis, nr, nv, tol)
    if status != 0:
        return basis, status
    # degenerate optimal pivots towards the lexicographically smallest basis
    changed = True
    while changed:
        changed = False
        for j in range(nv):
            isbasic = False
            for i in range(nr):
                if basis[i] == j:
                    isbasic = True
            if isbasic or abs(t[nr, j]) > tol:
                continue
            row = _ratio_row(t, basis, j, nr, tol)
            if row >= 0 and basis[row] > j:
                _pivot(t, row, j)
                basis[row] = j
                changed = True
                break
    return basis, 0


def _solve_basis(q, basis, x):
    m = q.shape[1]
    full = np.hstack([q, -q])
    z_b = np.linalg.solve(full[:, basis], x)
    z = np.zeros(2 * m)
    z[basis] = z_b
    return z[:m] - z[m:]


def l1_basis(q, x, tol=1e-11):
    """Optimal simplex basis for ``min ||y||_1 s.t. q y = x`` (indices into ``[q, -q]``)."""
    q = np.ascontiguousarray(q, dtype=np.float64)
    x = np.ascontiguousarray(x, dtype=np.float64)
    scale = np.max(np.abs(x)) if x.size else 0.0
    if scale == 0.0:
        return None
    basis, status = _l1_basis(q, x / scale, tol)
    if status == 1:
        raise NoPreimageError("q y = x has no solution")
    if status == 2:
        raise DegenerateQuotientError("quotient matrix is rank deficient")
    if status != 0:
        raise RuntimeError(f"simplex failed with status {status}")
    return basis


def min_l1_preimage(q, x, tol=1e-11):
    """Basic solution of ``q y = x`` with least l1 norm.

    ``q`` and ``x`` are real. The basis is found on ``x / max|x|`` and then
    re-solved against ``x`` itself, so the map ``x -> y`` is positively
    homogeneous: scaling ``x`` by ``a > 0`` selects the same basis.
    """
    q = np.asarray(q)
    x = np.asarray(x)
    if np.iscomplexobj(q) or np.iscomplexobj(x):
        if np.any(np.imag(q) != 0) or np.any(np.imag(x) != 0):
            raise ValueError("min_l1_preimage is a real LP; split complex data first")
        q, x = q.real, x.real
    q = np.asarray(q, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64).ravel()
    if q.size == 0:
        raise EmptyInputError("empty quotient matrix")
    if q.shape[0] != x.shape[0]:
        raise ValueError(f"shape mismatch: q {q.shape}, x {x.shape}")
    if np.linalg.matrix_rank(q) < q.shape[0]:
        raise DegenerateQuotientError("quotient matrix does not have full row rank")
    basis = l1_basis(q, x, tol)
    if basis is None:
        return np.zeros(q.shape[1])
    return _solve_basis(q, basis, x)
