"""Certified complex interpolation norms for finite-dimensional couples.

Upper bounds come from explicit analytic functions on the strip
``0 <= Re z <= 1``; lower bounds from functionals, using either the geometric
mean of the two dual norms or an analytic upper bound on the dual couple.

Candidates are ``f(z) = exp(lam (z - theta)) sum_j exp(kappa_j (z - theta))
p_j(phi(z))`` with vector polynomials ``p_j`` and ``phi`` the strip-to-disk map
sending ``theta`` to 0. Optimising the common rate ``lam`` in closed form turns
the Calderon objective into ``(sup_0 |g|_0)^(1-theta) (sup_1 |g|_1)^theta`` for
the remaining factor ``g``, so the constant candidate reproduces the geometric
mean. The extra rates ``kappa_j`` let the boundary modulus jump where the two
edges meet at infinity, which polynomials in ``phi`` alone cannot do.
"""

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from . import numerics as nx
from . import opspaces as osp


class DegenerateCertificateError(ValueError):
    pass


class DefinitenessError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Endpoint norms on C^D


class Endpoint:
    """A norm on ``C^D`` with subgradients.

    ``value_grad(X)`` takes a batch ``(B, D)`` and returns values ``(B,)`` and
    gradients ``g`` with ``d|x| = Re <g, dx>`` (``<a, b> = sum conj(a) b``).
    """

    dim: int

    def value_grad(self, X):
        raise NotImplementedError

    def values(self, X):
        return self.value_grad(X)[0]

    def __call__(self, x):
        return float(self.values(np.asarray(x, dtype=np.complex128)[None])[0])

    def dual(self):
        return None


class _PermutedMatrixEndpoint(Endpoint):
    def __init__(self, kind, d, n):
        self.kind, self.d, self.n = kind, d, n
        self.dim = d * n * n
        idx = np.arange(self.dim).reshape(d, n, n)
        form = osp.matrix_form(kind, idx)
        self.shape = form.shape
        self.perm = form.ravel()

    def _mats(self, X):
        X = np.asarray(X, dtype=np.complex128)
        return X[:, self.perm].reshape((X.shape[0],) + self.shape)

    def _pull(self, G):
        out = np.empty((G.shape[0], self.dim), dtype=np.complex128)
        out[:, self.perm] = G.reshape(G.shape[0], -1)
        return out


class SpectralEndpoint(_PermutedMatrixEndpoint):
    """``M_n`` norm of Row/Column/RowOp/ColumnOp on flattened coords."""

    def value_grad(self, X):
        s, u, v = nx.top_singular_batch(self._mats(X))
        g = u[:, :, None] * v.conj()[:, None, :]
        g[s == 0.0] = 0.0
        return s, self._pull(g)

    def dual(self):
        return NuclearEndpoint(self.kind, self.d, self.n)


class NuclearEndpoint(_PermutedMatrixEndpoint):
    """Dual norm of a :class:`SpectralEndpoint` under the trace pairing."""

    def value_grad(self, X):
        vals, g = nx.nuclear_batch(self._mats(X))
        return vals, self._pull(g)

    def dual(self):
        return SpectralEndpoint(self.kind, self.d, self.n)


class HilbertEndpoint(Endpoint):
    """``sqrt(x^* S x)`` for positive definite ``S``."""

    def __init__(self, S):
        S = np.asarray(S, dtype=np.complex128)
        if S.ndim != 2 or S.shape[0] != S.shape[1]:
            raise DefinitenessError("S must be square")
        S = 0.5 * (S + S.conj().T)
        if np.linalg.eigvalsh(S).min() <= 0.0:
            raise DefinitenessError("S must be positive definite")
        self.S = S
        self.dim = S.shape[0]

    def value_grad(self, X):
        X = np.asarray(X, dtype=np.complex128)
        SX = X @ self.S.T
        vals = np.sqrt(np.maximum(np.einsum("bi,bi->b", X.conj(), SX).real, 0.0))
        safe = np.where(vals > 0.0, vals, 1.0)
        g = np.where(vals[:, None] > 0.0, SX / safe[:, None], 0.0)
        return vals, g

    def dual(self):
        return HilbertEndpoint(np.linalg.inv(self.S))


class CallableEndpoint(Endpoint):
    """Wraps a plain norm oracle; gradients by central differences."""

    def __init__(self, fn, dim, h=1e-7):
        self.fn, self.dim, self.h = fn, dim, h

    def value_grad(self, X):
        X = np.asarray(X, dtype=np.complex128)
        vals = np.array([self.fn(x) for x in X], dtype=float)
        g = np.zeros_like(X)
        for b, x in enumerate(X):
            for i in range(self.dim):
                for unit in (1.0, 1j):
                    e = np.zeros(self.dim, dtype=np.complex128)
                    e[i] = unit * self.h
                    dv = (self.fn(x + e) - self.fn(x - e)) / (2 * self.h)
                    # d|x| = Re(conj(g_i) unit dt)  =>  Re g_i or Im g_i
                    g[b, i] += dv if unit == 1.0 else 1j * dv
        return vals, g


@dataclass(frozen=True)
class NormCouple:
    norm0: Endpoint
    norm1: Endpoint

    def __post_init__(self):
        if self.norm0.dim != self.norm1.dim:
            raise ValueError("endpoints act on different dimensions")

    @property
    def dimension(self):
        return self.norm0.dim

    def dual(self):
        d0, d1 = self.norm0.dual(), self.norm1.dual()
        if d0 is None or d1 is None:
            return None
        return NormCouple(d0, d1)


def matrix_couple(kind0, kind1, d, n):
    return NormCouple(SpectralEndpoint(kind0, d, n), SpectralEndpoint(kind1, d, n))


def row_couple(d, n):
    """``(M_n(R), M_n(R^op))`` on flattened coords."""
    return matrix_couple("Row", "RowOp", d, n)


def hilbert_couple(S0, S1):
    return NormCouple(HilbertEndpoint(S0), HilbertEndpoint(S1))


# ---------------------------------------------------------------------------
# Strip geometry


def phi(z, theta):
    """Conformal map of the strip onto the unit disk with ``phi(theta) = 0``."""
    e = np.exp(1j * np.pi * np.asarray(z, dtype=np.complex128))
    return (e - np.exp(1j * np.pi * theta)) / (e - np.exp(-1j * np.pi * theta))


def phi_inverse(w, theta):
    a = np.exp(1j * np.pi * theta)
    w = np.asarray(w, dtype=np.complex128)
    s = (a - w * np.conj(a)) / (1.0 - w)
    return np.log(s) / (1j * np.pi)


def arc_angles(theta, edge, count):
    """Cell midpoints of the disk arc that is the image of ``Re z = edge``."""
    if edge == 1:
        lo, hi = 0.0, 2 * np.pi * theta
    else:
        lo, hi = 2 * np.pi * theta, 2 * np.pi
    h = (hi - lo) / count
    return lo + h * (np.arange(count) + 0.5), h


def edge_heights(theta, edge, count):
    """Heights ``y`` with ``phi(edge + iy)`` at the arc cell midpoints."""
    ang, _ = arc_angles(theta, edge, count)
    return phi_inverse(np.exp(1j * ang), theta).imag


def limit_points(theta):
    """``phi(edge + iy)`` as ``y -> +inf`` and ``y -> -inf`` (the same for both edges)."""
    return np.exp(2j * np.pi * theta), 1.0 + 0j


def tail_distance(Y):
    """Bound on ``|phi(edge + iy) - limit|`` for ``|y| >= Y``."""
    return 2.0 / np.expm1(np.pi * Y)


def phi_speed(theta, edge):
    """``sup_y |d/dy phi(edge + iy)|``."""
    c = np.cos(np.pi * theta)
    return 2.0 * np.pi * np.sin(np.pi * theta) / (2.0 - 2.0 * c if edge == 0 else 2.0 + 2.0 * c)


def certify_sup(fn, lo, hi, lip, cells=256, rtol=2e-4, max_evals=400_000):
    """Upper bound on ``sup_{[lo, hi]} fn`` for ``fn`` that is ``lip``-Lipschitz.

    Cells whose Lipschitz bound could exceed the running maximum by more than
    ``rtol`` are split in four until the evaluation budget runs out.
    """
    h = (hi - lo) / cells
    centers = lo + h * (np.arange(cells) + 0.5)
    best = -np.inf
    settled = -np.inf
    evals = 0
    while True:
        vals = fn(centers)
        evals += centers.size
        best = max(best, float(vals.max()))
        bound = vals + 0.5 * h * lip
        target = best + rtol * abs(best)
        open_ = bound > target
        if np.any(~open_):
            settled = max(settled, float(bound[~open_].max()))
        if not np.any(open_):
            return max(settled, best), best, evals
        if evals + 4 * int(open_.sum()) > max_evals:
            return max(settled, float(bound[open_].max()), best), best, evals
        centers = (centers[open_][:, None] + h * np.array([-0.375, -0.125, 0.125, 0.375])[None, :]).ravel()
        h *= 0.25


# ---------------------------------------------------------------------------
# Calderon upper bound


@dataclass(frozen=True)
class Budget:
    degree: int = 2
    kappa_step: float = 0.5
    kappa_count: int = 4
    points: int = 128
    tail_points: int = 48
    restarts: int = 8
    steps: int = 2000
    cutoff: float = 4.0
    verify_rtol: float = 1e-3
    max_verify_evals: int = 400_000
    seed: int = 0

    def scaled(self, **kw):
        return replace(self, **kw)


DEFAULT_BUDGET = Budget()


@dataclass
class CalderonResult:
    upper: float
    objective: float
    margin: float
    geometric: float
    coeffs: np.ndarray
    envelope: np.ndarray
    fallback: bool = False
    verify_evals: int = 0

    @property
    def kind(self):
        return "geometric" if self.fallback or self.upper >= self.geometric else "calderon"


class CalderonSolver:
    """Minimises the boundary objective over exponential-polynomial candidates.

    ``f(z) = sum_j exp(kappa_j (z - theta)) p_j(phi(z))`` with
    ``kappa_j = kappa_step * (j - J)``; a further common factor
    ``exp(lam (z - theta))`` is optimised in closed form. One solver owns its
    optimizer state; build one per task.
    """

    BETAS = (30.0, 100.0, 300.0, 1000.0, 3000.0, 10000.0)

    def __init__(self, couple, theta, budget=None):
        if not 0.0 < theta < 1.0:
            raise ValueError(f"Calderon solver needs theta in (0, 1), got {theta}")
        self.couple = couple
        self.theta = float(theta)
        self.budget = b = budget or DEFAULT_BUDGET
        self.P = b.degree
        self.J = b.kappa_count if b.kappa_step > 0 else 0
        self.kappas = b.kappa_step * (np.arange(2 * self.J + 1) - self.J)
        self.nb = (2 * self.J + 1) * (self.P + 1)
        self.center = self.J * (self.P + 1)
        self.coef = (1.0 - self.theta, self.theta)
        self.ends = (couple.norm0, couple.norm1)
        self.grid = []
        for e in (0, 1):
            rows = [self.basis(e, edge_heights(self.theta, e, b.points))]
            if self.J:
                period = 2 * np.pi / b.kappa_step
                ty = period * (np.arange(b.tail_points) + 0.5) / b.tail_points
                for wl in limit_points(self.theta):
                    rows.append(self.basis(e, ty, wl))
            self.grid.append(np.vstack(rows))

    def basis(self, edge, y, w=None):
        """Rows ``exp(kappa_j (z - theta)) w^p`` flattened over ``(j, p)``."""
        y = np.asarray(y, dtype=float)
        z = edge + 1j * y
        if w is None:
            w = phi(z, self.theta)
        w = np.broadcast_to(np.asarray(w, dtype=np.complex128), y.shape)
        ex = np.exp(np.outer(z - self.theta, self.kappas))
        pw = w[:, None] ** np.arange(self.P + 1)[None, :]
        return (ex[:, :, None] * pw[:, None, :]).reshape(y.size, self.nb)

    def full_coeffs(self, v, x):
        D = self.couple.dimension
        nfree = (self.nb - 1) * D
        free = (v[:nfree] + 1j * v[nfree:]).reshape(self.nb - 1, D)
        C = np.insert(free, self.center, 0.0, axis=0)
        C[self.center] = x - C[:: self.P + 1].sum(axis=0)
        return C

    def _soft(self, v, x, beta, alpha):
        """Smoothed ``max_{e,t} alpha_e |f(edge_e + i y_t)|_e``; convex in the coefficients."""
        C = self.full_coeffs(v, x)
        vals, grads = [], []
        for e in (0, 1):
            val, g = self.ends[e].value_grad(self.grid[e] @ C)
            vals.append(alpha[e] * val)
            grads.append(alpha[e] * g)
        allv = np.concatenate(vals)
        top = allv.max()
        w = np.exp(beta * (allv - top))
        ssum = w.sum()
        total = top + np.log(ssum) / beta
        w = w / ssum
        gC = np.zeros_like(C)
        k = 0
        for e in (0, 1):
            m = vals[e].size
            gC += self.grid[e].conj().T @ (w[k : k + m, None] * grads[e])
            k += m
        gx = gC[self.center].copy()
        # a_j for j != center shift mass off the centre constant term
        gC[:: self.P + 1] -= gx
        gfree = np.delete(gC, self.center, axis=0)
        return total, np.concatenate([gfree.real.ravel(), gfree.imag.ravel()]), gx

    def edge_bound(self, e, C):
        """Certified ``sup_y |f_e(y)|`` (without the closed-form factor)."""
        b = self.budget
        end = self.ends[e]
        Cj = C.reshape(2 * self.J + 1, self.P + 1, -1)
        mods = np.exp(self.kappas * (e - self.theta))
        cn = end.values(C).reshape(2 * self.J + 1, self.P + 1)
        B = cn.sum(axis=1)
        Bd = (cn * np.arange(self.P + 1)).sum(axis=1)
        lip = float(np.sum(mods * (np.abs(self.kappas) * B + Bd * phi_speed(self.theta, e))))
        fn = lambda y: end.values(self.basis(e, y) @ C)
        core, core_seen, evals = certify_sup(fn, -b.cutoff, b.cutoff, lip, rtol=b.verify_rtol, max_evals=b.max_verify_evals)
        delta = tail_distance(b.cutoff)
        tail_err = float(np.sum(mods * Bd)) * delta
        seen = core_seen
        bound = core
        for wl in limit_points(self.theta):
            if self.J:
                vl = np.array([end(Cj[j].T @ (wl ** np.arange(self.P + 1))) for j in range(2 * self.J + 1)])
                tlip = float(np.sum(mods * np.abs(self.kappas) * vl))
                period = 2 * np.pi / b.kappa_step
                fl = lambda y, wl=wl: end.values(self.basis(e, y, wl) @ C)
                tb, tseen, te = certify_sup(fl, 0.0, period, tlip, cells=64, rtol=b.verify_rtol, max_evals=b.max_verify_evals)
                evals += te
            else:
                tb = tseen = end(Cj[0].T @ (wl ** np.arange(self.P + 1)))
            bound = max(bound, tb + tail_err)
            seen = max(seen, tseen)
        return bound, seen, evals

    def certify(self, x, C):
        b0, s0, e0 = self.edge_bound(0, C)
        b1, s1, e1 = self.edge_bound(1, C)
        up = b0 ** self.coef[0] * b1 ** self.coef[1]
        obj = s0 ** self.coef[0] * s1 ** self.coef[1]
        return up, obj, up - obj, e0 + e1

    def _grid_max(self, C):
        return [float(self.ends[e].values(self.grid[e] @ C).max()) for e in (0, 1)]

    def solve(self, x):
        x = np.asarray(x, dtype=np.complex128).ravel()
        D = self.couple.dimension
        if x.shape[0] != D:
            raise ValueError(f"vector has dimension {x.shape[0]}, couple needs {D}")
        n0, n1 = self.ends[0](x), self.ends[1](x)
        geo = n0 ** self.coef[0] * n1 ** self.coef[1]
        nvar = 2 * (self.nb - 1) * D
        if geo == 0.0:
            return CalderonResult(0.0, 0.0, 0.0, 0.0, np.zeros((self.nb, D), complex), np.zeros(D, complex))
        per_stage = max(1, self.budget.steps // len(self.BETAS))
        v = np.zeros(nvar)
        C = self.full_coeffs(v, x)
        lam = np.log(n0 / n1)
        best = (geo, C, lam)
        gx = np.zeros(D, dtype=np.complex128)
        for rnd in range(max(1, self.budget.restarts)):
            # common factor exp(lam (z - theta)) has modulus alpha_e on edge e
            alpha = (np.exp(-lam * self.theta) / geo, np.exp(lam * (1.0 - self.theta)) / geo)
            if nvar:
                betas = self.BETAS if rnd == 0 else self.BETAS[-2:]
                for beta in betas:
                    res = minimize(
                        lambda vv, bb=beta: self._soft(vv, x, bb, alpha)[:2],
                        v,
                        jac=True,
                        method="L-BFGS-B",
                        options={"maxiter": per_stage, "gtol": 1e-12, "ftol": 1e-15},
                    )
                    v = res.x
                gx = self._soft(v, x, self.BETAS[-1], alpha)[2]
            C = self.full_coeffs(v, x)
            m0, m1 = self._grid_max(C)
            score = m0 ** self.coef[0] * m1 ** self.coef[1]
            improved = score < best[0] * (1.0 - 1e-5)
            if score < best[0]:
                best = (score, C, lam)
            new_lam = np.log(m0 / m1)
            if not improved or abs(new_lam - lam) < 1e-4:
                break
            lam = new_lam
        _, C, _ = best
        up, obj, margin, evals = self.certify(x, C)
        fallback = not np.isfinite(up)
        if fallback:
            up = geo
        return CalderonResult(float(min(up, geo)), float(obj), float(margin), float(geo), C, gx, fallback, evals)


def upper_geometric(x, couple, theta):
    x = np.asarray(x, dtype=np.complex128).ravel()
    return float(couple.norm0(x) ** (1.0 - theta) * couple.norm1(x) ** theta)


def upper_calderon(x, couple, theta, budget=None):
    """Certified Calderon upper bound; returns the :class:`CalderonResult`."""
    return CalderonSolver(couple, theta, budget).solve(x)


# ---------------------------------------------------------------------------
# Dual lower bounds


@dataclass(frozen=True)
class DualCertificate:
    functional: np.ndarray
    pairing: float
    dual0: float
    dual1: float
    lower: float
    kind: str = "geometric"

    def to_json(self):
        return {"pairing": self.pairing, "dual0": self.dual0, "dual1": self.dual1, "lower": self.lower, "kind": self.kind}


def lower_dual(x, couple, theta, xi, dual_couple=None):
    """``|<xi, x>| / (|xi|_0*^(1-theta) |xi|_1*^theta)``."""
    x = np.asarray(x, dtype=np.complex128).ravel()
    xi = np.asarray(xi, dtype=np.complex128).ravel()
    if not np.any(xi):
        raise DegenerateCertificateError("zero functional gives no lower bound")
    dual_couple = dual_couple or couple.dual()
    if dual_couple is None:
        raise DegenerateCertificateError("couple has no dual norms")
    pair = abs(np.vdot(xi, x))
    d0, d1 = dual_couple.norm0(xi), dual_couple.norm1(xi)
    den = d0 ** (1.0 - theta) * d1**theta
    if den == 0.0:
        raise DegenerateCertificateError("functional has zero dual norm")
    return DualCertificate(xi, float(pair), float(d0), float(d1), float(pair / den))


def lower_dual_analytic(x, couple, theta, xi, budget=None, dual_couple=None):
    """``|<xi, x>|`` over a certified Calderon upper bound for ``xi`` in the dual couple.

    Valid because the dual interpolation norm is dominated by any admissible
    function for ``xi`` (three-lines bound on ``<F(z), conj(G(conj z))>``).
    """
    x = np.asarray(x, dtype=np.complex128).ravel()
    xi = np.asarray(xi, dtype=np.complex128).ravel()
    if not np.any(xi):
        raise DegenerateCertificateError("zero functional gives no lower bound")
    dual_couple = dual_couple or couple.dual()
    if dual_couple is None:
        raise DegenerateCertificateError("couple has no dual norms")
    res = upper_calderon(xi, dual_couple, theta, budget)
    pair = abs(np.vdot(xi, x))
    return DualCertificate(xi, float(pair), dual_couple.norm0(xi), dual_couple.norm1(xi), float(pair / res.upper), "analytic")


# ---------------------------------------------------------------------------
# Brackets


@dataclass(frozen=True)
class InterpCertificate:
    theta: float
    lower: float
    upper: float
    exact: bool
    upper_kind: str
    margin: float
    lower_kind: str = ""
    flags: tuple = field(default_factory=tuple)

    def to_json(self):
        return {
            "theta": self.theta,
            "lower": self.lower,
            "upper": self.upper,
            "exact": self.exact,
            "upper_kind": self.upper_kind,
            "margin": self.margin,
        }

    def as_norm_certificate(self):
        if self.exact:
            return osp.NormCertificate.exact_value(0.5 * (self.lower + self.upper))
        return osp.NormCertificate.bracket(self.lower, self.upper, flags=self.flags)


def lemma32_functional_vector(n):
    """Flattened coords of ``sum_k E_{k1}`` placed on basis vector ``k``: the
    functional pairing to ``n`` against the outer-column element."""
    c = np.zeros((n, n, n), dtype=np.complex128)
    for k in range(n):
        c[k, k, 0] = 1.0
    return c.ravel()


def _is_column_of_basis(x, d, n):
    if d != n:
        return False
    return np.allclose(x.reshape(d, n, n), lemma32_functional_vector(n).reshape(d, n, n) * x.reshape(d, n, n)[0, 0, 0])


def bracket(x, couple, theta, budget=None, extra_functionals=(), analytic=True):
    """Certified interval for the ``theta``-interpolation norm of ``x``."""
    x = np.asarray(x, dtype=np.complex128).ravel()
    theta = float(theta)
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"theta must lie in [0, 1], got {theta}")
    if theta in (0.0, 1.0):
        v = (couple.norm0 if theta == 0.0 else couple.norm1)(x)
        return InterpCertificate(theta, max(0.0, v - nx.CERT_SLACK), v + nx.CERT_SLACK, True, "geometric", 0.0, "endpoint")
    geo = upper_geometric(x, couple, theta)
    if geo == 0.0:
        return InterpCertificate(theta, 0.0, nx.CERT_SLACK, True, "geometric", 0.0, "zero")
    dual_couple = couple.dual()
    funcs = [end.value_grad(x[None])[1][0] for end in (couple.norm0, couple.norm1)]
    shape_d = getattr(couple.norm0, "d", None)
    shape_n = getattr(couple.norm0, "n", None)
    if shape_d is not None and _is_column_of_basis(x, shape_d, shape_n):
        funcs.append(lemma32_functional_vector(shape_n))
    funcs.extend(np.asarray(f, dtype=np.complex128).ravel() for f in extra_functionals)

    lower, lower_kind = 0.0, ""

    def offer(xis):
        nonlocal lower, lower_kind
        if dual_couple is None:
            return
        for xi in xis:
            if np.any(xi):
                cert = lower_dual(x, couple, theta, xi, dual_couple)
                if cert.lower > lower:
                    lower, lower_kind = cert.lower, "geometric-dual"

    offer(funcs)
    slack = nx.CERT_SLACK
    if lower >= geo * (1.0 - 1e-12):
        # a functional already meets the geometric mean: the value is pinned
        return InterpCertificate(theta, max(0.0, lower - slack), geo + slack, True, "geometric", 0.0, lower_kind)

    res = upper_calderon(x, couple, theta, budget)
    if res.upper < geo:
        upper, kind, margin = res.upper, "calderon", res.margin
    else:
        upper, kind, margin = geo, "geometric", 0.0
    if np.any(res.envelope):
        offer([res.envelope])
        if analytic and dual_couple is not None:
            cert = lower_dual_analytic(x, couple, theta, res.envelope, budget, dual_couple)
            if cert.lower > lower:
                lower, lower_kind = cert.lower, "analytic-dual"
    flags = ()
    if lower > upper:
        flags = ("widened",)
        lower, upper = upper, lower
    return InterpCertificate(theta, max(0.0, float(lower) - slack), float(upper) + slack, False, kind, float(margin), lower_kind, flags)


def hilbert_couple_exact(S0, S1, theta, x):
    """Exact ``theta``-interpolation norm for two Hilbertian norms ``x^* S_i x``."""
    S0 = np.asarray(S0, dtype=np.complex128)
    S1 = np.asarray(S1, dtype=np.complex128)
    for S in (S0, S1):
        if S.ndim != 2 or S.shape[0] != S.shape[1]:
            raise DefinitenessError("matrices must be square")
        if not np.allclose(S, S.conj().T) or np.linalg.eigvalsh(S).min() <= 0.0:
            raise DefinitenessError("matrices must be Hermitian positive definite")
    w, U = np.linalg.eigh(S0)
    half = (U * np.sqrt(w)) @ U.conj().T
    ihalf = (U / np.sqrt(w)) @ U.conj().T
    M = ihalf @ S1 @ ihalf
    mw, MU = np.linalg.eigh(0.5 * (M + M.conj().T))
    Mt = (MU * mw**theta) @ MU.conj().T
    St = half @ Mt @ half
    x = np.asarray(x, dtype=np.complex128)
    return float(np.sqrt(max(np.vdot(x, St @ x).real, 0.0)))


def interp_rc_norm(x, budget=None):
    """Norm certificate of an InterpRC element via the couple ``(Row, RowOp)``."""
    theta = x.space.theta
    couple = row_couple(x.d, x.n)
    return bracket(x.coords.ravel(), couple, theta, budget).as_norm_certificate()
