"""Homogeneous sections, the l1-sum Z(Q) of renormed copies of Y, and spherical gluing.

The concrete quotient is ``Q: MIN(l1^M) -> MIN(l_inf^N)`` whose ``M = 2^(N-1)``
columns are the sign vectors with first entry ``+1``. Elements of ``M_k(Z)``
are finitely supported maps ``m -> (M, k, k)`` coordinate arrays; ``Y_m`` has
``|[y_ij]|_m = max(2^-m |[y_ij]|_{M_k(Y)}, |[Q y_ij]|_{M_k(X)})``.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import numerics as nx
from . import opspaces as osp

RESIDUAL_TOL = 1e-9


# ---------------------------------------------------------------------------
# Quotient data


@dataclass(frozen=True, eq=False)
class QuotientMapData:
    Q: np.ndarray
    source: osp.OsDescriptor
    target: osp.OsDescriptor
    delta: float
    C: float

    @property
    def N(self):
        return self.Q.shape[0]

    @property
    def M(self):
        return self.Q.shape[1]

    def apply(self, y):
        """``Q`` on coordinates: ``(M, ...) -> (N, ...)``."""
        return np.tensordot(self.Q, np.asarray(y), axes=(1, 0))

    def extreme_point_bound(self):
        """Largest l1-minimal preimage norm over the real sign vectors of ``{+-1}^N``."""
        worst = 0.0
        for signs in itertools.product((1.0, -1.0), repeat=self.N):
            y = nx.min_l1_preimage(self.Q, np.array(signs))
            worst = max(worst, float(np.abs(y).sum()))
        return worst


def sign_quotient(N):
    """Sign-vector quotient ``MIN(l1^(2^(N-1))) -> MIN(l_inf^N)``.

    Every real sign vector is a column up to sign, so the real section has
    norm 1. Over complex scalars the section splits real and imaginary parts,
    which doubles the bound: ``C = 2``, ``delta = 1/2``.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    cols = [(1.0,) + tail for tail in itertools.product((1.0, -1.0), repeat=N - 1)]
    Q = np.array(cols, dtype=np.float64).T
    Q.setflags(write=False)
    return QuotientMapData(Q, osp.MinL1(Q.shape[1]), osp.MinLinf(N), 0.5, 2.0)


def linf(x):
    return float(np.max(np.abs(x))) if np.size(x) else 0.0


def real_section(q, x):
    """l1-minimal real preimage; ``x`` real."""
    return nx.min_l1_preimage(q.Q, np.asarray(x, dtype=np.float64))


def complex_section(q, x):
    """Preimage of a complex vector with ``|y|_1 <= 2 |x|_inf``."""
    x = np.asarray(x, dtype=np.complex128)
    return real_section(q, x.real) + 1j * real_section(q, x.imag)


# ---------------------------------------------------------------------------
# Homogeneous maps


@dataclass(eq=False)
class HomogeneousMap:
    """A positively homogeneous map on coordinate vectors.

    ``rule`` acts on single vectors; ``amplify`` applies it entrywise to a
    ``(d, k, k)`` coordinate array. Values are plain coordinate vectors or
    :class:`ZVector` pieces, assembled into a :class:`ZElement`.
    """

    rule: object
    source: osp.OsDescriptor
    target: object
    meta: dict = field(default_factory=dict)

    def __call__(self, x):
        return self.rule(np.asarray(x, dtype=np.complex128))

    def amplify(self, coords):
        coords = np.asarray(coords, dtype=np.complex128)
        d, k, _ = coords.shape
        vals = [[self(coords[:, i, j]) for j in range(k)] for i in range(k)]
        return assemble(vals)


def homogeneous_extension(sphere_rule, norm_fn, source=None, target=None, meta=None):
    """``f(x) = |x| rule(x / |x|)``, ``f(0) = 0``."""

    def rule(x):
        r = norm_fn(x)
        if r == 0.0:
            # rules map 0 to 0; this keeps the output type
            return scale_value(sphere_rule(x), 0.0)
        # split division keeps subnormal radii finite
        u = x.real / r + 1j * (x.imag / r) if np.iscomplexobj(x) else x / r
        return scale_value(sphere_rule(u), r)

    return HomogeneousMap(rule, source, target, dict(meta or {}))


def scale_value(v, a):
    if isinstance(v, ZVector):
        return v.scale(a)
    return np.asarray(v) * a


def assemble(vals):
    """Stack a ``k x k`` nested list of entry values into a matrix-level value."""
    first = vals[0][0]
    k = len(vals)
    if isinstance(first, ZVector):
        keys = sorted(set().union(*(v.parts.keys() for row in vals for v in row)))
        parts = {}
        for m in keys:
            arr = np.zeros((first.M, k, k), dtype=np.complex128)
            for i in range(k):
                for j in range(k):
                    piece = vals[i][j].parts.get(m)
                    if piece is not None:
                        arr[:, i, j] = piece
            parts[m] = arr
        return ZElement(k, parts)
    arr = np.array([[np.asarray(v) for v in row] for row in vals])
    return np.moveaxis(arr, -1, 0)


# ---------------------------------------------------------------------------
# Z(Q) values


@dataclass(frozen=True, eq=False)
class ZVector:
    """A first-level element of ``Z``: ``m -> (M,)`` coordinates."""

    M: int
    parts: dict

    def scale(self, a):
        return ZVector(self.M, {m: v * a for m, v in self.parts.items()})

    def __add__(self, other):
        parts = dict(self.parts)
        for m, v in other.parts.items():
            parts[m] = parts[m] + v if m in parts else v
        return ZVector(self.M, parts)

    def __sub__(self, other):
        return self + other.scale(-1.0)


@dataclass(frozen=True, eq=False)
class ZElement:
    """An element of ``M_k(Z)``: summand index ``m >= 1`` -> ``(M, k, k)`` array."""

    k: int
    parts: dict

    def __post_init__(self):
        clean = {}
        for m, arr in sorted(self.parts.items()):
            if int(m) != m or m < 1:
                raise ValueError(f"summand index must be a positive integer, got {m}")
            arr = np.asarray(arr, dtype=np.complex128)
            if arr.ndim != 3 or arr.shape[1:] != (self.k, self.k):
                raise ValueError(f"summand {m} has shape {arr.shape}, expected (M, {self.k}, {self.k})")
            clean[int(m)] = arr
        object.__setattr__(self, "parts", clean)

    @property
    def support(self):
        return tuple(m for m, a in self.parts.items() if np.any(a))

    @property
    def M(self):
        return next(iter(self.parts.values())).shape[0] if self.parts else 0

    def scale(self, a):
        return ZElement(self.k, {m: v * a for m, v in self.parts.items()})

    def __add__(self, other):
        if self.k != other.k:
            raise ValueError("matrix sizes differ")
        parts = dict(self.parts)
        for m, v in other.parts.items():
            parts[m] = parts[m] + v if m in parts else v
        return ZElement(self.k, parts)

    def __sub__(self, other):
        return self + other.scale(-1.0)

    __mul__ = scale
    __rmul__ = scale

    def max_abs(self):
        return max((float(np.abs(a).max()) for a in self.parts.values()), default=0.0)


def zero_z(k):
    return ZElement(k, {})


def qtilde(q, z):
    """``Q~`` on ``M_k(Z)``: sum of ``Q`` over summands, as ``(N, k, k)`` coords."""
    out = np.zeros((q.N, z.k, z.k), dtype=np.complex128)
    for arr in z.parts.values():
        out += q.apply(arr)
    return out


# ---------------------------------------------------------------------------
# Norms


def x_norm(q, coords):
    return osp.exact_norm(osp.OsElement(q.target, coords))


def ym_norm(q, m, y, k=None):
    """Certificate for ``|y|_{M_k(Y_m)}``; ``y`` is ``(M, k, k)``."""
    y = np.asarray(y, dtype=np.complex128)
    if y.ndim != 3 or y.shape[0] != q.M:
        raise osp.ShapeError(f"expected ({q.M}, k, k) coordinates, got {y.shape}")
    if k is not None and y.shape[1] != k:
        raise osp.ShapeError(f"expected matrix size {k}, got {y.shape[1]}")
    src, _ = osp.minl1_bracket(y)
    qn = x_norm(q, q.apply(y))
    scale = 2.0**-m
    lo = max(scale * src.lower, qn)
    hi = max(scale * src.upper, qn)
    exact = src.exact or qn >= scale * src.upper
    if exact:
        return osp.NormCertificate.exact_value(max(qn, scale * src.value))
    return osp.NormCertificate.bracket(lo, hi, estimate=max(scale * src.value, qn))


@dataclass(frozen=True, eq=False)
class YmSpace:
    q: QuotientMapData
    m: int

    def norm(self, y):
        return ym_norm(self.q, self.m, y)


def _level1_ym(q, m, v):
    return max(2.0**-m * float(np.abs(v).sum()), linf(q.apply(v)))


def _compression_candidates(q, z):
    vecs = []
    for arr in z.parts.values():
        _, w = osp.minl1_bracket(arr)
        for mat in (np.tensordot(w, arr, axes=(0, 0)), *q.apply(arr)):
            u, s, vh = nx.svd(mat)
            vecs.append((u[:, 0], vh[0].conj()))
    return vecs


def z_norm(q, z, refine=True):
    """Sandwich for ``|z|_{M_k(Z)}``.

    Lower: the largest summand norm; with ``refine`` also ``|Q~ z|`` (``Q~``
    is a complete contraction) and ``sum_m |a^* z_m b|_{Y_m}`` for unit
    vectors ``a, b`` (compression to the first level, where the sum is the
    Banach l1-sum). Upper: the sum of summand norms.
    """
    support = z.support
    if not support:
        return osp.NormCertificate.exact_value(0.0)
    certs = {m: ym_norm(q, m, z.parts[m]) for m in support}
    if len(support) == 1:
        return certs[support[0]]
    lower = max(c.lower for c in certs.values())
    upper = sum(c.upper for c in certs.values())
    if not refine:
        return osp.NormCertificate.bracket(lower, upper)
    lower = max(lower, x_norm(q, qtilde(q, z)))
    for a, b in _compression_candidates(q, z):
        val = sum(_level1_ym(q, m, np.einsum("i,kij,j->k", a.conj(), z.parts[m], b)) for m in support)
        lower = max(lower, val)
    return osp.NormCertificate.bracket(max(0.0, lower - nx.CERT_SLACK), upper, estimate=None)


def sum_norm(q, x_coords, z):
    """``max(|x|, |z|)`` on ``M_k(X (+) Z)``."""
    xn = x_norm(q, x_coords)
    zc = z_norm(q, z)
    return osp.NormCertificate.bracket(max(xn - nx.CERT_SLACK, zc.lower), max(xn + nx.CERT_SLACK, zc.upper))


# ---------------------------------------------------------------------------
# Sections into Z


def choose_m(C, k, eps):
    """Least ``m >= 1`` with ``2^(1-m) C k^2 <= eps``."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    m = max(1, math.ceil(1 + math.log2(C * k * k / eps)))
    while m > 1 and 2.0 ** (2 - m) * C * k * k <= eps:
        m -= 1
    while 2.0 ** (1 - m) * C * k * k > eps:
        m += 1
    return m


def y_section(q):
    """Homogeneous section ``X -> Y``: normalised complex split LP on the sphere."""

    def sphere_rule(u):
        return complex_section(q, u)

    return homogeneous_extension(sphere_rule, linf, q.target, q.source, {"C": q.C})


def section_into_Z(q, k, eps):
    """Section of ``Q~`` landing in the single summand ``Y_m`` fixed by ``(C, k, eps)``."""
    m = choose_m(q.C, k, eps)
    base = y_section(q)

    def rule(x):
        return ZVector(q.M, {m: base(x)})

    return HomogeneousMap(rule, q.target, "Z", {"m": m, "k": k, "eps": eps, "norm_bound": 1.0, "eps_bound": 1.0, "q": q})


# ---------------------------------------------------------------------------
# ||f_k||^eps from below


@dataclass(frozen=True)
class EpsNormSample:
    lower: float
    conservative: float
    witness: int | None


def eps_ratio(num, den_parts, eps):
    """Valid lower and conservative ratio from certificates."""
    dxy, dx, dy = den_parts
    den_hi = max(dxy.upper, eps * dx.upper, eps * dy.upper)
    den_lo = max(dxy.lower, eps * dx.lower, eps * dy.lower)
    lower = num.lower / den_hi if den_hi > 0 else 0.0
    cons = num.upper / den_lo if den_lo > 0 else (0.0 if num.upper <= nx.CERT_SLACK else np.inf)
    return lower, cons


def eps_norm_lower(f, k, eps, pairs, q=None):
    """Sampled ``|f_k|^eps`` for a :class:`HomogeneousMap` into ``Z`` or an
    :class:`~oslab.opspaces.OsDescriptor`; ``pairs`` are ``(N, k, k)`` coords."""
    q = q or f.meta.get("q")
    if q is not None:
        def src(x):
            return osp.NormCertificate.exact_value(x_norm(q, x))
    else:
        def src(x):
            return osp.norm(osp.OsElement(f.source, x))
    if f.target == "Z":
        def tgt(u, v):
            return z_norm(q, u - v)
    else:
        def tgt(u, v):
            return osp.norm(osp.OsElement(f.target, u - v))
    pairs = [(np.asarray(x, dtype=np.complex128), np.asarray(y, dtype=np.complex128)) for x, y in pairs]
    for x, _ in pairs[:1]:
        if x.shape[1] != k:
            raise osp.ShapeError(f"pairs have matrix size {x.shape[1]}, expected {k}")
    return eps_ratio_sup(f.amplify, pairs, eps, src, tgt)


def lemma42_violations(f_k, K, r, s, pairs, source_norm, target_diff_norm, tol=1e-9):
    """Pairs breaking ``|f_k(x) - f_k(y)| <= K |x - y| + K (r + s)`` (conservative sides)."""
    bad = []
    for idx, (x, y) in enumerate(pairs):
        lhs = target_diff_norm(f_k(x), f_k(y)).upper
        rhs = K * source_norm(x - y).lower + K * (r + s)
        if lhs > rhs + tol:
            bad.append((idx, lhs, rhs))
    return bad


def eps_ratio_sup(f_k, pairs, eps, source_norm, target_diff_norm):
    """Max over ``pairs`` of ``|f_k(x) - f_k(y)| / max(|x - y|, eps |x|, eps |y|)``.

    ``lower`` uses the lower end of the numerator over the upper end of the
    denominator, so it is a genuine lower bound for ``|f_k|^eps``;
    ``conservative`` uses the opposite ends (what a non-violation check of a
    claimed ``<= 1`` needs). Pairs with both points zero are skipped.
    """
    best_lo, best_c, wit = 0.0, 0.0, None
    for idx, (x, y) in enumerate(pairs):
        dx, dy = source_norm(x), source_norm(y)
        if dx.upper == 0.0 and dy.upper == 0.0:
            continue
        dxy = source_norm(x - y)
        num = target_diff_norm(f_k(x), f_k(y))
        lo, cons = eps_ratio(num, (dxy, dx, dy), eps)
        if lo > best_lo:
            best_lo, wit = lo, idx
        best_c = max(best_c, cons)
    return EpsNormSample(best_lo, best_c, wit)


# ---------------------------------------------------------------------------
# Equivalence maps Z <-> X (+) ker Q~


@dataclass(eq=False)
class Equivalence:
    q: QuotientMapData
    k: int
    section: HomogeneousMap

    def f(self, x_coords):
        return self.section.amplify(x_coords)

    def g(self, z):
        x = qtilde(self.q, z)
        return x, z - self.f(x)

    def h(self, x_coords, z):
        return z + self.f(x_coords)

    def g_distance(self, z1, z2):
        (x1, k1), (x2, k2) = self.g(z1), self.g(z2)
        return sum_norm(self.q, x1 - x2, k1 - k2)


def equivalence_maps(q, k):
    return Equivalence(q, k, section_into_Z(q, k, math.exp(-k)))


def kernel_element(eq, w):
    """Project ``w`` into ``ker Q~`` along the section: ``w - f(Q~ w)``."""
    return w - eq.f(qtilde(eq.q, w))


# ---------------------------------------------------------------------------
# Interpolated family and spherical gluing


@dataclass(eq=False)
class SectionFamily:
    """``f^t = (n + 1 - t) f^n + (t - n) f^(n+1)`` between integer nodes."""

    nodes: list
    q: QuotientMapData | None = None

    def __post_init__(self):
        if not self.nodes:
            raise ValueError("need at least one node map")

    @property
    def T(self):
        return len(self.nodes) - 1

    def weights(self, t):
        t = max(0.0, float(t))
        if t >= self.T:
            return ((self.T, 1.0),)
        n = int(math.floor(t))
        frac = t - n
        if frac == 0.0:
            return ((n, 1.0),)
        return ((n, 1.0 - frac), (n + 1, frac))

    def at(self, t):
        w = self.weights(t)
        nodes = self.nodes

        def rule(x):
            out = None
            for n, a in w:
                v = scale_value(nodes[n](x), a)
                out = v if out is None else out + v
            return out

        return HomogeneousMap(rule, nodes[0].source, nodes[0].target, {"t": t, "weights": w})


def section_family(q, k, T=8):
    """Nodes ``f^n`` with ``|f^n_k|^(e^(-2n)) <= 1``, ``n = 0..T``."""
    return SectionFamily([section_into_Z(q, k, math.exp(-2.0 * n)) for n in range(T + 1)], q)


def interpolate_family(sections, q=None):
    return SectionFamily(list(sections), q)


@dataclass(eq=False)
class SphericalAmplification:
    family: SectionFamily
    K: float
    k: int
    norm_fn: object
    diagnostics: list = field(default_factory=list)

    def log_radius(self, x_coords):
        r = self.norm_fn(x_coords)
        return r, (math.log(r) if r > 1.0 else 0.0)

    def witness(self, r):
        """The first-level map whose amplification agrees with ``F`` on the sphere of radius ``r``."""
        return self.family.at(math.log(r) if r > 1.0 else 0.0)

    def __call__(self, x_coords):
        x_coords = np.asarray(x_coords, dtype=np.complex128)
        r, t = self.log_radius(x_coords)
        if r == 0.0:
            return zero_z(self.k)
        if t > self.family.T:
            self.diagnostics.append(("log-radius-beyond-grid", r))
        return self.family.at(t).amplify(x_coords)


def glue_spherical(family, K=1.0, k=1, norm_fn=None):
    if norm_fn is None:
        q = family.q

        def norm_fn(coords):
            return x_norm(q, coords)

    return SphericalAmplification(family, K, k, norm_fn)


@dataclass
class HypothesisReport:
    eps_violations: list
    lipschitz_violations: list

    @property
    def ok(self):
        return not self.eps_violations and not self.lipschitz_violations


def check_family_hypotheses(family, K, k, points, ts, tol=1e-6):
    """Sampled check of ``|f^t_k - f^s_k| <= K |t - s|`` on the unit sphere and
    of ``|f^t_k|^(e^-2t) <= K`` (conservative side) on pairs of ``points``."""
    q = family.q
    lip, eps_bad = [], []
    unit = [x / x_norm(q, x) for x in points if x_norm(q, x) > 0]
    for a, b in itertools.combinations(ts, 2):
        fa, fb = family.at(a), family.at(b)
        for x in unit:
            diff = z_norm(q, fa.amplify(x) - fb.amplify(x))
            if diff.upper > K * abs(a - b) + tol:
                lip.append((a, b, diff.upper))
                break
    for t in ts:
        ft = family.at(t)
        pairs = list(itertools.combinations(points, 2))
        s = eps_ratio_sup(
            ft.amplify,
            pairs,
            math.exp(-2.0 * t),
            lambda x: osp.NormCertificate.exact_value(x_norm(q, x)),
            lambda u, v: z_norm(q, u - v),
        )
        if s.lower > K + tol:
            eps_bad.append((t, s.lower))
    return HypothesisReport(eps_bad, lip)


def z_allclose(a, b, tol):
    keys = set(a.parts) | set(b.parts)
    worst = 0.0
    for m in keys:
        da = a.parts.get(m)
        db = b.parts.get(m)
        if da is None:
            da = np.zeros_like(db)
        if db is None:
            db = np.zeros_like(da)
        worst = max(worst, float(np.abs(da - db).max()))
    return worst <= tol, worst


def value_gap(u, v):
    if isinstance(u, ZVector):
        return z_allclose(ZElement(1, {m: p[:, None, None] for m, p in u.parts.items()}),
                          ZElement(1, {m: p[:, None, None] for m, p in v.parts.items()}), np.inf)[1]
    return float(np.max(np.abs(np.asarray(u) - np.asarray(v))))


@dataclass
class UniquenessReport:
    checks: int
    agreements: int
    counterexamples: list

    @property
    def agree(self):
        return not self.counterexamples


def spherical_uniqueness_check(F, witness_a, witness_b, radii, samples=20, seed=0, tol=1e-9):
    """Two witness families of ``F`` must agree on ``r B_X`` (matrix size ``k > 1``).

    For ``x`` in ``r B_X`` the element ``diag(x, y)`` with ``|y| = r`` lies on
    the sphere of radius ``r``, so its ``(1, 1)`` entry under ``F`` is both
    ``A^r(x)`` and ``B^r(x)``.
    """
    k = F.k
    if k < 2:
        raise ValueError("the corner construction needs k > 1")
    q = F.family.q
    rng = np.random.default_rng(seed)
    checks = agreements = 0
    bad = []
    for r in radii:
        for _ in range(samples):
            v = rng.standard_normal(q.N) + 1j * rng.standard_normal(q.N)
            x = v * (r * rng.random() / linf(v))
            coords = np.zeros((q.N, k, k), dtype=np.complex128)
            coords[:, 0, 0] = x
            # companion block r * e_1 (x) I_{k-1}
            for i in range(1, k):
                coords[0, i, i] = r
            Fx = F(coords)
            entry = ZVector(q.M, {m: a[:, 0, 0] for m, a in Fx.parts.items()})
            A = witness_a(r)(x)
            B = witness_b(r)(x)
            gaps = (value_gap(entry, A), value_gap(entry, B), value_gap(A, B))
            checks += 1
            if max(gaps) <= tol:
                agreements += 1
            else:
                bad.append({"r": r, "x": x, "gaps": gaps})
    return UniquenessReport(checks, agreements, bad)


# ---------------------------------------------------------------------------
# Verification sweeps


class BudgetExceeded(RuntimeError):
    pass


@dataclass
class Check:
    name: str
    passed: bool
    margin: float
    samples: int
    detail: dict = field(default_factory=dict)

    def to_json(self):
        return {"name": self.name, "passed": self.passed, "margin": _finite(self.margin), "samples": self.samples, **self.detail}


def _finite(v):
    v = float(v)
    return v if math.isfinite(v) else ("inf" if v > 0 else "-inf")


class _Clock:
    def __init__(self, seconds):
        import time

        self._time = time.monotonic
        self.deadline = None if seconds is None else self._time() + seconds

    def tick(self):
        if self.deadline is not None and self._time() > self.deadline:
            raise BudgetExceeded("time budget exhausted")


def random_x(q, k, rng, radius):
    v = rng.standard_normal((q.N, k, k)) + 1j * rng.standard_normal((q.N, k, k))
    nrm = x_norm(q, v)
    return v * (radius / nrm) if nrm > 0 else v


def _radius(rng, top):
    u = rng.random()
    return 0.0 if u < 0.03 else top * u


def sample_x_pairs(q, k, count, rng, top):
    """Independent, local and same-ray pairs in the ``top``-ball of ``M_k(X)``."""
    pairs = []
    for i in range(count):
        x = random_x(q, k, rng, _radius(rng, top))
        kind = i % 3
        if kind == 0:
            y = random_x(q, k, rng, _radius(rng, top))
        elif kind == 1:
            y = x + random_x(q, k, rng, top * 0.05 * rng.random())
            ny = x_norm(q, y)
            if ny > top:
                y = y * (top / ny)
        else:
            lam = rng.uniform(0.5, 2.0)
            nx_ = x_norm(q, x)
            y = x * (min(lam, top / nx_) if nx_ > 0 else lam)
        pairs.append((x, y))
    return pairs


def random_z(q, k, rng, summands, radius):
    parts = {}
    for m in summands:
        parts[m] = rng.standard_normal((q.M, k, k)) + 1j * rng.standard_normal((q.M, k, k))
    z = ZElement(k, parts)
    up = z_norm(q, z, refine=False).upper
    return z.scale(radius / up) if up > 0 else z


def sample_z_points(q, k, eq, count, rng, top):
    """Points of ``M_k(Z)`` with certified norm ``<= top``: random one- or
    two-summand elements, and section images plus a small kernel part."""
    m0 = eq.section.meta["m"]
    pool = list(range(max(1, m0 - 2), m0 + 3))
    pts = []
    for i in range(count):
        r = _radius(rng, top)
        if i % 2 == 0:
            sup = sorted(rng.choice(pool, size=1 + (i % 4 == 0), replace=False).tolist())
            pts.append(random_z(q, k, rng, sup, r))
        else:
            x = random_x(q, k, rng, r)
            w = random_z(q, k, rng, [int(rng.choice(pool))], 0.1 * r)
            z = eq.f(x) + kernel_element(eq, w)
            up = z_norm(q, z, refine=False).upper
            pts.append(z.scale(top / up) if up > top else z)
    return pts


def verify_equivalence(q, k, samples=200, seed=0, section=None, seconds=None):
    """The finite inequalities behind the coarse equivalence ``Z ~ X (+) ker Q~`` at level ``k``."""
    clock = _Clock(seconds)
    rng = np.random.default_rng([seed, k])
    eq = equivalence_maps(q, k) if section is None else Equivalence(q, k, section)
    top = math.exp(k)
    checks = []

    worst = 0.0
    for _ in range(samples):
        clock.tick()
        x = random_x(q, k, rng, _radius(rng, top))
        worst = max(worst, float(np.abs(qtilde(q, eq.f(x)) - x).max()))
    checks.append(Check("section-residual", worst <= RESIDUAL_TOL, RESIDUAL_TOL - worst, samples, {"max_residual": worst}))

    pairs = sample_x_pairs(q, k, samples, rng, top)
    clock.tick()
    en = eps_norm_lower(eq.section, k, math.exp(-k), pairs, q)
    checks.append(
        Check(
            "eps-norm",
            en.lower <= 1.0 + 1e-6,
            1.0 + 1e-6 - en.lower,
            len(pairs),
            {"lower": en.lower, "conservative": _finite(en.conservative), "witness": en.witness},
        )
    )

    zs = sample_z_points(q, k, eq, samples, rng, top)
    inv = 0.0
    for z in zs:
        clock.tick()
        x, kz = eq.g(z)
        inv = max(inv, (eq.h(x, kz) - z).max_abs())
        ker = kernel_element(eq, z)
        x2, k2 = eq.g(eq.h(x, ker))
        inv = max(inv, float(np.abs(x2 - x).max()) if x.size else 0.0, (k2 - ker).max_abs())
    checks.append(Check("g-h-inverse", inv <= RESIDUAL_TOL, RESIDUAL_TOL - inv, len(zs), {"max_error": inv}))

    up_margin = lo_margin = np.inf
    up_fail = lo_fail = 0
    up_wit = lo_wit = None
    npairs = 0
    for i in range(0, len(zs) - 1):
        clock.tick()
        a = zs[i]
        b = zs[i + 1] if i % 3 else a + random_z(q, k, rng, a.support or [1], 0.05 * top * rng.random())
        if z_norm(q, b, refine=False).upper > top:
            continue
        npairs += 1
        dist = z_norm(q, a - b)
        disp = eq.g_distance(a, b)
        mu = 2.0 * dist.lower + 1.0 - disp.upper
        ml = disp.lower - (0.5 * dist.upper - 1.5)
        if mu < up_margin:
            up_margin, up_wit = mu, i
        if ml < lo_margin:
            lo_margin, lo_wit = ml, i
        up_fail += mu < 0
        lo_fail += ml < 0
    checks.append(Check("g-upper", up_fail == 0, up_margin, npairs, {"violations": up_fail, "witness": up_wit}))
    checks.append(Check("g-lower", lo_fail == 0, lo_margin, npairs, {"violations": lo_fail, "witness": lo_wit}))
    return checks


@dataclass
class GluingReport:
    checks: list
    counterexample: dict | None
    diagnostics: list


def verify_gluing(q, k, pairs=500, seed=0, T=8, top=math.exp(4.0), slope=2.0, intercept=1.0, seconds=None):
    """Section property, sphere restriction and the coarse bound of the glued map."""
    clock = _Clock(seconds)
    rng = np.random.default_rng([seed, k, 59])
    fam = section_family(q, k, T)
    F = glue_spherical(fam, 1.0, k)
    sample = sample_x_pairs(q, k, pairs, rng, top)
    res = sph = 0.0
    worst_margin, worst = np.inf, None
    corr_margin = np.inf
    fails = corr_fails = 0
    for idx, (x, z) in enumerate(sample):
        clock.tick()
        Fx, Fz = F(x), F(z)
        res = max(res, float(np.abs(qtilde(q, Fx) - x).max()), float(np.abs(qtilde(q, Fz) - z).max()))
        rx = x_norm(q, x)
        if rx > 0:
            sph = max(sph, z_allclose(Fx, F.witness(rx).amplify(x), np.inf)[1])
        lhs = z_norm(q, Fx - Fz).upper
        d = x_norm(q, x - z)
        m = slope * d + intercept - lhs
        if m < worst_margin:
            worst_margin, worst = m, {"index": idx, "lhs": lhs, "distance": d, "radii": [rx, x_norm(q, z)]}
        fails += m < -1e-9
        mc = 2 * slope * d + 2 * intercept - lhs
        corr_margin = min(corr_margin, mc)
        corr_fails += mc < -1e-9
    checks = [
        Check("glued-section-residual", res <= RESIDUAL_TOL, RESIDUAL_TOL - res, 2 * len(sample), {"max_residual": res}),
        Check("sphere-restriction", sph <= 1e-12, 1e-12 - sph, len(sample), {"max_error": sph}),
        Check("glued-bound", fails == 0, worst_margin, len(sample), {"violations": fails, "worst": worst, "slope": slope, "intercept": intercept}),
        Check("glued-bound-doubled", corr_fails == 0, corr_margin, len(sample), {"violations": corr_fails, "slope": 2 * slope, "intercept": 2 * intercept}),
    ]
    return GluingReport(checks, worst if fails else None, list(F.diagnostics))


def ray_counterexample(q, direction=(1.0, 0.3, -0.2j), log_r=3.951, lam=1.05):
    """First-level pair ``(lam z, z)`` on one ray straddling the node 4 of the
    log-radius grid: returns ``(|F(x) - F(z)|, 2|x - z| + 1)``."""
    F = glue_spherical(section_family(q, 1), 1.0, 1)
    v = np.asarray(direction, dtype=np.complex128)
    z = (v * (math.exp(log_r) / linf(v)))[:, None, None]
    x = lam * z
    return z_norm(q, F(x) - F(z)), 2.0 * x_norm(q, x - z) + 1.0
