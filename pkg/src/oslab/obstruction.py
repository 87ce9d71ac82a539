"""Special matrices, the row/opposite-row interpolation values, and the growth obstruction."""

import math
from dataclasses import dataclass

import numpy as np

from . import interpolation as ip
from . import opspaces as osp


class TruncationError(ValueError):
    pass


class OrderingError(ValueError):
    pass


class BracketError(AssertionError):
    pass


# ---------------------------------------------------------------------------
# Special matrices


@dataclass(frozen=True)
class SpecialMatrices:
    n: int
    r: float
    a: tuple
    b: tuple
    c: osp.OsElement
    d: osp.OsElement


def build_special(n, r, descriptor=None):
    """``a_j`` has ``r e_{2j-1}`` at outer position ``(j, 1)``, ``b_j`` has ``r e_{2j}``.

    ``c = sum a_j`` and ``d = sum b_j`` are outer columns.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    descriptor = descriptor or osp.Row(2 * n)
    if descriptor.dim < 2 * n:
        raise TruncationError(f"{descriptor} has {descriptor.dim} coordinates, need at least {2 * n}")
    a, b = [], []
    for j in range(n):
        ca = np.zeros((descriptor.dim, n, n), dtype=np.complex128)
        cb = np.zeros_like(ca)
        ca[2 * j, j, 0] = r
        cb[2 * j + 1, j, 0] = r
        a.append(osp.OsElement(descriptor, ca))
        b.append(osp.OsElement(descriptor, cb))
    c = osp.OsElement(descriptor, sum(x.coords for x in a))
    d = osp.OsElement(descriptor, sum(x.coords for x in b))
    return SpecialMatrices(n, float(r), tuple(a), tuple(b), c, d)


def lemma32_element(n, kind="Row"):
    """Outer column whose ``(k, 1)`` entry is the ``k``-th basis vector."""
    coords = np.zeros((n, n, n), dtype=np.complex128)
    for k in range(n):
        coords[k, k, 0] = 1.0
    return osp.OsElement(osp.OsDescriptor(kind, n), coords)


def lemma32_functional(n, kind="Row"):
    """Functional pairing to ``n`` against :func:`lemma32_element`."""
    return lemma32_element(n, kind)


# ---------------------------------------------------------------------------
# Interpolation table for the outer-column element


@dataclass(frozen=True)
class Lemma32Row:
    n: int
    theta: float
    target: float
    dual_lower: float
    upper: float
    lower: float
    upper_kind: str

    @property
    def width(self):
        return self.upper - self.lower

    def as_csv_row(self):
        return [self.n, self.theta, self.target, self.dual_lower, self.upper, self.width]


LEMMA32_HEADER = ["n", "theta", "target", "dual_lower", "upper", "width"]


def lemma32_row(n, theta, budget=None):
    x = lemma32_element(n).coords.ravel()
    couple = ip.row_couple(n, n)
    target = n ** (theta / 2.0)
    xi = lemma32_functional(n).coords.ravel()
    dual = ip.lower_dual(x, couple, theta, xi).lower
    cert = ip.bracket(x, couple, theta, budget)
    if not cert.lower - 1e-9 <= target <= cert.upper + 1e-9:
        raise BracketError(f"n={n}, theta={theta}: bracket [{cert.lower}, {cert.upper}] misses {target}")
    return Lemma32Row(n, float(theta), target, dual, cert.upper, cert.lower, cert.upper_kind)


def lemma32_table(n_range, theta_range, budget=None, workers=1):
    cells = [(n, t) for n in n_range for t in theta_range]
    return _map(lambda c: lemma32_row(c[0], c[1], budget), cells, workers)


def _map(fn, items, workers):
    if workers and workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


# ---------------------------------------------------------------------------
# Growth obstruction


@dataclass(frozen=True)
class ObstructionRow:
    n: int
    lhs: float
    rhs: float

    @property
    def violated(self):
        return self.lhs > self.rhs

    def as_csv_row(self):
        return [self.n, self.lhs, self.rhs, int(self.violated)]


OBSTRUCTION_HEADER = ["n", "lhs", "rhs", "violated"]


@dataclass(frozen=True)
class ObstructionResult:
    theta: float
    gamma: float
    rows: tuple
    n_star: int | None
    n_certified: int
    reduced: bool = False

    @property
    def violated_in_range(self):
        return self.n_star is not None


def certified_crossover(theta, gamma, r, D, L):
    """``ceil(((2Lr + L)/D)^(2/(gamma - theta)))``: past this n the inequality must fail."""
    return max(1, math.ceil(((2 * L * r + L) / D) ** (2.0 / (gamma - theta))))


def growth_obstruction(theta, gamma, r, D, L, n_range, symmetric=False):
    """Scan ``D n^(gamma/2) <= 2 L r n^(theta/2) + L`` over ``n_range``.

    ``n_star`` is the least violating ``n`` in range (``None`` if there is
    none) and ``n_certified`` the closed-form index beyond which a violation
    is guaranteed. With ``theta > gamma`` pass ``symmetric=True`` to run the
    opposite-space reduction ``(1 - theta, 1 - gamma)``.
    """
    if min(r, D, L) <= 0:
        raise ValueError("r, D and L must be positive")
    reduced = False
    if theta >= gamma:
        if theta == gamma or not symmetric:
            raise OrderingError(f"need theta < gamma, got theta={theta}, gamma={gamma}")
        theta, gamma, reduced = 1.0 - theta, 1.0 - gamma, True
    rows = tuple(
        ObstructionRow(n, D * n ** (gamma / 2.0), 2 * L * r * n ** (theta / 2.0) + L) for n in n_range
    )
    n_star = next((row.n for row in rows if row.violated), None)
    return ObstructionResult(theta, gamma, rows, n_star, certified_crossover(theta, gamma, r, D, L), reduced)


# ---------------------------------------------------------------------------
# Divergence of amplified candidate maps


@dataclass(frozen=True)
class Prop31Row:
    n: int
    stacked_norm: float
    sqrt_n_rho_witness: float
    omega_side: float
    omega_sampled: float

    def as_csv_row(self):
        return [self.n, self.stacked_norm, self.sqrt_n_rho_witness, self.omega_side, self.omega_sampled]


PROP31_HEADER = ["n", "stacked_norm", "sqrt_n_rho_witness", "omega_side", "omega_sampled"]


def transpose_candidate(v):
    """Row -> Column on shared coordinates (``e_{1,k} -> e_{k,1}``)."""
    return np.asarray(v, dtype=np.complex128)


def collapsing_candidate(v):
    """Sends ``e_{2j-1}`` and ``e_{2j}`` to the same vector."""
    v = np.asarray(v, dtype=np.complex128)
    out = v.copy()
    out[0::2] = v[0::2] + v[1::2]
    out[1::2] = 0.0
    return out


def amplify(fmap, x, target):
    """``f_n([x_ij]) = [f(x_ij)]`` for an X-level map given on coordinate vectors."""
    d, n, _ = x.coords.shape
    entries = np.moveaxis(x.coords, 0, -1).reshape(n * n, d)
    images = np.array([fmap(v) for v in entries])
    coords = np.moveaxis(images.reshape(n, n, -1), -1, 0)
    return osp.OsElement(target, coords)


def prop31_row(n, r, fmap, source_kind="Row", target_kind="Column", extra_pairs=32, seed=0):
    dim = 2 * n
    source = osp.OsDescriptor(source_kind, dim)
    target = osp.OsDescriptor(target_kind, dim)
    sp = build_special(n, r, source)
    ys = []
    for j in range(n):
        e1 = np.zeros(dim, dtype=np.complex128)
        e2 = np.zeros(dim, dtype=np.complex128)
        e1[2 * j] = r
        e2[2 * j + 1] = r
        ys.append(np.asarray(fmap(e1)) - np.asarray(fmap(e2)))
    level1 = osp.OsDescriptor(target_kind, dim)
    ynorms = [osp.norm(osp.OsElement(level1, y.reshape(-1, 1, 1))).value for y in ys]
    stacked = float(np.sqrt(np.sum(np.square(ynorms))))
    rho_witness = min(ynorms)
    omega_side = osp.distance(amplify(fmap, sp.c, target), amplify(fmap, sp.d, target)).value
    # omega_{f_n}(sqrt(2) r) from below: structured pairs plus random pairs at that distance
    t = np.sqrt(2.0) * r
    omega = omega_side
    for aj, bj in zip(sp.a, sp.b):
        omega = max(omega, osp.distance(amplify(fmap, aj, target), amplify(fmap, bj, target)).lower)
    rng = np.random.default_rng(seed)
    for _ in range(extra_pairs):
        x = osp.random_element(source, n, rng)
        h = osp.random_element(source, n, rng)
        h = h * (t / osp.norm(h).upper)
        disp = osp.distance(amplify(fmap, x + h, target), amplify(fmap, x, target)).lower
        omega = max(omega, disp)
    return Prop31Row(n, stacked, float(np.sqrt(n) * rho_witness), omega_side, float(omega))


def prop31_divergence(n_range, r, candidate_map=transpose_candidate, workers=1, **kw):
    return _map(lambda n: prop31_row(n, r, candidate_map, **kw), list(n_range), workers)
