"""Matrix norms of finite truncations of concrete operator spaces.

An element of ``M_n(X)`` is stored as ``coords`` of shape ``(d, n, n)``: the
matrix ``[x_ij]`` with ``x_ij = sum_k coords[k, i, j] e_k`` in the
distinguished basis ``e_1..e_d`` of ``X``.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from . import numerics as nx

KINDS = ("Row", "Column", "RowOp", "ColumnOp", "OH", "InterpRC", "MinLinf", "MinL1", "IntersectRC")
EXACT_KINDS = frozenset({"Row", "Column", "RowOp", "ColumnOp", "OH", "IntersectRC", "MinLinf"})
DUAL_KINDS = frozenset({"Row", "Column", "RowOp", "ColumnOp"})
MINL1_RESTARTS = 16


class ShapeError(ValueError):
    pass


class UnsupportedDescriptorError(ValueError):
    pass


@dataclass(frozen=True)
class OsDescriptor:
    kind: str
    dim: int
    theta: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown space kind {self.kind!r}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError(f"dimension must be a positive integer, got {self.dim}")
        if self.kind == "InterpRC":
            if self.theta is None or not 0.0 <= self.theta <= 1.0:
                raise ValueError(f"InterpRC needs theta in [0, 1], got {self.theta}")
        elif self.theta is not None:
            raise ValueError(f"{self.kind} takes no theta")

    def with_dim(self, dim):
        return OsDescriptor(self.kind, dim, self.theta)

    def to_json(self):
        out = {"kind": self.kind, "dim": self.dim}
        if self.theta is not None:
            out["theta"] = self.theta
        return out

    @classmethod
    def from_json(cls, obj):
        return cls(obj["kind"], int(obj["dim"]), obj.get("theta"))

    def __str__(self):
        if self.theta is None:
            return f"{self.kind}({self.dim})"
        return f"{self.kind}({self.dim}, {self.theta:g})"


def Row(d):
    return OsDescriptor("Row", d)


def Column(d):
    return OsDescriptor("Column", d)


def RowOp(d):
    return OsDescriptor("RowOp", d)


def ColumnOp(d):
    return OsDescriptor("ColumnOp", d)


def OH(d):
    return OsDescriptor("OH", d)


def InterpRC(d, theta):
    return OsDescriptor("InterpRC", d, float(theta))


def MinLinf(N):
    return OsDescriptor("MinLinf", N)


def MinL1(M):
    return OsDescriptor("MinL1", M)


def IntersectRC(d):
    return OsDescriptor("IntersectRC", d)


@dataclass(frozen=True, eq=False)
class OsElement:
    space: OsDescriptor
    coords: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=np.complex128)
        if c.ndim != 3 or c.shape[1] != c.shape[2]:
            raise ShapeError(f"coords must have shape (d, n, n), got {c.shape}")
        if c.shape[0] != self.space.dim:
            raise ShapeError(f"{self.space} needs {self.space.dim} coordinates, got {c.shape[0]}")
        if c.shape[1] == 0:
            raise ShapeError("matrix size must be at least 1")
        if not np.all(np.isfinite(c)):
            raise ShapeError("coords contain non-finite entries")
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    @property
    def n(self):
        return self.coords.shape[1]

    @property
    def d(self):
        return self.coords.shape[0]

    def with_space(self, space):
        return OsElement(space, self.coords)

    def __add__(self, other):
        _check_same(self, other)
        return OsElement(self.space, self.coords + other.coords)

    def __sub__(self, other):
        _check_same(self, other)
        return OsElement(self.space, self.coords - other.coords)

    def __mul__(self, alpha):
        return OsElement(self.space, self.coords * alpha)

    __rmul__ = __mul__

    def to_json(self):
        return {
            "space": self.space.to_json(),
            "n": self.n,
            "coords": np.stack([self.coords.real, self.coords.imag], axis=-1).tolist(),
        }

    @classmethod
    def from_json(cls, obj):
        space = OsDescriptor.from_json(obj["space"])
        raw = np.asarray(obj["coords"], dtype=np.float64)
        if raw.ndim != 4 or raw.shape[-1] != 2:
            raise ShapeError("coords must be a nested list of [re, im] pairs of shape (d, n, n, 2)")
        coords = raw[..., 0] + 1j * raw[..., 1]
        if "n" in obj and coords.shape[1] != int(obj["n"]):
            raise ShapeError(f"declared n={obj['n']} but coords have size {coords.shape[1]}")
        return cls(space, coords)

    @classmethod
    def loads(cls, text):
        return cls.from_json(json.loads(text))

    def dumps(self):
        return json.dumps(self.to_json(), sort_keys=True)


def _check_same(x, y):
    if x.space != y.space or x.coords.shape != y.coords.shape:
        raise ShapeError(f"elements live in different spaces: {x.space}/n={x.n} vs {y.space}/n={y.n}")


def element(space, coords):
    return OsElement(space, coords)


def zero(space, n):
    return OsElement(space, np.zeros((space.dim, n, n), dtype=np.complex128))


def random_element(space, n, rng, scale=1.0):
    shape = (space.dim, n, n)
    return OsElement(space, scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)))


@dataclass(frozen=True)
class NormCertificate:
    lower: float
    upper: float
    exact: bool = False
    estimate: float | None = None
    flags: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if not (0.0 <= self.lower <= self.upper):
            raise ValueError(f"invalid bracket [{self.lower}, {self.upper}]")
        if self.exact and self.upper - self.lower > 1e-8 * max(1.0, self.upper):
            raise ValueError(f"exact certificate is too wide: [{self.lower}, {self.upper}]")

    @property
    def value(self):
        """Best point estimate: the midpoint unless a dedicated estimate is stored."""
        if self.estimate is not None:
            return self.estimate
        return 0.5 * (self.lower + self.upper)

    @property
    def width(self):
        return self.upper - self.lower

    def contains(self, v, tol=0.0):
        return self.lower - tol <= v <= self.upper + tol

    def to_json(self):
        return {"lower": self.lower, "upper": self.upper, "exact": self.exact, "flags": list(self.flags)}

    @classmethod
    def exact_value(cls, v):
        v = max(float(v), 0.0)
        return cls(max(0.0, v - nx.CERT_SLACK), v + nx.CERT_SLACK, True, v)

    @classmethod
    def bracket(cls, lower, upper, estimate=None, flags=()):
        lower = max(0.0, float(lower))
        upper = float(upper)
        flags = tuple(flags)
        if lower > upper:
            lower, upper = upper, lower
            flags = flags + ("widened",)
        return cls(lower, upper, False, estimate, flags)


# ---------------------------------------------------------------------------
# Matrix embeddings


def outer_transpose(coords):
    """``[x_ij] -> [x_ji]``, i.e. transpose every coordinate matrix."""
    return np.swapaxes(np.asarray(coords), -1, -2)


def block_row(coords):
    """``n x (n d)`` matrix ``[A_1 A_2 ... A_d]``."""
    c = np.asarray(coords)
    d, n, _ = c.shape[-3:]
    return np.moveaxis(c, -3, -2).reshape(c.shape[:-3] + (n, d * n))


def block_column(coords):
    """``(n d) x n`` matrix stacking ``A_1, ..., A_d``."""
    c = np.asarray(coords)
    d, n, _ = c.shape[-3:]
    return c.reshape(c.shape[:-3] + (d * n, n))


def matrix_form(kind, coords):
    """The full-matrix-space embedding whose spectral norm is the norm of ``kind``."""
    if kind == "Row":
        return block_row(coords)
    if kind == "Column":
        return block_column(coords)
    if kind == "RowOp":
        return block_row(outer_transpose(coords))
    if kind == "ColumnOp":
        return block_column(outer_transpose(coords))
    raise UnsupportedDescriptorError(f"{kind} has no full matrix-space embedding")


def oh_matrix(coords):
    """``sum_k A_k (x) conj(A_k)``."""
    c = np.asarray(coords, dtype=np.complex128)
    n = c.shape[1]
    return np.einsum("kij,kab->iajb", c, c.conj()).reshape(n * n, n * n)


# ---------------------------------------------------------------------------
# Norm engines


def _exact_norm(kind, coords):
    if kind in DUAL_KINDS:
        return nx.spectral_norm(matrix_form(kind, coords))
    if kind == "OH":
        return float(np.sqrt(nx.spectral_norm(oh_matrix(coords))))
    if kind == "IntersectRC":
        return max(_exact_norm("Row", coords), _exact_norm("Column", coords))
    if kind == "MinLinf":
        return float(nx.top_singular_batch(coords)[0].max())
    raise UnsupportedDescriptorError(kind)


def minl1_bracket(coords, restarts=MINL1_RESTARTS, seed=0):
    """Bracket for ``sup_{w in T^M} ||sum_m w_m A_m||`` and the phase vector achieving the lower end."""
    c = np.asarray(coords, dtype=np.complex128)
    norms = nx.top_singular_batch(c)[0]
    upper = float(norms.sum())
    nonzero = int(np.count_nonzero(norms > 0.0))
    if c.shape[1] == 1:
        # first matrix level: the l1 norm, attained at w_m = conj(sign(a_m))
        a = c[:, 0, 0]
        w = np.where(a != 0, np.conj(a) / np.where(a != 0, np.abs(a), 1.0), 1.0)
        return NormCertificate.exact_value(upper), w
    if nonzero <= 1:
        return NormCertificate.exact_value(upper), np.ones(c.shape[0], dtype=np.complex128)
    lower, w = nx.torus_spectral_max(c, restarts=restarts, seed=seed)
    lower = min(lower, upper)
    return NormCertificate.bracket(lower, upper + nx.CERT_SLACK, estimate=lower), w


def norm(x, budget=None):
    """Norm certificate for ``x`` in ``M_n`` of its space."""
    kind = x.space.kind
    if kind in EXACT_KINDS:
        return NormCertificate.exact_value(_exact_norm(kind, x.coords))
    if kind == "MinL1":
        return minl1_bracket(x.coords)[0]
    if kind == "InterpRC":
        from . import interpolation

        return interpolation.interp_rc_norm(x, budget=budget)
    raise UnsupportedDescriptorError(kind)  # pragma: no cover


def exact_norm(x):
    """Float norm for the exact engines; raises for bracketed ones."""
    if x.space.kind not in EXACT_KINDS:
        raise UnsupportedDescriptorError(f"{x.space} has no exact norm engine")
    return _exact_norm(x.space.kind, x.coords)


def pairing(xi, x):
    """Sesquilinear trace pairing ``sum_k tr(Xi_k^* A_k)``."""
    return complex(np.vdot(np.asarray(xi.coords).ravel(), np.asarray(x.coords).ravel()))


def dual_norm(xi, base):
    """Norm of the functional ``x -> pairing(xi, x)`` on ``M_n(base)``."""
    if base.kind not in DUAL_KINDS:
        raise UnsupportedDescriptorError(f"dual norm only available for Row/Column families, not {base}")
    if xi.space.dim != base.dim:
        raise ShapeError(f"functional has {xi.space.dim} coordinates, {base} needs {base.dim}")
    return NormCertificate.exact_value(nx.nuclear_norm(matrix_form(base.kind, xi.coords)))


def distance(x, y, budget=None):
    _check_same(x, y)
    return norm(x - y, budget=budget)


# ---------------------------------------------------------------------------
# Truncated cb norms


@dataclass(frozen=True)
class CbResult:
    value: float
    per_level: tuple
    exact: bool
    flags: tuple = ()


def _amplify(tmat, coords):
    return np.einsum("lk,kij->lij", tmat, coords)


def cb_norm_truncated(tmat, source, target, K, seed=0, samples=64, ascent_steps=60):
    """``max_{n <= K} ||T_n||`` for a linear map given by its coordinate matrix.

    ``tmat[l, k]`` is the ``l``-th target coordinate of the image of ``e_k``.
    Row->Row, Column->Column and the matching opposite pairs are computed
    exactly (the amplification is right or left multiplication by
    ``T^T (x) I``); every other pair is a lower bound from random starts
    refined by projected ascent.
    """
    tmat = np.asarray(tmat, dtype=np.complex128)
    if tmat.shape != (target.dim, source.dim):
        raise ShapeError(f"map matrix must be {(target.dim, source.dim)}, got {tmat.shape}")
    if K < 1:
        raise ValueError("K must be at least 1")
    same_family = source.kind == target.kind and source.kind in DUAL_KINDS
    if same_family:
        v = nx.spectral_norm(tmat)
        return CbResult(v, tuple([v] * K), True)
    flags = ()
    if source.kind not in EXACT_KINDS or target.kind not in EXACT_KINDS:
        flags = ("bracketed-engine",)
    rng = np.random.default_rng(seed)
    levels = []
    running = 0.0
    for n in range(1, K + 1):
        best = _level_lower(tmat, source, target, n, rng, samples, ascent_steps)
        running = max(running, best)
        levels.append(running)
    return CbResult(running, tuple(levels), False, flags)


def _ratio(tmat, source, target, coords):
    num = norm(OsElement(target, _amplify(tmat, coords))).lower
    den = norm(OsElement(source, coords)).upper
    return num / den if den > 0 else 0.0


def _level_lower(tmat, source, target, n, rng, samples, steps):
    d = source.dim
    starts = [rng.standard_normal((d, n, n)) + 1j * rng.standard_normal((d, n, n)) for _ in range(samples)]
    # rank-one and basis-aligned starts catch the usual extremisers
    for k in range(d):
        e = np.zeros((d, n, n), dtype=np.complex128)
        e[k, 0, 0] = 1.0
        starts.append(e)
    if n > 1 and d >= n:
        col = np.zeros((d, n, n), dtype=np.complex128)
        row = np.zeros((d, n, n), dtype=np.complex128)
        for j in range(n):
            col[j, j, 0] = 1.0
            row[j, 0, j] = 1.0
        starts += [col, row]
    vals = [_ratio(tmat, source, target, s) for s in starts]
    order = np.argsort(vals)[::-1][:4]
    best = max(vals)
    for i in order:
        cur = starts[i]
        cur_val = vals[i]
        step = 0.3
        for _ in range(steps):
            trial = cur + step * (rng.standard_normal(cur.shape) + 1j * rng.standard_normal(cur.shape)) * np.abs(cur).max()
            tv = _ratio(tmat, source, target, trial)
            if tv > cur_val:
                cur, cur_val = trial, tv
            else:
                step *= 0.9
        best = max(best, cur_val)
    return best
