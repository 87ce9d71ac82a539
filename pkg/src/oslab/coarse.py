"""Sampled expansion and compression moduli of maps between truncated spaces.

``omega_lower(t)`` is the largest displacement seen over pairs whose distance
is certainly ``<= t``; ``rho_upper(t)`` the smallest displacement over pairs
whose distance is certainly ``>= t``. The first bounds the expansion modulus
from below, the second the compression modulus from above.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import numerics as nx
from . import obstruction as ob
from . import opspaces as osp

DEFAULT_GRID = (0.25, 0.5, 1.0, 2.0, 4.0, 8.0)
STRATEGIES = ("uniform-ball", "sphere", "structured")


class GridError(ValueError):
    pass


class MapEvaluationError(RuntimeError):
    def __init__(self, point, cause):
        super().__init__(f"map failed at sample {point!r}: {cause}")
        self.point = point
        self.cause = cause


@dataclass(frozen=True)
class DomainSampler:
    descriptor: osp.OsDescriptor
    n: int
    radius: float
    count: int
    seed: int
    strategy: str = "uniform-ball"

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.radius < 0 or self.count < 1:
            raise ValueError("need radius >= 0 and count >= 1")

    def samples(self):
        rng = np.random.default_rng(self.seed)
        if self.strategy == "structured":
            return self._structured()
        out = []
        for _ in range(self.count):
            x = osp.random_element(self.descriptor, self.n, rng)
            cert = osp.norm(x)
            if self.strategy == "sphere":
                if not cert.exact:
                    raise ValueError(f"sphere sampling needs an exact norm engine, {self.descriptor} is bracketed")
                out.append(x * (self.radius / cert.value))
            else:
                # radius^dim-uniform profile keeps mass spread over the ball
                s = self.radius * rng.random() ** (1.0 / max(1, x.coords.size))
                out.append(x * (s / cert.upper))
        return out

    def _structured(self):
        n = self.n
        base = build_structured_descriptor(self.descriptor, n)
        # every special matrix has norm exactly r, so r = radius keeps them in the ball
        sp = ob.build_special(n, self.radius, base)
        pool = [osp.zero(base, n), sp.c, sp.d, *sp.a, *sp.b]
        return pool[: self.count]


def build_structured_descriptor(descriptor, n):
    if descriptor.dim < 2 * n:
        raise ob.TruncationError(f"{descriptor} needs at least {2 * n} coordinates for structured samples")
    return descriptor


@dataclass(frozen=True)
class Witness:
    i: int
    j: int
    distance: float
    displacement: float


@dataclass
class ModuliReport:
    grid: tuple
    omega_lower: tuple
    rho_upper: tuple
    omega_witness: tuple
    rho_witness: tuple
    pair_count: int
    cell_counts: tuple
    points: list = field(default_factory=list, repr=False)
    images: list = field(default_factory=list, repr=False)

    def at(self, t):
        k = _grid_index(self.grid, t)
        return self.omega_lower[k], self.rho_upper[k]

    def csv_rows(self, n=None):
        rows = []
        for k, t in enumerate(self.grid):
            w = self.omega_witness[k]
            wid = "" if w is None else f"{w.i}-{w.j}"
            rows.append([n, t, self.omega_lower[k], self.rho_upper[k], wid])
        return rows


def _grid_index(grid, t):
    for k, g in enumerate(grid):
        if abs(g - t) <= 1e-12 * max(1.0, abs(t)):
            return k
    raise GridError(f"{t} is not on the grid {grid}")


def _as_cert(v):
    if isinstance(v, osp.NormCertificate):
        # exact engines: the slack only absorbs rounding, use the computed value
        return (v.value, v.value) if v.exact else (v.lower, v.upper)
    v = float(v)
    return v, v


def os_distance(x, y):
    return osp.distance(x, y)


def estimate_from_points(fmap, points, grid=DEFAULT_GRID, distance=os_distance, target_distance=os_distance, workers=1):
    """Moduli over all pairs of an explicit point list.

    ``distance`` and ``target_distance`` return floats or certificates; the
    conservative side of each certificate is used.
    """
    grid = tuple(float(t) for t in grid)
    if list(grid) != sorted(grid):
        raise GridError("grid must be increasing")
    points = list(points)
    images = []
    for p in points:
        try:
            images.append(fmap(p))
        except Exception as exc:  # noqa: BLE001 - re-raised with the offending input
            raise MapEvaluationError(p, exc) from exc
    pairs = [(i, j) for i in range(len(points)) for j in range(i + 1, len(points))]

    def measure(pair):
        i, j = pair
        return _as_cert(distance(points[i], points[j])), _as_cert(target_distance(images[i], images[j]))

    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            measured = list(pool.map(measure, pairs))
    else:
        measured = [measure(p) for p in pairs]

    om, rh, ow, rw, counts = [], [], [], [], []
    for t in grid:
        best, bw = 0.0, None
        low, lw = np.inf, None
        n_om = n_rh = 0
        for (i, j), ((dl, du), (xl, xu)) in zip(pairs, measured):
            if du <= t:
                n_om += 1
                if bw is None or xl > best:
                    best, bw = xl, Witness(i, j, du, xl)
            if dl >= t:
                n_rh += 1
                if xu < low:
                    low, lw = xu, Witness(i, j, dl, xu)
        # pairs admissible at t stay admissible at larger t, so omega is monotone
        om.append(best)
        ow.append(bw)
        rh.append(low)
        rw.append(lw)
        counts.append((n_om, n_rh))
    return ModuliReport(grid, tuple(om), tuple(rh), tuple(ow), tuple(rw), len(pairs), tuple(counts), points, images)


def estimate_moduli(fmap, sampler, grid=DEFAULT_GRID, workers=1, extra_points=()):
    """Moduli of ``fmap`` on the sampler's points (plus any ``extra_points``)."""
    pts = list(sampler.samples()) + list(extra_points)
    return estimate_from_points(fmap, pts, grid, workers=workers)


def affine_bound_check(report, slope=None, intercept=None):
    """Grid points where ``omega_lower(t) > slope t + intercept``.

    Defaults to ``slope = intercept = L = omega_lower(1)``.
    """
    L = report.at(1.0)[0]
    a = L if slope is None else slope
    b = L if intercept is None else intercept
    violations = [(t, w) for t, w in zip(report.grid, report.omega_lower) if w > a * t + b + nx.CERT_SLACK]
    return L, violations


@dataclass
class EquiModuliReport:
    grid: tuple
    reports: list
    omega_lower: tuple
    rho_upper: tuple
    omega_source: tuple
    rho_source: tuple


def aggregate_equi(reports):
    reports = list(reports)
    if not reports:
        raise ValueError("need at least one report")
    grid = reports[0].grid
    for r in reports[1:]:
        if len(r.grid) != len(grid) or any(abs(a - b) > 1e-12 for a, b in zip(r.grid, grid)):
            raise GridError("reports use different grids")
    om = np.array([r.omega_lower for r in reports])
    rh = np.array([r.rho_upper for r in reports])
    return EquiModuliReport(
        grid,
        reports,
        tuple(om.max(axis=0)),
        tuple(rh.min(axis=0)),
        tuple(int(k) for k in om.argmax(axis=0)),
        tuple(int(k) for k in rh.argmin(axis=0)),
    )


@dataclass(frozen=True)
class ExpansionVerdict:
    expanding: bool
    margin: float
    witness: Witness | None
    report_index: int


def expansion_witness(equi, r):
    """``rho_upper(r) > 0``: evidence only; a zero value with its witness proves collapse."""
    k = _grid_index(equi.grid, r)
    src = equi.rho_source[k]
    margin = equi.rho_upper[k]
    return ExpansionVerdict(bool(margin > 0), float(margin), equi.reports[src].rho_witness[k], src)
