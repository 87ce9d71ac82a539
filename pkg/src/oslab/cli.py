"""Command-line front end: ``oslab <command> [options]``.

Every report embeds the resolved configuration, the seed and a hash of the
package sources, and is byte-identical for a fixed configuration.
"""

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import coarse as co
from . import interpolation as ip
from . import kalton as kt
from . import obstruction as ob
from . import opspaces as osp

EXIT_OK = 0
EXIT_VERIFY = 2
EXIT_INPUT = 3
EXIT_BUDGET = 4

COMMANDS = ("norm", "interp", "lemma32", "obstruction", "prop31", "kalton", "sphere-glue", "moduli")
BUILTINS = ("lemma32-b", "zero", "random", "special-c", "special-c-minus-d")
CANDIDATES = {"transpose": ob.transpose_candidate, "collapsing": ob.collapsing_candidate}


class InputError(ValueError):
    pass


def code_version():
    h = hashlib.sha256()
    for p in sorted(Path(__file__).parent.glob("*.py")):
        h.update(p.name.encode())
        h.update(p.read_bytes())
    return h.hexdigest()[:16]


# ---------------------------------------------------------------------------
# Configuration


def parse_range(text):
    """``"3"``, ``"1-6"`` or ``"1,2,5"`` -> list of ints."""
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            a, b = part.split("-", 1)
            lo, hi = int(a), int(b)
            if hi < lo:
                raise InputError(f"empty range {part!r}")
            out.extend(range(lo, hi + 1))
        else:
            out.append(int(part))
    if not out:
        raise InputError(f"empty range {text!r}")
    return out


def parse_floats(text):
    vals = []
    for p in str(text).split(","):
        p = p.strip()
        if p:
            if "/" in p:
                a, b = p.split("/")
                vals.append(float(a) / float(b))
            else:
                vals.append(float(p))
    if not vals:
        raise InputError(f"empty list {text!r}")
    return vals


def read_config_file(path):
    """``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    for no, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{path}:{no}: expected key = value, got {line!r}")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


@dataclass
class RunConfig:
    command: str
    n_range: list
    theta: list
    truncation: int | None
    budget: float | None
    seed: int
    out: str | None
    format: str
    workers: int
    extra: dict = field(default_factory=dict)

    def to_json(self):
        return {
            "command": self.command,
            "n_range": self.n_range,
            "theta": self.theta,
            "truncation": self.truncation,
            "budget": self.budget,
            "seed": self.seed,
            "format": self.format,
            "workers": self.workers,
            **{k: self.extra[k] for k in sorted(self.extra)},
        }


DEFAULTS = {
    "norm": {"n_range": "3", "theta": "0.5"},
    "interp": {"n_range": "2", "theta": "0.5"},
    "lemma32": {"n_range": "1-6", "theta": "0,0.25,0.5,0.75,1"},
    "obstruction": {"n_range": "1-200", "theta": "0"},
    "prop31": {"n_range": "1-8", "theta": "0"},
    "kalton": {"n_range": "3", "theta": "0"},
    "sphere-glue": {"n_range": "3", "theta": "0"},
    "moduli": {"n_range": "2", "theta": "0"},
}


def build_parser():
    p = argparse.ArgumentParser(prog="oslab", description="Operator-space norm and embedding experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="key = value file; command-line flags override it")
        s.add_argument("--seed", type=int)
        s.add_argument("--out", help="output directory (default: stdout)")
        s.add_argument("--budget", type=float, help="solver budget multiplier; kalton and sphere-glue: time limit in seconds")
        s.add_argument("--n-range", dest="n_range")
        s.add_argument("--theta")
        s.add_argument("--truncation", type=int)
        s.add_argument("--format", choices=("csv", "json"))
        s.add_argument("--workers", type=int)
        if name in ("norm", "interp"):
            s.add_argument("--element", help="OsElement JSON file")
            s.add_argument("--builtin", choices=BUILTINS)
            s.add_argument("--space", default=None)
        if name == "obstruction":
            s.add_argument("--gamma")
            s.add_argument("--r")
            s.add_argument("--D")
            s.add_argument("--L")
            s.add_argument("--symmetric", action="store_true", default=None)
        if name in ("prop31", "moduli"):
            s.add_argument("--r")
            s.add_argument("--candidate", choices=sorted(CANDIDATES))
        if name == "moduli":
            s.add_argument("--source")
            s.add_argument("--target")
            s.add_argument("--count")
            s.add_argument("--radius")
            s.add_argument("--strategy", choices=co.STRATEGIES)
        if name in ("kalton", "sphere-glue"):
            s.add_argument("--k-max")
            s.add_argument("--samples")
            s.add_argument("--inject-fault", action="store_true", default=None)
    return p


def resolve(args):
    cmd = args.command
    merged = dict(DEFAULTS[cmd])
    if args.config:
        merged.update(read_config_file(args.config))
    for k, v in vars(args).items():
        if k in ("command", "config") or v is None:
            continue
        merged[k] = v
    try:
        cfg = RunConfig(
            command=cmd,
            n_range=parse_range(merged.pop("n_range")),
            theta=parse_floats(merged.pop("theta")),
            truncation=None if merged.get("truncation") is None else int(merged.pop("truncation")),
            budget=None if merged.get("budget") is None else float(merged.pop("budget")),
            seed=int(merged.pop("seed", 0)),
            out=merged.pop("out", None),
            format=str(merged.pop("format", "csv")),
            workers=int(merged.pop("workers", 1)),
        )
    except (TypeError, ValueError) as exc:
        raise InputError(str(exc)) from exc
    merged.pop("truncation", None)
    merged.pop("budget", None)
    if cfg.format not in ("csv", "json"):
        raise InputError(f"unknown format {cfg.format!r}")
    cfg.extra = {k: v for k, v in merged.items() if v is not None}
    return cfg


# ---------------------------------------------------------------------------
# Output


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else ("inf" if v > 0 else ("-inf" if v < 0 else "nan"))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def dump_json(obj):
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def dump_csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


class Emitter:
    def __init__(self, cfg, stdout):
        self.cfg = cfg
        self.stdout = stdout
        self.files = []

    def header(self):
        return {"config": self.cfg.to_json(), "seed": self.cfg.seed, "code_version": code_version()}

    def emit(self, stem, payload, table=None):
        """Write the JSON report and, for tables in CSV mode, the CSV as well."""
        report = {**self.header(), **payload}
        outputs = [(f"{stem}.json", dump_json(report))]
        if table is not None and self.cfg.format == "csv":
            header, rows = table
            prefix = f"# code_version={code_version()} seed={self.cfg.seed} config={json.dumps(_clean(self.cfg.to_json()), sort_keys=True)}\n"
            outputs.append((f"{stem}.csv", prefix + dump_csv(header, rows)))
        if self.cfg.out:
            d = Path(self.cfg.out)
            d.mkdir(parents=True, exist_ok=True)
            for name, text in outputs:
                (d / name).write_text(text)
                self.files.append(str(d / name))
        else:
            name, text = outputs[-1]
            self.stdout.write(text)


# ---------------------------------------------------------------------------
# Commands


def _element(cfg, n):
    extra = cfg.extra
    if extra.get("element"):
        path = extra["element"]
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise InputError(f"cannot read element {path}: {exc}") from exc
        try:
            return "file", osp.OsElement.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"{path}: malformed element: {exc}") from exc
    name = extra.get("builtin", "lemma32-b")
    kind = extra.get("space") or "Row"
    if kind not in osp.KINDS:
        raise InputError(f"unknown space {kind!r}")
    if name == "lemma32-b":
        x = ob.lemma32_element(n, "Row")
    else:
        dim = cfg.truncation or 2 * n
        if name == "zero":
            x = osp.zero(osp.Row(dim), n)
        elif name == "random":
            x = osp.random_element(osp.Row(dim), n, np.random.default_rng([cfg.seed, n]))
        else:
            sp = ob.build_special(n, 1.0, osp.Row(dim))
            x = sp.c if name == "special-c" else sp.c - sp.d
    theta = cfg.theta[0] if kind == "InterpRC" else None
    space = osp.OsDescriptor(kind, x.space.dim, theta)
    return name, osp.OsElement(space, x.coords)


def _budget(cfg):
    b = ip.DEFAULT_BUDGET
    if cfg.budget is not None:
        b = b.scaled(points=max(16, int(b.points * cfg.budget)), restarts=max(1, int(b.restarts * cfg.budget)))
    return b


def cmd_norm(cfg, em):
    rows, certs = [], []
    for n in cfg.n_range:
        name, x = _element(cfg, n)
        cert = osp.norm(x, _budget(cfg))
        certs.append({"element": name, "n": n, "space": x.space.to_json(), "certificate": cert.to_json()})
        rows.append([name, n, x.space.kind, cert.lower, cert.upper, int(cert.exact)])
    em.emit("norm", {"results": certs}, (["element", "n", "space", "lower", "upper", "exact"], rows))
    return EXIT_OK


def cmd_interp(cfg, em):
    rows, out = [], []
    for n in cfg.n_range:
        name, x = _element(cfg, n)
        couple = ip.row_couple(x.d, x.n)
        for t in cfg.theta:
            c = ip.bracket(x.coords.ravel(), couple, t, _budget(cfg))
            out.append({"element": name, "n": n, **c.to_json()})
            rows.append([name, n, t, c.lower, c.upper, c.upper_kind])
    em.emit("interp", {"results": out}, (["element", "n", "theta", "lower", "upper", "upper_kind"], rows))
    return EXIT_OK


def cmd_lemma32(cfg, em):
    try:
        table = ob.lemma32_table(cfg.n_range, cfg.theta, _budget(cfg), cfg.workers)
    except ob.BracketError as exc:
        em.emit("lemma32", {"error": str(exc), "passed": False})
        return EXIT_VERIFY
    rows = [r.as_csv_row() for r in table]
    em.emit("lemma32", {"rows": [dict(zip(ob.LEMMA32_HEADER, r)) for r in rows], "passed": True}, (ob.LEMMA32_HEADER, rows))
    return EXIT_OK


def _float(cfg, key, default):
    try:
        return float(cfg.extra.get(key, default))
    except ValueError as exc:
        raise InputError(f"--{key}: {exc}") from exc


def _truthy(v):
    return v is True or str(v).lower() in ("1", "true", "yes", "on")


def cmd_obstruction(cfg, em):
    gamma = _float(cfg, "gamma", 1.0)
    r, D, L = (_float(cfg, k, 1.0) for k in ("r", "D", "L"))
    try:
        res = ob.growth_obstruction(cfg.theta[0], gamma, r, D, L, cfg.n_range, symmetric=_truthy(cfg.extra.get("symmetric", False)))
    except ob.OrderingError as exc:
        raise InputError(str(exc)) from exc
    rows = [row.as_csv_row() for row in res.rows]
    payload = {
        "theta": res.theta,
        "gamma": res.gamma,
        "reduced": res.reduced,
        "n_star": res.n_star,
        "n_certified": res.n_certified,
        "rows": [dict(zip(ob.OBSTRUCTION_HEADER, r)) for r in rows],
    }
    em.emit("obstruction", payload, (ob.OBSTRUCTION_HEADER, rows))
    return EXIT_OK


def cmd_prop31(cfg, em):
    r = _float(cfg, "r", 1.0)
    cand = cfg.extra.get("candidate", "transpose")
    if cand not in CANDIDATES:
        raise InputError(f"unknown candidate {cand!r}")
    table = ob.prop31_divergence(cfg.n_range, r, CANDIDATES[cand], workers=cfg.workers, seed=cfg.seed)
    rows = [row.as_csv_row() for row in table]
    em.emit("prop31", {"candidate": cand, "r": r, "rows": [dict(zip(ob.PROP31_HEADER, x)) for x in rows]}, (ob.PROP31_HEADER, rows))
    return EXIT_OK


def cmd_moduli(cfg, em):
    n = cfg.n_range[0]
    dim = cfg.truncation or 2 * n
    src = osp.OsDescriptor(cfg.extra.get("source", "Row"), dim)
    tgt = osp.OsDescriptor(cfg.extra.get("target", "Column"), dim)
    cand = CANDIDATES[cfg.extra.get("candidate", "transpose")]
    sampler = co.DomainSampler(
        src, n, _float(cfg, "radius", 4.0), int(_float(cfg, "count", 24)), cfg.seed, cfg.extra.get("strategy", "uniform-ball")
    )

    def fmap(x):
        return ob.amplify(cand, x, tgt)

    rep = co.estimate_moduli(fmap, sampler, workers=cfg.workers)
    rows = rep.csv_rows(n)
    L, viol = co.affine_bound_check(rep)
    payload = {
        "rows": [dict(zip(["n", "t", "omega_lower", "rho_upper", "witness"], x)) for x in rows],
        "pairs": rep.pair_count,
        "L": L,
        "affine_violations": viol,
    }
    em.emit("moduli", payload, (["n", "t", "omega_lower", "rho_upper", "witness"], rows))
    return EXIT_OK


def _faulty_section(q, k):
    good = kt.section_into_Z(q, k, math.exp(-k))
    m = good.meta["m"]

    def rule(x):
        z = good(x)
        return kt.ZVector(q.M, {m: z.parts[m] * 1.01})

    return kt.HomogeneousMap(rule, q.target, "Z", dict(good.meta))


def _kalton_params(cfg):
    N = cfg.truncation or cfg.n_range[0]
    k_max = int(_float(cfg, "k_max", 3))
    if not 1 <= N <= 6:
        raise InputError(f"quotient size N={N} outside 1..6")
    if not 1 <= k_max <= 4:
        raise InputError(f"k_max={k_max} outside 1..4")
    return N, k_max


def cmd_kalton(cfg, em):
    N, k_max = _kalton_params(cfg)
    samples = int(_float(cfg, "samples", 200))
    q = kt.sign_quotient(N)
    fault = _truthy(cfg.extra.get("inject_fault", False))
    seconds = cfg.budget
    levels, status, partial = [], EXIT_OK, False
    for k in range(1, k_max + 1):
        section = _faulty_section(q, k) if fault else None
        try:
            checks = kt.verify_equivalence(q, k, samples, cfg.seed, section=section, seconds=seconds)
        except kt.BudgetExceeded:
            partial = True
            levels.append({"k": k, "partial": True, "checks": []})
            break
        levels.append({"k": k, "m": kt.choose_m(q.C, k, math.exp(-k)), "checks": [c.to_json() for c in checks]})
        if not all(c.passed for c in checks):
            status = EXIT_VERIFY
    if partial:
        status = EXIT_BUDGET
    payload = {
        "N": N,
        "quotient": {"delta": q.delta, "C": q.C, "columns": q.M},
        "sum_norm": "max",
        "injected_fault": fault,
        "levels": levels,
        "partial": partial,
        "passed": status == EXIT_OK,
    }
    em.emit("kalton", payload)
    return status


def cmd_sphere_glue(cfg, em):
    N, k_max = _kalton_params(cfg)
    pairs = int(_float(cfg, "samples", 500))
    q = kt.sign_quotient(N)
    seconds = cfg.budget
    levels, status = [], EXIT_OK
    for k in range(1, k_max + 1):
        try:
            rep = kt.verify_gluing(q, k, pairs, cfg.seed, seconds=seconds)
        except kt.BudgetExceeded:
            levels.append({"k": k, "partial": True})
            status = EXIT_BUDGET
            break
        levels.append({"k": k, "checks": [c.to_json() for c in rep.checks], "diagnostics": rep.diagnostics})
        if not all(c.passed for c in rep.checks):
            status = EXIT_VERIFY
    cert, rhs = kt.ray_counterexample(q) if N == 3 else (None, None)
    payload = {
        "N": N,
        "levels": levels,
        "ray_pair": None if cert is None else {"lhs": cert.upper, "rhs": rhs},
        "passed": status == EXIT_OK,
    }
    em.emit("sphere-glue", payload)
    return status


HANDLERS = {
    "norm": cmd_norm,
    "interp": cmd_interp,
    "lemma32": cmd_lemma32,
    "obstruction": cmd_obstruction,
    "prop31": cmd_prop31,
    "kalton": cmd_kalton,
    "sphere-glue": cmd_sphere_glue,
    "moduli": cmd_moduli,
}


def main(argv=None, stdout=None, stderr=None):
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        cfg = resolve(args)
        return HANDLERS[cfg.command](cfg, Emitter(cfg, stdout))
    except (InputError, osp.ShapeError, osp.UnsupportedDescriptorError, ob.TruncationError) as exc:
        stderr.write(f"oslab {args.command}: input error: {exc}\n")
        return EXIT_INPUT


def main_entry():
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
