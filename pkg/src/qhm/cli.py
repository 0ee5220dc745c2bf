"""Command line front end: ``qhm <command> [options]``.

Every command writes a JSON report (config, config hash, library version,
per-check measured values against tolerances) and, where a table makes
sense, a CSV file.  Exit status: 0 all checks pass, 1 a check failed,
2 configuration or precondition error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from . import __version__
from .algebra import (AlgebraElement, ModelParams, Window, commutator, involution,
                      star, star_many, structure_constant_residual, trace)
from .conventions import tol
from .errors import ConfigError, NumericalError, PreconditionError

log = logging.getLogger("qhm")

COMMANDS = ("validate", "spectrum", "weyl", "dixmier", "forms", "curvature", "index", "homotopy")
EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

# config key -> (type, default)
CONFIG_KEYS = {
    "c": (int, 1),
    "hbar": (float, 0.1),
    "mu": (float, 0.3),
    "nu": (float, 0.0),
    "alpha": (float, 2.0),
    "window": (str, ""),
    "seed": (int, 0),
    "t": (float, 1.0),
    "steps": (int, 20),
    "grid": (int, 64),
    "pairs": (int, 50),
    "path": (str, "s"),
    "alphas": (str, "1.5,2"),
    "workers": (int, 1),
    "f": (str, ""),
    "g": (str, ""),
    "out": (str, ""),
    "csv": (str, ""),
}

DEFAULT_WINDOWS = {
    "validate": "4,4,2", "spectrum": "4,4,2", "weyl": "16,16,16", "dixmier": "20,20,20",
    "forms": "6,12,4", "curvature": "8,8,1", "index": "2,32,2", "homotopy": "10,10,10",
}


def parse_config_file(path: str) -> Dict[str, str]:
    """Plain UTF-8 ``key=value`` lines; ``#`` starts a comment."""
    out: Dict[str, str] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = value
    return out


@dataclass
class RunConfig:
    command: str
    params: ModelParams
    window: Window
    values: Dict[str, object] = field(default_factory=dict)

    @property
    def seed(self) -> int:
        return int(self.values["seed"])

    def get(self, key: str):
        return self.values[key]

    def canonical(self) -> dict:
        doc = {k: v for k, v in sorted(self.values.items()) if k not in ("out", "csv")}
        doc["command"] = self.command
        return doc

    def hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def make_config(command: str, file_values: Dict[str, str], overrides: Dict[str, object]) -> RunConfig:
    values: Dict[str, object] = {}
    for key, (typ, default) in CONFIG_KEYS.items():
        raw = overrides.get(key)
        if raw is None:
            raw = file_values.get(key, default)
        try:
            values[key] = typ(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key}: {raw!r}") from exc
    if not values["window"]:
        values["window"] = DEFAULT_WINDOWS[command]
    try:
        window = Window.parse(str(values["window"]))
        params = ModelParams(c=values["c"], hbar=values["hbar"], mu=values["mu"],
                             nu=values["nu"], alpha=values["alpha"])
    except (ValueError, PreconditionError) as exc:
        raise ConfigError(str(exc)) from exc
    if values["path"] not in ("s", "alpha"):
        raise ConfigError(f"path must be 's' or 'alpha', got {values['path']!r}")
    return RunConfig(command, params, window, values)


# ---------------------------------------------------------------------------
# reporting
# ---------------------------------------------------------------------------

class Report:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.checks: List[dict] = []
        self.results: Dict[str, object] = {}

    def check(self, name: str, value: float, tolerance: float, passed: bool, **extra) -> bool:
        self.checks.append({"name": name, "value": _jsonable(value), "tolerance": tolerance,
                            "pass": bool(passed), **{k: _jsonable(v) for k, v in extra.items()}})
        return passed

    @property
    def ok(self) -> bool:
        return all(c["pass"] for c in self.checks)

    def document(self) -> dict:
        return {
            "command": self.cfg.command,
            "version": __version__,
            "config": self.cfg.canonical(),
            "config_hash": self.cfg.hash(),
            "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
            "checks": self.checks,
            "results": _jsonable(self.results),
            "status": "pass" if self.ok else "fail",
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def write_csv(path: str, header: List[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _random_element(rng, radius: int = 2, density: float = 0.3) -> AlgebraElement:
    d = {}
    r = range(-radius, radius + 1)
    for m in r:
        for n in r:
            for k in r:
                if rng.random() < density:
                    d[(m, n, k)] = complex(rng.normal(), rng.normal())
    return AlgebraElement(d)


def cmd_validate(cfg: RunConfig, rep: Report) -> None:
    from .repdef import check_homomorphism, smooth_state
    rng = np.random.default_rng(cfg.seed)
    p = cfg.params
    grid, pairs = int(cfg.get("grid")), int(cfg.get("pairs"))
    grid_res, hom_res = 0.0, 0.0
    for _ in range(pairs):
        ia = tuple(int(v) for v in rng.integers(-2, 3, 3))
        ib = tuple(int(v) for v in rng.integers(-2, 3, 3))
        grid_res = max(grid_res, structure_constant_residual(ia, ib, p, grid))
        xi = smooth_state(4, 32, 16, 6, rng, p_range=1)
        hom_res = max(hom_res, check_homomorphism(AlgebraElement.basis(*ia),
                                                  AlgebraElement.basis(*ib), xi, p))
    rep.check("structure_constant_grid", grid_res, tol("structure_constant"),
              grid_res <= tol("structure_constant"))
    rep.check("homomorphism", hom_res, tol("homomorphism"), hom_res <= tol("homomorphism"))
    a, b, c = (_random_element(rng) for _ in range(3))
    assoc = (star(star(a, b, p), c, p) - star(a, star(b, c, p), p)).max_abs()
    invol = (involution(star(a, b, p)) - star(involution(b), involution(a), p)).max_abs()
    tr = abs(trace(commutator(a, b, p)))
    t = tol("algebra_identity")
    scale = max(1.0, a.norm() * b.norm() * c.norm())
    rep.check("associativity", assoc / scale, t, assoc / scale <= t)
    rep.check("involution", invol / scale, t, invol / scale <= t)
    rep.check("trace_property", tr / scale, t, tr / scale <= t)
    rep.results = {"pairs": pairs, "grid": grid}


def cmd_spectrum(cfg: RunConfig, rep: Report) -> None:
    from .dirac import build, closed_form_spectrum, eigensolve
    t = float(cfg.get("t"))
    d = build(cfg.params, cfg.window, t)
    r = eigensolve(d, workers=int(cfg.get("workers")))
    if t == 0.0:
        dev = float(np.abs(r.eigenvalues - closed_form_spectrum(cfg.params, cfg.window)).max())
        rep.check("closed_form_spectrum", dev, tol("closed_form_spectrum"),
                  dev <= tol("closed_form_spectrum"))
    rep.results = {"count": len(r), "min": float(r.eigenvalues[0]), "max": float(r.eigenvalues[-1])}
    if cfg.get("csv"):
        write_csv(str(cfg.get("csv")), ["lambda", "m", "k", "slot"], r.to_rows())


def cmd_weyl(cfg: RunConfig, rep: Report) -> None:
    from .dirac import build, eigensolve, weyl_fit
    d = build(cfg.params, cfg.window, float(cfg.get("t")))
    r = eigensolve(d, workers=int(cfg.get("workers")))
    fit = weyl_fit(r, cfg.params, cfg.window)
    dev = abs(fit["slope"] - 3.0)
    rep.check("weyl_slope", fit["slope"], tol("weyl_slope"), dev <= tol("weyl_slope"), target=3.0)
    rep.results = {"slope": fit["slope"], "range": fit["range"], "eigenvalues": len(r)}
    if cfg.get("csv"):
        write_csv(str(cfg.get("csv")), ["Lambda", "N"], zip(fit["Lambda"], fit["N"]))


def cmd_dixmier(cfg: RunConfig, rep: Report) -> None:
    from .dirac import build, dixmier_ratio, eigensolve
    d = build(cfg.params, cfg.window, float(cfg.get("t")))
    r = eigensolve(d, workers=int(cfg.get("workers")))
    off, off_trend = dixmier_ratio(AlgebraElement.basis(1, 0, 0), np.eye(2), r, d, trend=True)
    half, half_trend = dixmier_ratio(AlgebraElement.one(), np.diag([1.0, 0.0]), r, d, trend=True)
    rep.check("offdiag_ratio", abs(off), tol("dixmier_offdiag"), abs(off) <= tol("dixmier_offdiag"))
    rep.check("half_ratio", half.real, tol("dixmier_half"),
              abs(half - 0.5) <= tol("dixmier_half"), target=0.5)
    rep.results = {"eigenvalues": len(r), "offdiag_trend": off_trend, "half_trend": half_trend}
    if cfg.get("csv"):
        rows = [(n, off_trend[n].real, half_trend[n].real) for n in sorted(half_trend)]
        write_csv(str(cfg.get("csv")), ["N", "ratio_phi100", "ratio_diag10"], rows)


def cmd_forms(cfg: RunConfig, rep: Report) -> None:
    from .forms import (differential, j1_witness, j2_witnesses, j3_witnesses, junk_project,
                        random_j1_witness, represent)
    p, w = cfg.params, cfg.window
    rng = np.random.default_rng(cfg.seed)
    worst_rep, worst_sigma = 0.0, 0.0
    for _ in range(30):
        om = random_j1_witness(rng, p)
        worst_rep = max(worst_rep, represent(om, p).max_abs())
        worst_sigma = max(worst_sigma, represent(differential(om), p).sigma_max_abs())
    rep.check("j1_represent_zero", worst_rep, tol("junk"), worst_rep <= tol("junk"))
    rep.check("j1_sigma_parts", worst_sigma, tol("junk"), worst_sigma <= tol("junk"))
    dw = represent(differential(j1_witness()), p)
    expected = (2j * np.pi) ** 2 * 2.0
    got = dw["I"][(0, 3, 0)]
    rep.check("j1_witness_phi03", abs(got - expected), tol("junk"), abs(got - expected) <= tol("junk")
              and dw.sigma_max_abs() == 0.0)
    images = {}
    for name, om in {**{f"J2_{k}": v for k, v in j2_witnesses().items()},
                     **{f"J3_{k}": v for k, v in j3_witnesses().items()}}.items():
        images[name] = represent(differential(om), p, w).nonzero_labels()
    rep.results = {"witness_images": images}
    deg4 = junk_project(represent(differential(j3_witnesses()["w1"]), p, w))
    rep.check("degree4_quotient_zero", deg4.max_abs(), 0.0, deg4.is_zero())


def _load_element(path: str, default: AlgebraElement) -> AlgebraElement:
    if not path:
        return default
    try:
        return AlgebraElement.from_json(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot read element from {path}: {exc}") from exc


def cmd_curvature(cfg: RunConfig, rep: Report) -> None:
    from .connections import (curvature, fg_closed_forms, fg_connection, pointwise_scalar_check,
                              trig_element)
    p = cfg.params
    f = _load_element(str(cfg.get("f")), trig_element([(1, 1.0, 0.0)], 0))
    g = _load_element(str(cfg.get("g")), trig_element([(1, 0.0, 1.0)], 1))
    cd = curvature(fg_connection(f, g, p), p)
    expect = fg_closed_forms(f, g, p)["scalar"]
    res = (cd.scalar - expect).max_abs()
    rep.check("scalar_curvature", res, tol("scalar_curvature"), res <= tol("scalar_curvature"))
    rng = np.random.default_rng(cfg.seed)
    x, y = rng.random(100), rng.random(100)
    table = pointwise_scalar_check(cd.scalar, f, g, p, x, y)
    pw = float(table[:, 4].max())
    rep.check("pointwise", pw, tol("pointwise"), pw <= tol("pointwise"))
    rep.results = cd.to_json()
    if cfg.get("csv"):
        write_csv(str(cfg.get("csv")), ["x", "y", "r_computed", "minus_2_f1sq_g1sq"],
                  (row[:4] for row in table))


def cmd_index(cfg: RunConfig, rep: Report) -> None:
    from .ktheory import index_pairing
    try:
        alphas = [float(s) for s in str(cfg.get("alphas")).split(",") if s.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad alphas {cfg.get('alphas')!r}") from exc
    res = index_pairing(cfg.params, cfg.window, alphas, t_weight=float(cfg.get("t")),
                        workers=int(cfg.get("workers")))
    rep.check("index_stable", len(set(res.values.values())), 1, res.stable)
    rep.check("u2_commutes_with_E", res.u2_commutator, tol("u2_commutator"),
              res.u2_commutator <= tol("u2_commutator"))
    rep.results = res.to_dict()
    if cfg.get("csv"):
        write_csv(str(cfg.get("csv")), ["m", "k", "flow"],
                  ((m, k, v) for (m, k), v in sorted(res.per_block.items())))


def cmd_homotopy(cfg: RunConfig, rep: Report) -> None:
    from .dirac import build
    from .ktheory import HomotopyPath, choose_kappa, homotopy_continuity, interpolation_bound
    kind = str(cfg.get("path"))
    base = build(cfg.params, cfg.window, 0.0)
    a = interpolation_bound(base, kind, 0.0)
    half = interpolation_bound(base, kind, 0.5)
    rep.check("interpolation_half", half, tol("interpolation"), half <= a + tol("interpolation"),
              relative_bound=a)
    kappa = choose_kappa(base, a)
    path = HomotopyPath(base, kind, np.linspace(0.0, 1.0, int(cfg.get("steps"))), kappa["kappa"])
    cont = homotopy_continuity(path, a, workers=int(cfg.get("workers")))
    worst = max(r[2] / r[3] for r in cont["rows"])
    rep.check("continuity", worst, 1.0, cont["ok"])
    rep.check("endpoint", path.endpoint_defect(), 1e-12, path.endpoint_defect() <= 1e-12)
    rep.results = {"a": a, "kappa": kappa, "constant": cont["constant"]}
    if cfg.get("csv"):
        write_csv(str(cfg.get("csv")), ["s", "t", "deviation", "bound"], cont["rows"])


HANDLERS = {
    "validate": cmd_validate, "spectrum": cmd_spectrum, "weyl": cmd_weyl, "dixmier": cmd_dixmier,
    "forms": cmd_forms, "curvature": cmd_curvature, "index": cmd_index, "homotopy": cmd_homotopy,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qhm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"qhm {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, help=HANDLERS[name].__name__.replace("cmd_", ""))
        sp.add_argument("--config", help="key=value configuration file")
        for key, (typ, _) in CONFIG_KEYS.items():
            sp.add_argument(f"--{key}", type=str, default=None, dest=key)
        sp.add_argument("-v", "--verbose", action="store_true")
    return parser


def run(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        file_values = parse_config_file(args.config) if args.config else {}
        overrides = {k: getattr(args, k) for k in CONFIG_KEYS if getattr(args, k) is not None}
        cfg = make_config(args.command, file_values, overrides)
        rep = Report(cfg)
        HANDLERS[args.command](cfg, rep)
    except (ConfigError, PreconditionError) as exc:
        print(f"qhm: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"qhm: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    doc = rep.document()
    text = json.dumps(doc, indent=2, sort_keys=True)
    out = cfg.get("out")
    if out:
        Path(str(out)).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    for c in rep.checks:
        log.info("%s %s value=%s tol=%s", "PASS" if c["pass"] else "FAIL", c["name"],
                 c["value"], c["tolerance"])
    return EXIT_OK if rep.ok else EXIT_CHECK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
