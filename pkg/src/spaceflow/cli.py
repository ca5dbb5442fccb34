"""Command line entry point: ``spaceflow {simulate,verify,convergence,corpus,report}``.

Every command writes its artifacts under ``--out`` together with the fully
resolved configuration.  Failures print a one-line JSON error record to
stderr, write ``error.json`` and exit with a nonzero status (2 for a
violated hypothesis, 3 for a numerical failure, 1 otherwise).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import corpus as corpus_mod
from .flow import FlowConfig, HypothesisError, evolution_residual, run, variational_residual
from .hypersurface import (
    ProfileGraph,
    divergence_identity_residual,
    gradient_identity_residual,
    hessian_identity_residual,
    load_shape,
    minkowski_residual,
    save_shape,
)
from .inequalities import GAP_TOL, THEOREMS, HypothesisFailure, monotonicity_audit, reports_to_csv, verify
from .spaceform import NumericFailure, SpaceForm
from .symfunc import ConeViolation
from .weights import from_spec

log = logging.getLogger("spaceflow")

CHECKS = ("minkowski", "hessian", "gradient", "divergence", "evolution", "variational")


@dataclass
class ExperimentConfig:
    """Resolved settings of one command; the JSON config file uses these field names."""

    epsilon: int = -1
    n: int = 3
    representation: str = "profile"
    N: int = 512
    k: int = 1
    l: int = 0
    weights: list = field(default_factory=lambda: ["pow:2"])
    corpus: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    out: str = "out"
    shape: str | None = None
    inequality: str = "af-quermass"
    alpha: float | None = None
    checks: list = field(default_factory=lambda: ["minkowski"])
    resolutions: list = field(default_factory=lambda: [128, 256, 512])

    @classmethod
    def from_file(cls, path) -> ExperimentConfig:
        data = json.loads(Path(path).read_text())
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


CORPUS_DEFAULTS = {"count": 10, "amplitude": 0.05, "seed": 0, "modes": 4, "r0": 1.0, "margin_floor": 0.01,
                   "hypothesis": None}
TOL_DEFAULTS = {"gap": GAP_TOL, "slack": 1e-8, "roundness": 1e-3, "t_max": 40.0, "cfl": 0.4, "dt": 1e-2}


def _parse_kv(text: str) -> dict:
    out = {}
    for item in filter(None, text.split(",")):
        key, sep, val = item.partition("=")
        if not sep:
            raise ValueError(f"expected key=value, got {item!r}")
        try:
            out[key.strip()] = json.loads(val)
        except json.JSONDecodeError:
            out[key.strip()] = val.strip()
    return out


def _resolve(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    for name in ("epsilon", "n", "N", "k", "l", "out", "shape", "representation"):
        val = getattr(args, name, None)
        if val is not None:
            setattr(cfg, name, val)
    if getattr(args, "weight", None):
        cfg.weights = list(args.weight)
    corpus = dict(CORPUS_DEFAULTS)
    corpus.update(cfg.corpus)
    spec = getattr(args, "corpus", None)
    if spec and spec != "default":
        if Path(spec).exists():
            corpus["path"] = spec
        else:
            corpus.update(_parse_kv(spec))
    if getattr(args, "seed", None) is not None:
        corpus["seed"] = args.seed
    cfg.corpus = corpus
    tol = dict(TOL_DEFAULTS)
    tol.update(cfg.tolerances)
    if getattr(args, "tol", None):
        tol.update(_parse_kv(args.tol))
    cfg.tolerances = tol
    for name in ("inequality", "alpha"):
        val = getattr(args, name, None)
        if val is not None:
            setattr(cfg, name, val)
    if getattr(args, "check", None):
        cfg.checks = list(args.check)
    if getattr(args, "resolutions", None):
        cfg.resolutions = [int(x) for x in args.resolutions.split(",")]
    return cfg


def _form(cfg) -> SpaceForm:
    return SpaceForm(int(cfg.epsilon))


def _shape_from_spec(spec: str, cfg: ExperimentConfig, N: int | None = None):
    """``sphere:<r>``, ``legendre:<r0>:<c1>,<c2>,...`` or a shape JSON file."""
    N = N or cfg.N
    kind, _, rest = spec.partition(":")
    if kind == "sphere":
        return ProfileGraph.sphere(cfg.n, _form(cfg), float(rest), N=N)
    if kind == "legendre":
        r0, _, coeffs = rest.partition(":")
        c = [float(x) for x in coeffs.split(",") if x]
        return corpus_mod.legendre_shape(cfg.n, _form(cfg), float(r0), c, 1.0, N=N)
    if Path(spec).exists():
        return load_shape(spec)
    raise ValueError(f"cannot interpret shape {spec!r}")


def _shapes(cfg: ExperimentConfig, N: int | None = None) -> list:
    if cfg.shape:
        return [_shape_from_spec(cfg.shape, cfg, N)]
    c = cfg.corpus
    if "path" in c:
        p = Path(c["path"])
        files = sorted(p.glob("*.json")) if p.is_dir() else [p]
        return [load_shape(f) for f in files if f.name not in ("manifest.json", "config.json", "error.json")]
    form = _form(cfg)
    corp = corpus_mod.generate(cfg.n, form, int(c["count"]), amplitude=float(c["amplitude"]), seed=int(c["seed"]),
                               r0=float(c["r0"]), modes=int(c["modes"]), hypothesis=c.get("hypothesis"),
                               margin_floor=float(c["margin_floor"]), N=N or cfg.N,
                               representation=cfg.representation, k=cfg.k)
    return [s.graph for s in corp]


def _write_config(out: Path, cfg: ExperimentConfig, command: str):
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps({"command": command, **asdict(cfg)}, indent=1, sort_keys=True))


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def _write_rows(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(x) for x in r])


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_simulate(cfg: ExperimentConfig) -> int:
    out = Path(cfg.out)
    _write_config(out, cfg, "simulate")
    tol = cfg.tolerances
    fcfg = FlowConfig(k=cfg.k, weights=[from_spec(w) for w in cfg.weights], dt_init=float(tol["dt"]),
                      cfl=float(tol["cfl"]), t_max=float(tol["t_max"]), monotonicity_slack=float(tol["slack"]),
                      roundness_stop=float(tol["roundness"]))
    failed = False
    for i, g in enumerate(_shapes(cfg)):
        r = run(g, fcfg)
        audit = monotonicity_audit(r)
        r.to_csv(out / f"run_{i:03d}.csv")
        manifest = r.manifest()
        manifest["audit"] = audit.to_dict()
        (out / f"run_{i:03d}.json").write_text(json.dumps(manifest, indent=1, sort_keys=True))
        failed |= not audit.passed or not r.terminal["converged"]
        print(f"run {i}: converged={r.terminal['converged']} r_inf={r.terminal['r_inf']:.12g} "
              f"audit={'pass' if audit.passed else 'FAIL'}")
    return 4 if failed else 0


def cmd_verify(cfg: ExperimentConfig) -> int:
    out = Path(cfg.out)
    _write_config(out, cfg, "verify")
    tol = float(cfg.tolerances["gap"])
    reports, failures = [], []
    weights = [from_spec(w) for w in cfg.weights]
    for i, g in enumerate(_shapes(cfg)):
        for w in weights if cfg.inequality not in ("af-power", "volume-aux") else [None]:
            try:
                reports += verify(cfg.inequality, g, k=cfg.k, l=cfg.l, weight=w, alpha=cfg.alpha, tol=tol)
            except HypothesisFailure as exc:
                failures.append({"shape": i, "weight": getattr(w, "name", None), "reason": exc.reason})
    reports_to_csv(reports, out / "gaps.csv")
    (out / "hypothesis_failures.json").write_text(json.dumps(failures, indent=1, sort_keys=True))
    bad = [r for r in reports if not r.passed]
    print(f"{len(reports)} reports, {len(bad)} negative gaps beyond tolerance, {len(failures)} hypothesis failures")
    if failures and not reports:
        raise HypothesisFailure(cfg.inequality, failures[0]["reason"])
    return 4 if bad else 0


def convergence_table(g_at, checks, resolutions, k: int, weight=None) -> list[list]:
    """Residual of each check at each resolution and the ratio to the next coarser one."""
    rows = []
    for check in checks:
        prev = None
        for N in resolutions:
            g = g_at(N)
            geo = g.geometry()
            if check == "minkowski":
                res = minkowski_residual(geo, k)
            elif check == "divergence":
                res = divergence_identity_residual(geo, k)
            elif check == "hessian":
                res = hessian_identity_residual(g)
            elif check == "gradient":
                res = gradient_identity_residual(g)
            elif check in ("evolution", "variational"):
                fcfg = FlowConfig(k=k, weights=[weight or from_spec("pow:2")])
                dt = 1e-4 * resolutions[0] / N
                if check == "evolution":
                    res = evolution_residual(g, fcfg, dt=dt, with_bulk=(k == 1 and g.form.epsilon != 0)).residual
                else:
                    res = variational_residual(g, fcfg, k, dt=dt).residual
            else:
                raise ValueError(f"unknown check {check!r}; known: {', '.join(CHECKS)}")
            ratio = prev / res if prev is not None and res > 0 else math.nan
            rows.append([check, N, res, ratio])
            prev = res
    return rows


def cmd_convergence(cfg: ExperimentConfig) -> int:
    out = Path(cfg.out)
    _write_config(out, cfg, "convergence")
    weight = from_spec(cfg.weights[0])
    rows = []
    base = _shapes(cfg, N=cfg.resolutions[0])
    for i, g0 in enumerate(base):
        if cfg.shape:
            def g_at(N, spec=cfg.shape):
                return _shape_from_spec(spec, cfg, N)
        elif "corpus" in g0.metadata and isinstance(g0, ProfileGraph):
            def g_at(N, g0=g0):
                p = g0.metadata["corpus"]
                return corpus_mod.legendre_shape(g0.n, g0.form, p["r0"], p["coefficients"], p["amplitude"], N=N)
        else:
            raise ValueError("convergence studies need a --shape descriptor or a generated corpus")
        rows += [[i] + r for r in convergence_table(g_at, cfg.checks, cfg.resolutions, cfg.k, weight)]
    _write_rows(out / "convergence.csv", ["shape", "check", "N", "residual", "ratio"], rows)
    for r in rows:
        print(f"shape {r[0]} {r[1]:>11s} N={r[2]:<5d} residual={r[3]:.3e} ratio={r[4]:.2f}")
    return 0


def cmd_corpus(cfg: ExperimentConfig) -> int:
    out = Path(cfg.out)
    _write_config(out, cfg, "corpus")
    c = cfg.corpus
    corp = corpus_mod.generate(cfg.n, _form(cfg), int(c["count"]), amplitude=float(c["amplitude"]),
                               seed=int(c["seed"]), r0=float(c["r0"]), modes=int(c["modes"]),
                               hypothesis=c.get("hypothesis"), margin_floor=float(c["margin_floor"]), N=cfg.N,
                               representation=cfg.representation, k=cfg.k)
    rows = []
    for i, s in enumerate(corp):
        save_shape(s.graph, out / f"shape_{i:03d}.json")
        rows.append([i, s.provenance["draw"], s.margins["hypothesis"], s.margins["strict"], s.margins["static"],
                     s.margins["hconvex"]])
    _write_rows(out / "corpus.csv", ["shape", "draw", "hypothesis_margin", "strict", "static", "hconvex"], rows)
    print(f"{len(corp)} shapes accepted out of {corp.attempts} draws (rate {corp.acceptance_rate:.3f})")
    return 0


def cmd_report(cfg: ExperimentConfig) -> int:
    """Aggregate every artifact found under ``--out`` into ``summary.json`` and ``summary.csv``."""
    out = Path(cfg.out)
    if not out.is_dir():
        raise FileNotFoundError(f"no artifact directory {out}")
    rows = []
    for p in sorted(out.rglob("gaps.csv")):
        with open(p) as fh:
            recs = list(csv.DictReader(fh))
        worst = min((float(r["relative_gap"]) for r in recs), default=math.nan)
        rows.append(["gaps", str(p.relative_to(out)), len(recs), worst, all(r["passed"] == "true" for r in recs)])
    for p in sorted(out.rglob("run_*.json")):
        m = json.loads(p.read_text())
        ok = m["terminal"]["converged"] and m["audit"]["passed"]
        worst = max((e["max_violation"] for e in m["audit"]["entries"]), default=math.nan)
        rows.append(["flow", str(p.relative_to(out)), len(m["audit"]["entries"]), worst, ok])
    for p in sorted(out.rglob("convergence.csv")):
        with open(p) as fh:
            recs = [r for r in csv.DictReader(fh) if r["ratio"] != "nan"]
        worst = min((float(r["ratio"]) for r in recs), default=math.nan)
        rows.append(["convergence", str(p.relative_to(out)), len(recs), worst, worst >= 3.5])
    _write_rows(out / "summary.csv", ["kind", "artifact", "records", "worst", "passed"], rows)
    summary = {"passed": all(r[4] for r in rows), "artifacts": len(rows),
               "by_kind": {k: all(r[4] for r in rows if r[0] == k) for k in sorted({r[0] for r in rows})}}
    (out / "summary.json").write_text(json.dumps(summary, indent=1, sort_keys=True))
    for r in rows:
        print(f"{'PASS' if r[4] else 'FAIL'} {r[0]:<12s} {r[1]}")
    return 0 if summary["passed"] else 4


COMMANDS = {"simulate": cmd_simulate, "verify": cmd_verify, "convergence": cmd_convergence, "corpus": cmd_corpus,
            "report": cmd_report}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spaceflow", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with ExperimentConfig fields")
    common.add_argument("--eps", dest="epsilon", type=int, choices=(-1, 0, 1))
    common.add_argument("--n", type=int)
    common.add_argument("--N", type=int)
    common.add_argument("--k", type=int)
    common.add_argument("--l", type=int)
    common.add_argument("--weight", action="append", help="registry id (pow:2, lin_pow:2, exp_pow:1, expr:...) or file")
    common.add_argument("--corpus", help="'default', key=value list, or a directory of shape files")
    common.add_argument("--shape", help="sphere:<r>, legendre:<r0>:<c1>,<c2>,... or a shape file")
    common.add_argument("--representation", choices=("profile", "sphere"))
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="artifact directory")
    common.add_argument("--tol", help="overrides such as gap=1e-6,slack=1e-8,roundness=1e-3")
    common.add_argument("-v", "--verbose", action="store_true")
    sub.add_parser("simulate", parents=[common], help="run flows and write series")
    p = sub.add_parser("verify", parents=[common], help="evaluate inequality gaps over shapes")
    p.add_argument("--inequality", choices=sorted(THEOREMS))
    p.add_argument("--alpha", type=float, help="exponent for af-power")
    p = sub.add_parser("convergence", parents=[common], help="grid refinement study of residuals")
    p.add_argument("--check", action="append", choices=CHECKS)
    p.add_argument("--resolutions", help="comma separated grid sizes, e.g. 128,256,512")
    sub.add_parser("corpus", parents=[common], help="generate and save a shape corpus")
    sub.add_parser("report", parents=[common], help="summarize artifacts in --out")
    return parser


def _exit_code(exc: Exception) -> int:
    if isinstance(exc, (HypothesisFailure, HypothesisError, ConeViolation)):
        return 2
    if isinstance(exc, (NumericFailure, FloatingPointError)):
        return 3
    return 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    cfg = None
    try:
        cfg = _resolve(args)
        return COMMANDS[args.command](cfg)
    except Exception as exc:  # reported as a machine-readable record
        record = {"command": args.command, "error": type(exc).__name__, "message": str(exc),
                  "exit_code": _exit_code(exc)}
        print(json.dumps(record, sort_keys=True), file=sys.stderr)
        if cfg is not None:
            try:
                Path(cfg.out).mkdir(parents=True, exist_ok=True)
                (Path(cfg.out) / "error.json").write_text(json.dumps(record, indent=1, sort_keys=True))
            except OSError:
                pass
        return record["exit_code"]


if __name__ == "__main__":
    sys.exit(main())
