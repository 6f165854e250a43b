"""Experiment harness: seeded sweeps, persistence, and convergence reports.

Commands
--------
simulate            write one path CSV per seed
check-assumptions   run the smoothness/rank/perpendicularity checkers
tailbound           visit-count histogram against the analytic tail bound
reconstruct         the full extraction sweep with summary and figures
frechet             distance between a stored path and a trajectory

Configuration comes from a JSON file (--config) with flag overrides; flags
win.  Every CSV starts with a comment line carrying the configuration hash
and base seed, so a run can be replayed exactly.  Exit codes: 0 success,
1 usage, 2 assumption failure, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np
from scipy.stats import norm

from . import figures
from .boxes import BoxGrid, extract_hitting, visit_count_tail_bound
from .errors import InvalidInput, StratSigError
from .fields import check_hormander, check_non_perpendicular, check_smooth_bounded, family_from_dict
from .integrals import SamplePath
from .inversion import ReconstructConfig, reconstruct
from .sde import DiffusionSpec, SimConfig, check_step_resolution, constant_C, simulate
from .trajectories import PLT, trajectory_distance

DEFAULTS = {
    "spec": "brownian2d",
    "eps": [0.2],
    "mu": 2.0,
    "mu_prime": 3.0,
    "steps": 4096,
    "seeds": 8,
    "base_seed": 1,
    "tol": 1e-6,
    "radius": 2,
    "depth": 3,
    "lam": 4.0,
    "lam_override": None,
    "box_halfwidth": 2.0,
    "check_grid": 5,
    "out": "out",
}

BUILTIN_SPECS = {
    "brownian2d": {
        "N": 2,
        "d": 2,
        "fields": [
            {"name": "V0", "components": ["0", "0"]},
            {"name": "V1", "components": ["1", "0"]},
            {"name": "V2", "components": ["0", "1"]},
        ],
    },
    "heisenberg2d": {
        "N": 2,
        "d": 2,
        "fields": [
            {"name": "V0", "components": ["0", "0"]},
            {"name": "V1", "components": ["1", "0"]},
            {"name": "V2", "components": ["0", "x1"]},
        ],
    },
    "drift2d": {
        "N": 2,
        "d": 2,
        "fields": [
            {"name": "V0", "components": ["1", "0"]},
            {"name": "V1", "components": ["0", "0"]},
            {"name": "V2", "components": ["0", "0"]},
        ],
    },
}


class UsageError(Exception):
    pass


def load_config(args) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        try:
            with open(args.config) as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        unknown = set(file_cfg) - set(DEFAULTS)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(file_cfg)
    for key in ("out", "seeds", "base_seed", "steps", "tol", "radius", "spec"):
        val = getattr(args, key.replace("-", "_"), None)
        if val is not None:
            cfg[key] = val
    if getattr(args, "eps", None):
        try:
            cfg["eps"] = [float(e) for e in args.eps.split(",")]
        except ValueError as exc:
            raise UsageError(f"bad --eps list '{args.eps}'") from exc
    if not cfg["eps"]:
        raise UsageError("eps list must not be empty")
    return cfg


def config_hash(cfg: dict) -> str:
    """Hash of the scientific configuration; where the output lands is not
    part of the experiment's identity."""
    payload = {k: v for k, v in cfg.items() if k != "out"}
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:12]


def resolve_spec(name_or_path: str):
    """Field family from a builtin name or a JSON file path."""
    if name_or_path in BUILTIN_SPECS:
        obj = BUILTIN_SPECS[name_or_path]
    else:
        try:
            with open(name_or_path) as fh:
                obj = json.load(fh)
        except OSError as exc:
            raise UsageError(f"cannot read spec {name_or_path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise UsageError(f"spec {name_or_path} is not valid JSON: {exc}") from exc
    try:
        n, d, family = family_from_dict(obj)
    except InvalidInput as exc:
        raise UsageError(f"bad field spec: {exc}") from exc
    spec = DiffusionSpec(family.fields[0], tuple(family.fields[1:]))
    return n, d, family, spec


def _comment(cfg: dict) -> str:
    return f"config={config_hash(cfg)} base_seed={cfg['base_seed']}"


def cmd_simulate(cfg: dict) -> int:
    _, _, _, spec = resolve_spec(cfg["spec"])
    out = Path(cfg["out"]) / "paths"
    out.mkdir(parents=True, exist_ok=True)
    for replica in range(cfg["seeds"]):
        path = simulate(spec, SimConfig(steps=cfg["steps"], seed=cfg["base_seed"], replica=replica))
        fname = out / f"path_{replica:04d}.csv"
        fname.write_text(path.to_csv(comment=_comment(cfg) + f" replica={replica}"))
    print(f"wrote {cfg['seeds']} path files to {out}")
    return 0


def cmd_check_assumptions(cfg: dict) -> int:
    n, _, family, _ = resolve_spec(cfg["spec"])
    b = cfg["box_halfwidth"]
    axes = [np.linspace(-b, b, cfg["check_grid"])] * n
    grid = np.array(np.meshgrid(*axes, indexing="ij")).reshape(n, -1).T
    reports = {
        "smooth and bounded on the box": check_smooth_bounded(family, [-b] * n, [b] * n),
        "iterated brackets span (depth %d)" % cfg["depth"]: check_hormander(family, grid, cfg["depth"]),
        "drivers not perpendicular to any axis": check_non_perpendicular(family, grid),
    }
    failed = False
    for name, rep in reports.items():
        print(f"[{'PASS' if rep.passed else 'FAIL'}] {name}")
        for line in rep.details:
            print(f"    {line}")
        for line in rep.warnings:
            print(f"    warning: {line}")
        failed = failed or not rep.passed
    return 2 if failed else 0


def wilson_upper(successes: int, trials: int, confidence: float = 0.99) -> float:
    """Upper limit of the Wilson score interval for a binomial proportion."""
    z = norm.ppf(0.5 + confidence / 2.0)
    phat = successes / trials
    denom = 1.0 + z**2 / trials
    center = phat + z**2 / (2 * trials)
    half = z * np.sqrt(phat * (1 - phat) / trials + z**2 / (4 * trials**2))
    return min(1.0, float((center + half) / denom))


def cmd_tailbound(cfg: dict) -> int:
    n, d, _, spec = resolve_spec(cfg["spec"])
    eps = cfg["eps"][0]
    b = cfg["box_halfwidth"]
    c = constant_C(spec, [-b] * n, [b] * n)
    check_step_resolution(spec, cfg["steps"], eps, cfg["mu_prime"], [-b] * n, [b] * n)
    grid = BoxGrid(eps, cfg["mu"])
    counts = np.zeros(cfg["seeds"], dtype=np.int64)
    for replica in range(cfg["seeds"]):
        path = simulate(spec, SimConfig(steps=cfg["steps"], seed=cfg["base_seed"], replica=replica))
        counts[replica] = extract_hitting(path, grid).count
    threshold = 2.0 * c / eps ** cfg["mu"]
    k_max = int(counts.max())
    lines = [f"# {_comment(cfg)}", "k,empirical_p,wilson_upper_99,bound"]
    ks, emp, wil, bnd = [], [], [], []
    for k in range(k_max + 1):
        hits = int(np.sum(counts == k))
        p = hits / cfg["seeds"]
        w = wilson_upper(hits, cfg["seeds"])
        if k > threshold:
            bound = min(visit_count_tail_bound(n, d, c, eps, cfg["mu"], k), 1.0)
            bound_s = f"{bound:.17g}"
        else:
            bound, bound_s = None, "NA"
        lines.append(f"{k},{p:.17g},{w:.17g},{bound_s}")
        ks.append(k)
        emp.append(p)
        wil.append(w)
        bnd.append(bound)
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    (out / "tailbound.csv").write_text("\n".join(lines) + "\n")
    figures.save_tailbound_figure(ks, emp, wil, bnd, eps, out / "tailbound.png")
    violations = [
        k for k, w, v in zip(ks, wil, bnd) if v is not None and w > min(v, 1.0)
    ]
    print(f"wrote {out / 'tailbound.csv'} ({k_max + 1} rows, C={c:.6g}, threshold k>{threshold:.6g})")
    print(f"violations of the bound: {len(violations)}")
    return 0


def cmd_reconstruct(cfg: dict) -> int:
    _, _, family, spec = resolve_spec(cfg["spec"])
    rconfig = ReconstructConfig(
        eps_list=tuple(cfg["eps"]),
        seeds=cfg["seeds"],
        base_seed=cfg["base_seed"],
        steps=cfg["steps"],
        mu=cfg["mu"],
        mu_prime=cfg["mu_prime"],
        tol=cfg["tol"],
        radius=cfg["radius"],
        depth=cfg["depth"],
        lam=cfg["lam"],
        lam_override=cfg["lam_override"],
        box_halfwidth=cfg["box_halfwidth"],
    )
    report = reconstruct(spec, rconfig, form_fields=family)
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    (out / "reconstruct.csv").write_text(report.rows_csv(comment=_comment(cfg)))
    (out / "reconstruct_summary.csv").write_text(report.summary_csv(comment=_comment(cfg)))
    if report.summaries:
        figures.save_convergence_figure(report.summaries, out / "convergence.png")
    for eps in rconfig.eps_list:
        row = next((r for r in report.rows if r.eps == eps and r.word is not None), None)
        if row is None:
            continue
        path = simulate(spec, SimConfig(steps=rconfig.steps, seed=rconfig.base_seed, replica=row.seed))
        figures.save_reconstruction_figure(
            path.points, eps * row.word.astype(float), eps, out / f"overlay_eps{eps:g}.png"
        )
    for s in report.summaries:
        print(
            f"eps={s['eps']:g}: median_frechet={s['median_frechet']:.4g} "
            f"sandwich={s['sandwich_rate']:.0%} word_match={s['word_match_rate']:.0%}"
        )
    errors = [r for r in report.rows if r.error]
    if errors:
        print(f"{len(errors)} rows carried errors (recorded in the report)")
    print(f"wrote {out / 'reconstruct.csv'}")
    return 0


def cmd_frechet(path_a: str, path_b: str) -> int:
    try:
        path = SamplePath.from_csv(Path(path_a).read_text())
    except (OSError, InvalidInput, ValueError, IndexError) as exc:
        raise UsageError(f"cannot load path CSV {path_a}: {exc}") from exc
    try:
        if path_b.endswith(".json"):
            traj = PLT.from_json(Path(path_b).read_text())
        else:
            traj = PLT(SamplePath.from_csv(Path(path_b).read_text()).points)
    except (OSError, InvalidInput, ValueError, IndexError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot load trajectory {path_b}: {exc}") from exc
    if traj.dim != path.dim:
        raise UsageError(f"dimension mismatch: path is {path.dim}-d, trajectory {traj.dim}-d")
    print(f"{trajectory_distance(traj, path):.17g}")
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        sys.exit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="stratsig", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--out", help="output directory")
        p.add_argument("--spec", help="builtin spec name or field-family JSON file")
        p.add_argument("--seeds", type=int, help="number of seeds")
        p.add_argument("--base-seed", type=int, dest="base_seed", help="base seed")
        p.add_argument("--eps", help="comma-separated box scales, decreasing")
        p.add_argument("--steps", type=int, help="simulation steps")
        p.add_argument("--tol", type=float, help="relative nonzero tolerance")
        p.add_argument("--radius", type=int, help="word-extension search radius")

    for name in ("simulate", "check-assumptions", "tailbound", "reconstruct"):
        add_common(sub.add_parser(name))
    fre = sub.add_parser("frechet")
    fre.add_argument("path_a", help="path CSV")
    fre.add_argument("path_b", help="trajectory JSON or path CSV")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "frechet":
            return cmd_frechet(args.path_a, args.path_b)
        cfg = load_config(args)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "check-assumptions":
            return cmd_check_assumptions(cfg)
        if args.command == "tailbound":
            return cmd_tailbound(cfg)
        if args.command == "reconstruct":
            return cmd_reconstruct(cfg)
        raise UsageError(f"unknown command {args.command}")
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except StratSigError as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
