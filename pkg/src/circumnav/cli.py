"""Command line entry point: ``circumnav run | verify | sweep | list``.

Exit codes: 0 success, 1 a verification check failed, 2 invalid scenario or
sweep file, 3 the simulation aborted (collision or numerical blow-up).
"""

from __future__ import annotations

import argparse
import itertools
import json
import logging
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from circumnav import analysis as an
from circumnav import scenario as sc
from circumnav.control import AlphaTooSmall, ControlGains
from circumnav.output import write_csv, write_plots
from circumnav.report import invariant_checks, summarize, _jsonable
from circumnav.sim import REFERENCE_GAINS, ConfigError, ScenarioConfig, SimulationError, random_scenario, run

log = logging.getLogger("circumnav")

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_SIM = 0, 1, 2, 3

GRID_KEYS = {
    "n", "seed", "dt", "t_end", "integrator", "controller", "k_est", "k_c", "k_omega", "alpha", "d_star",
}


def _apply_flags(cfg: ScenarioConfig, args) -> ScenarioConfig:
    changes = {}
    if args.integrator:
        changes["integrator"] = args.integrator
    if args.dt is not None:
        changes["dt"] = args.dt
    if args.t_end is not None:
        changes["t_end"] = args.t_end
    if args.log_stride is not None:
        changes["log_stride"] = args.log_stride
    if args.allow_unsafe_alpha:
        changes["allow_unsafe_alpha"] = True
    if args.baseline:
        changes["controller"] = "baseline"
    return cfg.replace(**changes) if changes else cfg


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(_jsonable(data), indent=2, sort_keys=False) + "\n")


def _simulate(args, verify: bool) -> int:
    cfg = _apply_flags(sc.load(args.scenario), args)
    cfg.validate()
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    traj = run(cfg, backend=args.backend, validate=False)
    log.info("simulated %d samples with the %s kernel in %.2f s", len(traj), traj.backend, time.perf_counter() - t0)
    errors = an.compute_errors(traj)
    write_csv(out / "trajectory.csv", traj, errors)
    (out / "scenario.used").write_text(sc.dumps(cfg))
    checks = invariant_checks(traj, errors) if verify else []
    summary = summarize(traj, checks)
    _write_json(out / "summary.json", summary.to_dict())
    if verify:
        _write_json(out / "verify.json", {
            "scenario_id": cfg.scenario_id,
            "ok": summary.ok,
            "checks": [c.__dict__ for c in checks],
        })
        for c in checks:
            margin = "" if c.margin is None else f" (margin {c.margin:.3g})"
            print(f"{c.status.upper():8s} {c.name}{margin}: {c.detail}")
    if args.plots:
        write_plots(out / "plots", traj, errors)
    print(f"{cfg.scenario_id}: final ||xtilde|| {summary.final_xtilde_max:.3g} m, "
          f"|delta| {summary.final_delta_max:.3g} m, |btilde| {summary.final_btilde_max:.3g} rad; "
          f"outputs in {out}")
    if verify and not summary.ok:
        return EXIT_CHECK
    return EXIT_OK


# -- sweeps -----------------------------------------------------------------

def load_sweep(path: Path) -> tuple[list[dict], dict]:
    data = sc.tomllib.loads(Path(path).read_text())
    grid = data.get("grid", {})
    unknown = set(grid) - GRID_KEYS
    if unknown:
        raise ConfigError(f"unknown grid keys: {sorted(unknown)}")
    keys = sorted(grid)
    values = [v if isinstance(v, list) else [v] for v in (grid[k] for k in keys)]
    points = [dict(zip(keys, combo)) for combo in itertools.product(*values)]
    if not points:
        points = [{}]
    return points, data


def point_config(point: dict, sweep: dict, base_dir: Path) -> ScenarioConfig:
    base = None
    if "base" in sweep:
        ref = Path(sweep["base"])
        candidate = ref if ref.is_absolute() else base_dir / ref
        base = sc.load(candidate if candidate.exists() else sweep["base"])
    t_end = point.get("t_end", sweep.get("t_end"))
    if "n" in point:
        g = base.gains if base else REFERENCE_GAINS
        cfg = random_scenario(
            int(point["n"]), int(point.get("seed", sweep.get("seed", 0))),
            d_star=float(point.get("d_star", base.d_star if base else 1.2)), gains=g,
            uniform_spacing=bool(sweep.get("uniform_spacing", False)),
        )
    elif base is not None:
        cfg = base
    else:
        raise ConfigError("sweep needs a base scenario or an n axis in its grid")
    changes = {}
    for key in ("dt", "integrator", "controller"):
        if key in point:
            changes[key] = point[key]
    if "d_star" in point and "n" not in point:
        changes["d_star"] = float(point["d_star"])
    if t_end is not None:
        changes["t_end"] = float(t_end)
    if "log_stride" in sweep:
        changes["log_stride"] = int(sweep["log_stride"])
    gains = {k: (sc.parse_angle(point[k]) if k == "alpha" else float(point[k]))
             for k in ("k_est", "k_c", "k_omega", "alpha") if k in point}
    if gains:
        g = cfg.gains
        changes["gains"] = ControlGains(**{**g.__dict__, **gains})
    label = "_".join(f"{k}={point[k]}" for k in sorted(point)) or "base"
    changes["scenario_id"] = f"{cfg.scenario_id}[{label}]"
    return cfg.replace(**changes)


def _run_point(job):
    index, cfg, backend = job
    try:
        cfg.validate()
        traj = run(cfg, backend=backend, validate=False)
        summary = summarize(traj, invariant_checks(traj))
        final = np.concatenate((traj.positions[-1].ravel(), traj.estimates[-1].ravel()))
        return index, "ok", summary.to_dict(), final.tolist()
    except (ConfigError, AlphaTooSmall) as exc:
        return index, "config-error", {"scenario_id": cfg.scenario_id, "error": str(exc)}, None
    except SimulationError as exc:
        return index, "crashed", {"scenario_id": cfg.scenario_id, "error": str(exc)}, None


def dt_study_order(points: list[dict], results: list) -> float | None:
    """Richardson order when the grid varies in ``dt`` alone over three values
    with a constant refinement ratio."""
    if len(points) != 3 or any(set(p) - {"dt"} for p in points):
        return None
    if not all(r[1] == "ok" for r in results):
        return None
    order = sorted(range(3), key=lambda i: -points[i]["dt"])
    dts = [points[i]["dt"] for i in order]
    ratio = dts[0] / dts[1]
    if not math.isclose(ratio, dts[1] / dts[2], rel_tol=1e-9):
        return None
    return an.observed_order([results[i][3] for i in order], ratio)


def _sweep(args) -> int:
    path = Path(args.sweep)
    if not path.exists() and path.name == args.sweep:
        bundled = sc.bundled_path(path.name if path.suffix else path.name + ".sweep")
        if bundled.is_file():
            path = Path(str(bundled))
    try:
        points, sweep = load_sweep(path)
    except (OSError, sc.tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot read sweep file {path}: {exc}") from None
    configs = [point_config(p, sweep, path.parent) for p in points]
    jobs = [(i, cfg, args.backend) for i, cfg in enumerate(configs)]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_point, jobs))
    else:
        results = [_run_point(j) for j in jobs]
    results.sort(key=lambda r: r[0])

    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for (index, status, summary, _), point in zip(results, points):
        run_dir = out / f"point_{index:04d}"
        run_dir.mkdir(exist_ok=True)
        _write_json(run_dir / "summary.json", summary)
        rows.append({"index": index, "status": status, **point,
                     **{k: summary.get(k) for k in (
                         "scenario_id", "ok", "final_xtilde_max", "final_delta_max", "final_btilde_max",
                         "settling_btilde", "error")}})
    aggregate = {
        "points": len(rows),
        "crashed": sum(r["status"] == "crashed" for r in rows),
        "config_errors": sum(r["status"] == "config-error" for r in rows),
        "checks_failed": sum(r["status"] == "ok" and not r["ok"] for r in rows),
        "dt_observed_order": dt_study_order(points, results),
        "rows": rows,
    }
    _write_json(out / "aggregate.json", aggregate)
    columns = sorted({k for r in rows for k in r}, key=lambda k: (k != "index", k))
    with open(out / "aggregate.csv", "w") as fh:
        fh.write(",".join(columns) + "\n")
        for r in rows:
            fh.write(",".join("" if r.get(c) is None else str(r.get(c)) for c in columns) + "\n")
    for r in rows:
        print(f"{r['index']:4d} {r['status']:12s} {r.get('scenario_id')}")
    if aggregate["dt_observed_order"] is not None:
        print(f"observed order under dt refinement: {aggregate['dt_observed_order']:.3f}")
    if aggregate["crashed"] or aggregate["config_errors"]:
        return EXIT_SIM if aggregate["crashed"] else EXIT_CONFIG
    return EXIT_OK


def _list(args) -> int:
    root = sc.bundled_path("")
    for name in sorted(p.name for p in root.iterdir() if p.name.endswith((".scenario", ".sweep"))):
        print(name)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="circumnav", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("scenario", help="scenario file, or the name of a bundled scenario")
        p.add_argument("-o", "--output", default="out", help="output directory")
        p.add_argument("--integrator", choices=("euler", "rk4"))
        p.add_argument("--dt", type=float)
        p.add_argument("--t-end", type=float)
        p.add_argument("--log-stride", type=int)
        p.add_argument("--plots", action="store_true", help="write SVG panels")
        p.add_argument("--allow-unsafe-alpha", action="store_true",
                       help="run even if alpha <= 3pi (no rotation guarantee)")
        p.add_argument("--baseline", action="store_true",
                       help="drive the controller with the true separation (needs communication)")
        p.add_argument("--backend", choices=("auto", "c", "python"), default=None)

    p_run = sub.add_parser("run", help="simulate a scenario and write CSV and summary")
    add_common(p_run)
    p_run.set_defaults(func=lambda a: _simulate(a, verify=False))

    p_ver = sub.add_parser("verify", help="simulate and evaluate every invariant check")
    add_common(p_ver)
    p_ver.set_defaults(func=lambda a: _simulate(a, verify=True))

    p_sw = sub.add_parser("sweep", help="run a grid of scenarios")
    p_sw.add_argument("sweep", help="sweep file")
    p_sw.add_argument("-o", "--output", default="out-sweep")
    p_sw.add_argument("-j", "--jobs", type=int, default=1)
    p_sw.add_argument("--backend", choices=("auto", "c", "python"), default=None)
    p_sw.set_defaults(func=_sweep)

    p_ls = sub.add_parser("list", help="list bundled scenarios")
    p_ls.set_defaults(func=_list)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except AlphaTooSmall as exc:
        print(f"error: {exc} (pass --allow-unsafe-alpha to run anyway)", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"error: invalid scenario: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationError as exc:
        print(f"error: simulation aborted: {exc}", file=sys.stderr)
        return EXIT_SIM


if __name__ == "__main__":
    sys.exit(main())
