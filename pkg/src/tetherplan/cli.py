"""Command line front end: plan, gen, batch and validate."""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .errors import ScenarioParseError
from .metrics import COLUMNS, aggregate, format_value
from .pipeline import run_ablation, run_pipeline
from .scenario import DEFAULT_BOUNDS, KINDS, generate_scenario, loads_scenario, save_scenario
from .tether import tether_feasible

EXIT = {"OK": 0, "PARSE_ERROR": 2, "INFEASIBLE": 3, "NO_PATH": 4, "INTERNAL": 5}
MANIFEST_FORMAT = "tetherplan-manifest/1"
UNITS = {"LASV": "m", "LAUV": "m", "NC": "count", "CASV": "s", "CAUV": "s", "STDS": "m/s",
         "STDU": "m/s", "STDT": "m/s", "DOBS": "m", "RFRQ": "count"}


def exit_code(exc: BaseException) -> int:
    return EXIT.get(getattr(exc, "code", "INTERNAL"), EXIT["INTERNAL"])


def error_record(exc: BaseException) -> dict:
    code = getattr(exc, "code", "INTERNAL")
    if code not in EXIT:
        code = "INTERNAL"
    diag = getattr(exc, "diagnostic", None)
    return {"code": code, "class": type(exc).__name__,
            "diagnostic": None if diag is None else str(diag), "message": str(exc)}


def _num(v: float) -> str:
    return format(float(v), ".12g")


def _dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def versions() -> dict:
    return {"tetherplan": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def _rounded(a) -> list:
    return np.round(np.asarray(a, dtype=float), 12).tolist()


def trajectory_document(out) -> dict:
    traj = out.trajectory
    sched = traj.schedule

    def vehicle(key, segments):
        spline = traj.splines.get(key)
        knots = [] if spline is None else _rounded(np.column_stack([spline.times,
                                                                   spline.speeds]))
        return {"segments_m": [_rounded(s.control_points) for s in segments],
                "speed_knots": knots, "final_time_s": round(float(traj.times[-1]), 12)}

    return {
        "format": "tetherplan-trajectory/1",
        "total_time_s": round(traj.total_time, 12),
        "tick_s": round(traj.dt, 12),
        "segment_times_s": _rounded(sched.segment_times if sched is not None else []),
        "asv": vehicle("asv", traj.asv_segments),
        "auv": vehicle("auv", traj.auv_segments),
        "max_chord_m": round(float(traj.chords.max()), 12),
        "chord_limit_m": out.scenario.tether.chord_limit,
        "samples_file": "samples.csv",
        "tether_file": "tether.csv",
        "diagnostics": out.diagnostics,
    }


SAMPLE_HEADER = ("t_s", "asv_x_m", "asv_y_m", "asv_z_m", "asv_speed_mps", "auv_x_m", "auv_y_m",
                 "auv_z_m", "auv_speed_mps", "chord_m", "asv_clearance_m", "auv_clearance_m")


def samples_csv(traj) -> str:
    rows = []
    for k, t in enumerate(traj.times):
        rows.append([_num(t), *map(_num, traj.asv_positions[k]), _num(traj.asv_speeds[k]),
                     *map(_num, traj.auv_positions[k]), _num(traj.auv_speeds[k]),
                     _num(traj.chords[k]), _num(traj.asv_clearance[k]),
                     _num(traj.auv_clearance[k])])
    return _csv_text(SAMPLE_HEADER, rows)


def tether_csv(traj) -> str:
    rows = []
    for k, t in enumerate(traj.times):
        ts = _num(t)
        for i, p in enumerate(traj.tether_points[k]):
            rows.append([k, ts, i, _num(p[0]), _num(p[1]), _num(p[2])])
    return _csv_text(("tick", "t_s", "point", "x_m", "y_m", "z_m"), rows)


def metrics_csv(report) -> str:
    d = report.to_dict()
    return _csv_text(COLUMNS, [[format_value(d[c]) for c in COLUMNS]])


def _clean_metrics(report) -> dict:
    d = report.to_dict()
    return {k: (None if v is None else (int(v) if k in ("NC", "RFRQ") else round(float(v), 12)))
            for k, v in d.items()}


def _write_all(out_dir: Path, files: dict) -> dict:
    out_dir.mkdir(parents=True, exist_ok=True)
    digests = {}
    for name, text in files.items():
        data = text.encode("utf-8")
        (out_dir / name).write_bytes(data)
        digests[name] = hashlib.sha256(data).hexdigest()
    return digests


def _resolve_input(path: str):
    """Scenario from a scenario file or from the scenario embedded in a manifest."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioParseError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError:
        doc = None
    if isinstance(doc, dict) and doc.get("format") == MANIFEST_FORMAT:
        if "scenario" not in doc:
            raise ScenarioParseError("field scenario: missing from manifest", "scenario")
        return loads_scenario(_dumps(doc["scenario"]))
    return loads_scenario(text)


def run_plan(scenario_path, out_dir, seed=None, first_robot=None, timings=False,
             ablation=False):
    """Run one scenario and write its artifacts; returns ``(exit_code, record)``.

    Artifacts are byte-identical between reruns unless ``timings`` is set,
    because wall-clock planner times are only recorded on request.
    """
    out_dir = Path(out_dir)
    sc = None
    try:
        sc = _resolve_input(scenario_path)
        if seed is not None:
            sc = replace(sc, seed=int(seed))
        if first_robot is not None:
            sc = sc.with_first_robot(first_robot)
        out = run_pipeline(sc)
        metrics = out.metrics
        if not timings:
            metrics = replace(metrics, CASV=None, CAUV=None)
        mdoc = {"format": "tetherplan-metrics/1", "units": UNITS,
                "metrics": _clean_metrics(metrics)}
        if ablation:
            _, _, abl = run_ablation(sc, plan=out.plan)
            if not timings:
                abl = replace(abl, CASV=None, CAUV=None)
            mdoc["ablation"] = _clean_metrics(abl)
        files = {"trajectory.json": _dumps(trajectory_document(out)),
                 "samples.csv": samples_csv(out.trajectory),
                 "tether.csv": tether_csv(out.trajectory),
                 "metrics.json": _dumps(mdoc),
                 "metrics.csv": metrics_csv(metrics)}
        digests = _write_all(out_dir, files)
        manifest = _manifest(sc, "ok", timings, digests)
        _write_all(out_dir, {"manifest.json": _dumps(manifest)})
        return 0, {"status": "ok", "out": str(out_dir), "metrics": mdoc["metrics"]}
    except Exception as exc:  # noqa: BLE001 - every failure becomes an exit status
        rec = error_record(exc)
        if sc is not None:
            manifest = _manifest(sc, "error", timings, {}, rec)
            _write_all(out_dir, {"manifest.json": _dumps(manifest)})
        return exit_code(exc), {"status": "error", "error": rec}


def _manifest(sc, status, timings, digests, error=None) -> dict:
    doc = {"format": MANIFEST_FORMAT, "status": status, "seed": sc.seed,
           "first_robot": sc.first_robot, "timings": bool(timings), "versions": versions(),
           "scenario": sc.to_dict(), "files": digests}
    if error is not None:
        doc["error"] = error
    return doc


def _batch_one(kind, seed, first, with_ablation, bounds):
    """One batch row per algorithm; failures are recorded, never raised."""
    rows = []
    try:
        sc = generate_scenario(kind, seed, bounds=bounds, first_robot=first)
    except Exception as exc:  # noqa: BLE001
        rec = error_record(exc)
        algos = ("full", "ablation") if with_ablation else ("full",)
        return [{"seed": seed, "status": "error", "error": rec, "algorithm": a} for a in algos]
    try:
        out = run_pipeline(sc)
        rows.append({"seed": seed, "status": "ok", "algorithm": "full",
                     "metrics": _clean_metrics(out.metrics)})
        plan = out.plan
    except Exception as exc:  # noqa: BLE001
        rows.append({"seed": seed, "status": "error", "algorithm": "full",
                     "error": error_record(exc)})
        plan = None
    if with_ablation:
        try:
            _, _, abl = run_ablation(sc, plan=plan)
            rows.append({"seed": seed, "status": "ok", "algorithm": "ablation",
                         "metrics": _clean_metrics(abl)})
        except Exception as exc:  # noqa: BLE001
            rows.append({"seed": seed, "status": "error", "algorithm": "ablation",
                         "error": error_record(exc)})
    return rows


def run_batch(kind, count, base_seed, out_dir, first_robot="asv", ablation=False, jobs=1,
              bounds=DEFAULT_BOUNDS) -> dict:
    """Seeded batch over ``base_seed .. base_seed + count - 1``; returns the aggregate."""
    from .metrics import MetricsReport

    if count < 1:
        raise ValueError("count must be at least 1")
    orders = ("asv", "auv") if first_robot == "both" else (first_robot,)
    seeds = list(range(base_seed, base_seed + count))
    tasks = [(kind, s, first, ablation, bounds) for first in orders for s in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_batch_one, *zip(*tasks)))
    else:
        results = [_batch_one(*t) for t in tasks]

    out_dir = Path(out_dir)
    runs_dir = out_dir / "runs"
    runs_dir.mkdir(parents=True, exist_ok=True)
    groups = []
    algos = ("full", "ablation") if ablation else ("full",)
    for first in orders:
        per_seed = [r for t, r in zip(tasks, results) if t[2] == first]
        for seed, rows in zip(seeds, per_seed):
            (runs_dir / f"{first}_seed{seed}.json").write_text(_dumps(rows), encoding="utf-8")
        for algo in algos:
            runs = [{k: v for k, v in row.items() if k != "algorithm"}
                    for rows in per_seed for row in rows if row["algorithm"] == algo]
            ok = [MetricsReport.from_dict(r["metrics"]) for r in runs if r["status"] == "ok"]
            agg = aggregate(ok).to_dict() if ok else None
            groups.append({"first_robot": first, "algorithm": algo, "runs": runs,
                           "failures": sum(r["status"] != "ok" for r in runs),
                           "aggregate": agg})
    doc = {"format": "tetherplan-batch/1", "kind": kind, "count": count,
           "base_seed": base_seed, "groups": groups}
    table = []
    run_rows = []
    for g in groups:
        mean = (g["aggregate"] or {}).get("mean", {})
        table.append([kind, g["first_robot"], g["algorithm"], len(g["runs"]), g["failures"],
                      *[format_value(mean.get(c)) for c in COLUMNS]])
        for r in g["runs"]:
            m = r.get("metrics", {})
            run_rows.append([kind, g["first_robot"], g["algorithm"], r["seed"], r["status"],
                             r.get("error", {}).get("code", ""),
                             *[format_value(m.get(c)) for c in COLUMNS]])
    _write_all(out_dir, {
        "aggregate.json": _dumps(doc),
        "table.csv": _csv_text(("kind", "first_robot", "algorithm", "runs", "failures",
                                *COLUMNS), table),
        "runs.csv": _csv_text(("kind", "first_robot", "algorithm", "seed", "status", "error",
                               *COLUMNS), run_rows),
    })
    return doc


def validate_file(path) -> tuple[int, dict]:
    try:
        sc = _resolve_input(path)
        for which in ("start", "goal"):
            p, q = getattr(sc, f"asv_{which}").xyz, getattr(sc, f"auv_{which}").xyz
            check = tether_feasible(p, q, sc.tether, sc.world)
            if not check.ok:
                return EXIT["INFEASIBLE"], {"status": "error", "error": {
                    "code": "INFEASIBLE", "class": "TetherCheck",
                    "diagnostic": check.diagnostic.value,
                    "message": f"{which} pair is not tether-feasible"}}
        return 0, {"status": "ok", "kind": sc.kind, "seed": sc.seed,
                   "obstacles": len(sc.world.obstacles)}
    except Exception as exc:  # noqa: BLE001
        return exit_code(exc), {"status": "error", "error": error_record(exc)}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tetherplan",
                                     description="Tether-aware ASV/AUV path planning.")
    parser.add_argument("--version", action="version", version=f"tetherplan {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="plan one scenario (or rerun a manifest)")
    p.add_argument("scenario")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--first-robot", choices=("asv", "auv"))
    p.add_argument("--timings", action="store_true",
                   help="record planner wall-clock times (breaks byte-identical reruns)")
    p.add_argument("--ablation", action="store_true",
                   help="also report metrics of the unsmoothed baseline")

    g = sub.add_parser("gen", help="write a generated scenario")
    g.add_argument("--kind", required=True, choices=KINDS)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out", required=True)
    g.add_argument("--first-robot", choices=("asv", "auv"), default="asv")

    b = sub.add_parser("batch", help="seeded batch with an aggregate table")
    b.add_argument("--kind", required=True, choices=KINDS)
    b.add_argument("--count", type=int, required=True)
    b.add_argument("--base-seed", type=int, default=0)
    b.add_argument("--first-robot", choices=("asv", "auv", "both"), default="asv")
    b.add_argument("--ablation", action="store_true")
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--out", required=True)

    v = sub.add_parser("validate", help="check a scenario file")
    v.add_argument("scenario")
    return parser


def _emit(record: dict, stream) -> None:
    stream.write(json.dumps(record, sort_keys=True) + "\n")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "plan":
        code, rec = run_plan(args.scenario, args.out, args.seed, args.first_robot,
                             args.timings, args.ablation)
    elif args.command == "gen":
        try:
            sc = generate_scenario(args.kind, args.seed, first_robot=args.first_robot)
            parent = os.path.dirname(os.path.abspath(args.out))
            os.makedirs(parent, exist_ok=True)
            save_scenario(sc, args.out)
            code, rec = 0, {"status": "ok", "out": args.out}
        except Exception as exc:  # noqa: BLE001
            code, rec = exit_code(exc), {"status": "error", "error": error_record(exc)}
    elif args.command == "batch":
        if args.count < 1 or args.jobs < 1:
            code, rec = EXIT["PARSE_ERROR"], {"status": "error", "error": {
                "code": "PARSE_ERROR", "class": "ArgumentError", "diagnostic": "count",
                "message": "--count and --jobs must be at least 1"}}
        else:
            t0 = time.perf_counter()
            doc = run_batch(args.kind, args.count, args.base_seed, args.out,
                            args.first_robot, args.ablation, args.jobs)
            summary = [{"first_robot": g["first_robot"], "algorithm": g["algorithm"],
                        "failures": g["failures"],
                        "nc_total": (g["aggregate"] or {}).get("nc_total")}
                       for g in doc["groups"]]
            code = 0
            rec = {"status": "ok", "out": args.out, "groups": summary,
                   "elapsed_s": round(time.perf_counter() - t0, 3)}
    else:
        code, rec = validate_file(args.scenario)
    _emit(rec, sys.stdout if code == 0 else sys.stderr)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
