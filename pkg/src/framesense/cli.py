"""Command-line surface: validate, theorems, generate, detect, sweep.

Every run is driven by one JSON config file; defaults are embedded here and
the fully resolved config is echoed into the output directory so result
files are self-describing.  Exit codes: 0 success, 1 domain violation
(invalid scenario, or a demanded conclusion failed), 2 I/O or parse error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import detector, turbine
from .frames import DEFAULT_TOL
from .mappings import (
    verify_basis_mapping,
    verify_frame_mapping,
    verify_projective_frame,
    verify_strong_dominance_frame,
)
from .scenario import (
    NotPreSeparableError,
    NotSeparableError,
    build_index_sets,
    factor_readings,
    is_i_dominant,
    is_i_radiative,
    is_j_harmonious,
    is_strongly_i_dominant,
    scenario_from_json_dict,
    sensor_status,
    separate,
    validate_scenario,
)

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_IO = 2

CONFIG_DEFAULTS = {
    "dft_size": 8192,
    "sample_rate": 32768.0,
    "samples_per_state": 256,
    "rng_seed": 20260808,
    "mixing_off_diagonal": 0.1,
    "fault_gear": 1,
    "fault_multiplier": 12.0,
    "fault_hi": 2.0,
    "dead_lo": 0.18,
    "noise_levels": {
        "low": detector.LOW_NOISE_SNR_DB,
        "high": detector.HIGH_NOISE_SNR_DB,
    },
    "sweep_mixing_off_diagonal": 0.5623413251903491,
    "sweep_samples_per_point": 128,
    "snr_lo": -20.0,
    "snr_hi": 0.0,
    "snr_step": 1.0,
    "write_spectra": False,
}


def load_config(path: str | None, overrides: dict | None = None) -> dict:
    cfg = dict(CONFIG_DEFAULTS)
    if path is not None:
        with open(path) as fh:
            user = json.load(fh)
        unknown = set(user) - set(CONFIG_DEFAULTS)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(user)
    for key, value in (overrides or {}).items():
        if value is not None:
            cfg[key] = value
    return cfg


def echo_config(cfg: dict, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "config.json", "w") as fh:
        json.dump(cfg, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_scenario(path: str):
    with open(path) as fh:
        doc = json.load(fh)
    return scenario_from_json_dict(doc)


def cmd_validate(args) -> int:
    s = _load_scenario(args.scenario)
    report = validate_scenario(s, args.tol)
    print(f"scenario: N={s.N} sensors, M={s.M} parameters, K={s.K} times, n={s.n}")
    if report.ok:
        print("validity: OK")
    else:
        print("validity: INVALID")
        for v in report.violations:
            print(f"  - {v}")
    fac = None
    try:
        fac = separate(s, factor_readings(s, args.tol), args.tol)
        print("pre-separable: yes")
        print(f"separable: yes ({s.health.kind} health map)")
    except NotPreSeparableError as err:
        print(f"pre-separable: no (rank > 1 at parameters {[f + 1 for f in err.offending]})")
        print("separable: no")
    except NotSeparableError as err:
        print("pre-separable: yes")
        print(f"separable: no ({err})")
    if fac is not None:
        assign = build_index_sets(s.health_images(), args.tol)
        owners = assign.owners()
        print("coordinate predicates (1-based):")
        print("  i  radiative  dominant  strongly_dominant  owner")
        for i in range(s.n):
            rad = "yes" if is_i_radiative(fac, i, args.tol) else "no"
            dom = "yes" if is_i_dominant(fac, i, args.tol) else "no"
            strong = "yes" if is_strongly_i_dominant(fac, i, s.N, args.tol) else "no"
            print(f"  {i + 1}  {rad}  {dom}  {strong}  {owners[i] + 1}")
        print("sensor harmony:")
        for j in range(s.N):
            harm = "harmonious" if is_j_harmonious(fac, assign, j, args.tol) else "disjoint"
            status = sensor_status(fac, assign, j, args.tol).status
            print(f"  j={j + 1}: {harm}, {status}")
    return EXIT_OK if report.ok else EXIT_DOMAIN


def cmd_theorems(args) -> int:
    s = _load_scenario(args.scenario)
    report = validate_scenario(s, args.tol)
    if not report.ok:
        print("scenario is invalid:", file=sys.stderr)
        for v in report.violations:
            print(f"  - {v}", file=sys.stderr)
        return EXIT_DOMAIN
    try:
        fac = separate(s, factor_readings(s, args.tol), args.tol)
    except (NotPreSeparableError, NotSeparableError) as err:
        print(f"scenario is not separable: {err}", file=sys.stderr)
        return EXIT_DOMAIN
    assign = build_index_sets(s.health_images(), args.tol)
    failed = None if args.fail_sensor is None else args.fail_sensor - 1
    if failed is not None and not 0 <= failed < s.N:
        print(f"--fail-sensor {args.fail_sensor} out of range", file=sys.stderr)
        return EXIT_IO
    reports = {
        "basis_mapping": verify_basis_mapping(fac, assign, args.tol, failed=failed),
        "frame_mapping": verify_frame_mapping(fac, assign, args.tol, failed=failed),
        "projective_frame": verify_projective_frame(
            fac, args.tol, failed=failed, assign=assign
        ),
        "strong_dominance_frame": verify_strong_dominance_frame(fac, args.tol),
    }
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ok = True
    for name, rep in reports.items():
        with open(out / f"theorem_{name}.json", "w") as fh:
            json.dump(rep.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        if not rep.applicable:
            verdict = "hypotheses unmet (no conclusion asserted)"
        elif rep.conclusion:
            verdict = "verified"
        else:
            verdict = "FAILED"
            ok = False
        spans = rep.diagnostics.get("spans")
        if spans is not None:
            verdict += f" [images {'span' if spans else 'do not span'}]"
        print(f"{name}: {verdict}")
    print(f"reports written to {out}")
    return EXIT_OK if ok else EXIT_DOMAIN


def _fleet_and_thresholds(cfg: dict):
    fleet = turbine.default_fleet()
    th = detector.DetectorThresholds(fault_hi=cfg["fault_hi"], dead_lo=cfg["dead_lo"])
    return fleet, th


def _sim_config(cfg: dict) -> turbine.SimConfig:
    return turbine.SimConfig(
        dft_size=cfg["dft_size"],
        sample_rate=cfg["sample_rate"],
        rng_seed=cfg["rng_seed"],
        samples_per_state=cfg["samples_per_state"],
    )


def _dataset_dir(out: Path, sensor_condition: str, noise_level: str) -> Path:
    return out / "datasets" / f"{sensor_condition}_{noise_level}"


def _grid_keys(cfg: dict):
    for sensor_condition in ("good", "s1_failed"):
        for noise_level in cfg["noise_levels"]:
            yield sensor_condition, noise_level


def cmd_generate(args) -> int:
    cfg = load_config(args.config, {"rng_seed": args.seed})
    out = Path(args.out)
    echo_config(cfg, out)
    fleet, _ = _fleet_and_thresholds(cfg)
    mixing = turbine.mixing_matrix(cfg["mixing_off_diagonal"])
    sim = _sim_config(cfg)
    conditions = turbine.engine1_conditions(cfg["fault_gear"], cfg["fault_multiplier"])
    calib = detector.calibration_dataset(fleet, mixing, sim)
    turbine.save_dataset(calib, out / "datasets" / "calibration")
    total = 0
    for sensor_condition, noise_level in _grid_keys(cfg):
        failed = frozenset() if sensor_condition == "good" else frozenset({0})
        run_cfg = replace(
            sim,
            snr_db=cfg["noise_levels"][noise_level],
            failed_sensors=failed,
        )
        path = _dataset_dir(out, sensor_condition, noise_level)
        ds = turbine.generate_dataset(
            fleet,
            mixing,
            run_cfg,
            conditions,
            spectra_dir=path if cfg["write_spectra"] else None,
        )
        turbine.save_dataset(ds, path)
        total += ds.healths.shape[0] * ds.healths.shape[1]
        print(f"wrote {path} ({ds.healths.shape[0] * ds.healths.shape[1]} samples)")
    print(f"total labeled samples: {total}")
    return EXIT_OK


def cmd_detect(args) -> int:
    cfg = load_config(args.config, {"rng_seed": args.seed})
    out = Path(args.out)
    echo_config(cfg, out)
    fleet, th = _fleet_and_thresholds(cfg)
    mixing = turbine.mixing_matrix(cfg["mixing_off_diagonal"])
    sim = _sim_config(cfg)
    data_root = Path(args.data) if args.data else None
    datasets = {}
    calib = None
    if data_root is not None:
        calib_path = data_root / "datasets" / "calibration"
        if calib_path.exists():
            calib = turbine.load_dataset(calib_path)
        for key in _grid_keys(cfg):
            path = _dataset_dir(data_root, *key)
            if path.exists():
                datasets[key] = turbine.load_dataset(path)
    if calib is None:
        calib = detector.calibration_dataset(fleet, mixing, sim)
    missing = [key for key in _grid_keys(cfg) if key not in datasets]
    if missing:
        grid = detector.condition_grid_datasets(
            fleet,
            mixing,
            sim,
            fault_gear=cfg["fault_gear"],
            fault_multiplier=cfg["fault_multiplier"],
            noise_levels=cfg["noise_levels"],
        )
        for key in missing:
            datasets[key] = grid[key]
    baselines = {kind: detector.calibrate(calib, kind) for kind in detector.PIPELINES}
    report = detector.run_conditions(
        datasets, baselines, th, metadata={"config": cfg}
    )
    detector.write_results(report, out)
    for st in report.stats:
        print(
            f"{st.engine_state}/{st.sensor_condition}/{st.noise_level}/{st.pipeline}: "
            f"correct {st.pct_correct:.2f}%"
        )
    print(f"results written to {out}")
    return EXIT_OK


def parse_snr_range(text: str):
    try:
        lo, hi, step = (float(x) for x in text.split(":"))
    except ValueError:
        raise ValueError(f"--snr-range must be LO:HI:STEP, got {text!r}")
    if step <= 0 or hi < lo:
        raise ValueError("need LO <= HI and STEP > 0")
    count = int(round((hi - lo) / step)) + 1
    return [lo + i * step for i in range(count)]


def cmd_sweep(args) -> int:
    cfg = load_config(args.config, {"rng_seed": args.seed})
    out = Path(args.out)
    if args.snr_range:
        grid = parse_snr_range(args.snr_range)
        cfg["snr_lo"], cfg["snr_hi"], cfg["snr_step"] = (
            grid[0],
            grid[-1],
            grid[1] - grid[0] if len(grid) > 1 else 1.0,
        )
    else:
        grid = parse_snr_range(f"{cfg['snr_lo']}:{cfg['snr_hi']}:{cfg['snr_step']}")
    echo_config(cfg, out)
    fleet, th = _fleet_and_thresholds(cfg)
    mixing = turbine.mixing_matrix(cfg["sweep_mixing_off_diagonal"])
    sim = replace(_sim_config(cfg), samples_per_state=cfg["sweep_samples_per_point"])
    points = detector.snr_sweep(fleet, mixing, sim, grid, th)
    detector.write_sweep(points, out)
    print(f"{len(grid)}-point sweep written to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="framesense",
        description=(
            "Sensor-failure-robust spectral fault detection: scenario "
            "validation, frame-theory verification, simulation, and detection"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a scenario file and print its predicates")
    p.add_argument("scenario", help="scenario JSON file")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("theorems", help="run the structural verifiers on a scenario")
    p.add_argument("scenario", help="scenario JSON file")
    p.add_argument("--out", default="theorem-reports")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--fail-sensor", type=int, default=None, metavar="J",
                   help="inject a failure of sensor J (1-based)")
    p.set_defaults(func=cmd_theorems)

    p = sub.add_parser("generate", help="generate the condition-grid datasets")
    p.add_argument("--config", default=None)
    p.add_argument("--out", default="runs/generate")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("detect", help="run both detection pipelines over the grid")
    p.add_argument("--config", default=None)
    p.add_argument("--out", default="runs/detect")
    p.add_argument("--data", default=None, help="read datasets from a generate run")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("sweep", help="detection/false-alarm curves vs SNR")
    p.add_argument("--config", default=None)
    p.add_argument("--out", default="runs/sweep")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--snr-range", default=None, metavar="LO:HI:STEP")
    p.set_defaults(func=cmd_sweep)
    return parser


def _normalize_argv(argv):
    """Join ``--snr-range -20:0:1`` so argparse does not read the value as a flag."""
    out = []
    skip = False
    for i, arg in enumerate(argv):
        if skip:
            skip = False
            continue
        if arg == "--snr-range" and i + 1 < len(argv):
            out.append(f"--snr-range={argv[i + 1]}")
            skip = True
        else:
            out.append(arg)
    return out


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    args = build_parser().parse_args(_normalize_argv(list(argv)))
    try:
        return args.func(args)
    except json.JSONDecodeError as err:
        print(f"parse error: {err}", file=sys.stderr)
        return EXIT_IO
    except FileNotFoundError as err:
        print(f"file not found: {err.filename}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
