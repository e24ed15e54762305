"""Threshold detector on the 28-line health space, plus run statistics.

Per engine block of 7 coordinates the verdict is: failure when every
coordinate collapses below ``dead_lo`` times its calibrated baseline, fault
when any coordinate exceeds ``fault_hi`` times baseline, normal otherwise.
The detector runs identically on both fusion pipelines (basis selection and
magnitude sum); each pipeline calibrates its own baseline from a zero-noise
normal run.  Scoring follows engine 1: a sample is correct when the
engine-1 verdict matches the ground-truth engine-1 state, and the combined
score additionally accepts a fault verdict under a true failure.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import turbine
from .mappings import basis_map, frame_map
from .scenario import HealthMap, IndexAssignment
from .turbine import SENSORS, Dataset, SimConfig

PIPELINES = ("basis", "frame")

# Noise levels of the fixed-condition runs, on the sweep's SNR scale.  Low
# noise keeps every detection contract comfortably clean; high noise leaves
# the selection pipeline working while the magnitude-sum pipeline's noise
# floor starts to swallow dead-engine evidence.
LOW_NOISE_SNR_DB = 18.0
HIGH_NOISE_SNR_DB = 8.0


class CalibrationError(ValueError):
    """A baseline coordinate calibrated to zero: mis-specified line bins."""


@dataclass(frozen=True)
class DetectorThresholds:
    fault_hi: float = 2.0
    dead_lo: float = 0.18

    def __post_init__(self):
        if not (self.dead_lo < 1.0 < self.fault_hi):
            raise ValueError("need dead_lo < 1 < fault_hi")


@dataclass(frozen=True)
class Baseline:
    """Per-coordinate nominal magnitudes for one mapping pipeline."""

    kind: str
    mu: np.ndarray


def _health_assignment(n_coords: int) -> IndexAssignment:
    per = n_coords // SENSORS
    owned = tuple(
        tuple(range(j * per, (j + 1) * per)) for j in range(SENSORS)
    )
    full = frozenset(range(n_coords))
    return IndexAssignment(J=(full,) * SENSORS, I=owned)


def map_healths(healths: np.ndarray, kind: str) -> np.ndarray:
    """Fuse per-sensor health images (SENSORS, n) into one detector input."""
    healths = np.asarray(healths)
    n = healths.shape[-1]
    identity = HealthMap.identity(n)
    if kind == "basis":
        return basis_map(healths, identity, _health_assignment(n)).real
    if kind == "frame":
        return frame_map(healths, identity).real
    raise ValueError(f"unknown mapping kind {kind!r}")


def calibrate(dataset: Dataset, kind: str) -> Baseline:
    """Mean mapped magnitudes of a zero-noise normal run."""
    if dataset.sigma != 0.0:
        raise CalibrationError("calibration requires a zero-noise run")
    try:
        c = dataset.condition_names.index("normal")
    except ValueError:
        raise CalibrationError("calibration requires a normal-state condition")
    mapped = np.stack(
        [map_healths(h, kind) for h in dataset.healths[c]]
    )
    mu = mapped.mean(axis=0)
    dead = np.nonzero(mu <= 0)[0]
    if dead.size:
        raise CalibrationError(
            f"baseline coordinates {dead.tolist()} are zero; line bins are "
            "mis-specified"
        )
    return Baseline(kind=kind, mu=mu)


def detect(mapped, baseline: Baseline, th: DetectorThresholds) -> tuple:
    """Per-engine verdicts for one mapped health vector."""
    mapped = np.asarray(mapped, dtype=float)
    if mapped.shape != baseline.mu.shape:
        raise ValueError("health vector and baseline dimensions differ")
    per = mapped.shape[0] // SENSORS
    verdicts = []
    for h in range(SENSORS):
        block = mapped[h * per : (h + 1) * per]
        mu = baseline.mu[h * per : (h + 1) * per]
        if np.all(block < th.dead_lo * mu):
            verdicts.append("failure")
        elif np.any(block > th.fault_hi * mu):
            verdicts.append("fault")
        else:
            verdicts.append("normal")
    return tuple(verdicts)


@dataclass
class ConditionStats:
    engine_state: str
    sensor_condition: str
    noise_level: str
    pipeline: str
    samples: int
    correct: int
    combined_correct: int
    verdict_counts: dict

    @property
    def pct_correct(self) -> float:
        return 100.0 * self.correct / self.samples

    @property
    def pct_combined(self) -> float:
        return 100.0 * self.combined_correct / self.samples

    @property
    def pct_false_alarm(self) -> float:
        """Non-normal verdict rate; meaningful on normal-state data."""
        return 100.0 - 100.0 * self.verdict_counts.get("normal", 0) / self.samples


def score_condition(
    dataset: Dataset,
    condition_name: str,
    baselines: dict,
    th: DetectorThresholds,
    sensor_condition: str,
    noise_level: str,
) -> list:
    """Per-pipeline statistics for one condition of one dataset."""
    c = dataset.condition_names.index(condition_name)
    truth = dataset.conditions[c][1][0].kind  # engine-1 ground truth
    truth = {"normal": "normal", "gear_fault": "fault", "failure": "failure"}[truth]
    out = []
    for kind in PIPELINES:
        counts = {"normal": 0, "fault": 0, "failure": 0}
        correct = combined = 0
        for healths in dataset.healths[c]:
            verdict = detect(map_healths(healths, kind), baselines[kind], th)[0]
            counts[verdict] += 1
            if verdict == truth:
                correct += 1
            if verdict == truth or (truth == "failure" and verdict == "fault"):
                combined += 1
        out.append(
            ConditionStats(
                engine_state=condition_name,
                sensor_condition=sensor_condition,
                noise_level=noise_level,
                pipeline=kind,
                samples=dataset.healths.shape[1],
                correct=correct,
                combined_correct=combined,
                verdict_counts=counts,
            )
        )
    return out


@dataclass
class DetectionReport:
    stats: list
    thresholds: DetectorThresholds
    metadata: dict

    def lookup(self, engine_state, sensor_condition, noise_level, pipeline) -> ConditionStats:
        for st in self.stats:
            if (
                st.engine_state == engine_state
                and st.sensor_condition == sensor_condition
                and st.noise_level == noise_level
                and st.pipeline == pipeline
            ):
                return st
        raise KeyError((engine_state, sensor_condition, noise_level, pipeline))

    def to_json_dict(self) -> dict:
        return {
            "thresholds": {
                "fault_hi": self.thresholds.fault_hi,
                "dead_lo": self.thresholds.dead_lo,
            },
            "metadata": self.metadata,
            "conditions": [
                {
                    "engine_state": st.engine_state,
                    "sensor_condition": st.sensor_condition,
                    "noise_level": st.noise_level,
                    "pipeline": st.pipeline,
                    "samples": st.samples,
                    "pct_correct": st.pct_correct,
                    "pct_combined": st.pct_combined,
                    "pct_false_alarm": st.pct_false_alarm,
                    "verdict_counts": st.verdict_counts,
                }
                for st in self.stats
            ],
        }


def condition_grid_datasets(
    fleet,
    mixing,
    cfg: SimConfig,
    fault_gear: int = 1,
    fault_multiplier: float = 12.0,
    noise_levels: dict | None = None,
):
    """Generate the full grid: engine states x sensor conditions x noise levels."""
    noise_levels = noise_levels or {
        "low": LOW_NOISE_SNR_DB,
        "high": HIGH_NOISE_SNR_DB,
    }
    conditions = turbine.engine1_conditions(fault_gear, fault_multiplier)
    datasets = {}
    for sensor_condition, failed in (("good", frozenset()), ("s1_failed", frozenset({0}))):
        for noise_level, snr_db in noise_levels.items():
            run_cfg = replace(
                cfg, snr_db=snr_db, noise_sigma=0.0, failed_sensors=failed
            )
            datasets[(sensor_condition, noise_level)] = turbine.generate_dataset(
                fleet, mixing, run_cfg, conditions
            )
    return datasets


def calibration_dataset(fleet, mixing, cfg: SimConfig, samples: int = 4) -> Dataset:
    calib_cfg = replace(
        cfg,
        snr_db=None,
        noise_sigma=0.0,
        failed_sensors=frozenset(),
        samples_per_state=samples,
    )
    return turbine.generate_dataset(
        fleet, mixing, calib_cfg, (("normal", turbine.normal_fleet_state()),)
    )


def run_conditions(
    datasets: dict, baselines: dict, th: DetectorThresholds, metadata=None
) -> DetectionReport:
    """Score every engine state in every (sensor, noise) dataset of the grid."""
    stats = []
    for (sensor_condition, noise_level), dataset in sorted(datasets.items()):
        for name in dataset.condition_names:
            stats.extend(
                score_condition(dataset, name, baselines, th, sensor_condition, noise_level)
            )
    return DetectionReport(stats=stats, thresholds=th, metadata=metadata or {})


def write_results(report: DetectionReport, out_dir) -> Path:
    """Write results.json plus the condition-table results.csv."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "results.json", "w") as fh:
        json.dump(report.to_json_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    rows = ["condition,basis_low,frame_low,basis_high,frame_high"]
    engine_states = []
    for st in report.stats:
        if st.engine_state not in engine_states:
            engine_states.append(st.engine_state)
    for engine_state in engine_states:
        for sensor_condition in ("good", "s1_failed"):
            cells = []
            for noise_level in ("low", "high"):
                for pipeline in PIPELINES:
                    st = report.lookup(engine_state, sensor_condition, noise_level, pipeline)
                    cells.append(st.pct_correct)
            # column order: basis_low, frame_low, basis_high, frame_high
            rows.append(
                f"{engine_state}_{sensor_condition},"
                f"{cells[0]:.2f},{cells[1]:.2f},{cells[2]:.2f},{cells[3]:.2f}"
            )
            if engine_state == "failure":
                combos = []
                for noise_level in ("low", "high"):
                    for pipeline in PIPELINES:
                        st = report.lookup(
                            engine_state, sensor_condition, noise_level, pipeline
                        )
                        combos.append(st.pct_combined)
                rows.append(
                    f"{engine_state}_{sensor_condition}_combined,"
                    f"{combos[0]:.2f},{combos[1]:.2f},{combos[2]:.2f},{combos[3]:.2f}"
                )
    (out / "results.csv").write_text("\n".join(rows) + "\n")
    return out


@dataclass
class SweepPoint:
    snr_db: float
    pipeline: str
    sensor_condition: str
    p_detect: float
    p_false_alarm: float


def snr_sweep(
    fleet,
    mixing,
    cfg: SimConfig,
    snr_grid,
    th: DetectorThresholds,
    sensor_conditions=("good", "s1_failed"),
) -> list:
    """Detection and false-alarm rates on normal-state data across an SNR grid.

    Every non-normal verdict on normal data is a false alarm, so
    p_false_alarm = 1 - p_detect pointwise.
    """
    snr_grid = list(snr_grid)
    if not snr_grid:
        raise ValueError("empty SNR grid")
    calib = calibration_dataset(fleet, mixing, cfg)
    baselines = {kind: calibrate(calib, kind) for kind in PIPELINES}
    normal = (("normal", turbine.normal_fleet_state()),)
    points = []
    for sensor_condition in sensor_conditions:
        failed = frozenset() if sensor_condition == "good" else frozenset({0})
        for snr_db in snr_grid:
            run_cfg = replace(
                cfg, snr_db=float(snr_db), noise_sigma=0.0, failed_sensors=failed
            )
            dataset = turbine.generate_dataset(fleet, mixing, run_cfg, normal)
            stats = score_condition(
                dataset, "normal", baselines, th, sensor_condition, f"{snr_db}dB"
            )
            for st in stats:
                p = st.pct_correct / 100.0
                points.append(
                    SweepPoint(
                        snr_db=float(snr_db),
                        pipeline=st.pipeline,
                        sensor_condition=sensor_condition,
                        p_detect=p,
                        p_false_alarm=1.0 - p,
                    )
                )
    return points


def write_sweep(points, out_dir) -> Path:
    """Write sweep.csv plus one plain plot-data file per curve."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = ["snr_db,pipeline,sensor_condition,p_detect,p_fa"]
    for pt in points:
        rows.append(
            f"{pt.snr_db!r},{pt.pipeline},{pt.sensor_condition},"
            f"{pt.p_detect!r},{pt.p_false_alarm!r}"
        )
    (out / "sweep.csv").write_text("\n".join(rows) + "\n")
    curves = out / "curves"
    curves.mkdir(exist_ok=True)
    for pipeline in PIPELINES:
        for sensor_condition in {pt.sensor_condition for pt in points}:
            for metric in ("detect", "fa"):
                sel = [
                    pt
                    for pt in points
                    if pt.pipeline == pipeline and pt.sensor_condition == sensor_condition
                ]
                sel.sort(key=lambda pt: pt.snr_db)
                if not sel:
                    continue
                lines = [
                    f"{pt.snr_db!r} "
                    f"{(pt.p_detect if metric == 'detect' else pt.p_false_alarm)!r}"
                    for pt in sel
                ]
                name = f"{pipeline}_{sensor_condition}_{metric}.dat"
                (curves / name).write_text("\n".join(lines) + "\n")
    return out
