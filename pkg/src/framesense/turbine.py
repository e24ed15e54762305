"""Synthetic multi-engine vibration data with spectral-line health projection.

Four engines each radiate 7 spectral lines (2 shafts, 2 blade passes, 3
gears).  A nonnegative mixing matrix sets how loudly each engine registers
at each of the 4 sensors, white Gaussian noise is added per time sample,
failed sensors emit identically zero blocks, and every sensor block is
pushed through an 8192-point DFT.  The health map keeps the magnitudes at
the 28 known line bins, giving one R^28 health image per sensor per block.

All shaft frequencies are chosen so every derived line lands exactly on a
DFT bin; blocks are then periodic and line magnitudes are time-independent
at zero noise, which keeps the downstream detection contracts exact.
Dataset generation is deterministic: each sample's noise comes from a
counter-based generator keyed on (seed, condition, sample), so parallel and
serial runs agree byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ._kernels import IMPLEMENTATION, synth_tones
from .scenario import HealthMap, Scenario

LINES_PER_ENGINE = 7
SENSORS = 4

# Calibration constant of the SNR scale: at snr_db = 0 the weakest line's
# DFT magnitude sits this many dB above the per-component noise level in its
# bin.  -18 dB then puts the weakest line at the noise level.
SNR_REFERENCE_MARGIN_DB = 18.0


@dataclass(frozen=True)
class EngineModel:
    """Spectral-line model of one engine: two shafted turbines with gears.

    Each turbine contributes its shaft rotation line and a blade-pass line
    (shaft frequency times blade count); gear 1 rides turbine 1 and gears
    2-3 ride turbine 2, each contributing ratio * shaft frequency.
    """

    engine_id: int
    turbine_shaft_freqs: tuple = (40.0, 112.0)
    blade_counts: tuple = (20, 24)
    gear_ratios: tuple = (1.5, 2.25, 3.75)
    line_amplitudes: tuple = (1.0, 0.9, 0.6, 0.5, 0.7, 0.65, 0.55)

    def line_frequencies(self) -> np.ndarray:
        """The 7 line frequencies: shafts, blade passes, gears (Hz)."""
        s1, s2 = self.turbine_shaft_freqs
        b1, b2 = self.blade_counts
        r1, r2, r3 = self.gear_ratios
        return np.array([s1, s2, b1 * s1, b2 * s2, r1 * s1, r2 * s2, r3 * s2])


def default_fleet() -> tuple:
    """Four engines with staggered shaft speeds, all 28 lines distinct and on-bin."""
    return tuple(
        EngineModel(
            engine_id=e,
            turbine_shaft_freqs=(40.0 + 16.0 * (e - 1), 112.0 + 32.0 * (e - 1)),
        )
        for e in range(1, SENSORS + 1)
    )


@dataclass(frozen=True)
class FaultState:
    """Per-engine condition: normal, one amplified gear line, or dead."""

    kind: str = "normal"  # "normal" | "gear_fault" | "failure"
    gear: int | None = None  # 1-based gear index for gear_fault
    multiplier: float = 1.0

    def __post_init__(self):
        if self.kind not in ("normal", "gear_fault", "failure"):
            raise ValueError(f"unknown fault kind {self.kind!r}")
        if self.kind == "gear_fault" and self.gear not in (1, 2, 3):
            raise ValueError("gear_fault needs a gear index in 1..3")

    @classmethod
    def normal(cls):
        return cls()

    @classmethod
    def gear_fault(cls, gear: int, multiplier: float):
        return cls(kind="gear_fault", gear=gear, multiplier=multiplier)

    @classmethod
    def failure(cls):
        return cls(kind="failure")

    def amplitudes(self, model: EngineModel) -> np.ndarray:
        amps = np.array(model.line_amplitudes, dtype=np.float64)
        if self.kind == "failure":
            return np.zeros_like(amps)
        if self.kind == "gear_fault":
            amps[4 + self.gear - 1] *= self.multiplier
        return amps

    def to_json(self):
        return {"kind": self.kind, "gear": self.gear, "multiplier": self.multiplier}

    @classmethod
    def from_json(cls, doc):
        return cls(doc["kind"], doc.get("gear"), doc.get("multiplier", 1.0))


def mixing_matrix(off_diagonal: float = 0.1) -> np.ndarray:
    """Relative volume of engine h at sensor j: nominal on the diagonal."""
    a = np.full((SENSORS, SENSORS), float(off_diagonal))
    np.fill_diagonal(a, 1.0)
    return validate_mixing(a)


def validate_mixing(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.shape != (SENSORS, SENSORS):
        raise ValueError(f"mixing matrix must be {SENSORS}x{SENSORS}")
    if np.any(a < 0):
        raise ValueError("mixing entries must be nonnegative")
    if not np.allclose(np.diag(a), 1.0):
        raise ValueError("own-engine volume must be nominal (diagonal 1)")
    if np.any(a - np.diag(np.diag(a)) > 1.0):
        raise ValueError("cross-engine volumes cannot exceed nominal")
    return a


@dataclass(frozen=True)
class SimConfig:
    dft_size: int = 8192
    sample_rate: float = 32768.0
    noise_sigma: float = 0.0
    snr_db: float | None = None  # overrides noise_sigma when set
    failed_sensors: frozenset = frozenset()
    rng_seed: int = 20260808
    samples_per_state: int = 64

    def __post_init__(self):
        if self.dft_size <= 0 or self.dft_size & (self.dft_size - 1):
            raise ValueError("dft_size must be a power of two")
        if self.noise_sigma < 0:
            raise ValueError("noise sigma must be nonnegative")
        object.__setattr__(
            self, "failed_sensors", frozenset(int(j) for j in self.failed_sensors)
        )

    @property
    def bin_width(self) -> float:
        return self.sample_rate / self.dft_size


def sigma_for_snr(snr_db: float, fleet, cfg: SimConfig) -> float:
    """Per-sample noise standard deviation realizing the requested SNR.

    The scale is anchored on the weakest line in the fleet: its DFT bin
    magnitude is a_min * dft_size / 2 while per-bin noise components have
    standard deviation sigma * sqrt(dft_size / 2), and snr_db = 0 places the
    line SNR_REFERENCE_MARGIN_DB above that level.
    """
    a_min = min(min(m.line_amplitudes) for m in fleet)
    kappa = 10.0 ** ((snr_db + SNR_REFERENCE_MARGIN_DB) / 20.0)
    return a_min * np.sqrt(cfg.dft_size / 2.0) / kappa


def resolve_sigma(cfg: SimConfig, fleet) -> float:
    if cfg.snr_db is None:
        return cfg.noise_sigma
    return float(sigma_for_snr(cfg.snr_db, fleet, cfg))


def fleet_line_bins(fleet, cfg: SimConfig) -> np.ndarray:
    """The 28 DFT bin indices, engine-major; all lines must be distinct and on-bin."""
    bins = []
    nyquist = cfg.sample_rate / 2.0
    for model in fleet:
        for f in model.line_frequencies():
            if f >= nyquist:
                raise ValueError(
                    f"line at {f} Hz exceeds the Nyquist frequency {nyquist} Hz"
                )
            b = f / cfg.bin_width
            if abs(b - round(b)) > 1e-9:
                raise ValueError(f"line at {f} Hz does not land on a DFT bin")
            bins.append(int(round(b)))
    if len(set(bins)) != len(bins):
        raise ValueError("fleet spectral lines are not pairwise distinct")
    return np.array(bins, dtype=int)


def line_phases(seed: int, engine_id: int, n_lines: int = LINES_PER_ENGINE) -> np.ndarray:
    """Per-line phase offsets, fixed by the seed and independent of sampling."""
    key = np.array([seed & (2**64 - 1), (1 << 62) + engine_id], dtype=np.uint64)
    rng = np.random.Generator(np.random.Philox(key=key))
    return rng.uniform(0.0, 2.0 * np.pi, n_lines)


def engine_signal(
    model: EngineModel,
    fault: FaultState,
    block_start: int,
    cfg: SimConfig,
    phases: np.ndarray | None = None,
) -> np.ndarray:
    """One engine's vibration block: the sum of its 7 fault-adjusted lines.

    Phases run continuously across blocks (the block start enters the phase),
    so consecutive blocks sample one ongoing waveform.
    """
    freqs = model.line_frequencies()
    if np.any(freqs >= cfg.sample_rate / 2.0):
        raise ValueError("line frequency exceeds Nyquist")
    amps = fault.amplitudes(model)
    if not np.any(amps):
        return np.zeros(cfg.dft_size)
    if phases is None:
        phases = line_phases(cfg.rng_seed, model.engine_id)
    # Reduce the block-start phase once so both kernel implementations see
    # identical small arguments.
    omega = 2.0 * np.pi * freqs / cfg.sample_rate
    start_phase = np.mod(omega * block_start + phases, 2.0 * np.pi)
    return synth_tones(freqs, amps, start_phase, 0, cfg.dft_size, cfg.sample_rate)


def mix_and_sense(engine_blocks, mixing, cfg: SimConfig, sigma: float, rng) -> np.ndarray:
    """Sensor blocks: mixed engine blocks plus per-sample Gaussian noise.

    Failed sensors emit identically zero blocks (no signal, no noise).
    """
    engine_blocks = np.asarray(engine_blocks, dtype=np.float64)
    if engine_blocks.shape[0] != mixing.shape[1]:
        raise ValueError("one engine block per mixing column required")
    sensors = mixing @ engine_blocks
    if sigma > 0:
        sensors = sensors + sigma * rng.standard_normal(sensors.shape)
    for j in cfg.failed_sensors:
        sensors[j] = 0.0
    return sensors


def dft_block(block, dft_size: int = 8192) -> np.ndarray:
    """Unnormalized DFT of one rectangular-windowed block."""
    block = np.asarray(block)
    if block.shape[-1] != dft_size:
        raise ValueError(f"block length {block.shape[-1]} != dft size {dft_size}")
    return np.fft.fft(block, axis=-1)


def health_project(spectrum, line_bins) -> np.ndarray:
    """Magnitudes at the significant line bins: the R^28 health image."""
    spectrum = np.asarray(spectrum)
    line_bins = np.asarray(line_bins, dtype=int)
    if len(set(line_bins.tolist())) != line_bins.size:
        raise ValueError("line bins must be distinct")
    if np.any(line_bins < 0) or np.any(line_bins >= spectrum.shape[-1]):
        raise ValueError("line bin out of spectrum range")
    return np.abs(spectrum[..., line_bins])


def normal_fleet_state() -> tuple:
    return tuple(FaultState.normal() for _ in range(SENSORS))


def engine1_conditions(fault_gear: int = 1, fault_multiplier: float = 12.0) -> tuple:
    """The three standard conditions: engine 1 normal / gear fault / failed."""
    normal = normal_fleet_state()
    fault = (FaultState.gear_fault(fault_gear, fault_multiplier),) + normal[1:]
    failure = (FaultState.failure(),) + normal[1:]
    return (("normal", normal), ("fault", fault), ("failure", failure))


@dataclass(frozen=True)
class SampleRecord:
    condition: int
    condition_name: str
    sample: int
    spectra: np.ndarray  # (SENSORS, dft_size) magnitude spectra
    healths: np.ndarray  # (SENSORS, 28)
    states: tuple


def _sample_rng(seed: int, condition: int, sample: int) -> np.random.Generator:
    key = np.array(
        [seed & (2**64 - 1), ((condition & 0xFFFFFFFF) << 32) | (sample & 0xFFFFFFFF)],
        dtype=np.uint64,
    )
    return np.random.Generator(np.random.Philox(key=key))


def iter_samples(fleet, mixing, cfg: SimConfig, conditions):
    """Stream deterministic samples for each (condition, sample) pair."""
    mixing = validate_mixing(mixing)
    bins = fleet_line_bins(fleet, cfg)
    sigma = resolve_sigma(cfg, fleet)
    phases = [line_phases(cfg.rng_seed, m.engine_id) for m in fleet]
    for c, (name, states) in enumerate(conditions):
        if len(states) != len(fleet):
            raise ValueError("one fault state per engine required")
        for m in range(cfg.samples_per_state):
            t0 = m * cfg.dft_size
            engine_blocks = np.stack(
                [
                    engine_signal(model, state, t0, cfg, phase)
                    for model, state, phase in zip(fleet, states, phases)
                ]
            )
            rng = _sample_rng(cfg.rng_seed, c, m)
            sensors = mix_and_sense(engine_blocks, mixing, cfg, sigma, rng)
            spectra = np.abs(dft_block(sensors, cfg.dft_size))
            healths = health_project(spectra, bins)
            yield SampleRecord(c, name, m, spectra, healths, states)


@dataclass
class Dataset:
    """Labeled health images for a grid of fault conditions."""

    healths: np.ndarray  # (conditions, samples, SENSORS, 28)
    conditions: tuple  # ((name, states), ...)
    cfg: SimConfig
    mixing: np.ndarray
    fleet: tuple
    line_bins: np.ndarray
    sigma: float
    spectra_files: dict = field(default_factory=dict)

    @property
    def condition_names(self) -> tuple:
        return tuple(name for name, _ in self.conditions)


def generate_dataset(
    fleet, mixing, cfg: SimConfig, conditions, spectra_dir: Path | None = None
) -> Dataset:
    """Materialize the health images for every condition and sample.

    When ``spectra_dir`` is given the full magnitude spectra are streamed to
    one raw little-endian float64 file per condition.
    """
    mixing = validate_mixing(mixing)
    bins = fleet_line_bins(fleet, cfg)
    healths = np.zeros(
        (len(conditions), cfg.samples_per_state, SENSORS, bins.size)
    )
    sinks = {}
    spectra_files = {}
    if spectra_dir is not None:
        spectra_dir = Path(spectra_dir)
        spectra_dir.mkdir(parents=True, exist_ok=True)
    for rec in iter_samples(fleet, mixing, cfg, conditions):
        healths[rec.condition, rec.sample] = rec.healths
        if spectra_dir is not None:
            if rec.condition not in sinks:
                path = spectra_dir / f"spectra_{rec.condition:02d}_{rec.condition_name}.f64"
                sinks[rec.condition] = open(path, "wb")
                spectra_files[rec.condition_name] = path.name
            sinks[rec.condition].write(
                np.ascontiguousarray(rec.spectra, dtype="<f8").tobytes()
            )
    for handle in sinks.values():
        handle.close()
    return Dataset(
        healths=healths,
        conditions=tuple(conditions),
        cfg=cfg,
        mixing=mixing,
        fleet=tuple(fleet),
        line_bins=bins,
        sigma=resolve_sigma(cfg, fleet),
        spectra_files=spectra_files,
    )


def _fmt(x: float) -> str:
    return repr(float(x))


def save_dataset(ds: Dataset, out_dir) -> Path:
    """Persist a dataset directory: manifest.json plus health.csv."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "config": {
            "dft_size": ds.cfg.dft_size,
            "sample_rate": ds.cfg.sample_rate,
            "noise_sigma": ds.cfg.noise_sigma,
            "snr_db": ds.cfg.snr_db,
            "resolved_sigma": ds.sigma,
            "failed_sensors": sorted(ds.cfg.failed_sensors),
            "rng_seed": ds.cfg.rng_seed,
            "samples_per_state": ds.cfg.samples_per_state,
        },
        "snr_model": {
            "reference_margin_db": SNR_REFERENCE_MARGIN_DB,
            "definition": (
                "snr_db = 0 places the weakest line's DFT magnitude "
                f"{SNR_REFERENCE_MARGIN_DB} dB above the per-component "
                "noise level in one bin"
            ),
        },
        "fleet": [
            {
                "engine_id": m.engine_id,
                "turbine_shaft_freqs": list(m.turbine_shaft_freqs),
                "blade_counts": list(m.blade_counts),
                "gear_ratios": list(m.gear_ratios),
                "line_amplitudes": list(m.line_amplitudes),
                "line_frequencies": m.line_frequencies().tolist(),
            }
            for m in ds.fleet
        ],
        "mixing": ds.mixing.tolist(),
        "line_bins": ds.line_bins.tolist(),
        "conditions": [
            {"name": name, "states": [st.to_json() for st in states]}
            for name, states in ds.conditions
        ],
        "kernel": IMPLEMENTATION,
        "files": {"health": "health.csv", "spectra": ds.spectra_files or None},
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    n_coords = ds.healths.shape[-1]
    header = "state,sample,sensor," + ",".join(f"m{i:02d}" for i in range(n_coords))
    lines = [header]
    for c, (name, _) in enumerate(ds.conditions):
        for m in range(ds.healths.shape[1]):
            for j in range(SENSORS):
                row = ",".join(_fmt(x) for x in ds.healths[c, m, j])
                lines.append(f"{name},{m},{j},{row}")
    (out / "health.csv").write_text("\n".join(lines) + "\n")
    return out


def load_dataset(path) -> Dataset:
    path = Path(path)
    with open(path / "manifest.json") as fh:
        manifest = json.load(fh)
    cfgdoc = manifest["config"]
    cfg = SimConfig(
        dft_size=cfgdoc["dft_size"],
        sample_rate=cfgdoc["sample_rate"],
        noise_sigma=cfgdoc["noise_sigma"],
        snr_db=cfgdoc["snr_db"],
        failed_sensors=frozenset(cfgdoc["failed_sensors"]),
        rng_seed=cfgdoc["rng_seed"],
        samples_per_state=cfgdoc["samples_per_state"],
    )
    fleet = tuple(
        EngineModel(
            engine_id=doc["engine_id"],
            turbine_shaft_freqs=tuple(doc["turbine_shaft_freqs"]),
            blade_counts=tuple(doc["blade_counts"]),
            gear_ratios=tuple(doc["gear_ratios"]),
            line_amplitudes=tuple(doc["line_amplitudes"]),
        )
        for doc in manifest["fleet"]
    )
    conditions = tuple(
        (doc["name"], tuple(FaultState.from_json(st) for st in doc["states"]))
        for doc in manifest["conditions"]
    )
    line_bins = np.array(manifest["line_bins"], dtype=int)
    rows = (path / "health.csv").read_text().strip().split("\n")[1:]
    healths = np.zeros(
        (len(conditions), cfg.samples_per_state, SENSORS, line_bins.size)
    )
    name_to_c = {name: c for c, (name, _) in enumerate(conditions)}
    for row in rows:
        parts = row.split(",")
        c = name_to_c[parts[0]]
        m, j = int(parts[1]), int(parts[2])
        healths[c, m, j] = [float(x) for x in parts[3:]]
    return Dataset(
        healths=healths,
        conditions=conditions,
        cfg=cfg,
        mixing=np.asarray(manifest["mixing"], dtype=float),
        fleet=fleet,
        line_bins=line_bins,
        sigma=cfgdoc["resolved_sigma"],
        spectra_files=manifest["files"].get("spectra") or {},
    )


def dataset_scenario(fleet, mixing, cfg: SimConfig, fleet_states_per_time) -> Scenario:
    """Expose generated sensor spectra as a sensing scenario.

    Readings are the magnitude spectra (one time index per entry of
    ``fleet_states_per_time``), the covering is everything, the partition
    gives each engine's line bins to its own sensor (leftover bins spread
    round-robin), and the health map selects the 28 line bins.
    """
    mixing = validate_mixing(mixing)
    bins = fleet_line_bins(fleet, cfg)
    conditions = [(f"t{k}", states) for k, states in enumerate(fleet_states_per_time)]
    cfg_one = replace(cfg, samples_per_state=1)
    readings = np.zeros((SENSORS, len(conditions), cfg.dft_size), dtype=np.complex128)
    for rec in iter_samples(fleet, mixing, cfg_one, conditions):
        readings[:, rec.condition, :] = rec.spectra
    owner = np.full(cfg.dft_size, -1, dtype=int)
    for h in range(SENSORS):
        owner[bins[h * LINES_PER_ENGINE : (h + 1) * LINES_PER_ENGINE]] = h
    leftover = np.nonzero(owner < 0)[0]
    owner[leftover] = leftover % SENSORS
    partition = tuple(
        frozenset(np.nonzero(owner == j)[0].tolist()) for j in range(SENSORS)
    )
    covering = (frozenset(range(cfg.dft_size)),) * SENSORS
    health = HealthMap.selection(bins.size, [(int(b), 1.0) for b in bins])
    return Scenario(covering, partition, readings, health)
