import numpy as np
import pytest

from framesense import turbine
from framesense.scenario import (
    build_index_sets,
    factor_readings,
    is_harmonious,
    sensor_status,
    separate,
    validate_scenario,
)
from framesense.turbine import (
    EngineModel,
    FaultState,
    SimConfig,
    dataset_scenario,
    default_fleet,
    dft_block,
    engine_signal,
    fleet_line_bins,
    generate_dataset,
    health_project,
    iter_samples,
    line_phases,
    load_dataset,
    mix_and_sense,
    mixing_matrix,
    normal_fleet_state,
    save_dataset,
    sigma_for_snr,
)

FLEET = default_fleet()
CFG = SimConfig(samples_per_state=4)
BINS = fleet_line_bins(FLEET, CFG)


class TestFleetGeometry:
    def test_28_distinct_bins(self):
        assert BINS.size == 28
        assert len(set(BINS.tolist())) == 28

    def test_lines_below_nyquist(self):
        for model in FLEET:
            assert np.all(model.line_frequencies() < CFG.sample_rate / 2)

    def test_lines_exactly_on_bins(self):
        for model in FLEET:
            assert np.allclose(model.line_frequencies() % CFG.bin_width, 0.0)

    def test_off_bin_line_rejected(self):
        bad = (EngineModel(engine_id=1, turbine_shaft_freqs=(41.0, 112.0)),) + FLEET[1:]
        with pytest.raises(ValueError, match="DFT bin"):
            fleet_line_bins(bad, CFG)

    def test_colliding_lines_rejected(self):
        bad = (FLEET[0], FLEET[0], FLEET[2], FLEET[3])
        with pytest.raises(ValueError, match="distinct"):
            fleet_line_bins(bad, CFG)

    def test_nyquist_violation_rejected(self):
        bad = EngineModel(engine_id=1, turbine_shaft_freqs=(40.0, 112.0), blade_counts=(20, 256))
        with pytest.raises(ValueError, match="Nyquist"):
            fleet_line_bins((bad,) + FLEET[1:], CFG)


class TestEngineSignal:
    def test_normal_block_peaks_at_line_bins(self):
        model = FLEET[0]
        block = engine_signal(model, FaultState.normal(), 0, CFG)
        spectrum = np.abs(dft_block(block, CFG.dft_size))
        own_bins = BINS[:7]
        expected = np.array(model.line_amplitudes) * CFG.dft_size / 2
        assert np.allclose(spectrum[own_bins], expected, rtol=1e-9, atol=1e-6)
        rest = np.delete(spectrum[: CFG.dft_size // 2], own_bins)
        assert np.max(rest) < 1e-6

    def test_failure_is_silent(self):
        assert np.array_equal(
            engine_signal(FLEET[0], FaultState.failure(), 0, CFG),
            np.zeros(CFG.dft_size),
        )

    def test_gear_fault_scales_one_line(self):
        model = FLEET[0]
        normal = np.abs(
            dft_block(engine_signal(model, FaultState.normal(), 0, CFG))
        )[BINS[:7]]
        faulty = np.abs(
            dft_block(engine_signal(model, FaultState.gear_fault(2, 3.0), 0, CFG))
        )[BINS[:7]]
        ratio = faulty / normal
        assert ratio[5] == pytest.approx(3.0, rel=1e-9)  # gear 2 is line index 5
        assert np.allclose(np.delete(ratio, 5), 1.0, rtol=1e-9)

    def test_nyquist_guard(self):
        model = EngineModel(engine_id=1, blade_counts=(20, 500))
        with pytest.raises(ValueError, match="Nyquist"):
            engine_signal(model, FaultState.normal(), 0, CFG)

    def test_running_phase_is_continuous(self):
        model = FLEET[1]
        full_cfg = SimConfig(dft_size=2048, sample_rate=CFG.sample_rate)
        a = engine_signal(model, FaultState.normal(), 0, full_cfg)
        b = engine_signal(model, FaultState.normal(), 2048, full_cfg)
        joined = engine_signal(
            model,
            FaultState.normal(),
            0,
            SimConfig(dft_size=4096, sample_rate=CFG.sample_rate),
        )
        assert np.allclose(np.concatenate([a, b]), joined, atol=1e-9)

    def test_phases_fixed_by_seed(self):
        assert np.array_equal(line_phases(7, 1), line_phases(7, 1))
        assert not np.array_equal(line_phases(7, 1), line_phases(8, 1))


class TestFaultState:
    def test_gear_fault_needs_valid_gear(self):
        with pytest.raises(ValueError):
            FaultState.gear_fault(4, 2.0)

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            FaultState(kind="wobbly")

    def test_json_roundtrip(self):
        st = FaultState.gear_fault(3, 5.5)
        assert FaultState.from_json(st.to_json()) == st


class TestMixing:
    def test_identity_mixing_isolates_engines(self):
        blocks = np.stack(
            [engine_signal(m, FaultState.normal(), 0, CFG) for m in FLEET]
        )
        rng = np.random.default_rng(0)
        sensors = mix_and_sense(blocks, np.eye(4), CFG, 0.0, rng)
        healths = health_project(np.abs(dft_block(sensors)), BINS)
        for j in range(4):
            own = slice(7 * j, 7 * (j + 1))
            assert np.all(healths[j, own] > 1.0)
            others = np.delete(healths[j], range(7 * j, 7 * (j + 1)))
            assert np.max(others) < 1e-6

    def test_cross_volume_ratio(self):
        blocks = np.stack(
            [engine_signal(m, FaultState.normal(), 0, CFG) for m in FLEET]
        )
        rng = np.random.default_rng(0)
        sensors = mix_and_sense(blocks, mixing_matrix(0.1), CFG, 0.0, rng)
        healths = health_project(np.abs(dft_block(sensors)), BINS)
        # engine 2's lines at sensor 0 sit at amplitude ratio 0.1 (10 dB down)
        assert np.allclose(healths[0, 7:14] / healths[1, 7:14], 0.1, rtol=1e-9)

    def test_energy_scales_with_square_of_volume(self):
        blocks = np.zeros((4, CFG.dft_size))
        blocks[1] = engine_signal(FLEET[1], FaultState.normal(), 0, CFG)
        rng = np.random.default_rng(0)
        for vol in (0.1, 0.5):
            a = np.eye(4)
            a[0, 1] = vol
            sensors = mix_and_sense(blocks, a, CFG, 0.0, rng)
            healths = health_project(np.abs(dft_block(sensors)), BINS)
            ref = health_project(np.abs(dft_block(blocks[1])), BINS)
            assert np.sum(healths[0] ** 2) == pytest.approx(
                vol**2 * np.sum(ref**2), rel=1e-9
            )

    def test_failed_sensor_emits_zero(self):
        cfg = SimConfig(failed_sensors={1}, noise_sigma=3.0)
        blocks = np.ones((4, cfg.dft_size))
        sensors = mix_and_sense(
            blocks, mixing_matrix(0.1), cfg, 3.0, np.random.default_rng(0)
        )
        assert np.array_equal(sensors[1], np.zeros(cfg.dft_size))
        assert np.any(sensors[0] != 0)

    def test_mixing_validation(self):
        with pytest.raises(ValueError):
            mixing_matrix(1.5)
        bad = np.eye(4)
        bad[0, 0] = 0.5
        with pytest.raises(ValueError):
            turbine.validate_mixing(bad)


class TestDft:
    def test_impulse_gives_flat_spectrum(self):
        block = np.zeros(CFG.dft_size)
        block[0] = 1.0
        assert np.allclose(dft_block(block), np.ones(CFG.dft_size))

    def test_on_bin_cosine_magnitude(self):
        t = np.arange(CFG.dft_size)
        a, b = 0.7, 12
        block = a * np.cos(2 * np.pi * b * t / CFG.dft_size)
        spectrum = np.abs(dft_block(block))
        assert spectrum[b] == pytest.approx(a * CFG.dft_size / 2, rel=1e-9)
        assert spectrum[CFG.dft_size - b] == pytest.approx(a * CFG.dft_size / 2, rel=1e-9)
        mask = np.ones(CFG.dft_size, bool)
        mask[[b, CFG.dft_size - b]] = False
        assert np.max(spectrum[mask]) < 1e-6

    def test_roundtrip(self):
        rng = np.random.default_rng(5)
        block = rng.standard_normal(CFG.dft_size)
        back = np.fft.ifft(dft_block(block)).real
        assert np.allclose(back, block, rtol=1e-9, atol=1e-12)

    def test_wrong_length_rejected(self):
        with pytest.raises(ValueError):
            dft_block(np.zeros(100))


class TestHealthProject:
    def test_zero_spectrum(self):
        assert np.array_equal(health_project(np.zeros(64), [1, 2, 3]), np.zeros(3))

    def test_permuting_bins_permutes_output(self):
        spectrum = np.arange(64, dtype=complex)
        a = health_project(spectrum, [3, 9, 27])
        b = health_project(spectrum, [27, 3, 9])
        assert np.array_equal(b, a[[2, 0, 1]])

    def test_duplicate_bins_rejected(self):
        with pytest.raises(ValueError):
            health_project(np.zeros(64), [1, 1])

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            health_project(np.zeros(64), [70])


class TestGeneration:
    def test_dataset_shape_and_labels(self):
        ds = generate_dataset(FLEET, mixing_matrix(0.1), CFG, turbine.engine1_conditions())
        assert ds.healths.shape == (3, 4, 4, 28)
        assert ds.condition_names == ("normal", "fault", "failure")

    def test_same_seed_is_identical(self):
        cfg = SimConfig(samples_per_state=2, snr_db=0.0)
        mk = lambda: generate_dataset(FLEET, mixing_matrix(0.1), cfg, turbine.engine1_conditions())
        a, b = mk(), mk()
        assert np.array_equal(a.healths, b.healths)

    def test_different_seed_differs(self):
        cfg1 = SimConfig(samples_per_state=2, snr_db=0.0, rng_seed=1)
        cfg2 = SimConfig(samples_per_state=2, snr_db=0.0, rng_seed=2)
        a = generate_dataset(FLEET, mixing_matrix(0.1), cfg1, turbine.engine1_conditions())
        b = generate_dataset(FLEET, mixing_matrix(0.1), cfg2, turbine.engine1_conditions())
        assert not np.array_equal(a.healths, b.healths)

    def test_zero_noise_healths_constant_across_samples(self):
        ds = generate_dataset(FLEET, mixing_matrix(0.1), CFG, turbine.engine1_conditions())
        spread = np.max(np.abs(ds.healths - ds.healths[:, :1]))
        assert spread <= 1e-8 * np.max(ds.healths)

    def test_save_load_roundtrip(self, tmp_path):
        ds = generate_dataset(FLEET, mixing_matrix(0.1), CFG, turbine.engine1_conditions())
        save_dataset(ds, tmp_path / "d")
        back = load_dataset(tmp_path / "d")
        assert np.array_equal(back.healths, ds.healths)
        assert back.condition_names == ds.condition_names
        assert back.cfg == ds.cfg

    def test_save_is_byte_deterministic(self, tmp_path):
        cfg = SimConfig(samples_per_state=2, snr_db=5.0)
        for name in ("a", "b"):
            ds = generate_dataset(FLEET, mixing_matrix(0.1), cfg, turbine.engine1_conditions())
            save_dataset(ds, tmp_path / name)
        assert (tmp_path / "a" / "health.csv").read_bytes() == (
            tmp_path / "b" / "health.csv"
        ).read_bytes()

    def test_spectra_files_written(self, tmp_path):
        cfg = SimConfig(samples_per_state=2)
        conditions = (("normal", normal_fleet_state()),)
        ds = generate_dataset(FLEET, mixing_matrix(0.1), cfg, conditions, spectra_dir=tmp_path)
        fname = ds.spectra_files["normal"]
        raw = np.fromfile(tmp_path / fname, dtype="<f8")
        assert raw.size == 2 * 4 * cfg.dft_size
        spectra = raw.reshape(2, 4, cfg.dft_size)
        assert np.allclose(
            health_project(spectra[0], fleet_line_bins(FLEET, cfg)), ds.healths[0, 0]
        )

    def test_iter_samples_streams_in_order(self):
        records = list(iter_samples(FLEET, mixing_matrix(0.1), CFG, turbine.engine1_conditions()))
        assert [(r.condition, r.sample) for r in records[:5]] == [
            (0, 0), (0, 1), (0, 2), (0, 3), (1, 0),
        ]


class TestSnrScale:
    def test_sigma_decreases_with_snr(self):
        lo = sigma_for_snr(-20.0, FLEET, CFG)
        hi = sigma_for_snr(0.0, FLEET, CFG)
        assert lo == pytest.approx(10.0 * hi)

    def test_snr_overrides_sigma(self):
        cfg = SimConfig(noise_sigma=99.0, snr_db=0.0)
        assert turbine.resolve_sigma(cfg, FLEET) == pytest.approx(
            sigma_for_snr(0.0, FLEET, cfg)
        )
        cfg2 = SimConfig(noise_sigma=1.5)
        assert turbine.resolve_sigma(cfg2, FLEET) == 1.5


class TestScenarioBridge:
    def setup_method(self):
        self.states = [
            normal_fleet_state(),
            (FaultState.gear_fault(1, 3.0),) + normal_fleet_state()[1:],
        ]
        self.cfg = SimConfig(samples_per_state=1)

    def test_zero_noise_scenario_is_valid_and_separable(self):
        s = dataset_scenario(FLEET, mixing_matrix(0.1), self.cfg, self.states)
        assert validate_scenario(s).ok
        fac = separate(s, factor_readings(s, tol=1e-7), tol=1e-6)
        assert fac.separated

    def test_volumes_vary_across_frequencies(self):
        # Different lines carry different loudness, so no constant-volume
        # split of the factors exists for this data.
        from framesense.scenario import volume_factors_constant

        s = dataset_scenario(FLEET, mixing_matrix(0.1), self.cfg, self.states)
        assert not volume_factors_constant(factor_readings(s, tol=1e-7), tol=1e-6)

    def test_harmonious_with_positive_mixing(self):
        s = dataset_scenario(FLEET, mixing_matrix(0.1), self.cfg, self.states)
        fac = separate(s, factor_readings(s, tol=1e-7), tol=1e-6)
        assign = build_index_sets(s.health_images(), tol=1e-6)
        assert assign.I == tuple(tuple(range(7 * j, 7 * (j + 1))) for j in range(4))
        assert is_harmonious(fac, assign, tol=1e-6)

    def test_sensor_failure_maps_to_non_operational(self):
        cfg = SimConfig(samples_per_state=1, failed_sensors={0})
        s = dataset_scenario(FLEET, mixing_matrix(0.1), cfg, self.states)
        fac = separate(s, factor_readings(s, tol=1e-7), tol=1e-6)
        healthy = dataset_scenario(FLEET, mixing_matrix(0.1), self.cfg, self.states)
        assign = build_index_sets(healthy.health_images(), tol=1e-6)
        assert sensor_status(fac, assign, 0, tol=1e-6).status == "non_operational"
        assert sensor_status(fac, assign, 1, tol=1e-6).status == "operational"

    def test_engine_failure_keeps_sensors_operational(self):
        states = [
            (FaultState.failure(),) + normal_fleet_state()[1:],
            normal_fleet_state(),
        ]
        s = dataset_scenario(FLEET, mixing_matrix(0.1), self.cfg, states)
        fac = separate(s, factor_readings(s, tol=1e-7), tol=1e-6)
        assign = build_index_sets(s.health_images(), tol=1e-6)
        for j in range(4):
            assert sensor_status(fac, assign, j, tol=1e-6).status == "operational"
        # the dead engine's coordinates stop radiating at the failed time
        assert np.max(np.abs(fac.alpha[0, :7])) <= 1e-6
        assert np.min(np.abs(fac.alpha[1, :7])) > 1e-6
