import json
import subprocess
import sys
from pathlib import Path

import pytest

from framesense import cli

FIXTURES = Path(__file__).parent / "fixtures"
HARMONIOUS = str(FIXTURES / "three_sensor_projection.json")
ISOLATED = str(FIXTURES / "isolated_sensor.json")

SMALL_CONFIG = {"samples_per_state": 4, "sweep_samples_per_point": 4}


def write_config(tmp_path, extra=None):
    cfg = dict(SMALL_CONFIG)
    cfg.update(extra or {})
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return str(path)


class TestValidate:
    def test_harmonious_fixture(self, capsys):
        assert cli.main(["validate", HARMONIOUS]) == 0
        out = capsys.readouterr().out
        assert "validity: OK" in out
        assert "separable: yes" in out
        assert "j=1: harmonious, operational" in out
        # strongly dominant at both coordinates
        assert out.count("yes  yes  yes") == 2

    def test_isolated_fixture_reports_disjoint(self, capsys):
        assert cli.main(["validate", ISOLATED]) == 0
        out = capsys.readouterr().out
        assert "j=3: disjoint" in out

    def test_malformed_json_exits_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert cli.main(["validate", str(bad)]) == 2
        assert "parse error" in capsys.readouterr().err

    def test_missing_file_exits_2(self):
        assert cli.main(["validate", "no-such-file.json"]) == 2

    def test_rank_two_readings_reported(self, tmp_path, capsys):
        doc = json.loads(Path(HARMONIOUS).read_text())
        doc["K"] = 2
        # two times whose per-parameter matrices have rank 2 at parameter 1
        doc["readings"] = [
            [[1, 0, 0], [0, 0, 0]],
            [[0, 0, 0], [1, 0, 0]],
            [[0, 0, 0], [0, 0, 0]],
        ]
        path = tmp_path / "rank2.json"
        path.write_text(json.dumps(doc))
        assert cli.main(["validate", str(path)]) == 0
        out = capsys.readouterr().out
        assert "pre-separable: no" in out
        assert "[1]" in out

    def test_invalid_scenario_exits_1(self, tmp_path, capsys):
        doc = json.loads(Path(HARMONIOUS).read_text())
        doc["partition"] = [[1, 2], [2], [3]]
        path = tmp_path / "invalid.json"
        path.write_text(json.dumps(doc))
        assert cli.main(["validate", str(path)]) == 1
        assert "INVALID" in capsys.readouterr().out


class TestTheorems:
    def test_all_verified_on_fixture(self, tmp_path, capsys):
        out_dir = tmp_path / "reports"
        assert cli.main(["theorems", HARMONIOUS, "--out", str(out_dir)]) == 0
        out = capsys.readouterr().out
        assert out.count(": verified") == 4
        for name in (
            "basis_mapping",
            "frame_mapping",
            "projective_frame",
            "strong_dominance_frame",
        ):
            doc = json.loads((out_dir / f"theorem_{name}.json").read_text())
            assert doc["conclusion"] is True

    def test_failure_injection_on_harmonious_fixture(self, tmp_path, capsys):
        out_dir = tmp_path / "reports"
        code = cli.main(
            ["theorems", HARMONIOUS, "--out", str(out_dir), "--fail-sensor", "1"]
        )
        assert code == 0
        basis = json.loads((out_dir / "theorem_basis_mapping.json").read_text())
        frame = json.loads((out_dir / "theorem_frame_mapping.json").read_text())
        # selection images lose the span, magnitude images keep it
        assert basis["conclusion"] is True
        assert not basis["diagnostics"]["spans"]
        assert frame["conclusion"] is True
        assert frame["diagnostics"]["spans"]

    def test_disjoint_failure_loses_span(self, tmp_path):
        out_dir = tmp_path / "reports"
        code = cli.main(
            ["theorems", ISOLATED, "--out", str(out_dir), "--fail-sensor", "3"]
        )
        assert code == 0  # hypothesis unmet is reported, not fatal
        frame = json.loads((out_dir / "theorem_frame_mapping.json").read_text())
        assert frame["applicable"] is False
        assert frame["conclusion"] is None
        assert not frame["diagnostics"]["spans"]
        assert frame["diagnostics"]["missing_coordinates"] == [2]

    def test_fail_sensor_out_of_range(self, tmp_path):
        assert (
            cli.main(
                ["theorems", HARMONIOUS, "--out", str(tmp_path), "--fail-sensor", "9"]
            )
            == 2
        )


class TestGenerateDetectSweep:
    def test_generate_writes_grid(self, tmp_path, capsys):
        cfg = write_config(tmp_path)
        out = tmp_path / "run"
        assert cli.main(["generate", "--config", cfg, "--out", str(out)]) == 0
        assert (out / "config.json").exists()
        for name in ("good_low", "good_high", "s1_failed_low", "s1_failed_high"):
            assert (out / "datasets" / name / "health.csv").exists()
        assert (out / "datasets" / "calibration" / "manifest.json").exists()
        assert "total labeled samples: 48" in capsys.readouterr().out

    def test_same_seed_byte_identical(self, tmp_path):
        cfg = write_config(tmp_path, {"rng_seed": 7})
        for name in ("a", "b"):
            assert cli.main(["generate", "--config", cfg, "--out", str(tmp_path / name)]) == 0
        a = (tmp_path / "a" / "datasets" / "good_high" / "health.csv").read_bytes()
        b = (tmp_path / "b" / "datasets" / "good_high" / "health.csv").read_bytes()
        assert a == b

    def test_detect_composes_with_generate(self, tmp_path):
        cfg = write_config(tmp_path)
        gen = tmp_path / "gen"
        assert cli.main(["generate", "--config", cfg, "--out", str(gen)]) == 0
        outa = tmp_path / "detect_from_data"
        outb = tmp_path / "detect_fused"
        assert cli.main(
            ["detect", "--config", cfg, "--out", str(outa), "--data", str(gen)]
        ) == 0
        assert cli.main(["detect", "--config", cfg, "--out", str(outb)]) == 0
        assert (outa / "results.csv").read_bytes() == (outb / "results.csv").read_bytes()

    def test_detect_results_contract(self, tmp_path):
        cfg = write_config(tmp_path)
        out = tmp_path / "run"
        assert cli.main(["detect", "--config", cfg, "--out", str(out)]) == 0
        rows = (out / "results.csv").read_text().strip().split("\n")
        table = {r.split(",")[0]: r.split(",")[1:] for r in rows[1:]}
        # selection pipeline sees a dead sensor as engine failure
        assert table["normal_s1_failed"][0] == "0.00"
        assert table["normal_s1_failed"][1] == "100.00"

    def test_sweep_range_flag(self, tmp_path):
        cfg = write_config(tmp_path)
        out = tmp_path / "sweep"
        code = cli.main(
            ["sweep", "--config", cfg, "--out", str(out), "--snr-range", "-2:0:1"]
        )
        assert code == 0
        rows = (out / "sweep.csv").read_text().strip().split("\n")
        assert len(rows) == 1 + 3 * 2 * 2
        echoed = json.loads((out / "config.json").read_text())
        assert echoed["snr_lo"] == -2.0 and echoed["snr_hi"] == 0.0

    def test_bad_snr_range(self, tmp_path):
        cfg = write_config(tmp_path)
        assert cli.main(["sweep", "--config", cfg, "--snr-range", "5:1:1",
                         "--out", str(tmp_path / "s")]) == 2

    def test_unknown_config_key_rejected(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"sample_count": 4}))
        assert cli.main(["generate", "--config", str(path), "--out", str(tmp_path / "o")]) == 2

    def test_seed_flag_overrides_config(self, tmp_path):
        cfg = write_config(tmp_path, {"rng_seed": 1})
        out = tmp_path / "run"
        assert cli.main(["generate", "--config", cfg, "--out", str(out), "--seed", "99"]) == 0
        echoed = json.loads((out / "config.json").read_text())
        assert echoed["rng_seed"] == 99


def test_module_entrypoint_smoke():
    proc = subprocess.run(
        [sys.executable, "-m", "framesense.cli", "validate", HARMONIOUS],
        capture_output=True,
        text=True,
        env={"PYTHONPATH": str(Path(__file__).parent.parent / "src"), "PATH": "/usr/bin:/bin"},
    )
    assert proc.returncode == 0
    assert "validity: OK" in proc.stdout


def test_parse_snr_range_inclusive():
    assert cli.parse_snr_range("-20:0:1") == pytest.approx(list(range(-20, 1)))
