import json
import struct

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from cabinvitals.errors import ConfigParseError, FrameFormatError, UnsupportedVersionError, ValidationError
from cabinvitals.fileio import (
    HEADER,
    REPORT_COLUMNS,
    ScenarioFile,
    config_to_dict,
    load_pipeline_config,
    load_scenario,
    parse_pipeline_config,
    parse_scenario,
    read_frames,
    read_modes,
    read_report,
    scenario_to_dict,
    sidecar_dir,
    write_frames,
    write_json,
    write_modes,
    write_report,
)
from cabinvitals.msvmd import ModeSet
from cabinvitals.pipeline import PipelineConfig, RunSummary
from cabinvitals.rf import FrameMatrix, Oscillation, RadioConfig, SimScenario, SimTarget, simulate_frames
from cabinvitals.vitals import VitalReport

SMALL = RadioConfig(fast_time_bins=6)
f32 = st.floats(-1e6, 1e6, width=32)


def frames_of(parts, cfg=SMALL):
    return FrameMatrix((parts[0] + 1j * parts[1]).astype(np.complex64), cfg)


class TestFrameFile:
    @settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
    @given(hnp.arrays(np.float32, st.tuples(st.just(2), st.integers(1, 30), st.just(6)), elements=f32))
    def test_round_trip_bit_exact(self, tmp_path, parts):
        fm = frames_of(parts)
        path = tmp_path / "rt.v2if"
        write_frames(path, fm)
        back = read_frames(path)
        assert back.samples.dtype == np.complex64
        assert back.samples.tobytes() == fm.samples.tobytes()
        assert back.config == fm.config

    def test_simulated_round_trip(self, tmp_path):
        fm = simulate_frames(SimScenario((SimTarget(1.0, 1.0, Oscillation(0.25, 0.005)),), noise_std=0.01, duration_s=0.5))
        write_frames(tmp_path / "f", fm)
        back = read_frames(tmp_path / "f")
        assert np.array_equal(back.samples, fm.samples.astype(np.complex64))
        assert back.samples.shape == (200, 57)

    def test_header_layout(self, tmp_path):
        fm = frames_of(np.ones((2, 3, 6), np.float32))
        write_frames(tmp_path / "f", fm)
        raw = (tmp_path / "f").read_bytes()
        magic, version, k, n, fs, *_ = HEADER.unpack_from(raw)
        assert (magic, version, k, n, fs) == (b"V2IF", 1, 3, 6, 400.0)
        assert len(raw) == HEADER.size + 3 * 6 * 8

    def test_bad_magic(self, tmp_path):
        fm = frames_of(np.ones((2, 3, 6), np.float32))
        write_frames(tmp_path / "f", fm)
        raw = bytearray((tmp_path / "f").read_bytes())
        raw[:4] = b"XXXX"
        (tmp_path / "f").write_bytes(bytes(raw))
        with pytest.raises(FrameFormatError, match="magic"):
            read_frames(tmp_path / "f")

    def test_unknown_version(self, tmp_path):
        fm = frames_of(np.ones((2, 3, 6), np.float32))
        write_frames(tmp_path / "f", fm)
        raw = bytearray((tmp_path / "f").read_bytes())
        raw[4:6] = struct.pack("<H", 2)
        (tmp_path / "f").write_bytes(bytes(raw))
        with pytest.raises(UnsupportedVersionError):
            read_frames(tmp_path / "f")

    @pytest.mark.parametrize("cut", [1, 8, 48])
    def test_truncated(self, tmp_path, cut):
        fm = frames_of(np.ones((2, 3, 6), np.float32))
        write_frames(tmp_path / "f", fm)
        raw = (tmp_path / "f").read_bytes()
        (tmp_path / "f").write_bytes(raw[:-cut])
        with pytest.raises(FrameFormatError):
            read_frames(tmp_path / "f")

    def test_short_header(self, tmp_path):
        (tmp_path / "f").write_bytes(b"V2IF")
        with pytest.raises(FrameFormatError):
            read_frames(tmp_path / "f")

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            read_frames(tmp_path / "nope")


SCENARIO = {
    "duration_s": 30,
    "seed": 3,
    "snr_db": 10,
    "vibration": [{"freq_hz": 3.1, "amplitude_m": 0.0005}],
    "targets": [
        {
            "base_range_m": 0.8,
            "respiration": {"freq_hz": 0.3, "amplitude_m": 0.005},
            "heartbeat": {"freq_hz": 1.2, "amplitude_m": 0.0003},
            "beat_jitter_std_s": 0.02,
            "respiration_steps": [{"time_s": 15, "freq_hz": 0.25}],
            "motion_bursts": [{"start_s": 5, "duration_s": 5}],
        }
    ],
}


class TestScenarioParsing:
    def test_full(self):
        spec = parse_scenario(SCENARIO)
        sc = spec.scenario
        assert spec.snr_db == 10 and spec.radio == RadioConfig()
        assert sc.duration_s == 30 and sc.seed == 3
        assert sc.vibration_components == (Oscillation(3.1, 0.0005),)
        t = sc.targets[0]
        assert t.heartbeat == Oscillation(1.2, 0.0003)
        assert t.respiration_steps[0].freq_hz == 0.25
        assert t.motion_bursts[0].start_s == 5

    def test_round_trip_dict(self):
        spec = parse_scenario(SCENARIO)
        assert parse_scenario(json.loads(json.dumps(scenario_to_dict(spec)))) == spec

    def test_empty_targets(self):
        spec = parse_scenario({"duration_s": 1, "noise_std": 0.1})
        assert spec.scenario.targets == () and spec.snr_db is None

    def test_radio_override(self):
        spec = parse_scenario({"radio": {"frame_rate_hz": 100}})
        assert spec.radio.frame_rate_hz == 100

    @pytest.mark.parametrize(
        "data",
        [
            {"durration_s": 5},
            {"targets": [{"base_range_m": 1.0, "colour": "red"}]},
            {"targets": {"base_range_m": 1.0}},
            {"duration_s": "long"},
            {"seed": 1.5},
            {"targets": [{"base_range_m": 1.0, "respiration": {"freq_hz": "fast", "amplitude_m": 0.01}}]},
            {"snr_db": 10, "noise_std": 0.1},
            {"radio": {"bandwidth": 1e9}},
        ],
    )
    def test_malformed(self, data):
        with pytest.raises(ConfigParseError):
            parse_scenario(data)

    def test_invalid_but_well_formed_is_validation(self):
        spec = parse_scenario({"duration_s": -4})
        with pytest.raises(ValidationError):
            simulate_frames(spec.scenario, spec.radio)

    def test_bad_json(self, tmp_path):
        (tmp_path / "s.json").write_text("{not json")
        with pytest.raises(ConfigParseError):
            load_scenario(tmp_path / "s.json")

    def test_top_level_list(self, tmp_path):
        (tmp_path / "s.json").write_text("[1, 2]")
        with pytest.raises(ConfigParseError):
            load_scenario(tmp_path / "s.json")

    def test_load(self, tmp_path):
        write_json(tmp_path / "s.json", SCENARIO)
        assert isinstance(load_scenario(tmp_path / "s.json"), ScenarioFile)


class TestPipelineConfigParsing:
    def test_empty_is_default(self):
        assert parse_pipeline_config({}) == PipelineConfig()

    def test_nested(self):
        cfg = parse_pipeline_config({"msvmd": {"n_modes": 2, "band_limit_hz": 3}, "bands": {"ibi_min_fraction": 0.6}, "n_lags": 3})
        assert cfg.msvmd.n_modes == 2 and cfg.msvmd.band_limit_hz == 3
        assert cfg.bands.ibi_min_fraction == 0.6 and cfg.n_lags == 3

    def test_round_trip(self, tmp_path):
        cfg = PipelineConfig(beta=0.95, driver_gate_m=(0.2, 1.0))
        write_json(tmp_path / "c.json", config_to_dict(cfg))
        assert load_pipeline_config(tmp_path / "c.json") == cfg

    @pytest.mark.parametrize("data", [{"bta": 0.9}, {"msvmd": {"modes": 3}}, {"beta": "0.9"}, {"filter": 3}])
    def test_malformed(self, data):
        with pytest.raises(ConfigParseError):
            parse_pipeline_config(data)

    @pytest.mark.parametrize("data", [{"n_lags": 4}, {"beta": 1.5}, {"msvmd": {"n_modes": 0}}])
    def test_invalid(self, data):
        with pytest.raises(ValidationError):
            parse_pipeline_config(data)


def summary(reports):
    discarded = sum(r.window_discarded for r in reports)
    return RunSummary(len(reports), discarded, tuple(reports), 1.0, 0.5, 0.6, 7)


REPORTS = [
    VitalReport(0.0, 15.0, 72.0, (0.5, 1.3, 2.1), (800.0, 800.0), driver_range_m=0.8),
    VitalReport(10.0, window_discarded=True),
    VitalReport(20.0, 14.5, None, no_heartbeat_mode=True),
]


class TestReport:
    def test_rows_equal_kept_windows(self, tmp_path):
        write_report(tmp_path / "r.csv", summary(REPORTS))
        rows = read_report(tmp_path / "r.csv")
        assert len(rows) == 2
        assert tuple(rows[0]) == REPORT_COLUMNS
        assert rows[0]["resp_rpm"] == "15.000000" and rows[0]["n_beats"] == "3"
        assert rows[0]["mean_ibi_ms"] == "800.000000" and rows[0]["sdnn_ms"] == "0.000000"
        assert rows[1]["hr_bpm"] == "" and rows[1]["flags"] == "no_heartbeat_mode"

    def test_sidecars_cover_every_window(self, tmp_path):
        folder = write_report(tmp_path / "r.csv", summary(REPORTS))
        assert folder == sidecar_dir(tmp_path / "r.csv")
        files = sorted(folder.glob("window_*.json"))
        assert len(files) == 3
        first = json.loads(files[0].read_text())
        assert first["beat_times_s"] == [0.5, 1.3, 2.1] and first["ibi_ms"] == [800.0, 800.0]
        assert json.loads(files[1].read_text())["flags"] == ["window_discarded"]

    def test_rewrite_drops_stale_sidecars(self, tmp_path):
        write_report(tmp_path / "r.csv", summary(REPORTS))
        write_report(tmp_path / "r.csv", summary(REPORTS[:1]))
        assert len(list(sidecar_dir(tmp_path / "r.csv").glob("*.json"))) == 1

    def test_deterministic_bytes(self, tmp_path):
        write_report(tmp_path / "a.csv", summary(REPORTS))
        write_report(tmp_path / "b.csv", summary(REPORTS))
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


class TestModes:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        ms = ModeSet(rng.normal(size=(3, 50)), np.array([0.3, 1.2, 3.0]), 12, 1e-7, True)
        write_modes(tmp_path / "m.csv", ms)
        freqs, modes = read_modes(tmp_path / "m.csv")
        assert np.allclose(freqs, [0.3, 1.2, 3.0])
        assert np.array_equal(modes, ms.modes)

    def test_single_column(self, tmp_path):
        ms = ModeSet(np.ones((1, 4)), np.array([0.5]), 1, 0.0, True)
        write_modes(tmp_path / "m.csv", ms)
        lines = (tmp_path / "m.csv").read_text().splitlines()
        assert lines[0] == "0.500000" and len(lines) == 5
