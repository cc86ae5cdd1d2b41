import numpy as np
import pytest

from _scenarios import RADIO, burst_scenario, driving_scenario
from cabinvitals.errors import NoDriverError, ValidationError
from cabinvitals.msvmd import MsVmdConfig
from cabinvitals.pipeline import PipelineConfig, decompose, process_frames, window_starts
from cabinvitals.rf import FrameMatrix, Oscillation, RadioConfig, SimScenario, SimTarget, ground_truth, simulate_frames
from cabinvitals.vitals import select_mode

FS = RADIO.frame_rate_hz


@pytest.fixture(scope="module")
def driving():
    sc = driving_scenario(5, duration_s=40.0)
    return sc, simulate_frames(sc, RADIO)


@pytest.fixture(scope="module")
def driving_summary(driving):
    return process_frames(driving[1])


class TestConfig:
    def test_defaults(self):
        c = PipelineConfig()
        assert (c.short_window_s, c.long_window_s, c.instability_coefficient, c.detection_coef, c.n_lags) == (
            5.0,
            20.0,
            1.2,
            1.5,
            5,
        )
        assert c.beta == 0.97 and c.msvmd.n_modes == 4

    @pytest.mark.parametrize(
        "kwargs",
        [{"n_lags": 4}, {"n_lags": 0}, {"beta": 1.0}, {"short_window_s": 30.0}, {"long_hop_s": 0}, {"driver_gate_m": (1.0, 0.5)}],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ValidationError):
            PipelineConfig(**kwargs)


class TestWindowStarts:
    def test_long_windows(self):
        assert window_starts(24000, 400, 20, 10) == [0, 4000, 8000, 12000, 16000]

    def test_short_recording(self):
        assert window_starts(100, 400, 20, 10) == []

    def test_exact_fit(self):
        assert window_starts(8000, 400, 20, 10) == [0]


class TestProcess:
    def test_rates_match_truth(self, driving, driving_summary):
        truth = ground_truth(driving[0])[0]
        s = driving_summary
        assert s.windows_processed == 3
        for rep in s.reported:
            assert rep.respiratory_rate_rpm == pytest.approx(truth.respiratory_rate_rpm, abs=0.3)
            assert rep.heart_rate_bpm == pytest.approx(truth.heart_rate_bpm, abs=1.0)
            assert rep.driver_range_m == pytest.approx(0.8, abs=2 * RADIO.bin_spacing_m)

    def test_summary_accounting(self, driving_summary):
        s = driving_summary
        assert s.windows_processed == s.windows_discarded + len(s.reported)
        assert s.total_seconds >= s.max_window_seconds >= s.mean_window_seconds > 0
        assert [r.window_start_s for r in s.reports] == [0.0, 10.0, 20.0]

    def test_deterministic(self, driving, driving_summary):
        again = process_frames(driving[1])
        assert again.reports == driving_summary.reports

    def test_seed_recorded(self, driving):
        frames = FrameMatrix(driving[1].samples[: 20 * 400], RADIO)
        assert process_frames(frames, PipelineConfig(seed=42)).seed == 42

    def test_empty_scene(self):
        frames = simulate_frames(SimScenario(duration_s=20.0), RADIO)
        s = process_frames(frames)
        assert s.windows_processed == 1
        rep = s.reports[0]
        assert rep.respiratory_rate_rpm is None and rep.heart_rate_bpm is None
        assert not rep.window_discarded

    def test_burst_window_discarded(self):
        s = process_frames(simulate_frames(burst_scenario(0), RADIO))
        flagged = {r.window_start_s for r in s.reports if r.window_discarded}
        # the 32-37 s burst lies entirely inside the 20-40 s window
        assert 20.0 in flagged
        assert 0.0 not in flagged

    def test_too_few_bins_for_lags(self):
        sc = SimScenario((SimTarget(0.06, 1.0, Oscillation(0.25, 0.005)),), duration_s=20.0)
        narrow = RadioConfig(fast_time_bins=3)
        with pytest.raises(ValidationError):
            process_frames(simulate_frames(sc, narrow))


class TestDecompose:
    def test_driving_window_four_modes(self, driving):
        sc, frames = driving
        truth = ground_truth(sc)[0]
        result = decompose(frames)
        ms = result.modes
        assert ms.n_modes == 4 and ms.modes.shape[1] == 20 * 400
        assert np.all(np.diff(ms.center_freqs_hz) >= 0)
        resp = select_mode(ms, (0.16, 0.6), FS)
        heart = select_mode(ms, (1.0, 2.0), FS, exclude=resp)
        assert resp is not None and heart is not None
        assert ms.center_freqs_hz[resp] == pytest.approx(truth.respiratory_rate_rpm / 60, abs=0.1)
        assert ms.center_freqs_hz[heart] == pytest.approx(truth.heart_rate_bpm / 60, abs=0.1)
        assert result.window_start_s == 0.0

    def test_short_recording_single_window(self):
        sc = SimScenario((SimTarget(0.8, 1.0, Oscillation(0.3, 0.005)),), duration_s=10.0)
        result = decompose(simulate_frames(sc, RADIO), PipelineConfig(msvmd=MsVmdConfig(n_modes=1, band_limit_hz=5.0)))
        assert result.modes.modes.shape == (1, 4000)
        assert result.modes.center_freqs_hz[0] == pytest.approx(0.3, abs=0.05)

    def test_no_driver(self):
        with pytest.raises(NoDriverError):
            decompose(simulate_frames(SimScenario(duration_s=20.0), RADIO))
