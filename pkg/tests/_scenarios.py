"""Scenario builders shared by the integration and acceptance tests."""

from dataclasses import replace

import numpy as np

from cabinvitals.rf import (
    MotionBurst,
    Oscillation,
    RadioConfig,
    RateStep,
    SimScenario,
    SimTarget,
    noise_std_for_snr,
)

RADIO = RadioConfig()
# moderate engine/road vibration, outside both vital bands
VIBRATION = (Oscillation(3.1, 0.0005), Oscillation(6.7, 0.00025))


def at_snr(scenario: SimScenario, snr_db: float = 10.0) -> SimScenario:
    return replace(scenario, noise_std=noise_std_for_snr(scenario, RADIO, snr_db))


def driver(rng, range_m=0.8, jitter_s=0.0, **kwargs):
    """Driver with random rates: 10-20 rpm respiration, 60-90 bpm heartbeat."""
    return SimTarget(
        range_m,
        1.0,
        Oscillation(rng.uniform(10, 20) / 60.0, 0.005),
        Oscillation(rng.uniform(60, 90) / 60.0, 0.0003),
        beat_jitter_std_s=jitter_s,
        **kwargs,
    )


def driving_scenario(seed: int, duration_s: float = 30.0, jitter_s: float = 0.0) -> SimScenario:
    rng = np.random.default_rng(seed)
    sc = SimScenario((driver(rng, jitter_s=jitter_s),), VIBRATION, 0.0, duration_s, seed)
    return at_snr(sc)


def transition_scenario(seed: int) -> SimScenario:
    target = SimTarget(
        0.8,
        1.0,
        Oscillation(10 / 60.0, 0.005),
        Oscillation(1.2, 0.0003),
        respiration_steps=(RateStep(120.0, 15 / 60.0),),
    )
    return at_snr(SimScenario((target,), VIBRATION, 0.0, 240.0, seed))


def burst_scenario(seed: int, start_s: float = 32.0) -> SimScenario:
    rng = np.random.default_rng(seed)
    target = driver(rng, motion_bursts=(MotionBurst(start_s, 5.0),))
    return at_snr(SimScenario((target,), VIBRATION, 0.0, 60.0, seed))


def three_occupants(seed: int) -> SimScenario:
    targets = (
        SimTarget(0.7, 1.0, Oscillation(0.20, 0.005), Oscillation(1.20, 0.0003)),
        SimTarget(1.4, 1.0, Oscillation(0.30, 0.005), Oscillation(1.40, 0.0003)),
        SimTarget(2.2, 1.0, Oscillation(0.40, 0.005), Oscillation(1.10, 0.0003)),
    )
    return at_snr(SimScenario(targets, VIBRATION, 0.0, 20.0, seed))
