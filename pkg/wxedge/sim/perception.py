"""
Surrogate perception and behaviour control for the system under test.

Weather reaches the ego only through ``visibility``: it shrinks the detection
range, lowers per-tick detection probability and IOU, and inflates range noise.
"""

import math

import numpy as np

from ..models.common import clamp01, wrap_degrees
from ..models.perception import ControllerConfig, DetectionResult, PerceptionConfig
from ..models.world import ControlSignal, KnobState, SimConfig, WorldState

DEFAULT_PERCEPTION = PerceptionConfig()
DEFAULT_CONTROLLER = ControllerConfig()
DEFAULT_SIM = SimConfig()


def illumination(sun_altitude: float, night_floor: float) -> float:
    """Ambient light level: night_floor at or below the horizon, 1 at zenith."""
    return night_floor + (1.0 - night_floor) * max(0.0, math.sin(math.radians(sun_altitude)))


def glare(knobs: KnobState, cfg: PerceptionConfig) -> float:
    """Glare multiplier for a low sun in front of the ego camera."""
    low_sun = 0.0 < knobs.sun_altitude < cfg.glare_alt_max
    facing = abs(wrap_degrees(knobs.sun_azimuth - cfg.ego_heading)) < cfg.glare_az_halfwidth
    return cfg.glare_factor if low_sun and facing else 1.0


def visibility(knobs: KnobState, cfg: PerceptionConfig = DEFAULT_PERCEPTION) -> float:
    """Scalar camera visibility in [0, 1] derived from the weather knobs."""
    attenuation = math.exp(
        -cfg.fog_coeff * knobs.fog_density
        - cfg.rain_coeff * knobs.precipitation
        - cfg.deposit_coeff * knobs.precipitation_deposits
    )
    return clamp01(illumination(knobs.sun_altitude, cfg.night_floor) * attenuation * glare(knobs, cfg))


def sense(
    world: WorldState,
    cfg: PerceptionConfig,
    rng: np.random.Generator,
    vis: float = -1.0,
) -> DetectionResult:
    """
    Run the surrogate detector on the current world.

    Two draws are taken every tick (a uniform for the detection trial, a normal
    for range noise) so the stream stays aligned whatever the outcome.

    Args:
        world: Current world state
        cfg: Perception coefficients
        rng: Stream seeded from the scene's noise_seed and the tick
        vis: Precomputed visibility; computed from ``world.knobs`` when negative

    Returns:
        DetectionResult for this tick
    """
    v = visibility(world.knobs, cfg) if vis < 0.0 else vis
    trial = float(rng.random())
    noise = float(rng.standard_normal())

    detection_range = cfg.r_max * v
    distance = max(world.gap, 0.0)
    if detection_range <= 0.0 or distance > detection_range:
        return DetectionResult.miss()

    probability = clamp01(1.2 * (detection_range - distance) / detection_range)
    if trial >= probability:
        return DetectionResult.miss()

    iou = clamp01(v * (1.0 - distance / detection_range))
    if iou <= 0.0:
        return DetectionResult.miss()

    est_distance = distance * (1.0 + noise * cfg.range_noise_coeff * (1.0 - v))
    return DetectionResult(detected=True, est_distance=est_distance, iou=iou)


def behavior_control(
    det: DetectionResult,
    ego_speed: float,
    cfg: ControllerConfig = DEFAULT_CONTROLLER,
    sim: SimConfig = DEFAULT_SIM,
) -> ControlSignal:
    """
    Translate a detection into throttle/brake.

    With no detection the controller cruises toward ``v_cruise``. With a detection
    it brakes when stopping short of ``d_standoff`` needs at least ``a_comfort``;
    otherwise it cruises with throttle capped so the next-tick speed still stops
    within comfort deceleration.
    """
    cruise = clamp01(cfg.k_v * (cfg.v_cruise - ego_speed))

    if not det.detected or det.est_distance is None:
        return ControlSignal(throttle=cruise, brake=0.0)

    room = max(det.est_distance - cfg.d_standoff, cfg.epsilon)
    a_req = ego_speed * ego_speed / (2.0 * room)
    if a_req >= cfg.a_comfort:
        return ControlSignal(throttle=0.0, brake=clamp01(a_req / sim.a_dec_max))

    allowed_speed = math.sqrt(2.0 * cfg.a_comfort * room)
    cap = clamp01((allowed_speed - ego_speed) / (sim.a_acc_max * sim.dt))
    return ControlSignal(throttle=min(cruise, cap), brake=0.0)
