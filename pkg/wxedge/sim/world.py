"""
Deterministic longitudinal microsimulator.

The world is a single-lane corridor holding the ego vehicle and one lead
vehicle. Weather knobs do not touch the kinematics; they act through perception.
"""

import math
from collections.abc import Collection, Sequence

from ..errors import InvalidArgumentError, NonFiniteError
from ..models.common import clamp
from ..models.scene import Scene
from ..models.world import (
    CIRCULAR_KNOBS,
    KNOB_BOUNDS,
    KNOB_NAMES,
    ControlSignal,
    KnobState,
    SimConfig,
    WorldState,
    knob_span,
)

DEFAULT_SIM = SimConfig()


def apply_action(
    knobs: KnobState,
    raw_action: Sequence[float],
    max_step_fraction: float = 0.05,
    frozen: Collection[str] = (),
) -> KnobState:
    """
    Move each knob by at most ``max_step_fraction`` of its span.

    Args:
        knobs: Current knob state
        raw_action: 5-vector ordered as ``KNOB_NAMES``; components are clamped to [-1, 1]
        max_step_fraction: Perturbation limit as a fraction of each knob's span
        frozen: Knob names that keep their current value

    Returns:
        New knob state with every field inside its range
    """
    if len(raw_action) != len(KNOB_NAMES):
        raise ValueError(f"Expected a {len(KNOB_NAMES)}-vector action, got {len(raw_action)}")

    values: dict[str, float] = {}
    for name, raw in zip(KNOB_NAMES, raw_action):
        current = getattr(knobs, name)
        if name in frozen:
            values[name] = current
            continue

        delta = clamp(float(raw), -1.0, 1.0) * max_step_fraction * knob_span(name)
        if name in CIRCULAR_KNOBS:
            values[name] = current + delta  # wrapped by KnobState
        else:
            low, high = KNOB_BOUNDS[name]
            values[name] = clamp(current + delta, low, high)

    return KnobState(**values)


def initial_world(scene: Scene, cfg: SimConfig = DEFAULT_SIM) -> WorldState:
    """Place ego at the origin and the lead ``initial_gap`` ahead."""
    if scene.initial_gap <= cfg.vehicle_length:
        raise InvalidArgumentError(
            f"Scene {scene.scene_id}: initial_gap {scene.initial_gap} must exceed "
            f"vehicle_length {cfg.vehicle_length}"
        )
    return WorldState(
        tick=0,
        ego_pos=0.0,
        ego_speed=scene.ego_speed0,
        lead_pos=scene.initial_gap + cfg.vehicle_length,
        lead_speed=scene.lead_speed0,
        knobs=cfg.initial_knobs,
        collided=False,
        vehicle_length=cfg.vehicle_length,
        lead_base_speed=scene.lead_speed0,
    )


def gap_of(world: WorldState) -> float:
    """Bumper-to-bumper distance: lead_pos - ego_pos - vehicle_length."""
    return world.lead_pos - world.ego_pos - world.vehicle_length


def _lead_target(world: WorldState, scene: Scene, tick: int) -> float:
    event = scene.active_event(tick)
    if event is not None:
        return event.target_speed
    if world.lead_base_speed is not None:
        return world.lead_base_speed
    return scene.lead_speed0


def step(
    world: WorldState,
    control: ControlSignal,
    scene: Scene,
    cfg: SimConfig = DEFAULT_SIM,
) -> WorldState:
    """
    Advance the world by one tick.

    Ego follows the control with semi-implicit Euler integration; the lead tracks
    the active event target (or its base speed) with bounded acceleration. A cut-in
    replaces the lead when the new tick reaches its trigger. After contact the
    kinematics freeze: the contact tick keeps the impact speed, later ticks have
    both speeds at zero.
    """
    next_tick = world.tick + 1

    if world.collided:
        return world.model_copy(update={"tick": next_tick, "ego_speed": 0.0, "lead_speed": 0.0})

    dt = cfg.dt
    accel = control.throttle * cfg.a_acc_max - control.brake * cfg.a_dec_max
    ego_speed = clamp(world.ego_speed + accel * dt, 0.0, cfg.v_cap)
    ego_pos = world.ego_pos + ego_speed * dt

    target = _lead_target(world, scene, world.tick)
    max_dv = cfg.lead_accel_max * dt
    lead_speed = max(0.0, world.lead_speed + clamp(target - world.lead_speed, -max_dv, max_dv))
    lead_pos = world.lead_pos + lead_speed * dt
    lead_base_speed = world.lead_base_speed
    lead_index = world.lead_index

    cut_in = scene.cut_in
    if cut_in is not None and next_tick == cut_in.trigger_tick:
        lead_pos = ego_pos + world.vehicle_length + cut_in.inserted_gap
        lead_speed = cut_in.inserted_speed
        lead_base_speed = cut_in.inserted_speed
        lead_index += 1

    gap = lead_pos - ego_pos - world.vehicle_length
    collided = gap <= 0.0

    if not (math.isfinite(ego_pos) and math.isfinite(lead_pos)):
        raise NonFiniteError("world step", f"kinematics at tick {next_tick}")

    return WorldState(
        tick=next_tick,
        ego_pos=ego_pos,
        ego_speed=ego_speed,
        lead_pos=lead_pos,
        lead_speed=lead_speed,
        knobs=world.knobs,
        collided=collided,
        vehicle_length=world.vehicle_length,
        lead_base_speed=lead_base_speed,
        lead_index=lead_index,
    )
