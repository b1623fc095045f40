"""
Tests for the longitudinal microsimulator and weather knobs.
"""

import numpy as np
import pytest
from pydantic import ValidationError

from tests.conftest import make_scene
from wxedge.errors import InvalidArgumentError
from wxedge.models.scene import CutIn, LeadEvent
from wxedge.models.world import (
    KNOB_BOUNDS,
    KNOB_NAMES,
    ControlSignal,
    KnobState,
    SimConfig,
    WorldState,
    knob_span,
)
from wxedge.sim.world import apply_action, gap_of, initial_world, step


class TestKnobState:
    """Test KnobState model."""

    def test_clear_preset(self):
        """Test the clear-day preset."""
        knobs = KnobState.clear()

        assert knobs.as_vector() == [0.0, 0.0, 0.0, 90.0, 0.0]

    def test_azimuth_wraps(self):
        """Test sun azimuth is stored modulo 360."""
        assert KnobState(sun_azimuth=-10.0).sun_azimuth == pytest.approx(350.0)
        assert KnobState(sun_azimuth=360.0).sun_azimuth == 0.0
        assert KnobState(sun_azimuth=725.0).sun_azimuth == pytest.approx(5.0)

    def test_out_of_range_rejected(self):
        """Test densities outside [0, 1] are rejected."""
        with pytest.raises(ValidationError):
            KnobState(fog_density=1.5)
        with pytest.raises(ValidationError):
            KnobState(sun_altitude=-91.0)

    def test_vector_round_trip(self):
        """Test from_vector and as_vector agree."""
        values = [0.1, 0.2, 0.3, 12.0, 200.0]

        assert KnobState.from_vector(values).as_vector() == values


class TestControlSignal:
    """Test ControlSignal model."""

    def test_exclusive(self):
        """Test throttle and brake cannot both be applied."""
        with pytest.raises(ValidationError):
            ControlSignal(throttle=0.5, brake=0.5)

    def test_coast(self):
        """Test the coasting signal."""
        signal = ControlSignal.coast()

        assert signal.throttle == 0.0
        assert signal.brake == 0.0


class TestApplyAction:
    """Test bounded knob perturbation."""

    def test_maximum_step(self):
        """Test a full positive action moves fog by 5% of its span."""
        knobs = apply_action(KnobState(fog_density=0.5), [1.0, 0, 0, 0, 0])

        assert knobs.fog_density == pytest.approx(0.55)

    def test_boundary_clamp(self):
        """Test knobs clamp at their upper bound."""
        knobs = apply_action(KnobState(fog_density=0.98), [1.0, 0, 0, 0, 0])

        assert knobs.fog_density == 1.0

    def test_altitude_span(self):
        """Test sun altitude moves on its 180 degree span."""
        knobs = apply_action(KnobState(sun_altitude=0.0), [0, 0, 0, -0.5, 0])

        assert knobs.sun_altitude == pytest.approx(-4.5)

    def test_raw_action_clamped(self):
        """Test components beyond [-1, 1] are clamped, not rejected."""
        knobs = apply_action(KnobState(precipitation=0.5), [0, 7.0, 0, 0, 0])

        assert knobs.precipitation == pytest.approx(0.55)

    def test_azimuth_wraps(self):
        """Test sun azimuth wraps instead of clamping."""
        knobs = apply_action(KnobState(sun_azimuth=359.0), [0, 0, 0, 0, 1.0])

        assert knobs.sun_azimuth == pytest.approx(17.0)

    def test_frozen_knobs(self):
        """Test frozen knobs keep their value."""
        start = KnobState(fog_density=0.2, precipitation=0.3)
        knobs = apply_action(
            start, [1.0, 1.0, 1.0, 0, 0], frozen=("fog_density", "precipitation")
        )

        assert knobs.fog_density == 0.2
        assert knobs.precipitation == 0.3
        assert knobs.precipitation_deposits == pytest.approx(0.05)

    def test_wrong_length(self):
        """Test a non-5-vector action is rejected."""
        with pytest.raises(ValueError):
            apply_action(KnobState(), [0.0, 0.0])

    def test_perturbation_bound_and_range(self):
        """Test ten thousand random action sequences respect the step limit and the ranges."""
        rng = np.random.default_rng(0)
        for _ in range(10_000):
            knobs = KnobState.from_vector(
                [
                    rng.uniform(0, 1),
                    rng.uniform(0, 1),
                    rng.uniform(0, 1),
                    rng.uniform(-90, 90),
                    rng.uniform(0, 360),
                ]
            )
            for _ in range(5):
                action = rng.uniform(-1.5, 1.5, 5)
                nxt = apply_action(knobs, action)
                for name in KNOB_NAMES:
                    before, after = getattr(knobs, name), getattr(nxt, name)
                    limit = 0.05 * knob_span(name) + 1e-9
                    if name == "sun_azimuth":
                        delta = abs((after - before + 180.0) % 360.0 - 180.0)
                        assert 0.0 <= after < 360.0
                    else:
                        delta = abs(after - before)
                        low, high = KNOB_BOUNDS[name]
                        assert low <= after <= high
                    assert delta <= limit
                knobs = nxt


class TestGap:
    """Test gap_of."""

    @pytest.mark.parametrize(
        "lead_pos,ego_pos,expected",
        [(104.5, 0.0, 100.0), (4.5, 0.0, 0.0), (20.0, 10.0, 5.5)],
    )
    def test_gap_of(self, lead_pos, ego_pos, expected):
        """Test bumper-to-bumper distance."""
        world = WorldState(ego_pos=ego_pos, ego_speed=0.0, lead_pos=lead_pos, lead_speed=0.0)

        assert gap_of(world) == pytest.approx(expected)
        assert world.gap == pytest.approx(expected)


class TestStep:
    """Test world transitions."""

    def test_initial_world(self):
        """Test the lead is placed initial_gap ahead."""
        world = initial_world(make_scene(initial_gap=40.0))

        assert world.tick == 0
        assert world.gap == pytest.approx(40.0)
        assert world.knobs == KnobState.clear()

    def test_initial_gap_must_clear_configured_length(self):
        """Test the initial gap is checked against the configured vehicle length."""
        scene = make_scene(initial_gap=5.0)

        assert initial_world(scene).gap == pytest.approx(5.0)
        with pytest.raises(InvalidArgumentError):
            initial_world(scene, SimConfig(vehicle_length=6.0))

    def test_constant_velocity(self):
        """Test coasting at 10 m/s advances exactly 1 m."""
        scene = make_scene(ego_speed0=10.0)
        world = initial_world(scene)

        nxt = step(world, ControlSignal.coast(), scene)

        assert nxt.ego_pos == 1.0
        assert nxt.ego_speed == 10.0
        assert nxt.tick == 1

    def test_no_reverse(self):
        """Test braking at standstill keeps speed at zero."""
        scene = make_scene(ego_speed0=0.0)
        world = initial_world(scene)

        nxt = step(world, ControlSignal(brake=1.0), scene)

        assert nxt.ego_speed == 0.0
        assert nxt.ego_pos == 0.0

    def test_speed_cap(self):
        """Test throttle never exceeds v_cap."""
        scene = make_scene(ego_speed0=29.9)
        nxt = step(initial_world(scene), ControlSignal(throttle=1.0), scene)

        assert nxt.ego_speed == 30.0

    def test_collision(self):
        """Test closing 5 m/s on a 0.3 m gap collides next tick."""
        scene = make_scene(ego_speed0=5.0, lead_speed0=0.0)
        world = WorldState(
            ego_pos=0.0, ego_speed=5.0, lead_pos=4.8, lead_speed=0.0, lead_base_speed=0.0
        )

        nxt = step(world, ControlSignal.coast(), scene)

        assert nxt.collided
        assert nxt.gap <= 0.0
        assert nxt.ego_speed == 5.0

    def test_collision_freezes(self):
        """Test kinematics freeze after contact and the flag stays set."""
        scene = make_scene(ego_speed0=5.0, lead_speed0=0.0)
        world = WorldState(
            ego_pos=0.0, ego_speed=5.0, lead_pos=4.8, lead_speed=0.0, lead_base_speed=0.0
        )
        hit = step(world, ControlSignal.coast(), scene)

        after = step(hit, ControlSignal(throttle=1.0), scene)
        later = step(after, ControlSignal(throttle=1.0), scene)

        assert after.collided and later.collided
        assert after.ego_speed == 0.0 and after.lead_speed == 0.0
        assert later.ego_pos == hit.ego_pos
        assert later.tick == hit.tick + 2

    def test_lead_event_bounded_deceleration(self):
        """Test the lead tracks an event target at most lead_accel_max."""
        scene = make_scene(
            lead_speed0=10.0,
            lead_events=[LeadEvent(start_tick=0, duration_ticks=50, target_speed=0.0)],
        )
        world = initial_world(scene)

        nxt = step(world, ControlSignal.coast(), scene)

        assert nxt.lead_speed == pytest.approx(9.6)

    def test_lead_returns_to_base_speed(self):
        """Test the lead recovers its base speed after an event."""
        scene = make_scene(
            initial_gap=200.0,
            lead_speed0=10.0,
            lead_events=[LeadEvent(start_tick=0, duration_ticks=5, target_speed=0.0)],
        )
        world = initial_world(scene)
        for _ in range(5):
            world = step(world, ControlSignal.coast(), scene)
        assert world.lead_speed == pytest.approx(8.0)

        for _ in range(5):
            world = step(world, ControlSignal.coast(), scene)
        assert world.lead_speed == pytest.approx(10.0)

    def test_cut_in(self):
        """Test a cut-in replaces the lead at its trigger tick."""
        scene = make_scene(
            initial_gap=60.0,
            cut_in=CutIn(trigger_tick=3, inserted_gap=12.0, inserted_speed=6.0),
        )
        world = initial_world(scene)
        for _ in range(3):
            world = step(world, ControlSignal.coast(), scene)
            assert world.lead_index == (1 if world.tick == 3 else 0)

        assert world.tick == 3
        assert world.gap == pytest.approx(12.0)
        assert world.lead_speed == 6.0
        assert world.lead_index == 1

        world = step(world, ControlSignal.coast(), scene)
        assert world.lead_index == 1

    def test_determinism(self):
        """Test identical inputs give identical trajectories."""
        scene = make_scene(
            lead_events=[LeadEvent(start_tick=10, duration_ticks=20, target_speed=2.0)]
        )
        controls = [ControlSignal(throttle=0.3)] * 10 + [ControlSignal(brake=0.2)] * 30

        def rollout():
            world = initial_world(scene)
            states = []
            for control in controls:
                world = step(world, control, scene)
                states.append(world)
            return states

        assert rollout() == rollout()

    def test_kinematic_sanity(self):
        """Test position is non-decreasing and speed drops at most a_dec_max * dt."""
        sim = SimConfig()
        scene = make_scene(initial_gap=500.0, ego_speed0=20.0)
        world = initial_world(scene)
        rng = np.random.default_rng(3)
        for _ in range(200):
            if rng.random() < 0.5:
                control = ControlSignal(throttle=float(rng.random()))
            else:
                control = ControlSignal(brake=float(rng.random()))
            nxt = step(world, control, scene)
            assert nxt.ego_pos >= world.ego_pos
            assert world.ego_speed - nxt.ego_speed <= sim.a_dec_max * sim.dt + 1e-12
            world = nxt
