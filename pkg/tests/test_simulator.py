from __future__ import annotations

import random

import pytest

from gridnav.actions import ACTIONS, DONE, MOVE_AHEAD, ROTATE_LEFT, ROTATE_RIGHT
from gridnav.scene import ObjectInstance, Pose
from gridnav.simulator import (
    DONE_ISSUED,
    STEP_LIMIT,
    Simulation,
    StepAfterTermination,
    SuccessBeforeTermination,
)

from conftest import make_house, open_grid


def open_house(width=6, height=6, objects=()):
    grid = open_grid(width, height)
    return make_house(grid.reachable, width, height, objects)


class TestStep:
    def test_move_ahead_north(self):
        sim = Simulation(open_house(), Pose((0, 0), 0))
        sim.step(MOVE_AHEAD)
        assert sim.pose == Pose((0, 1), 0)
        assert sim.agent_position() == (0.0, 0.25)

    def test_move_headings(self):
        for rotation, cell in ((0, (2, 3)), (90, (3, 2)), (180, (2, 1)), (270, (1, 2))):
            sim = Simulation(open_house(), Pose((2, 2), rotation))
            sim.step(MOVE_AHEAD)
            assert sim.pose.cell == cell

    def test_rotate_left_wraps(self):
        sim = Simulation(open_house(), Pose((0, 0), 0))
        sim.step(ROTATE_LEFT)
        assert sim.pose.rotation == 270

    def test_rotate_right(self):
        sim = Simulation(open_house(), Pose((0, 0), 270))
        sim.step(ROTATE_RIGHT)
        assert sim.pose.rotation == 0

    def test_blocked_move_consumes_step(self):
        house = make_house({(0, 0)}, 1, 1, [])
        sim = Simulation(house, Pose((0, 0), 0))
        obs = sim.step(MOVE_AHEAD)
        assert sim.pose.cell == (0, 0)
        assert sim.steps_taken == 1
        assert obs.obstacle_ahead

    def test_done_terminates(self):
        sim = Simulation(open_house(), Pose((0, 0), 0))
        sim.step(DONE)
        assert sim.terminated
        assert sim.termination_cause == DONE_ISSUED

    def test_step_limit(self):
        sim = Simulation(open_house(), Pose((0, 0), 0), max_steps=3)
        sim.step(ROTATE_RIGHT)
        sim.step(ROTATE_RIGHT)
        assert not sim.terminated
        sim.step(ROTATE_RIGHT)
        assert sim.terminated
        assert sim.termination_cause == STEP_LIMIT

    def test_step_after_termination_raises(self):
        sim = Simulation(open_house(), Pose((0, 0), 0))
        sim.step(DONE)
        with pytest.raises(StepAfterTermination):
            sim.step(MOVE_AHEAD)

    def test_unknown_action_rejected(self):
        sim = Simulation(open_house(), Pose((0, 0), 0))
        with pytest.raises(ValueError):
            sim.step("Jump")

    def test_done_on_last_step_counts_as_done(self):
        sim = Simulation(open_house(), Pose((0, 0), 0), max_steps=1)
        sim.step(DONE)
        assert sim.termination_cause == DONE_ISSUED

    def test_pose_closure_under_random_actions(self):
        rng = random.Random(3)
        house = make_house({(c, r) for c in range(5) for r in range(5)
                            if (c, r) != (2, 2)}, 5, 5, [])
        sim = Simulation(house, Pose((0, 0), 0), max_steps=200)
        while not sim.terminated:
            action = rng.choice([MOVE_AHEAD, ROTATE_LEFT, ROTATE_RIGHT])
            sim.step(action)
            assert sim.pose.cell in house.grid.reachable
        assert sim.steps_taken == 200

    def test_determinism(self):
        rng = random.Random(8)
        actions = [rng.choice(ACTIONS[:3]) for _ in range(50)]
        results = []
        for _ in range(2):
            sim = Simulation(open_house(), Pose((3, 3), 90))
            observations = [sim.step(a) for a in actions]
            results.append((sim.pose, observations))
        assert results[0] == results[1]


def place(x, y, height=1.0, opaque=False, oid="obj"):
    return ObjectInstance(id=oid, category="vase", position=(x, y),
                          height_m=height, opaque=opaque)


class TestVisibility:
    def test_object_in_own_cell(self):
        obj = place(0.05, -0.05)
        sim = Simulation(open_house(objects=[obj]), Pose((0, 0), 180))
        assert sim.visible(obj)

    def test_object_ahead_visible(self):
        obj = place(0.0, 1.0)
        sim = Simulation(open_house(objects=[obj]), Pose((0, 0), 0))
        assert sim.visible(obj)

    def test_object_behind_invisible(self):
        obj = place(0.0, 0.5)
        sim = Simulation(open_house(objects=[obj]), Pose((0, 4), 0))
        assert not sim.visible(obj)

    def test_frustum_boundary_diagonal_counts(self):
        obj = place(1.0, 1.0)  # exactly 45 degrees from (0,0) facing north
        sim = Simulation(open_house(objects=[obj]), Pose((0, 0), 0))
        assert sim.visible(obj)

    def test_out_of_range_invisible(self):
        obj = place(0.0, 5.25)
        sim = Simulation(open_house(width=2, height=22, objects=[obj]), Pose((0, 0), 0))
        assert not sim.visible(obj)
        near = place(0.0, 5.0, oid="near")
        sim2 = Simulation(open_house(width=2, height=22, objects=[near]), Pose((0, 0), 0))
        assert sim2.visible(near)

    def test_height_filter(self):
        low = place(0.0, 1.0, height=0.1, oid="low")
        high = place(0.0, 1.0, height=2.3, oid="high")
        sim = Simulation(open_house(objects=[low, high]), Pose((0, 0), 0))
        assert not sim.visible(low)
        assert not sim.visible(high)

    def test_opaque_cell_blocks_line_of_sight(self):
        # Column corridor with an unreachable middle cell holding an
        # opaque object between the agent and the target.
        reachable = {(0, r) for r in range(7)} - {(0, 3)}
        blocker = place(0.0, 0.75, opaque=True, oid="blocker")
        target = place(0.0, 1.5, oid="target")
        house = make_house(reachable, 1, 7, [blocker, target])
        sim = Simulation(house, Pose((0, 0), 0))
        assert not sim.visible(target)

    def test_blocker_does_not_occlude_itself(self):
        reachable = {(0, r) for r in range(7)} - {(0, 3)}
        blocker = place(0.0, 0.75, opaque=True, oid="blocker")
        house = make_house(reachable, 1, 7, [blocker])
        sim = Simulation(house, Pose((0, 0), 0))
        assert sim.visible(blocker)

    def test_reachable_cells_never_occlude(self):
        clutter = place(0.0, 0.5, opaque=True, oid="clutter")  # on a floor cell
        target = place(0.0, 1.5, oid="target")
        house = open_house(width=1, height=12, objects=[clutter, target])
        sim = Simulation(house, Pose((0, 0), 0))
        assert sim.visible(target)


class TestObservation:
    def test_visible_objects_and_bearing(self):
        objs = [place(0.5, 1.0, oid="ahead"), place(0.0, 1.0, oid="leftish")]
        house = make_house({(c, r) for c in range(8) for r in range(8)},
                           8, 8, objs)
        sim = Simulation(house, Pose((2, 0), 0))  # center (0.5, 0.0)
        obs = sim.observe()
        names = {v.id: v for v in obs.visible_objects}
        assert names["ahead"].bearing == "ahead"
        assert abs(names["ahead"].distance_m - 1.0) < 1e-12
        assert names["leftish"].bearing == "left"

    def test_ego_window_rotates_with_agent(self):
        house = make_house({(c, r) for c in range(3) for r in range(3)} - {(1, 2)},
                           3, 3, [])
        north = Simulation(house, Pose((1, 1), 0), ego_half_width=1).observe()
        east = Simulation(house, Pose((1, 1), 90), ego_half_width=1).observe()
        # Facing north the blocked cell (1,2) sits straight ahead (middle
        # of the top row); facing east it sits one cell to the left.
        assert north.ego_window[0][1] == "#"
        assert east.ego_window[0][1] == "."  # straight ahead is open
        assert east.ego_window[1][0] == "#"  # immediate left is blocked

    def test_ego_window_center_is_agent(self):
        sim = Simulation(open_house(), Pose((3, 3), 0), ego_half_width=2)
        window = sim.observe().ego_window
        assert window[2][2] == "A"
        assert len(window) == 5 and all(len(row) == 5 for row in window)


class TestSuccess:
    def test_success_distance_and_visibility(self):
        target = place(0.0, 1.49, oid="t")
        sim = Simulation(open_house(width=1, height=12, objects=[target]), Pose((0, 0), 0))
        sim.step(DONE)
        assert sim.is_success(target)

    def test_exactly_1_5_m_fails(self):
        target = place(0.0, 1.5, oid="t")
        sim = Simulation(open_house(width=1, height=12, objects=[target]), Pose((0, 0), 0))
        sim.step(DONE)
        assert not sim.is_success(target)

    def test_occluded_close_target_fails_unless_relaxed(self):
        reachable = {(0, r) for r in range(7)} - {(0, 2)}
        blocker = place(0.0, 0.5, opaque=True, oid="b")
        target = place(0.0, 1.0, oid="t")
        house = make_house(reachable, 1, 7, [blocker, target])
        sim = Simulation(house, Pose((0, 0), 0))
        sim.step(DONE)
        assert not sim.is_success(target)
        assert sim.is_success(target, require_visible=False)

    def test_success_before_termination_raises(self):
        target = place(0.0, 1.0, oid="t")
        sim = Simulation(open_house(objects=[target]), Pose((0, 0), 0))
        with pytest.raises(SuccessBeforeTermination):
            sim.is_success(target)
