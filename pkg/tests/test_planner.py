from __future__ import annotations

import random
from collections import deque
from itertools import product

import pytest

from gridnav.actions import DONE, MOVE_AHEAD, ROTATE_LEFT, ROTATE_RIGHT
from gridnav.planner import (
    NoPathFound,
    PlannedPath,
    compute_object_rotation,
    compute_path_rotation,
    derive_actions,
    nearest_grid_point,
    plan_shortest_path,
    rotation_actions,
)
from gridnav.scene import GridMap, ObjectInstance, Pose, ROTATIONS

from conftest import make_house, open_grid, random_connected_grid
from gridnav.simulator import Simulation


def bfs_distance(reachable, start, goal):
    seen = {start}
    queue = deque([(start, 0)])
    while queue:
        cell, dist = queue.popleft()
        if cell == goal:
            return dist
        c, r = cell
        for n in ((c, r + 1), (c + 1, r), (c, r - 1), (c - 1, r)):
            if n in reachable and n not in seen:
                seen.add(n)
                queue.append((n, dist + 1))
    return None


class TestNearestGridPoint:
    def test_object_on_cell_center(self):
        grid = open_grid(4, 4)
        assert nearest_grid_point(grid, (0.5, 0.75)) == (2, 3)

    def test_exhaustive_scan_oracle(self):
        grid = open_grid(12, 12)
        pos = (1.13, 2.32)
        best = min(grid.reachable,
                   key=lambda c: ((grid.cell_to_world(c)[0] - pos[0]) ** 2
                                  + (grid.cell_to_world(c)[1] - pos[1]) ** 2,
                                  c[1], c[0]))
        picked = nearest_grid_point(grid, pos)
        assert picked == best
        assert grid.cell_to_world(picked) == (1.25, 2.25)

    def test_tie_breaks_to_smaller_row_then_col(self):
        grid = open_grid(2, 2)
        # (0.125, 0.0) is equidistant from (0,0) and (1,0): row tie, col decides.
        assert nearest_grid_point(grid, (0.125, 0.0)) == (0, 0)
        # (0.0, 0.125) equidistant from (0,0) and (0,1): smaller row wins.
        assert nearest_grid_point(grid, (0.0, 0.125)) == (0, 0)

    def test_only_reachable_cells_qualify(self):
        grid = GridMap(3, 1, frozenset({(2, 0)}))
        assert nearest_grid_point(grid, (0.0, 0.0)) == (2, 0)


class TestPlanShortestPath:
    def test_start_equals_goal(self):
        grid = open_grid(3, 3)
        path = plan_shortest_path(grid, Pose((1, 1), 90), (1, 1))
        assert path.cells == ((1, 1),)
        assert path.cost == 0

    def test_open_3x3_diagonal_cost_via_enumeration(self):
        # Oracle: enumerate every 4-move path on the open 3x3 grid and
        # compute its cost under the 1-straight/2-turned model.
        grid = open_grid(3, 3)
        start, goal, start_rot = (0, 0), (2, 2), 0
        steps = {0: (0, 1), 90: (1, 0), 180: (0, -1), 270: (-1, 0)}
        best = None
        for dirs in product(steps, repeat=4):
            cell = start
            cost = 0
            rot = start_rot
            ok = True
            for d in dirs:
                cell = (cell[0] + steps[d][0], cell[1] + steps[d][1])
                if cell not in grid.reachable:
                    ok = False
                    break
                cost += 1 if d == rot else 2
                rot = d
            if ok and cell == goal:
                best = cost if best is None else min(best, cost)
        assert best == 5

        path = plan_shortest_path(grid, Pose(start, start_rot), goal)
        assert path.cost == 5
        assert path.move_count == 4
        turns = sum(
            1 for a, b in zip(path.cells, path.cells[2:])
            if (b[0] - a[0] != 0) and (b[1] - a[1] != 0))
        assert turns == 1  # exactly one direction change

    def test_unreachable_goal_raises(self):
        grid = GridMap(3, 1, frozenset({(0, 0), (2, 0)}))
        with pytest.raises(NoPathFound):
            plan_shortest_path(grid, Pose((0, 0), 0), (2, 0))

    def test_deterministic(self):
        rng = random.Random(5)
        for _ in range(20):
            grid, cells = random_connected_grid(rng, max_side=12)
            start = Pose(rng.choice(cells), rng.choice(ROTATIONS))
            goal = rng.choice(cells)
            first = plan_shortest_path(grid, start, goal)
            second = plan_shortest_path(grid, start, goal)
            assert first == second

    def test_move_count_matches_bfs_oracle(self):
        rng = random.Random(99)
        for _ in range(60):
            grid, cells = random_connected_grid(rng, max_side=18)
            start = Pose(rng.choice(cells), rng.choice(ROTATIONS))
            goal = rng.choice(cells)
            path = plan_shortest_path(grid, start, goal)
            assert path.move_count == bfs_distance(grid.reachable, start.cell, goal)

    def test_consecutive_cells_are_neighbors(self):
        with pytest.raises(ValueError):
            PlannedPath(((0, 0), (2, 0)), 0, 1)


class TestRotationHelpers:
    def test_single_rotations(self):
        assert rotation_actions(0, 90) == [ROTATE_RIGHT]
        assert rotation_actions(0, 270) == [ROTATE_LEFT]
        assert rotation_actions(270, 0) == [ROTATE_RIGHT]

    def test_about_face_is_two_right(self):
        assert rotation_actions(0, 180) == [ROTATE_RIGHT, ROTATE_RIGHT]
        assert rotation_actions(90, 270) == [ROTATE_RIGHT, ROTATE_RIGHT]

    def test_path_rotation(self):
        assert compute_path_rotation((2, 2), (2, 3)) == 0
        assert compute_path_rotation((2, 2), (3, 2)) == 90
        assert compute_path_rotation((2, 2), (2, 1)) == 180
        assert compute_path_rotation((2, 2), (1, 2)) == 270


class TestComputeObjectRotation:
    def make_target(self, x, y):
        return ObjectInstance(id="t", category="vase", position=(x, y), height_m=1.0)

    def test_dominant_axis(self):
        grid = open_grid(5, 5)
        # From (2,2) center (0.5, 0.5): target well to the east.
        assert compute_object_rotation(grid, (2, 2), self.make_target(1.0, 0.55), 0) == 90
        # Target well below (south).
        assert compute_object_rotation(grid, (2, 2), self.make_target(0.45, 0.0), 90) == 180

    def test_tie_prefers_current_heading(self):
        grid = open_grid(5, 5)
        target = self.make_target(0.75, 0.75)  # exact diagonal from (0.5, 0.5)
        assert compute_object_rotation(grid, (2, 2), target, 90) == 90
        assert compute_object_rotation(grid, (2, 2), target, 0) == 0

    def test_tie_falls_back_to_cardinal_order(self):
        grid = open_grid(5, 5)
        target = self.make_target(0.75, 0.75)
        # Facing away from both tied candidates: north comes first.
        assert compute_object_rotation(grid, (2, 2), target, 180) == 0

    def test_object_on_cell_center_keeps_heading(self):
        grid = open_grid(5, 5)
        assert compute_object_rotation(grid, (2, 2), self.make_target(0.5, 0.5), 270) == 270


class TestDeriveActions:
    def test_single_cell_already_facing(self):
        grid = open_grid(3, 3)
        target = ObjectInstance(id="t", category="vase", position=(0.5, 0.75), height_m=1.0)
        path = PlannedPath(((1, 1),), 0, 0)
        seq = derive_actions(grid, path, 0, target)
        assert seq.actions == (DONE,)
        assert seq.final_rotation == 0

    def test_north_then_east(self):
        grid = open_grid(4, 4)
        target = ObjectInstance(id="t", category="vase", position=(0.80, 0.5), height_m=1.0)
        path = PlannedPath(((0, 0), (0, 1), (0, 2), (1, 2), (2, 2)), 0, 5)
        seq = derive_actions(grid, path, 0, target)
        assert seq.actions[:5] == (MOVE_AHEAD, MOVE_AHEAD, ROTATE_RIGHT,
                                   MOVE_AHEAD, MOVE_AHEAD)
        assert seq.actions[-1] == DONE

    def test_first_step_south_starts_with_double_right(self):
        grid = open_grid(3, 5)
        target = ObjectInstance(id="t", category="vase", position=(0.25, 0.0), height_m=1.0)
        path = PlannedPath(((1, 3), (1, 2), (1, 1)), 0, 3)
        seq = derive_actions(grid, path, 0, target)
        assert seq.actions[:3] == (ROTATE_RIGHT, ROTATE_RIGHT, MOVE_AHEAD)

    def test_replay_oracle_on_random_grids(self):
        # Executing the derived actions must visit exactly the planned
        # cells, end facing the computed direction, and never get blocked.
        rng = random.Random(17)
        for _ in range(40):
            grid, cells = random_connected_grid(rng, max_side=14)
            start = Pose(rng.choice(cells), rng.choice(ROTATIONS))
            goal = rng.choice(cells)
            path = plan_shortest_path(grid, start, goal)
            gx, gy = grid.cell_to_world(goal)
            target = ObjectInstance(id="t", category="vase",
                                    position=(gx + 0.05, gy), height_m=1.0)
            seq = derive_actions(grid, path, start.rotation, target)
            house = make_house(grid.reachable, grid.width, grid.height, [target])
            sim = Simulation(house, start, max_steps=10_000)
            visited = [sim.pose.cell]
            for action in seq.actions:
                before = sim.pose.cell
                sim.step(action)
                if sim.pose.cell != before:
                    visited.append(sim.pose.cell)
            assert tuple(visited) == path.cells
            assert sim.pose.rotation == seq.final_rotation
            assert sim.terminated and sim.termination_cause == "DoneIssued"

    def test_done_appears_exactly_once_at_end(self):
        grid = open_grid(4, 4)
        target = ObjectInstance(id="t", category="vase", position=(0.5, 0.5), height_m=1.0)
        path = plan_shortest_path(grid, Pose((0, 0), 90), (2, 2))
        seq = derive_actions(grid, path, 90, target)
        assert seq.actions[-1] == DONE
        assert seq.actions[:-1].count(DONE) == 0
