"""Shortest-path search on the reachable grid and action-sequence derivation.

Paths are found by uniform-cost search over (cell, arrival-direction)
states with the lexicographic objective (moves, rotation actions, turned
moves): fewest MoveAheads first, and among those the fewest rotations the
agent will actually execute (an about-face counts as two). Ties resolve
FIFO in insertion order and neighbors expand in the fixed order north,
east, south, west, so planning is fully deterministic.

Each planned path also reports its cost under the simpler step model that
charges 1 for a step keeping the direction of arrival and 2 for a step
changing it; the search keeps that sum at its minimum over all paths with
the minimal move count.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

from .actions import DONE, MOVE_AHEAD, ROTATE_LEFT, ROTATE_RIGHT
from .scene import HEADINGS, ROTATIONS, Cell, GridMap, ObjectInstance, Pose


OPPOSITE = {0: 180, 90: 270, 180: 0, 270: 90}


class NoPathFound(Exception):
    """Goal cell is not reachable from the start."""


@dataclass(frozen=True)
class PlannedPath:
    cells: tuple[Cell, ...]
    start_rotation: int
    cost: int  # path cost under the 1/2 step model

    def __post_init__(self):
        for a, b in zip(self.cells, self.cells[1:]):
            if abs(a[0] - b[0]) + abs(a[1] - b[1]) != 1:
                raise ValueError(f"cells {a} -> {b} are not 4-neighbors")

    @property
    def move_count(self) -> int:
        return len(self.cells) - 1


@dataclass(frozen=True)
class ActionSequence:
    actions: tuple[str, ...]
    final_rotation: int

    def __post_init__(self):
        if not self.actions or self.actions[-1] != DONE or DONE in self.actions[:-1]:
            raise ValueError("sequence must end with exactly one Done")

    @property
    def move_count(self) -> int:
        return sum(1 for a in self.actions if a == MOVE_AHEAD)

    def __len__(self) -> int:
        return len(self.actions)


def nearest_grid_point(grid: GridMap, object_pos: tuple[float, float]) -> Cell:
    """Reachable cell whose center is closest to the object.

    Distance ties break toward the smaller (row, col) pair.
    """
    if not grid.reachable:
        raise ValueError("grid has no reachable cells")
    ox, oy = object_pos

    def key(cell: Cell):
        cx, cy = grid.cell_to_world(cell)
        return ((cx - ox) ** 2 + (cy - oy) ** 2, cell[1], cell[0])

    return min(grid.reachable, key=key)


def plan_shortest_path(grid: GridMap, start: Pose, goal_cell: Cell) -> PlannedPath:
    """Move-minimal, rotation-minimal path from the start pose to the goal.

    Raises :class:`NoPathFound` when the goal is in another component.
    """
    if start.cell not in grid.reachable:
        raise ValueError(f"start cell {start.cell} not reachable")
    if goal_cell not in grid.reachable:
        raise ValueError(f"goal cell {goal_cell} not reachable")
    if start.cell == goal_cell:
        return PlannedPath((start.cell,), start.rotation, 0)

    Cost = tuple[int, int, int]  # (moves, rotation actions, turned moves)
    start_state = (start.cell, start.rotation)
    best: dict[tuple[Cell, int], Cost] = {start_state: (0, 0, 0)}
    parent: dict[tuple[Cell, int], tuple[Cell, int]] = {}
    counter = 0
    heap: list[tuple[Cost, int, Cell, int]] = [((0, 0, 0), counter, start.cell, start.rotation)]
    while heap:
        cost, _, cell, direction = heapq.heappop(heap)
        if cost > best.get((cell, direction), cost):
            continue  # stale entry superseded by a cheaper one
        if cell == goal_cell:
            path = [cell]
            state = (cell, direction)
            while state in parent:
                state = parent[state]
                path.append(state[0])
            path.reverse()
            moves, _, turned = cost
            return PlannedPath(tuple(path), start.rotation, moves + turned)
        moves, rot_actions, turned = cost
        for ndir in ROTATIONS:  # north, east, south, west
            dc, dr = HEADINGS[ndir]
            ncell = (cell[0] + dc, cell[1] + dr)
            if ncell not in grid.reachable:
                continue
            if ndir == direction:
                ncost = (moves + 1, rot_actions, turned)
            elif ndir == OPPOSITE[direction]:
                ncost = (moves + 1, rot_actions + 2, turned + 1)
            else:
                ncost = (moves + 1, rot_actions + 1, turned + 1)
            key = (ncell, ndir)
            if key not in best or ncost < best[key]:
                best[key] = ncost
                parent[key] = (cell, direction)
                counter += 1
                heapq.heappush(heap, (ncost, counter, ncell, ndir))
    raise NoPathFound(f"no path from {start.cell} to {goal_cell}")


def rotation_actions(current: int, target: int) -> list[str]:
    """Rotations that take the heading from ``current`` to ``target``.

    90-degree differences use the single matching-side rotation; a
    180-degree about-face is two RotateRight, keeping traces deterministic.
    """
    diff = (target - current) % 360
    if diff == 0:
        return []
    if diff == 90:
        return [ROTATE_RIGHT]
    if diff == 270:
        return [ROTATE_LEFT]
    return [ROTATE_RIGHT, ROTATE_RIGHT]


def compute_path_rotation(prior: Cell, current: Cell) -> int:
    """Heading of the move from ``prior`` to ``current``."""
    delta = (current[0] - prior[0], current[1] - prior[1])
    for deg, step in HEADINGS.items():
        if step == delta:
            return deg
    raise ValueError(f"cells {prior} -> {current} are not 4-neighbors")


def compute_object_rotation(grid: GridMap, cell: Cell,
                            target: ObjectInstance, current_rotation: int) -> int:
    """Cardinal direction that best faces the target from a cell.

    Picks the rotation whose axis-aligned displacement toward the target is
    largest; ties prefer the current heading, then north < east < south < west.
    """
    cx, cy = grid.cell_to_world(cell)
    dx = target.position[0] - cx
    dy = target.position[1] - cy
    scores = {0: dy, 90: dx, 180: -dy, 270: -dx}
    top = max(scores.values())
    candidates = [deg for deg in ROTATIONS if scores[deg] == top]
    if current_rotation in candidates:
        return current_rotation
    return candidates[0]


def derive_actions(grid: GridMap, path: PlannedPath, start_rotation: int,
                   target: ObjectInstance) -> ActionSequence:
    """Action sequence that walks the path and ends facing the target.

    Between adjacent cells a MoveAhead is emitted, preceded by rotations
    whenever the heading changes; after the last cell the agent turns
    toward the target and the sequence closes with Done.
    """
    rotation = start_rotation
    actions: list[str] = []
    prior = path.cells[0]
    for current in path.cells[1:]:
        path_rotation = compute_path_rotation(prior, current)
        if path_rotation != rotation:
            actions.extend(rotation_actions(rotation, path_rotation))
            rotation = path_rotation
        actions.append(MOVE_AHEAD)
        prior = current
    object_rotation = compute_object_rotation(grid, path.cells[-1], target, rotation)
    if object_rotation != rotation:
        actions.extend(rotation_actions(rotation, object_rotation))
        rotation = object_rotation
    actions.append(DONE)
    return ActionSequence(tuple(actions), final_rotation=rotation)


def plan_demonstration(grid: GridMap, start: Pose,
                       target: ObjectInstance) -> tuple[PlannedPath, ActionSequence, Cell]:
    """Plan to the grid point nearest the target and derive its actions."""
    goal = nearest_grid_point(grid, target.position)
    path = plan_shortest_path(grid, start, goal)
    actions = derive_actions(grid, path, start.rotation, target)
    return path, actions, goal
