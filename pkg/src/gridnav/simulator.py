"""Deterministic episode state machine with symbolic egocentric observations.

The agent walks the reachable grid one 0.25 m step at a time. Instead of a
rendered camera frame, each observation carries the symbolic equivalents a
downstream consumer needs: the list of currently visible objects, an
obstacle-ahead flag, and a small agent-centric occupancy window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .actions import DONE, MOVE_AHEAD, ROTATE_LEFT, ROTATE_RIGHT, is_action
from .scene import HEADINGS, Cell, House, ObjectInstance, Pose, rotate_left, rotate_right

MAX_STEPS = 200
SUCCESS_DISTANCE_M = 1.5
VISIBILITY_RANGE_M = 5.0
OBSERVABLE_HEIGHT_RANGE = (0.3, 2.0)
EGO_HALF_WIDTH = 5

DONE_ISSUED = "DoneIssued"
STEP_LIMIT = "StepLimit"

_TAN_22_5 = math.tan(math.radians(22.5))


class StepAfterTermination(Exception):
    """step() was called on a terminated episode."""


class SuccessBeforeTermination(Exception):
    """is_success() was queried before the episode terminated."""


@dataclass(frozen=True)
class VisibleObject:
    id: str
    category: str
    distance_m: float
    bearing: str  # "ahead" | "left" | "right"


@dataclass(frozen=True)
class Observation:
    agent_position: tuple[float, float]  # meters
    agent_rotation: int
    visible_objects: tuple[VisibleObject, ...]
    obstacle_ahead: bool
    ego_window: tuple[str, ...]  # rows, farthest-ahead first, agent at center


@dataclass(frozen=True)
class SimState:
    agent: Pose
    steps_taken: int
    terminated: bool
    termination_cause: str | None


def observable_height(obj: ObjectInstance) -> bool:
    lo, hi = OBSERVABLE_HEIGHT_RANGE
    return lo <= obj.height_m <= hi


def _line_cells(a: Cell, b: Cell):
    """Integer line walk from a to b (Bresenham), endpoints excluded."""
    x0, y0 = a
    x1, y1 = b
    dx = abs(x1 - x0)
    dy = abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx - dy
    x, y = x0, y0
    while True:
        if (x, y) != a and (x, y) != b:
            yield (x, y)
        if (x, y) == (x1, y1):
            return
        e2 = 2 * err
        if e2 > -dy:
            err -= dy
            x += sx
        if e2 < dx:
            err += dx
            y += sy


class Simulation:
    """Single-episode simulator over an immutable house."""

    def __init__(self, house: House, start: Pose, max_steps: int = MAX_STEPS,
                 visibility_range: float = VISIBILITY_RANGE_M,
                 ego_half_width: int = EGO_HALF_WIDTH):
        if start.cell not in house.grid.reachable:
            raise ValueError(f"start cell {start.cell} not reachable in house {house.id}")
        self.house = house
        self.pose = start
        self.max_steps = max_steps
        self.visibility_range = visibility_range
        self.ego_half_width = ego_half_width
        self.steps_taken = 0
        self.terminated = False
        self.termination_cause: str | None = None
        self.cells_moved = 0

    @property
    def state(self) -> SimState:
        return SimState(self.pose, self.steps_taken, self.terminated, self.termination_cause)

    def agent_position(self) -> tuple[float, float]:
        return self.house.grid.cell_to_world(self.pose.cell)

    def cell_ahead(self) -> Cell:
        dc, dr = HEADINGS[self.pose.rotation]
        return (self.pose.cell[0] + dc, self.pose.cell[1] + dr)

    def obstacle_ahead(self) -> bool:
        return self.cell_ahead() not in self.house.grid.reachable

    def step(self, action: str) -> Observation:
        """Apply one action; blocked moves keep the pose but consume a step."""
        if self.terminated:
            raise StepAfterTermination(f"episode already ended ({self.termination_cause})")
        if not is_action(action):
            raise ValueError(f"unknown action {action!r}")
        self.steps_taken += 1
        if action == MOVE_AHEAD:
            ahead = self.cell_ahead()
            if ahead in self.house.grid.reachable:
                self.pose = Pose(ahead, self.pose.rotation)
                self.cells_moved += 1
        elif action == ROTATE_RIGHT:
            self.pose = Pose(self.pose.cell, rotate_right(self.pose.rotation))
        elif action == ROTATE_LEFT:
            self.pose = Pose(self.pose.cell, rotate_left(self.pose.rotation))
        if action == DONE:
            self.terminated = True
            self.termination_cause = DONE_ISSUED
        elif self.steps_taken >= self.max_steps:
            self.terminated = True
            self.termination_cause = STEP_LIMIT
        return self.observe()

    def visible(self, obj: ObjectInstance) -> bool:
        """Visibility predicate: range, 90-degree frustum, clear line of
        sight over grid cells, and observable height.

        An object inside the agent's own cell is always in view.
        """
        if not observable_height(obj):
            return False
        ax, ay = self.agent_position()
        dx = obj.position[0] - ax
        dy = obj.position[1] - ay
        if dx * dx + dy * dy > self.visibility_range ** 2:
            return False
        obj_cell = self.house.grid.containing_cell(obj.position)
        if obj_cell == self.pose.cell:
            return True
        fx, fy = HEADINGS[self.pose.rotation]
        along = fx * dx + fy * dy
        # Within +/-45 degrees of the heading iff along >= |cross| (exact on
        # squared terms, so boundary objects on the diagonal count as visible).
        if along < 0 or 2 * along * along < dx * dx + dy * dy:
            return False
        opaque = self.house.opaque_cells
        if opaque:
            for cell in _line_cells(self.pose.cell, obj_cell):
                ids = opaque.get(cell)
                if ids and any(i != obj.id for i in ids):
                    return False
        return True

    def _bearing(self, dx: float, dy: float) -> str:
        fx, fy = HEADINGS[self.pose.rotation]
        along = fx * dx + fy * dy
        cross = fx * dy - fy * dx  # positive = left of heading
        if abs(cross) <= along * _TAN_22_5:
            return "ahead"
        return "left" if cross > 0 else "right"

    def ego_window(self) -> tuple[str, ...]:
        """Occupancy window around the agent, rotated so ahead is up.

        '.' reachable, '#' blocked or out of bounds, 'A' the agent.
        """
        w = self.ego_half_width
        deg = self.pose.rotation
        col0, row0 = self.pose.cell
        rows = []
        for fwd in range(w, -w - 1, -1):
            chars = []
            for lat in range(-w, w + 1):
                if deg == 0:
                    cell = (col0 + lat, row0 + fwd)
                elif deg == 90:
                    cell = (col0 + fwd, row0 - lat)
                elif deg == 180:
                    cell = (col0 - lat, row0 - fwd)
                else:
                    cell = (col0 - fwd, row0 + lat)
                if fwd == 0 and lat == 0:
                    chars.append("A")
                else:
                    chars.append("." if cell in self.house.grid.reachable else "#")
            rows.append("".join(chars))
        return tuple(rows)

    def observe(self) -> Observation:
        ax, ay = self.agent_position()
        seen = []
        for obj in self.house.objects:
            if self.visible(obj):
                dx = obj.position[0] - ax
                dy = obj.position[1] - ay
                dist = math.sqrt(dx * dx + dy * dy)
                obj_cell = self.house.grid.containing_cell(obj.position)
                bearing = "ahead" if obj_cell == self.pose.cell else self._bearing(dx, dy)
                seen.append(VisibleObject(obj.id, obj.category, dist, bearing))
        return Observation(
            agent_position=(ax, ay),
            agent_rotation=self.pose.rotation,
            visible_objects=tuple(seen),
            obstacle_ahead=self.obstacle_ahead(),
            ego_window=self.ego_window(),
        )

    def is_success(self, target: ObjectInstance, require_visible: bool = True) -> bool:
        """Success once terminated: strictly within 1.5 m of the target and,
        unless relaxed, with the target in view."""
        if not self.terminated:
            raise SuccessBeforeTermination("episode still running")
        ax, ay = self.agent_position()
        dx = target.position[0] - ax
        dy = target.position[1] - ay
        if not dx * dx + dy * dy < SUCCESS_DISTANCE_M ** 2:
            return False
        return self.visible(target) if require_visible else True
