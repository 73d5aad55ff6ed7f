"""Episode sampling: start pose + target selection, planning, and replay.

Sampling follows a three-step recipe per episode: draw an initial pose
uniformly over reachable cells and rotations, draw a target uniformly over
observable-height objects whose category has not been used earlier in the
same house, then plan to the grid point nearest the target and derive the
action sequence. Episodes are only emitted when replaying the derived
actions through the simulator actually succeeds; everything else is
skipped with a recorded reason and retried within a bounded budget.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field

from .planner import (
    ActionSequence,
    NoPathFound,
    PlannedPath,
    derive_actions,
    nearest_grid_point,
    plan_shortest_path,
)
from .scene import CELL_SIZE_M, ROTATIONS, Cell, House, Pose
from .simulator import MAX_STEPS, Simulation, observable_height

NO_ELIGIBLE_TARGET = "NoEligibleTarget"
NO_REACHABLE_TARGET = "NoReachableTarget"

RETRY_BUDGET = 20


@dataclass(frozen=True)
class StepStatus:
    """Agent state right before one demonstrated action, plus what it saw."""

    cell: Cell
    rotation: int
    action: str
    obstacle_ahead: bool
    target_visible: bool
    ego_window: tuple[str, ...]
    visible: tuple[tuple[str, str, float, str], ...]  # (id, category, distance_m, bearing)


@dataclass(frozen=True)
class Episode:
    id: str
    house_id: str
    initial_pose: Pose
    target_category: str
    target_object_id: str
    recommended_cell: Cell
    recommended_rotation: int
    path: PlannedPath
    actions: ActionSequence
    observations: tuple[StepStatus, ...]

    @property
    def shortest_path_m(self) -> float:
        return self.actions.move_count * CELL_SIZE_M

    @property
    def action_count(self) -> int:
        return len(self.actions.actions)


@dataclass(frozen=True)
class SampleFailure:
    slot: int
    reason: str  # NO_ELIGIBLE_TARGET | NO_REACHABLE_TARGET
    detail: str


@dataclass
class SampleResult:
    episodes: list[Episode]
    failures: list[SampleFailure] = field(default_factory=list)


def replay_statuses(house: House, episode_start: Pose, actions: ActionSequence,
                    target_id: str, max_steps: int = MAX_STEPS):
    """Execute actions in the simulator, recording the pre-action state of
    every step. Returns (statuses, success)."""
    target = house.objects_by_id[target_id]
    sim = Simulation(house, episode_start, max_steps=max_steps)
    statuses = []
    for action in actions.actions:
        if sim.terminated:
            return statuses, False
        obs = sim.observe()
        statuses.append(StepStatus(
            cell=sim.pose.cell,
            rotation=sim.pose.rotation,
            action=action,
            obstacle_ahead=obs.obstacle_ahead,
            target_visible=any(v.id == target_id for v in obs.visible_objects),
            ego_window=obs.ego_window,
            visible=tuple((v.id, v.category, round(v.distance_m, 4), v.bearing)
                          for v in obs.visible_objects),
        ))
        sim.step(action)
    return statuses, sim.terminated and sim.is_success(target)


def sample_episodes(house: House, n: int, seed: int, *,
                    max_steps: int = MAX_STEPS,
                    retry_budget: int = RETRY_BUDGET) -> SampleResult:
    """Sample up to ``n`` episodes with pairwise-distinct target categories."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = random.Random(seed)
    cells = sorted(house.grid.reachable)
    candidates = sorted((o for o in house.objects if observable_height(o)),
                        key=lambda o: o.id)
    used_categories: set[str] = set()
    result = SampleResult(episodes=[])
    for slot in range(n):
        eligible = [o for o in candidates if o.category not in used_categories]
        if not eligible:
            result.failures.append(SampleFailure(
                slot, NO_ELIGIBLE_TARGET,
                "every observable-height category already targeted"))
            continue
        tried: set[str] = set()
        made = None
        for _ in range(retry_budget):
            pool = [o for o in eligible if o.id not in tried]
            if not pool:
                break
            start = Pose(rng.choice(cells), rng.choice(ROTATIONS))
            target = rng.choice(pool)
            goal = nearest_grid_point(house.grid, target.position)
            try:
                path = plan_shortest_path(house.grid, start, goal)
            except NoPathFound:
                tried.add(target.id)
                continue
            actions = derive_actions(house.grid, path, start.rotation, target)
            if len(actions.actions) > max_steps:
                tried.add(target.id)
                continue
            statuses, success = replay_statuses(house, start, actions, target.id,
                                                max_steps=max_steps)
            if not success:
                tried.add(target.id)
                continue
            made = Episode(
                id=f"{house.id}-{len(result.episodes):03d}",
                house_id=house.id,
                initial_pose=start,
                target_category=target.category,
                target_object_id=target.id,
                recommended_cell=goal,
                recommended_rotation=actions.final_rotation,
                path=path,
                actions=actions,
                observations=tuple(statuses),
            )
            break
        if made is None:
            result.failures.append(SampleFailure(
                slot, NO_REACHABLE_TARGET,
                f"no workable target in {retry_budget} retries ({len(tried)} ruled out)"))
        else:
            used_categories.add(made.target_category)
            result.episodes.append(made)
    return result


def split_houses(house_ids: list[str], fractions: dict[str, float],
                 seed: int) -> dict[str, str]:
    """Seeded house-level partition; fractions must sum to 1."""
    if abs(sum(fractions.values()) - 1.0) > 1e-9:
        raise ValueError("fractions must sum to 1")
    ids = sorted(house_ids)
    random.Random(seed).shuffle(ids)
    out: dict[str, str] = {}
    start = 0
    names = list(fractions)
    for i, name in enumerate(names):
        count = round(fractions[name] * len(ids)) if i < len(names) - 1 else len(ids) - start
        for hid in ids[start:start + count]:
            out[hid] = name
        start += count
    return out


@dataclass(frozen=True)
class StatsReport:
    houses: int
    scene_types: int
    rooms_per_house: float
    room_area_m2: float
    object_types_per_house: float
    objects_per_house: float
    object_types: int
    episodes: int
    target_categories: int

    def to_dict(self) -> dict:
        return {
            "houses": self.houses,
            "scene_types": self.scene_types,
            "rooms_per_house": self.rooms_per_house,
            "room_area_m2": self.room_area_m2,
            "object_types_per_house": self.object_types_per_house,
            "objects_per_house": self.objects_per_house,
            "object_types": self.object_types,
            "episodes": self.episodes,
            "target_categories": self.target_categories,
        }


def corpus_stats(houses: list[House], episodes: list[Episode]) -> StatsReport:
    """Corpus-level dataset statistics (scene/object diversity plus episode
    aggregates)."""
    if not houses:
        return StatsReport(0, 0, 0.0, 0.0, 0.0, 0.0, 0,
                           len(episodes), len({e.target_category for e in episodes}))
    all_rooms = [room for h in houses for room in h.rooms]
    categories = [{o.category for o in h.objects} for h in houses]
    return StatsReport(
        houses=len(houses),
        scene_types=len({h.scene_type for h in houses}),
        rooms_per_house=len(all_rooms) / len(houses),
        room_area_m2=(sum(r.area_m2 for r in all_rooms) / len(all_rooms)
                      if all_rooms else 0.0),
        object_types_per_house=sum(len(c) for c in categories) / len(houses),
        objects_per_house=sum(len(h.objects) for h in houses) / len(houses),
        object_types=len(set().union(*categories)) if categories else 0,
        episodes=len(episodes),
        target_categories=len({e.target_category for e in episodes}),
    )


def episode_to_dict(episode: Episode) -> dict:
    return {
        "id": episode.id,
        "house_id": episode.house_id,
        "initial_pose": {"cell": list(episode.initial_pose.cell),
                         "rotation": episode.initial_pose.rotation},
        "target_category": episode.target_category,
        "target_object_id": episode.target_object_id,
        "recommended_cell": list(episode.recommended_cell),
        "recommended_rotation": episode.recommended_rotation,
        "path": {"cells": [list(c) for c in episode.path.cells],
                 "start_rotation": episode.path.start_rotation,
                 "cost": episode.path.cost},
        "actions": {"actions": list(episode.actions.actions),
                    "final_rotation": episode.actions.final_rotation},
        "observations": [
            {"cell": list(s.cell), "rotation": s.rotation, "action": s.action,
             "obstacle_ahead": s.obstacle_ahead, "target_visible": s.target_visible,
             "ego": list(s.ego_window),
             "visible": [list(v) for v in s.visible]}
            for s in episode.observations
        ],
    }


def episode_from_dict(data: dict) -> Episode:
    return Episode(
        id=data["id"],
        house_id=data["house_id"],
        initial_pose=Pose(tuple(data["initial_pose"]["cell"]),
                          data["initial_pose"]["rotation"]),
        target_category=data["target_category"],
        target_object_id=data["target_object_id"],
        recommended_cell=tuple(data["recommended_cell"]),
        recommended_rotation=data["recommended_rotation"],
        path=PlannedPath(tuple(tuple(c) for c in data["path"]["cells"]),
                         data["path"]["start_rotation"], data["path"]["cost"]),
        actions=ActionSequence(tuple(data["actions"]["actions"]),
                               data["actions"]["final_rotation"]),
        observations=tuple(
            StepStatus(cell=tuple(s["cell"]), rotation=s["rotation"], action=s["action"],
                       obstacle_ahead=s["obstacle_ahead"],
                       target_visible=s["target_visible"],
                       ego_window=tuple(s["ego"]),
                       visible=tuple((v[0], v[1], v[2], v[3]) for v in s["visible"]))
            for s in data["observations"]
        ),
    )


def write_episodes(path, episodes: list[Episode]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for episode in episodes:
            fh.write(json.dumps(episode_to_dict(episode), separators=(",", ":")))
            fh.write("\n")


def read_episodes(path) -> list[Episode]:
    episodes = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                episodes.append(episode_from_dict(json.loads(line)))
    return episodes
