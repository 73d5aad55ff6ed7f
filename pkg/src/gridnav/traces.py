"""Instruction/response compilation for imitation-learning traces.

Each demonstrated step becomes an instruction (task intro, episode facts,
recent history, prediction request) and a three-part reasoning response
whose final line is the action to take. Rotations are explained by one of
three scenario templates: no forward progress left in the current heading,
an obstructed route ahead, or a final view adjustment at the recommended
cell. Postprocessing rebalances the corpus by downsampling MoveAhead steps
and removes groups of steps that share identical input state but disagree
on the action.
"""

from __future__ import annotations

import hashlib
import json
import random
from collections import Counter
from dataclasses import dataclass

from .actions import ACTIONS, DONE, MOVE_AHEAD, ROTATE_LEFT, ROTATE_RIGHT
from .episodes import Episode, StepStatus
from .scene import CARDINAL_NAMES, CELL_SIZE_M, HEADINGS, Cell, House

HISTORY_STEPS = 8   # M: recent (position, rotation, action) entries
HISTORY_VIEWS = 4   # K: recent observation blocks

MOVE_SCENARIO = "MoveScenario"
DONE_SCENARIO = "DoneScenario"
ROTATE_ZERO_DIFF = "RotateZeroDiff"
ROTATE_OBSTACLE = "RotateObstacle"
ROTATE_VIEW_ADJUST = "RotateViewAdjust"

TASK_INTRO = (
    "You are an agent placed in a 3D environment. Your step length is 0.25 "
    "meters, and your rotation degree is 90.\n"
    "The possible actions are:\n"
    "1. MoveAhead: Moves the agent forward by 0.25 meters in the direction it "
    "is currently facing. For example, if the agent is at (x, y) facing 0 "
    "degrees (north), MoveAhead will result in (x, y + 0.25). If the agent is "
    "facing 90 degrees (east), MoveAhead will result in (x + 0.25, y). If the "
    "agent is facing 180 degrees (south), MoveAhead will result in (x, y - "
    "0.25). If the agent is facing 270 degrees (west), MoveAhead will result "
    "in (x - 0.25, y).\n"
    "2. RotateRight: Rotate right for 90 degrees (clockwise).\n"
    "3. RotateLeft: Rotate left for 90 degrees. (counterclockwise).\n"
    "4. Done: Indicate that you are near to the target object and finish the task."
)

EPISODE_TEMPLATE = (
    "You need to find a {obj_type} at the position {obj_pos}. To achieve "
    "this, we recommend you move to the position {grid_obj_pos} with a "
    "rotation of {grid_obj_rotation}.\n"
    "Currently, you are at {agent_pos} with a rotation of {agent_rotation}."
)

GOLD_LABEL_SENTENCE = " The difference to the target object is {position_diff}."

HISTORY_HEADER = "The history of recent states are:"
HISTORY_ROW = "Position: {pos}, Rotation: {rot}, Action: {act}"
HISTORY_ROW_WITH_VIEW = "Position: {pos}, Rotation: {rot}, Current View: {view}, Action: {act}"

PREDICTION_REQUEST = (
    "Please generate the next step given the above states with the following "
    "steps: 1) Consider your rotation and position. 2) Check the images to "
    "see obstacles or the target object. 3) Decide the action."
)

MOVE_TEMPLATE = (
    "1) In the direction of my rotation, {agent_rotation} degrees "
    "({cardinal_direction}), the difference to the target object is "
    "{position_diff}m. I need to move further {cardinal_direction}.\n"
    "2) There is no obstacle in front of me in recent images.\n"
    "3) MoveAhead"
)

DONE_TEMPLATE = (
    "1) My position and rotation are equal to the recommended one.\n"
    "2) I can see the target {obj_type} in the image of the current state.\n"
    "3) Done"
)

ROTATE_ZERO_DIFF_TEMPLATE = (
    "1) In the direction of my rotation, {agent_rotation} degrees "
    "({cardinal_direction}), the difference to the recommended position is "
    "0.00m. Thus, I need to move in another direction, where the difference "
    "is {other_position_diff}m, and the rotation is {other_agent_rotation} "
    "degrees.\n"
    "2) Obstacles don't affect rotation.\n"
    "3) {action}"
)

ROTATE_OBSTACLE_TEMPLATE = (
    "1) In the direction of my rotation, {agent_rotation} degrees "
    "({cardinal_direction}), the difference compared to the target object is "
    "{position_diff}m.\n"
    "2) There are obstacles in front of me, as shown in current images. I "
    "need to rotate in another direction. In the other direction, the "
    "difference is {other_position_diff}m, and the rotation is "
    "{other_agent_rotation} degrees.\n"
    "3) {action}"
)

ROTATE_VIEW_ADJUST_TEMPLATE = (
    "1) My position is the same as the recommended one: {grid_obj_pos}. "
    "However, my rotation is {agent_rotation} degrees, facing "
    "{cardinal_direction}. I need to adjust the rotation to center the "
    "target within its field of view.\n"
    "2) Obstacles don't affect rotation.\n"
    "3) {action}"
)

RESPONSE_TEMPLATES = {
    MOVE_SCENARIO: MOVE_TEMPLATE,
    DONE_SCENARIO: DONE_TEMPLATE,
    ROTATE_ZERO_DIFF: ROTATE_ZERO_DIFF_TEMPLATE,
    ROTATE_OBSTACLE: ROTATE_OBSTACLE_TEMPLATE,
    ROTATE_VIEW_ADJUST: ROTATE_VIEW_ADJUST_TEMPLATE,
}


class UnclassifiableRotation(Exception):
    """A demonstrated rotation fits none of the three scenario templates."""


@dataclass(frozen=True)
class TraceStep:
    episode_id: str
    step_index: int
    instruction: str
    response: str
    action_label: str
    state_key: str
    scenario: str


@dataclass
class TraceCorpus:
    steps: list[TraceStep]

    @property
    def action_histogram(self) -> Counter:
        return Counter(step.action_label for step in self.steps)


def format_position(position: tuple[float, float]) -> str:
    return f"({position[0]:.2f}, {position[1]:.2f})"


def serialize_view_parts(ego_window: tuple[str, ...],
                         visible: tuple[tuple[str, str, float, str], ...],
                         obstacle_ahead: bool) -> str:
    """Single-line symbolic stand-in for an egocentric camera frame."""
    objects = ", ".join(f"{cat} {dist:.2f}m {bearing}"
                        for _, cat, dist, bearing in visible) or "none"
    grid = "|".join(ego_window)
    obstacle = "yes" if obstacle_ahead else "no"
    return f"<grid {grid} | objects: {objects} | obstacle ahead: {obstacle}>"


def serialize_view(status: StepStatus) -> str:
    return serialize_view_parts(status.ego_window, status.visible, status.obstacle_ahead)


def _along_quarters(cell: Cell, rotation: int, goal: Cell) -> int:
    """Signed displacement (in grid steps) to the goal along the heading."""
    fx, fy = HEADINGS[rotation]
    return fx * (goal[0] - cell[0]) + fy * (goal[1] - cell[1])


def _diff_m(quarters: int) -> str:
    return f"{abs(quarters) * CELL_SIZE_M:.2f}"


def classify_rotation_scenario(grid_reachable: frozenset[Cell], status: StepStatus,
                               recommended_cell: Cell) -> str:
    """Assign a demonstrated rotation to one of the three scenarios.

    View adjustment fires at the recommended cell; the no-forward-progress
    scenario fires when the displacement to the recommended cell along the
    current heading is zero or negative; the obstacle scenario fires when
    the direct corridor (straight until aligned, then across) is blocked.
    """
    if status.action not in (ROTATE_LEFT, ROTATE_RIGHT):
        raise ValueError(f"not a rotation: {status.action}")
    cell = status.cell
    if cell == recommended_cell:
        return ROTATE_VIEW_ADJUST
    along = _along_quarters(cell, status.rotation, recommended_cell)
    if along <= 0:
        return ROTATE_ZERO_DIFF
    fx, fy = HEADINGS[status.rotation]
    cur = cell
    corridor = []
    for _ in range(along):
        cur = (cur[0] + fx, cur[1] + fy)
        corridor.append(cur)
    cross_x = recommended_cell[0] - cur[0]
    cross_y = recommended_cell[1] - cur[1]
    step_x = (1 if cross_x > 0 else -1) if cross_x else 0
    step_y = (1 if cross_y > 0 else -1) if cross_y else 0
    for _ in range(abs(cross_x) + abs(cross_y)):
        cur = (cur[0] + step_x, cur[1] + step_y)
        corridor.append(cur)
    if any(c not in grid_reachable for c in corridor):
        return ROTATE_OBSTACLE
    raise UnclassifiableRotation(
        f"rotation at {cell} rot {status.rotation} toward {recommended_cell} "
        "matches no scenario")


def compile_instruction(house: House, episode: Episode, step_index: int, *,
                        history_steps: int = HISTORY_STEPS,
                        history_views: int = HISTORY_VIEWS,
                        gold_label: bool = False) -> str:
    """Four-part instruction text for one step of an episode."""
    if not 0 <= step_index < len(episode.observations):
        raise IndexError(f"step {step_index} outside episode {episode.id}")
    grid = house.grid
    target = house.objects_by_id[episode.target_object_id]
    status = episode.observations[step_index]

    episode_part = EPISODE_TEMPLATE.format(
        obj_type=episode.target_category,
        obj_pos=format_position(target.position),
        grid_obj_pos=format_position(grid.cell_to_world(episode.recommended_cell)),
        grid_obj_rotation=episode.recommended_rotation,
        agent_pos=format_position(grid.cell_to_world(status.cell)),
        agent_rotation=status.rotation,
    )
    if gold_label:
        gx, gy = grid.cell_to_world(episode.recommended_cell)
        ax, ay = grid.cell_to_world(status.cell)
        episode_part += GOLD_LABEL_SENTENCE.format(
            position_diff=format_position((gx - ax, gy - ay)))

    rows = [HISTORY_HEADER]
    for offset in range(history_steps, 0, -1):
        k = step_index - offset
        with_view = offset <= history_views
        if k < 0:
            pos = rot = act = view = "none"
        else:
            past = episode.observations[k]
            pos = format_position(grid.cell_to_world(past.cell))
            rot = str(past.rotation)
            act = past.action
            view = serialize_view(past)
        if with_view:
            rows.append(HISTORY_ROW_WITH_VIEW.format(pos=pos, rot=rot, view=view, act=act))
        else:
            rows.append(HISTORY_ROW.format(pos=pos, rot=rot, act=act))
    history_part = "\n".join(rows)

    return "\n\n".join([TASK_INTRO, episode_part, history_part, PREDICTION_REQUEST])


def _next_move_rotation(episode: Episode, step_index: int) -> int | None:
    for status in episode.observations[step_index + 1:]:
        if status.action == MOVE_AHEAD:
            return status.rotation
    return None


def _position_diff_text(house: House, episode: Episode, status: StepStatus,
                        quarters: int, diff_eq: bool) -> str:
    if not diff_eq:
        return _diff_m(quarters)
    grid_obj_pos = format_position(house.grid.cell_to_world(episode.recommended_cell))
    agent_pos = format_position(house.grid.cell_to_world(status.cell))
    return f"{grid_obj_pos} - {agent_pos} = {_diff_m(quarters)}"


def compile_response(house: House, episode: Episode, step_index: int, *,
                     diff_eq: bool = False) -> tuple[str, str]:
    """Reasoning text plus scenario tag for one demonstrated step."""
    if not 0 <= step_index < len(episode.observations):
        raise IndexError(f"step {step_index} outside episode {episode.id}")
    status = episode.observations[step_index]
    action = status.action
    grid = house.grid
    goal = episode.recommended_cell

    if action == MOVE_AHEAD:
        along = _along_quarters(status.cell, status.rotation, goal)
        text = MOVE_TEMPLATE.format(
            agent_rotation=status.rotation,
            cardinal_direction=CARDINAL_NAMES[status.rotation],
            position_diff=_position_diff_text(house, episode, status, along, diff_eq),
        )
        return text, MOVE_SCENARIO

    if action == DONE:
        text = DONE_TEMPLATE.format(obj_type=episode.target_category)
        return text, DONE_SCENARIO

    scenario = classify_rotation_scenario(grid.reachable, status, goal)
    if scenario == ROTATE_VIEW_ADJUST:
        text = ROTATE_VIEW_ADJUST_TEMPLATE.format(
            grid_obj_pos=format_position(grid.cell_to_world(goal)),
            agent_rotation=status.rotation,
            cardinal_direction=CARDINAL_NAMES[status.rotation],
            action=action,
        )
        return text, scenario

    other_rotation = _next_move_rotation(episode, step_index)
    if other_rotation is None:
        raise UnclassifiableRotation(
            f"no subsequent move after rotation at step {step_index} "
            f"of {episode.id}")
    other_quarters = _along_quarters(status.cell, other_rotation, goal)
    if scenario == ROTATE_ZERO_DIFF:
        text = ROTATE_ZERO_DIFF_TEMPLATE.format(
            agent_rotation=status.rotation,
            cardinal_direction=CARDINAL_NAMES[status.rotation],
            other_position_diff=_diff_m(other_quarters),
            other_agent_rotation=other_rotation,
            action=action,
        )
        return text, scenario

    along = _along_quarters(status.cell, status.rotation, goal)
    text = ROTATE_OBSTACLE_TEMPLATE.format(
        agent_rotation=status.rotation,
        cardinal_direction=CARDINAL_NAMES[status.rotation],
        position_diff=_position_diff_text(house, episode, status, along, diff_eq),
        other_position_diff=_diff_m(other_quarters),
        other_agent_rotation=other_rotation,
        action=action,
    )
    return text, scenario


def state_key(episode: Episode, step_index: int, *,
              history_steps: int = HISTORY_STEPS) -> str:
    """Digest of the input state a step presents to the learner.

    Steps that hash equal but carry different action labels are the
    conflicts that postprocessing removes.
    """
    status = episode.observations[step_index]
    history = []
    for offset in range(history_steps, 0, -1):
        k = step_index - offset
        if k < 0:
            history.append("none")
        else:
            past = episode.observations[k]
            history.append([list(past.cell), past.rotation, past.action])
    payload = json.dumps({
        "house": episode.house_id,
        "cell": list(status.cell),
        "rotation": status.rotation,
        "target": episode.target_object_id,
        "history": history,
    }, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def compile_episode(house: House, episode: Episode, *, gold_label: bool = False,
                    diff_eq: bool = False) -> list[TraceStep]:
    steps = []
    for i in range(len(episode.observations)):
        instruction = compile_instruction(house, episode, i, gold_label=gold_label)
        response, scenario = compile_response(house, episode, i, diff_eq=diff_eq)
        steps.append(TraceStep(
            episode_id=episode.id,
            step_index=i,
            instruction=instruction,
            response=response,
            action_label=episode.observations[i].action,
            state_key=state_key(episode, i),
            scenario=scenario,
        ))
    return steps


def build_traces(houses: dict[str, House], episodes: list[Episode], *,
                 gold_label: bool = False, diff_eq: bool = False) -> TraceCorpus:
    steps: list[TraceStep] = []
    for episode in episodes:
        house = houses[episode.house_id]
        steps.extend(compile_episode(house, episode, gold_label=gold_label,
                                     diff_eq=diff_eq))
    return TraceCorpus(steps)


def postprocess(corpus: TraceCorpus, keep_rate: float = 0.25,
                seed: int = 0) -> TraceCorpus:
    """Downsample MoveAhead steps, then drop conflicting state groups.

    A conflict is a set of steps sharing a state_key but not an action
    label; the whole group is removed, not majority-voted.
    """
    if not 0.0 <= keep_rate <= 1.0:
        raise ValueError("keep_rate must be in [0, 1]")
    rng = random.Random(seed)
    kept = [step for step in corpus.steps
            if step.action_label != MOVE_AHEAD or rng.random() < keep_rate]
    labels_by_key: dict[str, set[str]] = {}
    for step in kept:
        labels_by_key.setdefault(step.state_key, set()).add(step.action_label)
    conflicted = {key for key, labels in labels_by_key.items() if len(labels) > 1}
    return TraceCorpus([step for step in kept if step.state_key not in conflicted])


def histogram_report(before: TraceCorpus, after: TraceCorpus) -> dict:
    """Action mix before/after postprocessing, Table-style: count and share."""
    report = {}
    for name, corpus in (("before", before), ("after", after)):
        hist = corpus.action_histogram
        total = sum(hist.values())
        report[name] = {
            action: {"count": hist.get(action, 0),
                     "proportion": (hist.get(action, 0) / total) if total else 0.0}
            for action in ACTIONS
        }
        report[name]["total"] = total
    return report


def write_traces(path, corpus: TraceCorpus) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for step in corpus.steps:
            fh.write(json.dumps({
                "episode_id": step.episode_id,
                "step_index": step.step_index,
                "instruction": step.instruction,
                "response": step.response,
                "action": step.action_label,
                "scenario": step.scenario,
                "state_key": step.state_key,
            }, separators=(",", ":")))
            fh.write("\n")


def read_traces(path) -> TraceCorpus:
    steps = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            data = json.loads(line)
            steps.append(TraceStep(
                episode_id=data["episode_id"],
                step_index=data["step_index"],
                instruction=data["instruction"],
                response=data["response"],
                action_label=data["action"],
                state_key=data["state_key"],
                scenario=data["scenario"],
            ))
    return TraceCorpus(steps)
