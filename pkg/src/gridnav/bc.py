"""Behavior cloning: featurization, softmax policy, NLL training, rollout.

The policy is a linear softmax over the four actions, trained by plain
mini-batch gradient descent on the negative log-likelihood of demonstrated
actions. Features combine the navigation facts the instruction text
carries (displacement to the recommended cell in world and agent frames,
heading, obstacle/visibility flags, previous action, target-object offset)
with goal-conditioned guidance signals: grid-distance descent flags toward
the recommended cell and the rotation gap to the recommended terminal
heading. Those indicators keep the hypothesis class linear while making
the demonstrated decision rule separable.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass

import numpy as np

from .actions import ACTION_INDEX, ACTIONS
from .episodes import Episode
from .scene import HEADINGS, ROTATIONS, Cell, GridMap, House
from .simulator import MAX_STEPS, Simulation

FEATURE_NAMES = (
    "dx_q", "dy_q",
    "rot_0", "rot_90", "rot_180", "rot_270",
    "obstacle_ahead", "target_visible",
    "prev_move", "prev_right", "prev_left", "prev_done", "prev_none",
    "bias",
    "forward_q", "lateral_q",
    "obj_forward_m", "obj_lateral_m",
    "manhattan_q",
    "at_goal",
    "gap_0_at_goal", "gap_90_at_goal", "gap_180_at_goal", "gap_270_at_goal",
    "descent_ahead", "descent_right", "descent_left", "descent_back",
    "grid_distance", "lateral_sign", "dead_end_heading",
)
FEATURE_DIM = len(FEATURE_NAMES)

_PREV_INDEX = {**ACTION_INDEX, None: len(ACTIONS)}


class TrainingDiverged(RuntimeError):
    pass


def goal_distance_field(grid: GridMap, goal: Cell) -> dict[Cell, int]:
    """Unweighted grid distance from every reachable cell to the goal."""
    dist = {goal: 0}
    queue = deque([goal])
    while queue:
        col, row = queue.popleft()
        d = dist[(col, row)]
        for n in ((col, row + 1), (col + 1, row), (col, row - 1), (col - 1, row)):
            if n in grid.reachable and n not in dist:
                dist[n] = d + 1
                queue.append(n)
    return dist


def _to_agent_frame(rotation: int, dx: float, dy: float) -> tuple[float, float]:
    """World displacement -> (forward, lateral); lateral > 0 is rightward."""
    fx, fy = HEADINGS[rotation]
    return fx * dx + fy * dy, fy * dx - fx * dy


def featurize(grid: GridMap, distance_field: dict[Cell, int], cell: Cell,
              rotation: int, goal: Cell, recommended_rotation: int,
              obstacle_ahead: bool, target_visible: bool,
              prev_action: str | None, obj_dx_m: float,
              obj_dy_m: float) -> np.ndarray:
    dx_q = goal[0] - cell[0]
    dy_q = goal[1] - cell[1]
    forward_q, lateral_q = _to_agent_frame(rotation, dx_q, dy_q)
    obj_forward, obj_lateral = _to_agent_frame(rotation, obj_dx_m, obj_dy_m)

    x = np.zeros(FEATURE_DIM)
    x[0] = dx_q
    x[1] = dy_q
    x[2 + ROTATIONS.index(rotation)] = 1.0
    x[6] = 1.0 if obstacle_ahead else 0.0
    x[7] = 1.0 if target_visible else 0.0
    x[8 + _PREV_INDEX[prev_action]] = 1.0
    x[13] = 1.0
    x[14] = forward_q
    x[15] = lateral_q
    x[16] = obj_forward
    x[17] = obj_lateral
    x[18] = abs(dx_q) + abs(dy_q)

    at_goal = dx_q == 0 and dy_q == 0
    x[19] = 1.0 if at_goal else 0.0
    if at_goal:
        gap = (recommended_rotation - rotation) % 360
        x[20 + ROTATIONS.index(gap)] = 1.0

    d0 = distance_field.get(cell)
    fx, fy = HEADINGS[rotation]
    rx, ry = fy, -fx  # unit step to the agent's right
    for i, step in enumerate(((fx, fy), (rx, ry), (-rx, -ry), (-fx, -fy))):
        neighbor = (cell[0] + step[0], cell[1] + step[1])
        if d0 is not None and distance_field.get(neighbor) == d0 - 1:
            x[24 + i] = 1.0
    x[28] = float(d0) if d0 is not None else -1.0
    x[29] = 1.0 if lateral_q > 0 else (-1.0 if lateral_q < 0 else 0.0)
    x[30] = 1.0 if (not at_goal and x[24] == 0 and x[25] == 0 and x[26] == 0) else 0.0
    return x


def features_for_step(house: House, episode: Episode, step_index: int,
                      distance_field: dict[Cell, int] | None = None) -> np.ndarray:
    status = episode.observations[step_index]
    goal = episode.recommended_cell
    if distance_field is None:
        distance_field = goal_distance_field(house.grid, goal)
    target = house.objects_by_id[episode.target_object_id]
    ax, ay = house.grid.cell_to_world(status.cell)
    prev = episode.observations[step_index - 1].action if step_index > 0 else None
    return featurize(
        grid=house.grid,
        distance_field=distance_field,
        cell=status.cell,
        rotation=status.rotation,
        goal=goal,
        recommended_rotation=episode.recommended_rotation,
        obstacle_ahead=status.obstacle_ahead,
        target_visible=status.target_visible,
        prev_action=prev,
        obj_dx_m=target.position[0] - ax,
        obj_dy_m=target.position[1] - ay,
    )


def training_set(houses: dict[str, House], episodes: list[Episode],
                 corpus) -> tuple[np.ndarray, np.ndarray]:
    """(features, action indices) for every step in a trace corpus."""
    by_id = {e.id: e for e in episodes}
    fields: dict[tuple[str, Cell], dict[Cell, int]] = {}
    xs, ys = [], []
    for step in corpus.steps:
        episode = by_id[step.episode_id]
        house = houses[episode.house_id]
        key = (episode.house_id, episode.recommended_cell)
        if key not in fields:
            fields[key] = goal_distance_field(house.grid, episode.recommended_cell)
        xs.append(features_for_step(house, episode, step.step_index, fields[key]))
        ys.append(ACTION_INDEX[step.action_label])
    if not xs:
        raise ValueError("empty trace corpus")
    return np.asarray(xs, dtype=np.float64), np.asarray(ys, dtype=np.int64)


@dataclass(frozen=True)
class PolicyParams:
    weights: np.ndarray  # (n_actions, FEATURE_DIM)

    def __post_init__(self):
        if not np.all(np.isfinite(self.weights)):
            raise ValueError("policy weights must be finite")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    batch_size: int = 64
    epochs: int = 200
    seed: int = 0
    l2_penalty: float = 0.0
    data_fraction: float = 1.0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if not 0.0 < self.data_fraction <= 1.0:
            raise ValueError("data_fraction must be in (0, 1]")


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def predict_proba(params: PolicyParams, x: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    return np.exp(_log_softmax(x @ params.weights.T))


def nll_loss(params: PolicyParams, features: np.ndarray, labels: np.ndarray,
             l2_penalty: float = 0.0) -> tuple[float, np.ndarray]:
    """Mean negative log-likelihood and its exact gradient.

    The ridge term is 0.5 * l2 * ||W||^2, so the gradient adds l2 * W.
    """
    if features.size == 0:
        raise ValueError("batch must be non-empty")
    if not np.all(np.isfinite(features)):
        raise ValueError("non-finite features")
    w = params.weights
    logp = _log_softmax(features @ w.T)
    n = features.shape[0]
    loss = -logp[np.arange(n), labels].mean() + 0.5 * l2_penalty * float((w * w).sum())
    probs = np.exp(logp)
    probs[np.arange(n), labels] -= 1.0
    grad = probs.T @ features / n + l2_penalty * w
    return float(loss), grad


@dataclass
class TrainResult:
    params: PolicyParams
    loss_curve: list[float]


def train(features: np.ndarray, labels: np.ndarray,
          config: TrainConfig = TrainConfig()) -> TrainResult:
    """Mini-batch gradient descent from zero weights; bit-reproducible."""
    if features.shape[0] == 0:
        raise ValueError("corpus must be non-empty")
    rng = np.random.default_rng(config.seed)
    n = features.shape[0]
    if config.data_fraction < 1.0:
        keep = max(1, int(round(config.data_fraction * n)))
        picked = rng.permutation(n)[:keep]
        picked.sort()
        features = features[picked]
        labels = labels[picked]
        n = keep
    w = np.zeros((len(ACTIONS), features.shape[1]), dtype=np.float64)
    curve: list[float] = []
    for _ in range(config.epochs):
        order = rng.permutation(n)
        for lo in range(0, n, config.batch_size):
            batch = order[lo:lo + config.batch_size]
            _, grad = nll_loss(PolicyParams(w), features[batch], labels[batch],
                               config.l2_penalty)
            w = w - config.learning_rate * grad
        loss, _ = nll_loss(PolicyParams(w), features, labels, config.l2_penalty)
        if not np.isfinite(loss) or loss > 1e6:
            raise TrainingDiverged(
                f"loss {loss} after epoch {len(curve) + 1} "
                f"(lr={config.learning_rate}, batch={config.batch_size})")
        curve.append(loss)
    return TrainResult(PolicyParams(w), curve)


def select_action(params: PolicyParams, x: np.ndarray) -> str:
    """Greedy action; ties resolve to the lowest action index."""
    logits = params.weights @ x
    return ACTIONS[int(np.argmax(logits))]


@dataclass
class PolicyTrajectory:
    cells: list
    actions: list[str]
    success: bool
    steps: int


def run_policy(params: PolicyParams, house: House, episode: Episode,
               max_steps: int = MAX_STEPS) -> PolicyTrajectory:
    """Greedy rollout of the policy on an episode's task."""
    target = house.objects_by_id[episode.target_object_id]
    goal = episode.recommended_cell
    field = goal_distance_field(house.grid, goal)
    sim = Simulation(house, episode.initial_pose, max_steps=max_steps)
    cells = [sim.pose.cell]
    taken: list[str] = []
    prev: str | None = None
    while not sim.terminated:
        ax, ay = sim.agent_position()
        x = featurize(
            grid=house.grid,
            distance_field=field,
            cell=sim.pose.cell,
            rotation=sim.pose.rotation,
            goal=goal,
            recommended_rotation=episode.recommended_rotation,
            obstacle_ahead=sim.obstacle_ahead(),
            target_visible=sim.visible(target),
            prev_action=prev,
            obj_dx_m=target.position[0] - ax,
            obj_dy_m=target.position[1] - ay,
        )
        action = select_action(params, x)
        sim.step(action)
        taken.append(action)
        cells.append(sim.pose.cell)
        prev = action
    return PolicyTrajectory(cells, taken, sim.is_success(target), sim.steps_taken)


def save_params(path, params: PolicyParams) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({
            "dim": params.weights.shape[1],
            "actions": list(ACTIONS),
            "feature_names": list(FEATURE_NAMES),
            "weights": params.weights.tolist(),
        }, fh)
        fh.write("\n")


def load_params(path) -> PolicyParams:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    weights = np.asarray(data["weights"], dtype=np.float64)
    if weights.shape != (len(data["actions"]), data["dim"]):
        raise ValueError("params file dimension header disagrees with weights")
    return PolicyParams(weights)


def save_loss_curve(path, curve: list[float]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("epoch,loss\n")
        for i, loss in enumerate(curve, start=1):
            fh.write(f"{i},{loss:.10f}\n")
