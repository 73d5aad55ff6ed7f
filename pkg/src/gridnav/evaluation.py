"""Agent evaluation under SR / SPL / SEL plus the baseline agents.

An agent sees, at every step, the current symbolic observation together
with the episode's target description, the recommended cell/rotation, and
the same recent-history window the training traces embed. Success follows
the simulator's predicate at termination. SPL weights success by
demonstration-vs-agent path length in meters (rotations travel zero
distance); SEL applies the same ratio to action counts.
"""

from __future__ import annotations

import csv
import json
import queue
import random
import subprocess
import threading
import time
from dataclasses import dataclass

from .actions import ACTIONS, DONE, MOVE_AHEAD, ROTATE_RIGHT, is_action
from .bc import PolicyParams, featurize, goal_distance_field, select_action
from .episodes import Episode
from .planner import rotation_actions
from .scene import CELL_SIZE_M, House
from .simulator import MAX_STEPS, Observation, Simulation
from .traces import HISTORY_STEPS, HISTORY_VIEWS, serialize_view_parts

PROTOCOL_VIOLATION = "ProtocolViolation"


class AgentProtocolError(Exception):
    """External or custom agent broke the request/response contract."""


@dataclass(frozen=True)
class EpisodeContext:
    """Task facts an agent receives when an episode starts."""

    episode_id: str
    target_category: str
    target_position: tuple[float, float]
    recommended_position: tuple[float, float]
    recommended_rotation: int


@dataclass(frozen=True)
class AgentRequest:
    """One step's input: context, current observation, recent history."""

    context: EpisodeContext
    step: int
    observation: Observation
    history: tuple  # up to M most recent (x, y, rotation, action)
    views: tuple[str, ...]  # up to K most recent serialized view blocks

    def to_wire(self) -> dict:
        obs = self.observation
        return {
            "episode_id": self.context.episode_id,
            "step": self.step,
            "target_category": self.context.target_category,
            "target_position": list(self.context.target_position),
            "recommended_position": list(self.context.recommended_position),
            "recommended_rotation": self.context.recommended_rotation,
            "agent_position": list(obs.agent_position),
            "agent_rotation": obs.agent_rotation,
            "obstacle_ahead": obs.obstacle_ahead,
            "visible_objects": [[v.id, v.category, round(v.distance_m, 4), v.bearing]
                                for v in obs.visible_objects],
            "ego": list(obs.ego_window),
            "history": [list(h) for h in self.history],
            "views": list(self.views),
        }


class Agent:
    """Base agent: fresh per-episode state via begin_episode, then act."""

    def begin_episode(self, context: EpisodeContext, episode: Episode | None = None):
        pass

    def act(self, request: AgentRequest) -> str:
        raise NotImplementedError


class OracleAgent(Agent):
    """Replays the stored demonstration actions."""

    def begin_episode(self, context, episode=None):
        if episode is None:
            raise ValueError("oracle agent needs the full episode")
        self._actions = list(episode.actions.actions)
        self._next = 0

    def act(self, request):
        if self._next >= len(self._actions):
            return DONE
        action = self._actions[self._next]
        self._next += 1
        return action


class RandomAgent(Agent):
    """Uniform over the four actions; reseeded per episode so results do
    not depend on evaluation order."""

    def __init__(self, seed: int = 0):
        self.seed = seed
        self._rng = random.Random(seed)

    def begin_episode(self, context, episode=None):
        self._rng = random.Random(f"{self.seed}:{context.episode_id}")

    def act(self, request):
        return self._rng.choice(ACTIONS)


class GreedyAgent(Agent):
    """Memoryless baseline: walk down the Manhattan distance to the
    recommended cell, preferring the axis with the larger remainder, and
    finish by turning to the recommended rotation. Blind to geometry
    beyond the obstacle-ahead flag, so concave obstacles trap it."""

    def act(self, request):
        obs = request.observation
        ctx = request.context
        dx_q = round((ctx.recommended_position[0] - obs.agent_position[0]) / CELL_SIZE_M)
        dy_q = round((ctx.recommended_position[1] - obs.agent_position[1]) / CELL_SIZE_M)
        rotation = obs.agent_rotation
        if dx_q == 0 and dy_q == 0:
            if rotation == ctx.recommended_rotation:
                return DONE
            return rotation_actions(rotation, ctx.recommended_rotation)[0]
        candidates = []
        if dx_q:
            candidates.append((abs(dx_q), 90 if dx_q > 0 else 270))
        if dy_q:
            candidates.append((abs(dy_q), 0 if dy_q > 0 else 180))
        candidates.sort(key=lambda c: -c[0])
        desired = candidates[0][1]
        if len(candidates) == 2 and candidates[0][0] == candidates[1][0] \
                and candidates[1][1] == rotation:
            desired = rotation
        if rotation == desired:
            if obs.obstacle_ahead and len(candidates) == 2:
                other = [c[1] for c in candidates if c[1] != desired][0]
                return rotation_actions(rotation, other)[0]
            return MOVE_AHEAD
        return rotation_actions(rotation, desired)[0]


class PolicyAgent(Agent):
    """Greedy rollout of trained behavior-cloning parameters."""

    def __init__(self, params: PolicyParams):
        self.params = params

    def begin_episode(self, context, episode=None):
        if episode is None:
            raise ValueError("policy agent needs the episode for its house context")
        self._episode = episode
        self._field = None
        self._target_id = episode.target_object_id
        self._prev: str | None = None

    def attach_house(self, house: House):
        self._house = house
        self._field = goal_distance_field(house.grid, self._episode.recommended_cell)

    def act(self, request):
        obs = request.observation
        ctx = request.context
        cell = self._house.grid.containing_cell(obs.agent_position)
        x = featurize(
            grid=self._house.grid,
            distance_field=self._field,
            cell=cell,
            rotation=obs.agent_rotation,
            goal=self._episode.recommended_cell,
            recommended_rotation=ctx.recommended_rotation,
            obstacle_ahead=obs.obstacle_ahead,
            target_visible=any(v.id == self._target_id for v in obs.visible_objects),
            prev_action=self._prev,
            obj_dx_m=ctx.target_position[0] - obs.agent_position[0],
            obj_dy_m=ctx.target_position[1] - obs.agent_position[1],
        )
        action = select_action(self.params, x)
        self._prev = action
        return action


class ExternalProcessAgent(Agent):
    """Bridge to an external agent over line-delimited standard streams.

    Each step sends one JSON observation record on the child's stdin; the
    child answers with one action token ("MoveAhead", "RotateRight",
    "RotateLeft", or "Done") per line. A read timeout falls back to
    RotateRight; a closed pipe or unknown token is a protocol error.
    """

    def __init__(self, command: list[str], time_budget_s: float = 10.0):
        self.command = list(command)
        self.time_budget_s = time_budget_s
        self._proc: subprocess.Popen | None = None
        self._queue: queue.Queue = queue.Queue()

    def _ensure_process(self):
        if self._proc is not None and self._proc.poll() is None:
            return
        self._proc = subprocess.Popen(
            self.command, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
            text=True, bufsize=1)
        self._queue = queue.Queue()

        def pump(proc, out):
            for line in proc.stdout:
                out.put(line)
            out.put(None)

        threading.Thread(target=pump, args=(self._proc, self._queue),
                         daemon=True).start()

    def begin_episode(self, context, episode=None):
        self._ensure_process()

    def act(self, request):
        self._ensure_process()
        try:
            self._proc.stdin.write(json.dumps(request.to_wire()) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise AgentProtocolError(f"agent process closed stdin: {exc}") from exc
        try:
            line = self._queue.get(timeout=self.time_budget_s)
        except queue.Empty:
            return ROTATE_RIGHT  # timeout fallback
        if line is None:
            raise AgentProtocolError("agent process closed stdout")
        token = line.strip()
        if not is_action(token):
            raise AgentProtocolError(f"unknown action token {token!r}")
        return token

    def close(self):
        if self._proc is not None and self._proc.poll() is None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            self._proc.terminate()
            self._proc.wait(timeout=5)
        self._proc = None


@dataclass
class EpisodeResult:
    episode_id: str
    split: str
    success: bool
    l_path_m: float
    p_path_m: float
    l_actions: int
    p_actions: int
    termination_cause: str
    spl_term: float
    sel_term: float


@dataclass
class EvalReport:
    episodes: list[EpisodeResult]
    aggregates: dict[str, dict]

    def to_dict(self) -> dict:
        return {
            "aggregates": self.aggregates,
            "episodes": [vars(r) for r in self.episodes],
        }

    def write_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=1)
            fh.write("\n")

    def write_csv(self, path) -> None:
        fields = ["episode_id", "split", "success", "l_path_m", "p_path_m",
                  "l_actions", "p_actions", "termination_cause", "spl_term",
                  "sel_term"]
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=fields)
            writer.writeheader()
            for row in self.episodes:
                writer.writerow({k: vars(row)[k] for k in fields})


def _ratio_term(success: bool, shortest: float, taken: float) -> float:
    if not success:
        return 0.0
    denom = max(shortest, taken)
    if denom == 0:
        return 1.0
    return shortest / denom


def _aggregate(rows: list[EpisodeResult]) -> dict:
    n = len(rows)
    if n == 0:
        return {"episodes": 0, "SR": 0.0, "SPL": 0.0, "SEL": 0.0}
    return {
        "episodes": n,
        "SR": sum(r.success for r in rows) / n,
        "SPL": sum(r.spl_term for r in rows) / n,
        "SEL": sum(r.sel_term for r in rows) / n,
    }


def run_episode(agent: Agent, house: House, episode: Episode, *,
                max_steps: int = MAX_STEPS, require_visible: bool = True,
                time_budget_s: float | None = None) -> EpisodeResult:
    """Drive one agent through one episode and score it."""
    target = house.objects_by_id[episode.target_object_id]
    context = EpisodeContext(
        episode_id=episode.id,
        target_category=episode.target_category,
        target_position=target.position,
        recommended_position=house.grid.cell_to_world(episode.recommended_cell),
        recommended_rotation=episode.recommended_rotation,
    )
    sim = Simulation(house, episode.initial_pose, max_steps=max_steps)
    agent.begin_episode(context, episode)
    if isinstance(agent, PolicyAgent):
        agent.attach_house(house)

    l_m = episode.actions.move_count * CELL_SIZE_M
    l_actions = len(episode.actions.actions)
    history: list[tuple] = []
    views: list[str] = []
    moved = 0
    cause = None
    while not sim.terminated:
        obs = sim.observe()
        request = AgentRequest(
            context=context,
            step=sim.steps_taken,
            observation=obs,
            history=tuple(history[-HISTORY_STEPS:]),
            views=tuple(views[-HISTORY_VIEWS:]),
        )
        started = time.monotonic()
        try:
            action = agent.act(request)
        except AgentProtocolError:
            cause = PROTOCOL_VIOLATION
            break
        if time_budget_s is not None and time.monotonic() - started > time_budget_s:
            action = ROTATE_RIGHT
        if not isinstance(action, str) or not is_action(action):
            cause = PROTOCOL_VIOLATION
            break
        before = sim.pose.cell
        x, y = obs.agent_position
        history.append((x, y, obs.agent_rotation, action))
        views.append(serialize_view_parts(
            obs.ego_window,
            tuple((v.id, v.category, round(v.distance_m, 4), v.bearing)
                  for v in obs.visible_objects),
            obs.obstacle_ahead))
        sim.step(action)
        if sim.pose.cell != before:
            moved += 1

    if cause == PROTOCOL_VIOLATION:
        success = False
    else:
        cause = sim.termination_cause
        success = sim.is_success(target, require_visible=require_visible)
    p_m = moved * CELL_SIZE_M
    p_actions = sim.steps_taken
    return EpisodeResult(
        episode_id=episode.id,
        split="all",
        success=success,
        l_path_m=l_m,
        p_path_m=p_m,
        l_actions=l_actions,
        p_actions=p_actions,
        termination_cause=cause or "Unknown",
        spl_term=_ratio_term(success, l_m, p_m),
        sel_term=_ratio_term(success, l_actions, p_actions),
    )


def evaluate(agent: Agent, episodes: list[Episode], houses: dict[str, House], *,
             max_steps: int = MAX_STEPS, require_visible: bool = True,
             time_budget_s: float | None = None,
             split_of: dict[str, str] | None = None) -> EvalReport:
    """Score an agent over an episode set; aggregates overall and per split.

    ``split_of`` maps house ids to split names (see
    :func:`gridnav.episodes.split_houses`).
    """
    rows = []
    for episode in episodes:
        house = houses[episode.house_id]
        row = run_episode(agent, house, episode, max_steps=max_steps,
                          require_visible=require_visible,
                          time_budget_s=time_budget_s)
        if split_of:
            row.split = split_of.get(episode.house_id, "all")
        rows.append(row)
    aggregates = {"overall": _aggregate(rows)}
    if split_of:
        for split in sorted({r.split for r in rows}):
            aggregates[split] = _aggregate([r for r in rows if r.split == split])
    return EvalReport(rows, aggregates)
