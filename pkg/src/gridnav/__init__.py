"""Grid-world open-vocabulary object navigation toolkit.

Generate procedural houses, sample shortest-path navigation episodes,
compile chain-of-thought training traces, train a small behavior-cloning
policy, and evaluate agents under SR / SPL / SEL.
"""

from .actions import ACTIONS, DONE, MOVE_AHEAD, ROTATE_LEFT, ROTATE_RIGHT
from .housegen import GenerationSpec, generate_house
from .planner import (
    ActionSequence,
    NoPathFound,
    PlannedPath,
    derive_actions,
    nearest_grid_point,
    plan_shortest_path,
)
from .scene import (
    GridMap,
    House,
    ObjectInstance,
    Pose,
    Room,
    SCENE_TAXONOMY,
    SceneError,
    cell_to_world,
    load_house,
    save_house,
)
from .simulator import Observation, SimState, Simulation

__version__ = "0.1.0"
