"""The discrete action vocabulary shared by the planner, simulator, and agents."""

MOVE_AHEAD = "MoveAhead"
ROTATE_RIGHT = "RotateRight"
ROTATE_LEFT = "RotateLeft"
DONE = "Done"

ACTIONS = (MOVE_AHEAD, ROTATE_RIGHT, ROTATE_LEFT, DONE)
ACTION_INDEX = {a: i for i, a in enumerate(ACTIONS)}


def is_action(value: str) -> bool:
    return value in ACTION_INDEX
