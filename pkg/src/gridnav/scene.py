"""Core scene types: grid maps, poses, objects, houses, and house file I/O.

All navigation geometry lives on a 0.25 m grid. Internally every exact
coordinate is an integer count of quarter-meters (one grid step); meters
appear only at I/O boundaries, so pose arithmetic never drifts.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable

CELL_SIZE_M = 0.25

# Cardinal rotations in degrees and the cell step MoveAhead takes at each.
# 0 = north = +row, 90 = east = +col, 180 = south = -row, 270 = west = -col.
ROTATIONS = (0, 90, 180, 270)
HEADINGS = {0: (0, 1), 90: (1, 0), 180: (0, -1), 270: (-1, 0)}
CARDINAL_NAMES = {0: "north", 90: "east", 180: "south", 270: "west"}

Cell = tuple[int, int]


def rotate_right(degrees: int) -> int:
    return (degrees + 90) % 360


def rotate_left(degrees: int) -> int:
    return (degrees - 90) % 360


def heading_delta(degrees: int) -> Cell:
    """(dcol, drow) step of one MoveAhead at the given rotation."""
    return HEADINGS[degrees]


def rotation_from_delta(delta: Cell) -> int:
    """Rotation whose MoveAhead step equals ``delta`` (a unit 4-neighbor step)."""
    for deg, step in HEADINGS.items():
        if step == delta:
            return deg
    raise ValueError(f"not a unit cardinal step: {delta}")


class SceneError(ValueError):
    """A house file or constructed scene violates the schema or an invariant."""

    def __init__(self, message: str, field_path: str = ""):
        self.field_path = field_path
        super().__init__(f"{field_path}: {message}" if field_path else message)


@dataclass(frozen=True)
class GridMap:
    """Reachable-cell grid with exact quarter-meter world anchoring.

    ``origin_q`` is the world position of cell (0, 0)'s center in integer
    quarter-meters, so cell centers are ``origin_q + (col, row)`` quarters.
    """

    width: int
    height: int
    reachable: frozenset[Cell]
    origin_q: Cell = (0, 0)

    def __post_init__(self):
        for cell in self.reachable:
            if not self.in_bounds(cell):
                raise SceneError(f"reachable cell {cell} outside {self.width}x{self.height}",
                                 "grid.reachable")

    def in_bounds(self, cell: Cell) -> bool:
        return 0 <= cell[0] < self.width and 0 <= cell[1] < self.height

    @property
    def origin_m(self) -> tuple[float, float]:
        return (self.origin_q[0] / 4.0, self.origin_q[1] / 4.0)

    def cell_center_q(self, cell: Cell) -> Cell:
        return (self.origin_q[0] + cell[0], self.origin_q[1] + cell[1])

    def cell_to_world(self, cell: Cell) -> tuple[float, float]:
        """World coordinates (meters) of a cell center; exact quarter multiples."""
        if not self.in_bounds(cell):
            raise SceneError(f"cell {cell} outside {self.width}x{self.height} grid")
        cx, cy = self.cell_center_q(cell)
        return (cx / 4.0, cy / 4.0)

    def containing_cell(self, position: tuple[float, float]) -> Cell:
        """Cell whose 0.25 m square holds ``position``, clamped to bounds."""
        qx = position[0] * 4.0 - self.origin_q[0]
        qy = position[1] * 4.0 - self.origin_q[1]
        col = int(math.floor(qx + 0.5))
        row = int(math.floor(qy + 0.5))
        return (min(max(col, 0), self.width - 1), min(max(row, 0), self.height - 1))

    def world_bounds(self) -> tuple[float, float, float, float]:
        """(min_x, min_y, max_x, max_y) in meters covered by the cell squares."""
        ox, oy = self.origin_m
        return (ox - 0.125, oy - 0.125,
                ox + (self.width - 1) * 0.25 + 0.125,
                oy + (self.height - 1) * 0.25 + 0.125)


def cell_to_world(grid: GridMap, cell: Cell) -> tuple[float, float]:
    return grid.cell_to_world(cell)


@dataclass(frozen=True)
class Pose:
    cell: Cell
    rotation: int  # degrees, one of ROTATIONS

    def __post_init__(self):
        if self.rotation not in ROTATIONS:
            raise SceneError(f"rotation {self.rotation} not in {ROTATIONS}")


@dataclass(frozen=True)
class ObjectInstance:
    id: str
    category: str
    position: tuple[float, float]  # continuous meters, not grid-snapped
    height_m: float
    opaque: bool = False

    def __post_init__(self):
        if self.height_m < 0:
            raise SceneError(f"height_m {self.height_m} < 0", f"objects[{self.id}].height_m")


@dataclass(frozen=True)
class Room:
    name: str
    min_cell: Cell
    max_cell: Cell  # inclusive

    @property
    def width(self) -> int:
        return self.max_cell[0] - self.min_cell[0] + 1

    @property
    def height(self) -> int:
        return self.max_cell[1] - self.min_cell[1] + 1

    @property
    def area_m2(self) -> float:
        return self.width * self.height * CELL_SIZE_M * CELL_SIZE_M

    def cells(self) -> Iterable[Cell]:
        for col in range(self.min_cell[0], self.max_cell[0] + 1):
            for row in range(self.min_cell[1], self.max_cell[1] + 1):
                yield (col, row)


# Scene taxonomy: 81 scene types in 5 categories.
SCENE_TAXONOMY: dict[str, tuple[str, ...]] = {
    "Store": (
        "bakery", "grocery store", "clothing store", "deli", "laundromat",
        "jewellery shop", "bookstore", "video store", "florist shop", "shoe shop",
        "toy store", "furniture store", "electronics store", "craft store",
        "music store", "sporting goods store",
    ),
    "Home": (
        "bedroom", "nursery", "closet", "pantry", "children room", "lobby",
        "dining room", "corridor", "living room", "bathroom", "kitchen",
        "wine cellar", "garage", "sunroom", "cabinet", "study room", "apartment",
        "home office", "basement", "attic", "laundry room",
    ),
    "Public spaces": (
        "prison cell", "library", "waiting room", "museum", "locker room",
        "town hall", "community center", "convention center", "recreation center",
    ),
    "Leisure": (
        "buffet", "fast-food restaurant", "restaurant", "bar", "game room",
        "casino", "gym", "hair salon", "arcade", "spa", "concert hall",
        "ski lodge", "lounge", "club",
    ),
    "Working place": (
        "hospital room", "kindergarten", "restaurant kitchen", "art studio",
        "classroom", "laboratory", "music studio", "operating room", "office",
        "computer room", "warehouse", "greenhouse", "dental office", "TV studio",
        "meeting room", "school room", "conference room", "factory floor",
        "call center", "reception area", "nursing station",
    ),
}

SCENE_CATEGORY_OF = {
    scene_type: category
    for category, types in SCENE_TAXONOMY.items()
    for scene_type in types
}

ALL_SCENE_TYPES = tuple(t for types in SCENE_TAXONOMY.values() for t in types)


@dataclass(frozen=True)
class House:
    id: str
    scene_type: str
    scene_category: str
    grid: GridMap
    rooms: tuple[Room, ...]
    objects: tuple[ObjectInstance, ...]

    def __post_init__(self):
        if self.scene_type not in SCENE_CATEGORY_OF:
            raise SceneError(f"unknown scene type {self.scene_type!r}", "scene_type")
        expected = SCENE_CATEGORY_OF[self.scene_type]
        if self.scene_category != expected:
            raise SceneError(
                f"scene_type {self.scene_type!r} belongs to {expected!r}, "
                f"not {self.scene_category!r}", "scene_category")
        seen: set[str] = set()
        min_x, min_y, max_x, max_y = self.grid.world_bounds()
        for i, obj in enumerate(self.objects):
            if obj.id in seen:
                raise SceneError(f"duplicate object id {obj.id!r}", f"objects[{i}].id")
            seen.add(obj.id)
            x, y = obj.position
            if not (min_x <= x <= max_x and min_y <= y <= max_y):
                raise SceneError(
                    f"object {obj.id!r} at ({x}, {y}) outside grid world bounds",
                    f"objects[{i}].position")

    @cached_property
    def objects_by_id(self) -> dict[str, ObjectInstance]:
        return {obj.id: obj for obj in self.objects}

    @cached_property
    def opaque_cells(self) -> dict[Cell, tuple[str, ...]]:
        """Vision-blocking cells: unreachable cells holding an opaque object.

        Reachable cells never block sight. Values are the ids of the opaque
        objects in the cell, so a target never occludes itself.
        """
        by_cell: dict[Cell, list[str]] = {}
        for obj in self.objects:
            if not obj.opaque:
                continue
            cell = self.grid.containing_cell(obj.position)
            if cell in self.grid.reachable:
                continue
            by_cell.setdefault(cell, []).append(obj.id)
        return {cell: tuple(ids) for cell, ids in by_cell.items()}


def _require(obj: dict, key: str, path: str):
    if key not in obj:
        raise SceneError(f"missing field {key!r}", path)
    return obj[key]


def _as_cell(value, path: str) -> Cell:
    if (not isinstance(value, (list, tuple)) or len(value) != 2
            or not all(isinstance(v, int) and not isinstance(v, bool) for v in value)):
        raise SceneError(f"expected [col, row] integer pair, got {value!r}", path)
    return (value[0], value[1])


def _as_quarters(value: float, path: str) -> int:
    q = value * 4.0
    if abs(q - round(q)) > 1e-9:
        raise SceneError(f"{value} is not a multiple of 0.25 m", path)
    return int(round(q))


def house_from_dict(data: dict) -> House:
    """Build and validate a House from the JSON house schema."""
    grid_data = _require(data, "grid", "grid")
    cell_size = _require(grid_data, "cell_size_m", "grid.cell_size_m")
    if cell_size != CELL_SIZE_M:
        raise SceneError(f"cell_size_m must be {CELL_SIZE_M}, got {cell_size}",
                         "grid.cell_size_m")
    width = _require(grid_data, "width", "grid.width")
    height = _require(grid_data, "height", "grid.height")
    origin = _require(grid_data, "origin", "grid.origin")
    if not isinstance(origin, (list, tuple)) or len(origin) != 2:
        raise SceneError("origin must be [x, y] in meters", "grid.origin")
    origin_q = (_as_quarters(origin[0], "grid.origin[0]"),
                _as_quarters(origin[1], "grid.origin[1]"))
    raw_reachable = _require(grid_data, "reachable", "grid.reachable")
    reachable = frozenset(
        _as_cell(c, f"grid.reachable[{i}]") for i, c in enumerate(raw_reachable))
    grid = GridMap(width=width, height=height, reachable=reachable, origin_q=origin_q)

    rooms = []
    for i, room_data in enumerate(data.get("rooms", [])):
        rooms.append(Room(
            name=_require(room_data, "name", f"rooms[{i}].name"),
            min_cell=_as_cell(_require(room_data, "min_cell", f"rooms[{i}].min_cell"),
                              f"rooms[{i}].min_cell"),
            max_cell=_as_cell(_require(room_data, "max_cell", f"rooms[{i}].max_cell"),
                              f"rooms[{i}].max_cell"),
        ))

    objects = []
    for i, obj_data in enumerate(data.get("objects", [])):
        pos = _require(obj_data, "position", f"objects[{i}].position")
        if not isinstance(pos, (list, tuple)) or len(pos) != 2:
            raise SceneError("position must be [x, y] in meters", f"objects[{i}].position")
        objects.append(ObjectInstance(
            id=_require(obj_data, "id", f"objects[{i}].id"),
            category=_require(obj_data, "category", f"objects[{i}].category"),
            position=(float(pos[0]), float(pos[1])),
            height_m=float(_require(obj_data, "height_m", f"objects[{i}].height_m")),
            opaque=bool(_require(obj_data, "opaque", f"objects[{i}].opaque")),
        ))

    return House(
        id=_require(data, "id", "id"),
        scene_type=_require(data, "scene_type", "scene_type"),
        scene_category=_require(data, "scene_category", "scene_category"),
        grid=grid,
        rooms=tuple(rooms),
        objects=tuple(objects),
    )


def house_to_dict(house: House) -> dict:
    """Serialize a House to the JSON house schema with canonical ordering."""
    return {
        "id": house.id,
        "scene_type": house.scene_type,
        "scene_category": house.scene_category,
        "grid": {
            "cell_size_m": CELL_SIZE_M,
            "width": house.grid.width,
            "height": house.grid.height,
            "origin": [house.grid.origin_q[0] / 4.0, house.grid.origin_q[1] / 4.0],
            "reachable": [list(c) for c in sorted(house.grid.reachable)],
        },
        "rooms": [
            {"name": r.name, "min_cell": list(r.min_cell), "max_cell": list(r.max_cell)}
            for r in house.rooms
        ],
        "objects": [
            {"id": o.id, "category": o.category, "position": [o.position[0], o.position[1]],
             "height_m": o.height_m, "opaque": o.opaque}
            for o in house.objects
        ],
    }


def load_house(path) -> House:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SceneError(f"invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise SceneError("house file must hold a JSON object")
    return house_from_dict(data)


def save_house(house: House, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(house_to_dict(house), fh, indent=1)
        fh.write("\n")
