"""Procedural desk-scale house generation.

Rooms come from recursive rectangle splitting with one-cell walls; every
split wall gets a door cell, and a flood-fill repair pass guarantees the
whole floor is one connected component. Furniture cells are carved out of
room floors and objects are scattered on or next to them at continuous
(non-grid-snapped) positions.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .scene import (
    ALL_SCENE_TYPES,
    CELL_SIZE_M,
    SCENE_CATEGORY_OF,
    Cell,
    GridMap,
    House,
    ObjectInstance,
    Room,
)

DEFAULT_CATEGORY_POOL = (
    "armchair", "basketball", "bookshelf", "cactus pot", "ceramic vase",
    "coffee machine", "desk lamp", "dining chair", "easel", "electric guitar",
    "fire extinguisher", "floor mirror", "fruit bowl", "globe", "houseplant",
    "kettle", "laundry basket", "magazine rack", "microwave", "notebook stack",
    "oil painting", "pepper grinder", "picture frame", "pool cue", "printer",
    "radio", "rocking horse", "sewing machine", "soda can", "stool",
    "table fan", "teapot", "telescope", "toolbox", "trophy", "typewriter",
    "umbrella stand", "vintage clock", "watering can", "wine rack",
)


class GenerationError(ValueError):
    """The generation spec cannot be satisfied (e.g. rooms cannot fit)."""


@dataclass(frozen=True)
class GenerationSpec:
    """Parameters for :func:`generate_house`.

    ``object_density`` is objects per room floor cell, in (0, 1];
    ``height_range`` bounds the uniform draw of object heights, which
    deliberately extends past the [0.3, 2.0] m observability band so some
    objects get filtered during episode sampling.
    """

    room_count: int = 3
    cells_per_room_range: tuple[int, int] = (36, 100)
    object_density: float = 0.3
    category_pool: tuple[str, ...] = DEFAULT_CATEGORY_POOL
    height_range: tuple[float, float] = (0.05, 2.4)
    opaque_prob: float = 0.5
    furniture_density: float = 0.08

    def __post_init__(self):
        if self.room_count < 1:
            raise GenerationError("room_count must be >= 1")
        if not (0.0 < self.object_density <= 1.0):
            raise GenerationError("object_density must be in (0, 1]")
        lo, hi = self.cells_per_room_range
        if lo < 9 or hi < lo:
            raise GenerationError("cells_per_room_range must satisfy 9 <= lo <= hi")
        if not self.category_pool:
            raise GenerationError("category_pool must be non-empty")


@dataclass
class _Region:
    min_col: int
    min_row: int
    max_col: int  # inclusive
    max_row: int

    @property
    def width(self) -> int:
        return self.max_col - self.min_col + 1

    @property
    def height(self) -> int:
        return self.max_row - self.min_row + 1

    @property
    def area(self) -> int:
        return self.width * self.height


def _split_regions(canvas: _Region, count: int, rng: random.Random,
                   min_side: int) -> tuple[list[_Region], list[tuple[str, int, _Region]]]:
    """Split the canvas into ``count`` regions separated by one-cell walls.

    Returns (leaf regions, wall lines). A wall line is ("v"|"h", index, region)
    where index is the wall column/row inside the given pre-split region.
    """
    regions = [canvas]
    walls: list[tuple[str, int, _Region]] = []
    while len(regions) < count:
        # Split the largest region that still can be split.
        order = sorted(range(len(regions)), key=lambda i: -regions[i].area)
        for idx in order:
            region = regions[idx]
            can_v = region.width >= 2 * min_side + 1
            can_h = region.height >= 2 * min_side + 1
            if not (can_v or can_h):
                continue
            if can_v and (not can_h or region.width >= region.height):
                cut = rng.randint(region.min_col + min_side, region.max_col - min_side)
                left = _Region(region.min_col, region.min_row, cut - 1, region.max_row)
                right = _Region(cut + 1, region.min_row, region.max_col, region.max_row)
                walls.append(("v", cut, region))
                regions[idx:idx + 1] = [left, right]
            else:
                cut = rng.randint(region.min_row + min_side, region.max_row - min_side)
                bottom = _Region(region.min_col, region.min_row, region.max_col, cut - 1)
                top = _Region(region.min_col, cut + 1, region.max_col, region.max_row)
                walls.append(("h", cut, region))
                regions[idx:idx + 1] = [bottom, top]
            break
        else:
            raise GenerationError(
                f"cannot fit {count} rooms of min side {min_side} in "
                f"{canvas.width}x{canvas.height} cells")
    return regions, walls


def _components(cells: set[Cell]) -> list[set[Cell]]:
    remaining = set(cells)
    comps = []
    while remaining:
        seed = remaining.pop()
        comp = {seed}
        frontier = [seed]
        while frontier:
            col, row = frontier.pop()
            for nc in ((col, row + 1), (col + 1, row), (col, row - 1), (col - 1, row)):
                if nc in remaining:
                    remaining.remove(nc)
                    comp.add(nc)
                    frontier.append(nc)
        comps.append(comp)
    return comps


def generate_house(seed: int, spec: GenerationSpec | None = None) -> House:
    """Deterministically generate a multi-room house for the given seed."""
    spec = spec or GenerationSpec()
    rng = random.Random(seed)

    min_side = 3
    lo, hi = spec.cells_per_room_range
    mean_room = (lo + hi) / 2.0
    total = spec.room_count * mean_room
    # Square-ish canvas with one-cell walls between rooms, capped at a
    # desk-scale side of 64 cells (16 m); specs that cannot split into the
    # requested room count under the cap raise GenerationError.
    side = max(int(round(total ** 0.5)) + spec.room_count, 2 * min_side + 1)
    side = min(side, 64)
    canvas = _Region(0, 0, side - 1, side - 1)
    regions, walls = _split_regions(canvas, spec.room_count, rng, min_side)

    floor: set[Cell] = set()
    rooms: list[Room] = []
    for i, region in enumerate(sorted(regions, key=lambda r: (r.min_row, r.min_col))):
        rooms.append(Room(name=f"room_{i}",
                          min_cell=(region.min_col, region.min_row),
                          max_cell=(region.max_col, region.max_row)))
        for col in range(region.min_col, region.max_col + 1):
            for row in range(region.min_row, region.max_row + 1):
                floor.add((col, row))

    # One door per split wall, where both sides are floor.
    doors: set[Cell] = set()
    for orient, cut, region in walls:
        if orient == "v":
            candidates = [(cut, row) for row in range(region.min_row, region.max_row + 1)
                          if (cut - 1, row) in floor and (cut + 1, row) in floor]
        else:
            candidates = [(col, cut) for col in range(region.min_col, region.max_col + 1)
                          if (col, cut - 1) in floor and (col, cut + 1) in floor]
        if candidates:
            doors.add(rng.choice(sorted(candidates)))

    # Furniture: non-reachable cells inside rooms, never adjacent to a door.
    furniture: set[Cell] = set()
    for room in rooms:
        room_cells = sorted(room.cells())
        k = int(round(spec.furniture_density * len(room_cells)))
        for cell in rng.sample(room_cells, min(k, len(room_cells))):
            col, row = cell
            near_door = any(
                (col + dc, row + dr) in doors
                for dc in (-1, 0, 1) for dr in (-1, 0, 1))
            if not near_door:
                furniture.add(cell)

    reachable = (floor - furniture) | doors

    # Repair pass 1: open one-cell walls until no opening reconnects more.
    comps = _components(reachable)
    guard = 0
    while len(comps) > 1 and guard < side * side:
        guard += 1
        comps.sort(key=lambda c: (-len(c), min(c)))
        main = comps[0]
        opened = False
        for cell in sorted(set().union(*comps[1:])):
            col, row = cell
            for dc, dr in ((0, 1), (1, 0), (0, -1), (-1, 0)):
                wall = (col + dc, row + dr)
                beyond = (col + 2 * dc, row + 2 * dr)
                if wall not in reachable and 0 <= wall[0] < side and 0 <= wall[1] < side \
                        and beyond in main:
                    reachable.add(wall)
                    doors.add(wall)
                    furniture.discard(wall)
                    opened = True
                    break
            if opened:
                break
        if not opened:
            break
        comps = _components(reachable)

    # Repair pass 2: demote any leftover furniture-enclosed pockets.
    comps = sorted(_components(reachable), key=lambda c: (-len(c), min(c)))
    if len(comps) > 1:
        for comp in comps[1:]:
            reachable -= comp
            furniture |= comp
            doors -= comp
    if any(not any(cell in reachable for cell in room.cells()) for room in rooms):
        raise GenerationError("could not connect generated rooms")

    # Objects sit on or next to furniture cells (or any floor cell when a
    # room has no furniture), jittered off the grid for realism.
    n_objects = max(1, int(round(spec.object_density * len(floor))))
    objects: list[ObjectInstance] = []
    furniture_sorted = sorted(furniture)
    floor_sorted = sorted(floor)
    h_lo, h_hi = spec.height_range
    for i in range(n_objects):
        anchor = rng.choice(furniture_sorted) if furniture_sorted else rng.choice(floor_sorted)
        if furniture_sorted and rng.random() < 0.5:
            col, row = anchor
            neighbors = [c for c in ((col, row + 1), (col + 1, row), (col, row - 1), (col - 1, row))
                         if c in reachable]
            if neighbors:
                anchor = rng.choice(sorted(neighbors))
        x = anchor[0] * CELL_SIZE_M + rng.uniform(-0.1, 0.1)
        y = anchor[1] * CELL_SIZE_M + rng.uniform(-0.1, 0.1)
        objects.append(ObjectInstance(
            id=f"obj_{i:04d}",
            category=rng.choice(spec.category_pool),
            position=(round(x, 3), round(y, 3)),
            height_m=round(rng.uniform(h_lo, h_hi), 3),
            opaque=rng.random() < spec.opaque_prob,
        ))
    if not any(0.3 <= o.height_m <= 2.0 for o in objects):
        objects[0] = ObjectInstance(
            id=objects[0].id, category=objects[0].category,
            position=objects[0].position, height_m=1.0, opaque=objects[0].opaque)

    scene_type = rng.choice(ALL_SCENE_TYPES)
    grid = GridMap(width=side, height=side, reachable=frozenset(reachable), origin_q=(0, 0))
    return House(
        id=f"house_{seed:08d}",
        scene_type=scene_type,
        scene_category=SCENE_CATEGORY_OF[scene_type],
        grid=grid,
        rooms=tuple(rooms),
        objects=tuple(objects),
    )
