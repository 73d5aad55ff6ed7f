from __future__ import annotations

import random

import pytest

from gridnav.housegen import GenerationSpec, generate_house
from gridnav.episodes import sample_episodes
from gridnav.scene import GridMap, House, ObjectInstance, Room


def make_house(reachable, width, height, objects, *, house_id="h-test",
               scene_type="study room", rooms=None):
    return House(
        id=house_id,
        scene_type=scene_type,
        scene_category="Home",
        grid=GridMap(width=width, height=height, reachable=frozenset(reachable)),
        rooms=tuple(rooms or ()),
        objects=tuple(objects),
    )


def open_grid(width, height):
    return GridMap(width=width, height=height,
                   reachable=frozenset((c, r) for c in range(width) for r in range(height)))


def random_connected_grid(rng: random.Random, max_side=30, density=0.25):
    """Random wall grid reduced to its largest connected component."""
    w = rng.randint(4, max_side)
    h = rng.randint(4, max_side)
    cells = {(c, r) for c in range(w) for r in range(h) if rng.random() > density}
    if not cells:
        cells = {(0, 0)}
    remaining = set(cells)
    comps = []
    while remaining:
        seed = remaining.pop()
        comp = {seed}
        frontier = [seed]
        while frontier:
            c, r = frontier.pop()
            for n in ((c, r + 1), (c + 1, r), (c, r - 1), (c - 1, r)):
                if n in remaining:
                    remaining.remove(n)
                    comp.add(n)
                    frontier.append(n)
        comps.append(comp)
    comp = max(comps, key=len)
    return GridMap(width=w, height=h, reachable=frozenset(comp)), sorted(comp)


@pytest.fixture(scope="session")
def corridor_house():
    """1x12 north-south corridor with the target at the far end."""
    reachable = {(0, r) for r in range(12)}
    target = ObjectInstance(id="goal-lamp", category="desk lamp",
                            position=(0.0, 2.75), height_m=1.2, opaque=False)
    return make_house(reachable, 1, 12, [target], house_id="h-corridor",
                      rooms=[Room("hall", (0, 0), (0, 11))])


@pytest.fixture(scope="session")
def small_corpus():
    """A handful of generated houses with sampled episodes."""
    houses = {}
    episodes = []
    for seed in range(6):
        house = generate_house(seed, GenerationSpec())
        houses[house.id] = house
        episodes.extend(sample_episodes(house, 6, seed=seed + 300).episodes)
    return houses, episodes
