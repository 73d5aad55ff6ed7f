"""Scratch experiment: planner move-count optimality + rotation classifiability."""
import random
from collections import deque

from gridnav.planner import plan_shortest_path, derive_actions, nearest_grid_point
from gridnav.scene import GridMap, Pose, HEADINGS, ROTATIONS
from gridnav.actions import MOVE_AHEAD, ROTATE_LEFT, ROTATE_RIGHT
from gridnav.housegen import generate_house
from gridnav.simulator import Simulation, observable_height


def random_grid(rng, max_side=30, density=0.25):
    w = rng.randint(4, max_side)
    h = rng.randint(4, max_side)
    cells = {(c, r) for c in range(w) for r in range(h) if rng.random() > density}
    if not cells:
        cells = {(0, 0)}
    # largest connected component
    comps = []
    remaining = set(cells)
    while remaining:
        s = remaining.pop()
        comp = {s}
        q = [s]
        while q:
            c, r = q.pop()
            for n in ((c, r+1), (c+1, r), (c, r-1), (c-1, r)):
                if n in remaining:
                    remaining.remove(n); comp.add(n); q.append(n)
        comps.append(comp)
    comp = max(comps, key=len)
    return GridMap(width=w, height=h, reachable=frozenset(comp)), sorted(comp)


def bfs_dist(reachable, start, goal):
    seen = {start}
    q = deque([(start, 0)])
    while q:
        cell, d = q.popleft()
        if cell == goal:
            return d
        c, r = cell
        for n in ((c, r+1), (c+1, r), (c, r-1), (c-1, r)):
            if n in reachable and n not in seen:
                seen.add(n)
                q.append((n, d+1))
    return None


rng = random.Random(12345)
mismatch = 0
total = 0
for trial in range(500):
    grid, cells = random_grid(rng)
    start = rng.choice(cells)
    goal = rng.choice(cells)
    rot = rng.choice(ROTATIONS)
    path = plan_shortest_path(grid, Pose(start, rot), goal)
    d = bfs_dist(grid.reachable, start, goal)
    total += 1
    if path.move_count != d:
        mismatch += 1
        if mismatch <= 5:
            print(f"MISMATCH trial {trial}: moves={path.move_count} bfs={d} "
                  f"{grid.width}x{grid.height} start={start} rot={rot} goal={goal}")
print(f"move-count vs BFS: {total-mismatch}/{total} match")

# rotation classifiability on generated houses
unclass = 0
total_rot = 0
kinds = {"zero": 0, "obstacle": 0, "view": 0}
for seed in range(30):
    house = generate_house(seed)
    grid = house.grid
    cells = sorted(grid.reachable)
    hrng = random.Random(seed * 77 + 1)
    eligible = [o for o in house.objects if observable_height(o)]
    for ep in range(8):
        start = Pose(hrng.choice(cells), hrng.choice(ROTATIONS))
        target = hrng.choice(eligible)
        goal = nearest_grid_point(grid, target.position)
        try:
            path = plan_shortest_path(grid, start, goal)
        except Exception:
            continue
        acts = derive_actions(grid, path, start.rotation, target)
        # replay and classify rotations
        sim = Simulation(house, start)
        for a in acts.actions:
            if a in (ROTATE_LEFT, ROTATE_RIGHT):
                total_rot += 1
                cell = sim.pose.cell
                deg = sim.pose.rotation
                if cell == goal:
                    kinds["view"] += 1
                else:
                    fx, fy = HEADINGS[deg]
                    along = fx * (goal[0]-cell[0]) + fy * (goal[1]-cell[1])
                    if along == 0:
                        kinds["zero"] += 1
                    elif (cell[0]+fx, cell[1]+fy) not in grid.reachable:
                        kinds["obstacle"] += 1
                    else:
                        unclass += 1
            if not sim.terminated:
                sim.step(a)
print(f"rotations: {total_rot} classified {kinds} unclassifiable {unclass}")
