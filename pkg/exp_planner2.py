"""Scratch experiment v2: lexicographic (moves, turns) planner variants."""
import heapq
import random
from collections import deque

from gridnav.scene import GridMap, Pose, HEADINGS, ROTATIONS
from gridnav.housegen import generate_house
from gridnav.simulator import Simulation, observable_height
from gridnav.planner import nearest_grid_point, derive_actions, PlannedPath
from gridnav.actions import MOVE_AHEAD, ROTATE_LEFT, ROTATE_RIGHT


def plan_lex(grid, start, goal_cell, straight_first=False):
    """UCS minimizing (moves, turns) lexicographically."""
    if start.cell == goal_cell:
        return (start.cell,), 0, 0
    best = {(start.cell, start.rotation): (0, 0)}
    parent = {}
    counter = 0
    heap = [((0, 0), 0, start.cell, start.rotation)]
    while heap:
        (m, t), _, cell, direction = heapq.heappop(heap)
        if (m, t) > best.get((cell, direction), (m, t)):
            continue
        if cell == goal_cell:
            path = [cell]
            state = (cell, direction)
            while state in parent:
                state = parent[state]
                path.append(state[0])
            path.reverse()
            return tuple(path), m, t
        if straight_first:
            order = [direction] + [d for d in ROTATIONS if d != direction]
        else:
            order = ROTATIONS
        for ndir in order:
            dc, dr = HEADINGS[ndir]
            ncell = (cell[0] + dc, cell[1] + dr)
            if ncell not in grid.reachable:
                continue
            nmt = (m + 1, t + (0 if ndir == direction else 1))
            key = (ncell, ndir)
            if key not in best or nmt < best[key]:
                best[key] = nmt
                parent[key] = (cell, direction)
                counter += 1
                heapq.heappush(heap, (nmt, counter, ncell, ndir))
    raise RuntimeError("no path")


def dijkstra_min_cost12(grid, start, goal_cell):
    """Pure {1,2}-cost minimum over (cell, dir) states."""
    if start.cell == goal_cell:
        return 0
    best = {(start.cell, start.rotation): 0}
    heap = [(0, start.cell, start.rotation)]
    while heap:
        c, cell, direction = heapq.heappop(heap)
        if c > best.get((cell, direction), c):
            continue
        if cell == goal_cell:
            return c
        for ndir in ROTATIONS:
            dc, dr = HEADINGS[ndir]
            ncell = (cell[0] + dc, cell[1] + dr)
            if ncell not in grid.reachable:
                continue
            nc = c + (1 if ndir == direction else 2)
            key = (ncell, ndir)
            if key not in best or nc < best[key]:
                best[key] = nc
                heapq.heappush(heap, (nc, ncell, ndir))
    return None


def random_grid(rng, max_side=30, density=0.25):
    w = rng.randint(4, max_side)
    h = rng.randint(4, max_side)
    cells = {(c, r) for c in range(w) for r in range(h) if rng.random() > density}
    if not cells:
        cells = {(0, 0)}
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
                seen.add(n); q.append((n, d+1))
    return None


# --- criterion-1 style checks with the lexicographic planner ---
for label, max_side, trials in (("30x30/500", 30, 500), ("15x15/100", 15, 100)):
    rng = random.Random(9999)
    move_bad = cost_bad = 0
    for _ in range(trials):
        grid, cells = random_grid(rng, max_side)
        start = Pose(rng.choice(cells), rng.choice(ROTATIONS))
        goal = rng.choice(cells)
        path, m, t = plan_lex(grid, start, goal)
        d = bfs_dist(grid.reachable, start.cell, goal)
        if m != d:
            move_bad += 1
        c12 = m + t
        cmin = dijkstra_min_cost12(grid, start, goal)
        if c12 != cmin:
            cost_bad += 1
    print(f"{label}: move mismatches {move_bad}, cost-vs-pure-dijkstra mismatches {cost_bad}")

# --- rotation classifiability on generated houses, L-corridor obstacle rule ---
def classify(grid, cell, deg, goal):
    if cell == goal:
        return "view"
    fx, fy = HEADINGS[deg]
    along = fx * (goal[0] - cell[0]) + fy * (goal[1] - cell[1])
    if along == 0:
        return "zero"
    # L-corridor: straight |along| cells, then turn toward the remaining
    # cross displacement and walk it; blocked => obstacle.
    steps = []
    cur = cell
    for _ in range(abs(along)):
        cur = (cur[0] + fx * (1 if along > 0 else -1), cur[1] + fy * (1 if along > 0 else -1))
        steps.append(cur)
    cx = goal[0] - cur[0]
    cy = goal[1] - cur[1]
    sx = (1 if cx > 0 else -1) if cx else 0
    sy = (1 if cy > 0 else -1) if cy else 0
    for _ in range(abs(cx) + abs(cy)):
        cur = (cur[0] + sx, cur[1] + sy)  # only one of sx, sy nonzero on 4-grid L
        steps.append(cur)
    if any(s not in grid.reachable for s in steps):
        return "obstacle"
    return "unclassifiable"


for straight_first in (False, True):
    total_rot = 0
    counts = {"zero": 0, "obstacle": 0, "view": 0, "unclassifiable": 0}
    narrow_ok = 0
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
                pcells, m, t = plan_lex(grid, start, goal, straight_first)
            except RuntimeError:
                continue
            path = PlannedPath(pcells, start.rotation, m + t)
            acts = derive_actions(grid, path, start.rotation, target)
            sim = Simulation(house, start)
            for a in acts.actions:
                if a in (ROTATE_LEFT, ROTATE_RIGHT):
                    total_rot += 1
                    kind = classify(grid, sim.pose.cell, sim.pose.rotation, goal)
                    counts[kind] += 1
                    fx, fy = HEADINGS[sim.pose.rotation]
                    ahead = (sim.pose.cell[0] + fx, sim.pose.cell[1] + fy)
                    if kind == "obstacle" and ahead not in grid.reachable:
                        narrow_ok += 1
                if not sim.terminated:
                    sim.step(a)
    print(f"straight_first={straight_first}: rotations {total_rot} -> {counts}; "
          f"obstacle turns with blocked cell directly ahead: {narrow_ok}")
