"""Independent reference implementations used only by the tests.

Nothing here imports the code under test beyond plain data types, so a bug
in the package cannot hide behind an identical bug in its oracle.
"""

from __future__ import annotations

import itertools
from collections import deque

# Axial offsets for headings 0..5, heading 0 = +q, counter-clockwise.
OFFSETS = {0: (1, 0), 1: (1, -1), 2: (0, -1), 3: (-1, 0), 4: (-1, 1), 5: (0, 1)}


def grid_distance(a, b, radius: int = 64) -> int:
    """Hex distance by BFS on an unobstructed grid."""
    a, b = tuple(a), tuple(b)
    seen = {a: 0}
    todo = deque([a])
    while todo:
        c = todo.popleft()
        if c == b:
            return seen[c]
        for dq, dr in OFFSETS.values():
            n = (c[0] + dq, c[1] + dr)
            if n not in seen and abs(n[0] - a[0]) <= radius and abs(n[1] - a[1]) <= radius:
                seen[n] = seen[c] + 1
                todo.append(n)
    raise ValueError("target outside search radius")


def naive_pose_bfs(open_hexes: set, start: tuple, goal_hexes: set, goal_heading: int | None = None) -> int | None:
    """Length of the shortest (q, r, heading) path, or None.

    ``open_hexes`` is the set of enterable hexes; ``start`` is (q, r, h).
    """

    def is_goal(node):
        q, r, h = node
        return (q, r) in goal_hexes and (goal_heading is None or h == goal_heading)

    dist = {start: 0}
    todo = deque([start])
    while todo:
        node = todo.popleft()
        if is_goal(node):
            return dist[node]
        q, r, h = node
        dq, dr = OFFSETS[h]
        succ = [(q, r, (h + 1) % 6), (q, r, (h - 1) % 6)]
        for sign in (1, -1):
            n = (q + sign * dq, r + sign * dr)
            if n in open_hexes:
                succ.append((n[0], n[1], h))
        for s in succ:
            if s not in dist:
                dist[s] = dist[node] + 1
                todo.append(s)
    return None


def triple_is_set(a, b, c) -> bool:
    """Each attribute takes three different values across the triple."""
    return all(len({x[k], y[k], z[k]}) == 3 for x, y, z in [(a, b, c)] for k in range(3))


def enumerate_valid_triples(cards) -> list[tuple[int, int, int]]:
    """Every index triple of (color, shape, count) tuples forming a valid set."""
    return [t for t in itertools.combinations(range(len(cards)), 3) if triple_is_set(*(cards[i] for i in t))]


def completion_oracle(selected) -> str:
    """Classify a list of selected (color, shape, count) tuples."""
    if len(selected) > 3:
        return "invalid_selection"
    for x, y in itertools.combinations(selected, 2):
        if any(x[k] == y[k] for k in range(3)):
            return "invalid_selection"
    return "valid_set" if len(selected) == 3 else "none"


def flood_connected(open_hexes: set) -> bool:
    if not open_hexes:
        return False
    start = next(iter(open_hexes))
    seen = {start}
    todo = [start]
    while todo:
        q, r = todo.pop()
        for dq, dr in OFFSETS.values():
            n = (q + dq, r + dr)
            if n in open_hexes and n not in seen:
                seen.add(n)
                todo.append(n)
    return len(seen) == len(open_hexes)


def decode_planes(vocabulary, planes):
    """Recover cards and agent poses from a state tensor's bit planes."""
    idx = {n: i for i, n in enumerate(vocabulary)}
    _, w, h = planes.shape
    colors = [n for n in vocabulary if n not in ("passable", "selected", "leader", "follower")]
    cards = {}
    agents = {}
    for q in range(w):
        for r in range(h):
            counts = [k for k in (1, 2, 3) if planes[idx[f"count_{k}"], q, r]]
            if counts:
                shape = [s for s in colors if s in SHAPES and planes[idx[s], q, r]]
                color = [c for c in colors if c in COLORS and planes[idx[c], q, r]]
                cards[(q, r)] = (color[0], shape[0], counts[0], bool(planes[idx["selected"], q, r]))
            for agent in ("leader", "follower"):
                if planes[idx[agent], q, r]:
                    heading = [k for k in range(6) if planes[idx[f"{agent}_heading_{k}"], q, r]]
                    agents[agent] = ((q, r), heading[0])
    return cards, agents


COLORS = ("red", "blue", "green", "yellow", "orange", "pink")
SHAPES = ("heart", "star", "diamond", "square", "circle", "triangle")
