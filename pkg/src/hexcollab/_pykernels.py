"""Pure-Python implementations of the hot kernels.

Both functions mirror ``_ckernels.pyx`` exactly, including tie-breaking, so
either backend produces identical results.
"""

from __future__ import annotations

from collections import deque

# Axial direction offsets, heading 0 = +q, counter-clockwise.
DQ = (1, 1, 0, -1, -1, 0)
DR = (0, -1, -1, 0, 1, 1)

# Action codes, in expansion (tie-break) order.
MF, MB, RL, RR = 0, 1, 2, 3


def bfs_pose(width, height, passable, sq, sr, sh, goal):
    """Shortest action sequence over the (q, r, heading) pose graph.

    ``passable`` holds one byte per hex (index ``r * width + q``); ``goal``
    holds one byte per pose (index ``(r * width + q) * 6 + h``). Returns a
    list of action codes, or ``None`` when no goal pose is reachable.
    """
    start = (sr * width + sq) * 6 + sh
    if goal[start]:
        return []
    n = width * height * 6
    parent = [-1] * n
    via = [-1] * n
    parent[start] = start
    frontier = deque([start])
    while frontier:
        node = frontier.popleft()
        h = node % 6
        cell = node // 6
        q = cell % width
        r = cell // width
        for act in (MF, MB, RL, RR):
            if act == MF or act == MB:
                sign = 1 if act == MF else -1
                nq = q + sign * DQ[h]
                nr = r + sign * DR[h]
                if nq < 0 or nq >= width or nr < 0 or nr >= height:
                    continue
                if not passable[nr * width + nq]:
                    continue
                nxt = (nr * width + nq) * 6 + h
            elif act == RL:
                nxt = cell * 6 + (h + 1) % 6
            else:
                nxt = cell * 6 + (h + 5) % 6
            if parent[nxt] != -1:
                continue
            parent[nxt] = node
            via[nxt] = act
            if goal[nxt]:
                path = []
                while nxt != start:
                    path.append(via[nxt])
                    nxt = parent[nxt]
                path.reverse()
                return path
            frontier.append(nxt)
    return None


def has_valid_triple(colors, shapes, counts):
    """True iff some triple of cards has pairwise-distinct attributes."""
    n = len(colors)
    for i in range(n):
        ci, si, ki = colors[i], shapes[i], counts[i]
        for j in range(i + 1, n):
            cj, sj, kj = colors[j], shapes[j], counts[j]
            if ci == cj or si == sj or ki == kj:
                continue
            for k in range(j + 1, n):
                ck, sk, kk = colors[k], shapes[k], counts[k]
                if ck == ci or ck == cj or sk == si or sk == sj or kk == ki or kk == kj:
                    continue
                return True
    return False
