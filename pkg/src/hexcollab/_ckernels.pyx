# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled hot kernels. Semantics match ``_pykernels`` exactly."""

from libc.stdlib cimport malloc, free

cdef int DQ[6]
cdef int DR[6]
DQ[:] = [1, 1, 0, -1, -1, 0]
DR[:] = [0, -1, -1, 0, 1, 1]


def bfs_pose(int width, int height, const unsigned char[:] passable,
             int sq, int sr, int sh, const unsigned char[:] goal):
    cdef int n = width * height * 6
    cdef int start = (sr * width + sq) * 6 + sh
    if goal[start]:
        return []
    cdef int *parent = <int *> malloc(n * sizeof(int))
    cdef signed char *via = <signed char *> malloc(n * sizeof(signed char))
    cdef int *queue = <int *> malloc(n * sizeof(int))
    if parent == NULL or via == NULL or queue == NULL:
        free(parent)
        free(via)
        free(queue)
        raise MemoryError()
    cdef int i, head = 0, tail = 0, node, cell, q, r, h, act, sign, nq, nr, nxt
    cdef int found = -1
    for i in range(n):
        parent[i] = -1
    parent[start] = start
    queue[tail] = start
    tail += 1
    try:
        while head < tail and found < 0:
            node = queue[head]
            head += 1
            h = node % 6
            cell = node // 6
            q = cell % width
            r = cell // width
            for act in range(4):
                if act < 2:
                    sign = 1 if act == 0 else -1
                    nq = q + sign * DQ[h]
                    nr = r + sign * DR[h]
                    if nq < 0 or nq >= width or nr < 0 or nr >= height:
                        continue
                    if not passable[nr * width + nq]:
                        continue
                    nxt = (nr * width + nq) * 6 + h
                elif act == 2:
                    nxt = cell * 6 + (h + 1) % 6
                else:
                    nxt = cell * 6 + (h + 5) % 6
                if parent[nxt] != -1:
                    continue
                parent[nxt] = node
                via[nxt] = act
                if goal[nxt]:
                    found = nxt
                    break
                queue[tail] = nxt
                tail += 1
        if found < 0:
            return None
        path = []
        node = found
        while node != start:
            path.append(via[node])
            node = parent[node]
        path.reverse()
        return path
    finally:
        free(parent)
        free(via)
        free(queue)


def has_valid_triple(colors, shapes, counts):
    cdef Py_ssize_t n = len(colors)
    cdef int *c = <int *> malloc(max(n, 1) * 3 * sizeof(int))
    if c == NULL:
        raise MemoryError()
    cdef Py_ssize_t i, j, k
    cdef int ci, si, ki, cj, sj, kj, ck, sk, kk
    try:
        for i in range(n):
            c[3 * i] = colors[i]
            c[3 * i + 1] = shapes[i]
            c[3 * i + 2] = counts[i]
        for i in range(n):
            ci = c[3 * i]; si = c[3 * i + 1]; ki = c[3 * i + 2]
            for j in range(i + 1, n):
                cj = c[3 * j]; sj = c[3 * j + 1]; kj = c[3 * j + 2]
                if ci == cj or si == sj or ki == kj:
                    continue
                for k in range(j + 1, n):
                    ck = c[3 * k]; sk = c[3 * k + 1]; kk = c[3 * k + 2]
                    if ck == ci or ck == cj or sk == si or sk == sj or kk == ki or kk == kj:
                        continue
                    return True
        return False
    finally:
        free(c)
