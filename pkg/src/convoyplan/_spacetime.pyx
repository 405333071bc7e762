# cython: boundscheck=False, wraparound=False, cdivision=True
# cython: language_level=3
"""Compiled space-time search kernel; behavioural twin of _spacetime_py.

Same state encoding and tie-breaking as the pure-Python module: heap keys
pack (f, GMAX - g, x, y) into one int64, states are discovered at most once
because g always equals the relative timestep.
"""

from array import array

from libc.stdlib cimport free, malloc, realloc
from libc.string cimport memset

BACKEND = "c"

DEF GMAX = 0xFFFFF
DEF UNDISCOVERED = 255
DEF MAX_STATES = 67108864  # 1 << 26


cdef inline bint _blocked(const long long[:] codes, Py_ssize_t n, long long code) nogil:
    cdef Py_ssize_t lo = 0, hi = n, mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if codes[mid] < code:
            lo = mid + 1
        else:
            hi = mid
    return lo < n and codes[lo] == code


cdef inline int _heap_push(long long** heap, Py_ssize_t* n, Py_ssize_t* cap, long long key) except -1:
    cdef long long* grown
    cdef Py_ssize_t i, p
    if n[0] == cap[0]:
        cap[0] = cap[0] * 2
        grown = <long long*> realloc(heap[0], cap[0] * sizeof(long long))
        if grown == NULL:
            raise MemoryError()
        heap[0] = grown
    i = n[0]
    n[0] += 1
    while i > 0:
        p = (i - 1) >> 1
        if heap[0][p] <= key:
            break
        heap[0][i] = heap[0][p]
        i = p
    heap[0][i] = key
    return 0


cdef inline long long _heap_pop(long long* heap, Py_ssize_t* n) nogil:
    cdef long long top = heap[0]
    cdef long long last
    cdef Py_ssize_t i = 0, child
    n[0] -= 1
    last = heap[n[0]]
    while True:
        child = 2 * i + 1
        if child >= n[0]:
            break
        if child + 1 < n[0] and heap[child + 1] < heap[child]:
            child += 1
        if heap[child] >= last:
            break
        heap[i] = heap[child]
        i = child
    heap[i] = last
    return top


def grid_distances(anchor_ok, int width, int height, int source):
    """BFS step counts from `source` over cells where anchor_ok is set; -1 if cut off."""
    cdef const unsigned char[:] ok = anchor_ok
    cdef int ncells = width * height
    result = array("i", bytes(4 * ncells))
    cdef int[:] dist = result
    cdef int* queue
    cdef int head = 0, tail = 0
    cdef int idx, d, x, y, nx, ny, nidx, k
    cdef int* dx = [0, 1, -1, 0, 0]
    cdef int* dy = [0, 0, 0, 1, -1]
    for idx in range(ncells):
        dist[idx] = -1
    if source < 0 or source >= ncells or not ok[source]:
        return result
    queue = <int*> malloc(ncells * sizeof(int))
    if queue == NULL:
        raise MemoryError()
    try:
        dist[source] = 0
        queue[tail] = source
        tail += 1
        while head < tail:
            idx = queue[head]
            head += 1
            d = dist[idx] + 1
            x = idx % width
            y = idx / width
            for k in range(1, 5):
                nx = x + dx[k]
                ny = y + dy[k]
                if 0 <= nx < width and 0 <= ny < height:
                    nidx = ny * width + nx
                    if ok[nidx] and dist[nidx] < 0:
                        dist[nidx] = d
                        queue[tail] = nidx
                        tail += 1
    finally:
        free(queue)
    return result


def find_path_spacetime(
    anchor_ok,
    int width,
    int height,
    dist_table,
    int start,
    int goal,
    long long max_rel_t,
    blocked_sorted,
    long long min_goal_rel=0,
):
    """A* from (start, 0) to the earliest (goal, t) with t >= min_goal_rel.

    Same contract as _spacetime_py.find_path_spacetime.
    """
    if width > 1024 or height > 1024:
        raise ValueError("grid dimensions above 1024 are not supported")
    cdef long long ncells = width * height
    if max_rel_t < 0 or (max_rel_t + 1) * ncells > MAX_STATES:
        raise ValueError("search horizon out of range")
    cdef const unsigned char[:] ok = anchor_ok
    cdef const int[:] dist = dist_table
    cdef const long long[:] blocked = blocked_sorted
    cdef Py_ssize_t nblocked = blocked.shape[0]
    if not ok[start] or not ok[goal]:
        return None
    if dist[start] < 0:
        return None
    if _blocked(blocked, nblocked, <long long> start):
        return None

    cdef long long nstates = ncells * (max_rel_t + 1)
    cdef unsigned char* parent = <unsigned char*> malloc(nstates)
    if parent == NULL:
        raise MemoryError()
    memset(parent, UNDISCOVERED, nstates)
    cdef Py_ssize_t heap_n = 0, heap_cap = 1024
    cdef long long* heap = <long long*> malloc(heap_cap * sizeof(long long))
    if heap == NULL:
        free(parent)
        raise MemoryError()

    cdef long long key, g, ng, h0, hd, slack, base, scode
    cdef long long x, y, nx, ny, idx, nidx
    cdef int k
    cdef int* dx = [0, 1, -1, 0, 0]
    cdef int* dy = [0, 0, 0, 1, -1]

    try:
        parent[start] = 5
        h0 = dist[start]
        if min_goal_rel > h0:
            h0 = min_goal_rel
        key = (h0 << 40) | (<long long> GMAX << 20) | ((start % width) << 10) | (start / width)
        _heap_push(&heap, &heap_n, &heap_cap, key)
        while heap_n > 0:
            key = _heap_pop(heap, &heap_n)
            y = key & 1023
            x = (key >> 10) & 1023
            g = GMAX - ((key >> 20) & GMAX)
            idx = y * width + x
            if idx == goal and g >= min_goal_rel:
                return _reconstruct(parent, width, ncells, goal, g, dx, dy)
            if g == max_rel_t:
                continue
            ng = g + 1
            base = ng * ncells
            for k in range(5):
                nx = x + dx[k]
                ny = y + dy[k]
                if nx < 0 or nx >= width or ny < 0 or ny >= height:
                    continue
                nidx = ny * width + nx
                if not ok[nidx]:
                    continue
                hd = dist[nidx]
                if hd < 0:
                    continue
                scode = base + nidx
                if parent[scode] != UNDISCOVERED or _blocked(blocked, nblocked, scode):
                    continue
                parent[scode] = <unsigned char> k
                slack = min_goal_rel - ng
                if slack > hd:
                    hd = slack
                _heap_push(
                    &heap, &heap_n, &heap_cap,
                    ((ng + hd) << 40) | ((GMAX - ng) << 20) | (nx << 10) | ny,
                )
        return None
    finally:
        free(heap)
        free(parent)


cdef list _reconstruct(unsigned char* parent, long long width, long long ncells,
                       long long goal, long long arrival, int* dx, int* dy):
    cdef list out = [0] * (arrival + 1)
    cdef long long idx = goal, rel
    cdef int k
    for rel in range(arrival, -1, -1):
        out[rel] = idx
        if rel:
            k = parent[rel * ncells + idx]
            idx = (idx % width - dx[k]) + (idx / width - dy[k]) * width
    return out
