"""Hot loops compiled with numba.

Falls back to plain Python if numba is unavailable; the semantics are
identical either way, only the speed differs.
"""

import numpy as np

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(func):
            return func

        return wrap


@njit(cache=True)
def bfs_distances(walkable, start_x, start_y):
    """4-neighbor BFS hop counts from (start_x, start_y) over walkable cells.

    Returns an int32 [height, width] grid; -1 marks unreachable cells.
    """
    h, w = walkable.shape
    dist = np.full((h, w), -1, dtype=np.int32)
    qx = np.empty(h * w, dtype=np.int32)
    qy = np.empty(h * w, dtype=np.int32)
    head = 0
    tail = 0
    dist[start_y, start_x] = 0
    qx[tail] = start_x
    qy[tail] = start_y
    tail += 1
    while head < tail:
        x = qx[head]
        y = qy[head]
        head += 1
        d = dist[y, x] + 1
        # N, E, S, W
        for k in range(4):
            if k == 0:
                nx, ny = x, y - 1
            elif k == 1:
                nx, ny = x + 1, y
            elif k == 2:
                nx, ny = x, y + 1
            else:
                nx, ny = x - 1, y
            if 0 <= nx < w and 0 <= ny < h and walkable[ny, nx] and dist[ny, nx] < 0:
                dist[ny, nx] = d
                qx[tail] = nx
                qy[tail] = ny
                tail += 1
    return dist


@njit(cache=True)
def resolve_moves(order, proposal, pos, occupancy, capacity):
    """Apply movement proposals one agent at a time, in `order`.

    An agent moves to proposal[i] only if that cell currently holds fewer
    than `capacity` agents at its turn; otherwise it stays. Agents that
    leave a cell free its slot for agents processed later in the same pass.
    proposal[i] < 0 means "no move requested". Mutates pos and occupancy.
    """
    for k in range(order.shape[0]):
        i = order[k]
        dest = proposal[i]
        if dest < 0:
            continue
        cur = pos[i]
        if dest == cur:
            continue
        if occupancy[dest] < capacity:
            occupancy[cur] -= 1
            occupancy[dest] += 1
            pos[i] = dest
