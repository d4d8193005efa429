"""Floor plans, map file I/O, and per-exit BFS distance fields.

Space is a grid of 1 m x 1 m cells with 4-connected movement. Exit cells
are walkable; each exit id appears on exactly one cell. Routing distance
is the BFS hop count, which makes "nearest exit" unambiguous on a grid.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Dict, Iterable, Optional, Tuple

import numpy as np

from ._kernels import bfs_distances
from .errors import MapError

Cell = Tuple[int, int]  # (x, y); numpy grids are indexed [y, x]

WALL_CHAR = "#"
WALK_CHAR = "."
EXIT_CHARS = "123456789ABCDE"  # exit ids 1..14
MAX_EXITS = len(EXIT_CHARS)

UNREACHABLE = -1

# Fixed tie-break order for movement: N, E, S, W.
NEIGHBOR_ORDER: Tuple[Cell, ...] = ((0, -1), (1, 0), (0, 1), (-1, 0))


@dataclass(eq=False)
class FloorPlan:
    """Immutable grid of walls, walkable cells, and numbered exit cells."""

    width: int
    height: int
    walkable: np.ndarray  # bool [height, width]
    exit_id_at: np.ndarray  # int16 [height, width]; 0 = no exit here
    exits: Dict[int, Cell]  # exit id -> (x, y)
    cell_size: float = 1.0

    def __post_init__(self):
        self.walkable.setflags(write=False)
        self.exit_id_at.setflags(write=False)

    def in_bounds(self, x: int, y: int) -> bool:
        return 0 <= x < self.width and 0 <= y < self.height

    def is_walkable(self, x: int, y: int) -> bool:
        return self.in_bounds(x, y) and bool(self.walkable[y, x])

    @property
    def walkable_count(self) -> int:
        return int(self.walkable.sum())

    def walkable_flat_indices(self) -> np.ndarray:
        """Flat indices (y * width + x) of all walkable cells, row-major."""
        return np.flatnonzero(self.walkable.ravel())

    def exit_ids(self) -> Tuple[int, ...]:
        return tuple(sorted(self.exits))

    def __eq__(self, other) -> bool:
        if not isinstance(other, FloorPlan):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and np.array_equal(self.walkable, other.walkable)
            and np.array_equal(self.exit_id_at, other.exit_id_at)
            and self.exits == other.exits
        )

    def __ne__(self, other) -> bool:
        result = self.__eq__(other)
        return result if result is NotImplemented else not result


@dataclass(eq=False)
class DistanceField:
    """BFS hop counts from every walkable cell to one exit.

    dist is int32 [height, width]; UNREACHABLE (-1) marks cells with no
    4-connected walkable path to the exit, and all wall cells.
    """

    exit_id: int
    dist: np.ndarray

    def __post_init__(self):
        self.dist.setflags(write=False)

    def at(self, x: int, y: int) -> int:
        return int(self.dist[y, x])

    def reachable(self, x: int, y: int) -> bool:
        return self.dist[y, x] != UNREACHABLE


def parse_map(text: str) -> FloorPlan:
    """Parse map text: '#' wall, '.' walkable, '1'-'9'/'A'-'E' exits 1-14.

    Rows must be equal length; at least one exit is required; every exit
    id may appear at most once. Errors report 1-based line/column.
    """
    lines = text.splitlines()
    while lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise MapError("map is empty")
    width = len(lines[0])
    height = len(lines)
    if width == 0:
        raise MapError("line 1 is empty")
    walkable = np.zeros((height, width), dtype=bool)
    exit_id_at = np.zeros((height, width), dtype=np.int16)
    exits: Dict[int, Cell] = {}
    for y, line in enumerate(lines):
        if len(line) != width:
            raise MapError(
                f"line {y + 1}: row length {len(line)} differs from line 1 length {width}"
            )
        for x, ch in enumerate(line):
            if ch == WALL_CHAR:
                continue
            if ch == WALK_CHAR:
                walkable[y, x] = True
                continue
            idx = EXIT_CHARS.find(ch)
            if idx < 0:
                raise MapError(f"line {y + 1}, column {x + 1}: unknown symbol {ch!r}")
            exit_id = idx + 1
            if exit_id in exits:
                raise MapError(
                    f"line {y + 1}, column {x + 1}: duplicate exit id {exit_id}"
                )
            walkable[y, x] = True
            exit_id_at[y, x] = exit_id
            exits[exit_id] = (x, y)
    if not exits:
        raise MapError("map defines no exits")
    return FloorPlan(width, height, walkable, exit_id_at, exits)


def render_map(plan: FloorPlan) -> str:
    """Write a plan back to map text. Inverse of parse_map."""
    rows = []
    for y in range(plan.height):
        chars = []
        for x in range(plan.width):
            eid = int(plan.exit_id_at[y, x])
            if eid:
                chars.append(EXIT_CHARS[eid - 1])
            elif plan.walkable[y, x]:
                chars.append(WALK_CHAR)
            else:
                chars.append(WALL_CHAR)
        rows.append("".join(chars))
    return "\n".join(rows) + "\n"


def load_map(path) -> FloorPlan:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_map(fh.read())


def distance_field(plan: FloorPlan, exit_id: int) -> DistanceField:
    """BFS hop distances over 4-connected walkable cells to one exit."""
    if exit_id not in plan.exits:
        raise MapError(f"unknown exit id {exit_id}")
    x, y = plan.exits[exit_id]
    dist = bfs_distances(plan.walkable, x, y)
    return DistanceField(exit_id, dist)


def distance_fields(plan: FloorPlan) -> Dict[int, DistanceField]:
    """Distance fields for every exit, keyed by exit id."""
    return {eid: distance_field(plan, eid) for eid in plan.exit_ids()}


def nearest_exit(
    plan: FloorPlan,
    cell: Cell,
    blocked: Iterable[int] = (),
    fields: Optional[Dict[int, DistanceField]] = None,
) -> int:
    """Reachable non-blocked exit with minimal BFS distance from cell.

    Ties break toward the smallest exit id. Raises MapError when the cell
    is not walkable or when no non-blocked exit is reachable.
    """
    x, y = cell
    if not plan.is_walkable(x, y):
        raise MapError(f"cell ({x}, {y}) is not walkable")
    if fields is None:
        fields = distance_fields(plan)
    blocked = set(blocked)
    best_id = None
    best_d = None
    for eid in plan.exit_ids():
        if eid in blocked:
            continue
        d = fields[eid].dist[y, x]
        if d == UNREACHABLE:
            continue
        if best_d is None or d < best_d:
            best_d = int(d)
            best_id = eid
    if best_id is None:
        raise MapError(f"no reachable non-blocked exit from ({x}, {y})")
    return best_id


# --- synthetic mall -------------------------------------------------------

# The real venue's geometry is unpublished, so a seeded generator stands in:
# a corridor-and-hall skeleton whose shop blocks are opened cell by cell
# until the walkable area is exactly MALL_WALKABLE_CELLS. Exits sit on the
# boundary wall, one per corridor end, numbered clockwise from the top-left.

MALL_WIDTH = 112
MALL_HEIGHT = 62
MALL_WALKABLE_CELLS = 4000
MALL_EXIT_COUNT = 14

_VERT_CORRIDOR_X = (8, 23, 38, 55, 71, 87, 102)  # each 2 cells wide
_HALL_ROWS = (29, 30, 31, 32)  # central hall, 4 cells wide
_UPPER_ROWS = (10, 11)
_LOWER_ROWS = (50, 51)

# (exit id, (x, y) on the boundary), clockwise from top-left.
_MALL_EXITS: Tuple[Tuple[int, Cell], ...] = (
    (1, (8, 0)),
    (2, (38, 0)),
    (3, (71, 0)),
    (4, (102, 0)),
    (5, (111, 10)),
    (6, (111, 30)),
    (7, (111, 50)),
    (8, (102, 61)),
    (9, (71, 61)),
    (10, (38, 61)),
    (11, (8, 61)),
    (12, (0, 50)),
    (13, (0, 30)),
    (14, (0, 10)),
)


def generate_synthetic_mall(seed: int = 0) -> FloorPlan:
    """Deterministic corridor-and-hall floor plan with 14 boundary exits.

    The walkable area is exactly MALL_WALKABLE_CELLS (exit cells included)
    so that a population of 4000 spawns at one person per square meter.
    The seed only varies how far each shop block is opened up; corridors
    and exits are fixed.
    """
    rng = np.random.default_rng(seed)
    w, h = MALL_WIDTH, MALL_HEIGHT
    walkable = np.zeros((h, w), dtype=bool)

    for rows in (_HALL_ROWS, _UPPER_ROWS, _LOWER_ROWS):
        for y in rows:
            walkable[y, 1 : w - 1] = True
    for x0 in _VERT_CORRIDOR_X:
        for x in (x0, x0 + 1):
            walkable[1 : h - 1, x] = True

    exit_id_at = np.zeros((h, w), dtype=np.int16)
    exits: Dict[int, Cell] = {}
    for eid, (x, y) in _MALL_EXITS:
        walkable[y, x] = True
        exit_id_at[y, x] = eid
        exits[eid] = (x, y)

    # Open shop cells adjacent to the walkable frontier, one at a time in
    # seeded random order, until the count is exact. Growth from walkable
    # neighbors keeps the plan connected by construction.
    target = MALL_WALKABLE_CELLS
    count = int(walkable.sum())
    if count > target:
        raise AssertionError("corridor skeleton exceeds the walkable budget")
    interior = np.zeros((h, w), dtype=bool)
    interior[1 : h - 1, 1 : w - 1] = True
    frontier = _wall_frontier(walkable, interior)
    frontier_list = sorted(frontier)
    while count < target:
        if not frontier_list:
            raise AssertionError("ran out of cells to open before reaching the budget")
        k = int(rng.integers(len(frontier_list)))
        x, y = frontier_list.pop(k)
        frontier.discard((x, y))
        if walkable[y, x]:
            continue
        walkable[y, x] = True
        count += 1
        for dx, dy in NEIGHBOR_ORDER:
            nx, ny = x + dx, y + dy
            if interior[ny, nx] and not walkable[ny, nx] and (nx, ny) not in frontier:
                frontier.add((nx, ny))
                frontier_list.append((nx, ny))

    plan = FloorPlan(w, h, walkable, exit_id_at, exits)
    field0 = distance_field(plan, 1)
    if not np.all(field0.dist[plan.walkable] >= 0):
        raise AssertionError("generated mall is not fully connected")
    return plan


def _wall_frontier(walkable: np.ndarray, interior: np.ndarray) -> set:
    """Interior wall cells 4-adjacent to at least one walkable cell."""
    h, w = walkable.shape
    near = np.zeros_like(walkable)
    near[1:, :] |= walkable[:-1, :]
    near[:-1, :] |= walkable[1:, :]
    near[:, 1:] |= walkable[:, :-1]
    near[:, :-1] |= walkable[:, 1:]
    cells = np.argwhere(near & interior & ~walkable)
    return {(int(x), int(y)) for y, x in cells}


@lru_cache(maxsize=1)
def default_mall() -> FloorPlan:
    """The frozen floor plan shipped with the package."""
    text = resources.files("evacsim.data").joinpath("mall.map").read_text("utf-8")
    return parse_map(text)
