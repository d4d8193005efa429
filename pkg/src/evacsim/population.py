"""Agent state and the per-step perceive / decide / move rules.

The engine runs these rules vectorized over the whole population; the
functions here are the per-agent reference semantics and the API used by
tests and small scripts. Both paths must agree, and the engine tests
cross-check them on small instances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigError
from .geometry import (
    NEIGHBOR_ORDER,
    UNREACHABLE,
    Cell,
    DistanceField,
    FloorPlan,
    distance_fields,
)


@dataclass
class Agent:
    """One person: position, signage compliance, current target exit."""

    id: int
    pos: Cell
    compliant: bool
    target: Optional[int] = None
    evacuated_at: Optional[int] = None

    @property
    def evacuated(self) -> bool:
        return self.evacuated_at is not None


@dataclass(frozen=True)
class PaMessage:
    """Broadcast heard by everyone: which exit is blocked, where to go."""

    blocked_exit: int
    designated_exit: int

    def __post_init__(self):
        if self.blocked_exit == self.designated_exit:
            raise ConfigError(
                f"announcement blocks exit {self.blocked_exit} and designates it too"
            )


class Population:
    """Array-backed population owned by one simulation run.

    pos holds flat cell indices (y * width + x); evacuated_at is -1 until
    the agent leaves the grid. Iterating yields Agent snapshots.
    """

    def __init__(self, plan: FloorPlan, pos: np.ndarray, compliant: np.ndarray):
        self.plan = plan
        self.pos = pos.astype(np.int64)
        self.compliant = compliant.astype(bool)
        n = len(pos)
        self.target = np.zeros(n, dtype=np.int16)  # 0 = no target yet
        self.evacuated_at = np.full(n, -1, dtype=np.int32)
        self.active = np.ones(n, dtype=bool)

    @property
    def n(self) -> int:
        return len(self.pos)

    @property
    def evacuated_count(self) -> int:
        return int((~self.active).sum())

    def cell_of(self, i: int) -> Cell:
        p = int(self.pos[i])
        return (p % self.plan.width, p // self.plan.width)

    def agent(self, i: int) -> Agent:
        t = int(self.target[i])
        e = int(self.evacuated_at[i])
        return Agent(
            id=i,
            pos=self.cell_of(i),
            compliant=bool(self.compliant[i]),
            target=t if t > 0 else None,
            evacuated_at=e if e >= 0 else None,
        )

    def __iter__(self) -> Iterator[Agent]:
        return (self.agent(i) for i in range(self.n))

    def __len__(self) -> int:
        return self.n


def spawn_agents(
    plan: FloorPlan, n: int, p: float, seed: int | np.random.Generator
) -> Population:
    """Spawn n agents uniformly (with replacement) over walkable cells.

    Each agent's compliance flag is an independent Bernoulli(p) draw.
    Deterministic for a fixed seed; pass the run's Generator to keep one
    stream per run.
    """
    if not 0.0 <= p <= 1.0:
        raise ConfigError(f"compliance rate p={p} outside [0, 1]")
    if n < 0:
        raise ConfigError(f"agent count n={n} is negative")
    cells = plan.walkable_flat_indices()
    if n > 0 and len(cells) == 0:
        raise ConfigError("plan has no walkable cells to spawn on")
    rng = np.random.default_rng(seed)
    if n == 0:
        return Population(plan, np.empty(0, dtype=np.int64), np.empty(0, dtype=bool))
    idx = rng.integers(0, len(cells), size=n)
    compliant = rng.random(n) < p
    return Population(plan, cells[idx], compliant)


def receive_pa(
    population: Population,
    pa: PaMessage,
    plan: FloorPlan,
    fields: Optional[Dict[int, DistanceField]] = None,
) -> Population:
    """Point every non-evacuated agent at the designated exit.

    The blocked exit must never be selected by any later decision; the
    caller records it alongside the population. Rejected up front if the
    designated exit cannot be reached from every walkable cell.
    """
    if pa.designated_exit not in plan.exits:
        raise ConfigError(f"designated exit {pa.designated_exit} is not on the plan")
    if pa.blocked_exit not in plan.exits:
        raise ConfigError(f"blocked exit {pa.blocked_exit} is not on the plan")
    if fields is None:
        fields = distance_fields(plan)
    dist = fields[pa.designated_exit].dist
    if np.any(dist[plan.walkable] == UNREACHABLE):
        bad = int((dist[plan.walkable] == UNREACHABLE).sum())
        raise ConfigError(
            f"designated exit {pa.designated_exit} unreachable from {bad} walkable cells"
        )
    population.target[population.active] = pa.designated_exit
    return population


def perceive_signs(agent: Agent, signs: Sequence, plan: FloorPlan = None) -> List:
    """Signs within Euclidean visibility range of the agent, in sign order.

    The boundary is inclusive and walls do not occlude.
    """
    ax, ay = agent.pos
    visible = []
    for sign in signs:
        sx, sy = sign.pos
        d2 = (ax - sx) ** 2 + (ay - sy) ** 2
        if d2 <= sign.visibility_radius**2:
            visible.append(sign)
    return visible


def decide_target(agent: Agent, visible_signs: Sequence, current_step: int = 0):
    """Adopt the displayed exit of the nearest visible active sign.

    Only compliant agents follow signage; everyone else keeps their
    current target. Ties between equally near signs break toward the
    smallest sign id. Returns the (possibly unchanged) target.
    """
    if agent.evacuated:
        raise ConfigError(f"agent {agent.id} already evacuated")
    if not agent.compliant:
        return agent.target
    ax, ay = agent.pos
    best = None
    best_d2 = None
    for sign in visible_signs:
        if sign.displayed_exit is None:
            continue
        sx, sy = sign.pos
        d2 = (ax - sx) ** 2 + (ay - sy) ** 2
        if best_d2 is None or d2 < best_d2 or (d2 == best_d2 and sign.id < best.id):
            best = sign
            best_d2 = d2
    if best is not None:
        agent.target = best.displayed_exit
    return agent.target


def plan_move(
    agent: Agent,
    fields: Dict[int, DistanceField],
    blocked: Iterable[int] = (),
) -> Cell:
    """Desired next cell: the 4-neighbor that lowers distance to target.

    Strictly decreasing when possible; stays in place otherwise. Neighbor
    ties break in the fixed order N, E, S, W. Congestion is not this
    function's concern; the engine resolves conflicts afterwards.
    """
    if agent.target is None:
        raise ConfigError(f"agent {agent.id} has no target to move toward")
    if agent.target in set(blocked):
        raise ConfigError(f"agent {agent.id} targets blocked exit {agent.target}")
    field = fields[agent.target]
    x, y = agent.pos
    here = field.dist[y, x]
    if here == UNREACHABLE:
        raise ConfigError(
            f"exit {agent.target} unreachable from agent {agent.id} at ({x}, {y})"
        )
    best = (x, y)
    best_d = int(here)
    for dx, dy in NEIGHBOR_ORDER:
        nx, ny = x + dx, y + dy
        if not (0 <= nx < field.dist.shape[1] and 0 <= ny < field.dist.shape[0]):
            continue
        d = field.dist[ny, nx]
        if d != UNREACHABLE and d < best_d:
            best = (nx, ny)
            best_d = int(d)
    return best
