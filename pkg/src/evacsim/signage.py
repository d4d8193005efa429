"""Digital signs: placement presets, density sensing, display control.

Signs show promotional content (modeled as inactive) until the public
announcement fires. From then on they display an exit number. In the
default mode that number is frozen at the nearest open exit; in the
congestion mode a controller may switch a sign to a fallback exit, either
when local density crosses a threshold (policy P1) or when density is
growing too fast (policy P2). There is no hysteresis: a sign re-evaluates
every tick and may revert as soon as its trigger clears.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from importlib import resources
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np

from .errors import ConfigError
from .geometry import Cell, DistanceField, FloorPlan, nearest_exit

DEFAULT_RADIUS_M = 10.0


@dataclass
class Sign:
    """One display: grid position, current message, recent density readings."""

    id: int
    pos: Cell
    visibility_radius: float = DEFAULT_RADIUS_M
    displayed_exit: Optional[int] = None  # None = inactive (promo content)
    density_history: deque = field(default_factory=deque)

    @property
    def active(self) -> bool:
        return self.displayed_exit is not None


@dataclass(frozen=True)
class ControllerConfig:
    """Display-controller parameters shared by every sign in a run."""

    mode: str = "default"  # "default" | "congestion"
    policy: str = "p1"  # "p1" | "p2", used only in congestion mode
    theta: float = 1.5  # persons/m2 threshold for P1
    delta: float = 0.05  # persons/m2-per-step growth threshold for P2
    window: int = 10  # readings kept for P2's slope estimate
    sensing_radius: float = DEFAULT_RADIUS_M

    def __post_init__(self):
        if self.mode not in ("default", "congestion"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.policy not in ("p1", "p2"):
            raise ConfigError(f"unknown policy {self.policy!r}")
        if not self.theta > 0:
            raise ConfigError(f"theta={self.theta} must be > 0")
        if not self.delta > 0:
            raise ConfigError(f"delta={self.delta} must be > 0")
        if self.window < 2:
            raise ConfigError(f"window={self.window} must be >= 2")
        if not self.sensing_radius > 0:
            raise ConfigError(f"sensing_radius={self.sensing_radius} must be > 0")


@dataclass(frozen=True)
class DensityReading:
    """Persons per square meter around one sign at one step."""

    sign_id: int
    step: int
    value: float


def parse_sign_layout(text: str) -> List[Cell]:
    """Parse a plain-text coordinate list: one 'x,y' pair per line."""
    positions: List[Cell] = []
    for ln, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        parts = [p.strip() for p in body.split(",")]
        if len(parts) != 2:
            raise ConfigError(f"sign layout line {ln}: expected 'x,y', got {line!r}")
        try:
            positions.append((int(parts[0]), int(parts[1])))
        except ValueError:
            raise ConfigError(
                f"sign layout line {ln}: non-integer coordinate in {line!r}"
            ) from None
    return positions


def default_sign_layout() -> List[Cell]:
    """The frozen sign positions shipped with the package (8 signs)."""
    text = (
        resources.files("evacsim.data").joinpath("signs_default.txt").read_text("utf-8")
    )
    return parse_sign_layout(text)


def place_signs(
    plan: FloorPlan,
    s: int,
    layout: Optional[Sequence[Cell]] = None,
    visibility_radius: float = DEFAULT_RADIUS_M,
) -> List[Sign]:
    """First s positions of the layout become signs with ids 1..s.

    Presets nest by construction: s=4 uses the first four positions of
    the 8-sign default layout. Signs stay inactive until the PA fires.
    """
    if layout is None:
        layout = default_sign_layout()
    if s < 0:
        raise ConfigError(f"sign count s={s} is negative")
    if s > len(layout):
        raise ConfigError(f"sign count s={s} exceeds layout capacity {len(layout)}")
    chosen = list(layout[:s])
    seen: Set[Cell] = set()
    signs = []
    for i, (x, y) in enumerate(chosen, start=1):
        if not plan.in_bounds(x, y):
            raise ConfigError(f"sign position ({x}, {y}) is outside the plan")
        if not plan.is_walkable(x, y):
            raise ConfigError(f"sign position ({x}, {y}) is not a walkable cell")
        if (x, y) in seen:
            raise ConfigError(f"duplicate sign position ({x}, {y})")
        seen.add((x, y))
        signs.append(Sign(id=i, pos=(x, y), visibility_radius=visibility_radius))
    return signs


def cells_within_radius(plan: FloorPlan, center: Cell, radius: float) -> np.ndarray:
    """Flat indices of walkable cells within Euclidean radius of center."""
    cx, cy = center
    ys, xs = np.nonzero(plan.walkable)
    d2 = (xs - cx) ** 2 + (ys - cy) ** 2
    keep = d2 <= radius * radius
    return (ys[keep] * plan.width + xs[keep]).astype(np.int64)


def measure_density(
    plan: FloorPlan,
    population,
    sign: Sign,
    sensing_radius: float = DEFAULT_RADIUS_M,
    step: int = 0,
    region: Optional[np.ndarray] = None,
) -> DensityReading:
    """Non-evacuated agents within sensing range / walkable cells in range.

    `region` may carry the precomputed walkable-cell indices for the
    sign's disc (the engine does this); it must equal
    cells_within_radius(plan, sign.pos, sensing_radius).
    """
    if region is None:
        region = cells_within_radius(plan, sign.pos, sensing_radius)
    if len(region) == 0:
        raise ConfigError(f"sign at {sign.pos} senses no walkable cells")
    sx, sy = sign.pos
    pos = population.pos[population.active]
    xs = pos % plan.width
    ys = pos // plan.width
    d2 = (xs - sx) ** 2 + (ys - sy) ** 2
    count = int((d2 <= sensing_radius * sensing_radius).sum())
    return DensityReading(sign_id=sign.id, step=step, value=count / len(region))


def activate_default(
    signs: Sequence[Sign],
    plan: FloorPlan,
    blocked: Iterable[int],
    fields: Optional[Dict[int, DistanceField]] = None,
) -> None:
    """Switch every sign to its nearest open exit (the PA-time message)."""
    blocked = set(blocked)
    for sign in signs:
        sign.displayed_exit = nearest_exit(plan, sign.pos, blocked, fields)


def select_redirect_exit(
    plan: FloorPlan,
    sign: Sign,
    congested_exits: Iterable[int],
    blocked: Iterable[int],
    fields: Optional[Dict[int, DistanceField]] = None,
) -> int:
    """Nearest open exit from the sign, skipping congested ones.

    congested_exits holds the nearest exit of every currently congested
    sign. If skipping them leaves nothing, fall back to the plain nearest
    open exit. Ties break toward the smallest exit id.
    """
    from .geometry import UNREACHABLE, distance_fields

    if fields is None:
        fields = distance_fields(plan)
    blocked = set(blocked)
    congested = set(congested_exits)
    x, y = sign.pos
    best_id = None
    best_d = None
    for eid in plan.exit_ids():
        if eid in blocked or eid in congested:
            continue
        d = fields[eid].dist[y, x]
        if d == UNREACHABLE:
            continue
        if best_d is None or d < best_d:
            best_d = int(d)
            best_id = eid
    if best_id is None:
        return nearest_exit(plan, sign.pos, blocked, fields)
    return best_id


def controller_tick_p1(
    sign: Sign,
    reading: DensityReading,
    cfg: ControllerConfig,
    plan: FloorPlan,
    congested_exits: Set[int],
    blocked: Iterable[int],
    fields: Optional[Dict[int, DistanceField]] = None,
) -> Optional[int]:
    """Density-threshold policy: redirect while the reading exceeds theta.

    Returns the new displayed exit, or None when the display is unchanged.
    Strict threshold: a reading equal to theta does not trigger.
    """
    nearest = nearest_exit(plan, sign.pos, blocked, fields)
    if reading.value > cfg.theta:
        if sign.displayed_exit == nearest:
            new = select_redirect_exit(plan, sign, congested_exits, blocked, fields)
        else:
            return None  # already redirected; hold until the reading drops
    else:
        new = nearest
    if new == sign.displayed_exit:
        return None
    sign.displayed_exit = new
    return new


def density_slope(sign: Sign, window: int) -> Optional[float]:
    """Per-step density change over the sign's full window, else None."""
    if len(sign.density_history) < window:
        return None
    newest = sign.density_history[-1]
    oldest = sign.density_history[0]
    return (newest - oldest) / (window - 1)


def controller_tick_p2(
    sign: Sign,
    cfg: ControllerConfig,
    plan: FloorPlan,
    congested_exits: Set[int],
    blocked: Iterable[int],
    fields: Optional[Dict[int, DistanceField]] = None,
) -> Optional[int]:
    """Density-growth policy: redirect while density rises faster than delta.

    Needs a full window of readings; with a falling or flat trend the sign
    shows its nearest open exit, and in between the display holds.
    Returns the new displayed exit, or None when unchanged.
    """
    g = density_slope(sign, cfg.window)
    if g is None:
        return None
    if g > cfg.delta:
        new = select_redirect_exit(plan, sign, congested_exits, blocked, fields)
    elif g <= 0:
        new = nearest_exit(plan, sign.pos, blocked, fields)
    else:
        return None
    if new == sign.displayed_exit:
        return None
    sign.displayed_exit = new
    return new
