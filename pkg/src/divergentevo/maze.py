"""Continuous 2-D maze world: segment walls, cardinal kinematics, sensors.

Coordinates are world units with y increasing upward. Walls are zero-width
line segments; the four bounding edges act as implicit walls. Agents move
in the four cardinal directions at fixed speed and are blocked (or frozen,
in `freeze` collision mode) when a step would cross a wall or leave the
bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from importlib import resources
from pathlib import Path

import numpy as np

from .rnn import Genome, forward, new_hidden_state


class Action(IntEnum):
    UP = 0
    DOWN = 1
    LEFT = 2
    RIGHT = 3


# One row per action, matching Action values.
ACTION_VECTORS = np.array([[0.0, 1.0], [0.0, -1.0], [-1.0, 0.0], [1.0, 0.0]])

SENSOR_COUNT = 8
# Rangefinder/radar direction order: +x, -x, +y, -y.
_RAY_DIRS = ((1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0))

N_ACTIONS = 4

BUILTIN_MAPS = ("medium", "hard", "superhard")


class MazeFileError(ValueError):
    """Raised when a map file cannot be parsed; message names file and line."""


@dataclass(frozen=True)
class InputMode:
    kind: str
    counter_bits: int = 10

    def __post_init__(self):
        if self.kind not in ("sensors", "no_input", "binary_counter"):
            raise ValueError(f"unknown input mode {self.kind!r}")
        if self.kind == "binary_counter" and self.counter_bits < 1:
            raise ValueError("counter_bits must be >= 1")

    @property
    def input_count(self) -> int:
        if self.kind == "sensors":
            return SENSOR_COUNT
        if self.kind == "no_input":
            return 0
        return self.counter_bits

    @classmethod
    def sensors(cls) -> "InputMode":
        return cls("sensors")

    @classmethod
    def no_input(cls) -> "InputMode":
        return cls("no_input")

    @classmethod
    def binary_counter(cls, bits: int = 10) -> "InputMode":
        return cls("binary_counter", counter_bits=bits)


@dataclass(frozen=True)
class MazeMap:
    width: float
    height: float
    start: np.ndarray
    goal: np.ndarray
    goal_radius: float
    walls: np.ndarray  # (W, 4) rows of x1, y1, x2, y2
    name: str = "maze"

    def __post_init__(self):
        object.__setattr__(self, "start", np.asarray(self.start, dtype=np.float64))
        object.__setattr__(self, "goal", np.asarray(self.goal, dtype=np.float64))
        walls = np.asarray(self.walls, dtype=np.float64).reshape(-1, 4)
        object.__setattr__(self, "walls", walls)
        if self.width <= 0 or self.height <= 0:
            raise ValueError("map width and height must be > 0")
        if self.goal_radius <= 0:
            raise ValueError("goal_radius must be > 0")
        if not np.all(np.isfinite(walls)):
            raise ValueError("wall coordinates must be finite")
        if walls.size and np.any(
            (walls[:, 0] == walls[:, 2]) & (walls[:, 1] == walls[:, 3])
        ):
            raise ValueError("zero-length wall segment")
        for label, p in (("start", self.start), ("goal", self.goal)):
            if not (0.0 < p[0] < self.width and 0.0 < p[1] < self.height):
                raise ValueError(f"{label} must lie strictly inside the bounds")
            if point_on_wall(walls, p):
                raise ValueError(f"{label} must not lie on a wall")
        self.start.flags.writeable = False
        self.goal.flags.writeable = False
        walls.flags.writeable = False

    @property
    def diagonal(self) -> float:
        return math.sqrt(self.width * self.width + self.height * self.height)


@dataclass
class AgentTrace:
    positions: np.ndarray  # (steps_used + 1, 2); row 0 is the start
    reached_goal: bool
    steps_used: int

    @property
    def final_position(self) -> np.ndarray:
        return self.positions[-1]


# --- geometry ----------------------------------------------------------------


def _point_segment_distance(px, py, x1, y1, x2, y2) -> float:
    sx, sy = x2 - x1, y2 - y1
    seg_len2 = sx * sx + sy * sy
    t = ((px - x1) * sx + (py - y1) * sy) / seg_len2
    t = min(1.0, max(0.0, t))
    return math.hypot(px - (x1 + t * sx), py - (y1 + t * sy))


def point_on_wall(walls: np.ndarray, p, eps: float = 1e-9) -> bool:
    px, py = float(p[0]), float(p[1])
    for x1, y1, x2, y2 in walls:
        if _point_segment_distance(px, py, x1, y1, x2, y2) <= eps:
            return True
    return False


def _ray_segment_distance(ox, oy, dx, dy, x1, y1, x2, y2) -> float:
    """Distance along the ray (ox,oy)+t(dx,dy) to the segment, or inf."""
    sx, sy = x2 - x1, y2 - y1
    denom = dx * sy - dy * sx
    if denom == 0.0:
        return math.inf
    t = ((x1 - ox) * sy - (y1 - oy) * sx) / denom
    u = ((x1 - ox) * dy - (y1 - oy) * dx) / denom
    if t >= 0.0 and 0.0 <= u <= 1.0:
        return t
    return math.inf


def _orient(ax, ay, bx, by, cx, cy) -> float:
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def _on_bbox(ax, ay, bx, by, cx, cy) -> bool:
    return min(ax, bx) <= cx <= max(ax, bx) and min(ay, by) <= cy <= max(ay, by)


def segments_intersect(p1x, p1y, p2x, p2y, p3x, p3y, p4x, p4y) -> bool:
    """True when segments p1p2 and p3p4 intersect; touching counts."""
    d1 = _orient(p3x, p3y, p4x, p4y, p1x, p1y)
    d2 = _orient(p3x, p3y, p4x, p4y, p2x, p2y)
    d3 = _orient(p1x, p1y, p2x, p2y, p3x, p3y)
    d4 = _orient(p1x, p1y, p2x, p2y, p4x, p4y)
    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and (
        (d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)
    ):
        return True
    if d1 == 0.0 and _on_bbox(p3x, p3y, p4x, p4y, p1x, p1y):
        return True
    if d2 == 0.0 and _on_bbox(p3x, p3y, p4x, p4y, p2x, p2y):
        return True
    if d3 == 0.0 and _on_bbox(p1x, p1y, p2x, p2y, p3x, p3y):
        return True
    if d4 == 0.0 and _on_bbox(p1x, p1y, p2x, p2y, p4x, p4y):
        return True
    return False


# --- sensors and kinematics ---------------------------------------------------


def raycast(maze_map: MazeMap, origin, direction: Action) -> float:
    """Exact distance from origin to the nearest wall along a cardinal ray."""
    ox, oy = float(origin[0]), float(origin[1])
    if not (0.0 <= ox <= maze_map.width and 0.0 <= oy <= maze_map.height):
        raise ValueError(f"raycast origin {origin} outside map bounds")
    dx, dy = ACTION_VECTORS[int(direction)]
    if dx > 0:
        best = maze_map.width - ox
    elif dx < 0:
        best = ox
    elif dy > 0:
        best = maze_map.height - oy
    else:
        best = oy
    for x1, y1, x2, y2 in maze_map.walls:
        t = _ray_segment_distance(ox, oy, dx, dy, x1, y1, x2, y2)
        if t < best:
            best = t
    return best


def goal_quadrant(dx: float, dy: float) -> int:
    """Radar quadrant index 0..3 (+x, -x, +y, -y); ties favor lower index."""
    if abs(dx) >= abs(dy):
        return 0 if dx >= 0 else 1
    return 2 if dy >= 0 else 3


def sense(maze_map: MazeMap, pos) -> np.ndarray:
    """8 sensor values in [0, 1]: 4 rangefinders then a one-hot goal radar."""
    out = np.zeros(SENSOR_COUNT)
    diag = maze_map.diagonal
    rays = (Action.RIGHT, Action.LEFT, Action.UP, Action.DOWN)
    for i, ray in enumerate(rays):
        out[i] = min(1.0, max(0.0, raycast(maze_map, pos, ray) / diag))
    dx = maze_map.goal[0] - float(pos[0])
    dy = maze_map.goal[1] - float(pos[1])
    out[4 + goal_quadrant(dx, dy)] = 1.0
    return out


def step_agent(maze_map: MazeMap, pos, action, speed: float):
    """Attempt one cardinal step; returns (new position, blocked flag)."""
    px, py = float(pos[0]), float(pos[1])
    vx, vy = ACTION_VECTORS[int(action)]
    cx, cy = px + speed * vx, py + speed * vy
    blocked = not (0.0 < cx < maze_map.width and 0.0 < cy < maze_map.height)
    if not blocked:
        for x1, y1, x2, y2 in maze_map.walls:
            if segments_intersect(px, py, cx, cy, x1, y1, x2, y2):
                blocked = True
                break
    if blocked:
        return np.array([px, py]), True
    return np.array([cx, cy]), False


def build_input(mode: InputMode, maze_map: MazeMap, pos, step_index: int) -> np.ndarray:
    if mode.kind == "sensors":
        return sense(maze_map, pos)
    if mode.kind == "no_input":
        return np.zeros(0)
    bits = np.zeros(mode.counter_bits)
    for b in range(mode.counter_bits):
        bits[b] = float((step_index >> b) & 1)
    return bits


def run_episode(
    maze_map: MazeMap,
    genome: Genome,
    mode: InputMode,
    time_frame: int,
    speed: float = 1.5,
    hook=None,
    collision: str = "block",
) -> AgentTrace:
    """Simulate one agent for up to time_frame steps from the map start.

    The hook, when given, is called as hook(step_index, pos) after every
    movement (including blocked ones), which is where reward fields observe
    agent positions.
    """
    if genome.dims.inputs != mode.input_count:
        raise ValueError(
            f"genome expects {genome.dims.inputs} inputs, mode provides {mode.input_count}"
        )
    if genome.dims.outputs != N_ACTIONS:
        raise ValueError(f"maze genomes need {N_ACTIONS} outputs, got {genome.dims.outputs}")
    goal = maze_map.goal
    # Squared-distance goal test, matching the population engine exactly.
    r2 = maze_map.goal_radius * maze_map.goal_radius
    pos = maze_map.start.copy()
    hidden = new_hidden_state(genome.dims)
    positions = [pos.copy()]
    reached = bool((pos[0] - goal[0]) ** 2 + (pos[1] - goal[1]) ** 2 <= r2)
    for t in range(time_frame):
        if reached:
            break
        x = build_input(mode, maze_map, pos, t)
        y, hidden = forward(genome, hidden, x)
        action = int(np.argmax(y))
        pos, blocked = step_agent(maze_map, pos, action, speed)
        positions.append(pos.copy())
        if hook is not None:
            hook(t, pos)
        if (pos[0] - goal[0]) ** 2 + (pos[1] - goal[1]) ** 2 <= r2:
            reached = True
        elif blocked and collision == "freeze":
            break
    trace = np.asarray(positions)
    return AgentTrace(positions=trace, reached_goal=reached, steps_used=len(positions) - 1)


# --- map files -----------------------------------------------------------------


def parse_maze_text(text: str, source: str = "<maze>", name: str = "maze") -> MazeMap:
    size = start = goal = None
    goal_radius = None
    walls = []

    def fail(lineno, msg):
        raise MazeFileError(f"{source}:{lineno}: {msg}")

    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        parts = stripped.split()
        directive, args = parts[0].lower(), parts[1:]
        try:
            values = [float(a) for a in args]
        except ValueError:
            fail(lineno, f"non-numeric argument in {stripped!r}")
        if directive == "size" and len(values) == 2:
            size = values
        elif directive == "start" and len(values) == 2:
            start = values
        elif directive == "goal" and len(values) == 2:
            goal = values
        elif directive == "goalradius" and len(values) == 1:
            goal_radius = values[0]
        elif directive == "wall" and len(values) == 4:
            walls.append(values)
        else:
            fail(lineno, f"unknown or malformed directive {stripped!r}")
    for label, value in (("size", size), ("start", start), ("goal", goal),
                         ("goalradius", goal_radius)):
        if value is None:
            raise MazeFileError(f"{source}: missing required directive {label!r}")
    try:
        return MazeMap(
            width=size[0],
            height=size[1],
            start=np.array(start),
            goal=np.array(goal),
            goal_radius=goal_radius,
            walls=np.array(walls).reshape(-1, 4),
            name=name,
        )
    except ValueError as exc:
        raise MazeFileError(f"{source}: {exc}") from exc


def load_maze(spec: str | Path) -> MazeMap:
    """Load a map from a file path or a builtin name (medium/hard/superhard)."""
    path = Path(spec)
    if path.suffix == ".maze" or path.exists():
        try:
            text = path.read_text()
        except OSError as exc:
            raise MazeFileError(f"cannot read map file {path}: {exc}") from exc
        return parse_maze_text(text, source=str(path), name=path.stem)
    name = str(spec)
    if name in BUILTIN_MAPS:
        ref = resources.files("divergentevo").joinpath("maps", f"{name}.maze")
        return parse_maze_text(ref.read_text(), source=f"builtin:{name}", name=name)
    raise MazeFileError(f"no such map file or builtin map: {spec!r}")
