"""Fitness-assignment strategies: objective distance, novelty, sugar, blend.

The sugar field is the one shared mutable object during a generation; all
claims on it are arbitrated inside the lockstep tick (engine) or through
`try_collect`, always by ascending agent id. Scoring itself is pure given
the completed episode batch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .maze import MazeMap

# Cell states: 0 empty, 1 sugar present. Collected cells are recorded in the
# collector/step grids (state returns to 0 and never back to 1 in a run).


def rasterize_walls(maze_map: MazeMap, cell_size: float) -> np.ndarray:
    """Boolean (rows, cols) mask of cells overlapped by any wall segment."""
    gw = int(math.ceil(maze_map.width / cell_size - 1e-9))
    gh = int(math.ceil(maze_map.height / cell_size - 1e-9))
    mask = np.zeros((gh, gw), dtype=bool)
    for x1, y1, x2, y2 in maze_map.walls:
        i0 = max(0, min(gw - 1, int(math.floor(min(x1, x2) / cell_size))))
        i1 = max(0, min(gw - 1, int(math.floor(max(x1, x2) / cell_size))))
        j0 = max(0, min(gh - 1, int(math.floor(min(y1, y2) / cell_size))))
        j1 = max(0, min(gh - 1, int(math.floor(max(y1, y2) / cell_size))))
        xmin = np.arange(i0, i1 + 1) * cell_size
        ymin = np.arange(j0, j1 + 1) * cell_size
        xmin, ymin = np.meshgrid(xmin, ymin)
        dx, dy = x2 - x1, y2 - y1
        u1 = np.zeros_like(xmin)
        u2 = np.ones_like(xmin)
        ok = np.ones(xmin.shape, dtype=bool)
        # Liang-Barsky clip of the segment parameter against each cell edge.
        for p, q in (
            (-dx, x1 - xmin),
            (dx, (xmin + cell_size) - x1),
            (-dy, y1 - ymin),
            (dy, (ymin + cell_size) - y1),
        ):
            if p == 0.0:
                ok &= q >= 0.0
            elif p < 0.0:
                u1 = np.maximum(u1, q / p)
            else:
                u2 = np.minimum(u2, q / p)
        mask[j0 : j1 + 1, i0 : i1 + 1] |= ok & (u1 <= u2)
    return mask


class SugarField:
    """Bernoulli-per-cell reward lattice with first-collector ownership."""

    def __init__(
        self,
        maze_map: MazeMap,
        cell_size: float,
        density: float,
        rng: np.random.Generator,
        wall_mask: np.ndarray | None = None,
    ):
        if not 0.0 <= density <= 1.0:
            raise ValueError(f"density must be in [0, 1], got {density}")
        if cell_size <= 0.0:
            raise ValueError("cell_size must be > 0")
        self.cell_size = float(cell_size)
        self.density = float(density)
        if wall_mask is None:
            wall_mask = rasterize_walls(maze_map, cell_size)
        self.wall_mask = wall_mask
        gh, gw = wall_mask.shape
        self.shape = (gh, gw)
        placed = (rng.random((gh, gw)) < density) & ~wall_mask
        self.state = placed.astype(np.int8)
        self.initial_count = int(placed.sum())
        self.collector = np.full((gh, gw), -1, dtype=np.int32)
        self.collected_step = np.full((gh, gw), -1, dtype=np.int32)

    def cell_index(self, pos) -> tuple[int, int]:
        gh, gw = self.shape
        ix = int(math.floor(float(pos[0]) / self.cell_size))
        iy = int(math.floor(float(pos[1]) / self.cell_size))
        return min(gh - 1, max(0, iy)), min(gw - 1, max(0, ix))

    def try_collect(self, agent_id: int, pos, step_index: int) -> bool:
        """Claim the sugar under pos for agent_id; False if empty or taken."""
        iy, ix = self.cell_index(pos)
        if self.state[iy, ix] != 1:
            return False
        self.state[iy, ix] = 0
        self.collector[iy, ix] = agent_id
        self.collected_step[iy, ix] = step_index
        return True

    def record_events(self, events: np.ndarray):
        """Apply engine collection events, rows of (step, agent, flat cell)."""
        for step, agent, cell in events:
            iy, ix = divmod(int(cell), self.shape[1])
            self.collector[iy, ix] = agent
            self.collected_step[iy, ix] = step

    @property
    def collected_count(self) -> int:
        return int((self.collector >= 0).sum())

    def counts(self, n_agents: int) -> np.ndarray:
        owned = self.collector[self.collector >= 0]
        return np.bincount(owned, minlength=n_agents)[:n_agents]

    def events(self) -> list[tuple[int, int, int, int]]:
        """Collection log as (step, agent, row, col), chronological order."""
        ys, xs = np.nonzero(self.collector >= 0)
        rows = [
            (int(self.collected_step[y, x]), int(self.collector[y, x]), int(y), int(x))
            for y, x in zip(ys, xs)
        ]
        rows.sort()
        return rows


def sugar_fitness(sugar_field: SugarField, agent_id: int) -> int:
    return int((sugar_field.collector == agent_id).sum())


# --- novelty -------------------------------------------------------------------


@dataclass
class BehaviorArchive:
    threshold: float = 3.0
    k: int = 15
    points: list = field(default_factory=list)

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")

    def __len__(self):
        return len(self.points)

    def as_array(self) -> np.ndarray:
        if not self.points:
            return np.zeros((0, 2))
        return np.asarray(self.points, dtype=np.float64)


def novelty_scores(
    final_positions: np.ndarray,
    archive: BehaviorArchive,
    k: int | None = None,
    update: bool = True,
) -> np.ndarray:
    """Mean distance to the k nearest behaviors (population plus archive).

    Each agent's own behavior is excluded; with fewer than k candidates the
    mean runs over whatever is available. Agents scoring above the archive
    threshold are appended afterwards.
    """
    pts = np.asarray(final_positions, dtype=np.float64)
    n = len(pts)
    if n == 0:
        return np.zeros(0)
    k = archive.k if k is None else k
    candidates = np.vstack([pts, archive.as_array()])
    deltas = pts[:, None, :] - candidates[None, :, :]
    dists = np.sqrt((deltas * deltas).sum(axis=2))
    dists[np.arange(n), np.arange(n)] = np.inf
    k_eff = min(k, candidates.shape[0] - 1)
    if k_eff <= 0:
        scores = np.zeros(n)
    else:
        nearest = np.partition(dists, k_eff - 1, axis=1)[:, :k_eff]
        scores = nearest.mean(axis=1)
    if update:
        for i in np.nonzero(scores > archive.threshold)[0]:
            archive.points.append(pts[i].copy())
    return scores


# --- scalar fitness ops ----------------------------------------------------------


def goal_distance(final_position, maze_map: MazeMap) -> float:
    dx = float(final_position[0]) - maze_map.goal[0]
    dy = float(final_position[1]) - maze_map.goal[1]
    return math.hypot(dx, dy)


def distance_fitness(trace, maze_map: MazeMap) -> float:
    """Negative final distance to the goal; higher is better."""
    return -goal_distance(trace.final_position, maze_map)


def weighted_fitness(
    trace,
    sugar_field: SugarField,
    agent_id: int,
    maze_map: MazeMap,
    alpha: float,
    population_max_sugar: int,
) -> float:
    """Blend of goal proximity and per-generation sugar share, both in [0, 1]."""
    proximity = 1.0 - goal_distance(trace.final_position, maze_map) / maze_map.diagonal
    share = sugar_fitness(sugar_field, agent_id) / max(1, population_max_sugar)
    return alpha * proximity + (1.0 - alpha) * share


# --- per-generation scoring -------------------------------------------------------


@dataclass
class FitnessReport:
    fitness: np.ndarray
    aux: dict


class FitnessStrategy:
    name = "fitness"
    field_kind = "none"

    def __init__(self, maze_map: MazeMap):
        self.goal = maze_map.goal

    def begin_run(self, config):
        pass

    def score(self, batch, sugar_field) -> FitnessReport:
        dist = np.hypot(
            batch.final_positions[:, 0] - self.goal[0],
            batch.final_positions[:, 1] - self.goal[1],
        )
        return FitnessReport(fitness=-dist, aux={"distance": dist})


class NoveltyStrategy:
    name = "novelty"
    field_kind = "none"

    def __init__(self, maze_map: MazeMap, k: int = 15, threshold: float = 3.0):
        self.k = k
        self.threshold = threshold
        self.archive = BehaviorArchive(threshold=threshold, k=k)

    def begin_run(self, config):
        self.archive = BehaviorArchive(threshold=self.threshold, k=self.k)

    def score(self, batch, sugar_field) -> FitnessReport:
        scores = novelty_scores(batch.final_positions, self.archive)
        return FitnessReport(fitness=scores, aux={"novelty": scores.copy()})


class SugarStrategy:
    name = "sugar"
    field_kind = "sugar"

    def __init__(self, maze_map: MazeMap):
        pass

    def begin_run(self, config):
        pass

    def score(self, batch, sugar_field) -> FitnessReport:
        counts = sugar_field.counts(len(batch.final_positions))
        return FitnessReport(fitness=counts.astype(np.float64), aux={"sugar": counts})


class WeightedStrategy:
    name = "weighted"
    field_kind = "sugar"

    def __init__(self, maze_map: MazeMap, alpha: float = 0.5):
        if not 0.0 <= alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {alpha}")
        self.alpha = alpha
        self.goal = maze_map.goal
        self.diagonal = maze_map.diagonal

    def begin_run(self, config):
        pass

    def score(self, batch, sugar_field) -> FitnessReport:
        dist = np.hypot(
            batch.final_positions[:, 0] - self.goal[0],
            batch.final_positions[:, 1] - self.goal[1],
        )
        proximity = 1.0 - dist / self.diagonal
        counts = sugar_field.counts(len(dist))
        share = counts / max(1, int(counts.max(initial=0)))
        fitness = self.alpha * proximity + (1.0 - self.alpha) * share
        return FitnessReport(fitness=fitness, aux={"distance": dist, "sugar": counts})


def make_maze_strategy(config, maze_map: MazeMap):
    name = config.strategy
    if name == "fitness":
        return FitnessStrategy(maze_map)
    if name == "novelty":
        return NoveltyStrategy(maze_map, k=config.k, threshold=config.novelty_threshold)
    if name == "sugar":
        return SugarStrategy(maze_map)
    if name == "weighted":
        return WeightedStrategy(maze_map, alpha=config.alpha)
    raise ValueError(f"strategy {name!r} does not apply to the maze environment")
