"""Generational loop: evaluate, rank, keep the elite, mutate the rest.

RNG discipline: every stochastic draw descends from the run's master seed
through numpy SeedSequence spawn keys:

    (0,)          population initialization (one stream, agents in order)
    (1, g)        reproduction for generation g (parent picks + mutations)
    (2, g)        sugar field layout for generation g (or (2, 0) when the
                  layout is fixed across generations)
    (3, g)        grid-game layout / respawn stream for generation g

Replays are exact: the same seed, config, strategy and map give a
bit-identical run record on any backend.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import engine
from .config import ConfigError, RunConfig
from .maze import InputMode, MazeMap
from .rnn import NetworkDims
from .strategies import SugarField, rasterize_walls

STREAM_INIT = 0
STREAM_REPRODUCE = 1
STREAM_SUGAR = 2
STREAM_GAME = 3

_INPUT_MODE_CODES = {"sensors": 0, "no_input": 1, "binary_counter": 2}


def stream_rng(master_seed: int, domain: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(domain, *key)))


@dataclass
class MazeEpisodeBatch:
    final_positions: np.ndarray
    reached: np.ndarray
    steps_used: np.ndarray
    sugar_counts: np.ndarray | None = None
    scores: np.ndarray | None = None  # grid games only

    @property
    def solved(self) -> bool:
        return bool(self.reached.any())


class MazeEnvironment:
    """Population-level episode evaluation on one maze map."""

    supported_fields = ("none", "sugar")

    def __init__(self, maze_map: MazeMap, input_mode: InputMode, config: RunConfig):
        self.maze_map = maze_map
        self.input_mode = input_mode
        self.config = config
        self.id = f"maze:{maze_map.name}"
        self._wall_mask = None
        if config.input_mode == "binary_counter" and config.time_frame > 1:
            needed = math.ceil(math.log2(config.time_frame))
            if input_mode.counter_bits < needed:
                raise ConfigError(
                    f"counter_bits={input_mode.counter_bits} too small for "
                    f"time_frame={config.time_frame}"
                )

    @property
    def input_count(self) -> int:
        return self.input_mode.input_count

    @property
    def output_count(self) -> int:
        return 4

    def _make_field(self, gen_index: int, config: RunConfig) -> SugarField:
        if self._wall_mask is None:
            self._wall_mask = rasterize_walls(self.maze_map, config.cell_size)
        layout_key = 0 if config.sugar_layout == "fixed" else gen_index
        rng = stream_rng(config.master_seed, STREAM_SUGAR, layout_key)
        return SugarField(
            self.maze_map, config.cell_size, config.density, rng, wall_mask=self._wall_mask
        )

    def _run(self, weights, config, sugar_field=None, record_positions=False):
        m = self.maze_map
        return engine.run_maze_generation(
            np.ascontiguousarray(weights, dtype=np.float64),
            self.input_count,
            config.hidden,
            self.output_count,
            m.walls,
            m.width,
            m.height,
            float(m.start[0]),
            float(m.start[1]),
            float(m.goal[0]),
            float(m.goal[1]),
            m.goal_radius,
            _INPUT_MODE_CODES[self.input_mode.kind],
            self.input_mode.counter_bits,
            config.time_frame,
            config.speed,
            config.collision == "freeze",
            sugar_field.state if sugar_field is not None else None,
            config.cell_size,
            record_positions,
        )

    def evaluate(self, weights, gen_index: int, config: RunConfig, strategy):
        sugar_field = None
        if strategy.field_kind == "sugar":
            sugar_field = self._make_field(gen_index, config)
        res = self._run(weights, config, sugar_field=sugar_field)
        if sugar_field is not None:
            sugar_field.record_events(res["events"])
        batch = MazeEpisodeBatch(
            final_positions=res["final_positions"],
            reached=res["reached"],
            steps_used=res["steps_used"],
            sugar_counts=res["sugar_counts"],
        )
        return batch, sugar_field

    def replay(self, flat_weights) -> np.ndarray:
        """Deterministic single-agent re-run returning the position trace."""
        res = self._run(
            np.asarray(flat_weights)[None, :], self.config, record_positions=True
        )
        steps = int(res["steps_used"][0])
        return res["positions"][0, : steps + 1].copy()


@dataclass
class GenerationReport:
    index: int
    best_fitness: float
    mean_fitness: float
    solved: bool
    champion_index: int
    champion_steps: int
    champion_trace: np.ndarray
    sugar_total: int | None = None
    champion_score: float | None = None


@dataclass
class RunRecord:
    seed: int
    strategy: str
    env_id: str
    reports: list = field(default_factory=list)
    generations_to_solve: int | None = None
    champion_weights: np.ndarray | None = None  # final generation's champion

    @property
    def solved(self) -> bool:
        return self.generations_to_solve is not None


def run_records_equal(a: RunRecord, b: RunRecord) -> bool:
    if (a.seed, a.strategy, a.env_id, a.generations_to_solve) != (
        b.seed,
        b.strategy,
        b.env_id,
        b.generations_to_solve,
    ):
        return False
    if len(a.reports) != len(b.reports):
        return False
    for ra, rb in zip(a.reports, b.reports):
        if (
            ra.index != rb.index
            or ra.best_fitness != rb.best_fitness
            or ra.mean_fitness != rb.mean_fitness
            or ra.solved != rb.solved
            or ra.champion_index != rb.champion_index
            or ra.champion_steps != rb.champion_steps
            or ra.sugar_total != rb.sugar_total
            or ra.champion_score != rb.champion_score
            or not np.array_equal(ra.champion_trace, rb.champion_trace)
        ):
            return False
    return True


def select_elite(fitness: np.ndarray, elite_fraction: float) -> np.ndarray:
    """Indices of the top floor(fraction * N) agents; ties favor lower index."""
    n = len(fitness)
    count = int(math.floor(elite_fraction * n + 1e-9))
    order = np.argsort(-np.asarray(fitness, dtype=np.float64), kind="stable")
    return order[:count]


def _reproduce(weights: np.ndarray, fitness: np.ndarray, config: RunConfig, gen_index: int):
    rng = stream_rng(config.master_seed, STREAM_REPRODUCE, gen_index)
    n, p = weights.shape
    if config.reproduce == "random":
        return rng.standard_normal((n, p))
    elite = select_elite(fitness, config.elite_fraction)
    is_elite = np.zeros(n, dtype=bool)
    is_elite[elite] = True
    out = weights.copy()
    sigma = config.mutation_sigma
    for i in range(n):
        if is_elite[i]:
            continue
        if config.reproduce == "from_elite":
            parent = int(elite[int(rng.integers(len(elite)))])
        else:  # literal: every non-elite mutates its own genome in place
            parent = i
        out[i] = weights[parent] + sigma * rng.standard_normal(p)
    return out


def evolve_run(config: RunConfig, env, strategy, on_generation=None) -> RunRecord:
    """Run one full evolutionary search; returns the complete record.

    Stops at the first generation where a maze agent reaches the goal, or
    after max_generations. Grid games never set the solved flag.
    """
    config.validate()
    if strategy.field_kind not in env.supported_fields:
        raise ConfigError(
            f"strategy {strategy.name!r} needs field {strategy.field_kind!r}, "
            f"unsupported by {env.id}"
        )
    dims = NetworkDims(env.input_count, config.hidden, env.output_count)
    n = config.population_size
    rng_init = stream_rng(config.master_seed, STREAM_INIT)
    weights = rng_init.standard_normal((n, dims.param_count))
    strategy.begin_run(config)

    record = RunRecord(seed=config.master_seed, strategy=strategy.name, env_id=env.id)
    for gen in range(config.max_generations):
        batch, sugar_field = env.evaluate(weights, gen, config, strategy)
        fitness_report = strategy.score(batch, sugar_field)
        fitness = np.asarray(fitness_report.fitness, dtype=np.float64)
        order = np.argsort(-fitness, kind="stable")
        champ = int(order[0])
        report = GenerationReport(
            index=gen,
            best_fitness=float(fitness[champ]),
            mean_fitness=float(fitness.mean()),
            solved=batch.solved,
            champion_index=champ,
            champion_steps=int(batch.steps_used[champ]),
            champion_trace=env.replay(weights[champ]),
            sugar_total=sugar_field.collected_count if sugar_field is not None else None,
            champion_score=float(batch.scores[champ]) if batch.scores is not None else None,
        )
        record.reports.append(report)
        record.champion_weights = weights[champ].copy()
        if on_generation is not None:
            on_generation(report)
        if report.solved:
            record.generations_to_solve = gen
            break
        if gen + 1 >= config.max_generations:
            break
        weights = _reproduce(weights, fitness, config, gen)
    return record
