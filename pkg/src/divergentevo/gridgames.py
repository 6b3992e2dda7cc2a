"""Channel-based desk-scale grid games plus pixel novelty and grid sugar.

Two 10x10 games share one action set (up, down, left, right, no-op) and a
boolean channel screen per frame:

* COLLECTOR: eat pellets (+10) while one chasing enemy ends the episode on
  contact (greedy Manhattan pursuit, horizontal moves win ties).
* CROSSING: climb from the bottom row to the top (+1, teleport back) while
  cars slide along rows 1-8 with per-row fixed direction and period;
  contact resets the player to the start without scoring.

Pixel novelty rewards the first agent in the generation (lockstep, by
ascending agent id) to produce a never-seen screen; the archive resets each
generation. Grid sugar mirrors the maze field on the 10x10 lattice and
respawns one sugar every `l` frames.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import ConfigError, RunConfig
from .evolution import STREAM_GAME, RunRecord, evolve_run, stream_rng
from .rnn import HIDDEN_CLAMP
from .strategies import FitnessReport

GRID = 10
N_GAME_ACTIONS = 5
# row/col deltas for up, down, left, right, no-op (row 0 is the top row)
_MOVES = ((-1, 0), (1, 0), (0, -1), (0, 1), (0, 0))

COLLECTOR_PLAYER_START = (5, 5)
COLLECTOR_ENEMY_START = (0, 0)
COLLECTOR_PELLET_DENSITY = 0.2
CROSSING_START = (9, 4)

GAME_CHANNELS = {"collector": 3, "crossing": 2}


def screen_key(channels: np.ndarray) -> bytes:
    """Canonical encoding: channel-major row-major bits, packed big-endian."""
    return np.packbits(channels.astype(bool)).tobytes()


# --- games ---------------------------------------------------------------------


@dataclass(frozen=True)
class CollectorLayout:
    pellets: np.ndarray  # (10, 10) bool


def sample_collector_layout(rng: np.random.Generator) -> CollectorLayout:
    pellets = rng.random((GRID, GRID)) < COLLECTOR_PELLET_DENSITY
    pellets[COLLECTOR_PLAYER_START] = False
    pellets[COLLECTOR_ENEMY_START] = False
    return CollectorLayout(pellets=pellets)


class CollectorGame:
    """Pellet-eating game with one greedy chaser; contact ends the episode."""

    channel_names = ("player", "pellet", "enemy")

    def __init__(self, layout: CollectorLayout):
        self.player = COLLECTOR_PLAYER_START
        self.enemy = COLLECTOR_ENEMY_START
        self.channels = np.zeros((3, GRID, GRID), dtype=np.uint8)
        self.channels[1] = layout.pellets
        self.channels[0][self.player] = 1
        self.channels[2][self.enemy] = 1
        self.score = 0
        self.frame = 0
        self.done = False

    def step(self, action: int):
        if self.done:
            raise RuntimeError("step() on a finished game")
        delta = 0
        pr, pc = self.player
        dr, dc = _MOVES[action]
        nr, nc = pr + dr, pc + dc
        if 0 <= nr < GRID and 0 <= nc < GRID:
            self.channels[0][pr, pc] = 0
            self.player = (nr, nc)
            self.channels[0][nr, nc] = 1
        if self.player == self.enemy:
            self.done = True
        else:
            if self.channels[1][self.player]:
                self.channels[1][self.player] = 0
                delta = 10
            er, ec = self.enemy
            ddr = self.player[0] - er
            ddc = self.player[1] - ec
            if abs(ddc) >= abs(ddr) and ddc != 0:
                ec += 1 if ddc > 0 else -1
            elif ddr != 0:
                er += 1 if ddr > 0 else -1
            self.channels[2][self.enemy] = 0
            self.enemy = (er, ec)
            self.channels[2][self.enemy] = 1
            if self.enemy == self.player:
                self.done = True
        self.frame += 1
        self.score += delta
        return self.channels.copy(), delta, self.done


@dataclass(frozen=True)
class CrossingLayout:
    cars: tuple  # rows of (row, start_col, direction, period)


def sample_crossing_layout(rng: np.random.Generator) -> CrossingLayout:
    cars = []
    for row in range(1, GRID - 1):
        n_cars = 1 + int(rng.integers(2))
        direction = 1 if rng.random() < 0.5 else -1
        period = 1 + int(rng.integers(3))
        cols = rng.choice(GRID, size=n_cars, replace=False)
        for col in sorted(int(c) for c in cols):
            cars.append((row, col, direction, period))
    return CrossingLayout(cars=tuple(cars))


class CrossingGame:
    """Road-crossing game: reach the top row (+1), cars knock you home."""

    channel_names = ("player", "car")

    def __init__(self, layout: CrossingLayout):
        self.player = CROSSING_START
        self.cars = [list(car) for car in layout.cars]
        self.channels = np.zeros((2, GRID, GRID), dtype=np.uint8)
        self.channels[0][self.player] = 1
        for row, col, _, _ in self.cars:
            self.channels[1][row, col] = 1
        self.score = 0
        self.frame = 0
        self.done = False

    def _car_at(self, cell) -> bool:
        return bool(self.channels[1][cell])

    def _place_player(self, cell):
        self.channels[0][self.player] = 0
        self.player = cell
        self.channels[0][cell] = 1

    def step(self, action: int):
        if self.done:
            raise RuntimeError("step() on a finished game")
        delta = 0
        pr, pc = self.player
        dr, dc = _MOVES[action]
        nr, nc = pr + dr, pc + dc
        if 0 <= nr < GRID and 0 <= nc < GRID:
            self._place_player((nr, nc))
        if self.player[0] == 0:
            delta = 1
            self._place_player(CROSSING_START)
        if self._car_at(self.player):
            self._place_player(CROSSING_START)
        self.channels[1][:] = 0
        for car in self.cars:
            if (self.frame + 1) % car[3] == 0:
                car[1] = (car[1] + car[2]) % GRID
            self.channels[1][car[0], car[1]] = 1
        if self._car_at(self.player):
            self._place_player(CROSSING_START)
        self.frame += 1
        self.score += delta
        return self.channels.copy(), delta, False


def make_game(name: str, layout):
    if name == "collector":
        return CollectorGame(layout)
    if name == "crossing":
        return CrossingGame(layout)
    raise ValueError(f"unknown game {name!r}")


def sample_layout(name: str, rng: np.random.Generator):
    return sample_collector_layout(rng) if name == "collector" else sample_crossing_layout(rng)


# --- pixel novelty ---------------------------------------------------------------


class ScreenArchive:
    """Per-generation set of canonical screens; first submitter is rewarded."""

    def __init__(self, screen_shape: tuple, generation_index: int = 0):
        self.screen_shape = tuple(screen_shape)
        self.generation_index = generation_index
        self.seen = set()

    def reset(self, generation_index: int):
        self.generation_index = generation_index
        self.seen = set()

    def observe(self, channels: np.ndarray) -> int:
        if tuple(channels.shape) != self.screen_shape:
            raise ValueError(
                f"screen shape {channels.shape} does not match archive {self.screen_shape}"
            )
        key = screen_key(channels)
        if key in self.seen:
            return 0
        self.seen.add(key)
        return 1

    def __len__(self):
        return len(self.seen)


def pixel_novelty_reward(archive: ScreenArchive, channels: np.ndarray) -> int:
    return archive.observe(channels)


# --- grid sugar -------------------------------------------------------------------


class GridSugarState:
    """Shared sugar lattice for one grid-game generation, with respawn."""

    def __init__(self, rng: np.random.Generator, density: float = 0.3,
                 respawn_interval: int = 5):
        if not 0.0 <= density <= 1.0:
            raise ValueError(f"density must be in [0, 1], got {density}")
        if respawn_interval < 1:
            raise ValueError("respawn_interval must be >= 1")
        self.respawn_interval = respawn_interval
        self.state = (rng.random((GRID, GRID)) < density)
        self.initial_count = int(self.state.sum())
        self.respawned_count = 0
        self.events = []  # (frame, agent, row, col)

    def collect(self, agent_id: int, cell, frame: int) -> bool:
        if not self.state[cell]:
            return False
        self.state[cell] = False
        self.events.append((frame, agent_id, int(cell[0]), int(cell[1])))
        return True

    def maybe_respawn(self, frame: int, rng: np.random.Generator):
        """Add one sugar on a uniformly random free cell every l frames.

        No respawn happens at frame 0 (the initial field plays that role).
        """
        if frame == 0 or frame % self.respawn_interval != 0:
            return None
        free = np.argwhere(~self.state)
        if len(free) == 0:
            return None
        row, col = free[int(rng.integers(len(free)))]
        self.state[row, col] = True
        self.respawned_count += 1
        return int(row), int(col)

    @property
    def collected_count(self) -> int:
        return len(self.events)


def grid_sugar_tick(state: GridSugarState, rng: np.random.Generator, frame: int,
                    agent_cells) -> np.ndarray:
    """One lockstep sugar tick: collect in ascending agent order, then respawn.

    agent_cells maps agent id -> (row, col) or None for finished agents; ids
    are processed in ascending order so same-cell claims resolve to the
    lowest id.
    """
    rewards = np.zeros(len(agent_cells), dtype=np.int64)
    for agent_id, cell in enumerate(agent_cells):
        if cell is not None and state.collect(agent_id, tuple(cell), frame):
            rewards[agent_id] = 1
    state.maybe_respawn(frame, rng)
    return rewards


# --- population evaluation ---------------------------------------------------------


@dataclass
class GridEpisodeBatch:
    scores: np.ndarray
    steps_used: np.ndarray
    sugar_counts: np.ndarray | None = None
    pixel_counts: np.ndarray | None = None

    @property
    def solved(self) -> bool:
        return False  # grid games have no goal condition


class GameScoreStrategy:
    name = "fitness"
    field_kind = "none"

    def begin_run(self, config):
        pass

    def score(self, batch, _field):
        return FitnessReport(
            fitness=batch.scores.astype(np.float64), aux={"score": batch.scores}
        )


class GridSugarStrategy:
    name = "sugar"
    field_kind = "sugar"

    def begin_run(self, config):
        pass

    def score(self, batch, _field):
        return FitnessReport(
            fitness=batch.sugar_counts.astype(np.float64), aux={"sugar": batch.sugar_counts}
        )


class PixelNoveltyStrategy:
    name = "pixel"
    field_kind = "pixel"

    def begin_run(self, config):
        pass

    def score(self, batch, _field):
        return FitnessReport(
            fitness=batch.pixel_counts.astype(np.float64), aux={"pixel": batch.pixel_counts}
        )


def make_game_strategy(config: RunConfig):
    if config.strategy == "fitness":
        return GameScoreStrategy()
    if config.strategy == "sugar":
        return GridSugarStrategy()
    if config.strategy == "pixel":
        return PixelNoveltyStrategy()
    raise ConfigError(f"strategy {config.strategy!r} does not apply to grid games")


class GridEnvironment:
    """Lockstep population evaluation for one grid game."""

    supported_fields = ("none", "sugar", "pixel")

    def __init__(self, config: RunConfig):
        if config.game not in GAME_CHANNELS:
            raise ConfigError(f"unknown game {config.game!r}")
        self.game = config.game
        self.config = config
        self.channels = GAME_CHANNELS[config.game]
        self.id = f"game:{config.game}"
        self._replay_layout = None

    @property
    def input_count(self) -> int:
        return self.channels * GRID * GRID

    @property
    def output_count(self) -> int:
        return N_GAME_ACTIONS

    def _forward(self, views, x, hidden):
        w_ih, w_hh, w_ho, b_h, b_o = views
        pre = (w_ih @ x[:, :, None])[:, :, 0] + (w_hh @ hidden[:, :, None])[:, :, 0] + b_h
        hidden = np.minimum(np.maximum(pre, 0.0), HIDDEN_CLAMP)
        y = (w_ho @ hidden[:, :, None])[:, :, 0] + b_o
        return np.argmax(y, axis=1), hidden

    def _views(self, weights):
        n = weights.shape[0]
        i_n, h_n, o_n = self.input_count, self.config.hidden, self.output_count
        a = h_n * i_n
        b = a + h_n * h_n
        c = b + o_n * h_n
        d = c + h_n
        return (
            weights[:, :a].reshape(n, h_n, i_n),
            weights[:, a:b].reshape(n, h_n, h_n),
            weights[:, b:c].reshape(n, o_n, h_n),
            weights[:, c:d],
            weights[:, d:],
        )

    def evaluate(self, weights, gen_index: int, config: RunConfig, strategy):
        n = weights.shape[0]
        rng = stream_rng(config.master_seed, STREAM_GAME, gen_index)
        layout = sample_layout(self.game, rng)
        self._replay_layout = layout
        games = [make_game(self.game, layout) for _ in range(n)]
        sugar = None
        archive = None
        if strategy.field_kind == "sugar":
            sugar = GridSugarState(
                rng, density=config.density, respawn_interval=config.respawn_interval
            )
        elif strategy.field_kind == "pixel":
            archive = ScreenArchive((self.channels, GRID, GRID), generation_index=gen_index)

        views = self._views(np.ascontiguousarray(weights, dtype=np.float64))
        hidden = np.zeros((n, config.hidden))
        x = np.zeros((n, self.input_count))
        scores = np.zeros(n, dtype=np.int64)
        steps = np.zeros(n, dtype=np.int32)
        sugar_counts = np.zeros(n, dtype=np.int64) if sugar is not None else None
        pixel_counts = np.zeros(n, dtype=np.int64) if archive is not None else None

        for t in range(config.time_frame):
            active = [i for i in range(n) if not games[i].done]
            if not active:
                break
            for i in active:
                x[i] = games[i].channels.reshape(-1)
            actions, hidden = self._forward(views, x, hidden)
            stepped_screens = {}
            for i in active:
                screen, delta, _done = games[i].step(int(actions[i]))
                scores[i] += delta
                steps[i] = t + 1
                stepped_screens[i] = screen
            if archive is not None:
                for i in active:
                    pixel_counts[i] += archive.observe(stepped_screens[i])
            if sugar is not None:
                cells = [
                    games[i].player if (i in stepped_screens and not games[i].done) else None
                    for i in range(n)
                ]
                rewards = grid_sugar_tick(sugar, rng, t, cells)
                sugar_counts += rewards

        batch = GridEpisodeBatch(
            scores=scores,
            steps_used=steps,
            sugar_counts=sugar_counts,
            pixel_counts=pixel_counts,
        )
        field = sugar if sugar is not None else archive
        return batch, field

    def replay(self, flat_weights) -> np.ndarray:
        """Champion re-run on the last evaluated layout; returns (row, col) trace."""
        layout = self._replay_layout
        if layout is None:
            layout = sample_layout(self.game, stream_rng(self.config.master_seed, STREAM_GAME, 0))
        game = make_game(self.game, layout)
        views = self._views(np.asarray(flat_weights, dtype=np.float64)[None, :])
        hidden = np.zeros((1, self.config.hidden))
        positions = [game.player]
        for _t in range(self.config.time_frame):
            if game.done:
                break
            x = game.channels.reshape(1, -1).astype(np.float64)
            actions, hidden = self._forward(views, x, hidden)
            game.step(int(actions[0]))
            positions.append(game.player)
        return np.asarray(positions, dtype=np.float64)


@dataclass
class BatteryResult:
    strategy: str
    game: str
    mean_champion_score: float
    record: RunRecord


def game_episode_battery(config: RunConfig, tail: int = 100) -> BatteryResult:
    """Evolve on a grid game and average the champion's score over the last
    `tail` generations (the run's configured strategy picks champions; the
    reported metric is always the game score)."""
    env = GridEnvironment(config)
    strategy = make_game_strategy(config)
    record = evolve_run(config, env, strategy)
    tail_scores = [r.champion_score for r in record.reports[-tail:]]
    mean_score = float(np.mean(tail_scores)) if tail_scores else 0.0
    return BatteryResult(
        strategy=strategy.name, game=config.game, mean_champion_score=mean_score, record=record
    )
