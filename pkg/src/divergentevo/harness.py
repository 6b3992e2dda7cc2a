"""Experiment orchestration: batch runs, sweeps, ablations, CSV, SVG export.

All CSV outputs start with the schema comment `# divergent-evo v1`. Every
run is reproducible from the seed recorded in its own file; run i of an
experiment uses seed_base + i.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig
from .evolution import MazeEnvironment, RunRecord, evolve_run
from .maze import InputMode, MazeMap, load_maze
from .rnn import Genome, NetworkDims, save_genome
from .stats import SampleSummary, summarize, t_test

CSV_SCHEMA = "# divergent-evo v1"

RUN_COLUMNS = (
    "generation",
    "best_fitness",
    "mean_fitness",
    "sugar_total",
    "solved",
    "champion_steps",
    "champion_final_x",
    "champion_final_y",
    "champion_score",
)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def load_profile(name: str) -> dict:
    """Raw key/value mapping of a builtin profile (desk or paper)."""
    if name not in ("desk", "paper"):
        raise ConfigError(f"unknown profile {name!r} (expected desk or paper)")
    ref = resources.files("divergentevo").joinpath("profiles", f"{name}.cfg")
    from .config import parse_config_text

    return parse_config_text(ref.read_text(), source=f"profile:{name}")


def build_maze_run(config: RunConfig):
    """Environment and strategy for one maze run described by the config."""
    from .strategies import make_maze_strategy

    maze_map = load_maze(config.map)
    mode = InputMode(config.input_mode, counter_bits=config.counter_bits)
    env = MazeEnvironment(maze_map, mode, config)
    strategy = make_maze_strategy(config, maze_map)
    return env, strategy


def run_rows(record: RunRecord) -> list:
    rows = []
    for r in record.reports:
        final = r.champion_trace[-1]
        rows.append(
            {
                "generation": r.index,
                "best_fitness": r.best_fitness,
                "mean_fitness": r.mean_fitness,
                "sugar_total": r.sugar_total,
                "solved": r.solved,
                "champion_steps": r.champion_steps,
                "champion_final_x": float(final[0]),
                "champion_final_y": float(final[1]),
                "champion_score": r.champion_score,
            }
        )
    return rows


def write_run_csv(record: RunRecord, path):
    path = Path(path)
    with open(path, "w", newline="") as fh:
        fh.write(f"{CSV_SCHEMA}\n")
        fh.write(f"# seed={record.seed} strategy={record.strategy} env={record.env_id}\n")
        writer = csv.writer(fh)
        writer.writerow(RUN_COLUMNS)
        for row in run_rows(record):
            writer.writerow([_fmt(row[c]) for c in RUN_COLUMNS])


def read_run_csv(path) -> dict:
    path = Path(path)
    meta = {}
    rows = []
    with open(path, newline="") as fh:
        lines = fh.read().splitlines()
    body = []
    for line in lines:
        if line.startswith("#"):
            for token in line.lstrip("# ").split():
                if "=" in token:
                    key, value = token.split("=", 1)
                    meta[key] = value
        else:
            body.append(line)
    reader = csv.DictReader(io.StringIO("\n".join(body)))
    for row in reader:
        rows.append(row)
    return {"meta": meta, "rows": rows}


@dataclass
class RunOutcome:
    seed: int
    strategy: str
    generations_to_solve: int | None
    n_generations: int

    @property
    def generations_needed(self) -> int | None:
        """1-based count of generations needed, as reported in tables."""
        if self.generations_to_solve is None:
            return None
        return self.generations_to_solve + 1


@dataclass
class ExperimentSpec:
    config: RunConfig
    strategies: list
    runs: int = 10
    seed_base: int = 1000
    out_dir: Path | None = None
    dump_champion: bool = False
    jobs: int = 1

    def __post_init__(self):
        if self.runs < 1:
            raise ConfigError("runs must be >= 1")
        if self.out_dir is not None:
            self.out_dir = Path(self.out_dir)


def _execute_one(args):
    config, out_dir, dump_champion = args
    env, strategy = build_maze_run(config)
    record = evolve_run(config, env, strategy)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_run_csv(record, out / f"run_{record.seed}.csv")
        if dump_champion and record.champion_weights is not None:
            dims = NetworkDims(env.input_count, config.hidden, env.output_count)
            genome = Genome(dims, record.champion_weights)
            save_genome(genome, out / f"champion_{record.seed}.genome")
    return RunOutcome(
        seed=record.seed,
        strategy=record.strategy,
        generations_to_solve=record.generations_to_solve,
        n_generations=len(record.reports),
    )


def _strategy_config(spec: ExperimentSpec, strategy: str, seed: int) -> RunConfig:
    return replace(spec.config, strategy=strategy, master_seed=seed).validate()


@dataclass
class ExperimentResult:
    outcomes: dict  # strategy -> list[RunOutcome] in seed order
    summaries: dict  # strategy -> SampleSummary
    p_values: dict  # (strategy_a, strategy_b) -> float | None


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    """Execute runs x strategies, write per-run CSVs and summary.csv."""
    tasks = []
    for strategy in spec.strategies:
        for i in range(spec.runs):
            cfg = _strategy_config(spec, strategy, spec.seed_base + i)
            tasks.append((cfg, str(spec.out_dir) if spec.out_dir else None, spec.dump_champion))
    if spec.jobs > 1:
        with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
            results = list(pool.map(_execute_one, tasks))
    else:
        results = [_execute_one(t) for t in tasks]
    outcomes = {s: [] for s in spec.strategies}
    for outcome in results:
        outcomes[outcome.strategy].append(outcome)
    summaries = {
        s: summarize(
            [o.generations_needed for o in outs if o.generations_needed is not None],
            n_total=len(outs),
        )
        for s, outs in outcomes.items()
    }
    p_values = {}
    for sa in spec.strategies:
        for sb in spec.strategies:
            if sa == sb:
                continue
            a = [o.generations_needed for o in outcomes[sa] if o.generations_needed is not None]
            b = [o.generations_needed for o in outcomes[sb] if o.generations_needed is not None]
            p_values[(sa, sb)] = t_test(a, b).p_value if len(a) >= 2 and len(b) >= 2 else None
    result = ExperimentResult(outcomes=outcomes, summaries=summaries, p_values=p_values)
    if spec.out_dir is not None:
        write_summary_csv(result, spec.strategies, spec.out_dir / "summary.csv")
    return result


def write_summary_csv(result: ExperimentResult, strategies, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(f"{CSV_SCHEMA}\n")
        writer = csv.writer(fh)
        header = ["strategy", "n", "successes", "mean_generations", "std_generations"]
        header += [f"p_vs_{s}" for s in strategies]
        writer.writerow(header)
        for s in strategies:
            summary = result.summaries[s]
            row = [
                s,
                summary.n,
                summary.successes,
                _fmt(summary.mean),
                _fmt(summary.std),
            ]
            for other in strategies:
                row.append("" if other == s else _fmt(result.p_values.get((s, other))))
            writer.writerow(row)


def summary_from_run_files(out_dir, strategy: str) -> SampleSummary:
    """Recompute a strategy's summary from its per-run CSV files."""
    out_dir = Path(out_dir)
    needed = []
    total = 0
    for path in sorted(out_dir.glob("run_*.csv")):
        data = read_run_csv(path)
        if data["meta"].get("strategy") != strategy:
            continue
        total += 1
        for row in data["rows"]:
            if row["solved"] == "1":
                needed.append(int(row["generation"]) + 1)
                break
    return summarize(needed, n_total=total)


def run_density_sweep(spec: ExperimentSpec, densities) -> list:
    """Sugar-strategy sweep over field densities; writes density_sweep.csv."""
    densities = [float(d) for d in densities]
    if sorted(densities) != densities:
        raise ConfigError("densities must be sorted ascending")
    if any(not 0.0 <= d <= 1.0 for d in densities):
        raise ConfigError("densities must lie in [0, 1]")
    rows = []
    for density in densities:
        sub = replace(
            spec,
            config=replace(spec.config, density=density, strategy="sugar"),
            strategies=["sugar"],
            out_dir=(spec.out_dir / f"density_{density}") if spec.out_dir else None,
        )
        result = run_experiment(sub)
        summary = result.summaries["sugar"]
        rows.append({"density": density, "summary": summary})
    if spec.out_dir is not None:
        path = spec.out_dir / "density_sweep.csv"
        with open(path, "w", newline="") as fh:
            fh.write(f"{CSV_SCHEMA}\n")
            writer = csv.writer(fh)
            writer.writerow(["density", "n", "successes", "mean_generations", "std_generations"])
            for row in rows:
                s = row["summary"]
                writer.writerow(
                    [_fmt(row["density"]), s.n, s.successes, _fmt(s.mean), _fmt(s.std)]
                )
    return rows


ABLATION_MODES = ("sensors", "binary_counter", "no_input")


def run_ablation(spec: ExperimentSpec, modes=ABLATION_MODES) -> list:
    """Sugar-strategy input ablation (sensors / counter / blind)."""
    for mode in modes:
        if mode not in ABLATION_MODES:
            raise ConfigError(f"unknown input mode {mode!r}")
    rows = []
    for mode in modes:
        sub = replace(
            spec,
            config=replace(spec.config, input_mode=mode, strategy="sugar"),
            strategies=["sugar"],
            out_dir=(spec.out_dir / f"mode_{mode}") if spec.out_dir else None,
        )
        result = run_experiment(sub)
        rows.append({"input_mode": mode, "summary": result.summaries["sugar"]})
    if spec.out_dir is not None:
        path = spec.out_dir / "ablation.csv"
        with open(path, "w", newline="") as fh:
            fh.write(f"{CSV_SCHEMA}\n")
            writer = csv.writer(fh)
            writer.writerow(
                ["input_mode", "n", "successes", "mean_generations", "std_generations"]
            )
            for row in rows:
                s = row["summary"]
                writer.writerow([row["input_mode"], s.n, s.successes, _fmt(s.mean), _fmt(s.std)])
    return rows


# --- trajectory export ------------------------------------------------------------


def trajectory_svg(maze_map: MazeMap, trace: np.ndarray, sugar_field=None) -> str:
    """Deterministic SVG: walls, start (red), goal (green), sugar, champion path."""

    def fx(x):
        return format(float(x), ".3f")

    def fy(y):
        return format(float(maze_map.height - y), ".3f")

    w, h = maze_map.width, maze_map.height
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {fx(w)} {fx(h)}" '
        f'width="{fx(4 * w)}" height="{fx(4 * h)}">',
        f'<rect x="0" y="0" width="{fx(w)}" height="{fx(h)}" fill="white"/>',
    ]
    if sugar_field is not None:
        cell = sugar_field.cell_size
        seeded = (sugar_field.state == 1) | (sugar_field.collector >= 0)
        for iy, ix in np.argwhere(seeded):
            parts.append(
                f'<rect x="{fx(ix * cell)}" y="{fy((iy + 1) * cell)}" '
                f'width="{fx(cell)}" height="{fx(cell)}" fill="#c8c8c8"/>'
            )
    bounds = ((0, 0, w, 0), (w, 0, w, h), (w, h, 0, h), (0, h, 0, 0))
    for x1, y1, x2, y2 in bounds:
        parts.append(
            f'<line x1="{fx(x1)}" y1="{fy(y1)}" x2="{fx(x2)}" y2="{fy(y2)}" '
            'stroke="black" stroke-width="1"/>'
        )
    for x1, y1, x2, y2 in maze_map.walls:
        parts.append(
            f'<line x1="{fx(x1)}" y1="{fy(y1)}" x2="{fx(x2)}" y2="{fy(y2)}" '
            'stroke="black" stroke-width="1"/>'
        )
    points = " ".join(f"{fx(p[0])},{fy(p[1])}" for p in np.asarray(trace))
    parts.append(
        f'<polyline points="{points}" fill="none" stroke="#3060ff" stroke-width="0.8"/>'
    )
    parts.append(
        f'<circle cx="{fx(maze_map.start[0])}" cy="{fy(maze_map.start[1])}" r="2.5" fill="red"/>'
    )
    parts.append(
        f'<circle cx="{fx(maze_map.goal[0])}" cy="{fy(maze_map.goal[1])}" r="2.5" fill="green"/>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def export_trajectory(record: RunRecord, generation_index: int, maze_map: MazeMap,
                      out_path, sugar_field=None) -> Path:
    """Write the champion trajectory of one generation as an SVG file."""
    matching = [r for r in record.reports if r.index == generation_index]
    if not matching:
        raise ValueError(f"run record has no generation {generation_index}")
    report = matching[0]
    if report.champion_trace is None or len(report.champion_trace) == 0:
        raise ValueError(f"generation {generation_index} carries no champion trace")
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(trajectory_svg(maze_map, report.champion_trace, sugar_field))
    return out_path


# --- grid games -----------------------------------------------------------------


def run_games(config: RunConfig, strategies, out_dir=None, tail: int = 100) -> list:
    """Battery per strategy on the configured game; writes games_summary.csv."""
    from .gridgames import game_episode_battery

    rows = []
    for strategy in strategies:
        cfg = replace(config, strategy=strategy).validate()
        battery = game_episode_battery(cfg, tail=tail)
        rows.append(battery)
        if out_dir is not None:
            out = Path(out_dir)
            out.mkdir(parents=True, exist_ok=True)
            write_run_csv(battery.record, out / f"run_{battery.record.seed}_{strategy}.csv")
    if out_dir is not None:
        path = Path(out_dir) / "games_summary.csv"
        with open(path, "w", newline="") as fh:
            fh.write(f"{CSV_SCHEMA}\n")
            writer = csv.writer(fh)
            writer.writerow(["game", "strategy", "generations", "mean_champion_score"])
            for battery in rows:
                writer.writerow(
                    [
                        battery.game,
                        battery.strategy,
                        len(battery.record.reports),
                        _fmt(battery.mean_champion_score),
                    ]
                )
    return rows
