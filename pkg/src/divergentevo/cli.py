"""Command-line entry point: run / sweep-density / ablation / games / render."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, RunConfig, apply_overrides, parse_config_file
from .engine import BACKEND
from .harness import (
    ABLATION_MODES,
    ExperimentSpec,
    build_maze_run,
    export_trajectory,
    load_profile,
    run_ablation,
    run_density_sweep,
    run_experiment,
    run_games,
)

MAZE_STRATEGIES = ("fitness", "novelty", "sugar", "weighted")
GAME_STRATEGIES = ("fitness", "sugar", "pixel")


def _add_common(parser):
    parser.add_argument("--config", help="key = value config file")
    parser.add_argument("--profile", choices=("desk", "paper"), help="builtin experiment profile")
    parser.add_argument("--seed", type=int, help="seed base; run i uses seed+i")
    parser.add_argument("--runs", type=int, help="independent runs per cell")
    parser.add_argument("--map", help="map file or builtin name (medium/hard/superhard)")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--jobs", type=int, default=1, help="parallel worker processes")


def _gather(args, base: RunConfig | None = None):
    """Merge profile < config file < flags into (RunConfig, harness keys)."""
    raw = {}
    if args.profile:
        raw.update(load_profile(args.profile))
    if getattr(args, "config", None):
        raw.update(parse_config_file(args.config))
    harness = {k: raw.pop(k) for k in ("runs", "seed_base", "out") if k in raw}
    cfg = apply_overrides(base if base is not None else RunConfig(), raw)
    if getattr(args, "map", None):
        cfg = cfg.replace(map=args.map)
    runs = args.runs if args.runs is not None else int(harness.get("runs", 10))
    seed_base = args.seed if args.seed is not None else int(harness.get("seed_base", 1000))
    out = Path(args.out) if args.out else Path(harness.get("out", "out"))
    return cfg.validate(), runs, seed_base, out


def _print_summary(strategies, result):
    for s in strategies:
        summary = result.summaries[s]
        mean = "-" if summary.mean is None else f"{summary.mean:.1f}"
        std = "-" if summary.std is None else f"{summary.std:.2f}"
        print(
            f"  {s:<16} successes {summary.successes}/{summary.n}"
            f"  mean generations {mean} ({std})"
        )


def cmd_run(args) -> int:
    cfg, runs, seed_base, out = _gather(args)
    strategies = args.strategy or ["fitness", "novelty", "sugar"]
    for s in strategies:
        if s not in MAZE_STRATEGIES:
            raise ConfigError(f"strategy {s!r} not valid for maze runs")
    spec = ExperimentSpec(
        config=cfg,
        strategies=list(strategies),
        runs=runs,
        seed_base=seed_base,
        out_dir=out,
        dump_champion=args.dump_champion,
        jobs=args.jobs,
    )
    print(f"[divergent-evo] backend={BACKEND} map={cfg.map} runs={runs} seeds from {seed_base}")
    result = run_experiment(spec)
    _print_summary(strategies, result)
    print(f"  wrote {out / 'summary.csv'}")
    return 0


def cmd_sweep_density(args) -> int:
    cfg, runs, seed_base, out = _gather(args)
    densities = sorted(float(d) for d in args.densities.split(","))
    spec = ExperimentSpec(
        config=cfg, strategies=["sugar"], runs=runs, seed_base=seed_base,
        out_dir=out, jobs=args.jobs,
    )
    print(f"[divergent-evo] density sweep {densities} on {cfg.map}, {runs} runs each")
    rows = run_density_sweep(spec, densities)
    for row in rows:
        s = row["summary"]
        mean = "-" if s.mean is None else f"{s.mean:.1f}"
        print(f"  density {row['density']:<5} successes {s.successes}/{s.n} mean {mean}")
    print(f"  wrote {out / 'density_sweep.csv'}")
    return 0


def cmd_ablation(args) -> int:
    cfg, runs, seed_base, out = _gather(args)
    modes = args.modes.split(",") if args.modes else list(ABLATION_MODES)
    spec = ExperimentSpec(
        config=cfg, strategies=["sugar"], runs=runs, seed_base=seed_base,
        out_dir=out, jobs=args.jobs,
    )
    print(f"[divergent-evo] input ablation {modes} on {cfg.map}, {runs} runs each")
    rows = run_ablation(spec, modes)
    for row in rows:
        s = row["summary"]
        mean = "-" if s.mean is None else f"{s.mean:.1f}"
        print(f"  {row['input_mode']:<16} successes {s.successes}/{s.n} mean {mean}")
    print(f"  wrote {out / 'ablation.csv'}")
    return 0


def _render_frames(game_name: str, frames: int, seed: int):
    import numpy as np

    from .evolution import STREAM_GAME, stream_rng
    from .gridgames import GRID, make_game, sample_layout

    layout = sample_layout(game_name, stream_rng(seed, STREAM_GAME, 0))
    game = make_game(game_name, layout)
    rng = np.random.default_rng(seed)
    glyphs = {"collector": "P*E", "crossing": "P*"}[game_name]
    for frame in range(frames):
        if game.done:
            print(f"frame {frame}: game over")
            break
        game.step(int(rng.integers(5)))
        grid = [["." for _ in range(GRID)] for _ in range(GRID)]
        for ch in range(game.channels.shape[0]):
            for r, c in np.argwhere(game.channels[ch]):
                grid[r][c] = glyphs[ch]
        print(f"frame {game.frame} score {game.score}")
        print("\n".join("".join(row) for row in grid))
        print()


def cmd_games(args) -> int:
    base = RunConfig(population_size=75, time_frame=250, max_generations=args.generations,
                     game=args.game)
    cfg, _runs, seed_base, out = _gather(args, base=base)
    cfg = cfg.replace(master_seed=seed_base).validate()
    if args.render_frames:
        _render_frames(cfg.game, args.render_frames, seed_base)
        return 0
    strategies = args.strategy or list(GAME_STRATEGIES)
    for s in strategies:
        if s not in GAME_STRATEGIES:
            raise ConfigError(f"strategy {s!r} not valid for grid games")
    print(
        f"[divergent-evo] game={cfg.game} strategies={strategies} "
        f"generations={cfg.max_generations}"
    )
    rows = run_games(cfg, strategies, out_dir=out, tail=args.tail)
    for battery in rows:
        print(f"  {battery.strategy:<10} mean champion score {battery.mean_champion_score:.2f}")
    print(f"  wrote {out / 'games_summary.csv'}")
    return 0


def cmd_render(args) -> int:
    from .evolution import evolve_run

    cfg, _runs, seed_base, out = _gather(args)
    cfg = cfg.replace(
        strategy=args.strategy,
        master_seed=args.seed if args.seed is not None else seed_base,
        max_generations=max(cfg.max_generations, args.generation + 1),
    ).validate()
    env, strategy = build_maze_run(cfg)
    record = evolve_run(cfg, env, strategy)
    if not any(r.index == args.generation for r in record.reports):
        last = record.reports[-1].index if record.reports else None
        raise ConfigError(
            f"run ended at generation {last}; cannot render generation {args.generation}"
        )
    sugar_field = None
    if strategy.field_kind == "sugar":
        sugar_field = env._make_field(args.generation, cfg)
    path = export_trajectory(
        record, args.generation, env.maze_map, out / f"trajectory_{args.generation}.svg",
        sugar_field=sugar_field,
    )
    print(f"[divergent-evo] wrote {path}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="divergent-evo",
        description="Deterministic neuroevolution experiments on deceptive mazes and grid games",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="batch maze runs for one or more strategies")
    _add_common(p_run)
    p_run.add_argument("--strategy", action="append", help="repeatable; default the three basics")
    p_run.add_argument("--dump-champion", action="store_true",
                       help="write champion_<seed>.genome per run")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep-density", help="sugar density sweep")
    _add_common(p_sweep)
    p_sweep.add_argument("--densities", default="0.05,0.3,1.0", help="comma-separated densities")
    p_sweep.set_defaults(func=cmd_sweep_density)

    p_abl = sub.add_parser("ablation", help="input-mode ablation with the sugar strategy")
    _add_common(p_abl)
    p_abl.add_argument("--modes", help="comma-separated subset of sensors,binary_counter,no_input")
    p_abl.set_defaults(func=cmd_ablation)

    p_games = sub.add_parser("games", help="grid-game batteries")
    _add_common(p_games)
    p_games.add_argument("--game", choices=("collector", "crossing"), default="collector")
    p_games.add_argument("--strategy", action="append", help="fitness, sugar and/or pixel")
    p_games.add_argument("--generations", type=int, default=200)
    p_games.add_argument("--tail", type=int, default=100,
                         help="generations averaged for the battery score")
    p_games.add_argument("--render-frames", type=int, default=0,
                         help="debug: print N frames of a random rollout as text art")
    p_games.set_defaults(func=cmd_games)

    p_render = sub.add_parser("render", help="replay one run and export an SVG trajectory")
    _add_common(p_render)
    p_render.add_argument("--strategy", default="sugar")
    p_render.add_argument("--generation", type=int, required=True)
    p_render.set_defaults(func=cmd_render)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
