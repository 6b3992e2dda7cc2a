"""Benchmark the compiled episode kernel against the numpy fallback.

Runs one full-size maze generation (population x time_frame lockstep
episodes) per scenario on each available backend and reports throughput.

    python benchmarks/bench_backends.py [--population 250] [--time-frame 600]
"""

import argparse
import time

import numpy as np

from divergentevo.engine import available_backends, get_backend
from divergentevo.maze import load_maze
from divergentevo.rnn import NetworkDims
from divergentevo.strategies import rasterize_walls


def bench(args):
    maze_map = load_maze(args.map)
    dims = NetworkDims(8, 32, 4)
    weights = np.random.default_rng(args.seed).standard_normal(
        (args.population, dims.param_count)
    )
    wall_mask = rasterize_walls(maze_map, 1.0)
    sugar = ((np.random.default_rng(1).random(wall_mask.shape) < 0.3) & ~wall_mask).astype(
        np.int8
    )
    common = dict(
        n_inputs=8,
        n_hidden=32,
        n_outputs=4,
        walls=maze_map.walls,
        width=maze_map.width,
        height=maze_map.height,
        start_x=float(maze_map.start[0]),
        start_y=float(maze_map.start[1]),
        goal_x=float(maze_map.goal[0]),
        goal_y=float(maze_map.goal[1]),
        goal_radius=maze_map.goal_radius,
        input_mode=0,
        counter_bits=10,
        time_frame=args.time_frame,
        speed=1.5,
        collision_freeze=False,
        cell_size=1.0,
        record_positions=False,
    )
    scenarios = [
        ("episodes only", dict(sugar_state=None)),
        ("episodes + sugar lockstep", dict()),
    ]
    agent_steps = args.population * args.time_frame
    print(f"map={args.map} population={args.population} time_frame={args.time_frame}")
    reference = {}
    for name in available_backends():
        backend = get_backend(name)
        for label, extra in scenarios:
            kwargs = dict(common)
            kwargs["sugar_state"] = None if "sugar_state" in extra else sugar.copy()
            backend.run_maze_generation(weights, **kwargs)  # warm-up
            times = []
            for _ in range(args.repeat):
                kwargs["sugar_state"] = None if "sugar_state" in extra else sugar.copy()
                t0 = time.perf_counter()
                backend.run_maze_generation(weights, **kwargs)
                times.append(time.perf_counter() - t0)
            best = min(times)
            rate = agent_steps / best / 1e6
            key = label
            speedup = ""
            if name == "compiled":
                reference[key] = best
            elif key in reference:
                speedup = f"  ({best / reference[key]:.1f}x slower than compiled)"
            print(f"  {name:<9} {label:<26} {best * 1000:8.1f} ms/gen  "
                  f"{rate:6.2f} M agent-steps/s{speedup}")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--map", default="medium")
    parser.add_argument("--population", type=int, default=250)
    parser.add_argument("--time-frame", type=int, default=600)
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    bench(args)


if __name__ == "__main__":
    main()
