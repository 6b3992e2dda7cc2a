"""Vectorized numpy backend for the lockstep maze generation evaluator.

This is the pure-Python fallback for the compiled kernel; both implement
the same tick order (inputs -> forward -> move -> collect -> finish) with
identical arithmetic so runs replay the same on either backend.
"""

from __future__ import annotations

import math

import numpy as np

from ..maze import ACTION_VECTORS
from ..rnn import HIDDEN_CLAMP

INPUT_SENSORS = 0
INPUT_NONE = 1
INPUT_COUNTER = 2

_DIRS = ((1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0))


def _sense_batch(pos, walls, width, height, goal, diag):
    n = pos.shape[0]
    out = np.zeros((n, 8))
    px, py = pos[:, 0], pos[:, 1]
    if walls.shape[0]:
        wx1, wy1, wx2, wy2 = walls[:, 0], walls[:, 1], walls[:, 2], walls[:, 3]
        sx, sy = wx2 - wx1, wy2 - wy1
    for i, (dx, dy) in enumerate(_DIRS):
        if dx > 0:
            best = width - px
        elif dx < 0:
            best = px.copy()
        elif dy > 0:
            best = height - py
        else:
            best = py.copy()
        if walls.shape[0]:
            denom = dx * sy - dy * sx  # (W,)
            ax = wx1[None, :] - px[:, None]
            ay = wy1[None, :] - py[:, None]
            with np.errstate(divide="ignore", invalid="ignore"):
                t = (ax * sy[None, :] - ay * sx[None, :]) / denom[None, :]
                u = (ax * dy - ay * dx) / denom[None, :]
            valid = (denom[None, :] != 0.0) & (t >= 0.0) & (u >= 0.0) & (u <= 1.0)
            t = np.where(valid, t, np.inf)
            best = np.minimum(best, t.min(axis=1))
        out[:, i] = np.minimum(1.0, np.maximum(0.0, best / diag))
    gdx = goal[0] - px
    gdy = goal[1] - py
    horiz = np.abs(gdx) >= np.abs(gdy)
    quad = np.where(horiz, np.where(gdx >= 0.0, 0, 1), np.where(gdy >= 0.0, 2, 3))
    out[np.arange(n), 4 + quad] = 1.0
    return out


def _hits_any_wall(p, c, walls, wall_bbox):
    """Per-agent test: does the movement segment touch or cross any wall."""
    if walls.shape[0] == 0:
        return np.zeros(p.shape[0], dtype=bool)
    px, py = p[:, 0:1], p[:, 1:2]
    cx, cy = c[:, 0:1], c[:, 1:2]
    wx1, wy1, wx2, wy2 = (walls[:, i][None, :] for i in range(4))
    wsx, wsy = wx2 - wx1, wy2 - wy1
    d1 = wsx * (py - wy1) - wsy * (px - wx1)
    d2 = wsx * (cy - wy1) - wsy * (cx - wx1)
    msx, msy = cx - px, cy - py
    d3 = msx * (wy1 - py) - msy * (wx1 - px)
    d4 = msx * (wy2 - py) - msy * (wx2 - px)
    proper = (((d1 > 0) & (d2 < 0)) | ((d1 < 0) & (d2 > 0))) & (
        ((d3 > 0) & (d4 < 0)) | ((d3 < 0) & (d4 > 0))
    )
    bxmin, bxmax, bymin, bymax = (wall_bbox[:, i][None, :] for i in range(4))
    mxmin, mxmax = np.minimum(px, cx), np.maximum(px, cx)
    mymin, mymax = np.minimum(py, cy), np.maximum(py, cy)
    touch = (
        ((d1 == 0) & (bxmin <= px) & (px <= bxmax) & (bymin <= py) & (py <= bymax))
        | ((d2 == 0) & (bxmin <= cx) & (cx <= bxmax) & (bymin <= cy) & (cy <= bymax))
        | ((d3 == 0) & (mxmin <= wx1) & (wx1 <= mxmax) & (mymin <= wy1) & (wy1 <= mymax))
        | ((d4 == 0) & (mxmin <= wx2) & (wx2 <= mxmax) & (mymin <= wy2) & (wy2 <= mymax))
    )
    return (proper | touch).any(axis=1)


def run_maze_generation(
    weights,
    n_inputs,
    n_hidden,
    n_outputs,
    walls,
    width,
    height,
    start_x,
    start_y,
    goal_x,
    goal_y,
    goal_radius,
    input_mode,
    counter_bits,
    time_frame,
    speed,
    collision_freeze,
    sugar_state,
    cell_size,
    record_positions=False,
):
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    n = weights.shape[0]
    i_n, h_n, o_n = int(n_inputs), int(n_hidden), int(n_outputs)
    a = h_n * i_n
    b = a + h_n * h_n
    c = b + o_n * h_n
    d = c + h_n
    # Transposed-per-term layouts so the accumulation below can mirror the
    # compiled kernel's summation order exactly (bias, inputs, recurrent),
    # keeping both backends bit-identical.
    w_ih_t = np.ascontiguousarray(weights[:, :a].reshape(n, h_n, i_n).transpose(2, 0, 1))
    w_hh_t = np.ascontiguousarray(weights[:, a:b].reshape(n, h_n, h_n).transpose(2, 0, 1))
    w_ho_t = np.ascontiguousarray(weights[:, b:c].reshape(n, o_n, h_n).transpose(2, 0, 1))
    b_h = weights[:, c:d]
    b_o = weights[:, d:]

    walls = np.ascontiguousarray(walls, dtype=np.float64).reshape(-1, 4)
    wall_bbox = np.column_stack(
        [
            np.minimum(walls[:, 0], walls[:, 2]),
            np.maximum(walls[:, 0], walls[:, 2]),
            np.minimum(walls[:, 1], walls[:, 3]),
            np.maximum(walls[:, 1], walls[:, 3]),
        ]
    ) if walls.shape[0] else np.zeros((0, 4))
    goal = np.array([goal_x, goal_y])
    diag = math.sqrt(width * width + height * height)

    pos = np.tile(np.array([start_x, start_y]), (n, 1))
    hidden = np.zeros((n, h_n))
    reached = np.zeros(n, dtype=bool)
    steps = np.zeros(n, dtype=np.int32)
    # Squared-distance goal tests keep the compiled backend bit-compatible.
    r2 = float(goal_radius) * float(goal_radius)
    sdx, sdy = start_x - goal_x, start_y - goal_y
    if sdx * sdx + sdy * sdy <= r2:
        reached[:] = True
    alive = ~reached

    have_sugar = sugar_state is not None
    if have_sugar:
        sugar_flat = sugar_state.reshape(-1)
        grid_h, grid_w = sugar_state.shape
        counts = np.zeros(n, dtype=np.int64)
        events = []
    positions = None
    if record_positions:
        positions = np.empty((n, time_frame + 1, 2))
        positions[:, 0] = pos

    for t in range(time_frame):
        if not alive.any():
            if record_positions:
                positions[:, t + 1 :] = pos[:, None, :]
            break
        if input_mode == INPUT_SENSORS:
            x = _sense_batch(pos, walls, width, height, goal, diag)
        elif input_mode == INPUT_NONE:
            x = np.zeros((n, 0))
        else:
            bits = np.array([(t >> k) & 1 for k in range(counter_bits)], dtype=np.float64)
            x = np.broadcast_to(bits, (n, counter_bits))

        pre = b_h.copy()
        for k in range(i_n):
            pre += w_ih_t[k] * x[:, k, None]
        for k in range(h_n):
            pre += w_hh_t[k] * hidden[:, k, None]
        hidden = np.minimum(np.maximum(pre, 0.0), HIDDEN_CLAMP)
        y = b_o.copy()
        for k in range(h_n):
            y += w_ho_t[k] * hidden[:, k, None]
        actions = np.argmax(y, axis=1)

        cand = pos + speed * ACTION_VECTORS[actions]
        in_bounds = (
            (cand[:, 0] > 0.0)
            & (cand[:, 0] < width)
            & (cand[:, 1] > 0.0)
            & (cand[:, 1] < height)
        )
        blocked = ~in_bounds | _hits_any_wall(pos, cand, walls, wall_bbox)
        move = alive & ~blocked
        pos = np.where(move[:, None], cand, pos)

        if have_sugar:
            idx = np.nonzero(alive)[0]
            ix = np.clip(np.floor(pos[idx, 0] / cell_size).astype(np.int64), 0, grid_w - 1)
            iy = np.clip(np.floor(pos[idx, 1] / cell_size).astype(np.int64), 0, grid_h - 1)
            flat = iy * grid_w + ix
            uniq, first = np.unique(flat, return_index=True)
            has = sugar_flat[uniq] == 1
            cells = uniq[has]
            agents = idx[first[has]]
            if cells.size:
                sugar_flat[cells] = 0
                counts[agents] += 1
                order = np.argsort(agents)
                for j in order:
                    events.append((t, int(agents[j]), int(cells[j])))

        gdx = pos[:, 0] - goal_x
        gdy = pos[:, 1] - goal_y
        newly = alive & (gdx * gdx + gdy * gdy <= r2)
        steps[alive] = t + 1
        reached |= newly
        finished = newly
        if collision_freeze:
            finished = finished | (alive & blocked)
        alive = alive & ~finished
        if record_positions:
            positions[:, t + 1] = pos

    result = {
        "final_positions": pos,
        "reached": reached,
        "steps_used": steps,
        "sugar_counts": counts if have_sugar else None,
        "events": np.array(events, dtype=np.int64).reshape(-1, 3) if have_sugar else None,
        "positions": positions,
    }
    return result
