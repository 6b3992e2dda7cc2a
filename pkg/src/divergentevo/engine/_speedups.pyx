# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled lockstep maze generation evaluator.

Mirrors engine._python tick for tick: inputs -> forward -> move ->
collect (ascending agent id) -> finish checks. Geometry and accumulation
order use the exact expressions of the Python backend so recorded runs
replay identically on either backend.

Without a sugar field the agents are fully independent, so episodes run
agent-major (weights stay cache-resident); with a field the shared-lattice
arbitration forces the tick-major lockstep order. Both orders perform the
same arithmetic per agent and return identical results.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport floor, sqrt

cnp.import_array()

# Must match rnn.HIDDEN_CLAMP.
cdef double HIDDEN_CLAMP = 1.0e6

# Action order: UP, DOWN, LEFT, RIGHT (maze.ACTION_VECTORS).
cdef double[4] ACT_VX = [0.0, 0.0, -1.0, 1.0]
cdef double[4] ACT_VY = [1.0, -1.0, 0.0, 0.0]

# Sensor ray order: +x, -x, +y, -y.
cdef double[4] RAY_DX = [1.0, -1.0, 0.0, 0.0]
cdef double[4] RAY_DY = [0.0, 0.0, 1.0, -1.0]

INPUT_SENSORS = 0
INPUT_NONE = 1
INPUT_COUNTER = 2


cdef inline int _argmax(const double* y, int n) nogil:
    cdef int best = 0
    cdef int j
    for j in range(1, n):
        if y[j] > y[best]:
            best = j
    return best


cdef double _ray_distance(double ox, double oy, int ray,
                          const double* walls, int n_walls,
                          double width, double height) nogil:
    cdef double dx = RAY_DX[ray]
    cdef double dy = RAY_DY[ray]
    cdef double best
    cdef double sx, sy, denom, t, u
    cdef const double* w
    cdef int k
    if dx > 0:
        best = width - ox
    elif dx < 0:
        best = ox
    elif dy > 0:
        best = height - oy
    else:
        best = oy
    for k in range(n_walls):
        w = walls + 4 * k
        sx = w[2] - w[0]
        sy = w[3] - w[1]
        denom = dx * sy - dy * sx
        if denom == 0.0:
            continue
        t = ((w[0] - ox) * sy - (w[1] - oy) * sx) / denom
        u = ((w[0] - ox) * dy - (w[1] - oy) * dx) / denom
        if t >= 0.0 and 0.0 <= u <= 1.0 and t < best:
            best = t
    return best


cdef bint _hits_wall(double px, double py, double cx, double cy,
                     const double* walls, int n_walls) nogil:
    cdef double wx1, wy1, wx2, wy2, wsx, wsy, msx, msy
    cdef double d1, d2, d3, d4
    cdef double bxmin, bxmax, bymin, bymax, mxmin, mxmax, mymin, mymax
    cdef const double* w
    cdef int k
    msx = cx - px
    msy = cy - py
    mxmin = px if px < cx else cx
    mxmax = px if px > cx else cx
    mymin = py if py < cy else cy
    mymax = py if py > cy else cy
    for k in range(n_walls):
        w = walls + 4 * k
        wx1 = w[0]
        wy1 = w[1]
        wx2 = w[2]
        wy2 = w[3]
        wsx = wx2 - wx1
        wsy = wy2 - wy1
        d1 = wsx * (py - wy1) - wsy * (px - wx1)
        d2 = wsx * (cy - wy1) - wsy * (cx - wx1)
        d3 = msx * (wy1 - py) - msy * (wx1 - px)
        d4 = msx * (wy2 - py) - msy * (wx2 - px)
        if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and \
           ((d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)):
            return True
        bxmin = wx1 if wx1 < wx2 else wx2
        bxmax = wx1 if wx1 > wx2 else wx2
        bymin = wy1 if wy1 < wy2 else wy2
        bymax = wy1 if wy1 > wy2 else wy2
        if d1 == 0 and bxmin <= px <= bxmax and bymin <= py <= bymax:
            return True
        if d2 == 0 and bxmin <= cx <= bxmax and bymin <= cy <= bymax:
            return True
        if d3 == 0 and mxmin <= wx1 <= mxmax and mymin <= wy1 <= mymax:
            return True
        if d4 == 0 and mxmin <= wx2 <= mxmax and mymin <= wy2 <= mymax:
            return True
    return False


cdef inline void _fill_sensors(double px, double py, double gx, double gy,
                               const double* walls, int n_walls,
                               double width, double height, double diag,
                               double* x) nogil:
    cdef int ray, k
    cdef double v, gdx, gdy
    for ray in range(4):
        v = _ray_distance(px, py, ray, walls, n_walls, width, height) / diag
        if v > 1.0:
            v = 1.0
        elif v < 0.0:
            v = 0.0
        x[ray] = v
    for k in range(4, 8):
        x[k] = 0.0
    gdx = gx - px
    gdy = gy - py
    if (gdx if gdx >= 0 else -gdx) >= (gdy if gdy >= 0 else -gdy):
        x[4 if gdx >= 0.0 else 5] = 1.0
    else:
        x[6 if gdy >= 0.0 else 7] = 1.0


cdef inline int _forward_action(const double* bias_h, const double* bias_o,
                                const double* ih_t, const double* hh_t,
                                const double* ho_t, const double* x,
                                double* hid, double* hn, double* yv,
                                int i_n, int h_n, int o_n) nogil:
    """One recurrent step; updates hid in place, returns the argmax action.

    Accumulation order (bias; input terms; recurrent terms; k ascending)
    matches rnn.forward and the numpy backend exactly.
    """
    cdef int j, k
    cdef double v, acc
    cdef const double* wk
    for j in range(h_n):
        hn[j] = bias_h[j]
    wk = ih_t
    for k in range(i_n):
        v = x[k]
        for j in range(h_n):
            hn[j] += wk[j] * v
        wk += h_n
    wk = hh_t
    for k in range(h_n):
        v = hid[k]
        for j in range(h_n):
            hn[j] += wk[j] * v
        wk += h_n
    for j in range(h_n):
        acc = hn[j]
        if acc < 0.0:
            acc = 0.0
        elif acc > HIDDEN_CLAMP:
            acc = HIDDEN_CLAMP
        hn[j] = acc
        hid[j] = acc
    for j in range(o_n):
        yv[j] = bias_o[j]
    wk = ho_t
    for k in range(h_n):
        v = hn[k]
        for j in range(o_n):
            yv[j] += wk[j] * v
        wk += o_n
    return _argmax(yv, o_n)


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
    w_arr = np.ascontiguousarray(weights, dtype=np.float64)
    cdef int n = w_arr.shape[0]
    cdef int i_n = n_inputs
    cdef int h_n = n_hidden
    cdef int o_n = n_outputs
    cdef Py_ssize_t off_hh = h_n * i_n
    cdef Py_ssize_t off_ho = off_hh + h_n * h_n
    cdef Py_ssize_t off_bh = off_ho + o_n * h_n
    cdef Py_ssize_t off_bo = off_bh + h_n
    # Term-major (k-outer) weight copies: the inner j-loops vectorize while
    # each element keeps the Python backend's accumulation order.
    if i_n > 0:
        ih_t_arr = np.ascontiguousarray(
            w_arr[:, :off_hh].reshape(n, h_n, i_n).transpose(0, 2, 1)
        )
    else:
        ih_t_arr = np.zeros((n, 0, h_n))
    hh_t_arr = np.ascontiguousarray(
        w_arr[:, off_hh:off_ho].reshape(n, h_n, h_n).transpose(0, 2, 1)
    )
    ho_t_arr = np.ascontiguousarray(
        w_arr[:, off_ho:off_bh].reshape(n, o_n, h_n).transpose(0, 2, 1)
    )
    cdef const double[:, :, ::1] ih_t = ih_t_arr
    cdef const double[:, :, ::1] hh_t = hh_t_arr
    cdef const double[:, :, ::1] ho_t = ho_t_arr
    cdef const double[:, ::1] w_mat = w_arr

    walls_arr = np.ascontiguousarray(np.asarray(walls, dtype=np.float64).reshape(-1, 4))
    cdef const double[:, ::1] w_view = walls_arr
    cdef int n_walls = w_view.shape[0]
    cdef const double* wallp = &w_view[0, 0] if n_walls > 0 else NULL

    cdef double wd = width
    cdef double ht = height
    cdef double sx0 = start_x
    cdef double sy0 = start_y
    cdef double gx = goal_x
    cdef double gy = goal_y
    cdef double r2 = <double> goal_radius * <double> goal_radius
    cdef double sp = speed
    cdef double diag = sqrt(wd * wd + ht * ht)
    cdef int mode = input_mode
    cdef int bits = counter_bits
    cdef int t_frames = time_frame
    cdef bint freeze = collision_freeze
    cdef double cell = cell_size

    cdef bint have_sugar = sugar_state is not None
    cdef signed char[:, ::1] sugar
    cdef signed char* sugarp = NULL
    cdef int grid_h = 0, grid_w = 0
    cdef long long max_events = 0
    cdef long long[:, ::1] events_view
    cdef long long n_events = 0
    cdef long long[::1] counts_view
    cdef long long* countsp = NULL
    events_arr = None
    counts_arr = None
    if have_sugar:
        sugar = sugar_state
        grid_h = sugar.shape[0]
        grid_w = sugar.shape[1]
        if grid_h > 0 and grid_w > 0:
            sugarp = &sugar[0, 0]
        max_events = int(np.asarray(sugar_state).sum())
        events_arr = np.zeros((max(1, max_events), 3), dtype=np.int64)
        events_view = events_arr
        counts_arr = np.zeros(n, dtype=np.int64)
        counts_view = counts_arr
        countsp = &counts_view[0]

    pos_arr = np.empty((n, 2), dtype=np.float64)
    pos_arr[:, 0] = sx0
    pos_arr[:, 1] = sy0
    cdef double[:, ::1] pos = pos_arr
    hidden_arr = np.zeros((n, h_n), dtype=np.float64)
    cdef double[:, ::1] hidden = hidden_arr
    reached_arr = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[::1] reached = reached_arr
    alive_arr = np.ones(n, dtype=np.uint8)
    cdef unsigned char[::1] alive = alive_arr
    blocked_arr = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[::1] blocked = blocked_arr
    steps_arr = np.zeros(n, dtype=np.int32)
    cdef int[::1] steps = steps_arr

    cdef bint record = bool(record_positions)
    cdef double[:, :, ::1] positions_view
    cdef double* posrec = NULL
    positions_arr = None
    if record:
        positions_arr = np.empty((n, t_frames + 1, 2), dtype=np.float64)
        positions_view = positions_arr
        positions_arr[:, 0, 0] = sx0
        positions_arr[:, 0, 1] = sy0

    # Scratch buffers.
    x_buf_arr = np.zeros(max(1, i_n), dtype=np.float64)
    cdef double[::1] x_buf = x_buf_arr
    cdef double* xb = &x_buf[0]
    h_new_arr = np.zeros(h_n, dtype=np.float64)
    cdef double[::1] h_new = h_new_arr
    cdef double* hn = &h_new[0]
    y_arr = np.zeros(o_n, dtype=np.float64)
    cdef double[::1] y_out = y_arr
    cdef double* yv = &y_out[0]

    cdef double start_dx = sx0 - gx
    cdef double start_dy = sy0 - gy
    cdef bint start_reached = start_dx * start_dx + start_dy * start_dy <= r2
    cdef int i, j, t, k, act
    cdef bint any_alive = True
    cdef double px, py, cx, cy, ddx, ddy
    cdef const double* wrow
    cdef double* hid_row
    cdef long long ix, iy
    cdef bint is_blocked, fin

    if start_reached:
        for i in range(n):
            reached[i] = 1
            alive[i] = 0
        any_alive = False

    if not have_sugar:
        # Agent-major order: no cross-agent interaction without a field.
        with nogil:
            for i in range(n):
                px = pos[i, 0]
                py = pos[i, 1]
                hid_row = &hidden[i, 0]
                wrow = &w_mat[i, 0]
                fin = not alive[i]
                for t in range(t_frames):
                    if not fin:
                        if mode == 0:
                            _fill_sensors(px, py, gx, gy, wallp, n_walls, wd, ht, diag, xb)
                        elif mode == 2:
                            for k in range(bits):
                                xb[k] = <double> ((t >> k) & 1)
                        act = _forward_action(
                            wrow + off_bh, wrow + off_bo,
                            &ih_t[i, 0, 0] if i_n > 0 else NULL,
                            &hh_t[i, 0, 0], &ho_t[i, 0, 0],
                            xb, hid_row, hn, yv, i_n, h_n, o_n)
                        cx = px + sp * ACT_VX[act]
                        cy = py + sp * ACT_VY[act]
                        is_blocked = not (0.0 < cx < wd and 0.0 < cy < ht)
                        if not is_blocked and n_walls > 0:
                            is_blocked = _hits_wall(px, py, cx, cy, wallp, n_walls)
                        if not is_blocked:
                            px = cx
                            py = cy
                        steps[i] = t + 1
                        ddx = px - gx
                        ddy = py - gy
                        if ddx * ddx + ddy * ddy <= r2:
                            reached[i] = 1
                            fin = True
                        elif freeze and is_blocked:
                            fin = True
                    if record:
                        positions_view[i, t + 1, 0] = px
                        positions_view[i, t + 1, 1] = py
                pos[i, 0] = px
                pos[i, 1] = py
                alive[i] = 0 if fin else alive[i]
    else:
        # Tick-major lockstep: shared sugar lattice, ascending-id claims.
        with nogil:
            for t in range(t_frames):
                if not any_alive:
                    if record:
                        for i in range(n):
                            positions_view[i, t + 1, 0] = pos[i, 0]
                            positions_view[i, t + 1, 1] = pos[i, 1]
                    continue

                if mode == 2:
                    for k in range(bits):
                        xb[k] = <double> ((t >> k) & 1)

                # Phase 1: per-agent input, forward pass, movement attempt.
                for i in range(n):
                    if not alive[i]:
                        blocked[i] = 0
                        continue
                    px = pos[i, 0]
                    py = pos[i, 1]
                    if mode == 0:
                        _fill_sensors(px, py, gx, gy, wallp, n_walls, wd, ht, diag, xb)
                    wrow = &w_mat[i, 0]
                    act = _forward_action(
                        wrow + off_bh, wrow + off_bo,
                        &ih_t[i, 0, 0] if i_n > 0 else NULL,
                        &hh_t[i, 0, 0], &ho_t[i, 0, 0],
                        xb, &hidden[i, 0], hn, yv, i_n, h_n, o_n)
                    cx = px + sp * ACT_VX[act]
                    cy = py + sp * ACT_VY[act]
                    is_blocked = not (0.0 < cx < wd and 0.0 < cy < ht)
                    if not is_blocked and n_walls > 0:
                        is_blocked = _hits_wall(px, py, cx, cy, wallp, n_walls)
                    blocked[i] = 1 if is_blocked else 0
                    if not is_blocked:
                        pos[i, 0] = cx
                        pos[i, 1] = cy

                # Phase 2: sugar collection, ascending agent id.
                for i in range(n):
                    if not alive[i]:
                        continue
                    ix = <long long> floor(pos[i, 0] / cell)
                    if ix < 0:
                        ix = 0
                    elif ix >= grid_w:
                        ix = grid_w - 1
                    iy = <long long> floor(pos[i, 1] / cell)
                    if iy < 0:
                        iy = 0
                    elif iy >= grid_h:
                        iy = grid_h - 1
                    if sugarp[iy * grid_w + ix] == 1:
                        sugarp[iy * grid_w + ix] = 0
                        countsp[i] += 1
                        events_view[n_events, 0] = t
                        events_view[n_events, 1] = i
                        events_view[n_events, 2] = iy * grid_w + ix
                        n_events += 1

                # Phase 3: goal / freeze bookkeeping.
                any_alive = False
                for i in range(n):
                    if not alive[i]:
                        continue
                    steps[i] = t + 1
                    ddx = pos[i, 0] - gx
                    ddy = pos[i, 1] - gy
                    if ddx * ddx + ddy * ddy <= r2:
                        reached[i] = 1
                        alive[i] = 0
                    elif freeze and blocked[i]:
                        alive[i] = 0
                    else:
                        any_alive = True
                if record:
                    for i in range(n):
                        positions_view[i, t + 1, 0] = pos[i, 0]
                        positions_view[i, t + 1, 1] = pos[i, 1]

    return {
        "final_positions": pos_arr,
        "reached": reached_arr.astype(bool),
        "steps_used": steps_arr,
        "sugar_counts": counts_arr,
        "events": events_arr[:n_events].copy() if have_sugar else None,
        "positions": positions_arr,
    }
