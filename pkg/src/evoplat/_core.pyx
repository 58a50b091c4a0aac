# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled episode kernels.

Line-for-line port of ``evoplat._physics.Sim`` and ``evoplat._kernels_py``.
Any change to the update rule must be made in both places; the test suite
checks that the two backends agree exactly.
"""

from libc.math cimport exp
from libc.stdlib cimport malloc, free
from libc.string cimport memcpy

import numpy as np

cdef enum:
    EMPTY = 0
    GROUND = 1
    PIPE = 2
    COIN = 3
    FLAG_TILE = 4
    HAZARD = 5
    TILE = 16
    FRAMES_PER_TICK = 8
    JUMP_IMPULSE = 10
    GRAVITY = 1
    MAX_FALL = 8
    EV_COIN = 1
    EV_DIED = 2
    EV_FLAG = 4
    EV_BLOCKED = 8
    EV_JUMPED = 16
    R_FLAG = 0
    R_DEATH = 1
    R_BUDGET = 2
    R_STAGNATION = 3

cdef int ACTION_DX[7]
cdef int ACTION_JUMP[7]
ACTION_DX[:] = [0, 2, 2, 4, 4, 0, -2]
ACTION_JUMP[:] = [0, 0, 1, 0, 1, 1, 0]


cdef struct Sim:
    unsigned char *grid
    int width, height, start_x, start_y, max_time, flag_col
    int x, y, vx, vy, time, life, coins, max_x, flag_get, deaths
    int life_elapsed[3]
    int n_lives


cdef inline int fdiv(int v) noexcept nogil:
    # floor division by TILE for possibly negative v
    if v >= 0:
        return v / TILE
    return -((-v + TILE - 1) / TILE)


cdef inline bint solid(Sim *s, int col, int row) noexcept nogil:
    cdef unsigned char cell
    if col < 0 or col >= s.width:
        return True
    if row < 0 or row >= s.height:
        return False
    cell = s.grid[row * s.width + col]
    return cell == GROUND or cell == PIPE


cdef inline bint hits(Sim *s, int x, int y) noexcept nogil:
    cdef int c0 = fdiv(x), c1 = fdiv(x + TILE - 1)
    cdef int r0 = fdiv(y), r1 = fdiv(y + TILE - 1)
    cdef int row, col
    for row in range(r0, r1 + 1):
        for col in range(c0, c1 + 1):
            if solid(s, col, row):
                return True
    return False


cdef int sim_init(Sim *s, const unsigned char[:] grid, int width, int height,
                  int start_x, int start_y, int max_time, int flag_col) noexcept nogil:
    cdef int n = width * height
    cdef int i
    s.grid = <unsigned char *> malloc(n)
    if s.grid == NULL:
        return -1
    for i in range(n):
        s.grid[i] = grid[i]
    s.width = width
    s.height = height
    s.start_x = start_x
    s.start_y = start_y
    s.max_time = max_time
    s.flag_col = flag_col
    s.x = start_x
    s.y = start_y
    s.vx = 0
    s.vy = 0
    s.time = max_time
    s.life = 3
    s.coins = 0
    s.max_x = start_x
    s.flag_get = 0
    s.deaths = 0
    s.n_lives = 0
    return 0


cdef int touch(Sim *s, int *collected) noexcept nogil:
    cdef int width = s.width
    cdef int c0 = fdiv(s.x), c1 = fdiv(s.x + TILE - 1)
    cdef int r0 = fdiv(s.y), r1 = fdiv(s.y + TILE - 1)
    cdef int row, col, idx
    cdef int hazard = 0
    if c0 < 0:
        c0 = 0
    if c1 > width - 1:
        c1 = width - 1
    if r0 < 0:
        r0 = 0
    if r1 > s.height - 1:
        r1 = s.height - 1
    collected[0] = 0
    for row in range(r0, r1 + 1):
        for col in range(c0, c1 + 1):
            idx = row * width + col
            if s.grid[idx] == COIN:
                s.grid[idx] = EMPTY
                s.coins += 1
                collected[0] = 1
            elif s.grid[idx] == HAZARD:
                hazard = 1
    return hazard


cdef int tick(Sim *s, int action) noexcept nogil:
    cdef int dx = ACTION_DX[action]
    cdef int events = 0
    cdef int died = 0, reached = 0, collected = 0
    cdef int f, nx, ny, vy, moved
    if ACTION_JUMP[action] and hits(s, s.x, s.y - 1):
        s.vy = JUMP_IMPULSE
        events |= EV_JUMPED
    for f in range(FRAMES_PER_TICK):
        moved = 0
        if dx != 0:
            nx = s.x + dx
            if hits(s, nx, s.y):
                events |= EV_BLOCKED
                if dx > 0:
                    nx = fdiv(nx + TILE - 1) * TILE - TILE
                else:
                    nx = (fdiv(nx) + 1) * TILE
            moved = nx - s.x
            s.x = nx
        s.vx = moved

        vy = s.vy
        if vy <= 0 and hits(s, s.x, s.y - 1):
            s.vy = 0
        else:
            ny = s.y + vy
            if vy != 0 and hits(s, s.x, ny):
                if vy > 0:
                    ny = fdiv(ny + TILE - 1) * TILE - TILE
                else:
                    ny = (fdiv(ny) + 1) * TILE
                s.vy = 0
            else:
                s.vy = vy - GRAVITY if vy - GRAVITY > -MAX_FALL else -MAX_FALL
            s.y = ny

        if s.y < 0:
            died = 1
        else:
            died = touch(s, &collected)
            if collected:
                events |= EV_COIN
        if not died and s.x + TILE - 1 >= s.flag_col * TILE:
            reached = 1
            s.x = s.flag_col * TILE
        if s.x > s.max_x:
            s.max_x = s.x
        if died or reached:
            break

    s.time -= 1
    if reached:
        s.flag_get = 1
        events |= EV_FLAG
    elif s.time <= 0:
        died = 1
    if died:
        events |= EV_DIED
        if s.n_lives < 3:
            s.life_elapsed[s.n_lives] = s.max_time - s.time
            s.n_lives += 1
        s.deaths += 1
        s.life -= 1
        if s.life >= 1:
            s.x = s.start_x
            s.y = s.start_y
            s.vx = 0
            s.vy = 0
            s.time = s.max_time
    return events


cdef inline double sim_fitness(Sim *s, double cr, double dr, double tp) noexcept nogil:
    return cr * <double> s.coins + dr * <double> (s.max_x - s.start_x) - tp * <double> (s.max_time - s.time)


cdef void observe(Sim *s, double *out, int win_w, int win_h) noexcept nogil:
    cdef int cx = fdiv(s.x + TILE / 2)
    cdef int cy = fdiv(s.y + TILE / 2)
    cdef int top = cy + win_h / 2 - 1
    cdef int left = cx - win_w / 2
    cdef int r, c, row, col
    cdef int k = 0
    for r in range(win_h):
        row = top - r
        for c in range(win_w):
            col = left + c
            if 0 <= row < s.height and 0 <= col < s.width:
                out[k] = <double> s.grid[row * s.width + col]
            else:
                out[k] = <double> HAZARD
            k += 1
    out[k] = <double> s.vx
    out[k + 1] = <double> s.vy
    out[k + 2] = <double> s.time / <double> s.max_time
    out[k + 3] = 1.0 if hits(s, s.x, s.y - 1) else 0.0


cdef tuple result(Sim *s, int moves, int reason):
    cdef int lives[3]
    cdef int n = s.n_lives
    cdef int i
    for i in range(3):
        lives[i] = -1
    for i in range(n):
        lives[i] = s.life_elapsed[i]
    if s.life >= 1 and n < 3:
        lives[n] = s.max_time - s.time
    return (s.coins, s.max_x - s.start_x, s.time, s.flag_get, s.deaths, moves, reason,
            lives[0], lives[1], lives[2])


def run_actions(const unsigned char[:] grid, int width, int height, int start_x,
                int start_y, int max_time, int flag_col, actions, int budget,
                int window, double cr, double dr, double tp):
    cdef const signed char[:] acts = np.ascontiguousarray(actions, dtype=np.int8)
    cdef Sim s
    cdef int moves = 0, stale = 0, reason = R_BUDGET, events
    cdef double best, f
    if budget > acts.shape[0]:
        budget = acts.shape[0]
    if sim_init(&s, grid, width, height, start_x, start_y, max_time, flag_col) != 0:
        raise MemoryError()
    try:
        with nogil:
            best = sim_fitness(&s, cr, dr, tp)
            while moves < budget:
                events = tick(&s, acts[moves])
                moves += 1
                if events & EV_FLAG:
                    reason = R_FLAG
                    break
                if s.life == 0:
                    reason = R_DEATH
                    break
                f = sim_fitness(&s, cr, dr, tp)
                if f > best:
                    best = f
                    stale = 0
                else:
                    stale += 1
                    if stale >= window:
                        reason = R_STAGNATION
                        break
        return result(&s, moves, reason)
    finally:
        free(s.grid)


cdef inline double activate(int kind, double z) noexcept nogil:
    if kind == 0:
        if z > 60.0:
            z = 60.0
        elif z < -60.0:
            z = -60.0
        return 1.0 / (1.0 + exp(-z))
    if z > 3.4:
        z = 3.4
    elif z < -3.4:
        z = -3.4
    return exp(-5.0 * z * z)


def run_network(const unsigned char[:] grid, int width, int height, int start_x,
                int start_y, int max_time, int flag_col, net, int win_w, int win_h,
                int budget, int window, double cr, double dr, double tp,
                signed char[:] actions_out):
    cdef int n_in = net.n_inputs
    cdef const signed char[:] act = np.ascontiguousarray(net.act, dtype=np.int8)
    cdef const double[:] bias = np.ascontiguousarray(net.bias, dtype=np.float64)
    cdef const double[:] resp = np.ascontiguousarray(net.response, dtype=np.float64)
    cdef const int[:] indptr = np.ascontiguousarray(net.indptr, dtype=np.int32)
    cdef const int[:] src = np.ascontiguousarray(net.src, dtype=np.int32)
    cdef const double[:] weight = np.ascontiguousarray(net.weight, dtype=np.float64)
    cdef const int[:] out_idx = np.ascontiguousarray(net.out_idx, dtype=np.int32)
    cdef int m = act.shape[0]
    cdef int n_out = out_idx.shape[0]
    cdef int size = n_in + m
    cdef int n_obs = win_w * win_h + 4
    cdef Sim s
    cdef int moves = 0, stale = 0, reason = R_BUDGET, events
    cdef int i, j, e, a
    cdef double best, f, acc, bv, v
    cdef double *prev
    cdef double *cur
    cdef double *tmp
    cdef double *obs
    if n_obs != n_in:
        raise ValueError(f"network expects {n_in} inputs, observation has {n_obs}")
    if budget > actions_out.shape[0]:
        raise ValueError("actions_out shorter than budget")
    if sim_init(&s, grid, width, height, start_x, start_y, max_time, flag_col) != 0:
        raise MemoryError()
    prev = <double *> malloc(size * sizeof(double))
    cur = <double *> malloc(size * sizeof(double))
    obs = <double *> malloc(n_obs * sizeof(double))
    try:
        if prev == NULL or cur == NULL or obs == NULL:
            raise MemoryError()
        with nogil:
            for i in range(size):
                prev[i] = 0.0
                cur[i] = 0.0
            best = sim_fitness(&s, cr, dr, tp)
            while moves < budget:
                observe(&s, obs, win_w, win_h)
                for i in range(n_in):
                    prev[i] = obs[i]
                    cur[i] = obs[i]
                for j in range(m):
                    acc = 0.0
                    for e in range(indptr[j], indptr[j + 1]):
                        acc += weight[e] * prev[src[e]]
                    cur[n_in + j] = activate(act[j], bias[j] + resp[j] * acc)
                tmp = prev
                prev = cur
                cur = tmp
                a = 0
                bv = prev[out_idx[0]]
                for i in range(1, n_out):
                    v = prev[out_idx[i]]
                    if v > bv:
                        a = i
                        bv = v
                actions_out[moves] = <signed char> a
                events = tick(&s, a)
                moves += 1
                if events & EV_FLAG:
                    reason = R_FLAG
                    break
                if s.life == 0:
                    reason = R_DEATH
                    break
                f = sim_fitness(&s, cr, dr, tp)
                if f > best:
                    best = f
                    stale = 0
                else:
                    stale += 1
                    if stale >= window:
                        reason = R_STAGNATION
                        break
        return result(&s, moves, reason)
    finally:
        free(s.grid)
        free(prev)
        free(cur)
        free(obs)
