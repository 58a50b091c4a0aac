"""Pure-Python episode kernels, used when the compiled core is unavailable.

Both functions return a flat tuple::

    (coins, distance, time_left, flag_get, deaths, moves_used, reason,
     life0, life1, life2)

where ``reason`` indexes :data:`evoplat.fitness.REASON_CODES` and unused
life slots hold -1. ``run_network`` additionally fills ``actions_out``.
"""

from __future__ import annotations

from ._physics import ACTIVATIONS, EV_FLAG, Sim

FLAG, DEATH, BUDGET, STAGNATION = range(4)


def _result(sim, moves, reason):
    lives = list(sim.finish_life()) + [-1, -1, -1]
    return (
        sim.coins,
        sim.max_x - sim.start_x,
        sim.time,
        int(sim.flag_get),
        sim.deaths,
        moves,
        reason,
        lives[0],
        lives[1],
        lives[2],
    )


def _episode(sim, next_action, budget, window, cr, dr, tp):
    best = sim.fitness(cr, dr, tp)
    stale = 0
    moves = 0
    while moves < budget:
        events = sim.tick(next_action(moves))
        moves += 1
        if events & EV_FLAG:
            return moves, FLAG
        if sim.life == 0:
            return moves, DEATH
        f = sim.fitness(cr, dr, tp)
        if f > best:
            best = f
            stale = 0
        else:
            stale += 1
            if stale >= window:
                return moves, STAGNATION
    return moves, BUDGET


def run_actions(grid, width, height, start_x, start_y, max_time, flag_col,
                actions, budget, window, cr, dr, tp):
    sim = Sim(grid, width, height, start_x, start_y, max_time, flag_col)
    budget = min(budget, len(actions))
    moves, reason = _episode(sim, actions.__getitem__, budget, window, cr, dr, tp)
    return _result(sim, moves, reason)


class NetState:
    """Single-step recurrent evaluation over a compiled network."""

    def __init__(self, net, n_obs):
        self.n_in = net.n_inputs
        self.act = [int(a) for a in net.act]
        self.bias = [float(b) for b in net.bias]
        self.resp = [float(r) for r in net.response]
        indptr = [int(i) for i in net.indptr]
        src = [int(s) for s in net.src]
        weight = [float(w) for w in net.weight]
        self.edges = [
            list(zip(src[indptr[j]:indptr[j + 1]], weight[indptr[j]:indptr[j + 1]]))
            for j in range(len(self.act))
        ]
        self.out_idx = [int(o) for o in net.out_idx]
        size = self.n_in + len(self.act)
        self.prev = [0.0] * size
        self.cur = [0.0] * size
        self.obs = [0.0] * n_obs

    def step(self):
        n_in = self.n_in
        prev, cur = self.prev, self.cur
        for i in range(n_in):
            prev[i] = cur[i] = self.obs[i]
        for j, edges in enumerate(self.edges):
            s = 0.0
            for src, w in edges:
                s += w * prev[src]
            cur[n_in + j] = ACTIVATIONS[self.act[j]](self.bias[j] + self.resp[j] * s)
        self.prev, self.cur = cur, prev

    def scores(self):
        return [self.prev[o] for o in self.out_idx]

    def argmax(self):
        vals = self.prev
        best = 0
        best_v = vals[self.out_idx[0]]
        for k in range(1, len(self.out_idx)):
            v = vals[self.out_idx[k]]
            if v > best_v:
                best, best_v = k, v
        return best


def run_network(grid, width, height, start_x, start_y, max_time, flag_col,
                net, win_w, win_h, budget, window, cr, dr, tp, actions_out):
    n_obs = win_w * win_h + 4
    if n_obs != net.n_inputs:
        raise ValueError(f"network expects {net.n_inputs} inputs, observation has {n_obs}")
    sim = Sim(grid, width, height, start_x, start_y, max_time, flag_col)
    state = NetState(net, n_obs)

    def next_action(i):
        sim.observe_into(state.obs, win_w, win_h)
        state.step()
        a = state.argmax()
        actions_out[i] = a
        return a

    moves, reason = _episode(sim, next_action, budget, window, cr, dr, tp)
    return _result(sim, moves, reason)
