"""Pure-Python reference simulation.

Everything here works on integers in 1/16-tile units so results are exact
and reproducible. ``evoplat._core`` re-implements the same update rule in
Cython; the two must agree bit for bit (see tests/test_kernels.py).
"""

from __future__ import annotations

import math

EMPTY, GROUND, PIPE, COIN, FLAG, HAZARD = range(6)
SOLID = (False, True, True, False, False, False)

TILE = 16
FRAMES_PER_TICK = 8
JUMP_IMPULSE = 10
GRAVITY = 1
MAX_FALL = 8

#                 NOOP RIGHT R_JUMP R_RUN R_J_RUN JUMP LEFT
ACTION_DX = (0, 2, 2, 4, 4, 0, -2)
ACTION_JUMP = (False, False, True, False, True, True, False)
NUM_ACTIONS = 7

# Sim.tick event bits
EV_COIN = 1
EV_DIED = 2
EV_FLAG = 4
EV_BLOCKED = 8
EV_JUMPED = 16


class Sim:
    """Mutable episode state over a private copy of the level grid.

    ``grid`` is stored bottom row first: cell ``(col, row)`` lives at
    ``row * width + col``.
    """

    __slots__ = (
        "grid", "width", "height", "start_x", "start_y", "max_time", "flag_col",
        "x", "y", "vx", "vy", "time", "life", "coins", "max_x", "flag_get",
        "deaths", "life_elapsed",
    )

    def __init__(self, grid, width, height, start_x, start_y, max_time, flag_col):
        self.grid = bytearray(grid)
        self.width = width
        self.height = height
        self.start_x = start_x
        self.start_y = start_y
        self.max_time = max_time
        self.flag_col = flag_col
        self.x = start_x
        self.y = start_y
        self.vx = 0
        self.vy = 0
        self.time = max_time
        self.life = 3
        self.coins = 0
        self.max_x = start_x
        self.flag_get = False
        self.deaths = 0
        self.life_elapsed = []

    def solid(self, col, row):
        if col < 0 or col >= self.width:
            return True
        if row < 0 or row >= self.height:
            return False
        return SOLID[self.grid[row * self.width + col]]

    def hits(self, x, y):
        c0, c1 = x // TILE, (x + TILE - 1) // TILE
        r0, r1 = y // TILE, (y + TILE - 1) // TILE
        for row in range(r0, r1 + 1):
            for col in range(c0, c1 + 1):
                if self.solid(col, row):
                    return True
        return False

    def on_ground(self):
        return self.hits(self.x, self.y - 1)

    def _touch(self):
        """Collect coins under the box; return True on hazard contact."""
        width = self.width
        hazard = False
        collected = False
        c0, c1 = max(self.x // TILE, 0), min((self.x + TILE - 1) // TILE, width - 1)
        r0, r1 = max(self.y // TILE, 0), min((self.y + TILE - 1) // TILE, self.height - 1)
        for row in range(r0, r1 + 1):
            for col in range(c0, c1 + 1):
                cell = self.grid[row * width + col]
                if cell == COIN:
                    self.grid[row * width + col] = EMPTY
                    self.coins += 1
                    collected = True
                elif cell == HAZARD:
                    hazard = True
        return collected, hazard

    def tick(self, action):
        dx = ACTION_DX[action]
        events = 0
        if ACTION_JUMP[action] and self.on_ground():
            self.vy = JUMP_IMPULSE
            events |= EV_JUMPED
        died = False
        reached = False
        for _ in range(FRAMES_PER_TICK):
            moved = 0
            if dx:
                nx = self.x + dx
                if self.hits(nx, self.y):
                    events |= EV_BLOCKED
                    if dx > 0:
                        nx = ((nx + TILE - 1) // TILE) * TILE - TILE
                    else:
                        nx = (nx // TILE + 1) * TILE
                moved = nx - self.x
                self.x = nx
            self.vx = moved

            vy = self.vy
            if vy <= 0 and self.hits(self.x, self.y - 1):
                self.vy = 0
            else:
                ny = self.y + vy
                if vy != 0 and self.hits(self.x, ny):
                    if vy > 0:
                        ny = ((ny + TILE - 1) // TILE) * TILE - TILE
                    else:
                        ny = (ny // TILE + 1) * TILE
                    self.vy = 0
                else:
                    self.vy = max(vy - GRAVITY, -MAX_FALL)
                self.y = ny

            if self.y < 0:
                died = True
            else:
                collected, hazard = self._touch()
                if collected:
                    events |= EV_COIN
                died = hazard
            if not died and self.x + TILE - 1 >= self.flag_col * TILE:
                reached = True
                self.x = self.flag_col * TILE
            if self.x > self.max_x:
                self.max_x = self.x
            if died or reached:
                break

        self.time -= 1
        if reached:
            self.flag_get = True
            events |= EV_FLAG
        elif self.time <= 0:
            died = True
        if died:
            events |= EV_DIED
            self.life_elapsed.append(self.max_time - self.time)
            self.deaths += 1
            self.life -= 1
            if self.life >= 1:
                self.x, self.y = self.start_x, self.start_y
                self.vx = self.vy = 0
                self.time = self.max_time
        return events

    def finish_life(self):
        """Elapsed ticks of every life, including the one still running."""
        if self.life >= 1:
            return tuple(self.life_elapsed) + (self.max_time - self.time,)
        return tuple(self.life_elapsed)

    def fitness(self, cr, dr, tp):
        return cr * self.coins + dr * (self.max_x - self.start_x) - tp * (self.max_time - self.time)

    def observe_into(self, out, win_w, win_h):
        """Write the tile window and scalar features into ``out`` (a list)."""
        width, height, grid = self.width, self.height, self.grid
        cx = (self.x + TILE // 2) // TILE
        cy = (self.y + TILE // 2) // TILE
        top = cy + win_h // 2 - 1
        left = cx - win_w // 2
        k = 0
        for r in range(win_h):
            row = top - r
            inside_row = 0 <= row < height
            for c in range(win_w):
                col = left + c
                if inside_row and 0 <= col < width:
                    out[k] = float(grid[row * width + col])
                else:
                    out[k] = float(HAZARD)
                k += 1
        out[k] = float(self.vx)
        out[k + 1] = float(self.vy)
        out[k + 2] = self.time / self.max_time
        out[k + 3] = 1.0 if self.on_ground() else 0.0
        return out


def sigmoid(z):
    z = max(-60.0, min(60.0, z))
    return 1.0 / (1.0 + math.exp(-z))


def gauss(z):
    z = max(-3.4, min(3.4, z))
    return math.exp(-5.0 * z * z)


ACTIVATIONS = (sigmoid, gauss)
