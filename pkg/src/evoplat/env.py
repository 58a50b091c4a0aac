"""Deterministic tile platformer: level files, reset/step/observe, episodes.

Positions are integers in 1/16-tile units with ``y`` measured from the
bottom of the level. One call to :func:`step` advances the game clock by one
tick; internally a tick runs ``FRAMES_PER_TICK`` physics frames.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import _physics as phys
from .fitness import (
    REASON_CODES,
    EpisodeSummary,
    FitnessParams,
    TruncationReason,
    compute_fitness,
)

TILE = phys.TILE
DEFAULT_WINDOW = (8, 8)


class ParseError(ValueError):
    """Malformed level or replay text."""


class ValidationError(ValueError):
    """Well-formed level that violates a level invariant."""


class EpisodeOver(RuntimeError):
    pass


class Tile(enum.IntEnum):
    EMPTY = phys.EMPTY
    GROUND = phys.GROUND
    PIPE = phys.PIPE
    COIN = phys.COIN
    FLAG = phys.FLAG
    HAZARD = phys.HAZARD


class Action(enum.IntEnum):
    NOOP = 0
    RIGHT = 1
    RIGHT_JUMP = 2
    RIGHT_RUN = 3
    RIGHT_JUMP_RUN = 4
    JUMP = 5
    LEFT = 6


GLYPHS = {
    ".": Tile.EMPTY,
    "#": Tile.GROUND,
    "|": Tile.PIPE,
    "o": Tile.COIN,
    "F": Tile.FLAG,
    "^": Tile.HAZARD,
    "M": Tile.EMPTY,
}
TILE_GLYPH = {v: k for k, v in GLYPHS.items() if k != "M"}


@dataclass(frozen=True)
class LevelSpec:
    """A validated level. ``grid`` rows are stored top row first, as in the file;
    ``start_y`` counts tiles from the bottom."""

    width: int
    height: int
    grid: tuple
    start_x: int
    start_y: int
    max_time: int
    world: int = 1
    stage: int = 1
    source: str = field(default="", compare=False)

    def __post_init__(self):
        if self.width < 4 or self.height < 3:
            raise ValidationError("level must be at least 4 wide and 3 high")
        if self.max_time < 1:
            raise ValidationError("time must be >= 1")
        if len(self.grid) != self.height or any(len(r) != self.width for r in self.grid):
            raise ValidationError("grid does not match width x height")
        flags = [
            (c, self.height - 1 - r)
            for r, row in enumerate(self.grid)
            for c, t in enumerate(row)
            if t == Tile.FLAG
        ]
        if len(flags) != 1:
            raise ValidationError(f"level needs exactly one flag, found {len(flags)}")
        if not (0 <= self.start_x < self.width and 1 <= self.start_y < self.height):
            raise ValidationError("start outside the level")
        if self.tile(self.start_x, self.start_y) != Tile.EMPTY:
            raise ValidationError("start cell must be empty")
        if self.tile(self.start_x, self.start_y - 1) not in (Tile.GROUND, Tile.PIPE):
            raise ValidationError("start cell needs ground or pipe beneath it")
        cells = bytes(t for row in reversed(self.grid) for t in row)
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "flag_col", flags[0][0])

    def tile(self, col: int, row: int) -> Tile:
        """Tile at ``col`` and ``row`` counted from the bottom."""
        return Tile(self.grid[self.height - 1 - row][col])

    @property
    def coin_count(self) -> int:
        return self.cells.count(Tile.COIN)

    def kernel_args(self):
        return (
            self.cells, self.width, self.height, self.start_x * TILE,
            self.start_y * TILE, self.max_time, self.flag_col,
        )

    def to_text(self) -> str:
        lines = [f"time={self.max_time}"]
        if (self.world, self.stage) != (1, 1):
            lines += [f"world={self.world}", f"stage={self.stage}"]
        start_row = self.height - 1 - self.start_y
        for r, row in enumerate(self.grid):
            chars = [TILE_GLYPH[Tile(t)] for t in row]
            if r == start_row:
                chars[self.start_x] = "M"
            lines.append("".join(chars))
        return "\n".join(lines) + "\n"


def load_level(text: str, source: str = "") -> LevelSpec:
    """Parse the ASCII level format.

    Header lines ``key=value`` (``time`` required, ``world``/``stage``
    optional) precede the grid, one row per line, top row first.
    """
    header = {}
    rows = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.rstrip("\r")
        if not line.strip():
            if rows:
                raise ParseError(f"line {lineno}: blank line inside grid")
            continue
        if not rows and "=" in line:
            key, _, value = line.partition("=")
            key = key.strip()
            if key not in ("time", "world", "stage"):
                raise ParseError(f"line {lineno}: unknown header key {key!r}")
            try:
                header[key] = int(value)
            except ValueError:
                raise ParseError(f"line {lineno}: {key} must be an integer") from None
            continue
        bad = set(line) - set(GLYPHS)
        if bad:
            raise ParseError(f"line {lineno}: unknown glyph {sorted(bad)[0]!r}")
        if rows and len(line) != len(rows[0]):
            raise ParseError(f"line {lineno}: ragged row ({len(line)} != {len(rows[0])})")
        rows.append(line)
    if "time" not in header:
        raise ParseError("missing time=<int> header")
    if not rows:
        raise ParseError("empty grid")
    starts = [(c, r) for r, line in enumerate(rows) for c, ch in enumerate(line) if ch == "M"]
    if len(starts) != 1:
        raise ValidationError(f"level needs exactly one start 'M', found {len(starts)}")
    height = len(rows)
    grid = tuple(tuple(int(GLYPHS[ch]) for ch in line) for line in rows)
    col, row = starts[0]
    return LevelSpec(
        width=len(rows[0]),
        height=height,
        grid=grid,
        start_x=col,
        start_y=height - 1 - row,
        max_time=header["time"],
        world=header.get("world", 1),
        stage=header.get("stage", 1),
        source=source,
    )


def read_level(path) -> LevelSpec:
    path = Path(path)
    return load_level(path.read_text(), source=str(path))


@dataclass(frozen=True)
class GameState:
    coins: int
    flag_get: bool
    life: int
    score: int
    stage: int
    status: str
    time: int
    world: int
    x_pos: int
    y_pos: int
    x_vel: int
    y_vel: int
    max_x_reached: int
    deaths: int = 0
    taken: frozenset = frozenset()
    life_elapsed: tuple = ()


@dataclass(frozen=True)
class StepEvents:
    coin_collected: bool = False
    died: bool = False
    reached_flag: bool = False
    blocked: bool = False
    jumped: bool = False


def reset(level: LevelSpec) -> GameState:
    return GameState(
        coins=0,
        flag_get=False,
        life=3,
        score=0,
        stage=level.stage,
        status="small",
        time=level.max_time,
        world=level.world,
        x_pos=level.start_x * TILE,
        y_pos=level.start_y * TILE,
        x_vel=0,
        y_vel=0,
        max_x_reached=level.start_x * TILE,
    )


def _to_sim(state: GameState, level: LevelSpec) -> phys.Sim:
    sim = phys.Sim(*level.kernel_args())
    for idx in state.taken:
        sim.grid[idx] = phys.EMPTY
    sim.x, sim.y = state.x_pos, state.y_pos
    sim.vx, sim.vy = state.x_vel, state.y_vel
    sim.time = state.time
    sim.life = state.life
    sim.coins = state.coins
    sim.max_x = state.max_x_reached
    sim.flag_get = state.flag_get
    sim.deaths = state.deaths
    sim.life_elapsed = list(state.life_elapsed)
    return sim


def _from_sim(sim: phys.Sim, state: GameState, level: LevelSpec) -> GameState:
    taken = state.taken
    if sim.coins != state.coins:
        taken = frozenset(
            i for i, (a, b) in enumerate(zip(level.cells, sim.grid)) if a == phys.COIN and b != a
        )
    return GameState(
        coins=sim.coins,
        flag_get=sim.flag_get,
        life=sim.life,
        score=100 * sim.coins,
        stage=state.stage,
        status=state.status,
        time=sim.time,
        world=state.world,
        x_pos=sim.x,
        y_pos=sim.y,
        x_vel=sim.vx,
        y_vel=sim.vy,
        max_x_reached=sim.max_x,
        deaths=sim.deaths,
        taken=taken,
        life_elapsed=tuple(sim.life_elapsed),
    )


def step(state: GameState, level: LevelSpec, action) -> tuple[GameState, StepEvents]:
    """Advance one tick. Raises :class:`EpisodeOver` once the flag is reached
    or every life is spent."""
    if state.flag_get or state.life < 1:
        raise EpisodeOver("episode already finished")
    sim = _to_sim(state, level)
    ev = sim.tick(int(action))
    events = StepEvents(
        coin_collected=bool(ev & phys.EV_COIN),
        died=bool(ev & phys.EV_DIED),
        reached_flag=bool(ev & phys.EV_FLAG),
        blocked=bool(ev & phys.EV_BLOCKED),
        jumped=bool(ev & phys.EV_JUMPED),
    )
    return _from_sim(sim, state, level), events


def observation_size(window=DEFAULT_WINDOW) -> int:
    return window[0] * window[1] + 4


def observe(state: GameState, level: LevelSpec, window=DEFAULT_WINDOW) -> np.ndarray:
    """Tile codes of a ``window`` centred on the agent (row-major, top row
    first; outside the level reads as Hazard) followed by
    ``[x_vel, y_vel, time/max_time, on_ground]``."""
    sim = _to_sim(state, level)
    out = [0.0] * observation_size(window)
    sim.observe_into(out, window[0], window[1])
    return np.array(out, dtype=np.float64)


def summarize(state: GameState, level: LevelSpec, moves_used: int, reason) -> EpisodeSummary:
    return EpisodeSummary(
        collected_coins=state.coins,
        distance=state.max_x_reached - level.start_x * TILE,
        time_left=state.time,
        elapsed=level.max_time - state.time,
        flag_get=state.flag_get,
        deaths=state.deaths,
        moves_used=moves_used,
        truncation_reason=TruncationReason(reason),
        life_elapsed=state.life_elapsed + ((level.max_time - state.time,) if state.life >= 1 else ()),
    )


def summary_from_kernel(res, max_time: int) -> EpisodeSummary:
    coins, distance, time_left, flag, deaths, moves, reason, *lives = res
    return EpisodeSummary(
        collected_coins=coins,
        distance=distance,
        time_left=time_left,
        elapsed=max_time - time_left,
        flag_get=bool(flag),
        deaths=deaths,
        moves_used=moves,
        truncation_reason=REASON_CODES[reason],
        life_elapsed=tuple(v for v in lives if v >= 0),
    )


@dataclass(frozen=True)
class Replay:
    """An action trace plus optional header fields (fitness, summary, ...)."""

    level: str
    actions: tuple
    header: dict = field(default_factory=dict, compare=False)

    def dumps(self) -> str:
        lines = [f"level={self.level}"]
        lines += [f"{k}={v}" for k, v in self.header.items()]
        lines += [str(int(a)) for a in self.actions]
        return "\n".join(lines) + "\n"


REPLAY_KEYS = (
    "coin_reward", "distance_reward", "time_penalty", "fitness", "coins",
    "distance", "time_left", "flag_get", "deaths", "moves",
)


def replay_header(summary: EpisodeSummary, params: FitnessParams) -> dict:
    return {
        "coin_reward": repr(params.coin_reward),
        "distance_reward": repr(params.distance_reward),
        "time_penalty": repr(params.time_penalty),
        "fitness": repr(compute_fitness(summary, params)),
        "coins": str(summary.collected_coins),
        "distance": str(summary.distance),
        "time_left": str(summary.time_left),
        "flag_get": str(int(summary.flag_get)),
        "deaths": str(summary.deaths),
        "moves": str(summary.moves_used),
    }


def parse_replay(text: str) -> Replay:
    """Parse a replay file: ``level=<path>`` first, optional ``key=value``
    header lines, then one action code (0..6) per line. A ``moves`` header
    that disagrees with the number of action lines is a truncated file."""
    lines = text.splitlines()
    if not lines or not lines[0].startswith("level="):
        raise ParseError("replay must start with level=<path>")
    level = lines[0][len("level="):].strip()
    header = {}
    actions = []
    for lineno, line in enumerate(lines[1:], 2):
        line = line.strip()
        if not line:
            continue
        if "=" in line:
            if actions:
                raise ParseError(f"line {lineno}: header after actions")
            key, _, value = line.partition("=")
            if key not in REPLAY_KEYS:
                raise ParseError(f"line {lineno}: unknown replay key {key!r}")
            header[key] = value
            continue
        try:
            code = int(line)
        except ValueError:
            raise ParseError(f"line {lineno}: not an action code: {line!r}") from None
        if not 0 <= code < phys.NUM_ACTIONS:
            raise ParseError(f"line {lineno}: action code {code} out of range")
        actions.append(code)
    if "moves" in header and int(header["moves"]) != len(actions):
        raise ParseError(f"replay truncated: header says {header['moves']} moves, found {len(actions)}")
    return Replay(level, tuple(actions), header)


def run_episode(
    level: LevelSpec,
    action_source: Callable[[np.ndarray], int] | Sequence[int],
    move_budget: int,
    stagnation_window: int,
    params: FitnessParams | None = None,
    window=DEFAULT_WINDOW,
) -> tuple[EpisodeSummary, Replay]:
    """Play until the flag, game over, the move budget, or
    ``stagnation_window`` consecutive moves without a new best running fitness.

    ``action_source`` is either a callback receiving the observation or a
    sequence of actions indexed by move number. This is the reference path;
    the engines use :mod:`evoplat.kernels` for speed.
    """
    if move_budget < 1 or stagnation_window < 1:
        raise ValueError("move_budget and stagnation_window must be >= 1")
    params = (params or FitnessParams()).for_max_time(level.max_time)
    cr, dr, tp = params.coin_reward, params.distance_reward, params.time_penalty
    indexed = not callable(action_source)
    if indexed:
        move_budget = min(move_budget, len(action_source))

    def running(s):
        return (cr * s.coins + dr * (s.max_x_reached - level.start_x * TILE)
                - tp * (level.max_time - s.time))

    state = reset(level)
    best = running(state)
    stale = 0
    actions = []
    reason = TruncationReason.BUDGET
    while len(actions) < move_budget:
        if indexed:
            action = int(action_source[len(actions)])
        else:
            action = int(action_source(observe(state, level, window)))
        state, events = step(state, level, action)
        actions.append(action)
        if events.reached_flag:
            reason = TruncationReason.FLAG
            break
        if state.life == 0:
            reason = TruncationReason.DEATH
            break
        f = running(state)
        if f > best:
            best, stale = f, 0
        else:
            stale += 1
            if stale >= stagnation_window:
                reason = TruncationReason.STAGNATION
                break
    summary = summarize(state, level, len(actions), reason)
    return summary, Replay(level.source, tuple(actions))


def replay_states(level: LevelSpec, actions: Sequence[int]):
    """Yield ``(state, events)`` after every action of a trace, stopping
    early once the flag is reached or every life is spent."""
    state = reset(level)
    for a in actions:
        if state.flag_get or state.life < 1:
            return
        state, events = step(state, level, a)
        yield state, events


def render_ascii(state: GameState, level: LevelSpec) -> str:
    """Level grid with collected coins removed and the agent drawn as 'M'."""
    taken = state.taken
    mc = (state.x_pos + TILE // 2) // TILE
    mr = (state.y_pos + TILE // 2) // TILE
    lines = []
    for r in range(level.height - 1, -1, -1):
        chars = []
        for c in range(level.width):
            idx = r * level.width + c
            t = Tile(level.cells[idx])
            if t == Tile.COIN and idx in taken:
                t = Tile.EMPTY
            chars.append("M" if (c, r) == (mc, mr) else TILE_GLYPH[t])
        lines.append("".join(chars))
    return "\n".join(lines)
