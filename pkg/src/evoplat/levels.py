"""Bundled levels and the seeded flat-level generator."""

from __future__ import annotations

import random
from importlib import resources

from .env import LevelSpec, load_level, read_level

GROUND_ROWS = 2
HEIGHT = 10


def bundled_level_names():
    folder = resources.files("evoplat") / "data" / "levels"
    return sorted(p.name for p in folder.iterdir() if p.name.endswith(".txt"))


def bundled_level(name: str) -> LevelSpec:
    if not name.endswith(".txt"):
        name += ".txt"
    ref = resources.files("evoplat") / "data" / "levels" / name
    with resources.as_file(ref) as path:
        return read_level(path)


def bundled_level_path(name: str) -> str:
    if not name.endswith(".txt"):
        name += ".txt"
    ref = resources.files("evoplat") / "data" / "levels" / name
    return str(ref)


def make_level_text(width: int, coins: int, pipes: int, seed: int, max_time: int = 400) -> str:
    """Flat runway with seeded pipes and coins and the flag in the last column.

    Pipes are 2 or 3 tiles tall and at least 4 columns apart; a coin sits
    either on the ground or three tiles up. Raises ``ValueError`` when the
    requested obstacles do not fit.
    """
    if width < 10:
        raise ValueError("width must be >= 10")
    if coins < 0 or pipes < 0:
        raise ValueError("coins and pipes must be >= 0")
    rng = random.Random(seed)
    lo, hi = 4, width - 3  # keep the start area and the flag approach clear
    columns = list(range(lo, hi))
    pipe_cols = []
    for _ in range(pipes):
        free = [c for c in columns if all(abs(c - p) >= 4 for p in pipe_cols)]
        if not free:
            raise ValueError(f"cannot fit {pipes} pipes in width {width}")
        pipe_cols.append(rng.choice(free))
    coin_cells = [c for c in columns if c not in pipe_cols]
    if coins > len(coin_cells):
        raise ValueError(f"cannot fit {coins} coins in width {width}")
    coin_cols = rng.sample(coin_cells, coins)

    rows = [["."] * width for _ in range(HEIGHT)]  # rows[0] is the bottom
    for r in range(GROUND_ROWS):
        rows[r] = ["#"] * width
    for c in pipe_cols:
        for r in range(GROUND_ROWS, GROUND_ROWS + rng.choice((2, 3))):
            rows[r][c] = "|"
    for c in coin_cols:
        rows[GROUND_ROWS + rng.choice((0, 3))][c] = "o"
    rows[GROUND_ROWS][1] = "M"
    rows[GROUND_ROWS][width - 1] = "F"
    body = "\n".join("".join(r) for r in reversed(rows))
    return f"time={max_time}\n{body}\n"


def make_level(width: int, coins: int, pipes: int, seed: int, max_time: int = 400) -> LevelSpec:
    return load_level(make_level_text(width, coins, pipes, seed, max_time), source="<generated>")
