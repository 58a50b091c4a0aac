"""Repeated seeded runs, aggregation, gameplay statistics and output files."""

from __future__ import annotations

import csv
import gc
import io
import logging
import math
import os
import tempfile
import time
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .env import LevelSpec, Replay, read_level, replay_states, reset, summarize
from .fitness import (
    ConstraintSpec,
    EpisodeSummary,
    FitnessParams,
    TruncationReason,
    compute_fitness,
    is_solution,
)
from .ga import GAConfig, run_ga
from .neat import NEATConfig, run_neat

log = logging.getLogger(__name__)

JUMP_ACTIONS = frozenset((2, 4, 5))
RIGHT_ACTIONS = frozenset((1, 3))
LEFT_ACTIONS = frozenset((6,))


class ReplayMismatch(RuntimeError):
    pass


@dataclass(frozen=True)
class NERunParams:
    """Episode and loop settings for neuroevolution runs."""

    generations: int = 300
    move_budget: int = 5000
    moves_to_check: int = 30
    window: tuple = (8, 8)

    def __post_init__(self):
        if self.generations < 0 or self.move_budget < 1 or self.moves_to_check < 1:
            raise ValueError("generations >= 0, move_budget >= 1, moves_to_check >= 1 required")
        if len(self.window) != 2 or min(self.window) < 1:
            raise ValueError("window must be two positive integers")


@dataclass(frozen=True)
class ExperimentConfig:
    algorithm: str
    level_path: str
    seeds: tuple = (0, 1, 2, 3, 4)
    wall_clock_budget: float | None = None
    output_dir: str = "out"
    ga: GAConfig = field(default_factory=GAConfig)
    neat: NEATConfig = field(default_factory=NEATConfig)
    ne_run: NERunParams = field(default_factory=NERunParams)
    fitness: FitnessParams = field(default_factory=FitnessParams)
    constraints: ConstraintSpec = field(default_factory=ConstraintSpec)
    threads: int | None = None
    timings: bool = False

    def __post_init__(self):
        if self.algorithm not in ("GA", "NE"):
            raise ValueError("algorithm must be GA or NE")
        if not self.seeds:
            raise ValueError("at least one seed is required")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError("seeds must be pairwise distinct")
        if self.wall_clock_budget is not None and self.wall_clock_budget < 0:
            raise ValueError("wall_clock_budget must be >= 0")

    @property
    def repeats(self) -> int:
        return len(self.seeds)


@dataclass(frozen=True)
class GameplayStats:
    distance: int
    time_taken: int
    coins: int
    deaths: int
    jumps: int
    right_moves: int
    left_moves: int
    moves_used: int
    mutations_performed: int
    time_to_best: float

    def __post_init__(self):
        if self.jumps + self.right_moves + self.left_moves > self.moves_used:
            raise ValueError("move categories exceed moves_used")


@dataclass
class RunRecord:
    algorithm: str
    seed: int
    history: list
    replay: Replay
    summary: EpisodeSummary
    fitness: float
    solved: bool
    generations: int
    mutations_performed: int
    time_to_best: float
    wall_time: float
    level: LevelSpec
    params: FitnessParams


def load_experiment_level(config: ExperimentConfig) -> LevelSpec:
    return read_level(config.level_path)


def run_single(config: ExperimentConfig, seed: int, level: LevelSpec | None = None,
               on_generation=None) -> RunRecord:
    """One independent fold; depends only on ``config`` and ``seed``."""
    level = level if level is not None else load_experiment_level(config)
    params = config.fitness.for_max_time(level.max_time)
    started = time.perf_counter()
    if config.algorithm == "GA":
        ga_cfg = replace(config.ga, rng_seed=seed)
        best, history, rep, state = run_ga(
            level, params, ga_cfg, config.constraints,
            wall_clock_budget=config.wall_clock_budget, threads=config.threads,
            on_generation=on_generation,
        )
        summary, fitness = best.summary, best.fitness
        mutations = state.mutations_at_best
    else:
        ne = config.ne_run
        with warnings.catch_warnings():
            # num_inputs is rebound to the observation length on purpose
            warnings.simplefilter("ignore")
            best, history, rep, state = run_neat(
                level, params, config.neat, config.constraints,
                generations=ne.generations, move_budget=ne.move_budget,
                stagnation_window=ne.moves_to_check, window=ne.window, seed=seed,
                wall_clock_budget=config.wall_clock_budget, threads=config.threads,
                on_generation=on_generation,
            )
        summary, fitness = state.best_episode.summary, state.best_episode.fitness
        mutations = state.mutations_at_best
    return RunRecord(
        algorithm=config.algorithm,
        seed=seed,
        history=history,
        replay=rep,
        summary=summary,
        fitness=fitness,
        solved=is_solution(summary, config.constraints),
        generations=state.generation_index,
        mutations_performed=mutations,
        time_to_best=state.time_to_best,
        wall_time=time.perf_counter() - started,
        level=level,
        params=params,
    )


def run_experiment(config: ExperimentConfig, on_record=None) -> list:
    """Run every seed of ``config`` in order and return the records."""
    level = load_experiment_level(config)
    records = []
    for seed in config.seeds:
        rec = run_single(config, seed, level)
        log.info("%s seed %d: best %.3f solved=%s", config.algorithm, seed, rec.fitness, rec.solved)
        records.append(rec)
        if on_record:
            on_record(rec)
    return records


def aggregate(records) -> list:
    """Per-generation means of best, mean and worst fitness, truncated to
    the shortest history. Returns ``(generation, best, mean, worst)`` rows."""
    if not records:
        raise ValueError("need at least one record")
    histories = [r.history if hasattr(r, "history") else r for r in records]
    n = min(len(h) for h in histories)
    rows = []
    for g in range(n):
        col = [h[g] for h in histories]
        rows.append((
            g,
            math.fsum(s.best_fitness for s in col) / len(col),
            math.fsum(s.mean_fitness for s in col) / len(col),
            math.fsum(s.worst_fitness for s in col) / len(col),
        ))
    return rows


def success_rate(records) -> float:
    if not records:
        raise ValueError("need at least one record")
    return sum(1 for r in records if r.solved) / len(records)


def resimulate(level: LevelSpec, actions):
    """Step a trace through a fresh environment; returns ``(summary, counts)``."""
    state = reset(level)
    counts = {"jumps": 0, "right": 0, "left": 0}
    reason = TruncationReason.BUDGET
    n = 0
    for state, events in replay_states(level, actions):
        a = actions[n]
        n += 1
        if a in JUMP_ACTIONS:
            counts["jumps"] += 1
        elif a in RIGHT_ACTIONS:
            counts["right"] += 1
        elif a in LEFT_ACTIONS:
            counts["left"] += 1
        if events.reached_flag:
            reason = TruncationReason.FLAG
            break
        if state.life == 0:
            reason = TruncationReason.DEATH
            break
    return summarize(state, level, n, reason), counts


def _same_outcome(a: EpisodeSummary, b: EpisodeSummary) -> bool:
    # the stop reason is not re-derivable without the stagnation window
    return (a.collected_coins, a.distance, a.time_left, a.flag_get, a.deaths, a.moves_used) == (
        b.collected_coins, b.distance, b.time_left, b.flag_get, b.deaths, b.moves_used)


def gameplay_stats(record: RunRecord) -> GameplayStats:
    """Recount the best agent's play by re-simulating its replay."""
    actions = list(record.replay.actions)
    summary, counts = resimulate(record.level, actions)
    fitness = compute_fitness(summary, record.params)
    if not _same_outcome(summary, record.summary) or fitness != record.fitness:
        raise ReplayMismatch(
            f"seed {record.seed}: replay gives fitness {fitness!r}, recorded {record.fitness!r}"
        )
    return GameplayStats(
        distance=summary.distance,
        time_taken=summary.elapsed,
        coins=summary.collected_coins,
        deaths=summary.deaths,
        jumps=counts["jumps"],
        right_moves=counts["right"],
        left_moves=counts["left"],
        moves_used=summary.moves_used,
        mutations_performed=record.mutations_performed,
        time_to_best=record.time_to_best,
    )


# --- scaling -------------------------------------------------------------

@dataclass(frozen=True)
class ScalingResult:
    rows: list  # (axis, value, seconds)
    slopes: dict  # axis -> fitted log-log exponent

    def ratios(self, axis):
        """Time ratio between consecutive grid points along ``axis``."""
        pts = [(v, t) for a, v, t in self.rows if a == axis]
        return [t2 / t1 for (_, t1), (_, t2) in zip(pts, pts[1:])]


def _timed_run(algorithm, level, population, moves, generations, seed):
    params = FitnessParams().for_max_time(level.max_time)
    unreachable = ConstraintSpec(max_moves=moves, min_coins=level.coin_count + 1)
    # like timeit: collector pauses depend on the caller's heap, not on the run
    gc.collect()
    was_enabled = gc.isenabled()
    gc.disable()
    try:
        return _run_for_timing(algorithm, level, params, unreachable, population, moves,
                               generations, seed)
    finally:
        if was_enabled:
            gc.enable()


def _run_for_timing(algorithm, level, params, unreachable, population, moves, generations, seed):
    start = time.perf_counter()
    if algorithm == "GA":
        cfg = GAConfig(population_size=population, moves_amount=moves, moves_to_check=moves,
                       generation_amount=generations, rng_seed=seed)
        run_ga(level, params, cfg, unreachable, threads=1)
    else:
        cfg = NEATConfig(pop_size=population)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            run_neat(level, params, cfg, unreachable, generations=generations,
                     move_budget=moves, stagnation_window=moves, seed=seed, threads=1)
    return time.perf_counter() - start


def measure_scaling(algorithm: str, populations, moves, level: LevelSpec | None = None,
                    generations: int = 5, base_population=None, base_moves=None,
                    repeats: int = 3, seed: int = 0) -> ScalingResult:
    """Time fixed-generation runs along the population and move axes.

    Each point is the minimum of ``repeats`` timings taken in interleaved
    sweeps; the other axis stays at its base value (the first grid point
    by default). The default level has no exits, so every episode uses its
    full move budget.
    """
    if len(populations) < 3 or len(moves) < 3:
        raise ValueError("need at least 3 grid points per axis")
    if level is None:
        from .levels import bundled_level
        level = bundled_level("runway")
    base_population = base_population or populations[0]
    base_moves = base_moves or moves[0]
    points = [("population", v, v, base_moves) for v in populations]
    points += [("moves", v, base_population, v) for v in moves]
    best = [math.inf] * len(points)
    # repeats sweep the whole grid so a slow stretch hits every point alike
    for _ in range(repeats):
        for i, (_, _, pop, mv) in enumerate(points):
            best[i] = min(best[i], _timed_run(algorithm, level, pop, mv, generations, seed))
    rows = [(axis, v, t) for (axis, v, _, _), t in zip(points, best)]
    slopes = {}
    for axis in ("population", "moves"):
        pts = [(v, t) for a, v, t in rows if a == axis]
        x = np.log([p[0] for p in pts])
        y = np.log([p[1] for p in pts])
        slopes[axis] = float(np.polyfit(x, y, 1)[0])
    return ScalingResult(rows, slopes)


# --- output files --------------------------------------------------------

RUN_COLUMNS = ("generation", "best", "mean", "worst", "stuck_cumulative", "solved", "elapsed_wall")
STATS_COLUMNS = (
    "seed", "solved", "fitness", "distance", "time_taken", "coins", "deaths", "jumps",
    "right_moves", "left_moves", "moves_used", "mutations_performed", "time_to_best",
)


def _num(x) -> str:
    return repr(float(x))


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _write_atomic(path: Path, text: str):
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run_csv(history, timings=False) -> str:
    rows = [
        (s.generation, _num(s.best_fitness), _num(s.mean_fitness), _num(s.worst_fitness),
         s.stuck_events_cumulative, int(s.solved), f"{s.elapsed_wall:.6f}" if timings else "")
        for s in history
    ]
    return _csv_text(RUN_COLUMNS, rows)


def summary_csv(records) -> str:
    rows = [(g, _num(b), _num(m), _num(w)) for g, b, m, w in aggregate(records)]
    return _csv_text(("generation", "best", "mean", "worst"), rows)


def stats_csv(records, timings=False) -> str:
    rows = []
    for r in records:
        st = gameplay_stats(r)
        rows.append((
            r.seed, int(r.solved), _num(r.fitness), st.distance, st.time_taken, st.coins,
            st.deaths, st.jumps, st.right_moves, st.left_moves, st.moves_used,
            st.mutations_performed, f"{st.time_to_best:.6f}" if timings else "",
        ))
    return _csv_text(STATS_COLUMNS, rows)


def fitness_svg(rows, title="fitness per generation", width=640, height=400) -> str:
    """Line chart of aggregated best/mean/worst fitness against generation."""
    left, right, top, bottom = 70, 20, 40, 50
    pw, ph = width - left - right, height - top - bottom
    gens = [r[0] for r in rows]
    vals = [v for r in rows for v in r[1:]]
    x0, x1 = min(gens), max(max(gens), min(gens) + 1)
    y0, y1 = min(vals), max(vals)
    if y1 - y0 < 1e-9:
        y0, y1 = y0 - 1.0, y1 + 1.0

    def px(g):
        return left + (g - x0) / (x1 - x0) * pw

    def py(v):
        return top + (y1 - v) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="24" text-anchor="middle" font-family="sans-serif" '
        f'font-size="15">{title}</text>',
        f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>',
    ]
    for i in range(5):
        g = x0 + (x1 - x0) * i / 4
        v = y0 + (y1 - y0) * i / 4
        out.append(f'<text x="{px(g):.2f}" y="{top + ph + 18}" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="11">{g:.0f}</text>')
        out.append(f'<text x="{left - 6}" y="{py(v) + 4:.2f}" text-anchor="end" '
                   f'font-family="sans-serif" font-size="11">{v:.1f}</text>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{height - 10}" text-anchor="middle" '
               f'font-family="sans-serif" font-size="12">generation</text>')
    out.append(f'<text x="16" y="{top + ph / 2:.1f}" text-anchor="middle" font-family="sans-serif" '
               f'font-size="12" transform="rotate(-90 16 {top + ph / 2:.1f})">fitness</text>')
    series = (("best", 1, "#1f77b4"), ("mean", 2, "#2ca02c"), ("worst", 3, "#d62728"))
    for k, (name, col, colour) in enumerate(series):
        pts = " ".join(f"{px(r[0]):.2f},{py(r[col]):.2f}" for r in rows)
        out.append(f'<polyline id="{name}" fill="none" stroke="{colour}" stroke-width="1.5" '
                   f'points="{pts}"/>')
        ly = top + 14 + 16 * k
        out.append(f'<line x1="{left + pw - 90}" y1="{ly}" x2="{left + pw - 70}" y2="{ly}" '
                   f'stroke="{colour}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw - 64}" y="{ly + 4}" font-family="sans-serif" '
                   f'font-size="11">{name}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_outputs(records, output_dir, timings=False) -> list:
    """Write run CSVs, replays, summary.csv, stats.csv and fitness.svg.

    Wall-clock columns stay empty unless ``timings`` is set, which keeps
    the files byte-identical across repeated runs. Returns written paths.
    """
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    def put(name, text):
        path = out / name
        _write_atomic(path, text)
        written.append(path)

    for r in records:
        put(f"run_{r.seed}.csv", run_csv(r.history, timings))
        put(f"best_{r.seed}.replay", r.replay.dumps())
    put("summary.csv", summary_csv(records))
    put("stats.csv", stats_csv(records, timings))
    algo = records[0].algorithm if records else ""
    put("fitness.svg", fitness_svg(aggregate(records), f"{algo} fitness per generation".strip()))
    return written
