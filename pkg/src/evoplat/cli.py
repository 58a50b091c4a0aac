"""Command-line interface: ``evoplat train | replay | compare | make-level``.

Exit codes: 0 success, 2 configuration or parse error, 3 runtime error,
4 replay divergence.
"""

from __future__ import annotations

import csv
import io
import logging
import sys
import time
from pathlib import Path

import click

from .config import ConfigError, load_config, with_overrides
from .env import (
    ParseError,
    ValidationError,
    parse_replay,
    read_level,
    render_ascii,
    replay_states,
    reset,
)
from .fitness import FitnessParams, compute_fitness
from .harness import (
    ReplayMismatch,
    emit_outputs,
    resimulate,
    run_single,
    success_rate,
)
from .levels import make_level_text

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_DIVERGED = 0, 2, 3, 4


def _fail(code, message):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load(config_path, out, seed_offset):
    try:
        cfg = load_config(config_path)
        cfg = with_overrides(cfg, out, seed_offset)
        read_level(cfg.level_path)
    except (ConfigError, ParseError, ValidationError) as exc:
        _fail(EXIT_CONFIG, str(exc))
    except OSError as exc:
        _fail(EXIT_CONFIG, f"cannot read level: {exc}")
    return cfg


def _train(cfg, echo=True):
    def progress(stats):
        if echo:
            click.echo(f"gen {stats.generation} best {stats.best_fitness!r}")

    records = []
    for seed in cfg.seeds:
        if echo:
            click.echo(f"== {cfg.algorithm} seed {seed}")
        rec = run_single(cfg, seed, on_generation=progress)
        records.append(rec)
        if echo:
            click.echo(f"seed {seed}: best {rec.fitness!r} solved={rec.solved} "
                       f"generations={rec.generations}")
    return records


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def main(verbose):
    """Evolve platformer agents with a genetic algorithm or neuroevolution."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(dir_okay=False),
              help="Experiment INI file.")
@click.option("--out", type=click.Path(file_okay=False), default=None,
              help="Override [run] output_dir.")
@click.option("--seed-offset", type=int, default=0, help="Add this to every seed.")
def train(config_path, out, seed_offset):
    """Run every seed of an experiment and write its output files."""
    cfg = _load(config_path, out, seed_offset)
    try:
        records = _train(cfg)
        emit_outputs(records, cfg.output_dir, timings=cfg.timings)
    except ReplayMismatch as exc:
        _fail(EXIT_DIVERGED, str(exc))
    except OSError as exc:
        _fail(EXIT_RUNTIME, f"cannot write outputs: {exc}")
    except Exception as exc:  # noqa: BLE001 - reported as a runtime failure
        _fail(EXIT_RUNTIME, f"{type(exc).__name__}: {exc}")
    click.echo(f"success rate {success_rate(records)!r}; outputs in {cfg.output_dir}")


@main.command("replay")
@click.argument("replay_path", type=click.Path(dir_okay=False))
@click.option("--level", "level_path", type=click.Path(dir_okay=False), default=None,
              help="Level file (defaults to the path stored in the replay).")
def replay_cmd(replay_path, level_path):
    """Re-simulate a replay and print its summary and final frame."""
    try:
        rep = parse_replay(Path(replay_path).read_text(encoding="utf-8"))
        level = read_level(level_path or rep.level)
    except (ParseError, ValidationError) as exc:
        _fail(EXIT_CONFIG, str(exc))
    except OSError as exc:
        _fail(EXIT_CONFIG, f"cannot read file: {exc}")
    h = rep.header
    try:
        params = FitnessParams(
            float(h.get("coin_reward", 10.0)), float(h.get("distance_reward", 0.1)),
            float(h.get("time_penalty", 0.8)), level.max_time,
        )
    except ValueError as exc:
        _fail(EXIT_CONFIG, f"bad replay header: {exc}")
    summary, _ = resimulate(level, list(rep.actions))
    fitness = compute_fitness(summary, params)
    final = reset(level)
    for final, _ in replay_states(level, rep.actions[: summary.moves_used]):
        pass
    click.echo(render_ascii(final, level))
    for key in ("collected_coins", "distance", "time_left", "elapsed", "flag_get", "deaths",
                "moves_used"):
        click.echo(f"{key}: {getattr(summary, key)}")
    click.echo(f"fitness: {fitness!r}")
    expected = {
        "fitness": repr(fitness), "coins": str(summary.collected_coins),
        "distance": str(summary.distance), "time_left": str(summary.time_left),
        "flag_get": str(int(summary.flag_get)), "deaths": str(summary.deaths),
        "moves": str(summary.moves_used),
    }
    diverged = [k for k, v in expected.items() if k in h and h[k] != v]
    if diverged:
        _fail(EXIT_DIVERGED, "replay diverges from its header: " + ", ".join(
            f"{k} recorded {h[k]} got {expected[k]}" for k in diverged))


@main.command()
@click.argument("ga_config", type=click.Path(dir_okay=False))
@click.argument("ne_config", type=click.Path(dir_okay=False))
@click.option("--out", type=click.Path(file_okay=False), default=None,
              help="Directory for compare.csv (defaults to the GA output_dir).")
@click.option("--seed-offset", type=int, default=0, help="Add this to every seed.")
def compare(ga_config, ne_config, out, seed_offset):
    """Run a GA and an NE experiment and tabulate their results."""
    cfgs = [_load(ga_config, None, seed_offset), _load(ne_config, None, seed_offset)]
    rows = []
    try:
        for cfg in cfgs:
            t0 = time.perf_counter()
            records = _train(cfg, echo=False)
            wall = time.perf_counter() - t0
            rows.append((
                cfg.algorithm,
                success_rate(records),
                sum(r.fitness for r in records) / len(records),
                sum(r.generations for r in records) / len(records),
                wall,
            ))
    except Exception as exc:  # noqa: BLE001
        _fail(EXIT_RUNTIME, f"{type(exc).__name__}: {exc}")
    header = ("algorithm", "success_rate", "mean_best_fitness", "generations", "wall_time")
    click.echo(f"{header[0]:<10}{header[1]:>14}{header[2]:>20}{header[3]:>14}{header[4]:>12}")
    for algo, sr, fit, gens, wall in rows:
        click.echo(f"{algo:<10}{sr:>14.3f}{fit:>20.3f}{gens:>14.1f}{wall:>12.2f}")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows((a, repr(s), repr(f), repr(g), f"{w:.3f}") for a, s, f, g, w in rows)
    target = Path(out or cfgs[0].output_dir)
    try:
        target.mkdir(parents=True, exist_ok=True)
        (target / "compare.csv").write_text(buf.getvalue(), encoding="utf-8")
    except OSError as exc:
        _fail(EXIT_RUNTIME, f"cannot write compare.csv: {exc}")


@main.command("make-level")
@click.option("--width", type=int, required=True)
@click.option("--coins", type=int, default=0)
@click.option("--pipes", type=int, default=0)
@click.option("--seed", type=int, default=0)
@click.option("--time", "max_time", type=int, default=400, help="Level time allowance.")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write here instead of standard output.")
def make_level_cmd(width, coins, pipes, seed, max_time, out):
    """Generate a flat level with seeded pipes and coins."""
    try:
        text = make_level_text(width, coins, pipes, seed, max_time)
    except ValueError as exc:
        _fail(EXIT_CONFIG, str(exc))
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


if __name__ == "__main__":
    main()
