"""Experiment configuration files.

One INI file drives a whole experiment::

    [run]          algorithm, level, repeats, seeds, output_dir,
                   wall_clock_budget, timings; NE runs also take
                   generations, move_budget, moves_to_check, window
    [fitness]      coin_reward, distance_reward, time_penalty
    [constraints]  max_moves, max_deaths, max_time, min_coins
    [GA]           any GAConfig field
    [NEAT] [DefaultGenome] [DefaultSpeciesSet] [DefaultStagnation]
    [DefaultReproduction]

Every section except ``[run]`` is optional and falls back to defaults.
Unknown sections, unknown keys and malformed values raise ``ConfigError``.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import asdict, fields, replace
from pathlib import Path

from .fitness import ConstraintSpec, FitnessParams
from .ga import GAConfig
from .harness import ExperimentConfig, NERunParams
from .neat.config import SECTIONS as NEAT_SECTIONS
from .neat.config import ConfigError, neat_config_from_parser, neat_sections

RUN_KEYS = ("algorithm", "level", "repeats", "seeds", "output_dir", "wall_clock_budget", "timings")
NE_RUN_KEYS = ("generations", "move_budget", "moves_to_check", "window")
FITNESS_KEYS = ("coin_reward", "distance_reward", "time_penalty")
CONSTRAINT_KEYS = ("max_moves", "max_deaths", "max_time", "min_coins")
GA_KEYS = tuple(f.name for f in fields(GAConfig))
_GA_INTS = {"population_size", "generation_amount", "moves_amount", "moves_to_check",
            "elitism_count", "offspring_per_pair", "tournament_size", "rng_seed"}

KNOWN_SECTIONS = ("run", "fitness", "constraints", "GA") + tuple(NEAT_SECTIONS)

__all__ = ["ConfigError", "load_config", "loads_config", "dumps_config"]


def _parser():
    p = configparser.ConfigParser(interpolation=None, default_section="__none__")
    p.optionxform = str
    return p


def _int(section, key, raw):
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: expected an integer, got {raw!r}") from None


def _float(section, key, raw):
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: expected a number, got {raw!r}") from None


def _ints(section, key, raw):
    parts = raw.replace(",", " ").split()
    return tuple(_int(section, key, p) for p in parts)


def _bool(section, key, raw):
    low = raw.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ConfigError(f"[{section}] {key}: expected a boolean, got {raw!r}")


def _check_keys(parser, section, allowed):
    for key in parser[section]:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} in [{section}]")


def _resolve_level(raw: str, base: Path | None) -> str:
    from .levels import bundled_level_names, bundled_level_path

    path = Path(raw)
    if path.exists():
        return raw
    if base is not None and not path.is_absolute() and (base / path).exists():
        return str(base / path)
    name = raw if raw.endswith(".txt") else raw + ".txt"
    if name in bundled_level_names():
        return bundled_level_path(name)
    raise ConfigError(f"level file not found: {raw}")


def loads_config(text: str, base_dir=None) -> ExperimentConfig:
    """Parse experiment config text; relative level paths may resolve
    against ``base_dir``."""
    parser = _parser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc).splitlines()[0]) from None
    for section in parser.sections():
        if section not in KNOWN_SECTIONS:
            raise ConfigError(f"unknown section [{section}]")
    if not parser.has_section("run"):
        raise ConfigError("missing section [run]")
    _check_keys(parser, "run", RUN_KEYS + NE_RUN_KEYS)
    run = parser["run"]

    algorithm = run.get("algorithm", "").strip()
    if algorithm not in ("GA", "NE"):
        raise ConfigError(f"[run] algorithm must be GA or NE, got {algorithm!r}")
    if "level" not in run:
        raise ConfigError("[run] level is required")
    level_path = _resolve_level(run["level"].strip(), Path(base_dir) if base_dir else None)

    repeats = _int("run", "repeats", run["repeats"]) if "repeats" in run else None
    seeds = _ints("run", "seeds", run["seeds"]) if "seeds" in run else None
    if seeds is None:
        seeds = tuple(range(repeats if repeats is not None else 5))
    if repeats is not None and repeats != len(seeds):
        raise ConfigError(f"[run] repeats={repeats} but {len(seeds)} seeds given")
    if not seeds:
        raise ConfigError("[run] needs at least one seed")
    budget = run.get("wall_clock_budget", "").strip()
    wall = _float("run", "wall_clock_budget", budget) if budget else None

    ne_values = {}
    for key in NE_RUN_KEYS:
        if key not in run:
            continue
        if algorithm == "GA":
            raise ConfigError(f"[run] {key} applies to NE runs; GA settings belong in [GA]")
        ne_values[key] = (_ints("run", key, run[key]) if key == "window"
                          else _int("run", key, run[key]))

    fit_values = {}
    if parser.has_section("fitness"):
        _check_keys(parser, "fitness", FITNESS_KEYS)
        fit_values = {k: _float("fitness", k, v) for k, v in parser["fitness"].items()}
    con_values = {}
    if parser.has_section("constraints"):
        _check_keys(parser, "constraints", CONSTRAINT_KEYS)
        for k, v in parser["constraints"].items():
            v = v.strip()
            con_values[k] = None if k == "max_time" and v.lower() in ("", "none") else _int(
                "constraints", k, v)
    ga_values = {}
    if parser.has_section("GA"):
        _check_keys(parser, "GA", GA_KEYS)
        for k, v in parser["GA"].items():
            if k == "actions":
                ga_values[k] = _ints("GA", k, v)
            elif k in _GA_INTS:
                ga_values[k] = _int("GA", k, v)
            else:
                ga_values[k] = _float("GA", k, v)
    neat = neat_config_from_parser(parser, require_all=False)

    try:
        return ExperimentConfig(
            algorithm=algorithm,
            level_path=level_path,
            seeds=seeds,
            wall_clock_budget=wall,
            output_dir=run.get("output_dir", "out").strip(),
            ga=GAConfig(**ga_values),
            neat=neat,
            ne_run=NERunParams(**ne_values),
            fitness=FitnessParams(**fit_values),
            constraints=ConstraintSpec(**con_values),
            timings=_bool("run", "timings", run["timings"]) if "timings" in run else False,
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return loads_config(text, base_dir=path.parent)


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return " ".join(str(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return "none" if v is None else str(v)


def dumps_config(config: ExperimentConfig) -> str:
    """Effective configuration as INI text; ``loads_config`` inverts it."""
    run = {
        "algorithm": config.algorithm,
        "level": config.level_path,
        "repeats": str(config.repeats),
        "seeds": _fmt(config.seeds),
        "output_dir": config.output_dir,
        "wall_clock_budget": "" if config.wall_clock_budget is None else repr(config.wall_clock_budget),
        "timings": _fmt(config.timings),
    }
    if config.algorithm == "NE":
        run.update({k: _fmt(v) for k, v in asdict(config.ne_run).items()})
    data = {
        "run": run,
        "fitness": {k: _fmt(getattr(config.fitness, k)) for k in FITNESS_KEYS},
        "constraints": {k: _fmt(getattr(config.constraints, k)) for k in CONSTRAINT_KEYS},
        "GA": {k: _fmt(v) for k, v in asdict(config.ga).items()},
    }
    data.update(neat_sections(config.neat))
    parser = _parser()
    parser.read_dict(data)
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


def with_overrides(config: ExperimentConfig, output_dir=None, seed_offset=0) -> ExperimentConfig:
    if output_dir is not None:
        config = replace(config, output_dir=str(output_dir))
    if seed_offset:
        config = replace(config, seeds=tuple(s + seed_offset for s in config.seeds))
    return config
