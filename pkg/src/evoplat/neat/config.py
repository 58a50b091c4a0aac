"""NEAT hyperparameters and their INI representation.

The five sections and key names follow the conventional NEAT config file
layout. Unknown keys, missing sections and malformed values are errors.
"""

from __future__ import annotations

import configparser
import io
import warnings
from dataclasses import asdict, dataclass, fields, replace


class ConfigError(ValueError):
    pass


SECTIONS = {
    "NEAT": ("fitness_criterion", "fitness_threshold", "pop_size", "reset_on_extinction"),
    "DefaultGenome": (
        "activation_default", "activation_mutate_rate", "activation_options",
        "aggregation_default", "aggregation_mutate_rate", "aggregation_options",
        "bias_init_mean", "bias_init_stdev", "bias_max_value", "bias_min_value",
        "bias_mutate_power", "bias_mutate_rate", "bias_replace_rate",
        "compatibility_disjoint_coefficient", "compatibility_weight_coefficient",
        "conn_add_prob", "conn_delete_prob", "enabled_default", "enabled_mutate_rate",
        "feed_forward", "initial_connection", "node_add_prob", "node_delete_prob",
        "num_hidden", "num_inputs", "num_outputs",
        "response_init_mean", "response_init_stdev", "response_max_value",
        "response_min_value", "response_mutate_power", "response_mutate_rate",
        "response_replace_rate",
        "weight_init_mean", "weight_init_stdev", "weight_max_value", "weight_min_value",
        "weight_mutate_power", "weight_mutate_rate", "weight_replace_rate",
    ),
    "DefaultSpeciesSet": ("compatibility_threshold",),
    "DefaultStagnation": ("species_fitness_func", "max_stagnation", "species_elitism"),
    "DefaultReproduction": ("elitism", "survival_threshold"),
}

ACTIVATIONS = ("sigmoid", "gauss")
AGGREGATIONS = ("sum",)
_PROBS = (
    "activation_mutate_rate", "aggregation_mutate_rate", "bias_mutate_rate",
    "bias_replace_rate", "conn_add_prob", "conn_delete_prob", "enabled_mutate_rate",
    "node_add_prob", "node_delete_prob", "response_mutate_rate", "response_replace_rate",
    "weight_mutate_rate", "weight_replace_rate", "survival_threshold",
)


@dataclass(frozen=True)
class NEATConfig:
    fitness_criterion: str = "max"
    fitness_threshold: float = 500000.0
    pop_size: int = 150
    reset_on_extinction: bool = True

    activation_default: str = "sigmoid"
    activation_mutate_rate: float = 0.05
    activation_options: tuple = ("sigmoid", "gauss")
    aggregation_default: str = "random"
    aggregation_mutate_rate: float = 0.05
    aggregation_options: tuple = ("sum",)
    bias_init_mean: float = 0.05
    bias_init_stdev: float = 1.0
    bias_max_value: float = 30.0
    bias_min_value: float = -30.0
    bias_mutate_power: float = 0.5
    bias_mutate_rate: float = 0.7
    bias_replace_rate: float = 0.1
    compatibility_disjoint_coefficient: float = 1.0
    compatibility_weight_coefficient: float = 0.5
    conn_add_prob: float = 0.5
    conn_delete_prob: float = 0.5
    enabled_default: bool = True
    enabled_mutate_rate: float = 0.5
    feed_forward: bool = False
    initial_connection: str = "partial 0.5"
    node_add_prob: float = 0.5
    node_delete_prob: float = 0.2
    num_hidden: int = 0
    num_inputs: int = 960
    num_outputs: int = 7
    response_init_mean: float = 1.0
    response_init_stdev: float = 0.05
    response_max_value: float = 30.0
    response_min_value: float = -30.0
    response_mutate_power: float = 0.1
    response_mutate_rate: float = 0.75
    response_replace_rate: float = 0.1
    weight_init_mean: float = 0.1
    weight_init_stdev: float = 1.0
    weight_max_value: float = 30.0
    weight_min_value: float = -30.0
    weight_mutate_power: float = 0.5
    weight_mutate_rate: float = 0.8
    weight_replace_rate: float = 0.1

    compatibility_threshold: float = 2.5

    species_fitness_func: str = "max"
    max_stagnation: int = 50
    species_elitism: int = 2

    elitism: int = 3
    survival_threshold: float = 0.3

    def __post_init__(self):
        for name in _PROBS:
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1]")
        if self.pop_size < 2:
            raise ConfigError("pop_size must be >= 2")
        if self.num_inputs < 1 or self.num_outputs < 1 or self.num_hidden < 0:
            raise ConfigError("num_inputs, num_outputs must be >= 1 and num_hidden >= 0")
        if self.feed_forward:
            raise ConfigError("only feed_forward = False (recurrent networks) is supported")
        if self.fitness_criterion not in ("max", "mean", "min"):
            raise ConfigError(f"unknown fitness_criterion {self.fitness_criterion!r}")
        if self.species_fitness_func not in ("max", "mean", "min"):
            raise ConfigError(f"unknown species_fitness_func {self.species_fitness_func!r}")
        for opt in self.activation_options:
            if opt not in ACTIVATIONS:
                raise ConfigError(f"unsupported activation {opt!r}")
        for opt in self.aggregation_options:
            if opt not in AGGREGATIONS:
                raise ConfigError(f"unsupported aggregation {opt!r}")
        if not self.activation_options or not self.aggregation_options:
            raise ConfigError("activation_options and aggregation_options must be non-empty")
        if self.activation_default not in self.activation_options + ("random",):
            raise ConfigError("activation_default must be one of activation_options or random")
        if self.aggregation_default not in self.aggregation_options + ("random",):
            raise ConfigError("aggregation_default must be one of aggregation_options or random")
        for attr in ("bias", "response", "weight"):
            if getattr(self, f"{attr}_min_value") > getattr(self, f"{attr}_max_value"):
                raise ConfigError(f"{attr}_min_value exceeds {attr}_max_value")
        self.connection_fraction  # validates initial_connection
        if self.elitism < 0 or self.species_elitism < 0 or self.max_stagnation < 1:
            raise ConfigError("elitism, species_elitism must be >= 0 and max_stagnation >= 1")
        if self.compatibility_threshold < 0:
            raise ConfigError("compatibility_threshold must be >= 0")

    @property
    def connection_fraction(self) -> float:
        """Probability of each input->output link at initialisation."""
        parts = self.initial_connection.split()
        if parts == ["full"] or parts == ["full_direct"]:
            return 1.0
        if parts == ["unconnected"]:
            return 0.0
        if len(parts) == 2 and parts[0] in ("partial", "partial_direct"):
            try:
                p = float(parts[1])
            except ValueError:
                p = -1.0
            if 0.0 <= p <= 1.0:
                return p
        raise ConfigError(f"unsupported initial_connection {self.initial_connection!r}")

    def with_inputs(self, n: int) -> "NEATConfig":
        """Bind ``num_inputs`` to the observation length, warning on change."""
        if self.num_inputs != n:
            warnings.warn(
                f"num_inputs={self.num_inputs} overridden to observation length {n}",
                stacklevel=2,
            )
            return replace(self, num_inputs=n)
        return self


_TYPES = {f.name: f.type for f in fields(NEATConfig)}


def _parse_value(name, raw):
    kind = _TYPES[name]
    raw = raw.strip()
    try:
        if kind == "bool":
            low = raw.lower()
            if low in ("true", "1", "yes", "on"):
                return True
            if low in ("false", "0", "no", "off"):
                return False
            raise ValueError(raw)
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "tuple":
            return tuple(raw.split())
        return raw
    except ValueError:
        raise ConfigError(f"bad value for {name}: {raw!r}") from None


def _format_value(value):
    if isinstance(value, tuple):
        return " ".join(value)
    if isinstance(value, bool):
        return "True" if value else "False"
    return str(value)


def neat_config_from_parser(parser: configparser.ConfigParser, require_all=True) -> NEATConfig:
    """Build a config from the five NEAT sections of ``parser``."""
    values = {}
    for section, keys in SECTIONS.items():
        if not parser.has_section(section):
            if require_all:
                raise ConfigError(f"missing section [{section}]")
            continue
        for key, raw in parser.items(section):
            if key not in keys:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            values[key] = _parse_value(key, raw)
    try:
        return NEATConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def _parser():
    p = configparser.ConfigParser(interpolation=None, default_section="__none__")
    p.optionxform = str
    return p


def loads_neat_config(text: str) -> NEATConfig:
    parser = _parser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    extra = set(parser.sections()) - set(SECTIONS)
    if extra:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(extra))}")
    return neat_config_from_parser(parser)


def load_neat_config(path) -> NEATConfig:
    with open(path, encoding="utf-8") as fh:
        return loads_neat_config(fh.read())


def neat_sections(config: NEATConfig) -> dict:
    data = asdict(config)
    return {s: {k: _format_value(data[k]) for k in keys} for s, keys in SECTIONS.items()}


def dumps_neat_config(config: NEATConfig) -> str:
    parser = _parser()
    parser.read_dict(neat_sections(config))
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()
