"""Neuroevolution of recurrent networks with speciation."""

from .config import ConfigError, NEATConfig, dumps_neat_config, load_neat_config, loads_neat_config
from .engine import NEATRunState, play_network, run_neat
from .genome import (
    ConnectionGene,
    Genome,
    InnovationRegistry,
    NodeGene,
    compatibility_distance,
    crossover,
    init_genome,
    mutate,
)
from .network import DimensionMismatch, RecurrentNetwork, activate, compile_network
from .reproduction import reproduce
from .species import Species, SpeciesSet, speciate

__all__ = [
    "ConfigError", "NEATConfig", "dumps_neat_config", "load_neat_config", "loads_neat_config",
    "NEATRunState", "play_network", "run_neat",
    "ConnectionGene", "Genome", "InnovationRegistry", "NodeGene", "compatibility_distance",
    "crossover", "init_genome", "mutate",
    "DimensionMismatch", "RecurrentNetwork", "activate", "compile_network",
    "reproduce", "Species", "SpeciesSet", "speciate",
]
