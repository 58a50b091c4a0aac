"""Sequence-genome GA and NEAT neuroevolution on a deterministic tile platformer."""

from .env import Action, LevelSpec, load_level, read_level, reset, step, observe, run_episode
from .fitness import ConstraintSpec, EpisodeSummary, FitnessParams, compute_fitness, is_solution

__all__ = [
    "Action", "LevelSpec", "load_level", "read_level", "reset", "step", "observe",
    "run_episode", "ConstraintSpec", "EpisodeSummary", "FitnessParams",
    "compute_fitness", "is_solution",
]
__version__ = "0.1.0"
