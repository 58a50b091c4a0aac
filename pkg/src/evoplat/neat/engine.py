"""Generation loop for neuroevolution agents."""

from __future__ import annotations

import logging
import random
import time
from dataclasses import dataclass, field

import numpy as np

from .. import kernels
from ..env import LevelSpec, Replay, observation_size, replay_header, summary_from_kernel
from ..fitness import ConstraintSpec, EpisodeSummary, FitnessParams, compute_fitness, is_solution
from ..parallel import map_ordered
from ..stats import generation_stats
from .config import NEATConfig
from .genome import Genome, InnovationRegistry
from .network import compile_network
from .reproduction import KeyCounter, fresh_population, reproduce
from .species import SpeciesSet, speciate

log = logging.getLogger(__name__)


@dataclass
class Episode:
    fitness: float
    summary: EpisodeSummary
    actions: tuple


@dataclass
class NEATRunState:
    config: NEATConfig
    registry: InnovationRegistry
    generation_index: int = 0
    population: list = field(default_factory=list)
    species: SpeciesSet | None = None
    best_ever: Genome | None = None
    best_episode: Episode | None = None
    stuck_events: int = 0
    evaluations: int = 0
    time_to_best: float = 0.0
    started: float = field(default_factory=time.perf_counter)

    @property
    def mutations_at_best(self) -> int:
        return self.best_ever.mutations if self.best_ever is not None else 0


def play_network(genome: Genome, level: LevelSpec, params: FitnessParams, move_budget: int,
                 stagnation_window: int, window=(8, 8)) -> Episode:
    """Run one episode with the genome's network choosing every action."""
    params = params.for_max_time(level.max_time)
    actions = np.zeros(move_budget, dtype=np.int8)
    res = kernels.run_network(
        *level.kernel_args(), compile_network(genome), window[0], window[1],
        move_budget, stagnation_window,
        params.coin_reward, params.distance_reward, params.time_penalty, actions,
    )
    summary = summary_from_kernel(res, level.max_time)
    actions = tuple(int(a) for a in actions[: summary.moves_used])
    return Episode(compute_fitness(summary, params), summary, actions)


def _criterion(config, fits):
    if config.fitness_criterion == "max":
        return max(fits)
    if config.fitness_criterion == "min":
        return min(fits)
    return sum(fits) / len(fits)


def run_neat(level: LevelSpec, params: FitnessParams, config: NEATConfig,
             constraints: ConstraintSpec, *, generations: int = 300, move_budget: int = 5000,
             stagnation_window: int = 30, window=(8, 8), seed: int = 0,
             wall_clock_budget=None, threads=None, on_generation=None):
    """Evolve recurrent networks on ``level``.

    Generation 0 is the random initial population; up to ``generations``
    further generations follow. The loop also stops once the fitness
    criterion reaches ``fitness_threshold``, a solution is found, or the
    wall-clock budget (checked between generations) runs out.

    Returns ``(best_genome, history, replay, state)``.
    """
    config = config.with_inputs(observation_size(window))
    rng = random.Random(seed)
    registry = InnovationRegistry()
    keys = KeyCounter()
    state = NEATRunState(config, registry)
    state.population = fresh_population(config, registry, rng, keys)
    history = []
    while True:
        episodes = map_ordered(
            lambda g: play_network(g, level, params, move_budget, stagnation_window, window),
            state.population, threads,
        )
        state.evaluations += len(episodes)
        gen_best = 0
        for i, (g, ep) in enumerate(zip(state.population, episodes)):
            g.fitness = ep.fitness
            if ep.fitness > episodes[gen_best].fitness:
                gen_best = i
        if state.best_ever is None or episodes[gen_best].fitness > state.best_ever.fitness:
            state.best_ever = state.population[gen_best].copy()
            state.best_episode = episodes[gen_best]
            state.time_to_best = time.perf_counter() - state.started
        elif state.generation_index > 0:
            state.stuck_events += 1
        solved = is_solution(episodes[gen_best].summary, constraints)
        history.append(generation_stats(
            state.generation_index, [e.fitness for e in episodes], state.stuck_events,
            solved, time.perf_counter() - state.started,
        ))
        if on_generation:
            on_generation(history[-1])
        if (state.generation_index >= generations
                or is_solution(state.best_episode.summary, constraints)
                or _criterion(config, [e.fitness for e in episodes]) >= config.fitness_threshold):
            break
        if wall_clock_budget is not None and time.perf_counter() - state.started >= wall_clock_budget:
            break
        state.species = speciate(state.population, state.species, config, state.generation_index)
        state.population = reproduce(state.species, config, rng, registry, keys)
        registry.new_generation()
        state.generation_index += 1
    best = state.best_ever
    ep = state.best_episode
    replay = Replay(level.source, ep.actions,
                    replay_header(ep.summary, params.for_max_time(level.max_time)))
    return best, history, replay, state
