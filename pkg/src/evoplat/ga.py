"""Genetic algorithm over fixed-length action sequences.

Each agent is a list of ``moves_amount`` actions played one per tick from
the level start. The loop keeps the elite unchanged, fills the rest of the
population with tournament-selected, one-point-crossed and tail-mutated
children, and adapts the mutation rate to fitness progress.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .env import LevelSpec, Replay, replay_header, summary_from_kernel
from .fitness import ConstraintSpec, EpisodeSummary, FitnessParams, compute_fitness, is_solution
from .parallel import map_ordered
from .stats import generation_stats

log = logging.getLogger(__name__)

ALL_ACTIONS = tuple(range(7))


class LengthMismatch(ValueError):
    pass


class LengthError(ValueError):
    pass


@dataclass(frozen=True)
class GAConfig:
    population_size: int = 20
    generation_amount: int = 1000
    moves_amount: int = 5000
    moves_to_check: int = 30
    moves_mutable: float = 0.8
    base_mutation_rate: float = 0.01
    mutation_step: float = 0.005
    mutation_rate_max: float = 0.8
    elitism_count: int = 1
    offspring_per_pair: int = 2
    tournament_size: int = 3
    crossover_point_fraction: float = 0.5
    rng_seed: int = 0
    actions: tuple = ALL_ACTIONS

    def __post_init__(self):
        if not 1 <= self.elitism_count < self.population_size:
            raise ValueError("need 1 <= elitism_count < population_size")
        if not 0 < self.moves_mutable <= 1:
            raise ValueError("moves_mutable must be in (0, 1]")
        if not 1 <= self.tournament_size <= self.population_size:
            raise ValueError("need 1 <= tournament_size <= population_size")
        if not 0 < self.crossover_point_fraction < 1:
            raise ValueError("crossover_point_fraction must be in (0, 1)")
        if self.moves_amount < 1 or self.moves_to_check < 1 or self.generation_amount < 0:
            raise ValueError("moves_amount, moves_to_check must be >= 1, generation_amount >= 0")
        if self.offspring_per_pair not in (1, 2):
            raise ValueError("offspring_per_pair must be 1 or 2")
        if not 0 < self.mutation_step <= self.mutation_rate_max <= 1:
            raise ValueError("need 0 < mutation_step <= mutation_rate_max <= 1")
        if not self.actions or any(a not in ALL_ACTIONS for a in self.actions):
            raise ValueError("actions must be a non-empty subset of 0..6")


@dataclass
class AgentGenome:
    moves: np.ndarray
    fitness: float | None = None
    moves_used: int = 0
    summary: EpisodeSummary | None = None
    mutations: int = 0  # resampled moves along this genome's lineage

    def copy(self):
        return AgentGenome(self.moves.copy(), self.fitness, self.moves_used, self.summary,
                           self.mutations)

    def __len__(self):
        return len(self.moves)


@dataclass
class RunState:
    generation_index: int
    current_population: list
    best_ever: AgentGenome
    stagnant_generations: int = 0
    current_mutation_rate: float = 0.01
    stuck_events: int = 0
    mutations_performed: int = 0
    time_to_best: float = 0.0
    started: float = field(default_factory=time.perf_counter)

    @property
    def mutations_at_best(self) -> int:
        return self.best_ever.mutations


def _random_moves(n, actions, rng):
    return np.asarray(actions, dtype=np.int8)[rng.integers(0, len(actions), n)]


def create_population(config: GAConfig, rng: np.random.Generator) -> list:
    return [
        AgentGenome(_random_moves(config.moves_amount, config.actions, rng))
        for _ in range(config.population_size)
    ]


def evaluate(genome: AgentGenome, level: LevelSpec, params: FitnessParams, config: GAConfig):
    """Play the genome index by index; sets and returns ``(fitness, summary)``."""
    if len(genome.moves) != config.moves_amount:
        raise LengthMismatch(f"genome has {len(genome.moves)} moves, expected {config.moves_amount}")
    params = params.for_max_time(level.max_time)
    res = kernels.run_actions(
        *level.kernel_args(), genome.moves, config.moves_amount, config.moves_to_check,
        params.coin_reward, params.distance_reward, params.time_penalty,
    )
    summary = summary_from_kernel(res, level.max_time)
    genome.summary = summary
    genome.moves_used = summary.moves_used
    genome.fitness = compute_fitness(summary, params)
    return genome.fitness, summary


def evaluate_population(population, level, params, config, threads=None):
    map_ordered(lambda g: evaluate(g, level, params, config), population, threads)
    return population


def best_index(population) -> int:
    """Index of the fittest genome; ties go to the lowest index."""
    best = 0
    for i, g in enumerate(population):
        if g.fitness > population[best].fitness:
            best = i
    return best


def tournament_select(population, T: int, rng: np.random.Generator) -> AgentGenome:
    if not 1 <= T <= len(population):
        raise ValueError("tournament size out of range")
    picks = sorted(rng.choice(len(population), size=T, replace=False).tolist())
    winner = picks[0]
    for i in picks[1:]:
        if population[i].fitness > population[winner].fitness:
            winner = i
    return population[winner]


def one_point_crossover(parent1: AgentGenome, parent2: AgentGenome, fraction: float):
    n = len(parent1.moves)
    if len(parent2.moves) != n:
        raise LengthMismatch("parents differ in length")
    if n < 2:
        return AgentGenome(parent1.moves.copy()), AgentGenome(parent2.moves.copy())
    cut = min(max(int(fraction * n), 1), n - 1)
    child1 = np.concatenate((parent1.moves[:cut], parent2.moves[cut:]))
    child2 = np.concatenate((parent2.moves[:cut], parent1.moves[cut:]))
    return AgentGenome(child1), AgentGenome(child2)


def mutate_moves(genome: AgentGenome, rate: float, moves_mutable: float,
                 rng: np.random.Generator, actions=ALL_ACTIONS):
    """Resample each move from ``floor(L*(1-moves_mutable))`` on with
    probability ``rate``. Returns ``(new_genome, resampled_count)``."""
    if not 0 <= rate <= 1:
        raise ValueError("rate must be in [0, 1]")
    moves = genome.moves.copy()
    # rounding first keeps e.g. 10 * (1 - 0.8) from flooring to 1
    start = math.floor(round(len(moves) * (1 - moves_mutable), 9))
    tail = len(moves) - start
    hit = rng.random(tail) < rate
    count = int(hit.sum())
    if count:
        moves[start:][hit] = _random_moves(count, actions, rng)
    return AgentGenome(moves), count


def _solved(genome, constraints):
    return genome.summary is not None and is_solution(genome.summary, constraints)


def _record(state, constraints):
    fits = [g.fitness for g in state.current_population]
    best = state.current_population[best_index(state.current_population)]
    return generation_stats(
        state.generation_index, fits, state.stuck_events, _solved(best, constraints),
        time.perf_counter() - state.started,
    )


def play_generation(state: RunState, level, params, config: GAConfig, rng, threads=None) -> RunState:
    """Breed, evaluate and adapt: one generation of the GA."""
    pop = state.current_population
    order = sorted(range(len(pop)), key=lambda i: (-pop[i].fitness, i))
    nxt = [AgentGenome(pop[i].moves.copy(), mutations=pop[i].mutations)
           for i in order[: config.elitism_count]]
    mutations = 0
    while len(nxt) < config.population_size:
        p1 = tournament_select(pop, config.tournament_size, rng)
        p2 = tournament_select(pop, config.tournament_size, rng)
        children = one_point_crossover(p1, p2, config.crossover_point_fraction)
        lineage = max(p1.mutations, p2.mutations)
        for child in children[: config.offspring_per_pair]:
            child, n = mutate_moves(
                child, state.current_mutation_rate, config.moves_mutable, rng, config.actions
            )
            child.mutations = lineage + n
            mutations += n
            nxt.append(child)
    del nxt[config.population_size:]
    evaluate_population(nxt, level, params, config, threads)

    state.generation_index += 1
    state.current_population = nxt
    state.mutations_performed += mutations
    gen_best = nxt[best_index(nxt)]
    if gen_best.fitness > state.best_ever.fitness:
        state.best_ever = gen_best.copy()
        state.stagnant_generations = 0
        state.current_mutation_rate = max(
            state.current_mutation_rate - config.mutation_step, config.mutation_step
        )
        state.time_to_best = time.perf_counter() - state.started
    else:
        state.stuck_events += 1
        state.stagnant_generations += 1
        state.current_mutation_rate = min(
            state.current_mutation_rate + config.mutation_step, config.mutation_rate_max
        )
    return state


def custom_starting_agent(replay: Replay, config: GAConfig, rng=None) -> AgentGenome:
    """Genome whose prefix is a recorded trace, padded with random moves."""
    k = len(replay.actions)
    if k > config.moves_amount:
        raise LengthError(f"replay has {k} actions, moves_amount is {config.moves_amount}")
    rng = rng if rng is not None else np.random.default_rng(config.rng_seed)
    tail = _random_moves(config.moves_amount - k, config.actions, rng)
    return AgentGenome(np.concatenate((np.asarray(replay.actions, dtype=np.int8), tail)))


def best_replay(genome: AgentGenome, level: LevelSpec, params: FitnessParams) -> Replay:
    actions = tuple(int(a) for a in genome.moves[: genome.moves_used])
    return Replay(level.source, actions, replay_header(genome.summary, params.for_max_time(level.max_time)))


def run_ga(level: LevelSpec, params: FitnessParams, config: GAConfig,
           constraints: ConstraintSpec, *, wall_clock_budget=None, start_agent=None,
           threads=None, on_generation=None):
    """Evolve until ``generation_amount`` generations, a solution, or the
    wall-clock budget (checked between generations).

    Returns ``(best_genome, history, replay, state)``; ``history[0]``
    describes the evaluated initial population.
    """
    rng = np.random.default_rng(config.rng_seed)
    pop = create_population(config, rng)
    if start_agent is not None:
        pop[0] = start_agent
    evaluate_population(pop, level, params, config, threads)
    state = RunState(
        generation_index=0,
        current_population=pop,
        best_ever=pop[best_index(pop)].copy(),
        current_mutation_rate=min(max(config.base_mutation_rate, config.mutation_step),
                                  config.mutation_rate_max),
    )
    state.time_to_best = time.perf_counter() - state.started
    history = [_record(state, constraints)]
    if on_generation:
        on_generation(history[-1])
    while state.generation_index < config.generation_amount:
        if _solved(state.best_ever, constraints):
            break
        if wall_clock_budget is not None and time.perf_counter() - state.started >= wall_clock_budget:
            break
        play_generation(state, level, params, config, rng, threads)
        history.append(_record(state, constraints))
        if on_generation:
            on_generation(history[-1])
    best = state.best_ever
    return best, history, best_replay(best, level, params), state
