"""Stagnation culling and offspring allocation across species."""

from __future__ import annotations

import math
import random
from statistics import fmean

from .config import NEATConfig
from .genome import InnovationRegistry, crossover, init_genome, mutate
from .species import SpeciesSet

_AGGREGATE = {"max": max, "min": min, "mean": fmean}


class CompleteExtinction(RuntimeError):
    pass


class KeyCounter:
    """Hands out fresh genome keys."""

    def __init__(self, start=0):
        self.next = start

    def __call__(self):
        k = self.next
        self.next += 1
        return k


def update_stagnation(species_set: SpeciesSet, config: NEATConfig):
    """Refresh each species' best fitness and return the survivors.

    The ``species_elitism`` species with the highest current fitness are
    always kept, however long they have stagnated.
    """
    agg = _AGGREGATE[config.species_fitness_func]
    current = {}
    for s in species_set.ordered():
        f = agg(s.fitnesses())
        current[s.id] = f
        if s.best_fitness_ever is None or f > s.best_fitness_ever:
            s.best_fitness_ever = f
            s.generations_since_improvement = 0
        else:
            s.generations_since_improvement += 1
    ranked = sorted(current, key=lambda sid: (-current[sid], sid))
    protected = set(ranked[: config.species_elitism])
    return [
        s for s in species_set.ordered()
        if s.id in protected or s.generations_since_improvement <= config.max_stagnation
    ]


def mating_pool_size(n_members: int, survival_threshold: float) -> int:
    # the small epsilon keeps 0.3 * 10 from rounding up to 4
    return max(1, math.ceil(survival_threshold * n_members - 1e-9))


def offspring_quotas(adjusted, pop_size: int) -> list:
    """Split ``pop_size`` across species: one slot each, the rest in
    proportion to ``adjusted`` via largest remainders (ties to the earlier
    species). Species beyond ``pop_size`` in rank get nothing."""
    n = len(adjusted)
    if n == 0:
        return []
    quotas = [0] * n
    if n > pop_size:
        for i in sorted(range(n), key=lambda i: (-adjusted[i], i))[:pop_size]:
            quotas[i] = 1
        return quotas
    quotas = [1] * n
    left = pop_size - n
    total = sum(adjusted)
    weights = adjusted if total > 0 else [1.0] * n
    total = sum(weights)
    shares = [left * w / total for w in weights]
    floors = [int(math.floor(x)) for x in shares]
    for i in range(n):
        quotas[i] += floors[i]
    rest = left - sum(floors)
    for i in sorted(range(n), key=lambda i: (-(shares[i] - floors[i]), i))[:rest]:
        quotas[i] += 1
    return quotas


def adjusted_fitness(species_list) -> list:
    """Mean member fitness per species, shifted and scaled into [0, 1]
    by the population-wide fitness range (range floored at 1)."""
    fits = [f for s in species_list for f in s.fitnesses()]
    lo, hi = min(fits), max(fits)
    span = max(1.0, hi - lo)
    return [(fmean(s.fitnesses()) - lo) / span for s in species_list]


def fresh_population(config, registry, rng, keys):
    return [init_genome(config, rng, registry, keys()) for _ in range(config.pop_size)]


def reproduce(species_set: SpeciesSet, config: NEATConfig, rng: random.Random,
              registry: InnovationRegistry, keys: KeyCounter) -> list:
    """Next population of exactly ``pop_size`` genomes.

    Survivors of stagnation culling receive offspring quotas; each copies
    its top ``elitism`` members and breeds the rest from its mating pool.
    Species left without members are removed from ``species_set``.
    """
    survivors = update_stagnation(species_set, config)
    for sid in [s.id for s in species_set.ordered() if s not in survivors]:
        del species_set.species[sid]
    if not survivors:
        if config.reset_on_extinction:
            return fresh_population(config, registry, rng, keys)
        raise CompleteExtinction("every species stagnated")
    quotas = offspring_quotas(adjusted_fitness(survivors), config.pop_size)
    population = []
    for s, quota in zip(survivors, quotas):
        if quota == 0:
            del species_set.species[s.id]
            continue
        ranked = sorted(s.members, key=lambda m: (-m.fitness, m.key))
        elites = ranked[: min(config.elitism, quota)]
        population.extend(elites)
        pool = ranked[: mating_pool_size(len(ranked), config.survival_threshold)]
        for _ in range(quota - len(elites)):
            p1 = rng.choice(pool)
            if len(pool) == 1:
                child = p1.copy(keys())
            else:
                p2 = rng.choice(pool)
                child = crossover(p1, p2, rng, keys())
            child = mutate(child, config, registry, rng)
            child.fitness = None
            population.append(child)
    return population
