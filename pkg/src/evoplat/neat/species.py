"""Speciation by compatibility distance."""

from __future__ import annotations

from dataclasses import dataclass, field

from .config import NEATConfig
from .genome import Genome, compatibility_distance


@dataclass
class Species:
    id: int
    representative: Genome
    members: list = field(default_factory=list)
    best_fitness_ever: float | None = None
    generations_since_improvement: int = 0
    created: int = 0

    def fitnesses(self):
        return [m.fitness for m in self.members]


@dataclass
class SpeciesSet:
    species: dict = field(default_factory=dict)
    next_id: int = 1

    def __len__(self):
        return len(self.species)

    def ordered(self):
        return [self.species[k] for k in sorted(self.species)]

    def species_of(self, genome_key):
        for s in self.ordered():
            if any(m.key == genome_key for m in s.members):
                return s.id
        raise KeyError(genome_key)


def speciate(population, previous: SpeciesSet | None, config: NEATConfig,
             generation: int = 0) -> SpeciesSet:
    """Assign each genome to the first species whose representative is
    strictly closer than ``compatibility_threshold``, founding new species as needed.

    Representatives for the next call are each species' member closest to
    its current representative.
    """
    out = SpeciesSet(next_id=previous.next_id if previous else 1)
    for old in (previous.ordered() if previous else []):
        out.species[old.id] = Species(
            old.id, old.representative, [], old.best_fitness_ever,
            old.generations_since_improvement, old.created,
        )
    threshold = config.compatibility_threshold
    for g in population:
        for s in out.ordered():
            if compatibility_distance(s.representative, g, config) < threshold:
                s.members.append(g)
                break
        else:
            sid = out.next_id
            out.next_id += 1
            out.species[sid] = Species(sid, g, [g], created=generation)
    for sid in [k for k, s in out.species.items() if not s.members]:
        del out.species[sid]
    for s in out.species.values():
        rep = s.representative
        s.representative = min(
            s.members, key=lambda m: (compatibility_distance(rep, m, config), m.key)
        )
    return out
