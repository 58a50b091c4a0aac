"""Per-generation records shared by both engines and the harness."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class GenerationStats:
    generation: int
    best_fitness: float
    mean_fitness: float
    worst_fitness: float
    stuck_events_cumulative: int
    solved: bool
    elapsed_wall: float

    def __post_init__(self):
        if not self.worst_fitness <= self.mean_fitness <= self.best_fitness:
            raise ValueError("expected worst <= mean <= best")


def generation_stats(generation, fitnesses, stuck, solved, elapsed):
    vals = [float(f) for f in fitnesses]
    mean = sum(vals) / len(vals)
    # guard the ordering invariant against float rounding in the mean
    lo, hi = min(vals), max(vals)
    mean = min(max(mean, lo), hi)
    return GenerationStats(generation, hi, mean, lo, stuck, solved, elapsed)
