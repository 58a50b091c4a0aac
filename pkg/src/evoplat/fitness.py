"""Shared fitness function and constraint checks used by both engines."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field


class TruncationReason(str, enum.Enum):
    FLAG = "Flag"
    DEATH = "Death"
    BUDGET = "Budget"
    STAGNATION = "Stagnation"


# stable integer codes shared with the compiled kernels
REASON_CODES = (
    TruncationReason.FLAG,
    TruncationReason.DEATH,
    TruncationReason.BUDGET,
    TruncationReason.STAGNATION,
)


@dataclass(frozen=True)
class FitnessParams:
    """Trade-off constants of the fitness function.

    Attributes
    ----------
    coin_reward : float
        Reward per collected coin.
    distance_reward : float
        Reward per sub-tile unit of horizontal progress.
    time_penalty : float
        Penalty per elapsed tick.
    max_time : int
        Time allowance of the level, in ticks.
    """

    coin_reward: float = 10.0
    distance_reward: float = 0.1
    time_penalty: float = 0.8
    max_time: int = 400

    def __post_init__(self):
        if self.coin_reward < 0 or self.distance_reward < 0 or self.time_penalty < 0:
            raise ValueError("fitness coefficients must be non-negative")
        if self.max_time < 1:
            raise ValueError("max_time must be >= 1")

    def for_max_time(self, max_time: int) -> "FitnessParams":
        return FitnessParams(self.coin_reward, self.distance_reward, self.time_penalty, max_time)


@dataclass(frozen=True)
class EpisodeSummary:
    """Measured totals of one episode.

    ``distance`` is ``max_x_reached - start_x`` in sub-tile units and
    ``time_left``/``elapsed`` refer to the final life only. ``life_elapsed``
    keeps the elapsed ticks of every life played, for reporting.
    """

    collected_coins: int
    distance: int
    time_left: int
    elapsed: int
    flag_get: bool
    deaths: int
    moves_used: int
    truncation_reason: TruncationReason
    life_elapsed: tuple = field(default=())

    def __post_init__(self):
        if self.time_left < 0 or self.distance < 0 or self.elapsed < 0:
            raise ValueError("summary quantities must be non-negative")
        if self.deaths > 3:
            raise ValueError("at most 3 deaths per episode")


@dataclass(frozen=True)
class ConstraintSpec:
    """Feasibility bounds; ``max_time=None`` means the level's own allowance."""

    max_moves: int = 5000
    max_deaths: int = 2
    max_time: int | None = None
    min_coins: int = 0

    def __post_init__(self):
        for name in ("max_moves", "max_deaths", "min_coins"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.max_time is not None and self.max_time < 0:
            raise ValueError("max_time must be >= 0")


def fitness_value(coins, distance, elapsed, coin_reward, distance_reward, time_penalty):
    # operation order is mirrored by the compiled kernel; keep them in sync
    return coin_reward * coins + distance_reward * distance - time_penalty * elapsed


def compute_fitness(summary: EpisodeSummary, params: FitnessParams) -> float:
    """``CR*CC + DR*D - TP*(MT - TL)`` for one episode."""
    return fitness_value(
        summary.collected_coins,
        summary.distance,
        params.max_time - summary.time_left,
        params.coin_reward,
        params.distance_reward,
        params.time_penalty,
    )


def constraint_violation(summary: EpisodeSummary, spec: ConstraintSpec) -> float:
    """Sum of positive excesses over every bound; zero on the feasible set."""
    g = max(0, summary.moves_used - spec.max_moves)
    g += max(0, summary.deaths - spec.max_deaths)
    if spec.max_time is not None:
        g += max(0, summary.elapsed - spec.max_time)
    g += max(0, spec.min_coins - summary.collected_coins)
    return float(g)


def is_solution(summary: EpisodeSummary, spec: ConstraintSpec) -> bool:
    return summary.flag_get and constraint_violation(summary, spec) == 0
