from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evoplat.env import Replay, run_episode
from evoplat.fitness import ConstraintSpec, FitnessParams, TruncationReason, compute_fitness
from evoplat.ga import (
    AgentGenome,
    GAConfig,
    LengthError,
    LengthMismatch,
    RunState,
    best_index,
    create_population,
    custom_starting_agent,
    evaluate,
    evaluate_population,
    mutate_moves,
    one_point_crossover,
    play_generation,
    run_ga,
    tournament_select,
)

from conftest import flat_level

P = FitnessParams()


def genome(seq):
    return AgentGenome(np.asarray(seq, dtype=np.int8))


def test_config_validation():
    with pytest.raises(ValueError):
        GAConfig(elitism_count=20)
    with pytest.raises(ValueError):
        GAConfig(moves_mutable=0)
    with pytest.raises(ValueError):
        GAConfig(tournament_size=21)
    with pytest.raises(ValueError):
        GAConfig(crossover_point_fraction=1.0)
    with pytest.raises(ValueError):
        GAConfig(actions=(0, 9))


def test_create_population_shapes():
    pop = create_population(GAConfig(), np.random.default_rng(0))
    assert len(pop) == 20 and all(len(g) == 5000 for g in pop)
    assert all(g.fitness is None for g in pop)
    pop = create_population(GAConfig(moves_amount=1), np.random.default_rng(0))
    assert all(len(g) == 1 for g in pop)


def test_create_population_deterministic():
    a = create_population(GAConfig(moves_amount=50), np.random.default_rng(5))
    b = create_population(GAConfig(moves_amount=50), np.random.default_rng(5))
    assert all(np.array_equal(x.moves, y.moves) for x, y in zip(a, b))


def test_evaluate_noop_stagnates(w1l1):
    cfg = GAConfig(moves_amount=200)
    fit, summary = evaluate(genome([0] * 200), w1l1, P, cfg)
    assert summary.truncation_reason == TruncationReason.STAGNATION
    assert summary.moves_used == 30


def test_evaluate_completion_prefix(w1l1):
    cfg = GAConfig(moves_amount=300)
    seq = [4] * 40 + [0] * 260
    ref, _ = run_episode(w1l1, seq, 300, 30, P)
    fit, summary = evaluate(genome(seq), w1l1, P, cfg)
    assert summary.flag_get and summary == ref
    assert fit == compute_fitness(ref, P.for_max_time(w1l1.max_time))
    assert evaluate(genome(seq), w1l1, P, cfg)[0] == fit


def test_evaluate_length_check(w1l1):
    with pytest.raises(LengthMismatch):
        evaluate(genome([1] * 5), w1l1, P, GAConfig(moves_amount=6))


def _pop(fits):
    pop = [genome([0]) for _ in fits]
    for g, f in zip(pop, fits):
        g.fitness = f
    return pop


def test_full_tournament_is_argmax():
    rng = np.random.default_rng(0)
    for _ in range(200):
        fits = rng.normal(size=12).tolist()
        pop = _pop(fits)
        assert tournament_select(pop, 12, rng) is pop[int(np.argmax(fits))]


def test_tournament_tie_goes_to_lower_index():
    pop = _pop([1.0, 1.0])
    assert tournament_select(pop, 2, np.random.default_rng(0)) is pop[0]


def test_tournament_size_one_is_uniform():
    pop = _pop(list(range(10)))
    rng = np.random.default_rng(42)
    counts = Counter(id(tournament_select(pop, 1, rng)) for _ in range(10_000))
    for g in pop:
        assert abs(counts[id(g)] / 10_000 - 0.1) < 0.02


def test_crossover_example():
    a, b, c, d, w, x, y, z = range(8)
    c1, c2 = one_point_crossover(genome([a, b, c, d]), genome([w, x, y, z]), 0.5)
    assert c1.moves.tolist() == [a, b, y, z]
    assert c2.moves.tolist() == [w, x, c, d]
    assert c1.fitness is None and c2.fitness is None


def test_crossover_clones_and_clamp():
    p = genome([1, 2, 3, 4, 5, 6, 0, 1, 2, 3])
    c1, c2 = one_point_crossover(p, p.copy(), 0.5)
    assert np.array_equal(c1.moves, p.moves) and np.array_equal(c2.moves, p.moves)
    q = genome([6] * 10)
    c1, _ = one_point_crossover(p, q, 0.0)
    assert c1.moves.tolist() == [1] + [6] * 9
    with pytest.raises(LengthMismatch):
        one_point_crossover(p, genome([1]), 0.5)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 60).flatmap(lambda n: st.tuples(
    st.lists(st.integers(0, 6), min_size=n, max_size=n),
    st.lists(st.integers(0, 6), min_size=n, max_size=n),
    st.floats(0.01, 0.99))))
def test_crossover_conserves_genes(args):
    a, b, frac = args
    c1, c2 = one_point_crossover(genome(a), genome(b), frac)
    assert len(c1) == len(a) == len(c2)
    for i in range(len(a)):
        assert sorted((c1.moves[i], c2.moves[i])) == sorted((a[i], b[i]))


def test_mutation_rate_zero_is_identity():
    g = genome(np.random.default_rng(0).integers(0, 7, 100))
    m, n = mutate_moves(g, 0.0, 0.8, np.random.default_rng(1))
    assert n == 0 and np.array_equal(m.moves, g.moves)


def test_full_resampling_changes_six_sevenths():
    rng = np.random.default_rng(3)
    g = genome(rng.integers(0, 7, 70_000))
    m, n = mutate_moves(g, 1.0, 1.0, rng)
    assert n == 70_000
    assert abs(np.mean(m.moves != g.moves) - 6 / 7) < 0.01


def test_mutation_protects_prefix():
    rng = np.random.default_rng(9)
    g = genome([3] * 10)
    for _ in range(2000):
        m, _ = mutate_moves(g, 1.0, 0.8, rng)
        assert m.moves[0] == 3 and m.moves[1] == 3


def test_mutation_rate_validation():
    with pytest.raises(ValueError):
        mutate_moves(genome([0]), 1.5, 0.8, np.random.default_rng(0))


def _state(level, cfg, rng):
    pop = create_population(cfg, rng)
    evaluate_population(pop, level, P, cfg)
    return RunState(0, pop, pop[best_index(pop)].copy(), current_mutation_rate=cfg.base_mutation_rate)


def test_generation_bookkeeping(w1l1, monkeypatch):
    import evoplat.ga as ga

    cfg = GAConfig(moves_amount=100, generation_amount=5)
    rng = np.random.default_rng(0)
    state = _state(w1l1, cfg, rng)
    made = []
    real = ga.mutate_moves

    def counting(*a, **k):
        out = real(*a, **k)
        made.append(out[0])
        return out

    monkeypatch.setattr(ga, "mutate_moves", counting)
    play_generation(state, w1l1, P, cfg, rng)
    # 20 slots: 1 elite, then 10 pairs make 20 children of which 19 are kept
    assert len(made) == 20
    assert len(state.current_population) == 20
    assert state.current_population[1] is made[0]
    assert all(made[-1] is not g for g in state.current_population)


def test_rate_adaptation(w1l1):
    cfg = GAConfig(moves_amount=100, base_mutation_rate=0.05, mutation_step=0.005)
    rng = np.random.default_rng(1)
    state = _state(w1l1, cfg, rng)
    for _ in range(30):
        before_best = state.best_ever.fitness
        before_rate = state.current_mutation_rate
        before_stuck = state.stuck_events
        play_generation(state, w1l1, P, cfg, rng)
        if state.best_ever.fitness > before_best:
            assert state.current_mutation_rate == pytest.approx(
                max(before_rate - cfg.mutation_step, cfg.mutation_step))
            assert state.stagnant_generations == 0
        else:
            assert state.current_mutation_rate == pytest.approx(
                min(before_rate + cfg.mutation_step, cfg.mutation_rate_max))
            assert state.stuck_events == before_stuck + 1
        assert cfg.mutation_step <= state.current_mutation_rate <= cfg.mutation_rate_max


def test_zero_generations(w1l1):
    cfg = GAConfig(moves_amount=50, generation_amount=0)
    best, history, replay, state = run_ga(w1l1, P, cfg, ConstraintSpec())
    assert len(history) == 1 and state.generation_index == 0
    assert best.fitness == history[0].best_fitness


def test_toy_level_solved_quickly():
    lvl = flat_level(width=26, flag_col=21)
    cfg = GAConfig(moves_amount=200, generation_amount=100, rng_seed=1)
    best, history, replay, state = run_ga(lvl, P, cfg, ConstraintSpec(max_moves=200))
    assert best.summary.flag_get
    assert len(history) - 1 < 100


def test_run_is_reproducible(w1l2):
    cfg = GAConfig(moves_amount=200, generation_amount=15, rng_seed=4)
    spec = ConstraintSpec(min_coins=99)
    a = run_ga(w1l2, P, cfg, spec)
    b = run_ga(w1l2, P, cfg, spec, threads=3)
    assert np.array_equal(a[0].moves, b[0].moves)
    assert [(h.best_fitness, h.mean_fitness, h.worst_fitness) for h in a[1]] == [
        (h.best_fitness, h.mean_fitness, h.worst_fitness) for h in b[1]]
    assert a[2] == b[2]


def test_best_replay_reproduces_fitness(w1l2):
    cfg = GAConfig(moves_amount=200, generation_amount=10, rng_seed=2)
    best, _, replay, _ = run_ga(w1l2, P, cfg, ConstraintSpec())
    summary, _ = run_episode(w1l2, list(replay.actions), len(replay.actions), 10**6, P)
    assert compute_fitness(summary, P.for_max_time(w1l2.max_time)) == best.fitness
    assert float(replay.header["fitness"]) == best.fitness


def test_wall_clock_budget_stops_between_generations(w1l1):
    cfg = GAConfig(moves_amount=50, generation_amount=1000)
    _, history, _, state = run_ga(w1l1, P, cfg, ConstraintSpec(min_coins=99),
                                  wall_clock_budget=0.0)
    assert len(history) == 1 and state.generation_index == 0


def test_custom_starting_agent():
    cfg = GAConfig(moves_amount=20)
    g = custom_starting_agent(Replay("x", ()), cfg, np.random.default_rng(0))
    assert len(g) == 20
    full = tuple(np.random.default_rng(1).integers(0, 7, 20).tolist())
    assert custom_starting_agent(Replay("x", full), cfg).moves.tolist() == list(full)
    for seed in range(20):
        g = custom_starting_agent(Replay("x", (1, 2, 3)), cfg, np.random.default_rng(seed))
        assert g.moves[:3].tolist() == [1, 2, 3]
    with pytest.raises(LengthError):
        custom_starting_agent(Replay("x", (0,) * 21), cfg)


def test_start_agent_is_seeded_into_population(w1l1):
    cfg = GAConfig(moves_amount=120, generation_amount=0)
    start = custom_starting_agent(Replay("x", (4,) * 40), cfg)
    best, _, _, _ = run_ga(w1l1, P, cfg, ConstraintSpec(), start_agent=start)
    assert best.summary.flag_get
