import itertools

import pytest

from evoplat.env import Replay
from evoplat.fitness import ConstraintSpec
from evoplat.ga import GAConfig
from evoplat.harness import (
    ExperimentConfig,
    GameplayStats,
    NERunParams,
    ReplayMismatch,
    aggregate,
    emit_outputs,
    gameplay_stats,
    measure_scaling,
    run_experiment,
    success_rate,
)
from evoplat.levels import bundled_level_path
from evoplat.neat import NEATConfig
from evoplat.stats import GenerationStats


def stats(g, best, mean=None, worst=None):
    mean = best if mean is None else mean
    worst = mean if worst is None else worst
    return GenerationStats(g, best, mean, worst, 0, False, 0.0)


class Rec:
    def __init__(self, history, solved=False):
        self.history = history
        self.solved = solved


def ga_config(tmp_path, seeds=(0, 1), **kw):
    return ExperimentConfig(
        algorithm="GA", level_path=bundled_level_path("w1l1"), seeds=seeds,
        output_dir=str(tmp_path),
        ga=GAConfig(moves_amount=150, generation_amount=8, **kw),
        constraints=ConstraintSpec(max_moves=150, min_coins=3),
    )


def test_config_validation(tmp_path):
    with pytest.raises(ValueError):
        ExperimentConfig("XX", "lvl")
    with pytest.raises(ValueError):
        ExperimentConfig("GA", "lvl", seeds=(1, 1))
    with pytest.raises(ValueError):
        ExperimentConfig("GA", "lvl", seeds=())
    with pytest.raises(ValueError):
        NERunParams(window=(0, 8))


def test_generation_stats_ordering():
    with pytest.raises(ValueError):
        GenerationStats(0, 1.0, 2.0, 0.0, 0, False, 0.0)


def test_aggregate_identity_and_means():
    h = [stats(0, 1.0, 0.5, 0.0), stats(1, 2.0, 1.0, 0.5)]
    assert aggregate([Rec(h)]) == [(0, 1.0, 0.5, 0.0), (1, 2.0, 1.0, 0.5)]
    a = Rec([stats(0, 1.0), stats(1, 2.0)])
    b = Rec([stats(0, 3.0), stats(1, 4.0)])
    assert [r[1] for r in aggregate([a, b])] == [2.0, 3.0]


def test_aggregate_truncates_to_shortest():
    a = Rec([stats(g, float(g)) for g in range(10)])
    b = Rec([stats(g, float(g)) for g in range(7)])
    assert len(aggregate([a, b])) == 7


def test_aggregate_permutation_invariant():
    recs = [Rec([stats(g, float(g * k + 1)) for g in range(5)]) for k in range(4)]
    ref = aggregate(recs)
    for perm in itertools.permutations(recs):
        assert aggregate(list(perm)) == ref


def test_success_rate():
    assert success_rate([Rec([], True)] * 3) == 1.0
    assert success_rate([Rec([], False)] * 3) == 0.0
    assert success_rate([Rec([], s) for s in (1, 1, 1, 0, 0)]) == 0.6


def test_single_repeat(tmp_path):
    recs = run_experiment(ga_config(tmp_path, seeds=(5,)))
    assert len(recs) == 1
    assert aggregate(recs) == [(s.generation, s.best_fitness, s.mean_fitness, s.worst_fitness)
                               for s in recs[0].history]


def test_gameplay_stats_match_record(tmp_path):
    for rec in run_experiment(ga_config(tmp_path, seeds=(0, 1, 2))):
        st = gameplay_stats(rec)
        assert st.coins == rec.summary.collected_coins
        assert st.moves_used == rec.summary.moves_used
        assert st.jumps + st.right_moves + st.left_moves <= st.moves_used


def test_noop_replay_counts(tmp_path):
    rec = run_experiment(ga_config(tmp_path, seeds=(0,)))[0]
    rec.replay = Replay(rec.replay.level, (0,) * 30)
    rec.summary, rec.fitness = _noop_summary(rec)
    st = gameplay_stats(rec)
    assert (st.jumps, st.right_moves, st.left_moves) == (0, 0, 0)


def _noop_summary(rec):
    from evoplat.env import run_episode
    from evoplat.fitness import compute_fitness
    s, _ = run_episode(rec.level, [0] * 30, 30, 30, rec.params)
    return s, compute_fitness(s, rec.params)


def test_divergent_replay_detected(tmp_path):
    rec = run_experiment(ga_config(tmp_path, seeds=(0,)))[0]
    rec.replay = Replay(rec.replay.level, (6,) * len(rec.replay.actions))
    with pytest.raises(ReplayMismatch):
        gameplay_stats(rec)


def test_gameplay_stats_invariant():
    with pytest.raises(ValueError):
        GameplayStats(0, 0, 0, 0, 2, 2, 2, 5, 0, 0.0)


def test_ne_records(tmp_path):
    cfg = ExperimentConfig(
        algorithm="NE", level_path=bundled_level_path("w1l2"), seeds=(3,),
        output_dir=str(tmp_path), neat=NEATConfig(pop_size=12),
        ne_run=NERunParams(generations=3, move_budget=200),
        constraints=ConstraintSpec(min_coins=99),
    )
    (rec,) = run_experiment(cfg)
    assert rec.generations == 3 and len(rec.history) == 4
    assert gameplay_stats(rec).moves_used == len(rec.replay.actions)


def test_emit_inventory_and_determinism(tmp_path):
    cfg = ga_config(tmp_path / "a", seeds=(0, 1, 2, 3, 4))
    recs = run_experiment(cfg)
    files = emit_outputs(recs, tmp_path / "a")
    names = sorted(p.name for p in files)
    assert names == sorted(
        [f"run_{s}.csv" for s in range(5)] + [f"best_{s}.replay" for s in range(5)]
        + ["summary.csv", "stats.csv", "fitness.svg"])
    for s, rec in zip(range(5), recs):
        lines = (tmp_path / "a" / f"run_{s}.csv").read_text().splitlines()
        assert len(lines) == len(rec.history) + 1
    first = {p.name: p.read_bytes() for p in files}
    again = emit_outputs(run_experiment(cfg), tmp_path / "a")
    assert {p.name: p.read_bytes() for p in again} == first


def test_emitted_rows_are_ordered(tmp_path):
    recs = run_experiment(ga_config(tmp_path, seeds=(0, 1)))
    emit_outputs(recs, tmp_path)
    import csv
    with open(tmp_path / "run_0.csv") as fh:
        for row in csv.DictReader(fh):
            assert float(row["worst"]) <= float(row["mean"]) <= float(row["best"])
            assert row["elapsed_wall"] == ""
    svg = (tmp_path / "fitness.svg").read_text()
    assert svg.count("<polyline") == 3 and "generation" in svg and "fitness" in svg


def test_timings_fill_elapsed(tmp_path):
    recs = run_experiment(ga_config(tmp_path, seeds=(0,)))
    emit_outputs(recs, tmp_path, timings=True)
    line = (tmp_path / "run_0.csv").read_text().splitlines()[1]
    assert line.split(",")[-1] != ""


def test_measure_scaling_smoke():
    res = measure_scaling("GA", [4, 6, 8], [20, 30, 40], generations=1, repeats=1)
    assert len(res.rows) == 6 and all(t > 0 for _, _, t in res.rows)
    assert set(res.slopes) == {"population", "moves"}
    with pytest.raises(ValueError):
        measure_scaling("GA", [4, 8], [20, 30, 40])
