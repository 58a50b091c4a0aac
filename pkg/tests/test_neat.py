import math
import random
import warnings

import pytest

from evoplat.fitness import ConstraintSpec, FitnessParams
from evoplat.levels import bundled_level
from evoplat.neat import (
    ConfigError,
    ConnectionGene,
    Genome,
    InnovationRegistry,
    NEATConfig,
    NodeGene,
    RecurrentNetwork,
    activate,
    compatibility_distance,
    crossover,
    dumps_neat_config,
    init_genome,
    load_neat_config,
    loads_neat_config,
    mutate,
    reproduce,
    run_neat,
    speciate,
)
from evoplat.neat.network import DimensionMismatch
from evoplat.neat.reproduction import KeyCounter, mating_pool_size, offspring_quotas
from evoplat.neat.species import Species, SpeciesSet

from conftest import flat_level

ZERO = dict(
    conn_add_prob=0.0, conn_delete_prob=0.0, node_add_prob=0.0, node_delete_prob=0.0,
    weight_mutate_rate=0.0, weight_replace_rate=0.0, bias_mutate_rate=0.0,
    bias_replace_rate=0.0, response_mutate_rate=0.0, response_replace_rate=0.0,
    enabled_mutate_rate=0.0, activation_mutate_rate=0.0, aggregation_mutate_rate=0.0,
)


def small(**kw):
    base = dict(num_inputs=2, num_outputs=1, pop_size=10)
    base.update(kw)
    return NEATConfig(**base)


def bare(n_in=1, n_out=1, key=0):
    g = Genome(key)
    for i in range(1, n_in + 1):
        g.nodes[-i] = NodeGene(-i, "input", "identity", "none")
    for o in range(n_out):
        g.nodes[o] = NodeGene(o, "output", "sigmoid", "sum", 0.0, 1.0)
    return g


def link(g, a, b, w, reg, enabled=True):
    g.connections[(a, b)] = ConnectionGene(a, b, w, enabled, reg.innovation(a, b))


# --- config ---------------------------------------------------------------

def test_defaults_match_bundled_file():
    from importlib import resources
    ref = resources.files("evoplat") / "data" / "configs" / "neat_default.ini"
    with resources.as_file(ref) as path:
        assert load_neat_config(path) == NEATConfig()


def test_config_roundtrip():
    cfg = NEATConfig(pop_size=33, compatibility_threshold=1.25, activation_options=("gauss",),
                     activation_default="gauss")
    assert loads_neat_config(dumps_neat_config(cfg)) == cfg


def test_unknown_key_is_error():
    text = dumps_neat_config(NEATConfig()).replace("pop_size", "poulation")
    with pytest.raises(ConfigError, match="poulation"):
        loads_neat_config(text)


def test_missing_section_is_error():
    with pytest.raises(ConfigError):
        loads_neat_config("[NEAT]\npop_size = 5\n")


@pytest.mark.parametrize("kw", [
    dict(conn_add_prob=1.5), dict(pop_size=1), dict(activation_options=("relu",)),
    dict(feed_forward=True), dict(initial_connection="partial 2"),
])
def test_invalid_configs(kw):
    with pytest.raises(ConfigError):
        NEATConfig(**kw)


def test_num_inputs_rebinding_warns():
    with pytest.warns(UserWarning):
        assert NEATConfig().with_inputs(68).num_inputs == 68
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        NEATConfig(num_inputs=68).with_inputs(68)


# --- genomes ----------------------------------------------------------------

def test_init_genome_structure():
    reg = InnovationRegistry()
    for seed in range(50):
        g = init_genome(small(), random.Random(seed), reg)
        assert len(g.nodes) == 3
        assert 0 <= len(g.connections) <= 2
        assert not g.hidden_ids
    cfg = NEATConfig()
    g = init_genome(cfg, random.Random(0), InnovationRegistry())
    assert len(g.input_ids) == 960 and len(g.output_ids) == 7 and not g.hidden_ids
    frac = len(g.connections) / (960 * 7)
    assert abs(frac - 0.5) < 0.03


def test_init_genome_deterministic():
    a = init_genome(NEATConfig(num_inputs=68), random.Random(3), InnovationRegistry())
    b = init_genome(NEATConfig(num_inputs=68), random.Random(3), InnovationRegistry())
    assert a.structure() == b.structure()


def test_constant_network():
    g = bare(2, 7)
    net = RecurrentNetwork.create(g)
    assert net.activate([1.0, -1.0]) == [0.5] * 7
    assert net.decide([1.0, -1.0]) == 0


@pytest.mark.parametrize("w, x", [(0.7, 1.0), (-2.0, 0.3), (1.5, -4.0)])
def test_single_connection_output(w, x):
    reg = InnovationRegistry()
    g = bare()
    link(g, -1, 0, w, reg)
    net = RecurrentNetwork.create(g)
    net.activate([x])  # output reads the input from the previous step
    out = net.activate([x])[0]
    assert out == pytest.approx(1.0 / (1.0 + math.exp(-w * x)))


def test_self_loop_carries_state():
    reg = InnovationRegistry()
    g = bare()
    g.nodes[0].bias = 1.0
    link(g, 0, 0, 2.0, reg)
    net = RecurrentNetwork.create(g)
    first = net.activate([0.0])
    second = net.activate([0.0])
    assert first != second
    net.reset()
    assert net.activate([0.0]) == first


def test_activate_dimension_check():
    with pytest.raises(DimensionMismatch):
        activate(bare(2, 7), [0.0])


def test_distance_examples():
    cfg = NEATConfig()
    reg = InnovationRegistry()
    g1 = bare(2, 1)
    link(g1, -1, 0, 0.5, reg)
    assert compatibility_distance(g1, g1, cfg) == 0
    g2 = g1.copy()
    link(g2, -2, 0, 0.5, reg)
    n = g2.gene_count()
    assert compatibility_distance(g1, g2, cfg) == pytest.approx(1.0 / n)
    g3 = g1.copy()
    g3.connections[(-1, 0)].weight = 2.5
    # one matching connection (|dw| = 2) and one matching node (|db| = 0)
    assert compatibility_distance(g1, g3, cfg) == pytest.approx(0.5 * (2.0 + 0.0) / 2)


def test_distance_weight_term_single_gene():
    cfg = NEATConfig()
    a, b = Genome(0), Genome(1)
    reg = InnovationRegistry()
    a.nodes[-1] = b.nodes[-1] = NodeGene(-1, "input", "identity", "none")
    link(a, -1, -1, 1.0, reg)
    link(b, -1, -1, -1.0, reg)
    assert compatibility_distance(a, b, cfg) == pytest.approx(1.0)


def _random_genomes(n, cfg, seed=0, rounds=4):
    rng = random.Random(seed)
    reg = InnovationRegistry()
    out = []
    for k in range(n):
        g = init_genome(cfg, rng, reg, k)
        for _ in range(rng.randrange(rounds)):
            g = mutate(g, cfg, reg, rng)
        out.append(g)
    return out, reg


def test_distance_is_symmetric():
    cfg = small(num_inputs=5, num_outputs=3)
    gs, _ = _random_genomes(40, cfg)
    for a, b in zip(gs, gs[1:]):
        d = compatibility_distance(a, b, cfg)
        assert d >= 0 and d == pytest.approx(compatibility_distance(b, a, cfg))


def test_speciation_extremes():
    cfg = small(num_inputs=4, num_outputs=2, compatibility_threshold=math.inf)
    gs, _ = _random_genomes(30, cfg)
    assert len(speciate(gs, None, cfg)) == 1
    cfg0 = small(num_inputs=4, num_outputs=2, compatibility_threshold=0.0)
    assert len(speciate(gs, None, cfg0)) == len(gs)


def test_two_clusters():
    cfg = small(num_inputs=2, num_outputs=1, compatibility_threshold=1.0)
    reg = InnovationRegistry()
    a = bare(2, 1, key=0)
    link(a, -1, 0, 0.0, reg)
    b = bare(2, 1, key=100)
    link(b, -1, 0, 6.0, reg)  # distance 0.5 * 6 / 2 = 1.5 from cluster a
    pop = [a.copy(k) for k in range(5)] + [b.copy(100 + k) for k in range(5)]
    s = speciate(pop, None, cfg)
    assert len(s) == 2
    assert sorted(len(sp.members) for sp in s.ordered()) == [5, 5]
    # carried over: a second call keeps the same two species ids
    assert sorted(speciate(pop, s, cfg).species) == sorted(s.species)


def test_crossover_of_clones():
    cfg = small(num_inputs=4, num_outputs=2)
    gs, _ = _random_genomes(10, cfg)
    rng = random.Random(0)
    for g in gs:
        g.fitness = 1.0
        other = g.copy(key=g.key + 1000)
        child = crossover(g, other, rng)
        nodes, conns = child.structure()
        ref_nodes, ref_conns = g.structure()
        assert nodes == ref_nodes
        assert [c[:3] + c[4:] for c in conns] == [c[:3] + c[4:] for c in ref_conns]


def test_crossover_keeps_fitter_excess():
    reg = InnovationRegistry()
    p1 = bare(2, 1, key=0)
    link(p1, -1, 0, 1.0, reg)
    p2 = p1.copy(key=1)
    link(p1, -2, 0, 1.0, reg)
    p1.fitness, p2.fitness = 5.0, 1.0
    for seed in range(20):
        assert (-2, 0) in crossover(p2, p1, random.Random(seed)).connections


def test_crossover_coin_flip_frequency():
    reg = InnovationRegistry()
    p1 = bare(key=0)
    link(p1, -1, 0, 1.0, reg)
    p2 = bare(key=1)
    link(p2, -1, 0, -1.0, reg)
    p1.fitness = p2.fitness = 0.0
    rng = random.Random(2024)
    hits = sum(crossover(p1, p2, rng).connections[(-1, 0)].weight == 1.0 for _ in range(10_000))
    assert abs(hits / 10_000 - 0.5) < 0.02


def test_mutate_with_zero_probabilities_is_identity():
    cfg = small(num_inputs=5, num_outputs=3, **ZERO)
    gs, reg = _random_genomes(20, small(num_inputs=5, num_outputs=3))
    rng = random.Random(0)
    for g in gs:
        assert mutate(g, cfg, reg, rng).structure() == g.structure()


def test_add_node_split():
    cfg = small(**{**ZERO, "node_add_prob": 1.0})
    reg = InnovationRegistry(first_node_id=1)
    g = bare(2, 1)
    link(g, -1, 0, 0.75, reg)
    m = mutate(g, cfg, reg, random.Random(0))
    assert not m.connections[(-1, 0)].enabled
    (h,) = m.hidden_ids
    assert m.connections[(-1, h)].weight == 1.0
    assert m.connections[(h, 0)].weight == 0.75
    assert (m.nodes[h].bias, m.nodes[h].response) == (0.0, 1.0)


def test_same_structural_event_shares_innovation():
    cfg = small(**{**ZERO, "node_add_prob": 1.0})
    reg = InnovationRegistry(first_node_id=1)
    g = bare(2, 1)
    link(g, -1, 0, 0.75, reg)
    a = mutate(g, cfg, reg, random.Random(0))
    b = mutate(g.copy(key=9), cfg, reg, random.Random(1))
    assert a.hidden_ids == b.hidden_ids
    for k in a.connections:
        assert a.connections[k].innovation == b.connections[k].innovation
    reg.new_generation()
    c = mutate(g.copy(key=10), cfg, reg, random.Random(2))
    assert c.hidden_ids != a.hidden_ids


def test_add_connection_registry():
    cfg = small(**{**ZERO, "conn_add_prob": 1.0})
    reg = InnovationRegistry()
    a = mutate(bare(1, 1), cfg, reg, random.Random(0))
    b = mutate(bare(1, 1, key=1), cfg, reg, random.Random(0))
    (ka,) = a.connections
    assert a.connections[ka].innovation == b.connections[ka].innovation


def test_delete_node_cascades():
    cfg = small(**{**ZERO, "node_add_prob": 1.0})
    reg = InnovationRegistry(first_node_id=1)
    g = bare(2, 1)
    link(g, -1, 0, 0.75, reg)
    g = mutate(g, cfg, reg, random.Random(0))
    g = mutate(g, small(**{**ZERO, "node_delete_prob": 1.0}), reg, random.Random(0))
    assert not g.hidden_ids
    assert all(a in g.nodes and b in g.nodes for a, b in g.connections)


def _check_genome(g, cfg):
    assert len(g.input_ids) == cfg.num_inputs and len(g.output_ids) == cfg.num_outputs
    for (a, b), c in g.connections.items():
        assert (c.in_node, c.out_node) == (a, b)
        assert a in g.nodes and b in g.nodes and g.nodes[b].kind != "input"
        assert cfg.weight_min_value <= c.weight <= cfg.weight_max_value
    for n in g.nodes.values():
        if n.kind != "input":
            assert cfg.bias_min_value <= n.bias <= cfg.bias_max_value
            assert cfg.response_min_value <= n.response <= cfg.response_max_value
            assert n.activation in cfg.activation_options


def test_clamps_hold_after_many_mutations():
    cfg = small(num_inputs=6, num_outputs=7, weight_mutate_power=25.0, bias_mutate_power=25.0,
                response_mutate_power=25.0, weight_max_value=3.0, weight_min_value=-3.0)
    rng = random.Random(5)
    reg = InnovationRegistry()
    # 200 lineages of 50 mutations each: 10,000 mutations in total
    for _ in range(200):
        g = init_genome(cfg, rng, reg)
        for _ in range(50):
            g = mutate(g, cfg, reg, rng)
            _check_genome(g, cfg)
        reg.new_generation()


def test_pool_and_quota_rules():
    assert mating_pool_size(10, 0.3) == 3
    assert mating_pool_size(1, 0.3) == 1
    assert mating_pool_size(11, 0.3) == 4
    assert offspring_quotas([0.0, 1.0, 0.5], 150) == [1, 99, 50]
    assert sum(offspring_quotas([0.2, 0.3, 0.1, 0.0], 17)) == 17
    assert offspring_quotas([0.0, 0.0], 5) == [3, 2]


def _evaluated(n, cfg, rng, reg, keys):
    pop = [init_genome(cfg, rng, reg, keys()) for _ in range(n)]
    for g in pop:
        g.fitness = rng.uniform(-5, 5)
    return pop


def test_reproduce_preserves_size():
    cfg = small(num_inputs=4, num_outputs=3, pop_size=30)
    rng = random.Random(1)
    reg = InnovationRegistry()
    keys = KeyCounter()
    pop = _evaluated(30, cfg, rng, reg, keys)
    species = None
    for _ in range(25):
        species = speciate(pop, species, cfg)
        pop = reproduce(species, cfg, rng, reg, keys)
        reg.new_generation()
        assert len(pop) == cfg.pop_size
        assert len({g.key for g in pop}) == len(pop)
        for g in pop:
            g.fitness = rng.uniform(-5, 5)


def test_stagnant_species_removed():
    cfg = small(num_inputs=2, num_outputs=1, pop_size=9, max_stagnation=50, species_elitism=2)
    reg = InnovationRegistry()
    keys = KeyCounter()
    rng = random.Random(0)
    ss = SpeciesSet()
    for sid, fit in ((1, 10.0), (2, 9.0), (3, 1.0)):
        members = [init_genome(cfg, rng, reg, keys()) for _ in range(3)]
        for m in members:
            m.fitness = fit
        ss.species[sid] = Species(sid, members[0], members, best_fitness_ever=fit,
                                  generations_since_improvement=50)
    pop = reproduce(ss, cfg, rng, reg, keys)
    assert sorted(ss.species) == [1, 2]
    assert len(pop) == 9


def test_elites_copied_unchanged():
    cfg = small(num_inputs=3, num_outputs=2, pop_size=12, elitism=3)
    rng = random.Random(3)
    reg = InnovationRegistry()
    keys = KeyCounter()
    pop = _evaluated(12, cfg, rng, reg, keys)
    ss = speciate(pop, None, small(num_inputs=3, num_outputs=2, compatibility_threshold=math.inf))
    top = sorted(pop, key=lambda g: (-g.fitness, g.key))[:3]
    snapshot = [g.structure() for g in top]
    nxt = reproduce(ss, cfg, rng, reg, keys)
    assert [g.structure() for g in nxt[:3]] == snapshot


def test_extinction_resets_population():
    cfg = small(pop_size=6, max_stagnation=1, species_elitism=0)
    reg = InnovationRegistry()
    keys = KeyCounter()
    rng = random.Random(0)
    pop = _evaluated(6, cfg, rng, reg, keys)
    ss = speciate(pop, None, cfg)
    for s in ss.ordered():
        s.best_fitness_ever = 1e9
        s.generations_since_improvement = 5
    fresh = reproduce(ss, cfg, rng, reg, keys)
    assert len(fresh) == 6 and all(g.fitness is None for g in fresh)


def _quiet(fn, *a, **k):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return fn(*a, **k)


P = FitnessParams()


def test_threshold_stops_after_first_generation():
    lvl = bundled_level("w1l2")
    cfg = NEATConfig(pop_size=10, fitness_threshold=0.0)
    _, history, _, state = _quiet(run_neat, lvl, P, cfg, ConstraintSpec(min_coins=99),
                                  generations=50, move_budget=200)
    assert len(history) == 1


def test_evaluation_count():
    lvl = bundled_level("w1l2")
    cfg = NEATConfig(pop_size=2)
    _, history, _, state = _quiet(run_neat, lvl, P, cfg, ConstraintSpec(min_coins=99),
                                  generations=0, move_budget=200)
    assert state.evaluations == 2 and len(history) == 1
    _, history, _, state = _quiet(run_neat, lvl, P, cfg, ConstraintSpec(min_coins=99),
                                  generations=1, move_budget=200)
    assert state.evaluations == 4 and len(history) == 2


def test_toy_level_solved():
    lvl = flat_level(width=16, flag_col=11)
    solved = 0
    for seed in range(5):
        _, history, _, _ = _quiet(run_neat, lvl, P, NEATConfig(pop_size=50),
                                  ConstraintSpec(max_moves=500), generations=300,
                                  move_budget=500, seed=seed)
        solved += history[-1].solved
    assert solved >= 3


def test_innovation_uniqueness_and_determinism():
    lvl = bundled_level("w1l2")
    cfg = NEATConfig(pop_size=20)
    spec = ConstraintSpec(min_coins=99)
    a = _quiet(run_neat, lvl, P, cfg, spec, generations=30, move_budget=150, seed=7)
    b = _quiet(run_neat, lvl, P, cfg, spec, generations=30, move_budget=150, seed=7, threads=3)
    pairs = a[3].registry.pairs()
    assert len(set(pairs.values())) == len(pairs)
    assert a[0].structure() == b[0].structure()
    assert [h.best_fitness for h in a[1]] == [h.best_fitness for h in b[1]]
    assert a[2] == b[2]
