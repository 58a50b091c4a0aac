"""Node and connection genes, genome construction and variation operators.

Input nodes use ids ``-1 .. -num_inputs``; output nodes use ``0 ..
num_outputs-1``; hidden nodes get fresh ids from the innovation registry.
Connections are keyed by their ``(in_node, out_node)`` pair, and the
registry hands out one innovation number per pair for the whole run.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from .config import NEATConfig

INPUT, HIDDEN, OUTPUT = "input", "hidden", "output"


@dataclass
class NodeGene:
    id: int
    kind: str
    activation: str = "sigmoid"
    aggregation: str = "sum"
    bias: float = 0.0
    response: float = 1.0

    def copy(self) -> "NodeGene":
        return NodeGene(self.id, self.kind, self.activation, self.aggregation, self.bias,
                        self.response)


@dataclass
class ConnectionGene:
    in_node: int
    out_node: int
    weight: float
    enabled: bool
    innovation: int

    @property
    def key(self):
        return (self.in_node, self.out_node)

    def copy(self) -> "ConnectionGene":
        return ConnectionGene(self.in_node, self.out_node, self.weight, self.enabled,
                              self.innovation)


@dataclass
class Genome:
    key: int
    nodes: dict = field(default_factory=dict)
    connections: dict = field(default_factory=dict)
    fitness: float | None = None
    mutations: int = 0  # variation events along this genome's lineage

    def copy(self, key=None) -> "Genome":
        # input genes are never modified, so copies share them
        return Genome(
            self.key if key is None else key,
            {k: n if n.kind == INPUT else n.copy() for k, n in self.nodes.items()},
            {k: c.copy() for k, c in self.connections.items()},
            self.fitness,
            self.mutations,
        )

    @property
    def input_ids(self):
        return sorted((n for n in self.nodes if self.nodes[n].kind == INPUT), reverse=True)

    @property
    def output_ids(self):
        return sorted(n for n in self.nodes if self.nodes[n].kind == OUTPUT)

    @property
    def hidden_ids(self):
        return sorted(n for n in self.nodes if self.nodes[n].kind == HIDDEN)

    def gene_count(self) -> int:
        """Non-input node genes plus connection genes."""
        return sum(1 for n in self.nodes.values() if n.kind != INPUT) + len(self.connections)

    def structure(self):
        """Hashable view of the topology and parameters, for comparisons."""
        nodes = tuple(sorted(
            (n.id, n.kind, n.activation, n.aggregation, n.bias, n.response)
            for n in self.nodes.values()
        ))
        conns = tuple(sorted(
            (c.in_node, c.out_node, c.weight, c.enabled, c.innovation)
            for c in self.connections.values()
        ))
        return nodes, conns


class InnovationRegistry:
    """Run-wide innovation numbers and per-generation node-split ids."""

    def __init__(self, first_node_id=0):
        self._innovations = {}
        self._splits = {}
        self.next_innovation = 0
        self.next_node_id = first_node_id

    def innovation(self, in_node: int, out_node: int) -> int:
        key = (in_node, out_node)
        num = self._innovations.get(key)
        if num is None:
            num = self._innovations[key] = self.next_innovation
            self.next_innovation += 1
        return num

    def split_node(self, innovation: int, genome: Genome) -> int:
        """Node id for splitting connection ``innovation`` in ``genome``.

        Genomes splitting the same connection within one generation get the
        same id, unless the genome already carries it.
        """
        node_id = self._splits.get(innovation)
        if node_id is None or node_id in genome.nodes:
            node_id = self.next_node_id
            self.next_node_id += 1
            self._splits.setdefault(innovation, node_id)
        return node_id

    def new_generation(self):
        self._splits.clear()

    def pairs(self) -> dict:
        return dict(self._innovations)


def _clamp(v, lo, hi):
    return lo if v < lo else hi if v > hi else v


def _init_value(config, attr, rng):
    return _clamp(
        rng.gauss(getattr(config, f"{attr}_init_mean"), getattr(config, f"{attr}_init_stdev")),
        getattr(config, f"{attr}_min_value"),
        getattr(config, f"{attr}_max_value"),
    )


def _choose(default, options, rng):
    return rng.choice(options) if default == "random" else default


def new_node(node_id, kind, config: NEATConfig, rng) -> NodeGene:
    if kind == INPUT:
        return NodeGene(node_id, INPUT, "identity", "none", 0.0, 1.0)
    return NodeGene(
        node_id,
        kind,
        _choose(config.activation_default, config.activation_options, rng),
        _choose(config.aggregation_default, config.aggregation_options, rng),
        _init_value(config, "bias", rng),
        _init_value(config, "response", rng),
    )


def new_connection(in_node, out_node, config, registry, rng, weight=None) -> ConnectionGene:
    if weight is None:
        weight = _init_value(config, "weight", rng)
    return ConnectionGene(
        in_node, out_node, weight, config.enabled_default, registry.innovation(in_node, out_node)
    )


def init_genome(config: NEATConfig, rng: random.Random, registry: InnovationRegistry,
                key: int = 0) -> Genome:
    """Inputs, outputs, ``num_hidden`` hidden nodes and random input links.

    Each input->output (or input->hidden->output when hidden nodes exist)
    pair is linked with probability ``config.connection_fraction``.
    """
    g = Genome(key)
    for i in range(1, config.num_inputs + 1):
        g.nodes[-i] = new_node(-i, INPUT, config, rng)
    for o in range(config.num_outputs):
        g.nodes[o] = new_node(o, OUTPUT, config, rng)
    registry.next_node_id = max(registry.next_node_id, config.num_outputs)
    hidden = []
    for h in range(config.num_hidden):
        node_id = config.num_outputs + h
        g.nodes[node_id] = new_node(node_id, HIDDEN, config, rng)
        hidden.append(node_id)
    registry.next_node_id = max(registry.next_node_id, config.num_outputs + config.num_hidden)
    p = config.connection_fraction
    pairs = []
    if hidden:
        pairs += [(-i, h) for i in range(1, config.num_inputs + 1) for h in hidden]
        pairs += [(h, o) for h in hidden for o in range(config.num_outputs)]
    else:
        pairs += [(-i, o) for i in range(1, config.num_inputs + 1) for o in range(config.num_outputs)]
    for a, b in pairs:
        if rng.random() < p:
            g.connections[(a, b)] = new_connection(a, b, config, registry, rng)
    return g


def compatibility_distance(g1: Genome, g2: Genome, config: NEATConfig) -> float:
    """Disjoint-gene count over the larger genome size, plus the mean
    parameter difference across matching genes."""
    disjoint = 0
    diff = 0.0
    matching = 0
    for nid, n1 in g1.nodes.items():
        if n1.kind == INPUT:
            continue
        n2 = g2.nodes.get(nid)
        if n2 is None:
            disjoint += 1
        else:
            diff += abs(n1.bias - n2.bias)
            matching += 1
    disjoint += sum(1 for nid, n in g2.nodes.items() if n.kind != INPUT and nid not in g1.nodes)
    for key, c1 in g1.connections.items():
        c2 = g2.connections.get(key)
        if c2 is None:
            disjoint += 1
        else:
            diff += abs(c1.weight - c2.weight)
            matching += 1
    disjoint += sum(1 for key in g2.connections if key not in g1.connections)
    n = max(g1.gene_count(), g2.gene_count(), 1)
    mean_diff = diff / matching if matching else 0.0
    return (config.compatibility_disjoint_coefficient * disjoint / n
            + config.compatibility_weight_coefficient * mean_diff)


def _order_parents(p1: Genome, p2: Genome):
    f1 = -math.inf if p1.fitness is None else p1.fitness
    f2 = -math.inf if p2.fitness is None else p2.fitness
    if f2 > f1 or (f2 == f1 and p2.key < p1.key):
        return p2, p1
    return p1, p2


def crossover(parent1: Genome, parent2: Genome, rng: random.Random, key: int = 0) -> Genome:
    """Innovation-aligned crossover; excess and disjoint genes come from
    the fitter parent."""
    fit, other = _order_parents(parent1, parent2)
    child = Genome(key, mutations=max(fit.mutations, other.mutations))
    for nid in sorted(fit.nodes):
        n1 = fit.nodes[nid]
        n2 = other.nodes.get(nid)
        src = n1 if n2 is None or rng.random() < 0.5 else n2
        child.nodes[nid] = src if src.kind == INPUT else src.copy()
    for ckey in sorted(fit.connections, key=lambda k: fit.connections[k].innovation):
        c1 = fit.connections[ckey]
        c2 = other.connections.get(ckey)
        src = c1 if c2 is None or rng.random() < 0.5 else c2
        gene = src.copy()
        if not c1.enabled or (c2 is not None and not c2.enabled):
            gene.enabled = rng.random() >= 0.5
        child.connections[ckey] = gene
    return child


def _mutation_params(config, attr):
    return tuple(getattr(config, f"{attr}_{k}") for k in (
        "mutate_rate", "replace_rate", "mutate_power", "init_mean", "init_stdev",
        "min_value", "max_value",
    ))


def _perturb(value, p, rng):
    rate, replace_rate, power, mean, stdev, lo, hi = p
    r = rng.random()
    if r < rate:
        value = value + rng.gauss(0.0, power)
    elif r < rate + replace_rate:
        value = rng.gauss(mean, stdev)
    else:
        return value, False
    return (lo if value < lo else hi if value > hi else value), True


def mutate_add_connection(g: Genome, config, registry, rng, attempts=32) -> bool:
    sources = sorted(g.nodes)
    targets = [n for n in sources if g.nodes[n].kind != INPUT]
    if not targets:
        return False
    for _ in range(attempts):
        a = rng.choice(sources)
        b = rng.choice(targets)
        if (a, b) not in g.connections:
            break
    else:
        free = [(a, b) for a in sources for b in targets if (a, b) not in g.connections]
        if not free:
            return False
        a, b = rng.choice(free)
    g.connections[(a, b)] = new_connection(a, b, config, registry, rng)
    return True


def mutate_delete_connection(g: Genome, rng) -> bool:
    if not g.connections:
        return False
    del g.connections[rng.choice(sorted(g.connections))]
    return True


def mutate_add_node(g: Genome, config, registry, rng) -> bool:
    enabled = sorted(k for k, c in g.connections.items() if c.enabled)
    if not enabled:
        return False
    old = g.connections[rng.choice(enabled)]
    old.enabled = False
    nid = registry.split_node(old.innovation, g)
    node = new_node(nid, HIDDEN, config, rng)
    node.bias, node.response = 0.0, 1.0
    g.nodes[nid] = node
    g.connections[(old.in_node, nid)] = new_connection(old.in_node, nid, config, registry, rng, 1.0)
    g.connections[(nid, old.out_node)] = new_connection(nid, old.out_node, config, registry, rng,
                                                        old.weight)
    for ckey in ((old.in_node, nid), (nid, old.out_node)):
        g.connections[ckey].enabled = True
    return True


def mutate_delete_node(g: Genome, rng) -> bool:
    hidden = g.hidden_ids
    if not hidden:
        return False
    nid = rng.choice(hidden)
    del g.nodes[nid]
    for ckey in [k for k in g.connections if nid in k]:
        del g.connections[ckey]
    return True


def mutate(genome: Genome, config: NEATConfig, registry: InnovationRegistry,
           rng: random.Random) -> Genome:
    """Return a mutated copy: structural steps first, then parameters."""
    g = genome.copy()
    changes = 0
    if rng.random() < config.conn_add_prob:
        changes += mutate_add_connection(g, config, registry, rng)
    if rng.random() < config.conn_delete_prob:
        changes += mutate_delete_connection(g, rng)
    if rng.random() < config.node_add_prob:
        changes += mutate_add_node(g, config, registry, rng)
    if rng.random() < config.node_delete_prob:
        changes += mutate_delete_node(g, rng)
    wp = _mutation_params(config, "weight")
    bp = _mutation_params(config, "bias")
    rp = _mutation_params(config, "response")
    for ckey in sorted(g.connections):
        c = g.connections[ckey]
        c.weight, hit = _perturb(c.weight, wp, rng)
        changes += hit
        if rng.random() < config.enabled_mutate_rate:
            c.enabled = not c.enabled
            changes += 1
    for nid in sorted(g.nodes):
        n = g.nodes[nid]
        if n.kind == INPUT:
            continue
        n.bias, hit = _perturb(n.bias, bp, rng)
        changes += hit
        n.response, hit = _perturb(n.response, rp, rng)
        changes += hit
        if rng.random() < config.activation_mutate_rate:
            n.activation = rng.choice(config.activation_options)
            changes += 1
        if rng.random() < config.aggregation_mutate_rate:
            n.aggregation = rng.choice(config.aggregation_options)
            changes += 1
    g.mutations += changes
    return g
