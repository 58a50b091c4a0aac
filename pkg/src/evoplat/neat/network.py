"""Phenotype: a genome compiled to flat arrays for the episode kernels.

Slots ``0 .. n_inputs-1`` hold the inputs (input id ``-k`` lives in slot
``k-1``); the remaining slots hold non-input nodes in ascending id order.
Incoming edges are stored in CSR form per non-input node.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .._kernels_py import NetState
from .genome import INPUT, Genome

ACTIVATION_CODES = {"sigmoid": 0, "gauss": 1}


class DimensionMismatch(ValueError):
    pass


@dataclass(frozen=True)
class CompiledNetwork:
    n_inputs: int
    act: np.ndarray
    bias: np.ndarray
    response: np.ndarray
    indptr: np.ndarray
    src: np.ndarray
    weight: np.ndarray
    out_idx: np.ndarray


def compile_network(genome: Genome) -> CompiledNetwork:
    inputs = genome.input_ids
    n_in = len(inputs)
    others = sorted(n for n, g in genome.nodes.items() if g.kind != INPUT)
    slot = {-k: k - 1 for k in range(1, n_in + 1)}
    for j, nid in enumerate(others):
        slot[nid] = n_in + j
    incoming = {nid: [] for nid in others}
    for ckey in sorted(genome.connections):
        c = genome.connections[ckey]
        if c.enabled:
            incoming[c.out_node].append((slot[c.in_node], c.weight))
    indptr = [0]
    src, weight = [], []
    for nid in others:
        for s, w in incoming[nid]:
            src.append(s)
            weight.append(w)
        indptr.append(len(src))
    nodes = [genome.nodes[n] for n in others]
    return CompiledNetwork(
        n_inputs=n_in,
        act=np.array([ACTIVATION_CODES[n.activation] for n in nodes], dtype=np.int8),
        bias=np.array([n.bias for n in nodes], dtype=np.float64),
        response=np.array([n.response for n in nodes], dtype=np.float64),
        indptr=np.array(indptr, dtype=np.int32),
        src=np.array(src, dtype=np.int32),
        weight=np.array(weight, dtype=np.float64),
        out_idx=np.array([slot[o] for o in genome.output_ids], dtype=np.int32),
    )


class RecurrentNetwork:
    """Stateful network: every node reads its sources' previous-step values.

    Call :meth:`reset` at the start of each episode.
    """

    def __init__(self, compiled: CompiledNetwork):
        self.compiled = compiled
        self._state = NetState(compiled, compiled.n_inputs)

    @classmethod
    def create(cls, genome: Genome) -> "RecurrentNetwork":
        return cls(compile_network(genome))

    def reset(self):
        self._state = NetState(self.compiled, self.compiled.n_inputs)

    def activate(self, inputs) -> list:
        if len(inputs) != self.compiled.n_inputs:
            raise DimensionMismatch(f"expected {self.compiled.n_inputs} inputs, got {len(inputs)}")
        self._state.obs[:] = [float(x) for x in inputs]
        self._state.step()
        return self._state.scores()

    def decide(self, inputs) -> int:
        """Activate and return the argmax output (ties to the lowest code)."""
        self.activate(inputs)
        return self._state.argmax()


def activate(genome: Genome, inputs, network: RecurrentNetwork | None = None) -> list:
    """One recurrent step. Pass the same ``network`` across calls to keep state."""
    net = network if network is not None else RecurrentNetwork.create(genome)
    return net.activate(inputs)
