"""Time the compiled and pure-Python episode kernels on the same workloads.

Usage::

    python benchmarks/bench_kernels.py [--repeats N]

Prints seconds per call for every importable backend and the speedup of
the compiled core, after checking that both backends agree.
"""

import argparse
import random
import timeit

import numpy as np

from evoplat.fitness import FitnessParams
from evoplat.kernels import backends
from evoplat.levels import bundled_level
from evoplat.neat import InnovationRegistry, NEATConfig, compile_network, init_genome, mutate


def workloads():
    level = bundled_level("runway")  # no exits: every call plays its full budget
    params = FitnessParams().for_max_time(level.max_time)
    coeffs = (params.coin_reward, params.distance_reward, params.time_penalty)
    moves = np.random.default_rng(0).integers(0, 7, 2000).astype(np.int8)

    cfg = NEATConfig(num_inputs=68, num_outputs=7, conn_add_prob=0.9, node_add_prob=0.5)
    rng = random.Random(0)
    reg = InnovationRegistry()
    genome = init_genome(cfg, rng, reg)
    for _ in range(30):
        genome = mutate(genome, cfg, reg, rng)
    net = compile_network(genome)

    def action_call(run_actions, _):
        return run_actions(*level.kernel_args(), moves, len(moves), len(moves), *coeffs)

    def network_call(_, run_network):
        out = np.zeros(400, dtype=np.int8)
        return run_network(*level.kernel_args(), net, 8, 8, 400, 400, *coeffs, out)

    return {"run_actions (2000 moves)": action_call, "run_network (400 moves)": network_call}


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()
    found = backends()
    print(f"backends: {', '.join(found)}")
    for name, call in workloads().items():
        results = {b: call(*fns) for b, fns in found.items()}
        if len(set(results.values())) != 1:
            raise SystemExit(f"{name}: backends disagree: {results}")
        times = {}
        for b, fns in found.items():
            number = 3 if b == "python" else 50
            t = min(timeit.repeat(lambda: call(*fns), number=number, repeat=args.repeats))
            times[b] = t / number
        line = "  ".join(f"{b}={t * 1e3:.3f} ms" for b, t in times.items())
        if "cython" in times:
            line += f"  speedup={times['python'] / times['cython']:.1f}x"
        print(f"{name:26s} {line}")


if __name__ == "__main__":
    main()
