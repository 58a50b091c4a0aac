"""Thread fan-out for independent episode evaluations.

The compiled kernels release the GIL, so threads give real parallelism.
Results come back in submission order, which keeps runs independent of the
thread count.
"""

import os
from concurrent.futures import ThreadPoolExecutor


def thread_count(threads=None):
    if threads is None:
        env = os.environ.get("EVOPLAT_THREADS")
        threads = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(threads))


def map_ordered(fn, items, threads=None):
    items = list(items)
    n = min(thread_count(threads), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
