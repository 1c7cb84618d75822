"""Order-preserving thread map used by every parallel loop.

Work items carry their own RNG streams, so the worker count only changes
wall time, never results.
"""
import os
from concurrent.futures import ThreadPoolExecutor


def resolve_threads(threads: int | None = None) -> int:
    if threads is None:
        threads = int(os.environ.get("PANELSEG_THREADS", "1") or 1)
    return max(1, int(threads))


def pmap(fn, items, threads: int | None = None) -> list:
    items = list(items)
    k = min(resolve_threads(threads), len(items))
    if k <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=k) as ex:
        return list(ex.map(fn, items))


def chunks(n: int, k: int) -> list[range]:
    """Split ``range(n)`` into ``k`` contiguous pieces."""
    k = max(1, min(k, n))
    bounds = [n * i // k for i in range(k + 1)]
    return [range(bounds[i], bounds[i + 1]) for i in range(k)]
