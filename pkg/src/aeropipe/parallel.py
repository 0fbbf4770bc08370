import os
from concurrent.futures import ThreadPoolExecutor


def thread_count() -> int:
    env = os.environ.get("AEROPIPE_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def map_chunks(fn, n: int, min_chunk: int = 2048) -> list:
    """Apply ``fn(lo, hi)`` to contiguous chunks of ``range(n)``.

    Results come back in chunk order, so concatenation is independent of the
    thread count.
    """
    if n == 0:
        return []
    workers = thread_count()
    pieces = max(1, min(workers * 4, n // min_chunk))
    bounds = [(i * n // pieces, (i + 1) * n // pieces) for i in range(pieces)]
    if workers == 1 or pieces == 1:
        return [fn(lo, hi) for lo, hi in bounds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda b: fn(*b), bounds))
