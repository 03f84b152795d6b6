from __future__ import annotations

import contextvars
from concurrent.futures import ThreadPoolExecutor


def pmap(func, items, jobs: int = 1):
    """Ordered map over ``items`` on up to ``jobs`` threads.

    Results come back in input order, so reductions over them are
    deterministic. Each call runs in a copy of the caller's context.
    """
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    ctx = contextvars.copy_context()
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda item: ctx.copy().run(func, item), items))
