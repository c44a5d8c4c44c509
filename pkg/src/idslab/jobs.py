"""Tiny deterministic job scheduler for pure numerical tasks.

Tasks are pure, so concurrency only affects wall time, never results:
outputs are collected in submission order.  The memory budget bounds the
estimated footprint of tasks in flight (dense eigensolves are the
memory-dominant step).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")

DEFAULT_MEMORY_BUDGET = 4 * 1024**3


@dataclass
class Scheduler:
    jobs: int = 1
    memory_budget_bytes: int = DEFAULT_MEMORY_BUDGET

    def map(
        self,
        fn: Callable[[T], R],
        items: Sequence[T],
        cost_bytes: Callable[[T], int] | None = None,
    ) -> list[R]:
        """fn over items, results in input order.

        With a cost estimator, items are grouped into batches whose summed
        cost stays within the memory budget; batches run sequentially and
        items inside a batch run on the thread pool.
        """
        items = list(items)
        if self.jobs <= 1 or len(items) <= 1:
            return [fn(x) for x in items]
        batches: list[list[tuple[int, T]]] = []
        if cost_bytes is None:
            batches.append(list(enumerate(items)))
        else:
            current: list[tuple[int, T]] = []
            spent = 0
            for i, x in enumerate(items):
                c = max(1, cost_bytes(x))
                if current and spent + c > self.memory_budget_bytes:
                    batches.append(current)
                    current, spent = [], 0
                current.append((i, x))
                spent += c
            if current:
                batches.append(current)
        results: dict[int, R] = {}
        with ThreadPoolExecutor(max_workers=self.jobs) as pool:
            for batch in batches:
                futures = [(i, pool.submit(fn, x)) for i, x in batch]
                for i, fut in futures:
                    results[i] = fut.result()
        return [results[i] for i in range(len(items))]
