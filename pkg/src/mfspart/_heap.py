"""Addressable max-heap keyed by integer gain.

Built on heapq with lazy invalidation: updates and removals mark the old
entry stale and push a fresh one; stale entries are skipped at the top.
Ties break toward the lower item id so pops are deterministic.
"""

from __future__ import annotations

import heapq


class AddressableMaxHeap:
    __slots__ = ("_heap", "_live")

    def __init__(self):
        self._heap: list[tuple[int, int]] = []  # (-gain, item)
        self._live: dict[int, int] = {}  # item -> current gain

    def __len__(self) -> int:
        return len(self._live)

    def __contains__(self, item: int) -> bool:
        return item in self._live

    def gain_of(self, item: int) -> int:
        return self._live[item]

    def get(self, item: int, default: int | None = None) -> int | None:
        return self._live.get(item, default)

    def push(self, item: int, gain: int) -> None:
        """Insert or re-key an item."""
        self._live[item] = gain
        heapq.heappush(self._heap, (-gain, item))

    def remove(self, item: int) -> None:
        self._live.pop(item, None)

    def _clean_top(self) -> None:
        heap = self._heap
        live = self._live
        while heap:
            neg, item = heap[0]
            if live.get(item) == -neg:
                return
            heapq.heappop(heap)

    def peek(self) -> tuple[int, int] | None:
        """(gain, item) of the current maximum, or None if empty."""
        self._clean_top()
        if not self._heap:
            return None
        neg, item = self._heap[0]
        return -neg, item

    def pop(self) -> tuple[int, int]:
        self._clean_top()
        neg, item = heapq.heappop(self._heap)
        del self._live[item]
        return -neg, item

    def items(self) -> dict[int, int]:
        """Live item -> gain snapshot."""
        return dict(self._live)
