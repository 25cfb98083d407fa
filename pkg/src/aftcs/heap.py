"""Indexed binary heap that counts key comparisons.

Items are addressed by a hashable handle so that keys can be updated or items
removed in O(log n). ``before(a, b)`` decides whether key ``a`` belongs nearer
the top than key ``b``.
"""

from __future__ import annotations

import heapq
from typing import Any, Callable, Generic, Hashable, Iterator, TypeVar

T = TypeVar("T")


def _lt(a, b):
    return a < b


def _gt(a, b):
    return a > b


class CountingHeap(Generic[T]):
    def __init__(self, key: Callable[[T], Any], top: str = "min"):
        if top not in ("min", "max"):
            raise ValueError("top must be 'min' or 'max'")
        self._key = key
        self._before = _lt if top == "min" else _gt
        self.top_kind = top
        self._items: list[T] = []
        self._keys: list[Any] = []
        self._pos: dict[Hashable, int] = {}
        self._handle: Callable[[T], Hashable] = lambda item: item.sensor  # type: ignore[attr-defined]
        self.comparisons = 0

    def _cmp(self, i: int, j: int) -> bool:
        self.comparisons += 1
        return self._before(self._keys[i], self._keys[j])

    def __len__(self) -> int:
        return len(self._items)

    def __bool__(self) -> bool:
        return bool(self._items)

    def __contains__(self, handle: Hashable) -> bool:
        return handle in self._pos

    def __iter__(self) -> Iterator[T]:
        """Heap-array order, not priority order."""
        return iter(list(self._items))

    def get(self, handle: Hashable) -> T:
        return self._items[self._pos[handle]]

    def peek(self) -> T:
        if not self._items:
            raise IndexError("peek on empty heap")
        return self._items[0]

    def push(self, item: T) -> None:
        h = self._handle(item)
        if h in self._pos:
            raise KeyError(f"{h!r} already in heap")
        self._items.append(item)
        self._keys.append(self._key(item))
        self._pos[h] = len(self._items) - 1
        self._sift_up(len(self._items) - 1)

    def pop(self) -> T:
        if not self._items:
            raise IndexError("pop from empty heap")
        return self._remove_at(0)

    def remove(self, handle: Hashable) -> T:
        return self._remove_at(self._pos[handle])

    def update(self, item: T) -> None:
        """Replace the item with the same handle and restore heap order."""
        i = self._pos[self._handle(item)]
        self._items[i] = item
        self._keys[i] = self._key(item)
        self._sift_up(i)
        self._sift_down(self._pos[self._handle(item)])

    def ordered(self) -> Iterator[T]:
        """Yield items top-first without mutating the heap.

        Uses a frontier of array indices; costs O(k log k) comparisons for the
        first k items.
        """
        if not self._items:
            return
        heap = self
        frontier: list[_Frontier] = [_Frontier(heap, 0)]
        while frontier:
            node = heapq.heappop(frontier)
            yield self._items[node.i]
            for c in (2 * node.i + 1, 2 * node.i + 2):
                if c < len(self._items):
                    heapq.heappush(frontier, _Frontier(heap, c))

    def snapshot(self) -> tuple:
        return tuple(self._items)

    def check(self) -> bool:
        """Full-scan heap property check (does not count comparisons)."""
        n = len(self._keys)
        for i in range(n):
            for c in (2 * i + 1, 2 * i + 2):
                if c < n and self._before(self._keys[c], self._keys[i]):
                    return False
        return all(self._pos[self._handle(it)] == i for i, it in enumerate(self._items))

    def _swap(self, i: int, j: int) -> None:
        items, keys = self._items, self._keys
        items[i], items[j] = items[j], items[i]
        keys[i], keys[j] = keys[j], keys[i]
        self._pos[self._handle(items[i])] = i
        self._pos[self._handle(items[j])] = j

    def _sift_up(self, i: int) -> None:
        while i > 0:
            parent = (i - 1) // 2
            if self._cmp(i, parent):
                self._swap(i, parent)
                i = parent
            else:
                break

    def _sift_down(self, i: int) -> None:
        n = len(self._items)
        while True:
            best = i
            for c in (2 * i + 1, 2 * i + 2):
                if c < n and self._cmp(c, best):
                    best = c
            if best == i:
                return
            self._swap(i, best)
            i = best

    def _remove_at(self, i: int) -> T:
        last = len(self._items) - 1
        item = self._items[i]
        if i != last:
            self._swap(i, last)
        self._items.pop()
        self._keys.pop()
        del self._pos[self._handle(item)]
        if i < len(self._items):
            self._sift_up(i)
            self._sift_down(i)
        return item


class _Frontier:
    __slots__ = ("heap", "i")

    def __init__(self, heap: CountingHeap, i: int):
        self.heap = heap
        self.i = i

    def __lt__(self, other: "_Frontier") -> bool:
        return self.heap._cmp(self.i, other.i)
