"""Storage for learned constraints.

:class:`LearnedStore` is the plain aging list used without a pool: an entry
is dropped as soon as it goes ``age_limit`` propagations without deducing.
:class:`ConflictPool` adds a fixed capacity, deferred purging in
:meth:`ConflictPool.update_pass` and incumbent-triggered deletion.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

AGE_LIMIT = 20
INCUMBENT_THRESHOLD = 0.05
MIN_CAPACITY = 1_000
MAX_CAPACITY = 50_000
TRIM_TRIGGER = 0.9
TRIM_FRACTION = 0.1


def pool_capacity(n: int, m: int) -> int:
    if n < 0 or m < 0:
        raise ValueError("negative problem dimensions")
    return int(min(max(2 * (n + m), MIN_CAPACITY), MAX_CAPACITY))


@dataclass
class PoolStats:
    inserted: int = 0
    evicted: int = 0
    age_deleted: int = 0
    incumbent_deleted: int = 0
    update_passes: int = 0


class LearnedStore:
    def __init__(self, age_limit: int = AGE_LIMIT):
        self.age_limit = age_limit
        self._entries: dict[int, object] = {}
        self._order: dict[int, int] = {}
        self._counter = 0
        self._removed: set[int] = set()
        self.stats = PoolStats()

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self):
        return iter(list(self._entries.values()))

    def __contains__(self, ident: int) -> bool:
        return ident in self._entries

    def get(self, ident: int):
        return self._entries[ident]

    def constraints(self) -> list:
        return list(self._entries.values())

    def age(self, ident: int) -> int:
        return self._entries[ident].age

    def insertion_order(self, ident: int) -> int:
        return self._order[ident]

    def insert(self, constraint) -> list[int]:
        ident = constraint.id
        if ident in self._entries or ident in self._removed:
            raise ValueError(f"constraint id {ident} is not fresh")
        evicted = self._make_room()
        constraint.age = 0
        self._entries[ident] = constraint
        self._order[ident] = self._counter
        self._counter += 1
        self.stats.inserted += 1
        return evicted

    def record_propagation(self, ident: int, deduced: bool) -> int:
        if ident not in self._entries:
            raise KeyError(f"unknown constraint id {ident}")
        c = self._entries[ident]
        c.age = 0 if deduced else c.age + 1
        if c.age >= self.age_limit:
            self._on_age_limit(ident)
        return c.age

    def update_pass(self) -> list[int]:
        return []

    def on_new_incumbent(self, value: float) -> list[int]:
        return []

    # hooks -----------------------------------------------------------------
    def _make_room(self) -> list[int]:
        return []

    def _on_age_limit(self, ident: int):
        self._remove(ident)
        self.stats.age_deleted += 1

    def _remove(self, ident: int):
        del self._entries[ident]
        del self._order[ident]
        self._removed.add(ident)


class ConflictPool(LearnedStore):
    def __init__(self, capacity: int, age_limit: int = AGE_LIMIT,
                 incumbent_threshold: float = INCUMBENT_THRESHOLD):
        if not MIN_CAPACITY <= capacity <= MAX_CAPACITY:
            raise ValueError(f"capacity {capacity} outside [{MIN_CAPACITY}, {MAX_CAPACITY}]")
        super().__init__(age_limit)
        self.capacity = capacity
        self.incumbent_threshold = incumbent_threshold
        self._marked: set[int] = set()

    def is_marked(self, ident: int) -> bool:
        return ident in self._marked

    def _oldest_first(self) -> list[int]:
        return sorted(self._entries, key=lambda i: (-self._entries[i].age, self._order[i]))

    def _make_room(self) -> list[int]:
        if len(self._entries) < self.capacity:
            return []
        victim = self._oldest_first()[0]
        self._drop(victim)
        self.stats.evicted += 1
        return [victim]

    def _on_age_limit(self, ident: int):
        self._marked.add(ident)

    def _drop(self, ident: int):
        self._marked.discard(ident)
        self._remove(ident)

    def update_pass(self) -> list[int]:
        self.stats.update_passes += 1
        removed = sorted(i for i in self._marked if i in self._entries)
        for i in removed:
            self._drop(i)
        self.stats.age_deleted += len(removed)
        if len(self._entries) > TRIM_TRIGGER * self.capacity:
            k = math.ceil(TRIM_FRACTION * len(self._entries))
            extra = self._oldest_first()[:k]
            for i in extra:
                self._drop(i)
            self.stats.evicted += len(extra)
            removed += extra
        return removed

    def on_new_incumbent(self, value: float) -> list[int]:
        """Delete entries stamped with an incumbent at least 5% worse than ``value``."""
        removed = []
        for ident, c in list(self._entries.items()):
            stamp = getattr(c, "stamp", math.inf)
            if math.isinf(stamp):
                continue
            margin = self.incumbent_threshold * abs(stamp) if stamp != 0 else self.incumbent_threshold
            if value <= stamp - margin:
                self._drop(ident)
                removed.append(ident)
        self.stats.incumbent_deleted += len(removed)
        return removed
