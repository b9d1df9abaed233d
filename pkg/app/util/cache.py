from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Callable, Generic, Hashable, Optional, TypeVar

from cachetools import LRUCache

K = TypeVar("K", bound=Hashable)
V = TypeVar("V")


@dataclass
class LRUCacheBox(Generic[K, V]):
    cache: LRUCache
    _lock: threading.Lock = field(default_factory=threading.Lock)

    @classmethod
    def create(cls, maxsize: int) -> "LRUCacheBox[K, V]":
        return cls(cache=LRUCache(maxsize=max(1, maxsize)))

    def get(self, key: K) -> Optional[V]:
        with self._lock:
            return self.cache.get(key)

    def set(self, key: K, value: V) -> None:
        with self._lock:
            self.cache[key] = value

    def get_or_set(self, key: K, factory: Callable[[], V]) -> V:
        existing = self.get(key)
        if existing is not None:
            return existing
        value = factory()
        self.set(key, value)
        return value

    def clear(self) -> None:
        with self._lock:
            self.cache.clear()
