"""Hit, miss and eviction accounting for :class:`localqft.cache.ResultCache`."""

import dataclasses
from threading import RLock
import typing as t


if t.TYPE_CHECKING:
    from .cache import ResultCache  # pragma: no cover


@dataclasses.dataclass
class CacheStats:
    """
    Snapshot of a result cache's counters.

    Attributes:
        hit_count: Lookups answered from the cache.
        miss_count: Lookups that had to compute the result.
        eviction_count: Entries dropped because the cache was full.
        entry_count: Entries currently held.
    """

    hit_count: int = 0
    miss_count: int = 0
    eviction_count: int = 0
    entry_count: int = 0

    @property
    def access_count(self) -> int:
        """Total number of lookups."""
        return self.hit_count + self.miss_count

    @property
    def hit_rate(self) -> float:
        """Fraction of lookups answered from the cache."""
        if self.access_count == 0:
            return 0.0
        return self.hit_count / self.access_count

    def to_dict(self) -> t.Dict[str, t.Any]:
        """Return dictionary representation of object."""
        return {
            "hit_count": self.hit_count,
            "miss_count": self.miss_count,
            "eviction_count": self.eviction_count,
            "entry_count": self.entry_count,
            "access_count": self.access_count,
            "hit_rate": self.hit_rate,
        }

    def __iter__(self):
        return iter(self.to_dict().items())

    def copy(self) -> "CacheStats":
        """Return copy of this object."""
        return dataclasses.replace(self)


class CacheStatsTracker:
    """Thread-safe counters attached to one cache."""

    _lock: RLock

    def __init__(self, cache: "ResultCache", *, enable: bool = True) -> None:
        self._cache = cache
        self._lock = RLock()
        self._stats = CacheStats()
        self._enabled = enable

    def __repr__(self):
        return f"{self.__class__.__name__}(info={self.info()!r})"

    @property
    def enabled(self) -> bool:
        return self._enabled

    def enable(self) -> None:
        """Start counting."""
        with self._lock:
            self._enabled = True

    def disable(self) -> None:
        """Stop counting and discard the counters."""
        with self._lock:
            self._enabled = False
            self._stats = CacheStats()

    def reset(self) -> None:
        """Zero the counters."""
        with self._lock:
            self._stats = CacheStats()

    def record(self, *, hits: int = 0, misses: int = 0, evictions: int = 0) -> None:
        if not self._enabled:
            return
        with self._lock:
            self._stats.hit_count += hits
            self._stats.miss_count += misses
            self._stats.eviction_count += evictions

    def info(self) -> CacheStats:
        """Return a snapshot that includes the current entry count."""
        with self._lock:
            stats = self._stats.copy()
            stats.entry_count = len(self._cache)
            return stats
