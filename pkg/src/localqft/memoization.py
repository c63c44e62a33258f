"""Named result caches shared by the numerical modules.

Each memoized tabulation registers its own :class:`.ResultCache` under a name in the module level
:data:`caches` registry so that commands can report and clear them together.
"""

from threading import RLock
import typing as t

from .cache import T_DECORATOR, ResultCache
from .stats import CacheStats


#: Default number of entries per named cache.
DEFAULT_MAXSIZE = 64


class CacheRegistry:
    """
    Registry of named result caches.

    Example:

        >>> registry = CacheRegistry()
        >>> cache = registry.setdefault("spectral", maxsize=8)
        >>> registry["spectral"] is cache
        True
        >>> "overlaps" in registry
        False
    """

    def __init__(self) -> None:
        self._lock = RLock()
        self._caches: t.Dict[str, ResultCache] = {}

    def __contains__(self, name: str) -> bool:
        return name in self._caches

    def __getitem__(self, name: str) -> ResultCache:
        return self._caches[name]

    def __iter__(self) -> t.Iterator[str]:
        return iter(sorted(self._caches))

    def setdefault(self, name: str, maxsize: int = DEFAULT_MAXSIZE) -> ResultCache:
        """Return the cache registered as `name`, creating it on first use."""
        with self._lock:
            if name not in self._caches:
                self._caches[name] = ResultCache(maxsize=maxsize)
            return self._caches[name]

    def register(self, name: str, cache: ResultCache) -> None:
        """Install `cache` under `name`, replacing any previous one."""
        if not isinstance(cache, ResultCache):
            raise TypeError("cache must be a ResultCache")
        with self._lock:
            self._caches[name] = cache

    def clear(self) -> None:
        """Empty every registered cache."""
        with self._lock:
            for cache in self._caches.values():
                cache.clear()

    def stats(self) -> t.Dict[str, CacheStats]:
        """Return a statistics snapshot per cache name."""
        with self._lock:
            return {name: self._caches[name].stats.info() for name in sorted(self._caches)}


#: Process-wide registry used by :func:`memoize`.
caches = CacheRegistry()


def memoize(name: str, maxsize: int = DEFAULT_MAXSIZE) -> T_DECORATOR:
    """
    Memoize a pure function in the registry cache called `name`.

    Args:
        name: Registry name, shared by every function that should count against one bound.
        maxsize: Size bound used when the named cache is created.
    """
    return caches.setdefault(name, maxsize=maxsize).memoize()
