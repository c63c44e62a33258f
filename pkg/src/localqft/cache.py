"""The cache module provides :class:`ResultCache`, a bounded least-recently-used store for expensive
numerical tabulations, and the content fingerprinting used to key it."""

from collections import OrderedDict
import dataclasses
from functools import wraps
import hashlib
import inspect
from threading import RLock
import typing as t

import numpy as np

from .stats import CacheStatsTracker


F = t.TypeVar("F", bound=t.Callable[..., t.Any])

#: Decorator type.
T_DECORATOR = t.Callable[[F], F]

#: Sentinel value to indicate that an argument was not set.
UNSET = object()


class ResultCache:
    """
    An in-memory, thread-safe, least-recently-used result cache.

    Entries are kept in an ``OrderedDict`` used as an eviction queue: :meth:`get` and :meth:`set`
    move an entry to the end and eviction pops from the front. Keys are usually produced by
    :func:`fingerprint` so that equal arrays and equal frozen dataclasses share an entry.

    Attributes:
        maxsize: Maximum number of entries. ``0`` means unbounded.
        stats: Cache statistics.
    """

    _cache: OrderedDict
    _lock: RLock

    def __init__(self, *, maxsize: int = 128, enable_stats: bool = True):
        self.maxsize = maxsize
        self.stats = CacheStatsTracker(self, enable=enable_stats)
        self._cache = OrderedDict()
        self._lock = RLock()
        self.configure(maxsize=maxsize)

    def configure(self, maxsize: t.Optional[int] = None) -> None:
        """Reconfigure the cache, evicting entries if it shrank."""
        if maxsize is not None:
            if not isinstance(maxsize, int):
                raise TypeError("maxsize must be an integer")
            if maxsize < 0:
                raise ValueError("maxsize must be greater than or equal to 0")
            self.maxsize = maxsize
        self.evict()

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(maxsize={self.maxsize}, size={len(self)})"

    def __len__(self) -> int:
        with self._lock:
            return len(self._cache)

    def __contains__(self, key: t.Hashable) -> bool:
        with self._lock:
            return key in self._cache

    def full(self) -> bool:
        """Return whether the cache is at its size bound."""
        if self.maxsize == 0:
            return False
        return len(self) >= self.maxsize

    def keys(self) -> t.List[t.Hashable]:
        """Return a snapshot of the keys, least recently used first."""
        with self._lock:
            return list(self._cache.keys())

    def clear(self) -> None:
        """Drop every entry."""
        with self._lock:
            self._cache.clear()

    def get(self, key: t.Hashable, default: t.Any = None) -> t.Any:
        """
        Return the cached value for `key` or `default` when absent.

        Args:
            key: Cache key.
            default: Value returned on a miss.
        """
        with self._lock:
            return self._get(key, default=default)

    def _get(self, key: t.Hashable, default: t.Any = None) -> t.Any:
        try:
            value = self._cache[key]
        except KeyError:
            self.stats.record(misses=1)
            return default
        self._cache.move_to_end(key)
        self.stats.record(hits=1)
        return value

    def set(self, key: t.Hashable, value: t.Any) -> None:
        """Store `value` under `key`, evicting the least recently used entry when full."""
        with self._lock:
            self._set(key, value)

    def _set(self, key: t.Hashable, value: t.Any) -> None:
        if key not in self._cache:
            self.evict(room=1)
        self._cache[key] = value
        self._cache.move_to_end(key)

    def delete(self, key: t.Hashable) -> int:
        """Delete `key` and return the number of entries removed."""
        with self._lock:
            if key in self._cache:
                del self._cache[key]
                return 1
            return 0

    def evict(self, room: int = 0) -> int:
        """
        Drop least recently used entries until `room` more entries fit.

        Returns:
            int: Number of entries evicted.
        """
        if self.maxsize == 0:
            return 0
        count = 0
        with self._lock:
            while self._cache and len(self._cache) + room > self.maxsize:
                self._cache.popitem(last=False)
                count += 1
        self.stats.record(evictions=count)
        return count

    def memoize(self) -> T_DECORATOR:
        """
        Decorator that caches a pure function's results under a fingerprint of its arguments.

        The cache object is available at ``<function>.cache``, the key function at
        ``<function>.cache_key`` and the original function at ``<function>.uncached``.
        """

        def decorator(func):
            prefix = f"{func.__module__}.{func.__qualname__}:"
            signature = inspect.signature(func)

            def cache_key(*args, **kwargs):
                bound = signature.bind(*args, **kwargs)
                bound.apply_defaults()
                return prefix + fingerprint(tuple(bound.arguments.items()))

            @wraps(func)
            def decorated(*args, **kwargs):
                key = cache_key(*args, **kwargs)
                value = self.get(key, default=UNSET)
                if value is UNSET:
                    value = func(*args, **kwargs)
                    self.set(key, value)
                return value

            decorated.cache = self
            decorated.cache_key = cache_key
            decorated.uncached = func

            return decorated

        return decorator


def fingerprint(value: t.Any) -> str:
    """
    Return a deterministic content digest for `value`.

    Objects that define ``cache_token()`` hash by its return value. Arrays hash by dtype, shape and
    bytes; dataclasses by their type and field values; floats by
    ``repr`` so that ``0.1`` and ``0.1 + 1e-17`` only collide when they are the same double.

    Example:

        >>> fingerprint((1, 2.5)) == fingerprint((1, 2.5))
        True
        >>> fingerprint(np.zeros(3)) == fingerprint(np.zeros(4))
        False
    """
    digest = hashlib.blake2b(digest_size=16)
    _feed(digest, value)
    return digest.hexdigest()


def _feed(digest: t.Any, value: t.Any) -> None:  # noqa: C901
    token = getattr(value, "cache_token", None)
    if callable(token) and not isinstance(value, type):
        digest.update(f"tok:{type(value).__qualname__}:".encode())
        _feed(digest, token())
    elif isinstance(value, np.ndarray):
        array = np.ascontiguousarray(value)
        digest.update(f"nd:{array.dtype.str}:{array.shape}:".encode())
        digest.update(array.tobytes())
    elif dataclasses.is_dataclass(value) and not isinstance(value, type):
        digest.update(f"dc:{type(value).__qualname__}(".encode())
        for field in dataclasses.fields(value):
            digest.update(f"{field.name}=".encode())
            _feed(digest, getattr(value, field.name))
        digest.update(b")")
    elif isinstance(value, (tuple, list)):
        digest.update(f"{type(value).__name__}[{len(value)}](".encode())
        for item in value:
            _feed(digest, item)
        digest.update(b")")
    elif isinstance(value, dict):
        digest.update(b"dict(")
        for key in sorted(value, key=repr):
            _feed(digest, key)
            _feed(digest, value[key])
        digest.update(b")")
    elif isinstance(value, (float, np.floating, complex, np.complexfloating)):
        digest.update(f"{type(value).__name__}:{value!r}".encode())
    elif value is None or isinstance(value, (bool, int, str, np.integer)):
        digest.update(f"{type(value).__name__}:{value!r}".encode())
    elif callable(value):
        name = getattr(value, "__qualname__", type(value).__qualname__)
        digest.update(f"fn:{getattr(value, '__module__', '')}.{name}".encode())
    else:
        digest.update(f"{type(value).__qualname__}:{value!r}".encode())
