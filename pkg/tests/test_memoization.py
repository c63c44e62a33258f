import pytest

from localqft import ResultCache
from localqft.memoization import CacheRegistry, caches, memoize


@pytest.fixture
def registry() -> CacheRegistry:
    return CacheRegistry()


def test_registry_setdefault(registry: CacheRegistry):
    """Test that setdefault() creates a cache once and returns it afterwards."""
    first = registry.setdefault("spectral", maxsize=4)
    second = registry.setdefault("spectral", maxsize=99)
    assert first is second
    assert first.maxsize == 4
    assert "spectral" in registry
    assert registry["spectral"] is first


def test_registry_register(registry: CacheRegistry):
    """Test that register() installs a cache and rejects other objects."""
    cache = ResultCache(maxsize=2)
    registry.register("overlaps", cache)
    assert registry["overlaps"] is cache

    with pytest.raises(TypeError):
        registry.register("overlaps", {})


def test_registry_iter_sorted(registry: CacheRegistry):
    """Test that iteration yields names in sorted order."""
    for name in ("b", "c", "a"):
        registry.setdefault(name)
    assert list(registry) == ["a", "b", "c"]


def test_registry_clear_and_stats(registry: CacheRegistry):
    """Test that clear() empties every cache and stats() reports per name."""
    registry.setdefault("a").set("k", 1)
    registry.setdefault("b").get("k")

    stats = registry.stats()
    assert list(stats) == ["a", "b"]
    assert stats["a"].entry_count == 1
    assert stats["b"].miss_count == 1

    registry.clear()
    assert len(registry["a"]) == 0


def test_memoize_uses_named_cache():
    """Test that memoize() shares the registry cache named on the decorator."""
    calls = []

    @memoize("test-memoize")
    def double(x):
        calls.append(x)
        return 2 * x

    try:
        assert double(3) == 6
        assert double(3) == 6
        assert calls == [3]
        assert double.cache is caches["test-memoize"]
        assert len(caches["test-memoize"]) == 1
    finally:
        caches["test-memoize"].clear()
