import pytest

from localqft import ResultCache
from localqft.stats import CacheStats, CacheStatsTracker


parametrize = pytest.mark.parametrize


@pytest.fixture
def cache() -> ResultCache:
    return ResultCache(maxsize=2)


def test_cache_stats__enabled_by_default(cache: ResultCache):
    """Test that result caches count accesses unless told otherwise."""
    assert cache.stats.enabled
    assert not ResultCache(enable_stats=False).stats.enabled


def test_cache_stats__counts(cache: ResultCache):
    """Test that hits, misses, evictions and entries are counted."""
    cache.get("a")
    cache.set("a", 1)
    cache.get("a")
    cache.get("a")
    cache.set("b", 2)
    cache.set("c", 3)

    info = cache.stats.info()
    assert info.hit_count == 2
    assert info.miss_count == 1
    assert info.eviction_count == 1
    assert info.entry_count == 2
    assert info.access_count == 3
    assert info.hit_rate == pytest.approx(2 / 3)


def test_cache_stats__disable_resets(cache: ResultCache):
    """Test that disabling discards the counters and stops counting."""
    cache.get("a")
    cache.stats.disable()
    cache.get("a")
    assert cache.stats.info().miss_count == 0

    cache.stats.enable()
    cache.get("a")
    assert cache.stats.info().miss_count == 1


def test_cache_stats__reset(cache: ResultCache):
    """Test that reset zeroes counters but keeps counting."""
    cache.get("a")
    cache.stats.reset()
    assert cache.stats.info().miss_count == 0
    cache.get("a")
    assert cache.stats.info().miss_count == 1


def test_cache_stats__info_is_snapshot(cache: ResultCache):
    """Test that info() is not affected by later accesses."""
    info = cache.stats.info()
    cache.get("a")
    assert info.miss_count == 0


@parametrize(
    "stats, expected",
    [
        (
            CacheStats(),
            {
                "hit_count": 0,
                "miss_count": 0,
                "eviction_count": 0,
                "entry_count": 0,
                "access_count": 0,
                "hit_rate": 0.0,
            },
        ),
        (
            CacheStats(hit_count=3, miss_count=1, eviction_count=2, entry_count=5),
            {
                "hit_count": 3,
                "miss_count": 1,
                "eviction_count": 2,
                "entry_count": 5,
                "access_count": 4,
                "hit_rate": 0.75,
            },
        ),
    ],
)
def test_cache_stats__to_dict(stats: CacheStats, expected: dict):
    """Test that to_dict() and iteration expose every counter."""
    assert stats.to_dict() == expected
    assert dict(stats) == expected


def test_cache_stats__copy():
    """Test that copy() returns an independent object."""
    stats = CacheStats(hit_count=1)
    copied = stats.copy()
    copied.hit_count = 5
    assert stats.hit_count == 1


def test_cache_stats_tracker__repr(cache: ResultCache):
    """Test that the tracker repr shows its snapshot."""
    tracker = CacheStatsTracker(cache)
    assert repr(tracker) == f"CacheStatsTracker(info={tracker.info()!r})"
