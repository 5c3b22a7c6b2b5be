"""File cache for sweep cells, so repeated sweeps skip cells already computed."""

import hashlib
import json
from pathlib import Path
from typing import Any, Optional

from config import CACHE_DIR, logger


class SimpleCache:
    """A simple file-based JSON cache keyed by the SHA-256 of a string."""

    def __init__(self, cache_dir: str | Path = CACHE_DIR):
        self.cache_dir = Path(cache_dir)

    def _get_cache_path(self, key: str) -> Path:
        key_hash = hashlib.sha256(key.encode()).hexdigest()
        return self.cache_dir / f"{key_hash}.json"

    def get(self, key: str) -> Optional[Any]:
        """Retrieve a value from cache."""
        cache_path = self._get_cache_path(key)
        try:
            if cache_path.exists():
                with open(cache_path, "r") as f:
                    data = json.load(f)
                if data.get("key") == key:
                    logger.debug(f"Cache hit for key: {key[:80]}")
                    return data.get("value")
        except (OSError, ValueError) as e:
            logger.debug(f"Cache read error for key {key[:80]}: {e}")
        return None

    def set(self, key: str, value: Any) -> None:
        """Store a value in cache."""
        cache_path = self._get_cache_path(key)
        try:
            self.cache_dir.mkdir(parents=True, exist_ok=True)
            with open(cache_path, "w") as f:
                json.dump({"key": key, "value": value}, f)
            logger.debug(f"Cache set for key: {key[:80]}")
        except (OSError, TypeError, ValueError) as e:
            logger.debug(f"Cache write error for key {key[:80]}: {e}")

    def clear(self) -> None:
        """Clear all cache files."""
        try:
            for cache_file in self.cache_dir.glob("*.json"):
                cache_file.unlink()
            logger.info("Cache cleared")
        except OSError as e:
            logger.error(f"Error clearing cache: {e}")


# Global cache instance
cache = SimpleCache()


def sweep_cell_key(quantity: str, spectrum: Any, weights: Any, samples: list[int], depth: int) -> str:
    return f"sweep:{quantity}:{spectrum!r}:{weights!r}:{samples}:{depth}"


def cached_sweep_cell(key: str, store: SimpleCache = cache) -> Optional[list]:
    """Get cached [n, value, tail] rows of a sweep cell if available."""
    return store.get(key)


def cache_sweep_cell(key: str, rows: list, store: SimpleCache = cache) -> None:
    """Cache the rows of a sweep cell for future runs."""
    store.set(key, rows)
