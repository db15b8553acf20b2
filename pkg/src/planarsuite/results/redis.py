import logging
import pickle
from typing import Any, Dict, Iterable, Optional

from . import ResultBackend

logger = logging.getLogger(__name__)


def _text(value: Any) -> str:
    return value.decode("utf-8") if isinstance(value, bytes) else value


class RedisResultStore(ResultBackend):
    """Result store shared through a Redis server, for multi-host sweeps."""

    def __init__(
        self,
        host: str = "localhost",
        port: int = 6379,
        db: int = 0,
        password: Optional[str] = None,
        prefix: str = "planar:",
    ) -> None:
        """
        Connect to Redis.

        Args:
            host: Redis server hostname
            port: Redis server port
            db: Redis database number
            password: Redis password (if required)
            prefix: Prefix of every key this store writes
        """
        try:
            import redis  # type: ignore
        except ImportError:
            logger.warning("The redis package is not installed")
            raise ImportError("Redis package is required. Install with: pip install redis")

        self.redis = redis.Redis(
            host=host,
            port=port,
            db=db,
            password=password,
            decode_responses=False,  # rows are pickled bytes
        )
        self.prefix = prefix
        self.tag_prefix = f"{prefix}tag:"
        self.key_tags_prefix = f"{prefix}key_tags:"

    def _row_key(self, key: str) -> str:
        return f"{self.prefix}{key}"

    def _tag_key(self, tag: str) -> str:
        return f"{self.tag_prefix}{tag}"

    def _key_tags_key(self, key: str) -> str:
        return f"{self.key_tags_prefix}{key}"

    def get(self, key: str) -> Any:
        value = self.redis.get(self._row_key(key))
        if value is None:
            return None
        return pickle.loads(value)

    def get_by_tag(self, tag: str) -> Dict[str, Any]:
        """
        Retrieve all rows carrying a specific tag.

        Args:
            tag: e.g. ``agent:ddpg``

        Returns:
            Mapping of row key to row
        """
        result: Dict[str, Any] = {}
        for member in self.redis.smembers(self._tag_key(tag)):
            key = _text(member)
            value = self.get(key)
            if value is not None:
                result[key] = value
        return result

    def getall(self) -> Dict[str, Any]:
        """Every row under this store's prefix, skipping the tag index."""
        result: Dict[str, Any] = {}
        for raw in self.redis.keys(f"{self.prefix}*"):
            name = _text(raw)
            if name.startswith(self.tag_prefix) or name.startswith(self.key_tags_prefix):
                continue
            value = self.redis.get(raw)
            if value is not None:
                result[name[len(self.prefix):]] = pickle.loads(value)
        return result

    def set(self, key: str, value: Any, tags: Optional[Iterable[str]] = None) -> None:
        """
        Store a row, replacing any previous row and tags under ``key``.

        Args:
            key: Row key
            value: The row
            tags: Tags to index the row under
        """
        self._untag(key)
        self.redis.set(self._row_key(key), pickle.dumps(value))

        tag_set = set(tags or ())
        if not tag_set:
            return
        self.redis.sadd(self._key_tags_key(key), *tag_set)
        for tag in tag_set:
            self.redis.sadd(self._tag_key(tag), key)

    def delete(self, key: str) -> bool:
        if not self.exists(key):
            return False
        self._untag(key)
        self.redis.delete(self._row_key(key))
        return True

    def delete_by_tag(self, tag: str) -> int:
        keys = [_text(member) for member in self.redis.smembers(self._tag_key(tag))]
        return sum(1 for key in keys if self.delete(key))

    def exists(self, key: str) -> bool:
        return bool(self.redis.exists(self._row_key(key)))

    def _untag(self, key: str) -> None:
        key_tags_key = self._key_tags_key(key)
        for member in self.redis.smembers(key_tags_key):
            tag_key = self._tag_key(_text(member))
            self.redis.srem(tag_key, key)
            if self.redis.scard(tag_key) == 0:
                self.redis.delete(tag_key)
        self.redis.delete(key_tags_key)
