from typing import Any, Dict, Iterable, Optional, Set

from . import ResultBackend


class MemoryResultStore(ResultBackend):
    """In-process result store with a tag index; the default backend."""

    def __init__(self) -> None:
        self._rows: Dict[str, Any] = {}
        self._tag_registry: Dict[str, Set[str]] = {}  # tag -> keys
        self._key_tags: Dict[str, Set[str]] = {}  # key -> tags

    def get(self, key: str) -> Any:
        """
        Retrieve a stored row by key.

        Args:
            key: Row key, e.g. ``cartpole/swingup/ddpg/0/100000``

        Returns:
            The row if present, None otherwise
        """
        return self._rows.get(key)

    def get_by_tag(self, tag: str) -> Dict[str, Any]:
        return {key: self._rows[key] for key in self._tag_registry.get(tag, ()) if key in self._rows}

    def getall(self) -> Dict[str, Any]:
        return self._rows.copy()

    def set(self, key: str, value: Any, tags: Optional[Iterable[str]] = None) -> None:
        """
        Store a row, replacing any previous row and tags under ``key``.

        Args:
            key: Row key
            value: The row
            tags: Tags such as ``task:cartpole:swingup`` or ``seed:3``
        """
        self._untag(key)
        self._rows[key] = value
        if tags:
            tag_set = set(tags)
            self._key_tags[key] = tag_set
            for tag in tag_set:
                self._tag_registry.setdefault(tag, set()).add(key)

    def delete(self, key: str) -> bool:
        if key not in self._rows:
            return False
        del self._rows[key]
        self._untag(key)
        return True

    def delete_by_tag(self, tag: str) -> int:
        """
        Remove all rows carrying ``tag``.

        Returns:
            The number of rows removed
        """
        return sum(1 for key in list(self._tag_registry.get(tag, ())) if self.delete(key))

    def exists(self, key: str) -> bool:
        return key in self._rows

    def _untag(self, key: str) -> None:
        for tag in self._key_tags.pop(key, ()):
            keys = self._tag_registry.get(tag)
            if keys is None:
                continue
            keys.discard(key)
            # Drop empty tag sets
            if not keys:
                del self._tag_registry[tag]
