"""Storage backends for benchmark evaluation rows."""

from abc import ABC, abstractmethod
from typing import Any, Dict, Iterable, Optional


class ResultBackend(ABC):
    """Abstract base class for result-store backends."""

    @abstractmethod
    def get(self, key: str) -> Any:
        """Retrieve a stored row by key."""
        pass

    @abstractmethod
    def get_by_tag(self, tag: str) -> Dict[str, Any]:
        """Retrieve all rows carrying a specific tag."""
        pass

    @abstractmethod
    def getall(self) -> Dict[str, Any]:
        """Retrieve every stored row."""
        pass

    @abstractmethod
    def set(self, key: str, value: Any, tags: Optional[Iterable[str]] = None) -> None:
        """Store a row under ``key`` with optional tags."""
        pass

    @abstractmethod
    def delete(self, key: str) -> bool:
        """Remove a row by key."""
        pass

    @abstractmethod
    def delete_by_tag(self, tag: str) -> int:
        """Remove all rows carrying a specific tag."""
        pass

    @abstractmethod
    def exists(self, key: str) -> bool:
        """Check whether a key is stored."""
        pass
