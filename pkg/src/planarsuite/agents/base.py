from abc import ABC, abstractmethod
from typing import Dict

import numpy as np

from ..environment import TimeStep


class Agent(ABC):
    """Abstract base class for agents driven by the benchmark harness."""

    name: str = "agent"

    @property
    def is_learning(self) -> bool:
        """Whether ``update`` changes the policy."""
        return False

    def begin_episode(self) -> None:
        """Reset per-episode state (exploration noise, recurrent memory)."""
        pass

    @abstractmethod
    def select_action(self, time_step: TimeStep, explore: bool = True) -> np.ndarray:
        """Action for the observation in ``time_step``."""
        pass

    def observe(self, time_step: TimeStep, action: np.ndarray, next_time_step: TimeStep) -> None:
        """Record one transition."""
        pass

    def update(self) -> Dict[str, float]:
        """Run learning updates; returns diagnostics."""
        return {}
