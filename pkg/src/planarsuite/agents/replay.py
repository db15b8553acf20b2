"""Uniform experience replay with FIFO eviction."""

from typing import Dict, NamedTuple, Optional

import numpy as np

from ..errors import ContractError, ParameterError

DEFAULT_CAPACITY = 10**6
_INITIAL_ROWS = 1024


class Batch(NamedTuple):
    observation: np.ndarray
    action: np.ndarray
    reward: np.ndarray
    discount: np.ndarray
    next_observation: np.ndarray


class ReplayBuffer:
    """
    Ring buffer of ``(s, a, r, gamma, s')`` transitions.

    Storage grows geometrically up to ``capacity`` so small runs do not
    allocate the full buffer up front.
    """

    def __init__(
        self,
        capacity: int,
        observation_dim: int,
        action_dim: int,
        seed: Optional[int] = None,
        rng: Optional[np.random.Generator] = None,
    ) -> None:
        if capacity <= 0:
            raise ParameterError(f"capacity must be positive, got {capacity}")
        self.capacity = capacity
        self.observation_dim = observation_dim
        self.action_dim = action_dim
        self._rng = rng if rng is not None else np.random.default_rng(seed)
        self._cursor = 0
        self._size = 0
        self._allocate(min(capacity, _INITIAL_ROWS))

    def _allocate(self, rows: int, keep: bool = True) -> None:
        old = getattr(self, "_storage", None) if keep else None
        storage = {
            "observation": np.zeros((rows, self.observation_dim)),
            "action": np.zeros((rows, self.action_dim)),
            "reward": np.zeros(rows),
            "discount": np.zeros(rows),
            "next_observation": np.zeros((rows, self.observation_dim)),
        }
        if old is not None:
            for key, array in old.items():
                storage[key][: len(array)] = array
        self._storage: Dict[str, np.ndarray] = storage

    def __len__(self) -> int:
        return self._size

    @property
    def cursor(self) -> int:
        return self._cursor

    def add(
        self,
        observation: np.ndarray,
        action: np.ndarray,
        reward: float,
        discount: float,
        next_observation: np.ndarray,
    ) -> None:
        """Insert one transition, evicting the oldest when full."""
        observation = np.asarray(observation, dtype=float)
        next_observation = np.asarray(next_observation, dtype=float)
        action = np.asarray(action, dtype=float)
        if observation.shape != (self.observation_dim,) or next_observation.shape != (self.observation_dim,):
            raise ContractError(f"Observations must have shape ({self.observation_dim},)")
        if action.shape != (self.action_dim,):
            raise ContractError(f"Actions must have shape ({self.action_dim},), got {action.shape}")
        rows = len(self._storage["reward"])
        if self._cursor >= rows:
            self._allocate(min(self.capacity, 2 * rows))
        index = self._cursor
        self._storage["observation"][index] = observation
        self._storage["action"][index] = action
        self._storage["reward"][index] = reward
        self._storage["discount"][index] = discount
        self._storage["next_observation"][index] = next_observation
        self._cursor = (self._cursor + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def sample(self, batch_size: int) -> Batch:
        """Draw ``batch_size`` transitions uniformly with replacement."""
        if self._size == 0:
            raise ContractError("Cannot sample from an empty replay buffer")
        indices = self._rng.integers(0, self._size, size=batch_size)
        return self.gather(indices)

    def gather(self, indices: np.ndarray) -> Batch:
        s = self._storage
        return Batch(
            s["observation"][indices],
            s["action"][indices],
            s["reward"][indices],
            s["discount"][indices],
            s["next_observation"][indices],
        )

    def state_dict(self) -> Dict[str, object]:
        return {
            "capacity": self.capacity,
            "cursor": self._cursor,
            "size": self._size,
            "storage": {key: array[: self._size].copy() for key, array in self._storage.items()},
            "rng": self._rng.bit_generator.state,
        }

    def load_state_dict(self, state: Dict[str, object]) -> None:
        self.capacity = int(state["capacity"])  # type: ignore[arg-type]
        self._cursor = int(state["cursor"])  # type: ignore[arg-type]
        self._size = int(state["size"])  # type: ignore[arg-type]
        storage: Dict[str, np.ndarray] = state["storage"]  # type: ignore[assignment]
        # Loaded rows replace the current storage at any allocated size.
        self._allocate(max(min(self.capacity, _INITIAL_ROWS), self._size, self._cursor), keep=False)
        for key, array in storage.items():
            self._storage[key][: len(array)] = array
        self._rng.bit_generator.state = state["rng"]
