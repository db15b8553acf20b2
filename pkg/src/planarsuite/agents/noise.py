"""Temporally correlated exploration noise."""

from typing import Dict, Optional

import numpy as np

from ..errors import ParameterError


class OuNoise:
    """
    Ornstein-Uhlenbeck process ``x <- x + theta (mu - x) dt + sigma sqrt(dt) N(0, 1)``.

    Args:
        size: Dimension of the noise vector
        theta: Mean-reversion rate
        sigma: Diffusion scale
        mu: Long-run mean
        dt: Time increment per sample
    """

    def __init__(
        self,
        size: int,
        theta: float = 0.15,
        sigma: float = 0.3,
        mu: float = 0.0,
        dt: float = 1.0,
        seed: Optional[int] = None,
        rng: Optional[np.random.Generator] = None,
    ) -> None:
        if theta < 0 or sigma < 0 or dt <= 0:
            raise ParameterError("theta and sigma must be non-negative and dt positive")
        self.size = size
        self.theta = theta
        self.sigma = sigma
        self.mu = mu
        self.dt = dt
        self._rng = rng if rng is not None else np.random.default_rng(seed)
        self.x = np.full(size, mu, dtype=float)

    def reset(self) -> None:
        self.x = np.full(self.size, self.mu, dtype=float)

    def sample(self) -> np.ndarray:
        drift = self.theta * (self.mu - self.x) * self.dt
        diffusion = self.sigma * np.sqrt(self.dt) * self._rng.standard_normal(self.size)
        self.x = self.x + drift + diffusion
        return self.x.copy()

    def state_dict(self) -> Dict[str, object]:
        return {"x": self.x.copy(), "rng": self._rng.bit_generator.state}

    def load_state_dict(self, state: Dict[str, object]) -> None:
        self.x = np.array(state["x"], dtype=float)
        self._rng.bit_generator.state = state["rng"]
