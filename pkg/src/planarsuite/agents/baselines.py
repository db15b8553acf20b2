"""Non-learning reference agents: uniform random and LQR-optimal."""

import logging
from typing import Callable, Mapping, Optional

import numpy as np

from ..environment import ArraySpec, ControlEnvironment, TimeStep, flatten_observation
from ..errors import ConfigurationError
from ..lqr_solver import RiccatiSolution, solve_dare, task_system
from .base import Agent

logger = logging.getLogger(__name__)

StateFn = Callable[[Mapping[str, np.ndarray]], np.ndarray]


class RandomAgent(Agent):
    """
    Samples actions uniformly inside the action bounds.

    Unbounded action specs need ``unbounded_scale``; actions are then drawn
    from a zero-mean Gaussian with that standard deviation.
    """

    name = "random"

    def __init__(
        self,
        spec: ArraySpec,
        seed: Optional[int] = None,
        unbounded_scale: Optional[float] = None,
    ) -> None:
        if not spec.bounded and unbounded_scale is None:
            raise ConfigurationError(
                f"Action spec '{spec.name}' is unbounded; pass unbounded_scale or use the lqr agent"
            )
        self._spec = spec
        self._scale = unbounded_scale
        self._rng = np.random.default_rng(seed)

    def select_action(self, time_step: Optional[TimeStep] = None, explore: bool = True) -> np.ndarray:
        spec = self._spec
        if spec.bounded:
            return self._rng.uniform(spec.minimum, spec.maximum, size=spec.shape)
        return self._rng.normal(0.0, self._scale, size=spec.shape)


class LqrAgent(Agent):
    """
    Linear state feedback ``u = -K (x - setpoint)``.

    Args:
        solution: Riccati solution providing ``K``
        state_fn: Maps an observation to the state ``x``; defaults to the
            flattened observation, which is ``(q, v)`` for the LQR tasks
        setpoint: State to regulate to (the origin if None)
    """

    name = "lqr"

    def __init__(
        self,
        solution: RiccatiSolution,
        state_fn: Optional[StateFn] = None,
        setpoint: Optional[np.ndarray] = None,
    ) -> None:
        self.solution = solution
        self._K = solution.K.copy()
        self._state_fn = state_fn or flatten_observation
        self._setpoint = None if setpoint is None else np.asarray(setpoint, dtype=float)

    @classmethod
    def for_environment(cls, env: ControlEnvironment) -> "LqrAgent":
        """Solve the Riccati equation of an LQR task at its control rate."""
        solution = solve_dare(task_system(env))
        logger.info(
            "LQR gain solved in %d iterations (residual %.2e)", solution.iterations, solution.residual
        )
        return cls(solution)

    def state(self, observation: Mapping[str, np.ndarray]) -> np.ndarray:
        x = np.asarray(self._state_fn(observation), dtype=float)
        if self._setpoint is not None:
            x = x - self._setpoint
        return x

    def select_action(self, time_step: TimeStep, explore: bool = True) -> np.ndarray:
        return -self._K @ self.state(time_step.observation)
