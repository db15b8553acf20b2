"""Episodic environment contract: specs, time steps and the control environment."""

import collections
import enum
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any, Dict, Mapping, NamedTuple, Optional, Tuple, Union

import numpy as np

from .errors import ContractError, EpisodeProtocolError, ParameterError

if TYPE_CHECKING:
    from .physics import Physics
    from .suite.base import Task

logger = logging.getLogger(__name__)

DEFAULT_EPISODE_LENGTH = 1000
DEFAULT_SUB_STEPS = 4


@dataclass(frozen=True, eq=False)
class ArraySpec:
    """Shape, dtype and optional elementwise bounds of an array."""

    shape: Tuple[int, ...]
    dtype: Any = np.float64
    name: str = ""
    minimum: Optional[np.ndarray] = None
    maximum: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        shape = tuple(int(s) for s in self.shape)
        if any(s < 0 for s in shape):
            raise ParameterError(f"Spec '{self.name}' has a negative dimension: {shape}")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "dtype", np.dtype(self.dtype))
        for attribute in ("minimum", "maximum"):
            value = getattr(self, attribute)
            if value is not None:
                bound = np.broadcast_to(np.asarray(value, dtype=float), shape).copy()
                bound.flags.writeable = False
                object.__setattr__(self, attribute, bound)
        if self.minimum is not None and self.maximum is not None:
            if np.any(self.minimum > self.maximum):
                raise ParameterError(f"Spec '{self.name}' has minimum > maximum")

    @property
    def bounded(self) -> bool:
        return (
            self.minimum is not None
            and self.maximum is not None
            and bool(np.all(np.isfinite(self.minimum)))
            and bool(np.all(np.isfinite(self.maximum)))
        )

    @property
    def size(self) -> int:
        return int(np.prod(self.shape)) if self.shape else 1

    def validate(self, value: Any) -> np.ndarray:
        """Return ``value`` as an array of this spec's shape or raise ``ContractError``."""
        array = np.asarray(value, dtype=self.dtype)
        if array.shape != self.shape:
            raise ContractError(
                f"'{self.name}' expects shape {self.shape}, got {array.shape}"
            )
        return array

    def clip(self, value: np.ndarray) -> np.ndarray:
        if self.minimum is None and self.maximum is None:
            return value
        return np.clip(value, self.minimum, self.maximum)

    def generate_value(self) -> np.ndarray:
        return np.zeros(self.shape, dtype=self.dtype)


class StepType(enum.IntEnum):
    FIRST = 0
    MID = 1
    LAST = 2

    def first(self) -> bool:
        return self is StepType.FIRST

    def mid(self) -> bool:
        return self is StepType.MID

    def last(self) -> bool:
        return self is StepType.LAST


class TimeStep(NamedTuple):
    """One record of the agent-environment exchange.

    ``reward`` and ``discount`` are ``None`` exactly on FIRST steps.
    """

    step_type: StepType
    reward: Optional[float]
    discount: Optional[float]
    observation: Mapping[str, np.ndarray]

    def first(self) -> bool:
        return self.step_type is StepType.FIRST

    def mid(self) -> bool:
        return self.step_type is StepType.MID

    def last(self) -> bool:
        return self.step_type is StepType.LAST


def discount_from_time_constant(time_constant: float, timestep: float) -> float:
    """``gamma = exp(-h / tau)`` for control timestep ``h``."""
    if time_constant <= 0 or timestep <= 0:
        raise ParameterError("time constant and timestep must be positive")
    return math.exp(-timestep / time_constant)


def time_constant_from_discount(discount: float, timestep: float) -> float:
    """Inverse of ``discount_from_time_constant``."""
    if not 0.0 < discount < 1.0:
        raise ParameterError(f"discount must lie in (0, 1), got {discount}")
    return -timestep / math.log(discount)


def flatten_observation(observation: Mapping[str, Any]) -> np.ndarray:
    """Concatenate an observation map into one vector, in key order."""
    if not observation:
        return np.zeros(0)
    return np.concatenate([np.asarray(value, dtype=float).ravel() for value in observation.values()])


class Environment(ABC):
    """Abstract episodic environment."""

    @abstractmethod
    def reset(self) -> TimeStep:
        """Start a new episode and return its FIRST time step."""
        pass

    @abstractmethod
    def step(self, action: Any) -> TimeStep:
        """Apply ``action`` for one control step."""
        pass

    @abstractmethod
    def action_spec(self) -> ArraySpec:
        """Spec of the actions accepted by ``step``."""
        pass

    @abstractmethod
    def observation_spec(self) -> "collections.OrderedDict[str, ArraySpec]":
        """Ordered specs of the observation entries."""
        pass

    def close(self) -> None:
        """Release resources; a no-op by default."""


class ControlEnvironment(Environment):
    """A ``Physics`` driven by a ``Task`` in fixed-length episodes."""

    def __init__(
        self,
        physics: "Physics",
        task: "Task",
        episode_length: int = DEFAULT_EPISODE_LENGTH,
        n_sub_steps: int = DEFAULT_SUB_STEPS,
        seed: Optional[Union[int, np.random.SeedSequence]] = None,
        visualize_reward: bool = False,
        name: str = "",
    ) -> None:
        """
        Initialize the environment.

        Args:
            physics: The simulation this environment owns
            task: Initial-state distribution, reward and observation logic
            episode_length: Control steps per episode
            n_sub_steps: Physics timesteps per control step
            seed: Seed of the environment's random stream
            visualize_reward: Tint rendered frames by the last reward
            name: Label used in log messages
        """
        if episode_length <= 0:
            raise ParameterError(f"episode_length must be positive, got {episode_length}")
        if n_sub_steps <= 0:
            raise ParameterError(f"n_sub_steps must be positive, got {n_sub_steps}")
        self._physics = physics
        self._task = task
        self._episode_length = episode_length
        self._n_sub_steps = n_sub_steps
        self._rng = np.random.default_rng(seed)
        self._visualize_reward = visualize_reward
        self._name = name or type(task).__name__
        self._step_count = 0
        self._needs_reset = True
        self._last_reward: Optional[float] = None
        self._action_spec = task.action_spec(physics)
        self._observation_spec = task.observation_spec(physics)

    @property
    def name(self) -> str:
        return self._name

    @property
    def physics(self) -> "Physics":
        return self._physics

    @property
    def task(self) -> "Task":
        return self._task

    @property
    def random(self) -> np.random.Generator:
        return self._rng

    @property
    def episode_length(self) -> int:
        return self._episode_length

    @property
    def n_sub_steps(self) -> int:
        return self._n_sub_steps

    @property
    def visualize_reward(self) -> bool:
        return self._visualize_reward

    def control_timestep(self) -> float:
        return self._physics.timestep * self._n_sub_steps

    def discount_from_time_constant(self, time_constant: float) -> float:
        return discount_from_time_constant(time_constant, self.control_timestep())

    def time_constant_from_discount(self, discount: float) -> float:
        return time_constant_from_discount(discount, self.control_timestep())

    def action_spec(self) -> ArraySpec:
        return self._action_spec

    def observation_spec(self) -> "collections.OrderedDict[str, ArraySpec]":
        return self._observation_spec

    def _observe(self) -> "collections.OrderedDict[str, np.ndarray]":
        observation = self._task.get_observation(self._physics)
        return collections.OrderedDict(
            (key, np.asarray(value, dtype=float).copy()) for key, value in observation.items()
        )

    def reset(self) -> TimeStep:
        self._step_count = 0
        self._last_reward = None
        with self._physics.reset_context():
            self._task.initialize_episode(self._physics, self._rng)
        self._needs_reset = False
        logger.debug("%s: episode reset at t=%.3f", self._name, self._physics.time)
        return TimeStep(StepType.FIRST, None, None, self._observe())

    def step(self, action: Any) -> TimeStep:
        if self._needs_reset:
            raise EpisodeProtocolError(
                "step() called before reset() or after the LAST time step; call reset() first"
            )
        action = self._action_spec.validate(action)
        if not np.all(np.isfinite(action)):
            raise ContractError(f"Action must be finite, got {action.tolist()}")
        action = self._action_spec.clip(action)

        self._task.before_step(action, self._physics)
        self._physics.step(self._n_sub_steps)
        self._task.after_step(self._physics)
        self._step_count += 1

        reward = float(self._task.get_reward(self._physics))
        self._last_reward = reward
        termination = self._task.get_termination(self._physics)
        observation = self._observe()
        if termination is not None:
            self._needs_reset = True
            return TimeStep(StepType.LAST, reward, float(termination), observation)
        discount = float(self._task.get_discount(self._physics))
        if self._step_count >= self._episode_length:
            self._needs_reset = True
            return TimeStep(StepType.LAST, reward, discount, observation)
        return TimeStep(StepType.MID, reward, discount, observation)

    def render(self, width: int = 320, height: int = 240, camera: Union[int, str] = -1) -> np.ndarray:
        """Frame of the current state, tinted by the last reward if enabled."""
        tint = None
        if self._visualize_reward:
            tint = 0.0 if self._last_reward is None else float(np.clip(self._last_reward, 0.0, 1.0))
        return self._physics.render(width, height, camera, reward_tint=tint)


def dimensions(env: Environment) -> Tuple[int, int, int]:
    """``(dim S, dim A, dim O)`` of an environment built on a physics."""
    physics = getattr(env, "physics")
    state = physics.model.nq + physics.model.nv
    action = env.action_spec().size
    observation = sum(spec.size for spec in env.observation_spec().values())
    return state, action, observation


def spec_from_value(name: str, value: Any) -> ArraySpec:
    array = np.asarray(value, dtype=float)
    return ArraySpec(shape=array.shape, dtype=np.float64, name=name)


def observation_spec_from(observation: Dict[str, Any]) -> "collections.OrderedDict[str, ArraySpec]":
    return collections.OrderedDict(
        (key, spec_from_value(key, value)) for key, value in observation.items()
    )
