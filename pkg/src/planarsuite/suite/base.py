"""Task base class, task registry and shared model-file helpers."""

import collections
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, Iterator, List, Mapping, Optional, Set, Tuple

import numpy as np

from ..environment import ArraySpec, ControlEnvironment, observation_spec_from
from ..errors import NameLookupError
from ..mjcf import JointType
from ..physics import Physics

logger = logging.getLogger(__name__)

MODELS_DIR = Path(__file__).parent / "models"

BENCHMARKING = "benchmarking"
EXTRA = "extra"


def read_model(name: str) -> str:
    """Contents of a shipped ``<name>.mjcf.xml`` model file."""
    return (MODELS_DIR / f"{name}.mjcf.xml").read_text(encoding="utf-8")


class Task(ABC):
    """Initial-state distribution, reward and observations of one task."""

    #: Rewards are exactly 0 or 1.
    sparse: bool = False

    def action_spec(self, physics: Physics) -> ArraySpec:
        """One entry per actuator; bounded by the control ranges when limited."""
        model = physics.model
        if model.nu and bool(np.all(model.actuator_ctrllimited)):
            return ArraySpec(
                shape=(model.nu,),
                name="action",
                minimum=model.actuator_ctrlrange[:, 0],
                maximum=model.actuator_ctrlrange[:, 1],
            )
        return ArraySpec(shape=(model.nu,), name="action")

    def observation_spec(self, physics: Physics) -> "collections.OrderedDict[str, ArraySpec]":
        return observation_spec_from(self.get_observation(physics))

    @abstractmethod
    def initialize_episode(self, physics: Physics, rng: np.random.Generator) -> None:
        """Write an initial state; called inside ``physics.reset_context()``."""
        pass

    @abstractmethod
    def get_observation(self, physics: Physics) -> "collections.OrderedDict[str, np.ndarray]":
        """Named observation arrays of the current state."""
        pass

    @abstractmethod
    def get_reward(self, physics: Physics) -> float:
        """Reward of the transition that produced the current state."""
        pass

    def action_transform(self, action: np.ndarray) -> np.ndarray:
        """Map an agent action to actuator controls."""
        return action

    def before_step(self, action: np.ndarray, physics: Physics) -> None:
        physics.set_control(self.action_transform(action))

    def after_step(self, physics: Physics) -> None:
        pass

    def get_termination(self, physics: Physics) -> Optional[float]:
        """Discount to emit on early termination, or ``None`` to continue."""
        return None

    def get_discount(self, physics: Physics) -> float:
        return 1.0


def uniform_hinges(physics: Physics, rng: np.random.Generator) -> None:
    """Sample every hinge inside its range, or uniformly in [-pi, pi) when unlimited."""
    model = physics.model
    for j, joint_type in enumerate(model.jnt_type):
        if joint_type is not JointType.HINGE:
            continue
        low, high = model.jnt_range[j]
        if np.isfinite(low) and np.isfinite(high):
            physics.data.qpos[j] = rng.uniform(low, high)
        else:
            physics.data.qpos[j] = rng.uniform(-np.pi, np.pi)


EnvFactory = Callable[..., ControlEnvironment]


class TaggedTasks:
    """Ordered registry of environment factories with tag support."""

    def __init__(self) -> None:
        self._factories: Dict[str, EnvFactory] = {}
        self._tag_registry: Dict[str, List[str]] = {}  # tag -> ordered task names
        self._key_tags: Dict[str, Set[str]] = {}  # task name -> tags

    def add(self, *tags: str) -> Callable[[EnvFactory], EnvFactory]:
        """Decorator registering a factory under its function name."""

        def register(factory: EnvFactory) -> EnvFactory:
            name = factory.__name__
            self._factories[name] = factory
            self._key_tags[name] = set(tags)
            for tag in tags:
                self._tag_registry.setdefault(tag, []).append(name)
            return factory

        return register

    def get(self, name: str) -> EnvFactory:
        try:
            return self._factories[name]
        except KeyError:
            raise NameLookupError(f"No task '{name}'; available: {', '.join(self._factories)}")

    def tagged(self, tag: str) -> Tuple[str, ...]:
        """Task names carrying ``tag``, in registration order."""
        return tuple(self._tag_registry.get(tag, ()))

    def tags_of(self, name: str) -> Set[str]:
        return set(self._key_tags.get(name, set()))

    def names(self) -> Tuple[str, ...]:
        return tuple(self._factories)

    def __contains__(self, name: object) -> bool:
        return name in self._factories

    def __iter__(self) -> Iterator[str]:
        return iter(self._factories)

    def __len__(self) -> int:
        return len(self._factories)


@dataclass(frozen=True)
class TaskDef:
    """Catalog entry of one ``(domain, task)`` pair."""

    domain: str
    task: str
    factory: EnvFactory = field(repr=False)
    tags: Tuple[str, ...] = ()

    def make(self, seed: Optional[int] = None, **kwargs: Any) -> ControlEnvironment:
        return self.factory(seed=seed, **kwargs)


def make_environment(
    physics: Physics,
    task: Task,
    seed: Optional[int],
    environment_kwargs: Optional[Mapping[str, Any]],
    name: str,
) -> ControlEnvironment:
    """Build a ``ControlEnvironment`` with suite defaults and caller overrides."""
    kwargs = dict(environment_kwargs or {})
    kwargs = {key: value for key, value in kwargs.items() if value is not None}
    return ControlEnvironment(physics, task, seed=seed, name=name, **kwargs)
