"""Pendulum domain: swing a torque-limited pendulum up and balance it."""

import collections
import math
from typing import Any, Mapping, Optional

import numpy as np

from .. import rewards
from ..environment import ControlEnvironment
from ..mjcf import CompiledModel, from_xml_string
from ..physics import Physics
from .base import BENCHMARKING, TaggedTasks, Task, make_environment, read_model

SUITE = TaggedTasks()

_COSINE_BOUND = math.cos(math.radians(30))


def get_model() -> CompiledModel:
    return from_xml_string(read_model("pendulum"))


def pole_vertical(physics: Physics) -> float:
    """Cosine of the pole angle from upright."""
    return float(physics.named.data.xmat["pole", "zz"])


def pole_orientation(physics: Physics) -> np.ndarray:
    return physics.named.data.xmat["pole", ["zz", "xz"]].copy()


class SwingUp(Task):
    """Sparse reward while the pole is within 30 degrees of upright."""

    sparse = True

    def initialize_episode(self, physics: Physics, rng: np.random.Generator) -> None:
        physics.named.data.qpos["hinge"] = rng.uniform(-np.pi, np.pi)

    def get_observation(self, physics: Physics) -> "collections.OrderedDict[str, np.ndarray]":
        obs = collections.OrderedDict()
        obs["orientation"] = pole_orientation(physics)
        obs["velocity"] = physics.data.qvel.copy()
        return obs

    def get_reward(self, physics: Physics) -> float:
        return float(rewards.tolerance(pole_vertical(physics), (_COSINE_BOUND, 1.0)))


@SUITE.add(BENCHMARKING)
def swingup(
    seed: Optional[int] = None, environment_kwargs: Optional[Mapping[str, Any]] = None
) -> ControlEnvironment:
    """Returns the pendulum swingup task."""
    return make_environment(Physics(get_model()), SwingUp(), seed, environment_kwargs, "pendulum:swingup")
