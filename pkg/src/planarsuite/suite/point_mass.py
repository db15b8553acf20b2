"""Point-mass domain: push a planar mass onto a target at the arena centre."""

import collections
from typing import Any, Mapping, Optional

import numpy as np

from .. import rewards
from ..environment import ControlEnvironment
from ..mjcf import CompiledModel, from_xml_string
from ..physics import Physics
from .base import BENCHMARKING, EXTRA, TaggedTasks, Task, make_environment, read_model

SUITE = TaggedTasks()

_MIN_GAIN_DETERMINANT = 0.2


def get_model() -> CompiledModel:
    return from_xml_string(read_model("point_mass"))


def mass_to_target(physics: Physics) -> np.ndarray:
    """Vector from the mass to the target in the x-z plane."""
    offset = physics.named.data.geom_xpos["target"] - physics.named.data.geom_xpos["pointmass"]
    return offset[[0, 2]]


def mass_to_target_dist(physics: Physics) -> float:
    return float(np.linalg.norm(mass_to_target(physics)))


def sample_gain(rng: np.random.Generator) -> np.ndarray:
    """A random 2x2 actuation gain that stays well conditioned."""
    while True:
        gain = rng.uniform(-1.0, 1.0, size=(2, 2))
        if abs(np.linalg.det(gain)) > _MIN_GAIN_DETERMINANT:
            return gain


class PointMass(Task):
    """
    Reach the target with the point mass.

    With ``randomize_gains`` the actions reach the actuators through a random
    2x2 gain that is resampled every episode and never observed.
    """

    def __init__(self, randomize_gains: bool) -> None:
        self._randomize_gains = randomize_gains
        self._gain = np.eye(2)

    @property
    def gain(self) -> np.ndarray:
        return self._gain.copy()

    def initialize_episode(self, physics: Physics, rng: np.random.Generator) -> None:
        model = physics.model
        physics.data.qpos[:] = rng.uniform(model.jnt_range[:, 0], model.jnt_range[:, 1])
        if self._randomize_gains:
            self._gain = sample_gain(rng)

    def action_transform(self, action: np.ndarray) -> np.ndarray:
        return self._gain @ action

    def get_observation(self, physics: Physics) -> "collections.OrderedDict[str, np.ndarray]":
        obs = collections.OrderedDict()
        obs["position"] = physics.data.qpos.copy()
        obs["velocity"] = physics.data.qvel.copy()
        return obs

    def get_reward(self, physics: Physics) -> float:
        target_size = physics.named.model.geom_size["target", "x"]
        near_target = rewards.tolerance(
            mass_to_target_dist(physics), bounds=(0.0, target_size), margin=target_size * 4
        )
        control = physics.control()
        small_control = rewards.tolerance(
            control, margin=1.0, value_at_margin=0.0, sigmoid="quadratic"
        )
        small_control = (4.0 + float(np.mean(small_control))) / 5.0
        return float(near_target * small_control)


@SUITE.add(BENCHMARKING)
def easy(seed: Optional[int] = None, environment_kwargs: Optional[Mapping[str, Any]] = None) -> ControlEnvironment:
    """Returns the easy point-mass task."""
    return make_environment(
        Physics(get_model()), PointMass(randomize_gains=False), seed, environment_kwargs, "point_mass:easy"
    )


@SUITE.add(EXTRA)
def hard(seed: Optional[int] = None, environment_kwargs: Optional[Mapping[str, Any]] = None) -> ControlEnvironment:
    """Returns the point-mass task with hidden random actuation gains."""
    return make_environment(
        Physics(get_model()), PointMass(randomize_gains=True), seed, environment_kwargs, "point_mass:hard"
    )
