"""Reacher domain: a two-link planar arm touching a randomly placed target."""

import collections
from typing import Any, Mapping, Optional

import numpy as np

from .. import rewards
from ..environment import ControlEnvironment
from ..mjcf import CompiledModel, compile_model, parse_model, replace_geom
from ..physics import Physics
from .base import BENCHMARKING, TaggedTasks, Task, make_environment, read_model

SUITE = TaggedTasks()

BIG_TARGET = 0.05
SMALL_TARGET = 0.015
_TARGET_RADIUS = (0.05, 0.20)


def get_model(target_size: float = BIG_TARGET) -> CompiledModel:
    """Reacher model with the target sphere resized to ``target_size``."""
    spec = parse_model(read_model("reacher"))
    if target_size != BIG_TARGET:
        spec = replace_geom(spec, "target", size=(float(target_size),))
    return compile_model(spec)


def finger_to_target(physics: Physics) -> np.ndarray:
    """Vector from the finger tip to the target in the x-z plane."""
    offset = physics.named.data.geom_xpos["target"] - physics.named.data.geom_xpos["finger"]
    return offset[[0, 2]]


def finger_to_target_dist(physics: Physics) -> float:
    return float(np.linalg.norm(finger_to_target(physics)))


class Reacher(Task):
    """Touch the target with the finger; the target moves every episode."""

    sparse = True

    def initialize_episode(self, physics: Physics, rng: np.random.Generator) -> None:
        physics.named.data.qpos[["shoulder", "wrist"]] = rng.uniform(-np.pi, np.pi, size=2)
        angle = rng.uniform(0.0, 2.0 * np.pi)
        radius = rng.uniform(*_TARGET_RADIUS)
        physics.named.data.mocap_pos["target"] = [radius * np.sin(angle), 0.0, radius * np.cos(angle)]

    def get_observation(self, physics: Physics) -> "collections.OrderedDict[str, np.ndarray]":
        obs = collections.OrderedDict()
        obs["position"] = physics.data.qpos.copy()
        obs["to_target"] = finger_to_target(physics)
        obs["velocity"] = physics.data.qvel.copy()
        obs["target_size"] = np.array([physics.named.model.geom_size["target", "x"]])
        return obs

    def get_reward(self, physics: Physics) -> float:
        radii = physics.named.model.geom_size[["target", "finger"], "x"].sum()
        return float(rewards.tolerance(finger_to_target_dist(physics), (0.0, radii)))


@SUITE.add(BENCHMARKING)
def easy(seed: Optional[int] = None, environment_kwargs: Optional[Mapping[str, Any]] = None) -> ControlEnvironment:
    """Returns reacher with a large target."""
    return make_environment(
        Physics(get_model(BIG_TARGET)), Reacher(), seed, environment_kwargs, "reacher:easy"
    )


@SUITE.add(BENCHMARKING)
def hard(seed: Optional[int] = None, environment_kwargs: Optional[Mapping[str, Any]] = None) -> ControlEnvironment:
    """Returns reacher with a small target."""
    return make_environment(
        Physics(get_model(SMALL_TARGET)), Reacher(), seed, environment_kwargs, "reacher:hard"
    )
