"""Acrobot domain: a two-link pendulum actuated only at the elbow."""

import collections
from typing import Any, Mapping, Optional

import numpy as np

from .. import rewards
from ..environment import ControlEnvironment
from ..mjcf import CompiledModel, from_xml_string
from ..physics import Physics
from .base import BENCHMARKING, TaggedTasks, Task, make_environment, read_model

SUITE = TaggedTasks()

_LINKS = ["upper_arm", "lower_arm"]
_HEIGHT_MARGIN = 4.0


def get_model() -> CompiledModel:
    return from_xml_string(read_model("acrobot"))


def orientations(physics: Physics) -> np.ndarray:
    """Cosines and sines of both absolute link angles."""
    xmat = physics.named.data.xmat
    return np.concatenate([xmat[_LINKS, "zz"], xmat[_LINKS, "xz"]])


def tip_position(physics: Physics) -> np.ndarray:
    return physics.named.data.site_xpos["tip"].copy()


def to_target(physics: Physics) -> float:
    tip = tip_position(physics)
    target = physics.named.data.geom_xpos["target"]
    return float(np.hypot(tip[0] - target[0], tip[2] - target[2]))


class Balance(Task):
    """Raise the tip to the target above the shoulder."""

    def __init__(self, sparse: bool) -> None:
        self.sparse = sparse

    def initialize_episode(self, physics: Physics, rng: np.random.Generator) -> None:
        physics.named.data.qpos[["shoulder", "elbow"]] = rng.uniform(-np.pi, np.pi, size=2)

    def get_observation(self, physics: Physics) -> "collections.OrderedDict[str, np.ndarray]":
        obs = collections.OrderedDict()
        obs["orientations"] = orientations(physics)
        obs["velocity"] = physics.data.qvel.copy()
        return obs

    def get_reward(self, physics: Physics) -> float:
        target = physics.named.model.geom_size["target", "x"]
        if self.sparse:
            return float(rewards.tolerance(to_target(physics), (0.0, target)))
        height = tip_position(physics)[2]
        target_height = physics.named.data.geom_xpos["target", "z"]
        return float(
            rewards.tolerance(height, (target_height - target, np.inf), margin=_HEIGHT_MARGIN)
        )


@SUITE.add(BENCHMARKING)
def swingup(
    seed: Optional[int] = None, environment_kwargs: Optional[Mapping[str, Any]] = None
) -> ControlEnvironment:
    """Returns acrobot swingup with a smooth tip-height reward."""
    return make_environment(
        Physics(get_model()), Balance(sparse=False), seed, environment_kwargs, "acrobot:swingup"
    )


@SUITE.add(BENCHMARKING)
def swingup_sparse(
    seed: Optional[int] = None, environment_kwargs: Optional[Mapping[str, Any]] = None
) -> ControlEnvironment:
    """Returns acrobot swingup with a sparse reward inside the target."""
    return make_environment(
        Physics(get_model()), Balance(sparse=True), seed, environment_kwargs, "acrobot:swingup_sparse"
    )
