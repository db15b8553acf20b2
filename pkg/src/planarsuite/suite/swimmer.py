"""Procedurally generated k-link planar swimmer in a viscous fluid."""

import collections
import dataclasses
from typing import Any, Mapping, Optional

import numpy as np

from .. import rewards
from ..environment import ControlEnvironment
from ..errors import ParameterError
from ..mjcf import (
    ActuatorSpec,
    BodySpec,
    CompiledModel,
    GeomSpec,
    GeomType,
    JointSpec,
    JointType,
    ModelSpec,
    compile_model,
    parse_model,
)
from ..physics import Physics
from .base import BENCHMARKING, TaggedTasks, Task, make_environment, read_model, uniform_hinges

SUITE = TaggedTasks()

MIN_LINKS = 3
MAX_LINKS = 20
_SEGMENT_LENGTH = 0.1
_JOINT_LIMIT = 1.745
_MOTOR_GEAR = 0.02
_TARGET_EXTENT = 1.0
# Shaping margin of the reward, in body lengths.
REWARD_MARGIN_BODY_LENGTHS = 5


def _segment(index: int, children: tuple) -> BodySpec:
    return BodySpec(
        name=f"segment_{index}",
        pos=(-_SEGMENT_LENGTH, 0.0, 0.0),
        joints=(
            JointSpec(
                name=f"joint_{index}",
                type=JointType.HINGE,
                axis=(0.0, 1.0, 0.0),
                range=(-_JOINT_LIMIT, _JOINT_LIMIT),
                damping=0.01,
                armature=0.01,
            ),
        ),
        geoms=(
            GeomSpec(
                name=f"segment_{index}",
                type=GeomType.CAPSULE,
                size=(0.01,),
                fromto=(0.0, 0.0, 0.0, -_SEGMENT_LENGTH, 0.0, 0.0),
                material="self",
            ),
        ),
        children=children,
    )


def swimmer_spec(n_links: int = 3) -> ModelSpec:
    """
    Swimmer model with ``n_links`` capsule links.

    The head carries a planar free base (x, z slides and a y hinge); each of
    the ``n_links - 1`` following segments is attached by an actuated hinge.

    Args:
        n_links: Number of links, 3 to 20

    Returns:
        The model specification
    """
    if not MIN_LINKS <= n_links <= MAX_LINKS:
        raise ParameterError(f"n_links must be in [{MIN_LINKS}, {MAX_LINKS}], got {n_links}")
    spec = parse_model(read_model("swimmer"))

    tail: tuple = ()
    for index in range(n_links - 1, 0, -1):
        tail = (_segment(index, tail),)

    worldbody = dataclasses.replace(
        spec.worldbody,
        children=tuple(
            dataclasses.replace(body, children=body.children + tail) if body.name == "head" else body
            for body in spec.worldbody.children
        ),
    )
    actuators = tuple(
        ActuatorSpec(name=f"motor_{index}", joint=f"joint_{index}", gear=_MOTOR_GEAR)
        for index in range(1, n_links)
    )
    return dataclasses.replace(
        spec, model=f"swimmer_{n_links}", worldbody=worldbody, actuators=actuators
    )


def generate_swimmer(n_links: int = 3) -> CompiledModel:
    """Compiled swimmer model (see ``swimmer_spec``)."""
    return compile_model(swimmer_spec(n_links))


def link_names(physics: Physics) -> list:
    names = physics.model.names["body"]
    return ["head"] + [name for name in names if name.startswith("segment_")]


def body_length(physics: Physics) -> float:
    """Nose-to-tail length of the straightened swimmer."""
    return len(link_names(physics)) * _SEGMENT_LENGTH


def nose_to_target(physics: Physics) -> np.ndarray:
    """Target position relative to the nose, in the head's x-z frame."""
    head = physics.named.data.xmat["head"].reshape(3, 3)
    offset = physics.named.data.geom_xpos["target"] - physics.named.data.site_xpos["nose"]
    return (head.T @ offset)[[0, 2]]


def nose_to_target_dist(physics: Physics) -> float:
    return float(np.linalg.norm(nose_to_target(physics)))


def body_velocities(physics: Physics) -> np.ndarray:
    """Local-frame (vx, vz, angular velocity) of every link, head first."""
    velocities = []
    for name in link_names(physics):
        rotation = physics.named.data.xmat[name].reshape(3, 3)
        spatial = physics.body_velocity(name)
        local = rotation.T @ spatial[3:]
        velocities.append([local[0], local[2], spatial[1]])
    return np.asarray(velocities).ravel()


class Swimmer(Task):
    """Swim the nose into a target placed at random in the tank."""

    def initialize_episode(self, physics: Physics, rng: np.random.Generator) -> None:
        uniform_hinges(physics, rng)
        x, z = rng.uniform(-_TARGET_EXTENT, _TARGET_EXTENT, size=2)
        physics.named.data.mocap_pos["target"] = [x, 0.0, z]

    def get_observation(self, physics: Physics) -> "collections.OrderedDict[str, np.ndarray]":
        obs = collections.OrderedDict()
        obs["joints"] = physics.data.qpos[3:].copy()
        obs["to_target"] = nose_to_target(physics)
        obs["body_velocities"] = body_velocities(physics)
        return obs

    def get_reward(self, physics: Physics) -> float:
        target_size = physics.named.model.geom_size["target", "x"]
        return float(
            rewards.tolerance(
                nose_to_target_dist(physics),
                bounds=(0.0, target_size),
                margin=REWARD_MARGIN_BODY_LENGTHS * body_length(physics),
                sigmoid="long_tail",
            )
        )


def _make(n_links: int, seed: Optional[int], environment_kwargs: Optional[Mapping[str, Any]]) -> ControlEnvironment:
    return make_environment(
        Physics(generate_swimmer(n_links)), Swimmer(), seed, environment_kwargs, f"swimmer:swimmer{n_links}"
    )


@SUITE.add(BENCHMARKING)
def swimmer6(seed: Optional[int] = None, environment_kwargs: Optional[Mapping[str, Any]] = None) -> ControlEnvironment:
    """Returns the 6-link swimmer."""
    return _make(6, seed, environment_kwargs)


@SUITE.add(BENCHMARKING)
def swimmer15(seed: Optional[int] = None, environment_kwargs: Optional[Mapping[str, Any]] = None) -> ControlEnvironment:
    """Returns the 15-link swimmer."""
    return _make(15, seed, environment_kwargs)
