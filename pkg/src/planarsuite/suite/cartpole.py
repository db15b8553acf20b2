"""Cart-pole domain and its procedurally generated cart-k-pole variants."""

import collections
import dataclasses
from typing import Any, Mapping, Optional

import numpy as np

from .. import rewards
from ..environment import ControlEnvironment
from ..errors import ParameterError
from ..mjcf import BodySpec, CompiledModel, ModelSpec, compile_model, parse_model
from ..physics import Physics
from .base import BENCHMARKING, EXTRA, TaggedTasks, Task, make_environment, read_model

SUITE = TaggedTasks()

MAX_POLES = 8
_POLE_LENGTH = 1.0
_CART_RANGE = (-0.25, 0.25)
_ANGLE_COSINE_RANGE = (0.995, 1.0)


def cart_k_pole_spec(num_poles: int = 1) -> ModelSpec:
    """
    The cart-pole model with ``num_poles`` poles hinged in series.

    Args:
        num_poles: Number of poles, 1 to 8; 1 is the shipped model unchanged

    Returns:
        The model specification
    """
    if not 1 <= num_poles <= MAX_POLES:
        raise ParameterError(f"num_poles must be in [1, {MAX_POLES}], got {num_poles}")
    spec = parse_model(read_model("cartpole"))
    if num_poles == 1:
        return spec

    cart = next(body for body in spec.worldbody.children if body.name == "cart")
    template = cart.children[0]
    hinge = template.joints[0]
    geom = template.geoms[0]

    def pole(index: int) -> BodySpec:
        children = (pole(index + 1),) if index < num_poles else ()
        return dataclasses.replace(
            template,
            name=f"pole_{index}",
            pos=(0.0, 0.0, _POLE_LENGTH) if index > 1 else template.pos,
            joints=(dataclasses.replace(hinge, name=f"hinge_{index}"),),
            geoms=(dataclasses.replace(geom, name=f"pole_{index}"),),
            children=children,
        )

    cart = dataclasses.replace(cart, children=(pole(1),))
    worldbody = dataclasses.replace(
        spec.worldbody,
        children=tuple(cart if body.name == "cart" else body for body in spec.worldbody.children),
    )
    # Widen the views so every pole stays in frame.
    lift = 0.5 * (num_poles - 1)
    cameras = tuple(
        dataclasses.replace(
            camera,
            pos=(camera.pos[0], camera.pos[1], camera.pos[2] + lift),
            extent=camera.extent + lift,
        )
        for camera in spec.cameras
    )
    return dataclasses.replace(
        spec, model=f"cart_{num_poles}_pole", worldbody=worldbody, cameras=cameras
    )


def generate_cart_k_pole(num_poles: int = 1) -> CompiledModel:
    """Compiled cart-k-pole model (see ``cart_k_pole_spec``)."""
    return compile_model(cart_k_pole_spec(num_poles))


def pole_names(physics: Physics) -> list:
    return [name for name in physics.model.names["body"] if name.startswith("pole_")]


def cart_position(physics: Physics) -> float:
    return float(physics.named.data.qpos["slider"])


def pole_angle_cosine(physics: Physics) -> np.ndarray:
    return np.asarray(physics.named.data.xmat[pole_names(physics), "zz"])


def pole_angle_sine(physics: Physics) -> np.ndarray:
    return np.asarray(physics.named.data.xmat[pole_names(physics), "xz"])


class Balance(Task):
    """Balance (or swing up and balance) the poles on the cart."""

    def __init__(self, swing_up: bool, sparse: bool) -> None:
        self._swing_up = swing_up
        self.sparse = sparse

    def initialize_episode(self, physics: Physics, rng: np.random.Generator) -> None:
        nv = physics.model.nv
        qpos = physics.data.qpos
        if self._swing_up:
            qpos[0] = 0.01 * rng.standard_normal()
            qpos[1] = np.pi + 0.01 * rng.standard_normal()
            qpos[2:] = 0.1 * rng.standard_normal(nv - 2)
        else:
            qpos[0] = rng.uniform(-0.1, 0.1)
            qpos[1:] = rng.uniform(-0.03, 0.03, nv - 1)
        physics.data.qvel[:] = 0.01 * rng.standard_normal(nv)

    def get_observation(self, physics: Physics) -> "collections.OrderedDict[str, np.ndarray]":
        obs = collections.OrderedDict()
        obs["position"] = np.concatenate(
            [[cart_position(physics)], pole_angle_cosine(physics), pole_angle_sine(physics)]
        )
        obs["velocity"] = physics.data.qvel.copy()
        return obs

    def get_reward(self, physics: Physics) -> float:
        cosines = pole_angle_cosine(physics)
        if self.sparse:
            cart_in_bounds = rewards.tolerance(cart_position(physics), _CART_RANGE)
            angle_in_bounds = np.prod(rewards.tolerance(cosines, _ANGLE_COSINE_RANGE))
            return float(cart_in_bounds * angle_in_bounds)
        upright = np.mean(
            rewards.tolerance(cosines, (1.0, 1.0), margin=2.0, sigmoid="linear", value_at_margin=0.0)
        )
        centered = rewards.tolerance(cart_position(physics), margin=2.0)
        small_control = rewards.tolerance(
            physics.data.ctrl[0], margin=1.0, sigmoid="quadratic", value_at_margin=0.0
        )
        return float(upright * (centered + small_control) / 2.0)


def _make(
    num_poles: int,
    swing_up: bool,
    sparse: bool,
    seed: Optional[int],
    environment_kwargs: Optional[Mapping[str, Any]],
    name: str,
) -> ControlEnvironment:
    physics = Physics(generate_cart_k_pole(num_poles))
    return make_environment(physics, Balance(swing_up, sparse), seed, environment_kwargs, name)


@SUITE.add(BENCHMARKING)
def balance(seed: Optional[int] = None, environment_kwargs: Optional[Mapping[str, Any]] = None) -> ControlEnvironment:
    """Returns the cartpole balance task."""
    return _make(1, False, False, seed, environment_kwargs, "cartpole:balance")


@SUITE.add(BENCHMARKING)
def balance_sparse(seed: Optional[int] = None, environment_kwargs: Optional[Mapping[str, Any]] = None) -> ControlEnvironment:
    """Returns the sparse cartpole balance task."""
    return _make(1, False, True, seed, environment_kwargs, "cartpole:balance_sparse")


@SUITE.add(BENCHMARKING)
def swingup(seed: Optional[int] = None, environment_kwargs: Optional[Mapping[str, Any]] = None) -> ControlEnvironment:
    """Returns the cartpole swingup task."""
    return _make(1, True, False, seed, environment_kwargs, "cartpole:swingup")


@SUITE.add(BENCHMARKING)
def swingup_sparse(seed: Optional[int] = None, environment_kwargs: Optional[Mapping[str, Any]] = None) -> ControlEnvironment:
    """Returns the sparse cartpole swingup task."""
    return _make(1, True, True, seed, environment_kwargs, "cartpole:swingup_sparse")


@SUITE.add(EXTRA)
def two_poles(seed: Optional[int] = None, environment_kwargs: Optional[Mapping[str, Any]] = None) -> ControlEnvironment:
    """Returns the cartpole swingup task with two poles."""
    return _make(2, True, False, seed, environment_kwargs, "cartpole:two_poles")


@SUITE.add(EXTRA)
def three_poles(seed: Optional[int] = None, environment_kwargs: Optional[Mapping[str, Any]] = None) -> ControlEnvironment:
    """Returns the cartpole swingup task with three poles."""
    return _make(3, True, False, seed, environment_kwargs, "cartpole:three_poles")
