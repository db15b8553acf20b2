"""LQR domain: a chain of unit masses on springs with a quadratic cost."""

import collections
from typing import Any, Mapping, Optional, Tuple

import numpy as np

from ..environment import ControlEnvironment
from ..errors import ParameterError
from ..mjcf import (
    ActuatorSpec,
    BodySpec,
    CameraSpec,
    CompiledModel,
    GeomSpec,
    GeomType,
    Integrator,
    JointSpec,
    JointType,
    LightSpec,
    ModelSpec,
    OptionSpec,
    compile_model,
)
from ..physics import Physics
from .base import EXTRA, TaggedTasks, Task, make_environment

SUITE = TaggedTasks()

CONTROL_COST = 0.1
STIFFNESS = 1.0
DAMPING = 0.1
TERMINATION_TOLERANCE = 1e-4
_SPACING = 0.25


def lqr_spec(n_bodies: int, n_actuators: int) -> ModelSpec:
    """
    Model of ``n_bodies`` serially linked unit masses on x-slides.

    Each slide carries a unit spring to its parent and light damping; the
    first ``n_actuators`` slides are driven by unbounded motors.
    """
    if n_bodies < 1:
        raise ParameterError(f"n_bodies must be positive, got {n_bodies}")
    if not 1 <= n_actuators <= n_bodies:
        raise ParameterError(f"n_actuators must be in [1, {n_bodies}], got {n_actuators}")

    chain: tuple = ()
    for index in range(n_bodies - 1, -1, -1):
        chain = (
            BodySpec(
                name=f"body_{index}",
                pos=(0.0, 0.0, _SPACING if index else 0.0),
                joints=(
                    JointSpec(
                        name=f"joint_{index}",
                        type=JointType.SLIDE,
                        axis=(1.0, 0.0, 0.0),
                        stiffness=STIFFNESS,
                        damping=DAMPING,
                    ),
                ),
                geoms=(
                    GeomSpec(name=f"geom_{index}", type=GeomType.SPHERE, size=(0.05,), material="self", mass=1.0),
                ),
                children=chain,
            ),
        )

    height = _SPACING * (n_bodies - 1)
    backdrop = GeomSpec(
        name="backdrop",
        type=GeomType.BOX,
        pos=(0.0, 0.5, height / 2),
        size=(2.0, 0.01, height / 2 + 1.0),
        material="grid",
        mass=0.0,
    )
    worldbody = BodySpec(name="world", geoms=(backdrop,), children=chain)
    actuators = tuple(
        ActuatorSpec(
            name=f"motor_{index}",
            joint=f"joint_{index}",
            gear=1.0,
            ctrlrange=(-1.0, 1.0),
            ctrllimited=False,
        )
        for index in range(n_actuators)
    )
    return ModelSpec(
        model=f"lqr_{n_bodies}_{n_actuators}",
        option=OptionSpec(gravity=(0.0, 0.0, 0.0), integrator=Integrator.SEMI_IMPLICIT_EULER),
        worldbody=worldbody,
        actuators=actuators,
        cameras=(CameraSpec(name="fixed", pos=(0.0, 0.0, height / 2), extent=height / 2 + 1.0),),
        lights=(LightSpec(name="light", pos=(0.0, -1.0, 1.0)),),
    )


def generate_lqr(n_bodies: int, n_actuators: int) -> CompiledModel:
    return compile_model(lqr_spec(n_bodies, n_actuators))


class LinearQuadraticRegulator(Task):
    """Drive the chain to rest at the origin at minimal quadratic cost."""

    def __init__(self, control_cost: float = CONTROL_COST) -> None:
        if control_cost <= 0:
            raise ParameterError(f"control_cost must be positive, got {control_cost}")
        self._control_cost = control_cost

    @property
    def control_cost(self) -> float:
        return self._control_cost

    def cost_matrices(self, physics: Physics) -> Tuple[np.ndarray, np.ndarray]:
        """State cost ``Q`` over ``(q, v)`` and control cost ``R`` of the reward."""
        n = physics.model.nv
        state_cost = np.diag(np.concatenate([np.ones(n), np.zeros(n)]))
        return state_cost, self._control_cost * np.eye(physics.model.nu)

    def initialize_episode(self, physics: Physics, rng: np.random.Generator) -> None:
        direction = rng.standard_normal(physics.model.nq)
        physics.data.qpos[:] = direction / np.linalg.norm(direction)

    def get_observation(self, physics: Physics) -> "collections.OrderedDict[str, np.ndarray]":
        obs = collections.OrderedDict()
        obs["position"] = physics.data.qpos.copy()
        obs["velocity"] = physics.data.qvel.copy()
        return obs

    def get_reward(self, physics: Physics) -> float:
        q = physics.data.qpos
        u = physics.control()
        return -float(q @ q + self._control_cost * (u @ u))

    def get_termination(self, physics: Physics) -> Optional[float]:
        state = physics.get_state()
        if np.max(np.abs(state)) < TERMINATION_TOLERANCE:
            return 0.0
        return None


def _make(
    n_bodies: int, n_actuators: int, seed: Optional[int], environment_kwargs: Optional[Mapping[str, Any]]
) -> ControlEnvironment:
    physics = Physics(generate_lqr(n_bodies, n_actuators))
    return make_environment(
        physics, LinearQuadraticRegulator(), seed, environment_kwargs, f"lqr:lqr_{n_bodies}_{n_actuators}"
    )


@SUITE.add(EXTRA)
def lqr_2_1(seed: Optional[int] = None, environment_kwargs: Optional[Mapping[str, Any]] = None) -> ControlEnvironment:
    """Returns an LQR environment with 2 bodies of which 1 is actuated."""
    return _make(2, 1, seed, environment_kwargs)


@SUITE.add(EXTRA)
def lqr_6_2(seed: Optional[int] = None, environment_kwargs: Optional[Mapping[str, Any]] = None) -> ControlEnvironment:
    """Returns an LQR environment with 6 bodies of which 2 are actuated."""
    return _make(6, 2, seed, environment_kwargs)
