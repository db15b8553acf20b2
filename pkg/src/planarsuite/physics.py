"""The ``Physics`` object: one compiled model plus its mutable simulation state."""

import contextlib
import copy
import logging
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Iterator, Optional, Sequence, Union

import numpy as np

from . import dynamics
from .errors import ContractError, PhysicsDivergenceError
from .mjcf import CompiledModel, Integrator, from_path, from_xml_string
from .named import NamedIndexStructs

logger = logging.getLogger(__name__)

_STATE_FIELDS = ("qpos", "qvel", "mocap_pos")
_DERIVED_FIELDS = (
    "qacc",
    "qfrc_bias",
    "xpos",
    "xmat",
    "xipos",
    "cvel",
    "geom_xpos",
    "geom_xmat",
    "site_xpos",
    "energy",
)


@dataclass(eq=False)
class PhysicsState:
    """Generalized state, controls and cached derived quantities.

    Arrays are owned by the state and must be written in place; rebinding
    an attribute raises ``AttributeError``.  ``qpos``, ``qvel`` and
    ``mocap_pos`` are writable only inside ``Physics.reset_context()``,
    derived arrays are never writable from outside.
    """

    qpos: np.ndarray
    qvel: np.ndarray
    ctrl: np.ndarray
    mocap_pos: np.ndarray
    qacc: np.ndarray
    qfrc_bias: np.ndarray
    xpos: np.ndarray
    xmat: np.ndarray
    xipos: np.ndarray
    cvel: np.ndarray
    geom_xpos: np.ndarray
    geom_xmat: np.ndarray
    site_xpos: np.ndarray
    energy: np.ndarray
    time: float = 0.0
    synced: bool = False
    _sealed: bool = field(default=False, repr=False)

    @classmethod
    def zeros(cls, model: CompiledModel) -> "PhysicsState":
        state = cls(
            qpos=np.zeros(model.nq),
            qvel=np.zeros(model.nv),
            ctrl=np.zeros(model.nu),
            mocap_pos=np.array(model.mocap_pos0, dtype=float).reshape(model.nmocap, 3),
            qacc=np.zeros(model.nv),
            qfrc_bias=np.zeros(model.nv),
            xpos=np.zeros((model.nbody, 3)),
            xmat=np.zeros((model.nbody, 9)),
            xipos=np.zeros((model.nbody, 3)),
            cvel=np.zeros((model.nbody, 6)),
            geom_xpos=np.zeros((model.ngeom, 3)),
            geom_xmat=np.zeros((model.ngeom, 9)),
            site_xpos=np.zeros((model.nsite, 3)),
            energy=np.zeros(2),
        )
        for name in _STATE_FIELDS + _DERIVED_FIELDS:
            getattr(state, name).flags.writeable = False
        object.__setattr__(state, "_sealed", True)
        return state

    def __setattr__(self, name: str, value) -> None:
        if getattr(self, "_sealed", False) and name not in ("time", "synced"):
            raise AttributeError(
                f"Cannot rebind '{name}'; assign in place with state.{name}[:] = ..."
            )
        object.__setattr__(self, name, value)

    def __deepcopy__(self, memo) -> "PhysicsState":
        clone = object.__new__(PhysicsState)
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, np.ndarray):
                copied = value.copy()
                copied.flags.writeable = value.flags.writeable
                value = copied
            object.__setattr__(clone, f.name, value)
        return clone


@contextlib.contextmanager
def _writable(*arrays: np.ndarray) -> Iterator[None]:
    previous = [a.flags.writeable for a in arrays]
    for a in arrays:
        a.flags.writeable = True
    try:
        yield
    finally:
        for a, flag in zip(arrays, previous):
            a.flags.writeable = flag


class Physics:
    """Simulation of one ``CompiledModel``.

    ``step`` follows a two-phase contract: the control-dependent phase
    integrates ``(q, v)``, then the state-dependent phase recomputes every
    position- and velocity-derived quantity.  Frames, body positions and
    energies therefore always describe the current state, while ``qacc``
    describes the transition that produced it.
    """

    def __init__(self, model: CompiledModel) -> None:
        self._model = model
        self._data = PhysicsState.zeros(model)
        self._in_reset = False
        self._named: Optional[NamedIndexStructs] = None
        self.forward()

    @classmethod
    def from_model(cls, model: CompiledModel) -> "Physics":
        return cls(model)

    @classmethod
    def from_xml_string(cls, text: str) -> "Physics":
        return cls(from_xml_string(text))

    @classmethod
    def from_path(cls, path: Union[str, Path]) -> "Physics":
        return cls(from_path(path))

    @property
    def model(self) -> CompiledModel:
        return self._model

    @property
    def data(self) -> PhysicsState:
        return self._data

    @property
    def named(self) -> NamedIndexStructs:
        if self._named is None:
            self._named = NamedIndexStructs(self._model, self._data)
        return self._named

    @property
    def timestep(self) -> float:
        return self._model.timestep

    @property
    def time(self) -> float:
        return self._data.time

    # -- state management ----------------------------------------------------

    def reset(self) -> None:
        """Zero the state, controls and time and return mocap bodies home."""
        data = self._data
        with _writable(data.qpos, data.qvel, data.mocap_pos, data.qacc):
            data.qpos[:] = 0.0
            data.qvel[:] = 0.0
            data.mocap_pos[:] = self._model.mocap_pos0
            data.qacc[:] = 0.0
        data.ctrl[:] = 0.0
        data.time = 0.0
        self.forward()

    @contextlib.contextmanager
    def reset_context(self) -> Iterator["Physics"]:
        """
        Reset, then allow writes to ``qpos``, ``qvel``, ``ctrl`` and ``mocap_pos``.

        Derived quantities are recomputed when the context exits, so no
        observation or frame can ever be served from a stale state.
        """
        if self._in_reset:
            raise ContractError("reset_context() is not re-entrant")
        self.reset()
        data = self._data
        self._in_reset = True
        data.synced = False
        try:
            with _writable(data.qpos, data.qvel, data.mocap_pos):
                yield self
        finally:
            self._in_reset = False
            self.forward()

    def set_state(
        self,
        q: Sequence[float],
        v: Sequence[float],
        u: Optional[Sequence[float]] = None,
    ) -> None:
        """Replace ``(q, v[, u])`` and synchronise derived quantities."""
        model = self._model
        q = np.asarray(q, dtype=float)
        v = np.asarray(v, dtype=float)
        if q.shape != (model.nq,) or v.shape != (model.nv,):
            raise ContractError(
                f"Expected q of shape ({model.nq},) and v of shape ({model.nv},), "
                f"got {q.shape} and {v.shape}"
            )
        if u is not None:
            u = np.asarray(u, dtype=float)
            if u.shape != (model.nu,):
                raise ContractError(f"Expected u of shape ({model.nu},), got {u.shape}")
        data = self._data
        with _writable(data.qpos, data.qvel):
            data.qpos[:] = q
            data.qvel[:] = v
        if u is not None:
            data.ctrl[:] = u
        self.forward()

    def set_control(self, u: Sequence[float]) -> None:
        u = np.asarray(u, dtype=float)
        if u.shape != (self._model.nu,):
            raise ContractError(f"Expected control of shape ({self._model.nu},), got {u.shape}")
        self._data.ctrl[:] = u

    def set_mocap_pos(self, name: str, pos: Sequence[float]) -> None:
        """Move a mocap body and synchronise."""
        body = self._model.name2id(name, "body")
        index = self._model.body_mocapid[body]
        if index < 0:
            raise ContractError(f"Body '{name}' is not a mocap body")
        with _writable(self._data.mocap_pos):
            self._data.mocap_pos[index] = pos
        self.forward()

    def get_state(self) -> np.ndarray:
        """Concatenated ``(q, v)`` copy."""
        return np.concatenate([self._data.qpos, self._data.qvel])

    def copy(self) -> "Physics":
        clone = object.__new__(Physics)
        clone._model = self._model
        clone._data = copy.deepcopy(self._data)
        clone._in_reset = False
        clone._named = None
        clone._kinematics = self._kinematics
        return clone

    # -- simulation ----------------------------------------------------------

    def control(self) -> np.ndarray:
        """Controls clipped to the actuator ranges that are limited."""
        model = self._model
        u = self._data.ctrl.copy()
        if model.nu:
            low, high = model.actuator_ctrlrange[:, 0], model.actuator_ctrlrange[:, 1]
            limited = model.actuator_ctrllimited
            u = np.where(limited, np.clip(u, low, high), u)
        return u

    def forward(self) -> None:
        """Recompute every position- and velocity-derived quantity."""
        model = self._model
        data = self._data
        kinematics = dynamics.forward_kinematics(model, data.qpos, data.mocap_pos)
        potential, kinetic = dynamics.mechanical_energy(model, kinematics, data.qpos, data.qvel)
        derived = [getattr(data, name) for name in _DERIVED_FIELDS if name != "qacc"]
        with _writable(*derived):
            data.xpos[:] = kinematics.xpos
            data.xmat[:] = kinematics.xmat.reshape(model.nbody, 9)
            data.xipos[:] = kinematics.xipos
            data.cvel[:] = dynamics.body_velocities(model, kinematics, data.qvel)
            data.geom_xpos[:] = kinematics.geom_xpos
            data.geom_xmat[:] = kinematics.geom_xmat.reshape(model.ngeom, 9)
            data.site_xpos[:] = kinematics.site_xpos
            data.qfrc_bias[:] = dynamics.bias_forces(model, kinematics, data.qpos, data.qvel)
            data.energy[:] = (potential, kinetic)
        self._kinematics = kinematics
        data.synced = True

    @property
    def kinematics(self) -> dynamics.Kinematics:
        return self._kinematics

    def step(self, n_sub_steps: int = 1) -> None:
        """
        Advance by ``n_sub_steps`` physics timesteps with the current control.

        Raises:
            PhysicsDivergenceError: If positions or velocities become
                non-finite; the state is left at the last finite value
        """
        if self._in_reset:
            raise ContractError("Cannot step inside reset_context()")
        if not self._data.synced:
            self.forward()
        model = self._model
        data = self._data
        h = model.timestep
        u = self.control()
        q = data.qpos.copy()
        v = data.qvel.copy()
        qacc = np.zeros(model.nv)
        t = data.time
        for _ in range(n_sub_steps):
            if model.integrator is Integrator.RK4:
                q_next, v_next = dynamics.integrate_rk4(model, q, v, u, h, data.mocap_pos)
                qacc = (v_next - v) / h
            else:
                kinematics = dynamics.forward_kinematics(model, q, data.mocap_pos)
                qacc = dynamics.forward_dynamics(model, kinematics, q, v, u)
                q_next, v_next = dynamics.integrate_semi_implicit(q, v, qacc, h)
            if not (np.all(np.isfinite(q_next)) and np.all(np.isfinite(v_next))):
                self._diverged(q_next, v_next, t)
            q, v = q_next, v_next
            t += h

        data.time = t
        with _writable(data.qpos, data.qvel, data.qacc):
            data.qpos[:] = q
            data.qvel[:] = v
            data.qacc[:] = qacc
        self.forward()

    def _diverged(self, q: np.ndarray, v: np.ndarray, t: float) -> None:
        names = self._model.names["joint"]
        bad = sorted(
            {names[i] for i in np.flatnonzero(~np.isfinite(q))}
            | {names[i] for i in np.flatnonzero(~np.isfinite(v))}
        )
        message = f"Simulation diverged at t={t:.4f}s in joints {', '.join(bad)}"
        logger.error(message)
        raise PhysicsDivergenceError(message)

    # -- observations --------------------------------------------------------

    def energy(self) -> float:
        """Total mechanical energy of the current state."""
        return float(self._data.energy.sum())

    def body_velocity(self, name: str) -> np.ndarray:
        """Spatial velocity ``[omega; v]`` of the named body, ``v`` at its origin."""
        body = self._model.name2id(name, "body")
        cvel = self._data.cvel[body]
        linear = cvel[3:] + np.cross(cvel[:3], self._data.xpos[body])
        return np.concatenate([cvel[:3], linear])

    def render(
        self,
        width: int = 320,
        height: int = 240,
        camera: Union[int, str] = -1,
        reward_tint: Optional[float] = None,
    ) -> np.ndarray:
        """Rasterise the current state into a ``(height, width, 3)`` uint8 array."""
        from .rendering import render_frame

        return render_frame(self, camera, width, height, reward_tint).pixels
