"""Generalized-coordinate rigid-body dynamics for hinge/slide trees.

All spatial quantities are expressed in the world frame about the world
origin as 6-vectors ``[angular; linear]``.  Motion vectors of the degrees of
freedom (``cdof``) are recomputed by forward kinematics, the joint-space
inertia comes from a composite-rigid-body pass and the bias forces from a
recursive Newton-Euler pass with gravity folded into the base acceleration.
"""

import logging
from dataclasses import dataclass
from typing import NamedTuple, Optional, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import ContractError, NumericalError
from .mjcf import CompiledModel, GeomType, JointType
from .transforms import axis_angle_to_mat, planar_angle, quat_to_mat, skew

logger = logging.getLogger(__name__)

__all__ = [
    "DRAG_NORMAL",
    "DRAG_TANGENTIAL",
    "Frame",
    "Kinematics",
    "body_velocities",
    "bias_forces",
    "acceleration",
    "fluid_drag",
    "forward_dynamics",
    "forward_kinematics",
    "integrate_rk4",
    "integrate_semi_implicit",
    "mass_matrix",
    "mechanical_energy",
    "point_jacobian",
    "quat_to_mat",
]

# Per unit link length.
DRAG_NORMAL = 1.0
DRAG_TANGENTIAL = 0.1


class Frame(NamedTuple):
    """World position and rotation about the y axis of one body."""

    pos: np.ndarray
    angle: float


@dataclass(frozen=True)
class Kinematics:
    """Position-dependent quantities for one configuration."""

    xpos: np.ndarray  # (nbody, 3) body frame origins
    xmat: np.ndarray  # (nbody, 3, 3)
    xipos: np.ndarray  # (nbody, 3) centres of mass
    cinert: np.ndarray  # (nbody, 6, 6) spatial inertia about the world origin
    cdof: np.ndarray  # (nv, 6) motion subspace of each dof
    geom_xpos: np.ndarray
    geom_xmat: np.ndarray
    site_xpos: np.ndarray

    def frame(self, body: int) -> Frame:
        return Frame(self.xpos[body].copy(), planar_angle(self.xmat[body]))


def _spatial_inertia(mass: float, com: np.ndarray, inertia: np.ndarray) -> np.ndarray:
    c = skew(com)
    out = np.zeros((6, 6))
    out[:3, :3] = inertia - mass * c @ c
    out[:3, 3:] = mass * c
    out[3:, :3] = -mass * c
    out[3:, 3:] = mass * np.eye(3)
    return out


def _cross_motion(v: np.ndarray, m: np.ndarray) -> np.ndarray:
    w, v0 = v[:3], v[3:]
    mw, mv = m[:3], m[3:]
    return np.concatenate([np.cross(w, mw), np.cross(w, mv) + np.cross(v0, mw)])


def _cross_force(v: np.ndarray, f: np.ndarray) -> np.ndarray:
    w, v0 = v[:3], v[3:]
    n, fl = f[:3], f[3:]
    return np.concatenate([np.cross(w, n) + np.cross(v0, fl), np.cross(w, fl)])


def _check_length(name: str, array: np.ndarray, size: int) -> np.ndarray:
    array = np.asarray(array, dtype=float)
    if array.shape != (size,):
        raise ContractError(f"{name} must have shape ({size},), got {array.shape}")
    return array


def forward_kinematics(
    model: CompiledModel, q: np.ndarray, mocap_pos: Optional[np.ndarray] = None
) -> Kinematics:
    """
    Place every body, geom and site for configuration ``q``.

    Joints of one body are applied in document order: a hinge rotates the
    frame about its world axis through its anchor, a slide translates it.

    Args:
        model: The compiled model
        q: Generalized positions, shape (nq,)
        mocap_pos: World positions of mocap bodies; defaults to their
            reference positions

    Returns:
        The ``Kinematics`` of this configuration
    """
    q = _check_length("q", q, model.nq)
    if mocap_pos is None:
        mocap_pos = model.mocap_pos0
    nbody = model.nbody
    xpos = np.zeros((nbody, 3))
    xmat = np.zeros((nbody, 3, 3))
    xmat[0] = np.eye(3)
    cdof = np.zeros((model.nv, 6))

    for b in range(1, nbody):
        parent = model.body_parent[b]
        if model.body_mocapid[b] >= 0:
            pos = np.array(mocap_pos[model.body_mocapid[b]], dtype=float)
            mat = model.body_mat[b].copy()
        else:
            pos = xpos[parent] + xmat[parent] @ model.body_pos[b]
            mat = xmat[parent] @ model.body_mat[b]
        for j in model.body_dofs[b]:
            axis = mat @ model.jnt_axis[j]
            if model.jnt_type[j] is JointType.HINGE:
                anchor = pos + mat @ model.jnt_pos[j]
                cdof[j, :3] = axis
                cdof[j, 3:] = np.cross(anchor, axis)
                rotation = axis_angle_to_mat(axis, q[j])
                pos = anchor + rotation @ (pos - anchor)
                mat = rotation @ mat
            else:
                cdof[j, 3:] = axis
                pos = pos + axis * q[j]
        xpos[b] = pos
        xmat[b] = mat

    xipos = xpos + np.einsum("bij,bj->bi", xmat, model.body_ipos)
    cinert = np.zeros((nbody, 6, 6))
    for b in range(1, nbody):
        if model.body_mass[b] > 0:
            world_inertia = xmat[b] @ model.body_inertia[b] @ xmat[b].T
            cinert[b] = _spatial_inertia(model.body_mass[b], xipos[b], world_inertia)

    gb = model.geom_body
    geom_xpos = xpos[gb] + np.einsum("gij,gj->gi", xmat[gb], model.geom_pos)
    geom_xmat = np.einsum("gij,gjk->gik", xmat[gb], model.geom_mat)
    sb = model.site_body
    site_xpos = xpos[sb] + np.einsum("sij,sj->si", xmat[sb], model.site_pos)
    return Kinematics(
        xpos=xpos,
        xmat=xmat,
        xipos=xipos,
        cinert=cinert,
        cdof=cdof,
        geom_xpos=geom_xpos.reshape(model.ngeom, 3),
        geom_xmat=geom_xmat.reshape(model.ngeom, 3, 3),
        site_xpos=site_xpos.reshape(model.nsite, 3),
    )


def _composite_inertia(model: CompiledModel, kinematics: Kinematics) -> np.ndarray:
    composite = kinematics.cinert.copy()
    for b in range(model.nbody - 1, 0, -1):
        composite[model.body_parent[b]] += composite[b]
    return composite


def mass_matrix(model: CompiledModel, kinematics: Kinematics) -> np.ndarray:
    """Joint-space inertia ``M(q)`` including armature, shape (nv, nv)."""
    nv = model.nv
    M = np.zeros((nv, nv))
    if nv == 0:
        return M
    composite = _composite_inertia(model, kinematics)
    cdof = kinematics.cdof
    for i in range(nv):
        force = composite[model.jnt_body[i]] @ cdof[i]
        for j in model.dof_ancestors[i]:
            M[i, j] = cdof[j] @ force
            M[j, i] = M[i, j]
    M[np.diag_indices(nv)] += model.dof_armature
    return M


def body_velocities(model: CompiledModel, kinematics: Kinematics, v: np.ndarray) -> np.ndarray:
    """Spatial velocity ``[omega; v_origin]`` of every body, shape (nbody, 6)."""
    v = _check_length("v", v, model.nv)
    cvel = np.zeros((model.nbody, 6))
    for b in range(1, model.nbody):
        cvel[b] = cvel[model.body_parent[b]]
        for j in model.body_dofs[b]:
            cvel[b] += kinematics.cdof[j] * v[j]
    return cvel


def bias_forces(
    model: CompiledModel, kinematics: Kinematics, q: np.ndarray, v: np.ndarray
) -> np.ndarray:
    """
    Coriolis, centrifugal, gravity, damping and spring forces ``c(q, v)``.

    Args:
        model: The compiled model
        kinematics: Kinematics for ``q``
        q: Generalized positions
        v: Generalized velocities

    Returns:
        The generalized bias force, so that ``M a = B u - c``
    """
    q = _check_length("q", q, model.nq)
    v = _check_length("v", v, model.nv)
    nbody = model.nbody
    cvel = np.zeros((nbody, 6))
    cacc = np.zeros((nbody, 6))
    cacc[0, 3:] = -model.gravity
    force = np.zeros((nbody, 6))
    cdof = kinematics.cdof

    for b in range(1, nbody):
        parent = model.body_parent[b]
        vel = cvel[parent].copy()
        acc = cacc[parent].copy()
        for j in model.body_dofs[b]:
            acc += _cross_motion(vel, cdof[j]) * v[j]
            vel += cdof[j] * v[j]
        cvel[b] = vel
        cacc[b] = acc
        inertia = kinematics.cinert[b]
        force[b] = inertia @ acc + _cross_force(vel, inertia @ vel)

    for b in range(nbody - 1, 0, -1):
        force[model.body_parent[b]] += force[b]

    c = np.array([cdof[j] @ force[model.jnt_body[j]] for j in range(model.nv)])
    return c.reshape(model.nv) + model.dof_damping * v + model.dof_stiffness * q


def point_jacobian(
    model: CompiledModel, kinematics: Kinematics, body: int, point: np.ndarray
) -> np.ndarray:
    """Jacobian (3, nv) of the world velocity of ``point`` fixed to ``body``."""
    point = np.asarray(point, dtype=float)
    jac = np.zeros((3, model.nv))
    for j in model.body_chain[body]:
        w, v0 = kinematics.cdof[j, :3], kinematics.cdof[j, 3:]
        jac[:, j] = v0 + np.cross(w, point)
    return jac


def fluid_drag(
    model: CompiledModel, kinematics: Kinematics, v: np.ndarray
) -> np.ndarray:
    """
    Generalized force of quadratic-normal, linear-tangential drag on capsules.

    Each capsule of length ``l`` moving with velocity ``u`` at its centre feels
    ``-DRAG_NORMAL * l * |u_n| u_n - DRAG_TANGENTIAL * l * u_t``; the force is
    mapped to joint space through the transposed point Jacobian, so the drag
    power is never positive.
    """
    v = _check_length("v", v, model.nv)
    qfrc = np.zeros(model.nv)
    if not model.drag or model.nv == 0:
        return qfrc
    cvel = body_velocities(model, kinematics, v)
    for g, geom_type in enumerate(model.geom_type):
        body = model.geom_body[g]
        if geom_type is not GeomType.CAPSULE or body == 0 or not model.body_chain[body]:
            continue
        length = 2.0 * model.geom_size[g, 1]
        centre = kinematics.geom_xpos[g]
        tangent = kinematics.geom_xmat[g][:, 2]
        velocity = cvel[body, 3:] + np.cross(cvel[body, :3], centre)
        v_t = np.dot(velocity, tangent) * tangent
        v_n = velocity - v_t
        drag = -DRAG_NORMAL * length * np.linalg.norm(v_n) * v_n - DRAG_TANGENTIAL * length * v_t
        qfrc += point_jacobian(model, kinematics, body, centre).T @ drag
    return qfrc


def forward_dynamics(
    model: CompiledModel,
    kinematics: Kinematics,
    q: np.ndarray,
    v: np.ndarray,
    u: np.ndarray,
) -> np.ndarray:
    """
    Solve ``M a = B u - c + drag`` for the generalized acceleration.

    Args:
        model: The compiled model
        kinematics: Kinematics for ``q``
        q: Generalized positions
        v: Generalized velocities
        u: Actuator controls (already clipped to their ranges)

    Returns:
        The acceleration, shape (nv,)

    Raises:
        NumericalError: If the mass matrix is not positive definite
    """
    u = _check_length("u", u, model.nu)
    if model.nv == 0:
        return np.zeros(0)
    rhs = model.actuator_moment @ u - bias_forces(model, kinematics, q, v)
    if model.drag:
        rhs = rhs + fluid_drag(model, kinematics, v)
    M = mass_matrix(model, kinematics)
    if not (np.all(np.isfinite(M)) and np.all(np.isfinite(rhs))):
        # Non-finite input propagates so the caller can report divergence.
        return np.full(model.nv, np.nan)
    try:
        factor = cho_factor(M)
    except LinAlgError as exc:
        logger.error("Mass matrix factorisation failed at q=%s", q.tolist())
        raise NumericalError(f"Mass matrix is not positive definite: {exc}")
    return cho_solve(factor, rhs)


def acceleration(
    model: CompiledModel,
    q: np.ndarray,
    v: np.ndarray,
    u: np.ndarray,
    mocap_pos: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Kinematics and forward dynamics in one call."""
    return forward_dynamics(model, forward_kinematics(model, q, mocap_pos), q, v, u)


def integrate_semi_implicit(
    q: np.ndarray, v: np.ndarray, a: np.ndarray, h: float
) -> Tuple[np.ndarray, np.ndarray]:
    """One semi-implicit Euler step: ``v' = v + h a`` then ``q' = q + h v'``."""
    v_next = v + h * a
    return q + h * v_next, v_next


def integrate_rk4(
    model: CompiledModel,
    q: np.ndarray,
    v: np.ndarray,
    u: np.ndarray,
    h: float,
    mocap_pos: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Classical fourth-order Runge-Kutta on ``(q, v)`` with ``u`` held constant."""
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    a1 = acceleration(model, q, v, u, mocap_pos)
    q2, v2 = q + 0.5 * h * v, v + 0.5 * h * a1
    a2 = acceleration(model, q2, v2, u, mocap_pos)
    q3, v3 = q + 0.5 * h * v2, v + 0.5 * h * a2
    a3 = acceleration(model, q3, v3, u, mocap_pos)
    q4, v4 = q + h * v3, v + h * a3
    a4 = acceleration(model, q4, v4, u, mocap_pos)
    q_next = q + h / 6.0 * (v + 2.0 * v2 + 2.0 * v3 + v4)
    v_next = v + h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
    return q_next, v_next


def mechanical_energy(
    model: CompiledModel, kinematics: Kinematics, q: np.ndarray, v: np.ndarray
) -> Tuple[float, float]:
    """
    Potential (gravity plus joint springs) and kinetic energy.

    Returns:
        ``(potential, kinetic)``
    """
    q = _check_length("q", q, model.nq)
    v = _check_length("v", v, model.nv)
    kinetic = 0.5 * float(v @ mass_matrix(model, kinematics) @ v) if model.nv else 0.0
    gravity = -float(np.sum(model.body_mass[:, None] * kinematics.xipos * model.gravity))
    springs = 0.5 * float(np.sum(model.dof_stiffness * q * q))
    return gravity + springs, kinetic
