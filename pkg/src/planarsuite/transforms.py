"""Rotation helpers shared by the model compiler, the simulator and the renderer."""

import logging
from typing import Sequence

import numpy as np

from .errors import ParameterError

logger = logging.getLogger(__name__)

_UNIT_TOLERANCE = 1e-9
_RENORMALISE_TOLERANCE = 1e-6


def quat_to_mat(quat: Sequence[float]) -> np.ndarray:
    """
    Convert a unit quaternion ``(w, x, y, z)`` to a 3x3 rotation matrix.

    Args:
        quat: Quaternion with scalar part first

    Returns:
        An orthonormal matrix with determinant +1

    Raises:
        ParameterError: If the quaternion is further than 1e-6 from unit norm
    """
    q = np.asarray(quat, dtype=float)
    if q.shape != (4,):
        raise ParameterError(f"Quaternion must have 4 components, got shape {q.shape}")
    norm = float(np.linalg.norm(q))
    deviation = abs(norm - 1.0)
    if deviation > _UNIT_TOLERANCE:
        if deviation >= _RENORMALISE_TOLERANCE or norm == 0.0:
            raise ParameterError(f"Quaternion {q.tolist()} is not unit length (norm={norm})")
        logger.warning("Renormalising quaternion %s (norm=%.12f)", q.tolist(), norm)
        q = q / norm

    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def axis_angle_to_mat(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rodrigues rotation about a unit ``axis`` by ``angle`` radians."""
    x, y, z = axis
    c = np.cos(angle)
    s = np.sin(angle)
    t = 1.0 - c
    return np.array(
        [
            [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
            [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
            [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
        ]
    )


def z_to_vector_mat(direction: np.ndarray) -> np.ndarray:
    """Rotation whose third column is the unit vector along ``direction``."""
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    z = np.array([0.0, 0.0, 1.0])
    cos_angle = float(np.dot(z, d))
    axis = np.cross(z, d)
    sin_angle = float(np.linalg.norm(axis))
    if sin_angle < 1e-12:
        if cos_angle > 0:
            return np.eye(3)
        # Half turn about x.
        return np.diag([1.0, -1.0, -1.0])
    return axis_angle_to_mat(axis / sin_angle, float(np.arctan2(sin_angle, cos_angle)))


def skew(v: np.ndarray) -> np.ndarray:
    """Cross-product matrix: ``skew(a) @ b == cross(a, b)``."""
    return np.array(
        [
            [0.0, -v[2], v[1]],
            [v[2], 0.0, -v[0]],
            [-v[1], v[0], 0.0],
        ]
    )


def planar_angle(mat: np.ndarray) -> float:
    """Rotation angle about the world y axis encoded in a rotation matrix."""
    return float(np.arctan2(mat[0, 2], mat[0, 0]))
