"""Orthographic rasteriser for planar scenes.

The image plane is the world x-z plane: image right is world +x and image up
is world +z.  Geoms are painted back to front by their world y coordinate
(larger y is farther from the viewer), planes always first.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

import numpy as np

from .errors import ConfigurationError, ContractError
from .mjcf import CameraMode, GeomType

logger = logging.getLogger(__name__)

Color = Tuple[float, float, float]

BACKGROUND: Color = (0.15, 0.22, 0.32)
DEFAULT_CAMERA_EXTENT = 1.5
GRID_SPACING = 0.25

# Named materials shared by every domain model.
PALETTE: Dict[str, Color] = {
    "self": (0.70, 0.50, 0.30),
    "effector": (0.70, 0.40, 0.20),
    "target": (0.60, 0.30, 0.30),
    "decoration": (0.30, 0.50, 0.70),
    "grid": (0.10, 0.20, 0.30),
}
GRID_ALT: Color = (0.20, 0.30, 0.40)

# Materials whose brightness follows the reward when tinting is on.
TINTED = frozenset({"self", "effector", "target"})
DIM_FRACTION = 0.35


@dataclass(frozen=True, eq=False)
class FrameBuffer:
    """An RGB image, row-major, top row first."""

    width: int
    height: int
    pixels: np.ndarray  # (height, width, 3) uint8

    def __post_init__(self) -> None:
        if self.pixels.shape != (self.height, self.width, 3) or self.pixels.dtype != np.uint8:
            raise ContractError(
                f"Expected uint8 pixels of shape ({self.height}, {self.width}, 3), "
                f"got {self.pixels.dtype} {self.pixels.shape}"
            )

    def tobytes(self) -> bytes:
        return self.pixels.tobytes()

    def __len__(self) -> int:
        return self.width * self.height * 3


def _camera_view(physics, camera: Union[int, str]) -> Tuple[float, float, float]:
    """Centre (x, z) and half-height of the requested camera."""
    model = physics.model
    if isinstance(camera, str):
        try:
            index = model.name2id(camera, "camera")
        except LookupError:
            raise ConfigurationError(f"Unknown camera '{camera}'")
    else:
        index = int(camera)
        if index == -1:
            if model.ncam == 0:
                return 0.0, 0.0, DEFAULT_CAMERA_EXTENT
            index = 0
        if not 0 <= index < model.ncam:
            raise ConfigurationError(f"Camera index {index} out of range; model has {model.ncam}")
    cx, cz = model.cam_pos[index, 0], model.cam_pos[index, 2]
    if model.cam_mode[index] is CameraMode.TRACK:
        body = model.cam_body[index]
        cx += physics.data.xpos[body, 0]
        cz += physics.data.xpos[body, 2]
    return float(cx), float(cz), float(model.cam_extent[index])


def _geom_color(model, geom: int, reward_tint: Optional[float]) -> Tuple[Color, float]:
    material = model.geom_material[geom]
    rgba = model.geom_rgba[geom]
    if material in PALETTE:
        lit = PALETTE[material]
        alpha = 1.0
    else:
        lit = (float(rgba[0]), float(rgba[1]), float(rgba[2]))
        alpha = float(rgba[3])
    if reward_tint is not None and material in TINTED:
        r = float(np.clip(reward_tint, 0.0, 1.0))
        lit = tuple(DIM_FRACTION * c + r * (1.0 - DIM_FRACTION) * c for c in lit)  # type: ignore[assignment]
    return lit, alpha


def _segment_distance(
    X: np.ndarray, Z: np.ndarray, a: np.ndarray, b: np.ndarray
) -> np.ndarray:
    d = b - a
    length_sq = float(d @ d)
    if length_sq == 0.0:
        return np.hypot(X - a[0], Z - a[1])
    t = np.clip(((X - a[0]) * d[0] + (Z - a[1]) * d[1]) / length_sq, 0.0, 1.0)
    return np.hypot(X - (a[0] + t * d[0]), Z - (a[1] + t * d[1]))


def _geom_mask(model, data, geom: int, X: np.ndarray, Z: np.ndarray) -> np.ndarray:
    kind = model.geom_type[geom]
    pos = data.geom_xpos[geom]
    mat = data.geom_xmat[geom].reshape(3, 3)
    size = model.geom_size[geom]
    if kind is GeomType.SPHERE:
        return (X - pos[0]) ** 2 + (Z - pos[2]) ** 2 <= size[0] ** 2
    if kind is GeomType.CAPSULE:
        axis = mat[:, 2] * size[1]
        a = np.array([pos[0] - axis[0], pos[2] - axis[2]])
        b = np.array([pos[0] + axis[0], pos[2] + axis[2]])
        return _segment_distance(X, Z, a, b) <= size[0]
    if kind is GeomType.BOX:
        dx, dz = X - pos[0], Z - pos[2]
        inside = np.ones(X.shape, dtype=bool)
        for k in range(3):
            local = mat[0, k] * dx + mat[2, k] * dz
            inside &= np.abs(local) <= size[k]
        return inside
    # Plane: everything on the far side of its normal, optionally bounded.
    normal = mat[:, 2]
    tangent = mat[:, 0]
    below = (X - pos[0]) * normal[0] + (Z - pos[2]) * normal[2] <= 0.0
    if size[0] > 0:
        along = (X - pos[0]) * tangent[0] + (Z - pos[2]) * tangent[2]
        below &= np.abs(along) <= size[0]
    return below


def render_frame(
    physics,
    camera: Union[int, str] = -1,
    width: int = 320,
    height: int = 240,
    reward_tint: Optional[float] = None,
) -> FrameBuffer:
    """
    Rasterise the current physics state.

    Args:
        physics: A synchronised ``Physics``
        camera: Camera name or index; -1 selects the first camera, or a
            default view centred on the origin when the model has none
        width: Image width in pixels
        height: Image height in pixels
        reward_tint: When given, tinted materials scale linearly from dim
            (0) to fully lit (1); the background is never tinted

    Returns:
        The rendered ``FrameBuffer``

    Raises:
        ConfigurationError: For an unknown camera or non-positive size
    """
    if width <= 0 or height <= 0:
        raise ConfigurationError(f"Image size must be positive, got {width}x{height}")
    if not physics.data.synced:
        physics.forward()
    model = physics.model
    data = physics.data
    cx, cz, extent = _camera_view(physics, camera)

    scale = extent / (height / 2.0)
    columns = (np.arange(width) + 0.5 - width / 2.0) * scale + cx
    rows = (height / 2.0 - np.arange(height) - 0.5) * scale + cz
    X, Z = np.meshgrid(columns, rows)

    image = np.empty((height, width, 3))
    image[:] = BACKGROUND

    order = sorted(
        range(model.ngeom),
        key=lambda g: (model.geom_type[g] is not GeomType.PLANE, -data.geom_xpos[g, 1], g),
    )
    for g in order:
        mask = _geom_mask(model, data, g, X, Z)
        if not mask.any():
            continue
        color, alpha = _geom_color(model, g, reward_tint)
        if model.geom_material[g] == "grid":
            checker = (np.floor(X / GRID_SPACING) + np.floor(Z / GRID_SPACING)) % 2 == 1
            fill = np.where(checker[..., None], np.asarray(GRID_ALT), np.asarray(color))
            image[mask] = (1 - alpha) * image[mask] + alpha * fill[mask]
        else:
            image[mask] = (1 - alpha) * image[mask] + alpha * np.asarray(color)

    pixels = np.clip(np.round(image * 255.0), 0, 255).astype(np.uint8)
    return FrameBuffer(width=width, height=height, pixels=pixels)


def write_ppm(frame: Union[FrameBuffer, np.ndarray], path: Union[str, Path]) -> Path:
    """Write a binary (P6) PPM file."""
    pixels = frame.pixels if isinstance(frame, FrameBuffer) else np.asarray(frame, dtype=np.uint8)
    height, width = pixels.shape[:2]
    path = Path(path)
    with open(path, "wb") as handle:
        handle.write(f"P6\n{width} {height}\n255\n".encode("ascii"))
        handle.write(np.ascontiguousarray(pixels).tobytes())
    return path


def read_ppm(path: Union[str, Path]) -> np.ndarray:
    """Read a binary PPM written by ``write_ppm``."""
    raw = Path(path).read_bytes()
    parts = raw.split(b"\n", 3)
    if parts[0] != b"P6" or len(parts) < 4:
        raise ContractError(f"{path} is not a binary PPM file")
    width, height = (int(token) for token in parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(height, width, 3)


def write_png(frame: Union[FrameBuffer, np.ndarray], path: Union[str, Path]) -> Path:
    """Write a PNG through matplotlib's image writer."""
    from matplotlib import image as mpimg

    pixels = frame.pixels if isinstance(frame, FrameBuffer) else np.asarray(frame, dtype=np.uint8)
    path = Path(path)
    mpimg.imsave(path, pixels, format="png")
    return path
