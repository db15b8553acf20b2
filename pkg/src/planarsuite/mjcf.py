"""Parser, canonical writer and compiler for the MJCF subset used by the suite.

The grammar is deliberately small and strict: any element or attribute that is
not listed in ``_ALLOWED_ATTRIBUTES`` is rejected with a ``ModelParseError``
naming the offending element path.
"""

import dataclasses
import enum
import logging
import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ModelParseError, NameLookupError
from .transforms import quat_to_mat, z_to_vector_mat

logger = logging.getLogger(__name__)

Vec3 = Tuple[float, float, float]
Quat = Tuple[float, float, float, float]

CATEGORIES = ("body", "joint", "geom", "site", "actuator", "camera")

DEFAULT_TIMESTEP = 0.005
DEFAULT_GRAVITY: Vec3 = (0.0, 0.0, -9.81)
DEFAULT_DENSITY = 1000.0
IDENTITY_QUAT: Quat = (1.0, 0.0, 0.0, 0.0)


class JointType(str, enum.Enum):
    HINGE = "hinge"
    SLIDE = "slide"


class GeomType(str, enum.Enum):
    SPHERE = "sphere"
    CAPSULE = "capsule"
    BOX = "box"
    PLANE = "plane"


class Integrator(str, enum.Enum):
    SEMI_IMPLICIT_EULER = "Euler"
    RK4 = "RK4"


class CameraMode(str, enum.Enum):
    FIXED = "fixed"
    TRACK = "track"


@dataclass(frozen=True)
class OptionSpec:
    timestep: float = DEFAULT_TIMESTEP
    gravity: Vec3 = DEFAULT_GRAVITY
    integrator: Integrator = Integrator.SEMI_IMPLICIT_EULER
    drag: bool = False


@dataclass(frozen=True)
class JointSpec:
    name: str
    type: JointType = JointType.HINGE
    axis: Vec3 = (0.0, 0.0, 1.0)
    pos: Vec3 = (0.0, 0.0, 0.0)
    range: Optional[Tuple[float, float]] = None
    damping: float = 0.0
    stiffness: float = 0.0
    armature: float = 0.0


@dataclass(frozen=True)
class GeomSpec:
    name: Optional[str] = None
    type: GeomType = GeomType.SPHERE
    size: Tuple[float, ...] = (0.0,)
    pos: Vec3 = (0.0, 0.0, 0.0)
    quat: Quat = IDENTITY_QUAT
    fromto: Optional[Tuple[float, float, float, float, float, float]] = None
    rgba: Optional[Quat] = None
    material: Optional[str] = None
    mass: Optional[float] = None
    density: float = DEFAULT_DENSITY


@dataclass(frozen=True)
class SiteSpec:
    name: str
    pos: Vec3 = (0.0, 0.0, 0.0)
    size: float = 0.01
    rgba: Optional[Quat] = None


@dataclass(frozen=True)
class CameraSpec:
    name: str
    pos: Vec3 = (0.0, 0.0, 0.0)
    extent: float = 1.0
    mode: CameraMode = CameraMode.FIXED
    body: Optional[str] = None


@dataclass(frozen=True)
class LightSpec:
    name: Optional[str] = None
    pos: Vec3 = (0.0, 0.0, 0.0)
    dir: Vec3 = (0.0, 0.0, -1.0)


@dataclass(frozen=True)
class BodySpec:
    name: str
    pos: Vec3 = (0.0, 0.0, 0.0)
    quat: Quat = IDENTITY_QUAT
    mocap: bool = False
    joints: Tuple[JointSpec, ...] = ()
    geoms: Tuple[GeomSpec, ...] = ()
    sites: Tuple[SiteSpec, ...] = ()
    children: Tuple["BodySpec", ...] = ()


@dataclass(frozen=True)
class ActuatorSpec:
    name: str
    joint: str
    gear: float = 1.0
    ctrlrange: Tuple[float, float] = (-1.0, 1.0)
    ctrllimited: bool = True


@dataclass(frozen=True)
class ModelSpec:
    """Parsed, validated model document with defaults applied."""

    model: str = "model"
    option: OptionSpec = field(default_factory=OptionSpec)
    worldbody: BodySpec = field(default_factory=lambda: BodySpec(name="world"))
    actuators: Tuple[ActuatorSpec, ...] = ()
    cameras: Tuple[CameraSpec, ...] = ()
    lights: Tuple[LightSpec, ...] = ()

    def iter_bodies(self) -> Iterator[Tuple[BodySpec, Optional[BodySpec]]]:
        """Yield ``(body, parent)`` in document (pre-)order, world first."""
        stack: List[Tuple[BodySpec, Optional[BodySpec]]] = [(self.worldbody, None)]
        while stack:
            body, parent = stack.pop()
            yield body, parent
            for child in reversed(body.children):
                stack.append((child, body))


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_ALLOWED_ATTRIBUTES: Dict[str, Tuple[str, ...]] = {
    "mujoco": ("model",),
    "option": ("timestep", "gravity", "integrator", "drag"),
    "worldbody": (),
    "body": ("name", "pos", "quat", "mocap"),
    "joint": ("name", "type", "axis", "pos", "range", "damping", "stiffness", "armature"),
    "geom": (
        "name", "type", "size", "pos", "quat", "fromto", "rgba", "material", "mass", "density",
    ),
    "site": ("name", "pos", "size", "rgba"),
    "camera": ("name", "pos", "extent", "mode", "body"),
    "light": ("name", "pos", "dir"),
    "actuator": (),
    "motor": ("name", "joint", "gear", "ctrlrange", "ctrllimited"),
}

_GEOM_SIZE_COUNTS = {
    GeomType.SPHERE: (1,),
    GeomType.CAPSULE: (1, 2),
    GeomType.BOX: (3,),
    GeomType.PLANE: (3,),
}


_UNIT_NORM_TOLERANCE = 1e-12


def _unit(values: Sequence[float], what: str, location: str) -> tuple:
    """``values`` scaled to unit norm; already-unit values come back unchanged."""
    norm = float(np.linalg.norm(values))
    if norm == 0:
        raise ModelParseError(f"{what} must be non-zero", location)
    if abs(norm - 1.0) <= _UNIT_NORM_TOLERANCE:
        return tuple(float(v) for v in values)
    return tuple(float(v) / norm for v in values)


class _Parser:
    """Recursive-descent walker over an ElementTree document."""

    def __init__(self) -> None:
        self._names: Dict[str, set] = {category: set() for category in CATEGORIES}

    # -- attribute helpers ---------------------------------------------------

    @staticmethod
    def _check_attributes(element: ET.Element, location: str) -> None:
        allowed = _ALLOWED_ATTRIBUTES[element.tag]
        for attribute in element.attrib:
            if attribute not in allowed:
                raise ModelParseError(
                    f"Unknown attribute '{attribute}' on <{element.tag}>", location
                )

    @staticmethod
    def _floats(
        element: ET.Element, attribute: str, location: str, counts: Sequence[int]
    ) -> Optional[Tuple[float, ...]]:
        raw = element.get(attribute)
        if raw is None:
            return None
        try:
            values = tuple(float(token) for token in raw.split())
        except ValueError:
            raise ModelParseError(f"Attribute '{attribute}' must be numeric, got {raw!r}", location)
        if len(values) not in counts:
            expected = " or ".join(str(c) for c in counts)
            raise ModelParseError(
                f"Attribute '{attribute}' needs {expected} values, got {len(values)}", location
            )
        if not all(math.isfinite(v) for v in values):
            raise ModelParseError(f"Attribute '{attribute}' must be finite", location)
        return values

    def _float(self, element: ET.Element, attribute: str, location: str, default: float) -> float:
        values = self._floats(element, attribute, location, (1,))
        return default if values is None else values[0]

    @staticmethod
    def _bool(element: ET.Element, attribute: str, location: str, default: bool) -> bool:
        raw = element.get(attribute)
        if raw is None:
            return default
        if raw not in ("true", "false"):
            raise ModelParseError(f"Attribute '{attribute}' must be true or false", location)
        return raw == "true"

    @staticmethod
    def _enum(element: ET.Element, attribute: str, location: str, enum_type, default):
        raw = element.get(attribute)
        if raw is None:
            return default
        try:
            return enum_type(raw)
        except ValueError:
            valid = ", ".join(member.value for member in enum_type)
            raise ModelParseError(
                f"Attribute '{attribute}' must be one of {valid}, got {raw!r}", location
            )

    def _register(self, category: str, name: Optional[str], location: str) -> None:
        if name is None:
            return
        if name == "":
            raise ModelParseError(f"Empty {category} name", location)
        if name in self._names[category]:
            raise ModelParseError(f"Duplicate {category} name '{name}'", location)
        self._names[category].add(name)

    @staticmethod
    def _required(element: ET.Element, attribute: str, location: str) -> str:
        value = element.get(attribute)
        if value is None:
            raise ModelParseError(f"<{element.tag}> requires attribute '{attribute}'", location)
        return value

    @staticmethod
    def _location(parent: str, element: ET.Element) -> str:
        name = element.get("name")
        label = f"{element.tag}[{name}]" if name else element.tag
        return f"{parent}/{label}"

    # -- elements ------------------------------------------------------------

    def parse(self, root: ET.Element) -> ModelSpec:
        location = "mujoco"
        if root.tag != "mujoco":
            raise ModelParseError(f"Root element must be <mujoco>, got <{root.tag}>", root.tag)
        self._check_attributes(root, location)
        self._register("body", "world", location)

        option = OptionSpec()
        worldbody = BodySpec(name="world")
        actuators: Tuple[ActuatorSpec, ...] = ()
        cameras: List[CameraSpec] = []
        lights: List[LightSpec] = []
        seen = set()
        for child in root:
            child_location = self._location(location, child)
            if child.tag not in ("option", "worldbody", "actuator"):
                raise ModelParseError(f"Unknown element <{child.tag}>", child_location)
            if child.tag in seen:
                raise ModelParseError(f"Repeated element <{child.tag}>", child_location)
            seen.add(child.tag)
            if child.tag == "option":
                option = self._option(child, child_location)
            elif child.tag == "worldbody":
                worldbody = self._body(child, child_location, world=True, cameras=cameras, lights=lights)
            else:
                actuators = self._actuators(child, child_location)

        spec = ModelSpec(
            model=root.get("model", "model"),
            option=option,
            worldbody=worldbody,
            actuators=actuators,
            cameras=tuple(cameras),
            lights=tuple(lights),
        )
        self._check_references(spec)
        return spec

    def _option(self, element: ET.Element, location: str) -> OptionSpec:
        self._check_attributes(element, location)
        if len(element):
            raise ModelParseError("<option> takes no children", location)
        timestep = self._float(element, "timestep", location, DEFAULT_TIMESTEP)
        if timestep <= 0:
            raise ModelParseError(f"timestep must be positive, got {timestep}", location)
        gravity = self._floats(element, "gravity", location, (3,)) or DEFAULT_GRAVITY
        integrator = self._enum(
            element, "integrator", location, Integrator, Integrator.SEMI_IMPLICIT_EULER
        )
        drag = self._bool(element, "drag", location, False)
        return OptionSpec(timestep=timestep, gravity=gravity, integrator=integrator, drag=drag)  # type: ignore[arg-type]

    def _body(
        self,
        element: ET.Element,
        location: str,
        world: bool,
        cameras: List[CameraSpec],
        lights: List[LightSpec],
    ) -> BodySpec:
        self._check_attributes(element, location)
        if world:
            name = "world"
            pos: Vec3 = (0.0, 0.0, 0.0)
            quat: Quat = IDENTITY_QUAT
            mocap = False
        else:
            name = self._required(element, "name", location)
            self._register("body", name, location)
            pos = self._floats(element, "pos", location, (3,)) or (0.0, 0.0, 0.0)  # type: ignore[assignment]
            quat = self._floats(element, "quat", location, (4,)) or IDENTITY_QUAT  # type: ignore[assignment]
            mocap = self._bool(element, "mocap", location, False)
            # Store normalised so compile never warns.
            quat = _unit(quat, "Body quaternion", location)

        joints: List[JointSpec] = []
        geoms: List[GeomSpec] = []
        sites: List[SiteSpec] = []
        children: List[BodySpec] = []
        for child in element:
            child_location = self._location(location, child)
            if child.tag == "body":
                children.append(self._body(child, child_location, False, cameras, lights))
            elif child.tag == "joint" and not world:
                joints.append(self._joint(child, child_location))
            elif child.tag == "geom":
                geoms.append(self._geom(child, child_location))
            elif child.tag == "site":
                sites.append(self._site(child, child_location))
            elif child.tag == "camera" and world:
                cameras.append(self._camera(child, child_location))
            elif child.tag == "light" and world:
                lights.append(self._light(child, child_location))
            else:
                raise ModelParseError(f"Unknown element <{child.tag}> here", child_location)

        if mocap and joints:
            raise ModelParseError("mocap bodies cannot have joints", location)
        return BodySpec(
            name=name,
            pos=pos,
            quat=quat,
            mocap=mocap,
            joints=tuple(joints),
            geoms=tuple(geoms),
            sites=tuple(sites),
            children=tuple(children),
        )

    def _joint(self, element: ET.Element, location: str) -> JointSpec:
        self._check_attributes(element, location)
        name = self._required(element, "name", location)
        self._register("joint", name, location)
        axis = self._floats(element, "axis", location, (3,)) or (0.0, 0.0, 1.0)
        axis = _unit(axis, "Joint axis", location)
        joint_range = self._floats(element, "range", location, (2,))
        if joint_range is not None and joint_range[0] > joint_range[1]:
            raise ModelParseError("Joint range lower bound exceeds upper bound", location)
        values = {}
        for attribute in ("damping", "stiffness", "armature"):
            values[attribute] = self._float(element, attribute, location, 0.0)
            if values[attribute] < 0:
                raise ModelParseError(f"{attribute} must be non-negative", location)
        return JointSpec(
            name=name,
            type=self._enum(element, "type", location, JointType, JointType.HINGE),
            axis=axis,  # type: ignore[arg-type]
            pos=self._floats(element, "pos", location, (3,)) or (0.0, 0.0, 0.0),  # type: ignore[arg-type]
            range=joint_range,  # type: ignore[arg-type]
            **values,
        )

    def _geom(self, element: ET.Element, location: str) -> GeomSpec:
        self._check_attributes(element, location)
        name = element.get("name")
        self._register("geom", name, location)
        geom_type = self._enum(element, "type", location, GeomType, GeomType.SPHERE)
        size = self._floats(element, "size", location, (1, 2, 3))
        if size is None:
            raise ModelParseError("<geom> requires attribute 'size'", location)
        if len(size) not in _GEOM_SIZE_COUNTS[geom_type]:
            raise ModelParseError(
                f"{geom_type.value} geoms take {_GEOM_SIZE_COUNTS[geom_type]} size values", location
            )
        if any(s < 0 for s in size):
            raise ModelParseError("Geom sizes must be non-negative", location)
        fromto = self._floats(element, "fromto", location, (6,))
        if fromto is not None:
            if geom_type is not GeomType.CAPSULE:
                raise ModelParseError("fromto is only supported on capsules", location)
            if len(size) != 1:
                raise ModelParseError("Capsules with fromto take a single radius", location)
            if element.get("pos") is not None or element.get("quat") is not None:
                raise ModelParseError("fromto cannot be combined with pos/quat", location)
            if np.allclose(fromto[:3], fromto[3:]):
                raise ModelParseError("fromto endpoints coincide", location)
        elif geom_type is GeomType.CAPSULE and len(size) != 2:
            raise ModelParseError("Capsules need fromto or a (radius, half-length) size", location)
        quat = self._floats(element, "quat", location, (4,)) or IDENTITY_QUAT
        quat = _unit(quat, "Geom quaternion", location)
        mass = element.get("mass")
        mass_value = self._float(element, "mass", location, 0.0) if mass is not None else None
        if mass_value is not None and mass_value < 0:
            raise ModelParseError("Geom mass must be non-negative", location)
        density = self._float(element, "density", location, DEFAULT_DENSITY)
        if density < 0:
            raise ModelParseError("Geom density must be non-negative", location)
        return GeomSpec(
            name=name,
            type=geom_type,
            size=size,
            pos=self._floats(element, "pos", location, (3,)) or (0.0, 0.0, 0.0),  # type: ignore[arg-type]
            quat=quat,  # type: ignore[arg-type]
            fromto=fromto,  # type: ignore[arg-type]
            rgba=self._floats(element, "rgba", location, (4,)),  # type: ignore[arg-type]
            material=element.get("material"),
            mass=mass_value,
            density=density,
        )

    def _site(self, element: ET.Element, location: str) -> SiteSpec:
        self._check_attributes(element, location)
        name = self._required(element, "name", location)
        self._register("site", name, location)
        return SiteSpec(
            name=name,
            pos=self._floats(element, "pos", location, (3,)) or (0.0, 0.0, 0.0),  # type: ignore[arg-type]
            size=self._float(element, "size", location, 0.01),
            rgba=self._floats(element, "rgba", location, (4,)),  # type: ignore[arg-type]
        )

    def _camera(self, element: ET.Element, location: str) -> CameraSpec:
        self._check_attributes(element, location)
        name = self._required(element, "name", location)
        self._register("camera", name, location)
        extent = self._float(element, "extent", location, 1.0)
        if extent <= 0:
            raise ModelParseError("Camera extent must be positive", location)
        mode = self._enum(element, "mode", location, CameraMode, CameraMode.FIXED)
        body = element.get("body")
        if mode is CameraMode.TRACK and body is None:
            raise ModelParseError("Tracking cameras need a 'body' attribute", location)
        return CameraSpec(
            name=name,
            pos=self._floats(element, "pos", location, (3,)) or (0.0, 0.0, 0.0),  # type: ignore[arg-type]
            extent=extent,
            mode=mode,
            body=body,
        )

    def _light(self, element: ET.Element, location: str) -> LightSpec:
        self._check_attributes(element, location)
        return LightSpec(
            name=element.get("name"),
            pos=self._floats(element, "pos", location, (3,)) or (0.0, 0.0, 0.0),  # type: ignore[arg-type]
            dir=self._floats(element, "dir", location, (3,)) or (0.0, 0.0, -1.0),  # type: ignore[arg-type]
        )

    def _actuators(self, element: ET.Element, location: str) -> Tuple[ActuatorSpec, ...]:
        self._check_attributes(element, location)
        actuators = []
        for child in element:
            child_location = self._location(location, child)
            if child.tag != "motor":
                raise ModelParseError(f"Unknown element <{child.tag}>", child_location)
            self._check_attributes(child, child_location)
            name = self._required(child, "name", child_location)
            self._register("actuator", name, child_location)
            ctrlrange = self._floats(child, "ctrlrange", child_location, (2,)) or (-1.0, 1.0)
            if ctrlrange[0] > ctrlrange[1]:
                raise ModelParseError("ctrlrange lower bound exceeds upper bound", child_location)
            actuators.append(
                ActuatorSpec(
                    name=name,
                    joint=self._required(child, "joint", child_location),
                    gear=self._float(child, "gear", child_location, 1.0),
                    ctrlrange=ctrlrange,  # type: ignore[arg-type]
                    ctrllimited=self._bool(child, "ctrllimited", child_location, True),
                )
            )
        return tuple(actuators)

    def _check_references(self, spec: ModelSpec) -> None:
        for actuator in spec.actuators:
            if actuator.joint not in self._names["joint"]:
                raise ModelParseError(
                    f"Actuator '{actuator.name}' references unknown joint '{actuator.joint}'",
                    f"mujoco/actuator/motor[{actuator.name}]",
                )
        for camera in spec.cameras:
            if camera.body is not None and camera.body not in self._names["body"]:
                raise ModelParseError(
                    f"Camera '{camera.name}' references unknown body '{camera.body}'",
                    f"mujoco/worldbody/camera[{camera.name}]",
                )
        for body, parent in spec.iter_bodies():
            if body.mocap and parent is not None and parent.name != "world":
                raise ModelParseError(
                    "mocap bodies must be children of the world", f"body[{body.name}]"
                )


def parse_model(text: str) -> ModelSpec:
    """
    Parse a model document into a validated ``ModelSpec``.

    Args:
        text: The XML document

    Returns:
        The parsed model with defaults applied

    Raises:
        ModelParseError: On malformed syntax, unknown elements or attributes,
            duplicate names or dangling references
    """
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        line, column = exc.position
        raise ModelParseError(f"Malformed document: {exc}", f"line {line}, column {column}")
    return _Parser().parse(root)


# ---------------------------------------------------------------------------
# Canonical serialisation
# ---------------------------------------------------------------------------


def _fmt(values: Union[float, Sequence[float]]) -> str:
    if isinstance(values, (int, float)):
        return repr(float(values))
    return " ".join(repr(float(v)) for v in values)


def _body_element(body: BodySpec, parent: ET.Element, world: bool) -> None:
    if world:
        element = parent
    else:
        element = ET.SubElement(parent, "body", name=body.name, pos=_fmt(body.pos), quat=_fmt(body.quat))
        if body.mocap:
            element.set("mocap", "true")
    for joint in body.joints:
        attrs = {
            "name": joint.name,
            "type": joint.type.value,
            "axis": _fmt(joint.axis),
            "pos": _fmt(joint.pos),
            "damping": _fmt(joint.damping),
            "stiffness": _fmt(joint.stiffness),
            "armature": _fmt(joint.armature),
        }
        if joint.range is not None:
            attrs["range"] = _fmt(joint.range)
        ET.SubElement(element, "joint", attrs)
    for geom in body.geoms:
        attrs = {"type": geom.type.value, "size": _fmt(geom.size), "density": _fmt(geom.density)}
        if geom.name is not None:
            attrs["name"] = geom.name
        if geom.fromto is not None:
            attrs["fromto"] = _fmt(geom.fromto)
        else:
            attrs["pos"] = _fmt(geom.pos)
            attrs["quat"] = _fmt(geom.quat)
        if geom.rgba is not None:
            attrs["rgba"] = _fmt(geom.rgba)
        if geom.material is not None:
            attrs["material"] = geom.material
        if geom.mass is not None:
            attrs["mass"] = _fmt(geom.mass)
        ET.SubElement(element, "geom", attrs)
    for site in body.sites:
        attrs = {"name": site.name, "pos": _fmt(site.pos), "size": _fmt(site.size)}
        if site.rgba is not None:
            attrs["rgba"] = _fmt(site.rgba)
        ET.SubElement(element, "site", attrs)
    for child in body.children:
        _body_element(child, element, world=False)


def serialize_model(spec: ModelSpec) -> str:
    """Write ``spec`` as a canonical document; ``parse_model`` inverts it exactly."""
    root = ET.Element("mujoco", model=spec.model)
    ET.SubElement(
        root,
        "option",
        timestep=_fmt(spec.option.timestep),
        gravity=_fmt(spec.option.gravity),
        integrator=spec.option.integrator.value,
        drag="true" if spec.option.drag else "false",
    )
    worldbody = ET.SubElement(root, "worldbody")
    for light in spec.lights:
        attrs = {"pos": _fmt(light.pos), "dir": _fmt(light.dir)}
        if light.name is not None:
            attrs["name"] = light.name
        ET.SubElement(worldbody, "light", attrs)
    for camera in spec.cameras:
        attrs = {
            "name": camera.name,
            "pos": _fmt(camera.pos),
            "extent": _fmt(camera.extent),
            "mode": camera.mode.value,
        }
        if camera.body is not None:
            attrs["body"] = camera.body
        ET.SubElement(worldbody, "camera", attrs)
    _body_element(spec.worldbody, worldbody, world=True)
    if spec.actuators:
        actuator = ET.SubElement(root, "actuator")
        for motor in spec.actuators:
            ET.SubElement(
                actuator,
                "motor",
                name=motor.name,
                joint=motor.joint,
                gear=_fmt(motor.gear),
                ctrlrange=_fmt(motor.ctrlrange),
                ctrllimited="true" if motor.ctrllimited else "false",
            )
    ET.indent(root)
    return ET.tostring(root, encoding="unicode")


def replace_geom(spec: ModelSpec, name: str, **changes) -> ModelSpec:
    """Return a copy of ``spec`` with the named geom's fields replaced."""
    found = False

    def visit(body: BodySpec) -> BodySpec:
        nonlocal found
        geoms = []
        for geom in body.geoms:
            if geom.name == name:
                found = True
                geom = dataclasses.replace(geom, **changes)
            geoms.append(geom)
        return dataclasses.replace(
            body, geoms=tuple(geoms), children=tuple(visit(c) for c in body.children)
        )

    worldbody = visit(spec.worldbody)
    if not found:
        raise NameLookupError(f"No geom named '{name}'")
    return dataclasses.replace(spec, worldbody=worldbody)


# ---------------------------------------------------------------------------
# Compilation
# ---------------------------------------------------------------------------


def _geom_frame(geom: GeomSpec) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Local position, rotation and 3-vector size of a geom."""
    size = np.zeros(3)
    if geom.fromto is not None:
        start = np.asarray(geom.fromto[:3])
        end = np.asarray(geom.fromto[3:])
        pos = (start + end) / 2.0
        mat = z_to_vector_mat(end - start)
        size[0] = geom.size[0]
        size[1] = np.linalg.norm(end - start) / 2.0
        return pos, mat, size
    size[: len(geom.size)] = geom.size
    return np.asarray(geom.pos, dtype=float), quat_to_mat(geom.quat), size


def _geom_mass_properties(geom_type: GeomType, size: np.ndarray, geom: GeomSpec) -> Tuple[float, np.ndarray]:
    """Mass and rotational inertia (about the geom centre, geom frame)."""
    if geom_type is GeomType.PLANE:
        return 0.0, np.zeros((3, 3))
    if geom_type is GeomType.SPHERE:
        radius = size[0]
        volume = 4.0 / 3.0 * math.pi * radius**3
    elif geom_type is GeomType.CAPSULE:
        radius, half_length = size[0], size[1]
        volume = math.pi * radius**2 * 2 * half_length + 4.0 / 3.0 * math.pi * radius**3
    else:
        volume = 8.0 * size[0] * size[1] * size[2]
    mass = geom.mass if geom.mass is not None else geom.density * volume
    if mass == 0:
        return 0.0, np.zeros((3, 3))

    if geom_type is GeomType.SPHERE:
        inertia = np.eye(3) * 0.4 * mass * size[0] ** 2
    elif geom_type is GeomType.BOX:
        a, b, c = size
        inertia = np.diag([b * b + c * c, a * a + c * c, a * a + b * b]) * mass / 3.0
    else:
        # Cylinder plus two hemispherical caps, mass split by volume.
        radius, half_length = size[0], size[1]
        length = 2 * half_length
        cylinder_volume = math.pi * radius**2 * length
        mass_cylinder = mass * cylinder_volume / volume
        mass_caps = mass - mass_cylinder
        offset = half_length + 3.0 * radius / 8.0
        axial = 0.5 * mass_cylinder * radius**2 + 0.4 * mass_caps * radius**2
        transverse = (
            mass_cylinder * (3 * radius**2 + length**2) / 12.0
            + 0.4 * mass_caps * radius**2
            + mass_caps * offset**2
        )
        inertia = np.diag([transverse, transverse, axial])
    return float(mass), inertia


def _readonly(array: np.ndarray) -> np.ndarray:
    array.flags.writeable = False
    return array


@dataclass(frozen=True, eq=False)
class CompiledModel:
    """Immutable, index-ordered arrays compiled from a ``ModelSpec``.

    Bodies are numbered in document pre-order with the world at index 0;
    joints, degrees of freedom and position coordinates share one numbering
    because only single-DoF joints exist.
    """

    spec: ModelSpec
    names: Dict[str, Tuple[str, ...]]
    nbody: int
    njnt: int
    nq: int
    nv: int
    ngeom: int
    nsite: int
    nu: int
    ncam: int
    nmocap: int
    timestep: float
    gravity: np.ndarray
    integrator: Integrator
    drag: bool
    body_parent: np.ndarray
    body_pos: np.ndarray
    body_mat: np.ndarray
    body_mocapid: np.ndarray
    body_mass: np.ndarray
    body_ipos: np.ndarray
    body_inertia: np.ndarray
    body_dofs: Tuple[Tuple[int, ...], ...]
    body_chain: Tuple[Tuple[int, ...], ...]
    body_subtree_mass: np.ndarray
    jnt_type: Tuple[JointType, ...]
    jnt_body: np.ndarray
    jnt_axis: np.ndarray
    jnt_pos: np.ndarray
    jnt_range: np.ndarray
    dof_damping: np.ndarray
    dof_stiffness: np.ndarray
    dof_armature: np.ndarray
    dof_ancestors: Tuple[Tuple[int, ...], ...]
    geom_type: Tuple[GeomType, ...]
    geom_body: np.ndarray
    geom_pos: np.ndarray
    geom_mat: np.ndarray
    geom_size: np.ndarray
    geom_rgba: np.ndarray
    geom_material: Tuple[Optional[str], ...]
    geom_mass: np.ndarray
    site_body: np.ndarray
    site_pos: np.ndarray
    site_size: np.ndarray
    site_rgba: np.ndarray
    actuator_joint: np.ndarray
    actuator_gear: np.ndarray
    actuator_ctrlrange: np.ndarray
    actuator_ctrllimited: np.ndarray
    actuator_moment: np.ndarray
    cam_pos: np.ndarray
    cam_extent: np.ndarray
    cam_mode: Tuple[CameraMode, ...]
    cam_body: np.ndarray
    mocap_body: np.ndarray
    mocap_pos0: np.ndarray
    _name_to_id: Dict[str, Dict[str, int]] = field(repr=False, default_factory=dict)

    def name2id(self, name: str, category: str) -> int:
        """Index of the element ``name`` in ``category``."""
        table = self._table(category)
        try:
            return table[name]
        except KeyError:
            raise NameLookupError(f"No {category} named '{name}'")

    def id2name(self, index: int, category: str) -> str:
        """Name of element ``index`` in ``category`` (empty for unnamed geoms)."""
        self._table(category)
        names = self.names[category]
        if not 0 <= index < len(names):
            raise NameLookupError(f"{category} index {index} out of range [0, {len(names)})")
        return names[index]

    def _table(self, category: str) -> Dict[str, int]:
        if category not in self._name_to_id:
            raise NameLookupError(
                f"Unknown category '{category}'; expected one of {', '.join(CATEGORIES)}"
            )
        return self._name_to_id[category]

    @property
    def actuated_dofs(self) -> np.ndarray:
        return self.actuator_joint


def compile_model(spec: ModelSpec) -> CompiledModel:
    """
    Compile a parsed model into flattened, index-ordered arrays.

    Args:
        spec: The parsed model

    Returns:
        The immutable ``CompiledModel``; indices follow document order
    """
    bodies: List[BodySpec] = []
    parents: List[int] = []
    index_of: Dict[int, int] = {}
    for body, parent in spec.iter_bodies():
        index_of[id(body)] = len(bodies)
        bodies.append(body)
        parents.append(-1 if parent is None else index_of[id(parent)])

    nbody = len(bodies)
    body_names = tuple(body.name for body in bodies)
    body_pos = np.array([body.pos for body in bodies], dtype=float).reshape(nbody, 3)
    body_mat = np.array([quat_to_mat(body.quat) for body in bodies]).reshape(nbody, 3, 3)

    mocap_bodies = [i for i, body in enumerate(bodies) if body.mocap]
    body_mocapid = np.full(nbody, -1, dtype=int)
    for mocap_index, body_index in enumerate(mocap_bodies):
        body_mocapid[body_index] = mocap_index

    joints: List[JointSpec] = []
    jnt_body: List[int] = []
    body_dofs: List[Tuple[int, ...]] = []
    for b, body in enumerate(bodies):
        dofs = []
        for joint in body.joints:
            dofs.append(len(joints))
            joints.append(joint)
            jnt_body.append(b)
        body_dofs.append(tuple(dofs))

    body_chain: List[Tuple[int, ...]] = []
    for b in range(nbody):
        inherited = body_chain[parents[b]] if parents[b] >= 0 else ()
        body_chain.append(inherited + body_dofs[b])

    dof_ancestors: List[Tuple[int, ...]] = []
    for j, b in enumerate(jnt_body):
        inherited = body_chain[parents[b]] if parents[b] >= 0 else ()
        own = body_dofs[b]
        dof_ancestors.append(inherited + own[: own.index(j) + 1])

    geom_specs: List[GeomSpec] = []
    geom_body: List[int] = []
    site_specs: List[SiteSpec] = []
    site_body: List[int] = []
    for b, body in enumerate(bodies):
        for geom in body.geoms:
            geom_specs.append(geom)
            geom_body.append(b)
        for site in body.sites:
            site_specs.append(site)
            site_body.append(b)

    ngeom = len(geom_specs)
    geom_pos = np.zeros((ngeom, 3))
    geom_mat = np.zeros((ngeom, 3, 3))
    geom_size = np.zeros((ngeom, 3))
    geom_mass = np.zeros(ngeom)
    geom_inertia = np.zeros((ngeom, 3, 3))
    for g, geom in enumerate(geom_specs):
        geom_pos[g], geom_mat[g], geom_size[g] = _geom_frame(geom)
        geom_mass[g], geom_inertia[g] = _geom_mass_properties(geom.type, geom_size[g], geom)

    body_mass = np.zeros(nbody)
    body_ipos = np.zeros((nbody, 3))
    body_inertia = np.zeros((nbody, 3, 3))
    for b in range(nbody):
        members = [g for g in range(ngeom) if geom_body[g] == b]
        mass = float(sum(geom_mass[g] for g in members))
        body_mass[b] = mass
        if mass == 0:
            continue
        com = sum(geom_mass[g] * geom_pos[g] for g in members) / mass
        inertia = np.zeros((3, 3))
        for g in members:
            offset = geom_pos[g] - com
            rotated = geom_mat[g] @ geom_inertia[g] @ geom_mat[g].T
            inertia += rotated + geom_mass[g] * (np.dot(offset, offset) * np.eye(3) - np.outer(offset, offset))
        body_ipos[b] = com
        body_inertia[b] = inertia

    subtree_mass = body_mass.copy()
    for b in range(nbody - 1, 0, -1):
        subtree_mass[parents[b]] += subtree_mass[b]

    joint_ids = {joint.name: j for j, joint in enumerate(joints)}
    nu = len(spec.actuators)
    actuator_joint = np.array([joint_ids[a.joint] for a in spec.actuators], dtype=int)
    actuator_gear = np.array([a.gear for a in spec.actuators], dtype=float)
    actuator_moment = np.zeros((len(joints), nu))
    for a in range(nu):
        actuator_moment[actuator_joint[a], a] = actuator_gear[a]

    cam_body = np.array(
        [body_names.index(c.body) if c.body is not None else -1 for c in spec.cameras], dtype=int
    )

    names: Dict[str, Tuple[str, ...]] = {
        "body": body_names,
        "joint": tuple(joint.name for joint in joints),
        "geom": tuple(geom.name or "" for geom in geom_specs),
        "site": tuple(site.name for site in site_specs),
        "actuator": tuple(a.name for a in spec.actuators),
        "camera": tuple(c.name for c in spec.cameras),
    }
    name_to_id = {
        category: {name: i for i, name in enumerate(entries) if name}
        for category, entries in names.items()
    }

    default_rgba = (0.5, 0.5, 0.5, 1.0)
    compiled = CompiledModel(
        spec=spec,
        names=names,
        nbody=nbody,
        njnt=len(joints),
        nq=len(joints),
        nv=len(joints),
        ngeom=ngeom,
        nsite=len(site_specs),
        nu=nu,
        ncam=len(spec.cameras),
        nmocap=len(mocap_bodies),
        timestep=spec.option.timestep,
        gravity=_readonly(np.asarray(spec.option.gravity, dtype=float)),
        integrator=spec.option.integrator,
        drag=spec.option.drag,
        body_parent=_readonly(np.asarray(parents, dtype=int)),
        body_pos=_readonly(body_pos),
        body_mat=_readonly(body_mat),
        body_mocapid=_readonly(body_mocapid),
        body_mass=_readonly(body_mass),
        body_ipos=_readonly(body_ipos),
        body_inertia=_readonly(body_inertia),
        body_dofs=tuple(body_dofs),
        body_chain=tuple(body_chain),
        body_subtree_mass=_readonly(subtree_mass),
        jnt_type=tuple(joint.type for joint in joints),
        jnt_body=_readonly(np.asarray(jnt_body, dtype=int)),
        jnt_axis=_readonly(np.array([j.axis for j in joints], dtype=float).reshape(-1, 3)),
        jnt_pos=_readonly(np.array([j.pos for j in joints], dtype=float).reshape(-1, 3)),
        jnt_range=_readonly(
            np.array(
                [j.range if j.range is not None else (-np.inf, np.inf) for j in joints], dtype=float
            ).reshape(-1, 2)
        ),
        dof_damping=_readonly(np.array([j.damping for j in joints], dtype=float)),
        dof_stiffness=_readonly(np.array([j.stiffness for j in joints], dtype=float)),
        dof_armature=_readonly(np.array([j.armature for j in joints], dtype=float)),
        dof_ancestors=tuple(dof_ancestors),
        geom_type=tuple(geom.type for geom in geom_specs),
        geom_body=_readonly(np.asarray(geom_body, dtype=int)),
        geom_pos=_readonly(geom_pos),
        geom_mat=_readonly(geom_mat),
        geom_size=_readonly(geom_size),
        geom_rgba=_readonly(
            np.array([g.rgba or default_rgba for g in geom_specs], dtype=float).reshape(-1, 4)
        ),
        geom_material=tuple(geom.material for geom in geom_specs),
        geom_mass=_readonly(geom_mass),
        site_body=_readonly(np.asarray(site_body, dtype=int)),
        site_pos=_readonly(np.array([s.pos for s in site_specs], dtype=float).reshape(-1, 3)),
        site_size=_readonly(np.array([s.size for s in site_specs], dtype=float)),
        site_rgba=_readonly(
            np.array([s.rgba or default_rgba for s in site_specs], dtype=float).reshape(-1, 4)
        ),
        actuator_joint=_readonly(actuator_joint),
        actuator_gear=_readonly(actuator_gear),
        actuator_ctrlrange=_readonly(
            np.array([a.ctrlrange for a in spec.actuators], dtype=float).reshape(-1, 2)
        ),
        actuator_ctrllimited=_readonly(
            np.array([a.ctrllimited for a in spec.actuators], dtype=bool)
        ),
        actuator_moment=_readonly(actuator_moment),
        cam_pos=_readonly(np.array([c.pos for c in spec.cameras], dtype=float).reshape(-1, 3)),
        cam_extent=_readonly(np.array([c.extent for c in spec.cameras], dtype=float)),
        cam_mode=tuple(c.mode for c in spec.cameras),
        cam_body=_readonly(cam_body),
        mocap_body=_readonly(np.asarray(mocap_bodies, dtype=int)),
        mocap_pos0=_readonly(
            np.array([bodies[b].pos for b in mocap_bodies], dtype=float).reshape(-1, 3)
        ),
        _name_to_id=name_to_id,
    )
    logger.debug(
        "Compiled model '%s': nbody=%d nq=%d nu=%d ngeom=%d",
        spec.model,
        nbody,
        compiled.nq,
        nu,
        ngeom,
    )
    return compiled


def name_to_id(model: CompiledModel, category: str, name: str) -> int:
    """Index of ``name`` within ``category``."""
    return model.name2id(name, category)


def id_to_name(model: CompiledModel, category: str, index: int) -> str:
    """Name of element ``index`` within ``category``."""
    return model.id2name(index, category)


def from_xml_string(text: str) -> CompiledModel:
    """Parse and compile a model document in one call."""
    return compile_model(parse_model(text))


def from_path(path: Union[str, Path]) -> CompiledModel:
    """Parse and compile a model file."""
    return from_xml_string(Path(path).read_text(encoding="utf-8"))
