"""Name-indexed views onto model and state arrays.

``physics.named.data.qpos["up_down"]`` reads and writes the same storage as
``physics.data.qpos[0]``; two-dimensional fields additionally accept column
labels, e.g. ``physics.named.data.geom_xpos["box", ["x", "z"]]``.
"""

from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ContractError, NameLookupError

XYZ = ("x", "y", "z")
MAT = ("xx", "xy", "xz", "yx", "yy", "yz", "zx", "zy", "zz")
RGBA = ("r", "g", "b", "a")
SPATIAL = ("wx", "wy", "wz", "vx", "vy", "vz")
RANGE = ("lower", "upper")
ENERGY = ("potential", "kinetic")

# field -> (row category, column labels)
DATA_FIELDS: Dict[str, Tuple[Optional[str], Optional[Tuple[str, ...]]]] = {
    "qpos": ("joint", None),
    "qvel": ("joint", None),
    "qacc": ("joint", None),
    "qfrc_bias": ("joint", None),
    "ctrl": ("actuator", None),
    "mocap_pos": ("mocap", XYZ),
    "xpos": ("body", XYZ),
    "xmat": ("body", MAT),
    "xipos": ("body", XYZ),
    "cvel": ("body", SPATIAL),
    "geom_xpos": ("geom", XYZ),
    "geom_xmat": ("geom", MAT),
    "site_xpos": ("site", XYZ),
    "energy": (None, ENERGY),
}

MODEL_FIELDS: Dict[str, Tuple[Optional[str], Optional[Tuple[str, ...]]]] = {
    "body_pos": ("body", XYZ),
    "body_mass": ("body", None),
    "body_ipos": ("body", XYZ),
    "body_subtree_mass": ("body", None),
    "jnt_axis": ("joint", XYZ),
    "jnt_pos": ("joint", XYZ),
    "jnt_range": ("joint", RANGE),
    "dof_damping": ("joint", None),
    "dof_stiffness": ("joint", None),
    "dof_armature": ("joint", None),
    "geom_pos": ("geom", XYZ),
    "geom_size": ("geom", XYZ),
    "geom_rgba": ("geom", RGBA),
    "geom_mass": ("geom", None),
    "site_pos": ("site", XYZ),
    "site_size": ("site", None),
    "actuator_gear": ("actuator", None),
    "actuator_ctrlrange": ("actuator", RANGE),
    "cam_pos": ("camera", XYZ),
    "cam_extent": ("camera", None),
}

Key = Union[int, str, slice, Sequence[Any], np.ndarray]


class NamedArray:
    """A thin wrapper that translates names into indices of ``array``."""

    def __init__(
        self,
        array: np.ndarray,
        row_names: Optional[Sequence[str]] = None,
        column_labels: Optional[Sequence[str]] = None,
        field_name: str = "",
    ) -> None:
        self._array = array
        self._field = field_name
        self._row_names = tuple(row_names) if row_names is not None else None
        self._row_ids = (
            {name: i for i, name in enumerate(self._row_names) if name}
            if self._row_names is not None
            else {}
        )
        self._column_labels = tuple(column_labels) if column_labels is not None else None
        self._column_ids = (
            {label: i for i, label in enumerate(self._column_labels)}
            if self._column_labels is not None
            else {}
        )

    @property
    def array(self) -> np.ndarray:
        return self._array

    @property
    def shape(self) -> Tuple[int, ...]:
        return self._array.shape

    def __len__(self) -> int:
        return len(self._array)

    def __array__(self, dtype=None, copy=None) -> np.ndarray:
        return np.asarray(self._array, dtype=dtype)

    def _translate(self, key: Key, table: Dict[str, int], axis: str) -> Any:
        if isinstance(key, str):
            try:
                return table[key]
            except KeyError:
                raise NameLookupError(f"No {axis} '{key}' in {self._field or 'array'}")
        if isinstance(key, (list, tuple)) and any(isinstance(k, str) for k in key):
            return [self._translate(k, table, axis) for k in key]
        return key

    def _index(self, key: Key) -> Any:
        # Row-less fields (e.g. ``energy``) are indexed by column label only.
        if self._row_names is None and self._column_labels is not None:
            return self._translate(key, self._column_ids, "column")
        if isinstance(key, tuple):
            if len(key) != 2:
                raise NameLookupError(f"Expected (row, column) index, got {key!r}")
            row, column = key
            if self._column_labels is None and (
                isinstance(column, str)
                or (isinstance(column, (list, tuple)) and any(isinstance(c, str) for c in column))
            ):
                raise NameLookupError(f"{self._field or 'array'} has no column labels")
            return (
                self._translate(row, self._row_ids, "row"),
                self._translate(column, self._column_ids, "column"),
            )
        return self._translate(key, self._row_ids, "row")

    def __getitem__(self, key: Key) -> Any:
        return self._array[self._index(key)]

    def __setitem__(self, key: Key, value: Any) -> None:
        if not self._array.flags.writeable:
            raise ContractError(
                f"'{self._field}' is read-only here; write state inside physics.reset_context()"
            )
        self._array[self._index(key)] = value

    def __repr__(self) -> str:
        array = np.atleast_1d(self._array)
        if self._row_names is None:
            if self._column_labels is None:
                return repr(self._array)
            return "  ".join(f"{label}={value:.6g}" for label, value in zip(self._column_labels, array))
        width = max([len(name) for name in self._row_names] + [1])
        lines = []
        if self._column_labels is not None:
            header = " " * (width + len(str(len(self._row_names))) + 3)
            lines.append(header + "".join(f"{label:<10}" for label in self._column_labels))
        for i, name in enumerate(self._row_names):
            values = np.atleast_1d(array[i]) if i < len(array) else np.array([])
            cells = "".join(f"{value:<10.6g}" for value in values)
            lines.append(f"{i} {name:>{width}} [ {cells}]")
        return "\n".join(lines)


class _FieldIndexer:
    """Attribute access to named views over a fixed set of fields."""

    def __init__(
        self,
        source: Any,
        fields: Dict[str, Tuple[Optional[str], Optional[Tuple[str, ...]]]],
        names: Dict[str, Sequence[str]],
    ) -> None:
        self._source = source
        self._fields = fields
        self._names = names
        self._cache: Dict[str, NamedArray] = {}

    def __getattr__(self, field_name: str) -> NamedArray:
        if field_name.startswith("_"):
            raise AttributeError(field_name)
        if field_name not in self._fields:
            raise NameLookupError(
                f"No named field '{field_name}'; available: {', '.join(sorted(self._fields))}"
            )
        if field_name not in self._cache:
            category, columns = self._fields[field_name]
            rows = self._names[category] if category is not None else None
            self._cache[field_name] = NamedArray(
                getattr(self._source, field_name), rows, columns, field_name
            )
        return self._cache[field_name]

    def __dir__(self) -> List[str]:
        return sorted(self._fields)


class NamedIndexStructs:
    """``named.model`` and ``named.data`` containers bound to one physics."""

    def __init__(self, model: Any, data: Any) -> None:
        names: Dict[str, Sequence[str]] = dict(model.names)
        names["mocap"] = tuple(model.names["body"][b] for b in model.mocap_body)
        self.model = _FieldIndexer(model, MODEL_FIELDS, names)
        self.data = _FieldIndexer(data, DATA_FIELDS, names)


def named_view(array: np.ndarray, model: Any, category: str, column_labels: Optional[Sequence[str]] = None) -> NamedArray:
    """Wrap ``array`` so its rows are addressed by the names of ``category``."""
    if category == "mocap":
        rows: Sequence[str] = tuple(model.names["body"][b] for b in model.mocap_body)
    elif category in model.names:
        rows = model.names[category]
    else:
        raise NameLookupError(f"Unknown category '{category}'")
    if len(array) != len(rows):
        raise ContractError(
            f"Array has {len(array)} rows but model has {len(rows)} {category} entries"
        )
    return NamedArray(array, rows, column_labels, category)
