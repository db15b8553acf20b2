"""Bounded reward shaping: the ``tolerance`` function and its sigmoid families.

Every value produced here lies in the unit interval, so products and means of
tolerance terms stay in ``[0, 1]`` as well.
"""

import enum
import math
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from .errors import ParameterError

ArrayOrFloat = Union[float, np.ndarray]


class SigmoidKind(str, enum.Enum):
    """Shapes available for the decay outside the tolerance interval."""

    GAUSSIAN = "gaussian"
    HYPERBOLIC = "hyperbolic"
    LONG_TAIL = "long_tail"
    LINEAR = "linear"
    COSINE = "cosine"
    QUADRATIC = "quadratic"

    @property
    def infinite_support(self) -> bool:
        return self in (
            SigmoidKind.GAUSSIAN,
            SigmoidKind.HYPERBOLIC,
            SigmoidKind.LONG_TAIL,
        )


def _coerce_kind(kind: Union[str, SigmoidKind]) -> SigmoidKind:
    try:
        return SigmoidKind(kind)
    except ValueError:
        valid = ", ".join(k.value for k in SigmoidKind)
        raise ParameterError(f"Unknown sigmoid kind {kind!r}; expected one of {valid}")


def _check_value_at_margin(kind: SigmoidKind, value_at_margin: float) -> None:
    if kind.infinite_support:
        if not 0.0 < value_at_margin < 1.0:
            raise ParameterError(
                f"value_at_margin must be in (0, 1) for {kind.value}, got {value_at_margin}"
            )
    elif not 0.0 <= value_at_margin < 1.0:
        raise ParameterError(
            f"value_at_margin must be in [0, 1) for {kind.value}, got {value_at_margin}"
        )


def sigmoid(
    r: ArrayOrFloat,
    kind: Union[str, SigmoidKind] = SigmoidKind.GAUSSIAN,
    value_at_margin: float = 0.1,
) -> ArrayOrFloat:
    """
    Evaluate a unit sigmoid with S(0) = 1 and S(1) = value_at_margin.

    Args:
        r: Non-negative normalised distance(s) from the tolerance interval
        kind: One of the six ``SigmoidKind`` shapes
        value_at_margin: Output at r = 1

    Returns:
        Values in [0, 1], non-increasing in r; same shape as ``r``
    """
    kind = _coerce_kind(kind)
    _check_value_at_margin(kind, value_at_margin)
    x = np.asarray(r, dtype=float)
    if np.any(x < 0):
        raise ParameterError("sigmoid is defined for r >= 0 only")

    if kind is SigmoidKind.GAUSSIAN:
        scale = math.sqrt(-2.0 * math.log(value_at_margin))
        out = np.exp(-0.5 * (x * scale) ** 2)
    elif kind is SigmoidKind.HYPERBOLIC:
        scale = math.acosh(1.0 / value_at_margin)
        out = 1.0 / np.cosh(x * scale)
    elif kind is SigmoidKind.LONG_TAIL:
        scale = math.sqrt(1.0 / value_at_margin - 1.0)
        out = 1.0 / ((x * scale) ** 2 + 1.0)
    elif kind is SigmoidKind.LINEAR:
        scaled = x * (1.0 - value_at_margin)
        out = np.where(scaled < 1.0, 1.0 - scaled, 0.0)
    elif kind is SigmoidKind.COSINE:
        scale = math.acos(2.0 * value_at_margin - 1.0) / math.pi
        scaled = x * scale
        out = np.where(scaled < 1.0, (1.0 + np.cos(math.pi * scaled)) / 2.0, 0.0)
    else:
        scaled = x * math.sqrt(1.0 - value_at_margin)
        out = np.where(scaled < 1.0, 1.0 - scaled**2, 0.0)

    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class ToleranceParams:
    """Validated parameters of a tolerance term."""

    bounds: Tuple[float, float] = (0.0, 0.0)
    margin: float = 0.0
    sigmoid_kind: SigmoidKind = SigmoidKind.GAUSSIAN
    value_at_margin: float = 0.1

    def __post_init__(self) -> None:
        lower, upper = (float(b) for b in self.bounds)
        if math.isnan(lower) or math.isnan(upper) or lower > upper:
            raise ParameterError(f"Lower bound must be <= upper bound, got {self.bounds}")
        if not self.margin >= 0:
            raise ParameterError(f"margin must be non-negative, got {self.margin}")
        kind = _coerce_kind(self.sigmoid_kind)
        _check_value_at_margin(kind, self.value_at_margin)
        object.__setattr__(self, "bounds", (lower, upper))
        object.__setattr__(self, "sigmoid_kind", kind)

    def __call__(self, x: ArrayOrFloat) -> ArrayOrFloat:
        lower, upper = self.bounds
        values = np.asarray(x, dtype=float)
        in_bounds = np.logical_and(lower <= values, values <= upper)
        if self.margin == 0:
            out = np.where(in_bounds, 1.0, 0.0)
        else:
            distance = np.where(values < lower, lower - values, values - upper)
            distance = np.where(in_bounds, 0.0, distance) / self.margin
            out = np.where(
                in_bounds,
                1.0,
                sigmoid(distance, self.sigmoid_kind, self.value_at_margin),
            )
        if out.ndim == 0:
            return float(out)
        return out


def tolerance(
    x: ArrayOrFloat,
    bounds: Tuple[float, float] = (0.0, 0.0),
    margin: float = 0.0,
    sigmoid: Union[str, SigmoidKind] = SigmoidKind.GAUSSIAN,
    value_at_margin: float = 0.1,
) -> ArrayOrFloat:
    """
    Return 1 when ``x`` lies inside ``bounds`` and a sigmoid decay outside.

    Args:
        x: Scalar or array input
        bounds: Inclusive ``(lower, upper)`` interval; infinite ends are allowed
        margin: Distance at which the output equals ``value_at_margin``;
            zero gives a sparse 0/1 indicator
        sigmoid: Decay shape outside the interval
        value_at_margin: Output at distance ``margin`` from the interval

    Returns:
        A float (for scalar input) or array in [0, 1]
    """
    params = ToleranceParams(
        bounds=bounds,
        margin=margin,
        sigmoid_kind=_coerce_kind(sigmoid),
        value_at_margin=value_at_margin,
    )
    return params(x)
