"""Camera, viewport and display coordinates plus the cell discretization.

The viewport is the normalized ``[0, 1]^2`` plane every other module works
in. Camera and display pixels are related to it by independent per-axis
affine maps.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from pathlib import Path

CALIBRATION_SCHEMA_VERSION = 1


class DegenerateCalibrationError(ValueError):
    pass


class InvalidDiscretizationError(ValueError):
    pass


class Direction(enum.IntEnum):
    """Guidance direction. The integer value is the sign of the target edge."""

    LEFT = -1
    RIGHT = 1

    def flipped(self) -> "Direction":
        return Direction(-int(self))


def _clamp01(v: float) -> float:
    return 0.0 if v < 0.0 else 1.0 if v > 1.0 else v


@dataclass(frozen=True)
class ViewportPoint:
    x: float
    y: float

    def __post_init__(self):
        object.__setattr__(self, "x", _clamp01(float(self.x)))
        object.__setattr__(self, "y", _clamp01(float(self.y)))

    def mirrored(self) -> "ViewportPoint":
        return ViewportPoint(1.0 - self.x, self.y)

    def distance(self, other: "ViewportPoint") -> float:
        dx, dy = self.x - other.x, self.y - other.y
        return math.sqrt(dx * dx + dy * dy)


@dataclass(frozen=True)
class PixelPoint:
    """A camera or display pixel coordinate."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite pixel coordinate ({self.x}, {self.y})")


CameraPoint = PixelPoint
DisplayPoint = PixelPoint


def fit_axis_calibration(src: tuple[float, float], dst: tuple[float, float]) -> tuple[float, float]:
    """Exact two-point fit of ``dst = scale * src + offset``."""
    (s0, s1), (d0, d1) = src, dst
    if s0 == s1:
        raise DegenerateCalibrationError(f"coincident source values {s0!r}")
    scale = (d1 - d0) / (s1 - s0)
    offset = d0 - scale * s0
    return scale, offset


@dataclass(frozen=True)
class AxisAlignedCalibration:
    """Per-axis affine map ``x' = ax*x + bx``, ``y' = ay*y + by``."""

    ax: float = 1.0
    bx: float = 0.0
    ay: float = 1.0
    by: float = 0.0

    def __post_init__(self):
        if self.ax == 0 or self.ay == 0:
            raise DegenerateCalibrationError("calibration scale must be non-zero")
        for v in (self.ax, self.bx, self.ay, self.by):
            if not math.isfinite(v):
                raise DegenerateCalibrationError("calibration constants must be finite")

    @classmethod
    def from_points(cls, src_x, dst_x, src_y, dst_y) -> "AxisAlignedCalibration":
        ax, bx = fit_axis_calibration(src_x, dst_x)
        ay, by = fit_axis_calibration(src_y, dst_y)
        return cls(ax, bx, ay, by)

    @classmethod
    def from_viewport_corners(cls, left, right, top, bottom) -> "AxisAlignedCalibration":
        """Camera->viewport map from the four pixel boundaries of the viewport."""
        return cls.from_points((left, right), (0.0, 1.0), (top, bottom), (0.0, 1.0))

    def apply(self, x: float, y: float) -> tuple[float, float]:
        return self.ax * x + self.bx, self.ay * y + self.by

    def inverse(self) -> "AxisAlignedCalibration":
        return AxisAlignedCalibration(
            1.0 / self.ax, -self.bx / self.ax, 1.0 / self.ay, -self.by / self.ay
        )

    def compose(self, then: "AxisAlignedCalibration") -> "AxisAlignedCalibration":
        """The map ``then(self(p))``."""
        return AxisAlignedCalibration(
            then.ax * self.ax,
            then.ax * self.bx + then.bx,
            then.ay * self.ay,
            then.ay * self.by + then.by,
        )

    def to_dict(self) -> dict:
        return {
            "schema_version": CALIBRATION_SCHEMA_VERSION,
            "ax": self.ax,
            "bx": self.bx,
            "ay": self.ay,
            "by": self.by,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AxisAlignedCalibration":
        version = d.get("schema_version")
        if version != CALIBRATION_SCHEMA_VERSION:
            raise ValueError(f"unsupported calibration schema_version {version!r}")
        return cls(float(d["ax"]), float(d["bx"]), float(d["ay"]), float(d["by"]))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "AxisAlignedCalibration":
        return cls.from_dict(json.loads(Path(path).read_text()))


class ClampCounter:
    """Counts how often camera_to_viewport had to clamp a coordinate."""

    def __init__(self):
        self.count = 0


def camera_to_viewport(
    p: PixelPoint, cal: AxisAlignedCalibration, counter: ClampCounter | None = None
) -> ViewportPoint:
    x, y = cal.apply(p.x, p.y)
    if counter is not None and not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
        counter.count += 1
    return ViewportPoint(x, y)


def viewport_to_display(p: ViewportPoint, cal: AxisAlignedCalibration) -> PixelPoint:
    # no clamping: the display may extend past the panel and the renderer culls
    x, y = cal.apply(p.x, p.y)
    return PixelPoint(x, y)


def _check_w(W: int) -> None:
    if W < 2:
        raise InvalidDiscretizationError(f"need at least 2 cells, got W={W}")


def cell_of(x: float, W: int, direction: Direction) -> int:
    """Index of the cell containing viewport ``x``; cell ``W-1`` abuts the target edge.

    Right-guidance cells are ``[w/W, (w+1)/W)``, left-guidance cells are
    ``((W-w-1)/W, (W-w)/W]``. The two endpoints that fall outside every
    interval (``x=1`` for Right, ``x=0`` for Left) are clamped in.
    """
    _check_w(W)
    if direction == Direction.RIGHT:
        w = math.floor(x * W)
    else:
        w = W - math.ceil(x * W)
    return min(max(w, 0), W - 1)


def cell_center_x(w: int, W: int, direction: Direction) -> float:
    _check_w(W)
    if not 0 <= w < W:
        raise IndexError(f"cell {w} outside 0..{W - 1}")
    if direction == Direction.RIGHT:
        return (w + 0.5) / W
    return (W - w - 0.5) / W
