"""Camera-side measurement of the real-fish centroid.

Frames are ``(height, width, 3)`` uint8 arrays indexed ``[v, u]`` (row,
column); masks are boolean ``(height, width)`` arrays. Pixel ``(u, v)``
represents the camera coordinate ``(u, v)``, i.e. pixel centres sit on
integer coordinates.

Pipeline: background subtraction -> linear real/virtual pixel classifier ->
morphological opening -> image-moment centroid -> viewport calibration.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .geometry import AxisAlignedCalibration, PixelPoint, ViewportPoint, camera_to_viewport

RGB = tuple[int, int, int]

_SUPERSAMPLE = 4


class NoDetectionError(RuntimeError):
    pass


def _check_frame(frame: np.ndarray) -> None:
    if frame.ndim != 3 or frame.shape[2] != 3 or frame.dtype != np.uint8:
        raise ValueError(f"frame must be an (H, W, 3) uint8 array, got {frame.shape} {frame.dtype}")


def _check_same_size(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape[:2] != b.shape[:2]:
        raise ValueError(f"dimension mismatch: {a.shape[:2]} vs {b.shape[:2]}")


@dataclass(frozen=True)
class Body:
    center: tuple[float, float]  # camera (u, v)
    radii: tuple[float, float]  # (along u, along v)
    color: RGB


@dataclass
class SceneSpec:
    width: int = 640
    height: int = 540
    background: RGB = (200, 200, 200)
    real_bodies: list[Body] = field(default_factory=list)
    virtual_bodies: list[Body] = field(default_factory=list)
    noise: int = 0

    def __post_init__(self):
        for b in self.real_bodies + self.virtual_bodies:
            u, v = b.center
            if not (0 <= u < self.width and 0 <= v < self.height):
                raise ValueError(f"body centre {b.center} lies outside the {self.width}x{self.height} frame")


def _paint_ellipse(img: np.ndarray, body: Body) -> None:
    """Alpha-blend a filled ellipse using per-pixel supersampled coverage."""
    H, W, _ = img.shape
    cu, cv = body.center
    ru, rv = body.radii
    u0, u1 = max(0, int(np.floor(cu - ru - 1))), min(W, int(np.ceil(cu + ru + 2)))
    v0, v1 = max(0, int(np.floor(cv - rv - 1))), min(H, int(np.ceil(cv + rv + 2)))
    if u0 >= u1 or v0 >= v1:
        return
    offs = (np.arange(_SUPERSAMPLE) + 0.5) / _SUPERSAMPLE - 0.5
    us = np.arange(u0, u1)[None, :, None, None] + offs[None, None, None, :]
    vs = np.arange(v0, v1)[:, None, None, None] + offs[None, None, :, None]
    inside = ((us - cu) / ru) ** 2 + ((vs - cv) / rv) ** 2 <= 1.0
    cov = inside.mean(axis=(2, 3))[..., None]
    patch = img[v0:v1, u0:u1]
    patch[:] = cov * np.asarray(body.color, dtype=float) + (1.0 - cov) * patch


def render_frame(scene: SceneSpec, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Synthetic camera frame: virtual bodies on the display, real fish in front."""
    img = np.empty((scene.height, scene.width, 3), dtype=float)
    img[:] = scene.background
    for body in scene.virtual_bodies:
        _paint_ellipse(img, body)
    for body in scene.real_bodies:
        _paint_ellipse(img, body)
    out = np.rint(img)
    if scene.noise > 0:
        if rng is None:
            raise ValueError("a generator is required when noise > 0")
        out += rng.integers(-scene.noise, scene.noise + 1, size=out.shape)
    return np.clip(out, 0, 255).astype(np.uint8)


def background_subtract(frame: np.ndarray, background: np.ndarray, threshold: float) -> np.ndarray:
    _check_frame(frame)
    _check_frame(background)
    _check_same_size(frame, background)
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    diff = frame.astype(np.int32) - background.astype(np.int32)
    return (diff * diff).sum(axis=2) > threshold * threshold


@dataclass(frozen=True)
class PixelClassifier:
    """Linear decision function ``f(p) = w . p + b`` on raw 0-255 RGB."""

    weights: tuple[float, float, float]
    bias: float

    def __post_init__(self):
        if not np.all(np.isfinite(list(self.weights) + [self.bias])):
            raise ValueError("classifier weights must be finite")

    def decision(self, pixels: np.ndarray) -> np.ndarray:
        return np.asarray(pixels, dtype=float) @ np.asarray(self.weights) + self.bias

    def to_dict(self) -> dict:
        return {"weights": list(self.weights), "bias": self.bias}

    @classmethod
    def from_dict(cls, d: dict) -> "PixelClassifier":
        return cls(tuple(float(w) for w in d["weights"]), float(d["bias"]))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "PixelClassifier":
        return cls.from_dict(json.loads(Path(path).read_text()))


def train_pixel_classifier(
    pixels: Sequence[Sequence[float]],
    labels: Sequence[int],
    iterations: int = 2000,
    learning_rate: float = 1.0,
    reg: float = 1e-4,
) -> PixelClassifier:
    """Soft-margin linear classifier fit by full-batch subgradient descent on the hinge loss.

    Real-fish pixels carry label +1 and virtual-fish pixels -1. Inputs are
    scaled to [0, 1] internally; the returned weights apply to raw RGB.
    """
    X = np.asarray(pixels, dtype=float).reshape(-1, 3) / 255.0
    y = np.asarray(labels, dtype=float)
    if X.shape[0] != y.shape[0]:
        raise ValueError("pixels and labels differ in length")
    if not (np.any(y > 0) and np.any(y < 0)) or not np.all(np.abs(y) == 1):
        raise ValueError("labels must be +1/-1 with both classes present")
    w = np.zeros(3)
    b = 0.0
    n = len(y)
    for t in range(1, iterations + 1):
        lr = learning_rate / np.sqrt(t)
        viol = y * (X @ w + b) < 1.0
        gw = reg * w - (y[viol, None] * X[viol]).sum(axis=0) / n
        gb = -y[viol].sum() / n
        w -= lr * gw
        b -= lr * gb
    return PixelClassifier(tuple(float(v) for v in w / 255.0), float(b))


def classify_real_pixels(frame: np.ndarray, mask: np.ndarray, clf: PixelClassifier) -> np.ndarray:
    _check_frame(frame)
    _check_same_size(frame, mask)
    out = np.zeros_like(mask, dtype=bool)
    if mask.any():
        out[mask] = clf.decision(frame[mask]) > 0
    return out


def _shifted_windows(padded: np.ndarray, H: int, W: int):
    for dv in range(3):
        for du in range(3):
            yield padded[dv:dv + H, du:du + W]


def erode(mask: np.ndarray) -> np.ndarray:
    """3x3 erosion; pixels outside the image count as background."""
    H, W = mask.shape
    padded = np.pad(mask, 1, constant_values=False)
    out = np.ones_like(mask, dtype=bool)
    for win in _shifted_windows(padded, H, W):
        out &= win
    return out


def dilate(mask: np.ndarray) -> np.ndarray:
    H, W = mask.shape
    padded = np.pad(mask, 1, constant_values=False)
    out = np.zeros_like(mask, dtype=bool)
    for win in _shifted_windows(padded, H, W):
        out |= win
    return out


def opening(mask: np.ndarray, iterations: int) -> np.ndarray:
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    out = np.asarray(mask, dtype=bool)
    for _ in range(iterations):
        out = erode(out)
    for _ in range(iterations):
        out = dilate(out)
    return out


def moment_centroid(mask: np.ndarray) -> PixelPoint:
    """``(m10/m00, m01/m00)`` over set pixels, with ``x`` the column index."""
    vs, us = np.nonzero(mask)
    if us.size == 0:
        raise NoDetectionError("no foreground pixels")
    return PixelPoint(float(us.mean()), float(vs.mean()))


@dataclass(frozen=True)
class VisionParams:
    bg_threshold: float = 60.0
    opening_iterations: int = 2


def track(frame: np.ndarray, background: np.ndarray, clf: PixelClassifier, k: int,
          threshold: float, cal: AxisAlignedCalibration) -> ViewportPoint:
    """Real-school centroid in viewport coordinates; raises NoDetectionError."""
    mask = background_subtract(frame, background, threshold)
    mask = classify_real_pixels(frame, mask, clf)
    mask = opening(mask, k)
    return camera_to_viewport(moment_centroid(mask), cal)


class Tracker:
    """Sequential tracker that falls back to the last detected centroid."""

    def __init__(self, background: np.ndarray, clf: PixelClassifier, cal: AxisAlignedCalibration,
                 params: VisionParams = VisionParams()):
        self.background = background
        self.clf = clf
        self.cal = cal
        self.params = params
        self.last: Optional[ViewportPoint] = None

    def __call__(self, frame: np.ndarray) -> tuple[Optional[ViewportPoint], bool]:
        try:
            p = track(frame, self.background, self.clf, self.params.opening_iterations,
                      self.params.bg_threshold, self.cal)
        except NoDetectionError:
            return self.last, False
        self.last = p
        return p, True


# --- synthetic scene layout -------------------------------------------------

@dataclass(frozen=True)
class SceneStyle:
    """How simulated positions are drawn into a camera frame."""

    width: int = 640
    height: int = 540
    viewport_left: float = 40.0
    viewport_right: float = 600.0
    viewport_top: float = 60.0
    viewport_bottom: float = 480.0
    background: RGB = (200, 200, 200)
    real_color: RGB = (30, 30, 30)
    virtual_color: RGB = (240, 120, 60)
    real_radii: tuple[float, float] = (22.0, 9.0)
    virtual_radii: tuple[float, float] = (14.0, 5.0)
    # virtual fish move as one unit with these camera-pixel offsets from their centroid
    virtual_offsets: tuple[tuple[float, float], ...] = ((-26.0, -18.0), (26.0, -18.0), (-26.0, 18.0), (26.0, 18.0))
    noise: int = 5

    def calibration(self) -> AxisAlignedCalibration:
        """Camera -> viewport map."""
        return AxisAlignedCalibration.from_viewport_corners(
            self.viewport_left, self.viewport_right, self.viewport_top, self.viewport_bottom
        )

    def to_camera(self, p: ViewportPoint) -> tuple[float, float]:
        u, v = self.calibration().inverse().apply(p.x, p.y)
        return u, v

    def scene(self, school: Optional[ViewportPoint], virtual: Optional[ViewportPoint]) -> SceneSpec:
        real = []
        if school is not None:
            real.append(Body(self.to_camera(school), self.real_radii, self.real_color))
        virt = []
        if virtual is not None:
            cu, cv = self.to_camera(virtual)
            for du, dv in self.virtual_offsets:
                u = min(max(cu + du, 0.0), self.width - 1.0)
                v = min(max(cv + dv, 0.0), self.height - 1.0)
                virt.append(Body((u, v), self.virtual_radii, self.virtual_color))
        return SceneSpec(self.width, self.height, self.background, real, virt, self.noise)

    def background_frame(self) -> np.ndarray:
        return render_frame(SceneSpec(self.width, self.height, self.background))

    def training_pixels(self, rng: np.random.Generator, n: int = 500) -> tuple[np.ndarray, np.ndarray]:
        """Labeled real (+1) and virtual (-1) body colours with rendering noise."""
        jitter = max(self.noise, 1)
        real = np.asarray(self.real_color) + rng.integers(-jitter, jitter + 1, size=(n, 3))
        virt = np.asarray(self.virtual_color) + rng.integers(-jitter, jitter + 1, size=(n, 3))
        X = np.clip(np.vstack([real, virt]), 0, 255)
        y = np.concatenate([np.ones(n), -np.ones(n)])
        return X, y


# --- binary PPM -------------------------------------------------------------

_PPM_TOKEN = re.compile(rb"(?:\s|#[^\n]*\n)*(\S+)")


def write_ppm(path, frame: np.ndarray) -> None:
    _check_frame(frame)
    H, W, _ = frame.shape
    with open(path, "wb") as fh:
        fh.write(b"P6\n%d %d\n255\n" % (W, H))
        fh.write(np.ascontiguousarray(frame).tobytes())


def read_ppm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    pos = 0
    tokens = []
    for _ in range(4):
        m = _PPM_TOKEN.match(data, pos)
        if m is None:
            raise ValueError(f"{path}: truncated PPM header")
        tokens.append(m.group(1))
        pos = m.end()
    magic, w, h, maxval = tokens
    if magic != b"P6" or int(maxval) != 255:
        raise ValueError(f"{path}: only 8-bit binary PPM (P6) is supported")
    W, H = int(w), int(h)
    pos += 1  # single whitespace byte after maxval
    body = data[pos:pos + W * H * 3]
    if len(body) != W * H * 3:
        raise ValueError(f"{path}: expected {W * H * 3} pixel bytes, found {len(body)}")
    return np.frombuffer(body, dtype=np.uint8).reshape(H, W, 3).copy()
