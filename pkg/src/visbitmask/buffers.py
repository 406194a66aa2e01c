"""Camera model, G-buffer container and view-space reconstruction.

View space is right-handed with the camera at the origin looking down -Z.
Depth images store linear view-space depth (``-z``); sky pixels hold ``+inf``.
Pixel coordinates are continuous with ``(i + 0.5, j + 0.5)`` the center of
pixel column ``i``, row ``j``; row 0 is the top of the image.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SKY = np.inf
NORMAL_TOLERANCE = 1e-4


class NoSurfaceError(ValueError):
    """Raised when a view position is requested for a sky pixel."""


class GBufferError(ValueError):
    pass


def _frozen(a, dtype=np.float64):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class CameraModel:
    width: int
    height: int
    vertical_fov: float
    near: float = 0.05
    far: float = 1000.0
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        if int(self.width) < 1 or int(self.height) < 1:
            raise ValueError("camera width and height must be >= 1")
        if not 0.0 < self.near < self.far:
            raise ValueError("camera requires 0 < near < far")
        if not 0.0 < self.vertical_fov < np.pi:
            raise ValueError("vertical_fov must lie in (0, pi)")
        object.__setattr__(self, "width", int(self.width))
        object.__setattr__(self, "height", int(self.height))
        rot = _frozen(self.rotation)
        if rot.shape != (3, 3) or not np.allclose(rot @ rot.T, np.eye(3), atol=1e-9):
            raise ValueError("rotation must be a 3x3 orthonormal matrix")
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", _frozen(self.translation).reshape(3))

    @classmethod
    def look_at(cls, eye, target, up=(0.0, 1.0, 0.0), *, width=256, height=256,
                vertical_fov=np.radians(60.0), near=0.05, far=1000.0):
        eye = np.asarray(eye, dtype=np.float64)
        forward = np.asarray(target, dtype=np.float64) - eye
        forward /= np.linalg.norm(forward)
        right = np.cross(forward, np.asarray(up, dtype=np.float64))
        right /= np.linalg.norm(right)
        true_up = np.cross(right, forward)
        rot = np.stack([right, true_up, -forward])
        return cls(width, height, float(vertical_fov), near, far, rot, -rot @ eye)

    @property
    def tan_half_fov(self) -> float:
        return float(np.tan(0.5 * self.vertical_fov))

    @property
    def aspect(self) -> float:
        return self.width / self.height

    @property
    def eye(self) -> np.ndarray:
        return -self.rotation.T @ self.translation

    def world_to_view(self, points):
        return np.asarray(points, dtype=np.float64) @ self.rotation.T + self.translation

    def view_to_world(self, points):
        return (np.asarray(points, dtype=np.float64) - self.translation) @ self.rotation

    def dir_world_to_view(self, dirs):
        return np.asarray(dirs, dtype=np.float64) @ self.rotation.T

    def dir_view_to_world(self, dirs):
        return np.asarray(dirs, dtype=np.float64) @ self.rotation

    def pixel_rays(self):
        """Unnormalized view-space ray directions (z = -1) through every pixel center."""
        xs = (np.arange(self.width) + 0.5) / self.width * 2.0 - 1.0
        ys = 1.0 - (np.arange(self.height) + 0.5) / self.height * 2.0
        th = self.tan_half_fov
        rays = np.empty((self.height, self.width, 3))
        rays[..., 0] = (xs * th * self.aspect)[None, :]
        rays[..., 1] = (ys * th)[:, None]
        rays[..., 2] = -1.0
        return rays

    def projected_radius(self, radius, depth):
        """Screen-space length in pixels of a world length ``radius`` at ``depth``."""
        return radius * self.height / (2.0 * self.tan_half_fov * depth)


def reconstruct_view_position(x, y, depth, camera: CameraModel):
    """View-space point seen through continuous pixel coords ``(x, y)`` at ``depth``.

    Broadcasts over array inputs. Scalar sky depth raises ``NoSurfaceError``.
    """
    depth = np.asarray(depth, dtype=np.float64)
    if depth.ndim == 0 and not (np.isfinite(depth) and depth > 0):
        raise NoSurfaceError("pixel has no surface (sky or invalid depth)")
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    th = camera.tan_half_fov
    ndc_x = x / camera.width * 2.0 - 1.0
    ndc_y = 1.0 - y / camera.height * 2.0
    return np.stack(np.broadcast_arrays(ndc_x * th * camera.aspect * depth,
                                        ndc_y * th * depth, -depth), axis=-1)


def project_view_position(p, camera: CameraModel):
    """Inverse of :func:`reconstruct_view_position`: returns ``(x, y, depth)``."""
    p = np.asarray(p, dtype=np.float64)
    depth = -p[..., 2]
    th = camera.tan_half_fov
    ndc_x = p[..., 0] / (depth * th * camera.aspect)
    ndc_y = p[..., 1] / (depth * th)
    return (ndc_x + 1.0) * 0.5 * camera.width, (1.0 - ndc_y) * 0.5 * camera.height, depth


def view_positions(depth, camera: CameraModel):
    """Per-pixel view positions (H, W, 3); sky pixels are zero. Returns (positions, surface mask)."""
    depth = np.asarray(depth, dtype=np.float64)
    mask = np.isfinite(depth)
    pos = camera.pixel_rays() * np.where(mask, depth, 0.0)[..., None]
    return pos, mask


@dataclass(frozen=True)
class GBuffer:
    depth: np.ndarray
    normal: np.ndarray
    light: np.ndarray
    albedo: np.ndarray
    camera: CameraModel

    def __post_init__(self):
        for name in ("depth", "normal", "light", "albedo"):
            object.__setattr__(self, name, _frozen(getattr(self, name), np.float32))

    @property
    def shape(self):
        return self.depth.shape

    @property
    def surface(self):
        return np.isfinite(self.depth)

    def with_light(self, light) -> GBuffer:
        return GBuffer(self.depth, self.normal, light, self.albedo, self.camera)


def validate(gb: GBuffer) -> None:
    """Check every G-buffer invariant; raises ``GBufferError`` on the first violation."""
    h, w = gb.camera.height, gb.camera.width
    if gb.depth.shape != (h, w):
        raise GBufferError(f"depth shape {gb.depth.shape} != camera {(h, w)}")
    for name in ("normal", "light", "albedo"):
        if getattr(gb, name).shape != (h, w, 3):
            raise GBufferError(f"{name} shape {getattr(gb, name).shape} != {(h, w, 3)}")
    if np.isnan(gb.depth).any():
        raise GBufferError("depth contains NaN")
    surf = gb.surface
    if (gb.depth[surf] <= 0).any() or (np.isinf(gb.depth) & (gb.depth < 0)).any():
        raise GBufferError("depth must be positive or +inf (sky)")
    lengths = np.linalg.norm(gb.normal[surf].astype(np.float64), axis=-1)
    if lengths.size and np.abs(lengths - 1.0).max() > NORMAL_TOLERANCE:
        raise GBufferError("non-sky normals must be unit length")
    if not np.isfinite(gb.light).all() or (gb.light < 0).any():
        raise GBufferError("light must be finite and non-negative")
    if not np.isfinite(gb.albedo).all() or (gb.albedo < 0).any() or (gb.albedo > 1).any():
        raise GBufferError("albedo must lie in [0, 1]")


@dataclass(frozen=True)
class OutputFrame:
    ao: np.ndarray
    gi: np.ndarray
    ambient: np.ndarray

    def validate(self):
        if not (np.isfinite(self.ao).all() and (self.ao >= 0).all() and (self.ao <= 1).all()):
            raise ValueError("ao must lie in [0, 1]")
        for name in ("gi", "ambient"):
            img = getattr(self, name)
            if not np.isfinite(img).all() or (img < 0).any():
                raise ValueError(f"{name} must be finite and non-negative")
