"""Analytic scenes: planes, spheres and boxes ray cast into G-buffers.

The same intersection code answers single-ray queries for the oracles, so a
G-buffer pixel can always be checked against a direct ``trace_ray`` call.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .buffers import SKY, CameraModel, GBuffer
from .environment import DEFAULT_ENV, AmbientEnvironment

RAY_EPSILON = 1e-4
SHADOW_OFFSET = 1e-3


def _vec(v):
    a = np.array(v, dtype=np.float64).reshape(3)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Plane:
    point: np.ndarray
    normal: np.ndarray
    albedo: np.ndarray = (0.7, 0.7, 0.7)

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=np.float64)
        object.__setattr__(self, "normal", _vec(n / np.linalg.norm(n)))
        object.__setattr__(self, "point", _vec(self.point))
        object.__setattr__(self, "albedo", _vec(self.albedo))

    def intersect(self, o, d):
        denom = d @ self.normal
        with np.errstate(divide="ignore", invalid="ignore"):
            t = ((self.point - o) @ self.normal) / denom
        t = np.where(np.abs(denom) > 1e-12, t, np.inf)
        n = np.broadcast_to(self.normal, o.shape)
        return t, n


@dataclass(frozen=True)
class Sphere:
    center: np.ndarray
    radius: float
    albedo: np.ndarray = (0.7, 0.7, 0.7)

    def __post_init__(self):
        object.__setattr__(self, "center", _vec(self.center))
        object.__setattr__(self, "albedo", _vec(self.albedo))
        if self.radius <= 0:
            raise ValueError("sphere radius must be positive")

    def intersect(self, o, d):
        oc = o - self.center
        b = np.einsum("ij,ij->i", oc, d)
        c = np.einsum("ij,ij->i", oc, oc) - self.radius**2
        disc = b * b - c
        root = np.sqrt(np.maximum(disc, 0.0))
        t0, t1 = -b - root, -b + root
        t = np.where(t0 > RAY_EPSILON, t0, t1)
        t = np.where(disc >= 0.0, t, np.inf)
        hit = o + d * np.where(np.isfinite(t), t, 0.0)[:, None]
        return t, (hit - self.center) / self.radius


@dataclass(frozen=True)
class Box:
    lo: np.ndarray
    hi: np.ndarray
    albedo: np.ndarray = (0.7, 0.7, 0.7)

    def __post_init__(self):
        object.__setattr__(self, "lo", _vec(self.lo))
        object.__setattr__(self, "hi", _vec(self.hi))
        object.__setattr__(self, "albedo", _vec(self.albedo))
        if (self.hi <= self.lo).any():
            raise ValueError("box requires lo < hi on every axis")

    def intersect(self, o, d):
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = 1.0 / d
            t_a = (self.lo - o) * inv
            t_b = (self.hi - o) * inv
        inside = (o >= self.lo) & (o <= self.hi)
        zero = d == 0.0
        t_a = np.where(zero, np.where(inside, -np.inf, np.inf), t_a)
        t_b = np.where(zero, np.where(inside, np.inf, np.inf), t_b)
        t_near = np.minimum(t_a, t_b)
        t_far = np.maximum(t_a, t_b)
        # parallel and outside the slab: never hit
        t_near = np.where(zero & ~inside, np.inf, t_near)
        enter = t_near.max(axis=1)
        leave = t_far.min(axis=1)
        hit = (leave >= enter) & (leave > RAY_EPSILON)
        from_outside = enter > RAY_EPSILON
        t = np.where(hit, np.where(from_outside, enter, leave), np.inf)
        axis = np.where(from_outside, t_near.argmax(axis=1), t_far.argmin(axis=1))
        n = np.zeros_like(o)
        rows = np.arange(len(o))
        n[rows, axis] = -np.sign(d[rows, axis])
        n[rows, axis] = np.where(n[rows, axis] == 0.0, 1.0, n[rows, axis])
        return t, n


@dataclass(frozen=True)
class AnalyticScene:
    primitives: tuple
    sun_direction: np.ndarray
    sun_radiance: np.ndarray
    ambient_env: AmbientEnvironment = DEFAULT_ENV
    camera: CameraModel | None = None
    name: str = "custom"
    marks: dict = field(default_factory=dict)

    def __post_init__(self):
        s = np.asarray(self.sun_direction, dtype=np.float64)
        object.__setattr__(self, "sun_direction", _vec(s / np.linalg.norm(s)))
        object.__setattr__(self, "sun_radiance", _vec(self.sun_radiance))
        object.__setattr__(self, "primitives", tuple(self.primitives))


@dataclass(frozen=True)
class Hit:
    distance: float
    normal: np.ndarray
    albedo: np.ndarray


def trace_rays(scene: AnalyticScene, origins, directions, t_max=np.inf):
    """Nearest hits for a batch of rays.

    Returns ``(t, normal, albedo)``; misses have ``t = inf``. Normals face the
    incoming ray (surfaces are two-sided).
    """
    o = np.atleast_2d(np.asarray(origins, dtype=np.float64))
    d = np.atleast_2d(np.asarray(directions, dtype=np.float64))
    o, d = np.broadcast_arrays(o, d)
    best = np.full(len(d), np.inf)
    normal = np.zeros_like(d)
    albedo = np.zeros_like(d)
    for prim in scene.primitives:
        t, n = prim.intersect(o, d)
        closer = (t > RAY_EPSILON) & (t < best) & (t < t_max)
        best = np.where(closer, t, best)
        normal[closer] = n[closer]
        albedo[closer] = prim.albedo
    facing = np.einsum("ij,ij->i", normal, d) > 0.0
    normal[facing] *= -1.0
    return best, normal, albedo


def trace_ray(scene: AnalyticScene, origin, direction, t_max=np.inf):
    """Single-ray query; returns a :class:`Hit` or ``None`` on a miss."""
    direction = np.asarray(direction, dtype=np.float64)
    if abs(np.linalg.norm(direction) - 1.0) > 1e-6:
        raise ValueError("ray direction must be unit length")
    if not t_max > 0:
        raise ValueError("t_max must be positive")
    t, n, a = trace_rays(scene, origin, direction, t_max)
    if not np.isfinite(t[0]):
        return None
    return Hit(float(t[0]), n[0].copy(), a[0].copy())


def occluded(scene: AnalyticScene, origins, directions, t_max=np.inf):
    t, _, _ = trace_rays(scene, origins, directions, t_max)
    return np.isfinite(t)


def synthesize_gbuffer(scene: AnalyticScene, camera: CameraModel | None = None) -> GBuffer:
    """Primary-ray G-buffer with hard sun shadows; one ray per pixel center."""
    camera = camera or scene.camera
    if camera is None:
        raise ValueError("no camera given and the scene has no default camera")
    h, w = camera.height, camera.width
    rays_view = camera.pixel_rays().reshape(-1, 3)
    rays_view /= np.linalg.norm(rays_view, axis=1, keepdims=True)
    rays_world = camera.dir_view_to_world(rays_view)
    eye = np.broadcast_to(camera.eye, rays_world.shape)

    depth = np.full(h * w, SKY)
    normal = np.zeros((h * w, 3))
    light = np.zeros((h * w, 3))
    albedo = np.zeros((h * w, 3))
    if scene.primitives:
        t, n_world, alb = trace_rays(scene, eye, rays_world)
        hit = np.isfinite(t)
        depth[hit] = -t[hit] * rays_view[hit, 2]
        normal[hit] = camera.dir_world_to_view(n_world[hit])
        albedo[hit] = alb[hit]
        sun = scene.sun_direction
        cos_l = n_world[hit] @ sun
        points = eye[hit] + rays_world[hit] * t[hit, None]
        lit = cos_l > 0.0
        shadow = np.zeros(hit.sum())
        if lit.any():
            origins = points[lit] + n_world[hit][lit] * SHADOW_OFFSET
            shadow[lit] = ~occluded(scene, origins, sun)
        light[hit] = alb[hit] * scene.sun_radiance * (np.maximum(cos_l, 0.0) * shadow)[:, None]
    normal /= np.maximum(np.linalg.norm(normal, axis=1, keepdims=True), 1e-30)
    return GBuffer(depth.reshape(h, w), normal.reshape(h, w, 3),
                   light.reshape(h, w, 3), albedo.reshape(h, w, 3), camera)


# --- builtin scenes ---------------------------------------------------------

SCENE_NAMES = ("flat", "poles", "fence", "corner", "sphere_on_plane", "thin_wall")
GROUND_ALBEDO = (0.7, 0.7, 0.7)


def _ground():
    return Plane((0.0, 0.0, 0.0), (0.0, 1.0, 0.0), GROUND_ALBEDO)


def _scene_flat():
    prims = [_ground()]
    cam = dict(eye=(0.0, 2.0, 0.0), target=(0.0, 0.0, 2.0))
    return prims, (0.0, 1.0, 0.0), cam, {}


def _scene_poles():
    prims = [_ground()]
    for x in (-1.2, -0.6, 0.0, 0.6, 1.2):
        prims.append(Box((x - 0.05, 0.0, -0.05), (x + 0.05, 2.0, 0.05), (0.8, 0.8, 0.8)))
    cam = dict(eye=(0.0, 1.2, 4.5), target=(0.0, 0.6, 0.0))
    return prims, (0.4, 1.0, 0.6), cam, {"behind_pole": (0.3, 0.0, -0.4)}


def _scene_fence():
    prims = [_ground(), Plane((0.0, 0.0, -1.0), (0.0, 0.0, 1.0), (0.75, 0.7, 0.65))]
    for i in range(-4, 5):
        x = 0.4 * i
        prims.append(Box((x - 0.04, 0.0, 0.46), (x + 0.04, 1.6, 0.54), (0.5, 0.5, 0.55)))
    cam = dict(eye=(0.0, 1.0, 4.5), target=(0.0, 0.8, -1.0))
    return prims, (0.3, 1.0, 0.7), cam, {"behind_bars": (0.275, 1.0, -1.0)}


def _scene_corner():
    prims = [
        _ground(),
        Box((-0.2, 0.0, 0.0), (0.0, 2.5, 4.0), (0.8, 0.35, 0.3)),   # sunlit wall, faces +x
        Box((0.0, 0.0, -0.2), (4.0, 2.5, 0.0), (0.75, 0.75, 0.7)),  # grazed wall, faces +z
    ]
    cam = dict(eye=(3.2, 1.8, 3.2), target=(0.0, 0.9, 0.0))
    # sun direction has no z component: it grazes the +z-facing wall exactly
    return prims, (1.0, 1.2, 0.0), cam, {"shadowed_wall": (1.0, 1.0, 0.0),
                                           "sunlit_wall": (0.0, 1.0, 1.0)}


def _scene_sphere_on_plane():
    prims = [_ground(), Sphere((0.0, 1.0, 0.0), 1.0, (0.8, 0.8, 0.8))]
    cam = dict(eye=(0.0, 2.5, 4.5), target=(0.0, 0.6, 0.0))
    return prims, (0.5, 1.0, 0.3), cam, {"contact": (0.0, 0.0, 0.0)}


def _scene_thin_wall(thickness=0.2):
    if thickness <= 0:
        raise ValueError("wall thickness must be positive")
    prims = [
        _ground(),
        Plane((0.0, 0.0, 0.0), (0.0, 0.0, 1.0), (0.75, 0.7, 0.65)),
        Box((-1.0, 0.0, 1.0), (1.0, 1.6, 1.0 + thickness), (0.6, 0.6, 0.65)),
    ]
    cam = dict(eye=(0.0, 1.2, 5.0), target=(0.0, 1.0, 0.0))
    return prims, (0.3, 1.0, 0.5), cam, {"behind_wall": (1.45, 1.0, 0.0)}


_BUILDERS = {
    "flat": _scene_flat,
    "poles": _scene_poles,
    "fence": _scene_fence,
    "corner": _scene_corner,
    "sphere_on_plane": _scene_sphere_on_plane,
    "thin_wall": _scene_thin_wall,
}


def builtin_scene(name: str, width=256, height=256, **params) -> AnalyticScene:
    """Fixed test scenes; ``thin_wall`` accepts ``thickness`` (default 0.2)."""
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise ValueError(f"unknown scene {name!r}; expected one of {SCENE_NAMES}") from None
    prims, sun, cam, marks = builder(**params)
    camera = CameraModel.look_at(cam["eye"], cam["target"], width=width, height=height)
    return AnalyticScene(prims, sun, (3.0, 3.0, 3.0), DEFAULT_ENV, camera, name,
                         {k: np.asarray(v, dtype=np.float64) for k, v in marks.items()})


def mark_patch(scene: AnalyticScene, mark: str, camera: CameraModel | None = None, size=8):
    """Row/column slices of a ``size``-square pixel patch centered on a marked world point."""
    from .buffers import project_view_position

    camera = camera or scene.camera
    x, y, _ = project_view_position(camera.world_to_view(scene.marks[mark]), camera)
    x0 = int(np.floor(x)) - size // 2
    y0 = int(np.floor(y)) - size // 2
    if x0 < 0 or y0 < 0 or x0 + size > camera.width or y0 + size > camera.height:
        raise ValueError(f"patch around {mark!r} leaves the image")
    return slice(y0, y0 + size), slice(x0, x0 + size)


def empty_scene(camera: CameraModel) -> AnalyticScene:
    return AnalyticScene((), (0.0, 1.0, 0.0), (1.0, 1.0, 1.0), DEFAULT_ENV, camera, "empty")
