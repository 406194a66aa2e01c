"""Brute-force references for validating the screen-space passes.

Nothing here reuses the passes' sampling code: sector coverage is decided by
an explicit per-sector overlap loop and ground-truth AO is ray cast against
the analytic scene in world space.
"""

from __future__ import annotations

import math

import numpy as np

from .bitmask import VisibilityBitmask, n_words
from .buffers import CameraModel, GBuffer
from .passes import REFERENCE_SECTORS, PassConfig, render_ao
from .scenegen import AnalyticScene, trace_rays

HIT_OFFSET = 1e-3
MEASURES = ("cosine", "slice")
_CHUNK = 4096  # pixels per random stream; fixed so results never depend on scheduling


# --- sector coverage --------------------------------------------------------

def sectors_bruteforce(theta_min, theta_max, n_sectors) -> VisibilityBitmask:
    """Set bit k iff the arc covers at least half of sector k.

    Coverage is measured in sector units (one sector = 1.0) so the half-width
    test is a plain comparison against 0.5.
    """
    if theta_min > theta_max:
        raise ValueError("theta_min must not exceed theta_max")
    lo = min(max(theta_min, -0.5 * math.pi), 0.5 * math.pi)
    hi = min(max(theta_max, -0.5 * math.pi), 0.5 * math.pi)
    u0 = (lo + 0.5 * math.pi) * (n_sectors / math.pi)
    u1 = (hi + 0.5 * math.pi) * (n_sectors / math.pi)
    bits = 0
    for k in range(n_sectors):
        overlap = min(u1, k + 1.0) - max(u0, float(k))
        if overlap >= 0.5:
            bits |= 1 << k
    return VisibilityBitmask(bits, n_sectors)


def sectors_bruteforce_grid(theta_min, theta_max, n_sectors):
    """Vectorized :func:`sectors_bruteforce`; returns uint64 words (..., n_words)."""
    lo = np.clip(np.asarray(theta_min, dtype=np.float64), -0.5 * math.pi, 0.5 * math.pi)
    hi = np.clip(np.asarray(theta_max, dtype=np.float64), -0.5 * math.pi, 0.5 * math.pi)
    lo, hi = np.broadcast_arrays(lo, hi)
    u0 = ((lo + 0.5 * math.pi) * (n_sectors / math.pi))[..., None]
    u1 = ((hi + 0.5 * math.pi) * (n_sectors / math.pi))[..., None]
    words = np.zeros(lo.shape + (n_words(n_sectors),), dtype=np.uint64)
    for k in range(n_sectors):
        cover = (np.minimum(u1, k + 1.0) - np.maximum(u0, float(k)))[..., 0] >= 0.5
        words[..., k // 64] |= cover.astype(np.uint64) << np.uint64(k % 64)
    return words


# --- fine-sector reference --------------------------------------------------

def fine_slice_reference(gb: GBuffer, config: PassConfig = PassConfig(), *, threads=1, backend=None):
    """Bitmask AO with 4096 sectors and otherwise identical settings and seeds."""
    return render_ao(gb, config.with_(sectors=REFERENCE_SECTORS, ambient_subregions=1),
                     threads=threads, backend=backend)


# --- world-space ray cast AO ------------------------------------------------

def _hemisphere_dirs(normals, u1, u2):
    """Cosine-weighted directions around unit ``normals`` (P, 3) for samples (P, R)."""
    r = np.sqrt(u1)
    a = 2.0 * math.pi * u2
    local = np.stack([r * np.cos(a), r * np.sin(a), np.sqrt(np.maximum(1.0 - u1, 0.0))], axis=-1)
    # any orthonormal frame will do; build one from the least aligned axis
    helper = np.where(np.abs(normals[:, :1]) < 0.9, [[1.0, 0.0, 0.0]], [[0.0, 1.0, 0.0]])
    e1 = np.cross(normals, helper)
    e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
    e2 = np.cross(normals, e1)
    return (local[..., :1] * e1[:, None] + local[..., 1:2] * e2[:, None]
            + local[..., 2:] * normals[:, None])


def _samples(rng, count, rays, stratified):
    if not stratified:
        return rng.random((count, rays)), rng.random((count, rays))
    # Latin hypercube: one sample per stratum in each dimension
    strata = np.arange(rays)
    u1 = (strata + rng.random((count, rays))) / rays
    perm = np.argsort(rng.random((count, rays)), axis=1)
    u2 = (perm + rng.random((count, rays))) / rays
    return u1, u2


def _slice_dirs(normals, views, frames, u1, u2):
    """Directions spread uniformly in (azimuth, angle) over view-aligned hemisphere slices.

    This is the measure a sector count integrates: slice azimuths are uniform
    in screen space and, within a slice, the angle is uniform over the half
    circle centered on the projected normal.
    """
    phi = math.pi * u2
    d = (np.cos(phi)[..., None] * frames[0][:, None] + np.sin(phi)[..., None] * frames[1][:, None])
    v = views[:, None]
    t = d - np.sum(d * v, axis=-1, keepdims=True) * v
    t /= np.linalg.norm(t, axis=-1, keepdims=True)
    n = normals[:, None]
    n_angle = np.arctan2(np.sum(n * t, axis=-1), np.sum(n * v, axis=-1))
    theta = n_angle + math.pi * (u1 - 0.5)
    return np.cos(theta)[..., None] * v + np.sin(theta)[..., None] * t


def ao_at_points(scene: AnalyticScene, points, normals, rays, max_dist, *, seed=0, stratified=True,
                 measure="cosine", eye=None, screen_axes=None):
    """Unoccluded fraction of hemisphere rays within ``max_dist`` of each point.

    ``measure="cosine"`` samples the cosine-weighted hemisphere. ``"slice"``
    samples the uniform slice-angle measure of the screen-space passes and
    needs the camera ``eye`` and world-space ``screen_axes`` (right, up).
    """
    if measure not in MEASURES:
        raise ValueError(f"measure must be one of {MEASURES}")
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    normals = np.atleast_2d(np.asarray(normals, dtype=np.float64))
    normals = normals / np.linalg.norm(normals, axis=1, keepdims=True)
    if rays < 1 or not max_dist > 0:
        raise ValueError("need rays >= 1 and max_dist > 0")
    out = np.empty(len(points))
    seq = np.random.SeedSequence(seed)
    for c, start in enumerate(range(0, len(points), _CHUNK)):
        sl = slice(start, start + _CHUNK)
        rng = np.random.default_rng(np.random.SeedSequence(seq.entropy, spawn_key=(c,)))
        n = normals[sl]
        u1, u2 = _samples(rng, len(n), rays, stratified)
        if measure == "cosine":
            dirs = _hemisphere_dirs(n, u1, u2)
        else:
            views = np.asarray(eye, dtype=np.float64) - points[sl]
            views /= np.linalg.norm(views, axis=1, keepdims=True)
            axes = [np.broadcast_to(np.asarray(a, dtype=np.float64), n.shape) for a in screen_axes]
            dirs = _slice_dirs(n, views, axes, u1, u2)
        dirs = dirs.reshape(-1, 3)
        origins = np.repeat(points[sl] + HIT_OFFSET * n, rays, axis=0)
        t, _, _ = trace_rays(scene, origins, dirs, max_dist)
        out[sl] = (~np.isfinite(t)).reshape(len(n), rays).mean(axis=1)
    return out


def primary_hits(scene: AnalyticScene, camera: CameraModel | None = None):
    """World-space hit points and ray-facing normals per pixel; misses are NaN."""
    camera = camera or scene.camera
    rays = camera.dir_view_to_world(camera.pixel_rays().reshape(-1, 3))
    rays /= np.linalg.norm(rays, axis=1, keepdims=True)
    t, n, _ = trace_rays(scene, np.broadcast_to(camera.eye, rays.shape), rays)
    hit = np.isfinite(t)
    pts = np.where(hit[:, None], camera.eye + rays * np.where(hit, t, 0.0)[:, None], np.nan)
    shape = (camera.height, camera.width, 3)
    return pts.reshape(shape), np.where(hit[:, None], n, np.nan).reshape(shape)


def world_ao_reference(scene: AnalyticScene, camera: CameraModel | None = None, rays_per_pixel=256,
                       max_dist=2.0, *, region=None, seed=0, stratified=True, measure="cosine"):
    """Ray-cast AO image (1 = unoccluded); sky pixels are 1.

    See :func:`ao_at_points` for ``measure``. ``region`` is an optional ``(rows, cols)`` pair of slices restricting the
    work to a sub-rectangle; other pixels are NaN.
    """
    camera = camera or scene.camera
    pts, nrm = primary_hits(scene, camera)
    ao = np.ones((camera.height, camera.width))
    todo = np.isfinite(pts[..., 0])
    if region is not None:
        keep = np.zeros_like(todo)
        keep[region] = True
        ao[~keep] = np.nan
        todo &= keep
    axes = camera.dir_view_to_world(np.eye(3)[:2])
    ao[todo] = ao_at_points(scene, pts[todo], nrm[todo], rays_per_pixel, max_dist, seed=seed,
                            stratified=stratified, measure=measure, eye=camera.eye, screen_axes=axes)
    return ao
