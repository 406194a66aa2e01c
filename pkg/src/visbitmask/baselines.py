"""Comparison techniques: horizon-based AO, bent-normal ambient and ray-marched GI."""

from __future__ import annotations

import numpy as np

from .buffers import GBuffer
from .environment import DEFAULT_ENV, AmbientEnvironment
from .passes import PassConfig, _kernels, bitmask_pass, run_rows
from .slicemath import MODE_CODES

FALLOFFS = ("none", "linear")


def render_gtao(gb: GBuffer, config: PassConfig = PassConfig(), falloff="none", *, threads=1,
                backend=None):
    """Horizon-based AO: each slice side keeps only its highest horizon.

    The result is the uniform-angle fraction of the slice between the two
    horizons, so it is directly comparable to bitmask AO. ``falloff="linear"``
    fades samples toward the unoccluded horizon as distance approaches the
    radius, the usual heuristic for hiding missing thickness.
    """
    if falloff not in FALLOFFS:
        raise ValueError(f"falloff must be one of {FALLOFFS}")
    h, _ = gb.shape
    ao = np.zeros(gb.shape)
    cam = gb.camera
    kern = _kernels(backend).gtao_rows
    c = config

    def rows(y0, y1):
        kern(gb.depth, gb.normal, y0, y1, cam.tan_half_fov, cam.aspect, float(c.radius),
             int(c.samples), int(c.slices), MODE_CODES[c.step_mode], np.uint64(c.seed),
             int(c.frames), float(c.range_factor), falloff == "linear", ao)

    run_rows(rows, h, threads, backend)
    return ao


def _env_view(env, camera, dirs):
    h, s, axis = env.view_params(camera)
    return np.maximum(h + s * (dirs @ axis)[..., None], 0.0)


def render_bent_normal_ambient(gb: GBuffer, config: PassConfig = PassConfig(),
                               env: AmbientEnvironment | None = None, *, threads=1, backend=None):
    """Environment sampled once along the bent normal, scaled by bitmask AO."""
    env = env or DEFAULT_ENV
    out = bitmask_pass(gb, config, env, gi=False, ambient=True, threads=threads, backend=backend)
    return _env_view(env, gb.camera, out["bent"]) * out["ao"][..., None]


def render_normal_ambient(gb: GBuffer, config: PassConfig = PassConfig(),
                          env: AmbientEnvironment | None = None, *, threads=1, backend=None):
    """Environment sampled along the shading normal, scaled by bitmask AO."""
    env = env or DEFAULT_ENV
    out = bitmask_pass(gb, config, env, gi=False, ambient=True, threads=threads, backend=backend)
    dirs = np.where(gb.surface[..., None], gb.normal, out["bent"])
    return _env_view(env, gb.camera, dirs) * out["ao"][..., None]


def render_ssr_gi(gb: GBuffer, config: PassConfig = PassConfig(), rays_per_pixel=2, *, threads=1,
                  backend=None):
    """Screen-space ray-marched one-bounce GI with cosine-weighted rays.

    Each ray takes ``config.samples`` steps out to ``config.radius`` and
    contributes the first surface it passes behind within the thickness.
    """
    if rays_per_pixel < 1:
        raise ValueError("rays_per_pixel must be >= 1")
    h, _ = gb.shape
    gi = np.zeros(gb.shape + (3,))
    cam = gb.camera
    kern = _kernels(backend).ssr_rows
    c = config

    def rows(y0, y1):
        kern(gb.depth, gb.normal, gb.light, y0, y1, cam.tan_half_fov, cam.aspect, float(cam.near),
             float(c.radius), int(c.samples), int(rays_per_pixel), float(c.thickness),
             float(c.thickness_linear), np.uint64(c.seed), int(c.frames), gi)

    run_rows(rows, h, threads, backend)
    return gi
