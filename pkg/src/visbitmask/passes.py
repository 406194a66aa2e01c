"""Bitmask AO, indirect diffuse and directionally occluded ambient passes.

All passes shade pixels independently: output values do not depend on the
thread count or on how rows are split between workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import kernels_numpy
from ._jit import resolve_backend
from .buffers import GBuffer, OutputFrame
from .environment import DEFAULT_ENV, AmbientEnvironment
from .slicemath import MODE_CODES, STEP_MODES

SECTOR_COUNTS = (8, 16, 32, 64, 128)
REFERENCE_SECTORS = 4096


class ConfigError(ValueError):
    pass


class DivergenceError(RuntimeError):
    """Multi-bounce feedback grew without bound."""


@dataclass(frozen=True)
class PassConfig:
    radius: float = 2.0
    samples: int = 16
    slices: int = 1
    sectors: int = 32
    thickness: float = 0.2
    thickness_linear: float = 0.0
    step_mode: str = "constant"
    seed: int = 0
    frames: int = 1
    ambient_subregions: int = 4
    range_factor: float = 2.0

    def __post_init__(self):
        for name in ("samples", "slices", "frames", "ambient_subregions"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.sectors not in SECTOR_COUNTS + (REFERENCE_SECTORS,):
            raise ConfigError(f"sectors must be one of {SECTOR_COUNTS} (or {REFERENCE_SECTORS} "
                              f"for the reference), got {self.sectors}")
        if self.sectors % self.ambient_subregions:
            raise ConfigError("ambient_subregions must divide the sector count")
        if not (self.radius > 0 and self.thickness > 0):
            raise ConfigError("radius and thickness must be positive")
        if self.thickness_linear < 0 or self.range_factor <= 0:
            raise ConfigError("thickness_linear must be >= 0 and range_factor > 0")
        if self.step_mode not in STEP_MODES:
            raise ConfigError(f"step_mode must be one of {STEP_MODES}")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must fit in 64 unsigned bits")

    def with_(self, **changes) -> PassConfig:
        return replace(self, **changes)


def _kernels(backend):
    if resolve_backend(backend) == "numba":
        from . import kernels_numba
        return kernels_numba
    return kernels_numpy


def run_rows(fn, height, threads=1, backend=None):
    """Call ``fn(y0, y1)`` over disjoint row blocks covering ``[0, height)``."""
    threads = max(int(threads), 1)
    rows = 8 if resolve_backend(backend) == "numpy" else max(1, math.ceil(height / (4 * threads)))
    blocks = [(y, min(y + rows, height)) for y in range(0, height, rows)]
    with np.errstate(invalid="ignore", over="ignore"):
        if threads == 1:
            for y0, y1 in blocks:
                fn(y0, y1)
            return
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for fut in [pool.submit(fn, y0, y1) for y0, y1 in blocks]:
                fut.result()


def _camera_args(gb):
    cam = gb.camera
    return cam.tan_half_fov, cam.aspect


def bitmask_pass(gb: GBuffer, config: PassConfig, env: AmbientEnvironment | None = None, *,
                 gi=True, ambient=True, threads=1, backend=None):
    """Run the bitmask kernel; returns a dict with ``ao``, ``gi``, ``ambient`` and ``bent``.

    ``ambient`` and ``bent`` are only filled for surface pixels when ``ambient`` is set.
    """
    env = env or DEFAULT_ENV
    h, w = gb.shape
    out = {"ao": np.zeros((h, w)), "gi": np.zeros((h, w, 3)),
           "ambient": np.zeros((h, w, 3)), "bent": np.zeros((h, w, 3))}
    env_h, env_s, env_axis = env.view_params(gb.camera)
    th, aspect = _camera_args(gb)
    kern = _kernels(backend).bitmask_rows
    c = config

    def rows(y0, y1):
        kern(gb.depth, gb.normal, gb.light, y0, y1, th, aspect,
             float(c.radius), int(c.samples), int(c.slices), int(c.sectors), float(c.thickness),
             float(c.thickness_linear), MODE_CODES[c.step_mode], np.uint64(c.seed), int(c.frames),
             int(c.ambient_subregions), float(c.range_factor), bool(gi), bool(ambient),
             env_h, env_s, env_axis, out["ao"], out["gi"], out["ambient"], out["bent"])

    run_rows(rows, h, threads, backend)
    return out


def render_ao_gi(gb: GBuffer, config: PassConfig = PassConfig(), *, threads=1, backend=None):
    """Bitmask AO (visibility, 1 = open) and one-bounce indirect diffuse."""
    out = bitmask_pass(gb, config, gi=True, ambient=False, threads=threads, backend=backend)
    return out["ao"], out["gi"]


def render_ao(gb: GBuffer, config: PassConfig = PassConfig(), *, threads=1, backend=None):
    return bitmask_pass(gb, config, gi=False, ambient=False, threads=threads, backend=backend)["ao"]


def render_ambient(gb: GBuffer, config: PassConfig = PassConfig(), env: AmbientEnvironment | None = None,
                   *, threads=1, backend=None):
    """Directionally occluded ambient light sampled through the final slice bitmasks.

    Each of the ``ambient_subregions`` contiguous sector groups samples the
    environment at its central direction, weighted by the projected-solid-angle
    share of its still-open sectors. An unoccluded pixel therefore converges to
    the cosine-weighted environment irradiance.
    """
    return bitmask_pass(gb, config, env, gi=False, ambient=True, threads=threads,
                        backend=backend)["ambient"]


def accumulate(gb: GBuffer, config: PassConfig, frames: int, env=None, *, threads=1,
               backend=None) -> OutputFrame:
    """Average ``frames`` jittered frames (frame indices 0..frames-1) of every output."""
    out = bitmask_pass(gb, config.with_(frames=frames), env, threads=threads, backend=backend)
    return OutputFrame(out["ao"], out["gi"], out["ambient"])


def render_multibounce(scene, camera, config: PassConfig, bounces: int, *, threads=1,
                       backend=None, growth_limit=10.0):
    """Indirect light after ``bounces`` rounds of feeding GI back into the light buffer."""
    from .scenegen import synthesize_gbuffer

    if bounces < 1:
        raise ValueError("bounces must be >= 1")
    gb = synthesize_gbuffer(scene, camera)
    direct = gb.light.astype(np.float64)
    albedo = gb.albedo.astype(np.float64)
    current = gb
    previous_mean = None
    gi = None
    for _ in range(bounces):
        _, gi = render_ao_gi(current, config, threads=threads, backend=backend)
        mean = float(gi.mean())
        if previous_mean is not None and previous_mean > 0 and mean > growth_limit * previous_mean:
            raise DivergenceError(f"mean GI grew from {previous_mean:g} to {mean:g} in one bounce")
        previous_mean = mean
        current = gb.with_light(direct + albedo * gi)
    return gi
