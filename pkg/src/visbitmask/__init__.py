"""Screen-space ambient occlusion, indirect diffuse and ambient lighting with visibility bitmasks."""

from .baselines import render_bent_normal_ambient, render_gtao, render_normal_ambient, render_ssr_gi
from .bitmask import VisibilityBitmask
from .buffers import CameraModel, GBuffer, OutputFrame, validate
from .environment import DEFAULT_ENV, AmbientEnvironment
from .passes import (ConfigError, DivergenceError, PassConfig, accumulate, bitmask_pass, render_ambient,
                     render_ao, render_ao_gi, render_multibounce)
from .scenegen import SCENE_NAMES, builtin_scene, synthesize_gbuffer

__version__ = "0.1.0"

__all__ = [
    "AmbientEnvironment", "CameraModel", "ConfigError", "DEFAULT_ENV", "DivergenceError", "GBuffer",
    "OutputFrame", "PassConfig", "SCENE_NAMES", "VisibilityBitmask", "accumulate", "bitmask_pass",
    "builtin_scene", "render_ambient", "render_ao", "render_ao_gi", "render_bent_normal_ambient",
    "render_gtao", "render_multibounce", "render_normal_ambient", "render_ssr_gi",
    "synthesize_gbuffer", "validate",
]
