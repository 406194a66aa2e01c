"""Per-slice geometry: directions, slice frames, step plans and sample angles.

Angles inside a slice are measured from the view axis (the unit vector from
the shaded point toward the camera), positive toward the slice tangent. The
tangent points along the screen direction of the positive horizon side.

Every routine exists twice: a vectorized numpy form (public API and numpy
backend) and a scalar ``*_nb`` form compiled with numba for the hot kernels.
The two are checked against each other in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._jit import njit
from .buffers import CameraModel

HALF_PI = 0.5 * math.pi
STEP_MODES = ("constant", "exponential")
MODE_CODES = {"constant": 0, "exponential": 1}

# hash streams
STREAM_DIRECTION = 1
STREAM_STEP = 2
STREAM_RAY = 3

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30, _S27, _S31, _S11 = np.uint64(30), np.uint64(27), np.uint64(31), np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0


# --- stable hashing ---------------------------------------------------------

def _mix64(z):
    z = z + _GOLDEN
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return z ^ (z >> _S31)


def hash01(seed, x, y, frame, stream=STREAM_DIRECTION):
    """Counter-based hash of (seed, pixel, frame, stream) to [0, 1); broadcasts."""
    with np.errstate(over="ignore"):
        arrays = np.broadcast_arrays(*(np.asarray(v).astype(np.uint64) for v in (seed, x, y, frame, stream)))
        seed, x, y, frame, stream = (np.atleast_1d(a) for a in arrays)
        h = _mix64(seed ^ (stream * _GOLDEN))
        h = _mix64(h ^ x)
        h = _mix64(h ^ y)
        h = _mix64(h ^ frame)
        out = (h >> _S11).astype(np.float64) * _INV53
    return out.reshape(arrays[0].shape) if arrays[0].ndim else float(out[0])


@njit
def _mix64_nb(z):
    z = z + _GOLDEN
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return z ^ (z >> _S31)


@njit
def hash01_nb(seed, x, y, frame, stream):
    h = _mix64_nb(np.uint64(seed) ^ (np.uint64(stream) * _GOLDEN))
    h = _mix64_nb(h ^ np.uint64(x))
    h = _mix64_nb(h ^ np.uint64(y))
    h = _mix64_nb(h ^ np.uint64(frame))
    return float(h >> _S11) * _INV53


# --- slice directions -------------------------------------------------------

def slice_directions(n_dirs, pixel, frame_index, seed, offset=None):
    """Azimuths ``pi * (i + xi) / n_dirs`` with one hashed offset ``xi`` per pixel and frame."""
    if n_dirs < 1:
        raise ValueError("need at least one slice direction")
    if offset is None:
        offset = hash01(seed, pixel[0], pixel[1], frame_index, STREAM_DIRECTION)
    return [math.pi * (i + offset) / n_dirs for i in range(n_dirs)]


# --- slice frames -----------------------------------------------------------

@dataclass(frozen=True)
class SliceFrame:
    phi: float
    tangent: np.ndarray
    view_axis: np.ndarray
    n_angle: float
    n_proj_length: float
    t_theta: float

    @property
    def screen_direction(self):
        """Pixel-space step direction (x right, y down) of the positive side."""
        return math.cos(self.phi), -math.sin(self.phi)


def slice_basis(p, n, phi):
    """Vectorized slice frames: returns (tangent, view_axis, n_angle, n_proj_length)."""
    p = np.asarray(p, dtype=np.float64)
    n = np.asarray(n, dtype=np.float64)
    phi = np.asarray(phi, dtype=np.float64)
    v = -p / np.linalg.norm(p, axis=-1, keepdims=True)
    d = np.zeros(p.shape)
    d[..., 0] = np.cos(phi)
    d[..., 1] = np.sin(phi)
    t = d - np.sum(d * v, axis=-1, keepdims=True) * v
    t /= np.linalg.norm(t, axis=-1, keepdims=True)
    nt = np.sum(n * t, axis=-1)
    nv = np.sum(n * v, axis=-1)
    length = np.sqrt(nt * nt + nv * nv)
    angle = np.where(length < 1e-6, 0.0, np.arctan2(nt, nv))
    return t, v, np.clip(angle, -HALF_PI, HALF_PI), length


def build_slice_frame(p, n_p, phi) -> SliceFrame:
    p = np.asarray(p, dtype=np.float64)
    if not np.isfinite(p).all():
        raise ValueError("view position must be finite")
    t, v, angle, length = slice_basis(p[None], np.asarray(n_p, dtype=np.float64)[None], np.array([phi]))
    t_theta = math.asin(max(-1.0, min(1.0, t[0, 2])))
    return SliceFrame(float(phi), t[0], v[0], float(angle[0]), float(length[0]), t_theta)


@njit
def slice_basis_nb(px, py, pz, nx, ny, nz, phi, out):
    """Scalar slice frame. ``out`` receives (tx, ty, tz, vx, vy, vz, n_angle, n_proj_length)."""
    inv = 1.0 / math.sqrt(px * px + py * py + pz * pz)
    vx, vy, vz = -px * inv, -py * inv, -pz * inv
    dx, dy = math.cos(phi), math.sin(phi)
    dv = dx * vx + dy * vy
    tx, ty, tz = dx - dv * vx, dy - dv * vy, -dv * vz
    tl = 1.0 / math.sqrt(tx * tx + ty * ty + tz * tz)
    tx, ty, tz = tx * tl, ty * tl, tz * tl
    nt = nx * tx + ny * ty + nz * tz
    nv = nx * vx + ny * vy + nz * vz
    length = math.sqrt(nt * nt + nv * nv)
    angle = 0.0
    if length >= 1e-6:
        angle = math.atan2(nt, nv)
    out[0], out[1], out[2] = tx, ty, tz
    out[3], out[4], out[5] = vx, vy, vz
    out[6] = min(max(angle, -HALF_PI), HALF_PI)
    out[7] = length


# --- step planning ----------------------------------------------------------

@dataclass(frozen=True)
class StepPlan:
    positions: tuple
    mode: str
    jitter: float
    radius_px: float


def step_offsets(r_px, n_steps, mode, jitter):
    """Vectorized step offsets in pixels, shape (..., n_steps).

    Pixels whose projected radius is below one pixel get a single 1-pixel
    step; their remaining entries are ``inf`` (always off-screen).
    """
    r_px = np.asarray(r_px, dtype=np.float64)[..., None]
    jitter = np.asarray(jitter, dtype=np.float64)[..., None]
    j = np.arange(n_steps, dtype=np.float64)
    if mode == "constant":
        off = (j + jitter) * r_px / (n_steps + 1)
    elif mode == "exponential":
        frac = (j + jitter) / n_steps
        off = r_px * (frac * frac)
    else:
        raise ValueError(f"unknown step mode {mode!r}; expected one of {STEP_MODES}")
    collapsed = r_px < 1.0
    off = np.where(collapsed, np.inf, off)
    off[..., :1] = np.where(collapsed[..., :1], 1.0, off[..., :1])
    return off


def plan_steps(r_world, p, camera: CameraModel, n_steps, mode="constant", jitter=0.0) -> StepPlan:
    if r_world <= 0 or n_steps < 1:
        raise ValueError("plan_steps needs r_world > 0 and n_steps >= 1")
    if not 0.0 <= jitter < 1.0:
        raise ValueError("jitter must lie in [0, 1)")
    r_px = camera.projected_radius(r_world, -float(np.asarray(p)[2]))
    off = step_offsets(r_px, n_steps, mode, jitter)
    return StepPlan(tuple(float(o) for o in off if np.isfinite(o)), mode, jitter, float(r_px))


@njit
def step_offsets_nb(r_px, n_steps, mode, jitter, out):
    """Fill ``out`` with step offsets; returns the number of steps actually planned."""
    if r_px < 1.0:
        out[0] = 1.0
        return 1
    for j in range(n_steps):
        if mode == 0:
            out[j] = (j + jitter) * r_px / (n_steps + 1)
        else:
            frac = (j + jitter) / n_steps
            out[j] = r_px * (frac * frac)
    return n_steps


# --- sample angles ----------------------------------------------------------

def sample_angle_pair(w, tangent, view_axis, thickness):
    """Front/back angles of samples at offset ``w = s_f - p`` from the shaded point.

    The back sample sits ``thickness`` further from the camera along the shaded
    pixel's view ray, i.e. at ``w - thickness * view_axis``.
    """
    wt = np.sum(w * tangent, axis=-1)
    wv = np.sum(w * view_axis, axis=-1)
    return np.arctan2(wt, wv), np.arctan2(wt, wv - thickness)


def sample_angles(p, frame: SliceFrame, s_f, thickness):
    """Front and back angles (radians, from the view axis) of one depth sample.

    Returns ``None`` when the sample coincides with the shaded point.
    """
    w = np.asarray(s_f, dtype=np.float64) - np.asarray(p, dtype=np.float64)
    if not np.isfinite(w).all():
        raise ValueError("sample position must be finite")
    if not np.any(w):
        return None
    tf, tb = sample_angle_pair(w, frame.tangent, frame.view_axis, thickness)
    return float(tf), float(tb)


def relative_arc(theta_f, theta_b, n_angle):
    """Re-center a sample's angles on the projected normal and clamp to the hemisphere."""
    a = np.clip(np.asarray(theta_f) - n_angle, -HALF_PI, HALF_PI)
    b = np.clip(np.asarray(theta_b) - n_angle, -HALF_PI, HALF_PI)
    return np.minimum(a, b), np.maximum(a, b)
