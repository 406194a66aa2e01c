"""Ambient light environments.

Both kinds are linear in direction: ``L(w) = horizon + (top - horizon) * dot(w, axis)``.
A constant environment is the special case ``top == horizon``. The vertical
gradient uses ``axis = +Y``; any other axis gives e.g. a horizontal gradient.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _rgb(v):
    a = np.array(v, dtype=np.float64).reshape(3)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class AmbientEnvironment:
    kind: str
    top: np.ndarray
    horizon: np.ndarray
    axis: np.ndarray

    def __post_init__(self):
        if self.kind not in ("constant", "gradient"):
            raise ValueError(f"unknown environment kind {self.kind!r}")
        top, horizon = _rgb(self.top), _rgb(self.horizon)
        axis = np.array(self.axis, dtype=np.float64).reshape(3)
        norm = np.linalg.norm(axis)
        if norm == 0:
            raise ValueError("environment axis must be non-zero")
        axis = axis / norm
        axis.setflags(write=False)
        if (horizon < 0).any() or (horizon - np.abs(top - horizon) < -1e-12).any():
            raise ValueError("environment radiance must stay non-negative in every direction")
        object.__setattr__(self, "top", top)
        object.__setattr__(self, "horizon", horizon)
        object.__setattr__(self, "axis", axis)

    @classmethod
    def constant(cls, rgb):
        return cls("constant", rgb, rgb, (0.0, 1.0, 0.0))

    @classmethod
    def gradient(cls, top, horizon, axis=(0.0, 1.0, 0.0)):
        return cls("gradient", top, horizon, axis)

    def radiance(self, dirs):
        """Radiance for world-space unit directions (..., 3) -> (..., 3)."""
        d = np.asarray(dirs, dtype=np.float64) @ self.axis
        return self.horizon + (self.top - self.horizon) * d[..., None]

    def irradiance(self, normals):
        """Closed-form cosine-weighted hemisphere average (1/pi) * int L(w) (n.w) dw."""
        d = np.asarray(normals, dtype=np.float64) @ self.axis
        return self.horizon + (2.0 / 3.0) * (self.top - self.horizon) * d[..., None]

    def view_params(self, camera):
        """(horizon, slope, axis) with the axis rotated into the camera's view space."""
        return (np.array(self.horizon), np.array(self.top - self.horizon),
                np.ascontiguousarray(camera.dir_world_to_view(self.axis)))

    def to_string(self) -> str:
        f = lambda v: ",".join(repr(float(x)) for x in v)  # noqa: E731
        if self.kind == "constant":
            return f"constant:{f(self.top)}"
        return f"gradient:{f(self.top)}:{f(self.horizon)}:{f(self.axis)}"

    @classmethod
    def parse(cls, text: str):
        """Parse ``constant:r,g,b`` or ``gradient:tr,tg,tb:hr,hg,hb[:ax,ay,az]``."""
        parts = text.strip().split(":")
        try:
            vecs = [tuple(float(x) for x in p.split(",")) for p in parts[1:]]
        except ValueError:
            raise ValueError(f"malformed environment {text!r}") from None
        if any(len(v) != 3 for v in vecs):
            raise ValueError(f"malformed environment {text!r}")
        if parts[0] == "constant" and len(vecs) == 1:
            return cls.constant(vecs[0])
        if parts[0] == "gradient" and len(vecs) in (2, 3):
            return cls.gradient(*vecs)
        raise ValueError(f"malformed environment {text!r}")


DEFAULT_ENV = AmbientEnvironment.gradient((0.5, 0.7, 1.0), (0.45, 0.45, 0.5))
