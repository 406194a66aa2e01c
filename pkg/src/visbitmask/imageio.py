"""PFM float images and tone-mapped PNG previews."""

from __future__ import annotations

import os

import numpy as np

TONE_MAPS = ("clamp_gamma22", "reinhard_gamma22")


class PFMError(IOError):
    def __init__(self, message, offset):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


def _read_token_line(buf, pos):
    end = buf.find(b"\n", pos)
    if end < 0:
        raise PFMError("unterminated header line", pos)
    return buf[pos:end].decode("ascii", errors="replace").strip(), end + 1


def load_pfm(path) -> np.ndarray:
    """Read a PFM file into a float32 array, top row first.

    ``Pf`` files give shape (H, W); ``PF`` files give (H, W, 3).
    """
    with open(path, "rb") as f:
        buf = f.read()
    tag, pos = _read_token_line(buf, 0)
    if tag == "PF":
        channels = 3
    elif tag == "Pf":
        channels = 1
    else:
        raise PFMError(f"bad PFM identifier {tag!r}", 0)
    dims_at = pos
    dims, pos = _read_token_line(buf, pos)
    try:
        width, height = (int(v) for v in dims.split())
    except ValueError:
        raise PFMError(f"bad PFM dimensions {dims!r}", dims_at) from None
    if width < 1 or height < 1:
        raise PFMError(f"bad PFM dimensions {dims!r}", dims_at)
    scale_at = pos
    scale_line, pos = _read_token_line(buf, pos)
    try:
        scale = float(scale_line)
    except ValueError:
        raise PFMError(f"bad PFM scale {scale_line!r}", scale_at) from None
    if scale == 0.0:
        raise PFMError("PFM scale must be non-zero", scale_at)
    count = width * height * channels
    need = pos + 4 * count
    if len(buf) < need:
        raise PFMError(f"truncated payload: expected {need} bytes, got {len(buf)}", len(buf))
    dtype = "<f4" if scale < 0 else ">f4"
    data = np.frombuffer(buf, dtype=dtype, count=count, offset=pos).astype(np.float32)
    shape = (height, width) if channels == 1 else (height, width, 3)
    return np.flipud(data.reshape(shape)).copy()


def save_pfm(image, path) -> None:
    """Write a little-endian PFM. NaN is rejected; +/-inf is stored as-is."""
    img = np.asarray(image)
    if img.ndim == 3 and img.shape[2] == 1:
        img = img[..., 0]
    if img.ndim == 2:
        tag = b"Pf"
    elif img.ndim == 3 and img.shape[2] == 3:
        tag = b"PF"
    else:
        raise ValueError(f"PFM needs (H, W) or (H, W, 3) data, got shape {img.shape}")
    img = img.astype("<f4")
    if np.isnan(img).any():
        raise ValueError("refusing to write NaN values to PFM")
    height, width = img.shape[:2]
    header = tag + b"\n" + f"{width} {height}\n".encode() + b"-1.0000\n"
    with open(path, "wb") as f:
        f.write(header)
        f.write(np.ascontiguousarray(np.flipud(img)).tobytes())


def tone_map(image, mode="clamp_gamma22") -> np.ndarray:
    img = np.asarray(image, dtype=np.float64)
    if not np.isfinite(img).all() or (img < 0).any():
        raise ValueError("tone mapping expects a finite, non-negative image")
    if mode == "clamp_gamma22":
        v = np.clip(img, 0.0, 1.0)
    elif mode == "reinhard_gamma22":
        v = img / (1.0 + img)
    else:
        raise ValueError(f"unknown tone map {mode!r}; expected one of {TONE_MAPS}")
    return np.floor(255.0 * v ** (1.0 / 2.2) + 0.5).astype(np.uint8)


def save_png(image, path, tone_map_mode="clamp_gamma22") -> None:
    from PIL import Image

    img = np.asarray(image)
    if img.ndim == 3 and img.shape[2] == 1:
        img = img[..., 0]
    data = tone_map(img, tone_map_mode)
    Image.fromarray(data).save(os.fspath(path), format="PNG", optimize=False)
