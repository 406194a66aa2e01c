"""Pure-numpy row kernels: the same passes as ``kernels_numba``, vectorized over pixels.

Loops run over frames, slices and steps; every pixel of the row block is
processed at once. Results agree with the numba kernels up to libm rounding.
"""

import math

import numpy as np

from .bitmask import popcount, range_words, sector_range
from .slicemath import (
    STREAM_DIRECTION, STREAM_RAY, STREAM_STEP, hash01, relative_arc, sample_angle_pair,
    slice_basis, step_offsets,
)

HALF_PI = 0.5 * math.pi
PLANE_SNAP = 0.25


def _dot(a, b):
    return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1] + a[..., 2] * b[..., 2]


def _reconstruct(ix, iy, d, width, height, th, aspect):
    out = np.empty(d.shape + (3,))
    out[..., 0] = ((ix + 0.5) / width * 2.0 - 1.0) * th * aspect * d
    out[..., 1] = (1.0 - (iy + 0.5) / height * 2.0) * th * d
    out[..., 2] = -d
    return out


def _row_pixels(depth, y0, y1):
    ys, xs = np.mgrid[y0:y1, 0:depth.shape[1]]
    d = depth[y0:y1].astype(np.float64)
    return xs, ys, d, np.isfinite(d)


def _sky_dirs(xs, ys, width, height, th, aspect):
    v = np.empty(xs.shape + (3,))
    v[..., 0] = ((xs + 0.5) / width * 2.0 - 1.0) * th * aspect
    v[..., 1] = (1.0 - (ys + 0.5) / height * 2.0) * th
    v[..., 2] = -1.0
    return v / np.sqrt(_dot(v, v))[..., None]


def _sector_weights(lo, hi, n_angle):
    n = n_angle[:, None]
    s = 0.5 * np.sin(n)
    fa = -0.25 * np.cos(2.0 * lo - n) + s * lo
    fb = -0.25 * np.cos(2.0 * hi - n) + s * hi
    f0 = -0.25 * np.cos(-n)
    return np.where(lo >= 0.0, fb - fa, np.where(hi <= 0.0, fa - fb, fb - 2.0 * f0 + fa))


def _sample_positions(depth, normal, ix, iy, sx, sy, th, aspect):
    """View positions of samples at continuous screen points (sx, sy).

    The fetched texel's tangent plane is intersected with the ray through the
    exact sample location, so samples stay on the slice line and planes are
    reproduced exactly. Grazing texels keep their own depth.
    """
    height, width = depth.shape
    ds = depth[iy, ix].astype(np.float64)
    n = normal[iy, ix].astype(np.float64)
    cx = ((ix + 0.5) / width * 2.0 - 1.0) * th * aspect
    cy = (1.0 - (iy + 0.5) / height * 2.0) * th
    rx = (sx / width * 2.0 - 1.0) * th * aspect
    ry = (1.0 - sy / height * 2.0) * th
    num = (n[..., 0] * cx + n[..., 1] * cy - n[..., 2]) * ds
    den = n[..., 0] * rx + n[..., 1] * ry - n[..., 2]
    safe = np.abs(den) > 1e-6
    e = num / np.where(safe, den, 1.0)
    d = np.where(safe & (np.abs(e - ds) <= PLANE_SNAP * ds), e, ds)
    out = np.empty(d.shape + (3,))
    out[..., 0] = rx * d
    out[..., 1] = ry * d
    out[..., 2] = -d
    return out


class _Walk:
    """Shared per-slice sample walk for the bitmask and horizon kernels."""

    def __init__(self, depth, normal, xs, ys, p, th, aspect, max_dist):
        self.depth = depth
        self.normal = normal
        self.height, self.width = depth.shape
        self.xs, self.ys, self.p = xs, ys, p
        self.th, self.aspect, self.max_dist = th, aspect, max_dist

    def sample(self, off, side, cphi, sphi):
        """Returns (valid, ix, iy, w, dist) for one step on one side."""
        sx = self.xs + 0.5 + side * off * cphi
        sy = self.ys + 0.5 - side * off * sphi
        valid = (sx >= 0.0) & (sx < self.width) & (sy >= 0.0) & (sy < self.height)
        ix = np.floor(np.where(valid, sx, 0.0)).astype(np.int64)
        iy = np.floor(np.where(valid, sy, 0.0)).astype(np.int64)
        valid &= ~((ix == self.xs) & (iy == self.ys))
        ds = self.depth[iy, ix].astype(np.float64)
        valid &= np.isfinite(ds)
        sx = np.where(valid, sx, ix + 0.5)
        sy = np.where(valid, sy, iy + 0.5)
        with np.errstate(invalid="ignore"):
            w = _sample_positions(self.depth, self.normal, ix, iy, sx, sy, self.th, self.aspect) - self.p
        w = np.where(valid[..., None], w, 1.0)
        dist = np.sqrt(_dot(w, w))
        valid &= (dist != 0.0) & (dist <= self.max_dist)
        return valid, ix, iy, w, np.where(valid, dist, 1.0)


def bitmask_rows(depth, normal, light, y0, y1, th, aspect,
                 radius, n_steps, n_dirs, n_sectors, thickness, thickness_linear,
                 step_mode, seed, frames, n_sub, range_factor, do_gi, do_ambient,
                 env_h, env_s, env_axis, ao, gi, amb, bent):
    height, width = depth.shape
    xs_all, ys_all, d_all, surf = _row_pixels(depth, y0, y1)
    sky = ~surf
    if sky.any():
        dirs = _sky_dirs(xs_all[sky], ys_all[sky], width, height, th, aspect)
        ao[y0:y1][sky] = 1.0
        gi[y0:y1][sky] = 0.0
        amb[y0:y1][sky] = env_h + env_s * (dirs @ env_axis)[:, None]
        bent[y0:y1][sky] = dirs
    if not surf.any():
        return
    xs, ys, d = xs_all[surf], ys_all[surf], d_all[surf]
    n = normal[ys, xs].astype(np.float64)
    p = _reconstruct(xs, ys, d, width, height, th, aspect)
    r_px = radius * height / (2.0 * th * d)
    t_eff = thickness * (1.0 + thickness_linear * np.sqrt(_dot(p, p)))
    walk = _Walk(depth, normal, xs, ys, p, th, aspect, range_factor * radius)
    mode = "constant" if step_mode == 0 else "exponential"
    count = len(xs)
    per_sub = n_sectors // n_sub
    sector = math.pi / n_sectors

    ao_sum = np.zeros(count)
    g = np.zeros((count, 3))
    a = np.zeros((count, 3))
    b = np.zeros((count, 3))
    for f in range(frames):
        xi_dir = hash01(seed, xs, ys, f, STREAM_DIRECTION)
        xi_step = hash01(seed, xs, ys, f, STREAM_STEP)
        offsets = step_offsets(r_px, n_steps, mode, xi_step)
        for i in range(n_dirs):
            phi = math.pi * (i + xi_dir) / n_dirs
            t, v, n_angle, n_len = slice_basis(p, n, phi)
            cphi, sphi = np.cos(phi), np.sin(phi)
            bits = np.zeros((count, (n_sectors + 63) // 64), dtype=np.uint64)
            for j in range(offsets.shape[1]):
                for side in (1.0, -1.0):
                    valid, ix, iy, w, dist = walk.sample(offsets[:, j], side, cphi, sphi)
                    tf, tb = sample_angle_pair(w, t, v, t_eff)
                    lo, hi = relative_arc(tf, tb, n_angle)
                    first, end = sector_range(lo, hi, n_sectors)
                    end = np.where(valid, end, first)
                    sample = range_words(first, end, n_sectors)
                    if do_gi:
                        newly = popcount(sample & ~bits).sum(axis=1)
                        hit = newly > 0
                        if hit.any():
                            l = w[hit] / dist[hit, None]
                            cos_p = np.maximum(_dot(n[hit], l), 0.0)
                            nj = normal[iy[hit], ix[hit]].astype(np.float64)
                            cos_j = np.maximum(-_dot(nj, l), 0.0)
                            weight = newly[hit] / n_sectors * cos_p * cos_j
                            g[hit] += weight[:, None] * light[iy[hit], ix[hit]].astype(np.float64)
                    bits |= sample
            ao_sum += 1.0 - popcount(bits).sum(axis=1) / n_sectors
            if do_ambient:
                k = np.arange(n_sectors)
                open_ = ((bits[:, k >> 6] >> (k & 63).astype(np.uint64)) & np.uint64(1)) == 0
                start = n_angle - HALF_PI
                lo = start[:, None] + k * sector
                wk = np.where(open_, _sector_weights(lo, lo + sector, n_angle), 0.0)
                sub_w = wk.reshape(count, n_sub, per_sub).sum(axis=2)
                c = lo + 0.5 * sector
                cc, sc = np.where(open_, np.cos(c), 0.0), np.where(open_, np.sin(c), 0.0)
                b += cc.sum(axis=1)[:, None] * v + sc.sum(axis=1)[:, None] * t
                cm = start[:, None] + (np.arange(n_sub) + 0.5) * math.pi / n_sub
                dirs = np.cos(cm)[..., None] * v[:, None] + np.sin(cm)[..., None] * t[:, None]
                proj = dirs @ env_axis
                # screen-uniform slice angles are not uniform in azimuth about v
                dv = cphi * v[:, 0] + sphi * v[:, 1]
                jac = np.abs(v[:, 2]) / (1.0 - dv * dv)
                wgt = sub_w * (n_len * jac)[:, None]
                a += np.einsum("pm,pmc->pc", wgt, env_h + env_s * proj[..., None])
    n_slices = frames * n_dirs
    ao[y0:y1][surf] = ao_sum / n_slices
    gi[y0:y1][surf] = g / n_slices
    amb[y0:y1][surf] = np.maximum(a / n_slices, 0.0)
    bl = np.sqrt(_dot(b, b))
    ok = bl > 1e-12
    bent[y0:y1][surf] = np.where(ok[:, None], b / np.where(ok, bl, 1.0)[:, None], n)


def gtao_rows(depth, normal, y0, y1, th, aspect, radius, n_steps, n_dirs,
              step_mode, seed, frames, range_factor, falloff, ao):
    height, width = depth.shape
    xs_all, ys_all, d_all, surf = _row_pixels(depth, y0, y1)
    ao[y0:y1][~surf] = 1.0
    if not surf.any():
        return
    xs, ys, d = xs_all[surf], ys_all[surf], d_all[surf]
    n = normal[ys, xs].astype(np.float64)
    p = _reconstruct(xs, ys, d, width, height, th, aspect)
    r_px = radius * height / (2.0 * th * d)
    walk = _Walk(depth, normal, xs, ys, p, th, aspect, range_factor * radius)
    mode = "constant" if step_mode == 0 else "exponential"
    ao_sum = np.zeros(len(xs))
    for f in range(frames):
        xi_dir = hash01(seed, xs, ys, f, STREAM_DIRECTION)
        xi_step = hash01(seed, xs, ys, f, STREAM_STEP)
        offsets = step_offsets(r_px, n_steps, mode, xi_step)
        for i in range(n_dirs):
            phi = math.pi * (i + xi_dir) / n_dirs
            t, v, n_angle, _ = slice_basis(p, n, phi)
            cphi, sphi = np.cos(phi), np.sin(phi)
            h_pos = np.full(len(xs), HALF_PI)
            h_neg = np.full(len(xs), -HALF_PI)
            for j in range(offsets.shape[1]):
                for side in (1.0, -1.0):
                    valid, _, _, w, dist = walk.sample(offsets[:, j], side, cphi, sphi)
                    tf = np.clip(np.arctan2(_dot(w, t), _dot(w, v)) - n_angle, -HALF_PI, HALF_PI)
                    fall = np.maximum(0.0, 1.0 - dist / radius) if falloff else 1.0
                    if side > 0:
                        h_pos = np.where(valid, np.minimum(h_pos, HALF_PI - fall * (HALF_PI - tf)), h_pos)
                    else:
                        h_neg = np.where(valid, np.maximum(h_neg, -HALF_PI + fall * (tf + HALF_PI)), h_neg)
            ao_sum += np.maximum(h_pos - h_neg, 0.0) / math.pi
    ao[y0:y1][surf] = ao_sum / (frames * n_dirs)


def ssr_rows(depth, normal, light, y0, y1, th, aspect, near, radius, n_steps, n_rays,
             thickness, thickness_linear, seed, frames, gi):
    height, width = depth.shape
    xs_all, ys_all, d_all, surf = _row_pixels(depth, y0, y1)
    gi[y0:y1] = 0.0
    if not surf.any():
        return
    xs, ys, d = xs_all[surf], ys_all[surf], d_all[surf]
    n = normal[ys, xs].astype(np.float64)
    p = _reconstruct(xs, ys, d, width, height, th, aspect)
    t_eff = thickness * (1.0 + thickness_linear * np.sqrt(_dot(p, p)))
    nx, ny, nz = n[:, 0], n[:, 1], n[:, 2]
    sgn = np.where(nz >= 0.0, 1.0, -1.0)
    aa = -1.0 / (sgn + nz)
    bb = nx * ny * aa
    e1 = np.stack([1.0 + sgn * nx * nx * aa, sgn * bb, -sgn * nx], axis=1)
    e2 = np.stack([bb, sgn + ny * ny * aa, -ny], axis=1)
    g = np.zeros((len(xs), 3))
    for f in range(frames):
        for r in range(n_rays):
            u1 = hash01(seed, xs, ys, f, STREAM_RAY + 4 * r)
            u2 = hash01(seed, xs, ys, f, STREAM_RAY + 4 * r + 1)
            jit = hash01(seed, xs, ys, f, STREAM_RAY + 4 * r + 2)
            rad = np.sqrt(u1)
            ang = 2.0 * math.pi * u2
            loc = (rad * np.cos(ang), rad * np.sin(ang), np.sqrt(np.maximum(1.0 - u1, 0.0)))
            o = loc[0][:, None] * e1 + loc[1][:, None] * e2 + loc[2][:, None] * n
            alive = np.ones(len(xs), dtype=bool)
            for j in range(n_steps):
                length = radius * (j + jit) / n_steps
                q = p + o * length[:, None]
                dq = -q[:, 2]
                alive &= dq > near
                safe = np.where(alive, dq, 1.0)
                sx = (q[:, 0] / (safe * th * aspect) + 1.0) * 0.5 * width
                sy = (1.0 - q[:, 1] / (safe * th)) * 0.5 * height
                alive &= (sx >= 0.0) & (sx < width) & (sy >= 0.0) & (sy < height)
                ix = np.floor(np.where(alive, sx, 0.0)).astype(np.int64)
                iy = np.floor(np.where(alive, sy, 0.0)).astype(np.int64)
                ds = depth[iy, ix].astype(np.float64)
                cand = alive & ~((ix == xs) & (iy == ys)) & np.isfinite(ds)
                cand &= dq > np.where(cand, ds, np.inf)
                hit = cand & (dq - np.where(cand, ds, 0.0) < t_eff)
                if hit.any():
                    nj = normal[iy[hit], ix[hit]].astype(np.float64)
                    cos_j = np.maximum(-_dot(nj, o[hit]), 0.0)
                    g[hit] += light[iy[hit], ix[hit]].astype(np.float64) * cos_j[:, None]
                alive &= ~hit
                if not alive.any():
                    break
    gi[y0:y1][surf] = g / (frames * n_rays)
