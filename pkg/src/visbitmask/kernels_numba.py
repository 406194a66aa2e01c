"""Numba row kernels for the bitmask, two-horizon and SSR-like passes.

Each kernel shades the image rows ``[y0, y1)`` and writes only those rows of
its output arrays, so disjoint row ranges can run on separate threads.
"""

import math

import numpy as np

from ._jit import njit
from .bitmask import arc_words_nb, count_words_nb, popcount_nb
from .slicemath import (
    STREAM_DIRECTION, STREAM_RAY, STREAM_STEP, hash01_nb, slice_basis_nb, step_offsets_nb,
)

HALF_PI = 0.5 * math.pi
PLANE_SNAP = 0.25


@njit
def _sample_depth(ds, normal, ix, iy, sx, sy, width, height, th, aspect):
    """Depth along the ray through (sx, sy) on the fetched texel's tangent plane."""
    nx, ny, nz = float(normal[iy, ix, 0]), float(normal[iy, ix, 1]), float(normal[iy, ix, 2])
    cx = ((ix + 0.5) / width * 2.0 - 1.0) * th * aspect
    cy = (1.0 - (iy + 0.5) / height * 2.0) * th
    rx = (sx / width * 2.0 - 1.0) * th * aspect
    ry = (1.0 - sy / height * 2.0) * th
    den = nx * rx + ny * ry - nz
    if abs(den) <= 1e-6:
        return ds
    e = (nx * cx + ny * cy - nz) * ds / den
    if abs(e - ds) <= PLANE_SNAP * ds:
        return e
    return ds


@njit
def _sector_weight(a, b, n_angle):
    """int_a^b cos(theta - n_angle) |sin theta| d theta, closed form."""
    s = 0.5 * math.sin(n_angle)
    fa = -0.25 * math.cos(2.0 * a - n_angle) + s * a
    fb = -0.25 * math.cos(2.0 * b - n_angle) + s * b
    if a >= 0.0:
        return fb - fa
    if b <= 0.0:
        return fa - fb
    f0 = -0.25 * math.cos(-n_angle)
    return fb - 2.0 * f0 + fa


@njit
def _sky(x, y, width, height, th, aspect, env_h, env_s, env_axis, amb, bent):
    dx = ((x + 0.5) / width * 2.0 - 1.0) * th * aspect
    dy = (1.0 - (y + 0.5) / height * 2.0) * th
    inv = 1.0 / math.sqrt(dx * dx + dy * dy + 1.0)
    dx, dy, dz = dx * inv, dy * inv, -inv
    proj = dx * env_axis[0] + dy * env_axis[1] + dz * env_axis[2]
    for c in range(3):
        amb[y, x, c] = env_h[c] + env_s[c] * proj
    bent[y, x, 0], bent[y, x, 1], bent[y, x, 2] = dx, dy, dz


@njit
def bitmask_rows(depth, normal, light, y0, y1, th, aspect,
                 radius, n_steps, n_dirs, n_sectors, thickness, thickness_linear,
                 step_mode, seed, frames, n_sub, range_factor, do_gi, do_ambient,
                 env_h, env_s, env_axis, ao, gi, amb, bent):
    height, width = depth.shape
    nw = (n_sectors + 63) // 64
    bits = np.zeros(nw, dtype=np.uint64)
    sample = np.zeros(nw, dtype=np.uint64)
    offsets = np.zeros(max(n_steps, 1))
    frame = np.zeros(8)
    sub_w = np.zeros(n_sub)
    per_sub = n_sectors // n_sub
    sector = math.pi / n_sectors
    max_dist = range_factor * radius
    n_slices = frames * n_dirs

    for y in range(y0, y1):
        for x in range(width):
            d = float(depth[y, x])
            if not math.isfinite(d):
                ao[y, x] = 1.0
                gi[y, x, 0] = gi[y, x, 1] = gi[y, x, 2] = 0.0
                _sky(x, y, width, height, th, aspect, env_h, env_s, env_axis, amb, bent)
                continue
            px = ((x + 0.5) / width * 2.0 - 1.0) * th * aspect * d
            py = (1.0 - (y + 0.5) / height * 2.0) * th * d
            pz = -d
            nx, ny, nz = float(normal[y, x, 0]), float(normal[y, x, 1]), float(normal[y, x, 2])
            r_px = radius * height / (2.0 * th * d)
            t_eff = thickness * (1.0 + thickness_linear * math.sqrt(px * px + py * py + pz * pz))
            ao_sum = 0.0
            g0 = g1 = g2 = 0.0
            a0 = a1 = a2 = 0.0
            b0 = b1 = b2 = 0.0
            for f in range(frames):
                xi_dir = hash01_nb(seed, x, y, f, STREAM_DIRECTION)
                xi_step = hash01_nb(seed, x, y, f, STREAM_STEP)
                count = step_offsets_nb(r_px, n_steps, step_mode, xi_step, offsets)
                for i in range(n_dirs):
                    phi = math.pi * (i + xi_dir) / n_dirs
                    slice_basis_nb(px, py, pz, nx, ny, nz, phi, frame)
                    tx, ty, tz = frame[0], frame[1], frame[2]
                    vx, vy, vz = frame[3], frame[4], frame[5]
                    n_angle = frame[6]
                    cphi, sphi = math.cos(phi), math.sin(phi)
                    for w in range(nw):
                        bits[w] = np.uint64(0)
                    for j in range(count):
                        off = offsets[j]
                        for side in (1.0, -1.0):
                            sx = x + 0.5 + side * off * cphi
                            sy = y + 0.5 - side * off * sphi
                            if not (sx >= 0.0 and sx < width and sy >= 0.0 and sy < height):
                                continue
                            ix, iy = int(math.floor(sx)), int(math.floor(sy))
                            if ix == x and iy == y:
                                continue
                            ds = float(depth[iy, ix])
                            if not math.isfinite(ds):
                                continue
                            ds = _sample_depth(ds, normal, ix, iy, sx, sy, width, height, th, aspect)
                            wx = (sx / width * 2.0 - 1.0) * th * aspect * ds - px
                            wy = (1.0 - sy / height * 2.0) * th * ds - py
                            wz = -ds - pz
                            dist = math.sqrt(wx * wx + wy * wy + wz * wz)
                            if dist == 0.0 or dist > max_dist:
                                continue
                            wt = wx * tx + wy * ty + wz * tz
                            wv = wx * vx + wy * vy + wz * vz
                            tf = min(max(math.atan2(wt, wv) - n_angle, -HALF_PI), HALF_PI)
                            tb = min(max(math.atan2(wt, wv - t_eff) - n_angle, -HALF_PI), HALF_PI)
                            arc_words_nb(min(tf, tb), max(tf, tb), n_sectors, sample)
                            if do_gi:
                                newly = 0
                                for w in range(nw):
                                    newly += popcount_nb(sample[w] & ~bits[w])
                                if newly > 0:
                                    lx, ly, lz = wx / dist, wy / dist, wz / dist
                                    cos_p = max(nx * lx + ny * ly + nz * lz, 0.0)
                                    cos_j = max(-(float(normal[iy, ix, 0]) * lx
                                                  + float(normal[iy, ix, 1]) * ly
                                                  + float(normal[iy, ix, 2]) * lz), 0.0)
                                    g = newly / n_sectors * cos_p * cos_j
                                    g0 += g * float(light[iy, ix, 0])
                                    g1 += g * float(light[iy, ix, 1])
                                    g2 += g * float(light[iy, ix, 2])
                            for w in range(nw):
                                bits[w] |= sample[w]
                    ao_sum += 1.0 - count_words_nb(bits) / n_sectors
                    if do_ambient:
                        for m in range(n_sub):
                            sub_w[m] = 0.0
                        start = n_angle - HALF_PI
                        for k in range(n_sectors):
                            if (bits[k >> 6] >> np.uint64(k & 63)) & np.uint64(1):
                                continue
                            lo = start + k * sector
                            sub_w[k // per_sub] += _sector_weight(lo, lo + sector, n_angle)
                            c = lo + 0.5 * sector
                            cc, sc = math.cos(c), math.sin(c)
                            b0 += cc * vx + sc * tx
                            b1 += cc * vy + sc * ty
                            b2 += cc * vz + sc * tz
                        # screen-uniform slice angles are not uniform in azimuth about v
                        dv = cphi * vx + sphi * vy
                        n_len = frame[7] * abs(vz) / (1.0 - dv * dv)
                        for m in range(n_sub):
                            if sub_w[m] == 0.0:
                                continue
                            c = start + (m + 0.5) * math.pi / n_sub
                            cc, sc = math.cos(c), math.sin(c)
                            proj = ((cc * vx + sc * tx) * env_axis[0] + (cc * vy + sc * ty) * env_axis[1]
                                    + (cc * vz + sc * tz) * env_axis[2])
                            wgt = sub_w[m] * n_len
                            a0 += (env_h[0] + env_s[0] * proj) * wgt
                            a1 += (env_h[1] + env_s[1] * proj) * wgt
                            a2 += (env_h[2] + env_s[2] * proj) * wgt
            ao[y, x] = ao_sum / n_slices
            gi[y, x, 0], gi[y, x, 1], gi[y, x, 2] = g0 / n_slices, g1 / n_slices, g2 / n_slices
            amb[y, x, 0] = max(a0 / n_slices, 0.0)
            amb[y, x, 1] = max(a1 / n_slices, 0.0)
            amb[y, x, 2] = max(a2 / n_slices, 0.0)
            bl = math.sqrt(b0 * b0 + b1 * b1 + b2 * b2)
            if bl > 1e-12:
                bent[y, x, 0], bent[y, x, 1], bent[y, x, 2] = b0 / bl, b1 / bl, b2 / bl
            else:
                bent[y, x, 0], bent[y, x, 1], bent[y, x, 2] = nx, ny, nz


@njit
def gtao_rows(depth, normal, y0, y1, th, aspect, radius, n_steps, n_dirs,
              step_mode, seed, frames, range_factor, falloff, ao):
    height, width = depth.shape
    offsets = np.zeros(max(n_steps, 1))
    frame = np.zeros(8)
    max_dist = range_factor * radius
    n_slices = frames * n_dirs
    for y in range(y0, y1):
        for x in range(width):
            d = float(depth[y, x])
            if not math.isfinite(d):
                ao[y, x] = 1.0
                continue
            px = ((x + 0.5) / width * 2.0 - 1.0) * th * aspect * d
            py = (1.0 - (y + 0.5) / height * 2.0) * th * d
            pz = -d
            nx, ny, nz = float(normal[y, x, 0]), float(normal[y, x, 1]), float(normal[y, x, 2])
            r_px = radius * height / (2.0 * th * d)
            ao_sum = 0.0
            for f in range(frames):
                xi_dir = hash01_nb(seed, x, y, f, STREAM_DIRECTION)
                xi_step = hash01_nb(seed, x, y, f, STREAM_STEP)
                count = step_offsets_nb(r_px, n_steps, step_mode, xi_step, offsets)
                for i in range(n_dirs):
                    phi = math.pi * (i + xi_dir) / n_dirs
                    slice_basis_nb(px, py, pz, nx, ny, nz, phi, frame)
                    tx, ty, tz = frame[0], frame[1], frame[2]
                    vx, vy, vz = frame[3], frame[4], frame[5]
                    n_angle = frame[6]
                    cphi, sphi = math.cos(phi), math.sin(phi)
                    h_pos, h_neg = HALF_PI, -HALF_PI
                    for j in range(count):
                        off = offsets[j]
                        for side in (1.0, -1.0):
                            sx = x + 0.5 + side * off * cphi
                            sy = y + 0.5 - side * off * sphi
                            if not (sx >= 0.0 and sx < width and sy >= 0.0 and sy < height):
                                continue
                            ix, iy = int(math.floor(sx)), int(math.floor(sy))
                            if ix == x and iy == y:
                                continue
                            ds = float(depth[iy, ix])
                            if not math.isfinite(ds):
                                continue
                            ds = _sample_depth(ds, normal, ix, iy, sx, sy, width, height, th, aspect)
                            wx = (sx / width * 2.0 - 1.0) * th * aspect * ds - px
                            wy = (1.0 - sy / height * 2.0) * th * ds - py
                            wz = -ds - pz
                            dist = math.sqrt(wx * wx + wy * wy + wz * wz)
                            if dist == 0.0 or dist > max_dist:
                                continue
                            wt = wx * tx + wy * ty + wz * tz
                            wv = wx * vx + wy * vy + wz * vz
                            tf = min(max(math.atan2(wt, wv) - n_angle, -HALF_PI), HALF_PI)
                            fall = 1.0
                            if falloff:
                                fall = max(0.0, 1.0 - dist / radius)
                            if side > 0.0:
                                h_pos = min(h_pos, HALF_PI - fall * (HALF_PI - tf))
                            else:
                                h_neg = max(h_neg, -HALF_PI + fall * (tf + HALF_PI))
                    ao_sum += max(h_pos - h_neg, 0.0) / math.pi
            ao[y, x] = ao_sum / n_slices


@njit
def ssr_rows(depth, normal, light, y0, y1, th, aspect, near, radius, n_steps, n_rays,
             thickness, thickness_linear, seed, frames, gi):
    height, width = depth.shape
    for y in range(y0, y1):
        for x in range(width):
            gi[y, x, 0] = gi[y, x, 1] = gi[y, x, 2] = 0.0
            d = float(depth[y, x])
            if not math.isfinite(d):
                continue
            px = ((x + 0.5) / width * 2.0 - 1.0) * th * aspect * d
            py = (1.0 - (y + 0.5) / height * 2.0) * th * d
            pz = -d
            nx, ny, nz = float(normal[y, x, 0]), float(normal[y, x, 1]), float(normal[y, x, 2])
            t_eff = thickness * (1.0 + thickness_linear * math.sqrt(px * px + py * py + pz * pz))
            # orthonormal basis around n (Duff et al. 2017)
            sgn = 1.0 if nz >= 0.0 else -1.0
            aa = -1.0 / (sgn + nz)
            bb = nx * ny * aa
            e1x, e1y, e1z = 1.0 + sgn * nx * nx * aa, sgn * bb, -sgn * nx
            e2x, e2y, e2z = bb, sgn + ny * ny * aa, -ny
            g0 = g1 = g2 = 0.0
            for f in range(frames):
                for r in range(n_rays):
                    u1 = hash01_nb(seed, x, y, f, STREAM_RAY + 4 * r)
                    u2 = hash01_nb(seed, x, y, f, STREAM_RAY + 4 * r + 1)
                    jit = hash01_nb(seed, x, y, f, STREAM_RAY + 4 * r + 2)
                    rad = math.sqrt(u1)
                    ang = 2.0 * math.pi * u2
                    lx, ly, lz = rad * math.cos(ang), rad * math.sin(ang), math.sqrt(max(1.0 - u1, 0.0))
                    ox = lx * e1x + ly * e2x + lz * nx
                    oy = lx * e1y + ly * e2y + lz * ny
                    oz = lx * e1z + ly * e2z + lz * nz
                    for j in range(n_steps):
                        length = radius * (j + jit) / n_steps
                        qx, qy, qz = px + ox * length, py + oy * length, pz + oz * length
                        dq = -qz
                        if dq <= near:
                            break
                        sx = (qx / (dq * th * aspect) + 1.0) * 0.5 * width
                        sy = (1.0 - qy / (dq * th)) * 0.5 * height
                        if not (sx >= 0.0 and sx < width and sy >= 0.0 and sy < height):
                            break
                        ix, iy = int(math.floor(sx)), int(math.floor(sy))
                        if ix == x and iy == y:
                            continue
                        ds = float(depth[iy, ix])
                        if not math.isfinite(ds) or dq <= ds:
                            continue
                        if dq - ds < t_eff:
                            cos_j = max(-(float(normal[iy, ix, 0]) * ox + float(normal[iy, ix, 1]) * oy
                                          + float(normal[iy, ix, 2]) * oz), 0.0)
                            g0 += float(light[iy, ix, 0]) * cos_j
                            g1 += float(light[iy, ix, 1]) * cos_j
                            g2 += float(light[iy, ix, 2]) * cos_j
                            break
            n = frames * n_rays
            gi[y, x, 0], gi[y, x, 1], gi[y, x, 2] = g0 / n, g1 / n, g2 / n
