"""Acceptance criteria 1-10.

Each test prints one ``Cn: PASS|FAIL`` line (also collected in the terminal
summary). Two sub-claims do not hold for this implementation; they keep their
real thresholds and are marked ``xfail(strict=True)`` so the suite records
them as known failures and flags it if they ever start passing.
"""

import math
import time

import numpy as np
import pytest

from visbitmask import (AmbientEnvironment, PassConfig, bitmask_pass, render_ao,
                        render_ao_gi, render_bent_normal_ambient, render_gtao, render_multibounce,
                        render_normal_ambient, render_ssr_gi)
from visbitmask.bitmask import arc_words
from visbitmask.cli import PRODUCES, render_outputs, run_bench
from visbitmask.metrics import ensemble_variance, rmse
from visbitmask.oracle import fine_slice_reference, sectors_bruteforce_grid, world_ao_reference
from visbitmask.scenegen import SCENE_NAMES, mark_patch

from conftest import scene_gbuffer

pytestmark = pytest.mark.acceptance
SIZE = 256


# --- 1 ----------------------------------------------------------------------

@pytest.mark.parametrize("backend", ["numba", "numpy"])
def test_c1_sector_formula_matches_bruteforce(acceptance, backend):
    start = time.perf_counter()
    grid = np.append(np.arange(-0.5 * math.pi, 0.5 * math.pi, 1e-3), 0.5 * math.pi)
    bad = pairs = 0
    for n in (8, 32, 128):
        for i, lo in enumerate(grid):
            hi = grid[i:]
            fast = arc_words(np.full(hi.shape, lo), hi, n, backend=backend)
            slow = sectors_bruteforce_grid(lo, hi, n)
            bad += int(np.any(fast != slow, axis=-1).sum())
            pairs += hi.size
    elapsed = time.perf_counter() - start
    ok = bad == 0 and elapsed < 60
    acceptance("C1", ok, f"[{backend}] {pairs} arcs over N in (8, 32, 128): {bad} mismatches, {elapsed:.1f} s")
    assert bad == 0
    assert elapsed < 60


# --- 2 ----------------------------------------------------------------------

def test_c2_infinite_thickness_matches_two_horizon(acceptance):
    _, gb = scene_gbuffer("poles", SIZE)
    cfg = PassConfig(thickness=1e6)
    diff = np.abs(render_ao(gb, cfg) - render_gtao(gb, cfg))[gb.surface]
    n = cfg.sectors
    ok = diff.mean() <= 2 / n and diff.max() <= 4 / n
    acceptance("C2", ok, f"mean |d| {diff.mean():.4f} (<= {2 / n}), max |d| {diff.max():.4f} (<= {4 / n})")
    assert diff.mean() <= 2 / n
    assert diff.max() <= 4 / n


# --- 3 ----------------------------------------------------------------------

def _patch_means(name, mark):
    scene, gb = scene_gbuffer(name, SIZE)
    cfg = PassConfig(thickness=0.2)
    patch = mark_patch(scene, mark)
    b = render_ao(gb, cfg)[patch].mean()
    g = render_gtao(gb, cfg)[patch].mean()
    ref = world_ao_reference(scene, rays_per_pixel=256, max_dist=cfg.radius, region=patch)[patch].mean()
    return b, g, ref


THIN = {"fence": "behind_bars", "thin_wall": "behind_wall"}


@pytest.mark.parametrize("name", sorted(THIN))
def test_c3a_bitmask_lets_light_behind_thin_occluders(acceptance, name):
    start = time.perf_counter()
    b, g, ref = _patch_means(name, THIN[name])
    elapsed = time.perf_counter() - start
    ok = b - g >= 0.1 and elapsed < 30
    acceptance("C3", ok, f"[{name} gap] bitmask {b:.3f} - GTAO {g:.3f} = {b - g:.3f} (>= 0.1), {elapsed:.1f} s")
    assert b - g >= 0.1
    assert elapsed < 30


def _closer(name):
    b, g, ref = _patch_means(name, THIN[name])
    return abs(b - ref), abs(g - ref), ref


def test_c3b_fence_bitmask_closer_to_reference(acceptance):
    db, dg, ref = _closer("fence")
    acceptance("C3", db < dg, f"[fence closeness] |bitmask-ref| {db:.3f} < |GTAO-ref| {dg:.3f} (ref {ref:.3f})")
    assert db < dg


@pytest.mark.xfail(strict=True, reason="bitmask overshoots the reference on the receding ground "
                   "behind the wall; see the decisions ledger")
def test_c3b_thin_wall_bitmask_closer_to_reference(acceptance):
    db, dg, ref = _closer("thin_wall")
    acceptance("C3", db < dg, f"[thin_wall closeness] |bitmask-ref| {db:.3f} < |GTAO-ref| {dg:.3f} "
               f"(ref {ref:.3f}) known failure")
    assert db < dg


# --- 4 ----------------------------------------------------------------------

def test_c4_thickness_monotonic(acceptance):
    _, gb = scene_gbuffer("sphere_on_plane", SIZE)
    aos = [render_ao(gb, PassConfig(thickness=t)) for t in (1.0, 0.5, 0.25, 0.1)]
    bad = sum(int((b < a - 1e-6)[gb.surface].sum()) for a, b in zip(aos, aos[1:]))
    means = ", ".join(f"{a[gb.surface].mean():.3f}" for a in aos)
    acceptance("C4", bad == 0, f"violations {bad}; mean AO for t = 1, .5, .25, .1: {means}")
    assert bad == 0


# --- 5 ----------------------------------------------------------------------

def test_c5_sector_count_convergence(acceptance):
    _, gb = scene_gbuffer("poles", SIZE)
    cfg = PassConfig()
    ref = fine_slice_reference(gb, cfg)
    errs = [rmse(render_ao(gb, cfg.with_(sectors=n)), ref, gb.surface) for n in (8, 32, 128)]
    ok = errs[0] > errs[1] > errs[2] and errs[1] <= 0.02
    acceptance("C5", ok, "RMSE vs 4096 sectors at N = 8, 32, 128: " + ", ".join(f"{e:.4f}" for e in errs))
    assert errs[0] > errs[1] > errs[2]
    assert errs[1] <= 0.02


# --- 6 ----------------------------------------------------------------------

def test_c6_gi_noise_below_ssr(acceptance):
    start = time.perf_counter()
    _, gb = scene_gbuffer("corner", SIZE)
    seeds = range(32)
    cfg = PassConfig(samples=16, slices=1)
    ours = np.stack([render_ao_gi(gb, cfg.with_(seed=s))[1] for s in seeds])
    ssr = np.stack([render_ssr_gi(gb, cfg.with_(seed=s), rays_per_pixel=2) for s in seeds])
    v_ours = ensemble_variance(ours, gb.surface)
    v_ssr = ensemble_variance(ssr, gb.surface)
    elapsed = time.perf_counter() - start
    ok = v_ours <= 0.5 * v_ssr and elapsed < 120
    acceptance("C6", ok, f"GI variance bitmask {v_ours:.5f} vs SSR {v_ssr:.5f} "
               f"(ratio {v_ours / v_ssr:.3f} <= 0.5), {elapsed:.0f} s")
    assert v_ours <= 0.5 * v_ssr
    assert elapsed < 120


# --- 7 ----------------------------------------------------------------------

def test_c7_gi_sanity(acceptance):
    scene, gb = scene_gbuffer("corner", SIZE)
    patch = mark_patch(scene, "shadowed_wall", size=16)
    cfg = PassConfig()
    assert gb.light[patch].max() == 0.0  # the wall really is unlit
    _, gi = render_ao_gi(gb, cfg)
    one = gi[patch].mean()
    two = render_multibounce(scene, scene.camera, cfg, 2)[patch].mean()
    _, gi4 = render_ao_gi(gb.with_light(gb.light * 4.0), cfg)
    _, gi0 = render_ao_gi(gb.with_light(np.zeros_like(gb.light)), cfg)
    checks = {"GI > 0": one > 0, "2 bounces >= 1": two >= one,
              "4x light -> 4x GI": np.array_equal(gi4, 4.0 * gi), "no light -> no GI": not gi0.any()}
    ok = all(checks.values())
    acceptance("C7", ok, f"shadowed wall GI {one:.4f}, 2 bounces {two:.4f}; "
               + ", ".join(f"{k}: {'yes' if v else 'no'}" for k, v in checks.items()))
    assert all(checks.values()), checks


# --- 8 ----------------------------------------------------------------------

HORIZONTAL = AmbientEnvironment.gradient((0.9, 0.6, 0.3), (0.5, 0.5, 0.5), axis=(1.0, 0.0, 0.0))


def _ambient_variances():
    _, gb = scene_gbuffer("corner", SIZE)
    cfg = PassConfig()
    images = {
        "bitmask": bitmask_pass(gb, cfg, HORIZONTAL, gi=False)["ambient"],
        "bent": render_bent_normal_ambient(gb, cfg, HORIZONTAL),
        "normal": render_normal_ambient(gb, cfg, HORIZONTAL),
    }
    return {k: v[gb.surface].var(axis=0) for k, v in images.items()}


def _fmt(v):
    return "(" + ", ".join(f"{x:.4f}" for x in v) + ")"


def test_c8a_bitmask_ambient_varies_more_than_bent(acceptance):
    var = _ambient_variances()
    ok = bool(np.all(var["bitmask"] > var["bent"]))
    acceptance("C8", ok, f"[bitmask > bent] per-channel variance {_fmt(var['bitmask'])} > {_fmt(var['bent'])}")
    assert np.all(var["bitmask"] > var["bent"])


@pytest.mark.xfail(strict=True, reason="the unweighted bent normal pulls shading toward the grey "
                   "horizon and loses variation; see the decisions ledger")
def test_c8b_bent_ambient_varies_more_than_normal(acceptance):
    var = _ambient_variances()
    ok = bool(np.all(var["bent"] > var["normal"]))
    acceptance("C8", ok, f"[bent > normal] per-channel variance {_fmt(var['bent'])} > "
               f"{_fmt(var['normal'])} known failure")
    assert np.all(var["bent"] > var["normal"])


def test_c8c_empty_hemisphere_matches_closed_form(acceptance):
    scene, gb = scene_gbuffer("corner", SIZE)
    # one slice is a single-azimuth estimate; 16 slices sample the hemisphere
    cfg = PassConfig(slices=16)
    out = bitmask_pass(gb, cfg, HORIZONTAL, gi=False)
    open_px = gb.surface & (out["ao"] == 1.0)
    normals = scene.camera.dir_view_to_world(gb.normal[open_px].astype(np.float64))
    expected = HORIZONTAL.irradiance(normals)
    err = np.abs(out["ambient"][open_px] - expected).max()
    ok = open_px.sum() > 0 and err <= 1 / cfg.sectors
    acceptance("C8", ok, f"[empty hemisphere] {int(open_px.sum())} open pixels, max error {err:.4f} "
               f"(<= {1 / cfg.sectors})")
    assert open_px.sum() > 0
    assert err <= 1 / cfg.sectors


# --- 9 ----------------------------------------------------------------------

def test_c9_thread_determinism_and_ranges(acceptance):
    cfg = PassConfig(samples=8)
    problems = []
    images = 0
    for name in SCENE_NAMES:
        _, gb = scene_gbuffer(name, 128)
        for method, outputs in PRODUCES.items():
            one = render_outputs(gb, cfg, method, outputs, HORIZONTAL, threads=1)
            eight = render_outputs(gb, cfg, method, outputs, HORIZONTAL, threads=8)
            for key, img in one.items():
                images += 1
                if not np.array_equal(img, eight[key]):
                    problems.append(f"{name}/{method}/{key}: threads differ")
                if not np.isfinite(img).all():
                    problems.append(f"{name}/{method}/{key}: non-finite")
                elif key == "ao" and (img.min() < 0 or img.max() > 1):
                    problems.append(f"{name}/{method}/{key}: outside [0, 1]")
                elif img.min() < 0:
                    problems.append(f"{name}/{method}/{key}: negative")
    acceptance("C9", not problems, f"{images} images over {len(SCENE_NAMES)} scenes x {len(PRODUCES)} methods; "
               + ("; ".join(problems[:3]) if problems else "identical for 1 and 8 threads, in range"))
    assert not problems


# --- 10 ---------------------------------------------------------------------

def test_c10_sample_cost_scales_linearly(acceptance):
    res = run_bench("poles", SIZE, repeat=5)
    ratio = res["scaling"]
    ok = 2.5 <= ratio <= 5.5
    acceptance("C10", ok, f"time(N_s=32)/time(N_s=8) = {ratio:.2f} (in [2.5, 5.5]); absolute GPU timings, "
               "denoiser cost and production-scene renders are declared out of scope")
    assert 2.5 <= ratio <= 5.5
