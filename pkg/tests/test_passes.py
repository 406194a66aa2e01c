import numpy as np
import pytest

from visbitmask import (AmbientEnvironment, ConfigError, DivergenceError, PassConfig, accumulate,
                        bitmask_pass, builtin_scene, render_ambient, render_ao, render_ao_gi,
                        render_multibounce, synthesize_gbuffer)
from visbitmask.buffers import CameraModel
from visbitmask.scenegen import empty_scene

from conftest import scene_gbuffer


@pytest.mark.parametrize("kwargs", [dict(sectors=33), dict(samples=0), dict(radius=0.0),
                                    dict(thickness=-1.0), dict(step_mode="spiral"), dict(seed=-1),
                                    dict(sectors=8, ambient_subregions=3), dict(thickness_linear=-1)])
def test_config_validation(kwargs):
    with pytest.raises(ConfigError):
        PassConfig(**kwargs)


def test_flat_plane_is_unoccluded():
    _, gb = scene_gbuffer("flat", 64)
    for mode in ("constant", "exponential"):
        ao, gi = render_ao_gi(gb, PassConfig(step_mode=mode, slices=2))
        assert ao[gb.surface].min() == 1.0
        assert not gi.any()


def test_sky_pixels_get_defaults():
    _, gb = scene_gbuffer("poles", 64)
    out = bitmask_pass(gb, PassConfig())
    sky = ~gb.surface
    assert (out["ao"][sky] == 1.0).all() and not out["gi"][sky].any()
    assert (out["ambient"][sky] > 0).all()


def test_ranges_and_determinism():
    _, gb = scene_gbuffer("fence", 64)
    a = bitmask_pass(gb, PassConfig(seed=5))
    b = bitmask_pass(gb, PassConfig(seed=5))
    for k in a:
        np.testing.assert_array_equal(a[k], b[k])
    assert 0 <= a["ao"].min() and a["ao"].max() <= 1
    assert a["gi"].min() >= 0 and a["ambient"].min() >= 0
    c = bitmask_pass(gb, PassConfig(seed=6))
    assert not np.array_equal(a["ao"], c["ao"])


def test_occluders_reduce_ao():
    scene, gb = scene_gbuffer("sphere_on_plane", 64)
    ao = render_ao(gb, PassConfig(thickness=1.0))
    assert ao[gb.surface].mean() < 0.98
    assert ao[gb.surface].min() < 0.7


def test_thickness_linear_only_adds_occlusion():
    _, gb = scene_gbuffer("poles", 64)
    base = render_ao(gb, PassConfig())
    grown = render_ao(gb, PassConfig(thickness_linear=0.5))
    assert (grown <= base + 1e-12).all()


def test_more_sectors_more_samples_stay_in_range():
    _, gb = scene_gbuffer("corner", 48)
    for n in (8, 16, 32, 64, 128):
        ao = render_ao(gb, PassConfig(sectors=n, samples=4))
        assert 0 <= ao.min() and ao.max() <= 1


def test_accumulation_averages_frames():
    _, gb = scene_gbuffer("poles", 32)
    cfg = PassConfig(samples=4)
    frames = [bitmask_pass(gb, cfg.with_(frames=1, seed=0))]
    acc = accumulate(gb, cfg, 4)
    acc.validate()
    # frame 0 of an accumulation is the single-frame render
    np.testing.assert_allclose(accumulate(gb, cfg, 1).ao, frames[0]["ao"])
    assert acc.ao.shape == gb.shape


def test_accumulation_reduces_variance():
    _, gb = scene_gbuffer("corner", 32)
    one = np.stack([accumulate(gb, PassConfig(seed=s), 1).gi for s in range(8)])
    many = np.stack([accumulate(gb, PassConfig(seed=s), 8).gi for s in range(8)])
    assert many.var(axis=0).mean() < 0.5 * one.var(axis=0).mean()


@pytest.mark.parametrize("slices,tol", [(4, 1 / 32), (64, 1e-3)])
def test_ambient_in_open_scene_matches_irradiance(slices, tol):
    _, gb = scene_gbuffer("flat", 24)
    env = AmbientEnvironment.constant((0.3, 0.4, 0.5))
    amb = render_ambient(gb, PassConfig(slices=slices, sectors=64), env)[gb.surface]
    np.testing.assert_allclose(amb, np.broadcast_to([0.3, 0.4, 0.5], amb.shape), atol=tol)


def test_empty_scene_runs():
    gb = synthesize_gbuffer(empty_scene(CameraModel(8, 8, 1.0)))
    out = bitmask_pass(gb, PassConfig())
    assert (out["ao"] == 1).all() and not out["gi"].any()


def test_multibounce_and_divergence_guard():
    scene = builtin_scene("corner", 32, 32)
    one = render_multibounce(scene, scene.camera, PassConfig(), 1)
    two = render_multibounce(scene, scene.camera, PassConfig(), 2)
    assert two.mean() >= one.mean()
    with pytest.raises(DivergenceError):
        render_multibounce(scene, scene.camera, PassConfig(), 3, growth_limit=1.0)
    with pytest.raises(ValueError):
        render_multibounce(scene, scene.camera, PassConfig(), 0)


def _head_on():
    from visbitmask.scenegen import AnalyticScene, Plane

    cam = CameraModel.look_at((0, 0, 0), (0, 0, -1), width=33, height=33)
    scene = AnalyticScene([Plane((0, 0, -3), (0, 0, 1))], (0, 0, 1), (1, 1, 1), camera=cam)
    return synthesize_gbuffer(scene)


@pytest.mark.parametrize("slices", [1, 8])
def test_ambient_golden_value_facing_camera(slices):
    # normal along the view axis, nothing in the hemisphere: white in, white out
    gb = _head_on()
    amb = render_ambient(gb, PassConfig(slices=slices), AmbientEnvironment.constant((1, 1, 1)))
    np.testing.assert_allclose(amb[16, 16], 1.0, atol=1e-12)


def test_multibounce_one_bounce_is_single_pass():
    scene = builtin_scene("corner", 32, 32)
    _, gi = render_ao_gi(synthesize_gbuffer(scene), PassConfig())
    np.testing.assert_array_equal(render_multibounce(scene, scene.camera, PassConfig(), 1), gi)


def test_multibounce_without_light_stays_dark():
    scene = builtin_scene("corner", 24, 24)
    dark = type(scene)(scene.primitives, scene.sun_direction, (0.0, 0.0, 0.0), camera=scene.camera)
    for bounces in (1, 3):
        assert not render_multibounce(dark, dark.camera, PassConfig(), bounces).any()


def test_accumulating_a_flat_plane_changes_nothing():
    _, gb = scene_gbuffer("flat", 24)
    a, b = accumulate(gb, PassConfig(), 1), accumulate(gb, PassConfig(), 64)
    np.testing.assert_array_equal(a.ao, b.ao)
    np.testing.assert_array_equal(a.gi, b.gi)


def test_accumulation_shrinks_ao_variance():
    _, gb = scene_gbuffer("poles", 32)
    # 8 disjoint seed groups
    one = np.stack([accumulate(gb, PassConfig(seed=100 + s), 1).ao for s in range(8)])
    many = np.stack([accumulate(gb, PassConfig(seed=200 + s), 16).ao for s in range(8)])
    assert one.var(axis=0).mean() >= 4 * many.var(axis=0).mean()


def test_sample_refinement_on_flat_scene():
    _, gb = scene_gbuffer("flat", 32)
    for n in (1, 2, 8, 32):
        assert render_ao(gb, PassConfig(samples=n))[gb.surface].min() == 1.0
