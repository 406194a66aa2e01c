import numpy as np
import pytest

from visbitmask.buffers import CameraModel, reconstruct_view_position, validate
from visbitmask.scenegen import (SCENE_NAMES, AnalyticScene, Box, Plane, Sphere, builtin_scene,
                                 empty_scene, mark_patch, trace_ray, trace_rays, synthesize_gbuffer)

from conftest import scene_gbuffer


def test_ray_hits_each_primitive():
    scene = AnalyticScene([Sphere((0, 0, -5), 1.0)], (0, 1, 0), (1, 1, 1))
    hit = trace_ray(scene, (0, 0, 0), (0, 0, -1))
    assert hit.distance == pytest.approx(4.0)
    np.testing.assert_allclose(hit.normal, [0, 0, 1])
    box = AnalyticScene([Box((-1, -1, -3), (1, 1, -2))], (0, 1, 0), (1, 1, 1))
    assert trace_ray(box, (0, 0, 0), (0, 0, -1)).distance == pytest.approx(2.0)
    plane = AnalyticScene([Plane((0, -1, 0), (0, 1, 0))], (0, 1, 0), (1, 1, 1))
    d = np.array([0, -1, -1]) / np.sqrt(2)
    assert trace_ray(plane, (0, 0, 0), d).distance == pytest.approx(np.sqrt(2))
    assert trace_ray(plane, (0, 0, 0), (0, 1, 0)) is None


def test_normals_face_the_ray():
    scene = AnalyticScene([Plane((0, 0, 0), (0, 1, 0))], (0, 1, 0), (1, 1, 1))
    _, n, _ = trace_rays(scene, [[0, -1, 0]], [[0, 1, 0]])
    np.testing.assert_allclose(n[0], [0, -1, 0])


def test_trace_ray_validates():
    scene = empty_scene(CameraModel(2, 2, 1.0))
    with pytest.raises(ValueError):
        trace_ray(scene, (0, 0, 0), (0, 0, -2))
    with pytest.raises(ValueError):
        trace_ray(scene, (0, 0, 0), (0, 0, -1), t_max=0)


@pytest.mark.parametrize("name", SCENE_NAMES)
def test_builtin_gbuffers_are_valid(name):
    scene, gb = scene_gbuffer(name, 32)
    validate(gb)
    assert gb.surface.any()


@pytest.mark.parametrize("name", SCENE_NAMES)
def test_gbuffer_matches_direct_ray_query(name):
    scene, gb = scene_gbuffer(name, 32)
    cam = scene.camera
    rng = np.random.default_rng(1)
    for y, x in zip(rng.integers(0, 32, 10), rng.integers(0, 32, 10)):
        if not gb.surface[y, x]:
            continue
        p = reconstruct_view_position(x + 0.5, y + 0.5, float(gb.depth[y, x]), cam)
        d = p / np.linalg.norm(p)
        hit = trace_ray(scene, cam.eye, cam.dir_view_to_world(d))
        assert hit.distance == pytest.approx(np.linalg.norm(p), rel=1e-5)


def test_synthesis_is_deterministic():
    a = synthesize_gbuffer(builtin_scene("corner", 24, 24))
    b = synthesize_gbuffer(builtin_scene("corner", 24, 24))
    for name in ("depth", "normal", "light", "albedo"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))


def test_empty_scene_is_all_sky():
    gb = synthesize_gbuffer(empty_scene(CameraModel(8, 8, 1.0)))
    assert not gb.surface.any() and not gb.light.any()


def test_corner_wall_is_in_shadow_and_lit_wall_is_not():
    scene, gb = scene_gbuffer("corner", 128)
    shadowed = mark_patch(scene, "shadowed_wall")
    lit = mark_patch(scene, "sunlit_wall")
    assert gb.light[shadowed].max() == 0.0
    assert gb.light[lit].min() > 0.0


def test_thin_wall_thickness_parameter():
    thick = builtin_scene("thin_wall", thickness=0.5)
    assert thick.primitives[2].hi[2] == pytest.approx(1.5)
    with pytest.raises(ValueError):
        builtin_scene("thin_wall", thickness=0.0)
    with pytest.raises(ValueError):
        builtin_scene("nowhere")


def test_mark_patch_inside_image():
    scene = builtin_scene("fence", 64, 64)
    rows, cols = mark_patch(scene, "behind_bars")
    assert rows.stop - rows.start == 8 and 0 <= cols.start < cols.stop <= 64
