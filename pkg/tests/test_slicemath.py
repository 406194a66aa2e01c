import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from visbitmask.buffers import CameraModel
from visbitmask.slicemath import (STEP_MODES, build_slice_frame, hash01, hash01_nb, plan_steps,
                                  relative_arc, sample_angles, slice_basis, slice_basis_nb,
                                  slice_directions, step_offsets, step_offsets_nb)

unit = st.tuples(*[st.floats(-1, 1)] * 3).filter(lambda v: 0.1 < np.linalg.norm(v))


def test_hash_is_deterministic_and_uniform():
    xs = np.arange(20000)
    a = hash01(7, xs, 3, 0)
    np.testing.assert_array_equal(a, hash01(7, xs, 3, 0))
    assert 0.0 <= a.min() and a.max() < 1.0
    assert abs(a.mean() - 0.5) < 0.01
    assert not np.array_equal(a, hash01(8, xs, 3, 0))
    assert not np.array_equal(a, hash01(7, xs, 3, 0, stream=2))


def test_hash_backends_agree():
    for args in [(0, 0, 0, 0, 1), (2**63, 5, 9, 3, 7), (123, 255, 17, 31, 2)]:
        assert hash01(*args) == hash01_nb(*[np.uint64(a) for a in args])


def test_slice_directions_cover_half_circle():
    phis = slice_directions(4, (3, 5), 0, 0, offset=0.25)
    np.testing.assert_allclose(phis, [math.pi * (i + 0.25) / 4 for i in range(4)])
    with pytest.raises(ValueError):
        slice_directions(0, (0, 0), 0, 0)


def test_frame_facing_camera():
    f = build_slice_frame([0, 0, -3], [0, 0, 1], 0.0)
    np.testing.assert_allclose(f.view_axis, [0, 0, 1])
    np.testing.assert_allclose(f.tangent, [1, 0, 0])
    assert f.n_angle == pytest.approx(0.0) and f.n_proj_length == pytest.approx(1.0)
    assert f.screen_direction == pytest.approx((1.0, 0.0))
    assert build_slice_frame([0, 0, -3], [0, 0, 1], math.pi / 2).screen_direction == pytest.approx((0, -1))


def test_tilted_normal_angle():
    n = np.array([math.sin(0.3), 0.0, math.cos(0.3)])
    assert build_slice_frame([0, 0, -3], n, 0.0).n_angle == pytest.approx(0.3)
    assert build_slice_frame([0, 0, -3], n, math.pi).n_angle == pytest.approx(-0.3)


@settings(max_examples=80, deadline=None)
@given(unit, unit, st.floats(0, math.pi))
def test_frame_orthonormal_and_backends_agree(p, n, phi):
    p = np.array(p) - np.array([0, 0, 2.0])
    n = np.array(n) / np.linalg.norm(n)
    t, v, angle, length = slice_basis(p, n, phi)
    assert np.dot(t, v) == pytest.approx(0, abs=1e-9)
    assert np.linalg.norm(t) == pytest.approx(1) and np.linalg.norm(v) == pytest.approx(1)
    assert -math.pi / 2 <= angle <= math.pi / 2
    out = np.empty(8)
    slice_basis_nb(*p, *n, phi, out)
    np.testing.assert_allclose(out, [*t, *v, angle, length], atol=1e-12)


def test_build_frame_rejects_nonfinite():
    with pytest.raises(ValueError):
        build_slice_frame([0, np.inf, -1], [0, 0, 1], 0.0)


@pytest.mark.parametrize("mode", STEP_MODES)
@settings(max_examples=40, deadline=None)
@given(r_px=st.floats(1.0, 500), n=st.integers(1, 32), jit=st.floats(0, 0.999))
def test_step_offsets_increasing_within_radius(mode, r_px, n, jit):
    off = step_offsets(r_px, n, mode, jit)
    assert np.all(np.diff(off) > 0) and off[-1] < r_px
    buf = np.empty(n)
    assert step_offsets_nb(r_px, n, 0 if mode == "constant" else 1, jit, buf) == n
    np.testing.assert_allclose(buf, off)


def test_subpixel_radius_collapses_to_one_step():
    off = step_offsets(0.5, 8, "constant", 0.3)
    assert off[0] == 1.0 and np.isinf(off[1:]).all()
    cam = CameraModel(64, 64, math.radians(60))
    plan = plan_steps(0.001, [0, 0, -50], cam, 8)
    assert plan.positions == (1.0,) and plan.radius_px < 1
    with pytest.raises(ValueError):
        plan_steps(1.0, [0, 0, -1], cam, 8, jitter=1.0)
    with pytest.raises(ValueError):
        step_offsets(10.0, 4, "spiral", 0.0)


def test_plan_radius_uses_projection():
    cam = CameraModel(100, 100, math.radians(90))
    assert plan_steps(1.0, [0, 0, -2], cam, 4).radius_px == pytest.approx(25.0)


def test_sample_angles_thickness_orders_back_behind_front():
    f = build_slice_frame([0, 0, -3], [0, 0, 1], 0.0)
    tf, tb = sample_angles([0, 0, -3], f, [1.0, 0, -2.5], 0.5)
    assert tf == pytest.approx(math.atan2(1.0, 0.5))
    assert tb == pytest.approx(math.atan2(1.0, 0.0))
    assert tb > tf
    assert sample_angles([0, 0, -3], f, [0, 0, -3], 0.5) is None


def test_relative_arc_clamps_and_orders():
    lo, hi = relative_arc(1.4, 0.2, -0.5)
    assert lo == pytest.approx(0.7) and hi == pytest.approx(math.pi / 2)
