import numpy as np
import pytest
from hypothesis import given, strategies as st

from lumastage.geometry import (RigidTransform, look_at, normalize, quat_from_axis_angle,
                                quat_mul, quat_to_matrix, rotation_about_z,
                                segment_segment_distance, spherical_offset)


def test_quat_identity_matrix():
    assert np.allclose(quat_to_matrix(np.array([1.0, 0, 0, 0])), np.eye(3))


def test_quat_axis_angle_z90():
    q = quat_from_axis_angle((0, 0, 1), np.pi / 2)
    r = quat_to_matrix(q)
    assert np.allclose(r @ [1, 0, 0], [0, 1, 0], atol=1e-12)


@given(st.floats(-np.pi, np.pi), st.floats(-np.pi, np.pi))
def test_quat_mul_matches_matrix_product(a, b):
    qa = quat_from_axis_angle((0, 0, 1), a)
    qb = quat_from_axis_angle((1, 0, 0), b)
    lhs = quat_to_matrix(quat_mul(qa, qb))
    rhs = quat_to_matrix(qa) @ quat_to_matrix(qb)
    assert np.allclose(lhs, rhs, atol=1e-12)


def test_transform_compose_apply():
    t1 = RigidTransform.from_euler_deg(0, 0, 90, t=(1, 0, 0))
    t2 = RigidTransform.from_euler_deg(0, 0, 0, t=(0, 2, 0))
    p = np.array([1.0, 0.0, 0.0])
    assert np.allclose(t1.compose(t2).apply(p), t1.apply(t2.apply(p)))


def test_transform_inverse_roundtrip():
    t = RigidTransform.from_euler_deg(10, 20, 30, t=(1, 2, 3))
    p = np.random.default_rng(0).normal(size=(50, 3))
    assert np.allclose(t.inverse().apply(t.apply(p)), p, atol=1e-12)


def test_euler_roundtrip():
    t = RigidTransform.from_euler_deg(12.5, -40.0, 77.0, t=(0.1, 0.2, 0.3))
    rx, ry, rz = t.to_euler_deg()
    t2 = RigidTransform.from_euler_deg(rx, ry, rz, t=(0.1, 0.2, 0.3))
    assert np.allclose(t.rotation, t2.rotation, atol=1e-9)


def test_look_at_views_target():
    cam = look_at((0, -3, 1.5), (0, 0, 1.5))
    view = cam.apply_vector(np.array([0.0, 0.0, -1.0]))
    assert np.allclose(view, [0, 1, 0], atol=1e-12)
    # up stays up
    up = cam.apply_vector(np.array([0.0, 1.0, 0.0]))
    assert up[2] > 0.99


def test_spherical_offset_reference_direction():
    # zero azimuth/elevation returns the (normalized) reference direction
    off = spherical_offset(0.0, 0.0, 2.0, np.array([0.0, -1.0, 0.0]))
    assert np.allclose(off, [0, -2, 0], atol=1e-12)
    off = spherical_offset(np.pi / 2, 0.0, 1.0, np.array([1.0, 0.0, 0.0]))
    assert np.allclose(off, [0, 1, 0], atol=1e-12)
    off = spherical_offset(0.0, np.pi / 4, np.sqrt(2.0), np.array([1.0, 0.0, 0.0]))
    assert np.allclose(off, [1, 0, 1], atol=1e-12)


@pytest.mark.parametrize("p1,q1,p2,q2,expected", [
    ((0, 0, 0), (1, 0, 0), (0, 1, 0), (1, 1, 0), 1.0),          # parallel
    ((0, 0, 0), (1, 0, 0), (2, 0, 0), (3, 0, 0), 1.0),          # colinear gap
    ((0, 0, 0), (1, 0, 0), (0.5, -1, 1), (0.5, 1, 1), 1.0),     # crossing above
])
def test_segment_segment_distance(p1, q1, p2, q2, expected):
    d = segment_segment_distance(*map(lambda v: np.array(v, dtype=float), (p1, q1, p2, q2)))
    assert d == pytest.approx(expected, abs=1e-12)


def test_rotation_about_z_matches_quat():
    ang = 0.7
    assert np.allclose(rotation_about_z(ang),
                       quat_to_matrix(quat_from_axis_angle((0, 0, 1), ang)), atol=1e-12)


def test_normalize_zero_raises():
    with pytest.raises(ValueError):
        normalize(np.zeros(3))
