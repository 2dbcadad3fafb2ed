import math

import numpy as np
import pytest

from limbfit.brightness import visible_illuminated
from limbfit.data import ProfileImage
from limbfit.geometry import SpinState, direction_from_polar, plane_basis
from limbfit.profile import (
    NonStarlikeContourError,
    ProfileGeometryError,
    arc_positions,
    chisq_profile_distance,
    chisq_profile_pathlength,
    chisq_profile_rmax,
    default_angles,
    distance_residuals_image,
    edge_ray_intersection,
    outer_circuit,
    outer_contour,
    pathlength_residuals_image,
    point_segment_projection,
    polar_resample,
    polygon_area,
    polygon_centroid,
    rmax_profile,
    rmax_residuals_image,
)

from conftest import ellipsoid_mesh, sphere_mesh

Z = np.array([0.0, 0.0, 1.0])


# --- segment/ray primitives --------------------------------------------------

def test_edge_ray_axis_crossing():
    p = edge_ray_intersection((1, -1), (1, 1), (0, 0), 0.0)
    assert np.allclose(p, [1.0, 0.0], atol=1e-14)


def test_edge_ray_wrong_direction():
    assert edge_ray_intersection((1, -1), (1, 1), (0, 0), math.pi) is None


def _ray_segment_oracle(a, b, origin, alpha):
    # independent 2x2 solve with parameter bounds
    d = np.array([math.cos(alpha), math.sin(alpha)])
    e = np.asarray(b, float) - np.asarray(a, float)
    m = np.array([[d[0], -e[0]], [d[1], -e[1]]])
    if abs(np.linalg.det(m)) < 1e-14:
        return None
    s, t = np.linalg.solve(m, np.asarray(a, float) - np.asarray(origin, float))
    if s >= 0 and 0 <= t <= 1:
        return np.asarray(origin, float) + s * d
    return None


def test_edge_ray_against_oracle(rng):
    hits = 0
    for _ in range(1000):
        a = rng.normal(size=2)
        b = rng.normal(size=2)
        origin = 0.3 * rng.normal(size=2)
        alpha = rng.uniform(0, 2 * math.pi)
        ours = edge_ray_intersection(a, b, origin, alpha)
        ref = _ray_segment_oracle(a, b, origin, alpha)
        assert (ours is None) == (ref is None)
        if ours is not None:
            hits += 1
            assert np.allclose(ours, ref, atol=1e-9)
    assert hits > 100  # the sample exercises both branches


def test_point_segment_projection_branches():
    foot, inside = point_segment_projection((0.5, 1.0), (0, 0), (1, 0))
    assert inside and np.allclose(foot, [0.5, 0.0], atol=1e-14)
    foot, inside = point_segment_projection((2.0, 1.0), (0, 0), (1, 0))
    assert not inside


# --- starlike radius profiles --------------------------------------------------

def test_rmax_unit_sphere():
    poly = sphere_mesh(8)
    vis = visible_illuminated(poly, Z, Z)
    r, _, _ = rmax_profile(poly, vis.mask, Z, np.zeros(2), default_angles(90))
    assert np.all(np.abs(r - 1.0) < 0.01)


def test_rmax_ellipsoid_ratio():
    # 2:1 ellipsoid seen down the short axis
    poly = ellipsoid_mesh(2.0, 1.0, 0.9, 10)
    vis = visible_illuminated(poly, Z, Z)
    angles = default_angles(360)
    r, _, _ = rmax_profile(poly, vis.mask, Z, np.zeros(2), angles)
    ratio = r[0] / r[90]
    assert abs(ratio - 2.0) < 0.04


def test_rmax_origin_translation_on_circle():
    poly = sphere_mesh(10)
    vis = visible_illuminated(poly, Z, Z)
    angles = default_angles(180)
    delta = 0.05
    r0, _, _ = rmax_profile(poly, vis.mask, Z, np.zeros(2), angles)
    r1, _, _ = rmax_profile(poly, vis.mask, Z, np.array([delta, 0.0]), angles)
    # moving the origin toward alpha=0 shortens that radius by ~delta
    assert abs((r1[0] - r0[0]) + delta) < 5e-3


def test_rmax_origin_outside_errors():
    poly = sphere_mesh(4)
    vis = visible_illuminated(poly, Z, Z)
    with pytest.raises(ProfileGeometryError):
        rmax_profile(poly, vis.mask, Z, np.array([5.0, 0.0]), default_angles(16))


def test_polar_resample_circle():
    ang = np.linspace(0, 2 * math.pi, 100, endpoint=False)
    pts = np.stack([2 * np.cos(ang), 2 * np.sin(ang)], axis=1)
    r = polar_resample(pts, np.zeros(2), default_angles(33))
    assert np.allclose(r, 2.0, atol=1e-6)


def test_polar_resample_non_starlike_errors():
    # a hook shape whose radius is multivalued about the centroid
    t = np.linspace(0, 2 * math.pi, 200, endpoint=False)
    pts = np.stack(
        [np.cos(t) + 0.8 * np.cos(4 * t), np.sin(t) + 0.8 * np.sin(5 * t)], axis=1
    )
    with pytest.raises(NonStarlikeContourError):
        polar_resample(pts, polygon_centroid(pts), default_angles(32))


# --- contour chi-squares -------------------------------------------------------

def _image_from_model(poly, spin, epoch, obs, sun, scale=0.01, n_pts=180,
                      shift_km=(0.0, 0.0)):
    from limbfit.geometry import body_frame_directions, projection_matrix

    om, om0 = body_frame_directions(epoch, spin, obs, sun)
    proj = projection_matrix(epoch, spin, obs)
    vis = visible_illuminated(poly, om, om0)
    angles = default_angles(n_pts)
    r, _, _ = rmax_profile(poly, vis.mask, om, np.zeros(2), angles, proj=proj)
    pts_km = np.stack([r * np.cos(angles), r * np.sin(angles)], axis=1)
    pts_km = pts_km + np.asarray(shift_km)[None, :]
    return ProfileImage(
        epoch=epoch, sun=sun, obs=obs, scale_km_px=scale, points_px=pts_km / scale
    )


@pytest.fixture
def demo_scene():
    poly = ellipsoid_mesh(1.3, 1.0, 0.85, 8)
    spin = SpinState(0.6, 1.1, 20.0, 0.2)
    obs = direction_from_polar(1.2, 0.5)
    sun = direction_from_polar(1.15, 0.75)
    return poly, spin, obs, sun


def test_chisq_rmax_self_consistency(demo_scene):
    poly, spin, obs, sun = demo_scene
    img = _image_from_model(poly, spin, 1.0, obs, sun)
    chi2 = chisq_profile_rmax([img], poly, spin, offsets=[np.zeros(2)], n_angles=180)
    r = np.linalg.norm(img.points_km, axis=1)
    assert chi2 < 1e-16 * float(np.dot(r, r))


def test_chisq_rmax_shift_growth():
    # a circle contour shifted by delta with the offset frozen at zero
    poly = sphere_mesh(10)
    spin = SpinState(1e-6, 0.0, 20.0, 0.0)
    obs = Z.copy()
    sun = Z.copy()
    delta = 0.01
    img = _image_from_model(poly, spin, 0.0, obs, sun, shift_km=(delta, 0.0))
    n = 180
    chi2 = chisq_profile_rmax([img], poly, spin, offsets=[np.zeros(2)], n_angles=n)
    assert abs(chi2 - n * delta**2 / 2) < 0.1 * n * delta**2 / 2


def test_chisq_rmax_pixel_scale_invariance(demo_scene):
    poly, spin, obs, sun = demo_scene
    img = _image_from_model(poly, spin, 1.0, obs, sun, scale=0.01)
    rescaled = ProfileImage(
        epoch=img.epoch, sun=img.sun, obs=img.obs,
        scale_km_px=img.scale_km_px / 2.0, points_px=img.points_px * 2.0,
    )
    a = chisq_profile_rmax([img], poly, spin, offsets=[np.zeros(2)], n_angles=90)
    b = chisq_profile_rmax([rescaled], poly, spin, offsets=[np.zeros(2)], n_angles=90)
    assert np.isclose(a, b, rtol=1e-12, atol=1e-18)


def test_pathlength_identical_contours(demo_scene):
    poly, spin, obs, sun = demo_scene
    from limbfit.geometry import body_frame_directions, projection_matrix

    om, om0 = body_frame_directions(1.0, spin, obs, sun)
    proj = projection_matrix(1.0, spin, obs)
    circ = outer_circuit(outer_contour(poly, om, om0, proj=proj)).oriented()
    img = ProfileImage(1.0, sun, obs, 0.01, circ.points / 0.01)
    res, _ = pathlength_residuals_image(poly, spin, img, np.zeros(2), 0.0)
    assert float(np.dot(res, res)) < 1e-18


def test_pathlength_start_invariance(demo_scene):
    poly, spin, obs, sun = demo_scene
    from limbfit.geometry import body_frame_directions, projection_matrix

    om, om0 = body_frame_directions(1.0, spin, obs, sun)
    proj = projection_matrix(1.0, spin, obs)
    circ = outer_circuit(outer_contour(poly, om, om0, proj=proj)).oriented()
    k = 17
    rolled = np.roll(circ.points, -k, axis=0)
    img = ProfileImage(1.0, sun, obs, 0.01, rolled / 0.01)
    c, _ = arc_positions(circ.points)
    res, _ = pathlength_residuals_image(poly, spin, img, np.zeros(2), c[k])
    assert float(np.dot(res, res)) < 1e-16


def test_pathlength_perimeter_term():
    n = 360
    ang = default_angles(n)
    eps = 0.01
    poly = sphere_mesh(12)
    spin = SpinState(1e-6, 0.0, 20.0, 0.0)
    from limbfit.geometry import body_frame_directions, projection_matrix

    om, om0 = body_frame_directions(0.0, spin, Z, Z)
    proj = projection_matrix(0.0, spin, Z)
    circ = outer_circuit(outer_contour(poly, om, om0, proj=proj)).oriented()
    c_per = circ.perimeter()
    obs_pts = (1 + eps) * circ.points
    img = ProfileImage(0.0, Z, Z, 0.01, obs_pts / 0.01)
    lam = 2.5
    res, _ = pathlength_residuals_image(
        poly, spin, img, np.zeros(2), 0.0, perim_weight=lam
    )
    perim_res = res[-1] ** 2
    assert np.isclose(perim_res, lam * (eps * c_per) ** 2, rtol=1e-6)


def test_distance_zero_on_contour_points(demo_scene):
    poly, spin, obs, sun = demo_scene
    from limbfit.geometry import body_frame_directions, projection_matrix

    om, om0 = body_frame_directions(1.0, spin, obs, sun)
    proj = projection_matrix(1.0, spin, obs)
    circ = outer_circuit(outer_contour(poly, om, om0, proj=proj))
    mid = 0.5 * (circ.points + np.roll(circ.points, -1, axis=0))
    img = ProfileImage(1.0, sun, obs, 0.01, mid / 0.01)
    res, _ = distance_residuals_image(poly, spin, img, np.zeros(2))
    assert np.max(res) < 1e-12


def test_distance_reorder_invariance(demo_scene, rng):
    poly, spin, obs, sun = demo_scene
    img = _image_from_model(poly, spin, 1.0, obs, sun)
    a = chisq_profile_distance([img], poly, spin, offsets=[np.zeros(2)])
    perm = rng.permutation(len(img.points_px))
    shuffled = ProfileImage(
        img.epoch, img.sun, img.obs, img.scale_km_px, img.points_px[perm]
    )
    b = chisq_profile_distance([shuffled], poly, spin, offsets=[np.zeros(2)])
    assert np.isclose(a, b, rtol=1e-12)


def test_distance_against_dense_oracle(demo_scene, rng):
    poly, spin, obs, sun = demo_scene
    from limbfit.geometry import body_frame_directions, projection_matrix

    om, om0 = body_frame_directions(1.0, spin, obs, sun)
    proj = projection_matrix(1.0, spin, obs)
    circ = outer_circuit(outer_contour(poly, om, om0, proj=proj))
    pts = rng.normal(scale=1.2, size=(200, 2))
    img = ProfileImage(1.0, sun, obs, 0.01, pts / 0.01)
    res, _ = distance_residuals_image(poly, spin, img, np.zeros(2))
    # dense sampling of the circuit as the reference
    seg_a = circ.points
    seg_b = np.roll(circ.points, -1, axis=0)
    ts = np.linspace(0, 1, 400)
    dense = np.concatenate(
        [a[None] + ts[:, None] * (b - a)[None] for a, b in zip(seg_a, seg_b)]
    )
    for p, d in zip(pts, res):
        ref = math.sqrt(np.min(np.sum((dense - p) ** 2, axis=1)))
        assert d <= ref + 1e-12
        assert abs(d - ref) < 2e-3


def test_all_three_measures_vanish_together(demo_scene):
    poly, spin, obs, sun = demo_scene
    from limbfit.geometry import body_frame_directions, projection_matrix

    om, om0 = body_frame_directions(1.0, spin, obs, sun)
    proj = projection_matrix(1.0, spin, obs)
    circ = outer_circuit(outer_contour(poly, om, om0, proj=proj)).oriented()
    img = ProfileImage(1.0, sun, obs, 0.01, circ.points / 0.01)
    assert chisq_profile_pathlength([img], poly, spin, offsets=[np.zeros(2)]) < 1e-16
    assert chisq_profile_distance([img], poly, spin, offsets=[np.zeros(2)]) < 1e-16
    # the rmax form needs the radial samples rather than the raw circuit
    img2 = _image_from_model(poly, spin, 1.0, obs, sun)
    assert (
        chisq_profile_rmax([img2], poly, spin, offsets=[np.zeros(2)], n_angles=180)
        < 1e-16
    )
