import math

import numpy as np
import pytest

from limbfit.shape import Polytope, ShapeParams, surface_grid, tessellate


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)


def sphere_mesh(subdivision=8, radius=1.0):
    poly = tessellate(ShapeParams(0, 0), subdivision)
    return poly if radius == 1.0 else poly.scaled(radius)


def ellipsoid_mesh(a, b, c, subdivision=8):
    theta, phi, faces = surface_grid(subdivision)
    u = np.stack(
        [np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)],
        axis=-1,
    )
    return Polytope(u * np.array([a, b, c]), faces, theta, phi)


def rotated_mesh(poly, matrix):
    return Polytope(poly.vertices @ np.asarray(matrix).T, poly.faces)


def dented_sphere(subdivision=8, vertex=None, push=0.55):
    base = sphere_mesh(subdivision)
    verts = base.vertices.copy()
    if vertex is None:
        vertex = int(np.argmax(verts[:, 2]))
    verts[vertex] *= push
    return Polytope(verts, base.faces), vertex


def random_unit(rng, n=None):
    v = rng.normal(size=(3,) if n is None else (n, 3))
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def random_starlike(rng, l_max=3, m_max=3, amp=0.08, subdivision=6):
    p = ShapeParams(l_max, m_max)
    c = rng.normal(scale=amp, size=p.coeffs.shape)
    c[0] = 0.0
    return tessellate(ShapeParams(l_max, m_max, c), subdivision)
