"""Starlike body model: exponential harmonic radius field on a triangulated
subdivided-octahedron grid, plus the geometric attributes the fit needs
(normals, areas, inertia alignment, convex-hull membership).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.spatial import ConvexHull
from scipy.special import lpmv

FOUR_PI = 4.0 * math.pi


# ---------------------------------------------------------------------------
# real orthonormal spherical-harmonic basis
#
# Convention (fixed by unit tests): orthonormal over the sphere, no
# Condon-Shortley phase, cosine terms for m > 0 and sine terms for m < 0.
# ---------------------------------------------------------------------------

def harmonic_indices(l_max, m_max):
    """Ordered (l, m) pairs of the truncated series."""
    if l_max < 0 or m_max < 0:
        raise ValueError("truncation orders must be nonnegative")
    out = []
    for l in range(l_max + 1):
        mm = min(l, m_max)
        for m in range(-mm, mm + 1):
            out.append((l, m))
    return out


def real_harmonic(l, m, theta, phi):
    """Single real orthonormal harmonic evaluated at (theta, phi)."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    am = abs(m)
    norm = math.sqrt(
        (2 * l + 1) / FOUR_PI * math.factorial(l - am) / math.factorial(l + am)
    )
    # scipy's lpmv carries the Condon-Shortley factor; remove it
    p = (-1.0) ** am * lpmv(am, l, np.cos(theta))
    if m == 0:
        return norm * p
    if m > 0:
        return math.sqrt(2.0) * norm * p * np.cos(m * phi)
    return math.sqrt(2.0) * norm * p * np.sin(am * phi)


def basis_matrix(theta, phi, l_max, m_max):
    """Matrix of harmonics, one column per (l, m) pair."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    pairs = harmonic_indices(l_max, m_max)
    out = np.empty((theta.size, len(pairs)))
    for j, (l, m) in enumerate(pairs):
        out[:, j] = real_harmonic(l, m, theta.ravel(), phi.ravel())
    return out


@dataclass
class ShapeParams:
    """Coefficients of the exponential harmonic series for log-radius."""

    l_max: int
    m_max: int
    coeffs: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.m_max > self.l_max:
            raise ValueError("m_max cannot exceed l_max")
        n = len(harmonic_indices(self.l_max, self.m_max))
        if self.coeffs is None:
            self.coeffs = np.zeros(n)
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape != (n,):
            raise ValueError(f"expected {n} coefficients, got {self.coeffs.shape}")
        if not np.all(np.isfinite(self.coeffs)):
            raise ValueError("coefficients must be finite")

    @property
    def indices(self):
        return harmonic_indices(self.l_max, self.m_max)

    def index_of(self, l, m):
        return self.indices.index((l, m))

    def with_coeff(self, l, m, value):
        c = self.coeffs.copy()
        c[self.index_of(l, m)] = value
        return ShapeParams(self.l_max, self.m_max, c)

    def copy(self):
        return ShapeParams(self.l_max, self.m_max, self.coeffs.copy())


def radius(theta, phi, params):
    """Radius field ``exp(sum c_lm Y_lm)``; positive by construction."""
    y = basis_matrix(theta, phi, params.l_max, params.m_max)
    r = np.exp(y @ params.coeffs)
    return r.reshape(np.shape(theta)) if np.ndim(theta) else float(r[0])


# ---------------------------------------------------------------------------
# subdivided-octahedron grid
# ---------------------------------------------------------------------------

@lru_cache(maxsize=16)
def surface_grid(subdivision):
    """Vertex grid and facet table of the subdivided octahedron sphere.

    Rows of constant colatitude make the (theta, phi) bookkeeping of the
    starlike model trivial.  Returns ``(theta, phi, faces)`` where faces is
    an (8 n^2, 3) int32 array with consistent outward winding on the unit
    sphere.
    """
    n = int(subdivision)
    if n < 1:
        raise ValueError("subdivision must be >= 1")

    counts = [1] + [4 * min(k, 2 * n - k) for k in range(1, 2 * n)] + [1]
    offsets = np.concatenate([[0], np.cumsum(counts)])
    theta = np.empty(offsets[-1])
    phi = np.empty(offsets[-1])
    for k in range(2 * n + 1):
        m = counts[k]
        j = np.arange(m)
        theta[offsets[k] : offsets[k] + m] = math.pi * k / (2 * n)
        phi[offsets[k] : offsets[k] + m] = 2.0 * math.pi * j / m

    def vid(k, j):
        return offsets[k] + (j % counts[k] if counts[k] > 1 else 0)

    faces = []
    for k in range(2 * n):
        q1 = min(k, 2 * n - k)
        q2 = min(k + 1, 2 * n - k - 1)
        for o in range(4):
            if q2 == q1 + 1:  # expanding band (northern hemisphere)
                for i in range(q1 + 1):
                    faces.append(
                        (vid(k + 1, o * q2 + i), vid(k + 1, o * q2 + i + 1), vid(k, o * q1 + i))
                    )
                for i in range(q1):
                    faces.append(
                        (vid(k, o * q1 + i), vid(k + 1, o * q2 + i + 1), vid(k, o * q1 + i + 1))
                    )
            else:  # contracting band (southern hemisphere)
                for i in range(q2 + 1):
                    faces.append(
                        (vid(k, o * q1 + i), vid(k, o * q1 + i + 1), vid(k + 1, o * q2 + i))
                    )
                for i in range(q2):
                    faces.append(
                        (vid(k + 1, o * q2 + i), vid(k, o * q1 + i + 1), vid(k + 1, o * q2 + i + 1))
                    )
    faces = np.asarray(faces, dtype=np.int32)

    # orient outward on the unit sphere
    u = np.stack(
        [np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)],
        axis=-1,
    )
    a, b, c = u[faces[:, 0]], u[faces[:, 1]], u[faces[:, 2]]
    flip = np.einsum("ij,ij->i", np.cross(b - a, c - a), a + b + c) < 0.0
    faces[flip] = faces[flip][:, [0, 2, 1]]
    theta.setflags(write=False)
    phi.setflags(write=False)
    faces.setflags(write=False)
    return theta, phi, faces


class DegenerateMeshError(ValueError):
    pass


class Polytope:
    """Triangulated closed surface with precomputed facet attributes.

    Immutable after construction; every derived quantity is read-only, so
    instances can be shared freely across threads.
    """

    def __init__(self, vertices, faces, theta=None, phi=None, area_floor=1e-14):
        self.vertices = np.ascontiguousarray(vertices, dtype=float)
        self.faces = np.ascontiguousarray(faces, dtype=np.int32)
        self.theta = None if theta is None else np.asarray(theta, dtype=float)
        self.phi = None if phi is None else np.asarray(phi, dtype=float)
        a = self.vertices[self.faces[:, 0]]
        b = self.vertices[self.faces[:, 1]]
        c = self.vertices[self.faces[:, 2]]
        n = np.cross(b - a, c - a)
        norms = np.linalg.norm(n, axis=1)
        scale = float(np.max(np.linalg.norm(self.vertices, axis=1)))
        if np.any(norms <= area_floor * scale * scale):
            bad = int(np.argmin(norms))
            raise DegenerateMeshError(f"facet {bad} has (near) zero area")
        self.areas = 0.5 * norms
        self.normals = n / norms[:, None]
        self.centroids = (a + b + c) / 3.0
        self.bounding_radius = scale
        self._hull_flags = None
        self._neighbors = None
        for arr in (self.vertices, self.faces, self.areas, self.normals, self.centroids):
            arr.setflags(write=False)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_faces(self):
        return len(self.faces)

    def vertex_radii(self):
        return np.linalg.norm(self.vertices, axis=1)

    def volume(self):
        a = self.vertices[self.faces[:, 0]]
        b = self.vertices[self.faces[:, 1]]
        c = self.vertices[self.faces[:, 2]]
        return float(np.einsum("ij,ij->i", a, np.cross(b, c)).sum() / 6.0)

    def edge_map(self):
        """Dict (v_lo, v_hi) -> list of facet indices sharing the edge."""
        edges = {}
        for f, (i, j, k) in enumerate(self.faces):
            for e in ((i, j), (j, k), (k, i)):
                key = (int(min(e)), int(max(e)))
                edges.setdefault(key, []).append(f)
        return edges

    def neighbors(self):
        """(F, 3) array of edge-adjacent facets (-1 on boundary edges)."""
        if self._neighbors is None:
            nbr = np.full((self.n_faces, 3), -1, dtype=np.int32)
            for (lo, hi), fs in self.edge_map().items():
                if len(fs) == 2:
                    f0, f1 = fs
                    for f, other in ((f0, f1), (f1, f0)):
                        tri = self.faces[f]
                        for s in range(3):
                            e = {int(tri[s]), int(tri[(s + 1) % 3])}
                            if e == {lo, hi}:
                                nbr[f, s] = other
            nbr.setflags(write=False)
            self._neighbors = nbr
        return self._neighbors

    def is_closed(self):
        return all(len(fs) == 2 for fs in self.edge_map().values())

    def hull_flags(self, tol_factor=1e-8):
        """Per-facet flag: centroid lies on the convex hull of the vertices."""
        if self._hull_flags is None:
            try:
                hull = ConvexHull(self.vertices)
            except Exception as exc:  # qhull failures surface as errors
                raise DegenerateMeshError(f"convex hull failed: {exc}") from exc
            eq = hull.equations
            tol = tol_factor * self.bounding_radius
            d = eq[:, :3] @ self.centroids.T + eq[:, 3:4]
            flags = np.max(d, axis=0) >= -tol
            flags.setflags(write=False)
            self._hull_flags = flags
        return self._hull_flags

    def is_convex(self):
        return bool(np.all(self.hull_flags()))

    def scaled(self, s):
        if s <= 0:
            raise ValueError("scale must be positive")
        return Polytope(self.vertices * s, self.faces, self.theta, self.phi)


def tessellate(params, subdivision):
    """Starlike polytope with vertices on the subdivided-octahedron grid."""
    theta, phi, faces = surface_grid(subdivision)
    y = basis_matrix(theta, phi, params.l_max, params.m_max)
    r = np.exp(y @ params.coeffs)
    u = np.stack(
        [np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)],
        axis=-1,
    )
    return Polytope(r[:, None] * u, faces, theta, phi)


# ---------------------------------------------------------------------------
# inertia alignment
# ---------------------------------------------------------------------------

def inertia_products(poly):
    """Exact second moments ``P_ij = integral of x_i x_j`` (unit density).

    Each facet closes a tetrahedron against the origin; signed tetrahedron
    moments sum to the exact polyhedral integral.
    """
    a = poly.vertices[poly.faces[:, 0]]
    b = poly.vertices[poly.faces[:, 1]]
    c = poly.vertices[poly.faces[:, 2]]
    vol6 = np.einsum("ij,ij->i", a, np.cross(b, c))
    s = a + b + c
    quad = (
        np.einsum("fi,fj->fij", a, a)
        + np.einsum("fi,fj->fij", b, b)
        + np.einsum("fi,fj->fij", c, c)
        + np.einsum("fi,fj->fij", s, s)
    )
    return np.einsum("f,fij->ij", vol6 / 6.0 / 20.0, quad)


def inertia_tensor(poly):
    p = inertia_products(poly)
    return np.array(
        [
            [p[1, 1] + p[2, 2], -p[0, 1], -p[0, 2]],
            [-p[0, 1], p[0, 0] + p[2, 2], -p[1, 2]],
            [-p[0, 2], -p[1, 2], p[0, 0] + p[1, 1]],
        ]
    )


def inertia_alignment(poly, degeneracy_tol=5e-3):
    """Alignment of the maximum-inertia axis with the body z axis.

    Returns ``(g, tau)`` where ``g = (1 - I3^2)^2`` with ``I3`` the
    z component of the unit eigenvector of the largest eigenvalue, and
    ``tau = arccos(|I3|)``.  When the top eigenvalue is degenerate within
    ``degeneracy_tol`` (relative), the eigenvector inside the degenerate
    subspace closest to z is used, so a sphere reports ``tau = 0``.
    """
    mat = inertia_tensor(poly)
    tr = np.trace(mat)
    if not np.isfinite(tr) or tr <= 0.0:
        raise DegenerateMeshError("inertia tensor is not positive")
    mat = mat / tr
    try:
        w, v = np.linalg.eigh(mat)
    except np.linalg.LinAlgError as exc:
        raise DegenerateMeshError(f"inertia eigensolver failed: {exc}") from exc
    # eigh sorts ascending; the top eigenspace spans the trailing columns
    top = w[-1]
    in_top = w >= top - degeneracy_tol * abs(top)
    sub = v[:, in_top]
    i3 = min(1.0, float(np.linalg.norm(sub[2, :])))
    g = (1.0 - i3 * i3) ** 2
    tau = math.acos(i3)
    return g, tau


def convex_hull_flags(poly):
    """Per-facet convex-hull membership used by the nonconvexity measure."""
    return poly.hull_flags()


def write_obj(path, poly, header_lines=()):
    """Write the mesh as ASCII Wavefront OBJ."""
    with open(path, "w") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        for v in poly.vertices:
            fh.write(f"v {v[0]:.17g} {v[1]:.17g} {v[2]:.17g}\n")
        for f in poly.faces:
            fh.write(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}\n")
