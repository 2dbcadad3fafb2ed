"""Pure-numpy implementations of the hot geometry kernels.

These are the fallback used when the compiled extension is unavailable and
the brute-force reference the compiled kernels are verified against.  The
logic (basis construction, tolerances, tie-breaking) is kept identical so
both backends return the same values on the same inputs.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "pure"

_DEGEN = 1e-300


def dir_basis(direction):
    """Orthonormal (e1, e2) spanning the plane perpendicular to a direction."""
    d = np.asarray(direction, dtype=float)
    axis = np.zeros(3)
    axis[int(np.argmin(np.abs(d)))] = 1.0
    e1 = np.cross(d, axis)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(d, e1)
    return e1, e2


def brute_occluded(verts, faces, centroids, direction, cand, eps):
    """Occlusion mask for candidate facet centroids along ``direction``.

    A candidate facet is occluded when the ray from its centroid toward the
    (distant) viewer passes through any other facet at depth greater than
    ``eps``.  Every facet of the mesh is tested: this is the O(F^2) oracle.
    """
    e1, e2 = dir_basis(direction)
    d = np.asarray(direction, dtype=float)
    u = verts @ e1
    v = verts @ e2
    w = verts @ d
    occ = np.zeros(len(faces), dtype=np.uint8)
    idx = np.nonzero(cand)[0]
    if idx.size == 0:
        return occ

    i0, i1, i2 = faces[:, 0], faces[:, 1], faces[:, 2]
    u1, u2, u3 = u[i0], u[i1], u[i2]
    v1, v2, v3 = v[i0], v[i1], v[i2]
    w1, w2, w3 = w[i0], w[i1], w[i2]
    det = (v2 - v3) * (u1 - u3) + (u3 - u2) * (v1 - v3)
    good = np.abs(det) > _DEGEN
    inv = np.where(good, 1.0 / np.where(good, det, 1.0), 0.0)

    cu = centroids[idx] @ e1
    cv = centroids[idx] @ e2
    cw = centroids[idx] @ d

    # chunk the candidate axis to bound the (C, F) temporaries
    for lo in range(0, idx.size, 256):
        rows = np.arange(lo, min(lo + 256, idx.size))
        du = cu[rows, None] - u3[None, :]
        dv = cv[rows, None] - v3[None, :]
        b1 = ((v2 - v3) * du + (u3 - u2) * dv) * inv
        b2 = ((v3 - v1) * du + (u1 - u3) * dv) * inv
        b3 = 1.0 - b1 - b2
        inside = (b1 >= 0.0) & (b2 >= 0.0) & (b3 >= 0.0) & good
        depth = b1 * w1 + b2 * w2 + b3 * w3 - cw[rows, None]
        hit = inside & (depth > eps)
        hit[np.arange(rows.size), idx[rows]] = False  # never self-occlude
        occ[idx[rows]] = np.any(hit, axis=1).astype(np.uint8)
    return occ


def occluded_batch(verts, faces, centroids, dirs, cand, eps, nbins=0):
    """Occlusion masks for a batch of directions; ``nbins`` is ignored here."""
    dirs = np.asarray(dirs, dtype=float)
    out = np.zeros((len(dirs), len(faces)), dtype=np.uint8)
    for k in range(len(dirs)):
        out[k] = brute_occluded(verts, faces, centroids, dirs[k], cand[k], eps)
    return out


def ray_blocked(verts, faces, origin, direction, eps, exclude=(), allowed=None):
    """True when the ray ``origin + s*direction`` (s > eps) hits the mesh.

    ``allowed`` optionally restricts the blocking facets to a boolean mask.
    """
    e1, e2 = dir_basis(direction)
    d = np.asarray(direction, dtype=float)
    origin = np.asarray(origin, dtype=float)
    u = verts @ e1 - origin @ e1
    v = verts @ e2 - origin @ e2
    w = verts @ d - origin @ d
    i0, i1, i2 = faces[:, 0], faces[:, 1], faces[:, 2]
    u1, u2, u3 = u[i0], u[i1], u[i2]
    v1, v2, v3 = v[i0], v[i1], v[i2]
    det = (v2 - v3) * (u1 - u3) + (u3 - u2) * (v1 - v3)
    good = np.abs(det) > _DEGEN
    inv = np.where(good, 1.0 / np.where(good, det, 1.0), 0.0)
    b1 = (-(v2 - v3) * u3 - (u3 - u2) * v3) * inv
    b2 = (-(v3 - v1) * u3 - (u1 - u3) * v3) * inv
    b3 = 1.0 - b1 - b2
    inside = (b1 >= 0.0) & (b2 >= 0.0) & (b3 >= 0.0) & good
    depth = b1 * w[i0] + b2 * w[i1] + b3 * w[i2]
    hit = inside & (depth > eps)
    if allowed is not None:
        hit &= np.asarray(allowed, bool)
    for f in exclude:
        hit[f] = False
    return bool(np.any(hit))


def radial_max(edges, origin, angles, tol):
    """Largest ray/edge intersection distance for each ray angle.

    Parameters
    ----------
    edges : (E, 4) array
        Rows ``(xi_a, eta_a, xi_b, eta_b)`` of plane segments.
    origin : (2,) array
        Ray origin.
    angles : (K,) array
        Ray direction angles.
    tol : float
        Absolute geometric tolerance (same unit as the coordinates).

    Returns
    -------
    r : (K,) array of max distances (0 where no edge is hit)
    idx : (K,) int array of the edge attaining the max (-1 where none)
    hits : (K,) int array counting intersected edges
    """
    edges = np.asarray(edges, dtype=float)
    xa, ya, xb, yb = edges[:, 0], edges[:, 1], edges[:, 2], edges[:, 3]
    x0, y0 = float(origin[0]), float(origin[1])
    C = ya - yb
    D = xb - xa
    F = xb * ya - xa * yb
    K = len(angles)
    r = np.zeros(K)
    idx = np.full(K, -1, dtype=np.int64)
    hits = np.zeros(K, dtype=np.int64)
    for k in range(K):
        alpha = angles[k]
        sin_a = np.sin(alpha)
        cos_a = np.cos(alpha)
        A = -sin_a
        B = cos_a
        E0 = A * x0 + B * y0
        den = A * D - B * C
        ok = np.abs(den) > tol
        with np.errstate(divide="ignore", invalid="ignore"):
            x = (D * E0 - B * F) / den
            y = (A * F - C * E0) / den
        between = ((x - xa) * (xb - x) >= -tol) & ((y - ya) * (yb - y) >= -tol)
        forward = ((x - x0) * cos_a >= -tol) & ((y - y0) * sin_a >= -tol)
        hit = ok & between & forward
        dist = np.hypot(x - x0, y - y0)
        # collinear ray and edge: both numerators vanish; use the nearer
        # eligible endpoint
        deg = ~ok & (np.abs(D * E0 - B * F) <= tol) & (np.abs(A * F - C * E0) <= tol)
        if np.any(deg):
            for e in np.nonzero(deg)[0]:
                best = None
                for px, py in ((xa[e], ya[e]), (xb[e], yb[e])):
                    if (px - x0) * cos_a >= -tol and (py - y0) * sin_a >= -tol:
                        de = np.hypot(px - x0, py - y0)
                        if best is None or de < best:
                            best = de
                if best is not None:
                    hit[e] = True
                    dist[e] = best
        hk = np.nonzero(hit)[0]
        hits[k] = hk.size
        if hk.size:
            j = hk[np.argmax(dist[hk])]
            r[k] = dist[j]
            idx[k] = j
    return r, idx, hits


def segment_distances(points, poly, closed, tol):
    """Squared distance from each point to the nearest polyline segment.

    Returns ``(d2, seg, t)`` where ``seg`` indexes the winning segment and
    ``t`` in [0, 1] locates the closest point along it (0/1 at endpoints).
    """
    points = np.asarray(points, dtype=float)
    poly = np.asarray(poly, dtype=float)
    a = poly
    b = np.roll(poly, -1, axis=0) if closed else poly[1:]
    if not closed:
        a = poly[:-1]
    e = b - a
    ee = np.einsum("ij,ij->i", e, e)
    ee_safe = np.where(ee > 0.0, ee, 1.0)
    dp = points[:, None, :] - a[None, :, :]
    t = np.einsum("pij,ij->pi", dp, e) / ee_safe
    t = np.clip(t, 0.0, 1.0)
    foot = a[None, :, :] + t[:, :, None] * e[None, :, :]
    diff = points[:, None, :] - foot
    d2 = np.einsum("pij,pij->pi", diff, diff)
    seg = np.argmin(d2, axis=1)
    rows = np.arange(len(points))
    return d2[rows, seg], seg.astype(np.int64), t[rows, seg]
