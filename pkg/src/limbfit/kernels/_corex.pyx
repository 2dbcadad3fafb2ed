# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled geometry kernels.

Same contracts as ``limbfit.kernels._pure``; the occlusion kernel adds a
uniform 2-D binning of projected facets and the radial kernel prunes edges
by their angular span, which is what makes repeated forward-model
evaluation affordable inside the optimizer loop.
"""

from libc.math cimport atan2, ceil, cos, fabs, floor, hypot, sin, sqrt
from libc.stdlib cimport free, malloc

import numpy as np

BACKEND_NAME = "compiled"

cdef double DEGEN = 1e-300
cdef double TWO_PI = 6.283185307179586476925286766559


cdef void _basis(const double* d, double* e1, double* e2) noexcept nogil:
    # identical construction to the pure backend: cross with the axis of
    # the smallest component, then complete the triad
    cdef int k = 0
    cdef double a0 = fabs(d[0]), a1 = fabs(d[1]), a2 = fabs(d[2])
    cdef double ax[3]
    cdef double n
    if a1 < a0:
        k = 1
        a0 = a1
    if a2 < a0:
        k = 2
    ax[0] = 0.0; ax[1] = 0.0; ax[2] = 0.0
    ax[k] = 1.0
    e1[0] = d[1] * ax[2] - d[2] * ax[1]
    e1[1] = d[2] * ax[0] - d[0] * ax[2]
    e1[2] = d[0] * ax[1] - d[1] * ax[0]
    n = sqrt(e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2])
    e1[0] /= n; e1[1] /= n; e1[2] /= n
    e2[0] = d[1] * e1[2] - d[2] * e1[1]
    e2[1] = d[2] * e1[0] - d[0] * e1[2]
    e2[2] = d[0] * e1[1] - d[1] * e1[0]


def occluded_batch(const double[:, ::1] verts, const int[:, ::1] faces,
                   const double[:, ::1] centroids, const double[:, ::1] dirs,
                   const unsigned char[:, ::1] cand, double eps, int nbins=0):
    """Occlusion masks for a batch of directions (binned ray casting)."""
    cdef Py_ssize_t nv = verts.shape[0], nf = faces.shape[0], nd = dirs.shape[0]
    cdef Py_ssize_t k, f, i, j, c, b, bu, bv, lo, hi
    out_np = np.zeros((nd, nf), dtype=np.uint8)
    cdef unsigned char[:, ::1] out = out_np
    if nbins <= 0:
        nbins = <int>sqrt(<double>nf)
        if nbins < 4:
            nbins = 4
        if nbins > 64:
            nbins = 64

    cdef double* u = <double*>malloc(nv * sizeof(double))
    cdef double* v = <double*>malloc(nv * sizeof(double))
    cdef double* w = <double*>malloc(nv * sizeof(double))
    cdef int* bin_count = <int*>malloc(nbins * nbins * sizeof(int))
    cdef int* bin_start = <int*>malloc((nbins * nbins + 1) * sizeof(int))
    cdef int* fumin = <int*>malloc(nf * sizeof(int))
    cdef int* fumax = <int*>malloc(nf * sizeof(int))
    cdef int* fvmin = <int*>malloc(nf * sizeof(int))
    cdef int* fvmax = <int*>malloc(nf * sizeof(int))
    cdef int* bin_items = NULL
    cdef int n_items
    cdef double e1[3]
    cdef double e2[3]
    cdef double d[3]
    cdef double umin, umax, vmin, vmax, su, sv
    cdef double u1, u2, u3, v1, v2, v3, w1, w2, w3
    cdef double det, inv, du, dv, b1, b2, b3, depth, cu, cv, cw
    cdef double lou, hiu, lov, hiv
    cdef int iu0, iu1, iv0, iv1, occ

    if u == NULL or v == NULL or w == NULL or bin_count == NULL \
            or bin_start == NULL or fumin == NULL or fumax == NULL \
            or fvmin == NULL or fvmax == NULL:
        raise MemoryError

    try:
        for k in range(nd):
            d[0] = dirs[k, 0]; d[1] = dirs[k, 1]; d[2] = dirs[k, 2]
            _basis(d, e1, e2)
            umin = 1e300; umax = -1e300; vmin = 1e300; vmax = -1e300
            for i in range(nv):
                u[i] = verts[i, 0] * e1[0] + verts[i, 1] * e1[1] + verts[i, 2] * e1[2]
                v[i] = verts[i, 0] * e2[0] + verts[i, 1] * e2[1] + verts[i, 2] * e2[2]
                w[i] = verts[i, 0] * d[0] + verts[i, 1] * d[1] + verts[i, 2] * d[2]
                if u[i] < umin: umin = u[i]
                if u[i] > umax: umax = u[i]
                if v[i] < vmin: vmin = v[i]
                if v[i] > vmax: vmax = v[i]
            su = (umax - umin)
            sv = (vmax - vmin)
            if su <= 0.0: su = 1.0
            if sv <= 0.0: sv = 1.0
            su = nbins / (su * 1.0000001)
            sv = nbins / (sv * 1.0000001)

            # register each facet in every bin its projected AABB overlaps
            for b in range(nbins * nbins):
                bin_count[b] = 0
            for f in range(nf):
                lou = 1e300; hiu = -1e300; lov = 1e300; hiv = -1e300
                for c in range(3):
                    i = faces[f, c]
                    if u[i] < lou: lou = u[i]
                    if u[i] > hiu: hiu = u[i]
                    if v[i] < lov: lov = v[i]
                    if v[i] > hiv: hiv = v[i]
                iu0 = <int>floor((lou - umin) * su)
                iu1 = <int>floor((hiu - umin) * su)
                iv0 = <int>floor((lov - vmin) * sv)
                iv1 = <int>floor((hiv - vmin) * sv)
                if iu0 < 0: iu0 = 0
                if iv0 < 0: iv0 = 0
                if iu1 > nbins - 1: iu1 = nbins - 1
                if iv1 > nbins - 1: iv1 = nbins - 1
                fumin[f] = iu0; fumax[f] = iu1
                fvmin[f] = iv0; fvmax[f] = iv1
                for bu in range(iu0, iu1 + 1):
                    for bv in range(iv0, iv1 + 1):
                        bin_count[bu * nbins + bv] += 1
            bin_start[0] = 0
            for b in range(nbins * nbins):
                bin_start[b + 1] = bin_start[b] + bin_count[b]
            n_items = bin_start[nbins * nbins]
            bin_items = <int*>malloc(n_items * sizeof(int))
            if bin_items == NULL:
                raise MemoryError
            for b in range(nbins * nbins):
                bin_count[b] = 0
            for f in range(nf):
                for bu in range(fumin[f], fumax[f] + 1):
                    for bv in range(fvmin[f], fvmax[f] + 1):
                        b = bu * nbins + bv
                        bin_items[bin_start[b] + bin_count[b]] = <int>f
                        bin_count[b] += 1

            for f in range(nf):
                if not cand[k, f]:
                    continue
                cu = centroids[f, 0] * e1[0] + centroids[f, 1] * e1[1] + centroids[f, 2] * e1[2]
                cv = centroids[f, 0] * e2[0] + centroids[f, 1] * e2[1] + centroids[f, 2] * e2[2]
                cw = centroids[f, 0] * d[0] + centroids[f, 1] * d[1] + centroids[f, 2] * d[2]
                bu = <int>floor((cu - umin) * su)
                bv = <int>floor((cv - vmin) * sv)
                if bu < 0: bu = 0
                if bv < 0: bv = 0
                if bu > nbins - 1: bu = nbins - 1
                if bv > nbins - 1: bv = nbins - 1
                b = bu * nbins + bv
                lo = bin_start[b]
                hi = bin_start[b] + bin_count[b]
                occ = 0
                for c in range(lo, hi):
                    j = bin_items[c]
                    if j == f:
                        continue
                    u1 = u[faces[j, 0]]; v1 = v[faces[j, 0]]; w1 = w[faces[j, 0]]
                    u2 = u[faces[j, 1]]; v2 = v[faces[j, 1]]; w2 = w[faces[j, 1]]
                    u3 = u[faces[j, 2]]; v3 = v[faces[j, 2]]; w3 = w[faces[j, 2]]
                    det = (v2 - v3) * (u1 - u3) + (u3 - u2) * (v1 - v3)
                    if fabs(det) <= DEGEN:
                        continue
                    inv = 1.0 / det
                    du = cu - u3
                    dv = cv - v3
                    b1 = ((v2 - v3) * du + (u3 - u2) * dv) * inv
                    b2 = ((v3 - v1) * du + (u1 - u3) * dv) * inv
                    b3 = 1.0 - b1 - b2
                    if b1 >= 0.0 and b2 >= 0.0 and b3 >= 0.0:
                        depth = b1 * w1 + b2 * w2 + b3 * w3 - cw
                        if depth > eps:
                            occ = 1
                            break
                out[k, f] = <unsigned char>occ
            free(bin_items)
            bin_items = NULL
    finally:
        free(u); free(v); free(w)
        free(bin_count); free(bin_start)
        free(fumin); free(fumax); free(fvmin); free(fvmax)
        if bin_items != NULL:
            free(bin_items)
    return out_np


def brute_occluded(const double[:, ::1] verts, const int[:, ::1] faces,
                   const double[:, ::1] centroids, const double[::1] direction,
                   const unsigned char[::1] cand, double eps):
    """O(F^2) occlusion test (reference path, no binning)."""
    cdef Py_ssize_t nv = verts.shape[0], nf = faces.shape[0]
    cdef Py_ssize_t f, j, i
    out_np = np.zeros(nf, dtype=np.uint8)
    cdef unsigned char[::1] out = out_np
    cdef double e1[3]
    cdef double e2[3]
    cdef double d[3]
    cdef double* u = <double*>malloc(nv * sizeof(double))
    cdef double* v = <double*>malloc(nv * sizeof(double))
    cdef double* w = <double*>malloc(nv * sizeof(double))
    cdef double u1, u2, u3, v1, v2, v3, w1, w2, w3
    cdef double det, inv, du, dv, b1, b2, b3, depth, cu, cv, cw
    if u == NULL or v == NULL or w == NULL:
        raise MemoryError
    d[0] = direction[0]; d[1] = direction[1]; d[2] = direction[2]
    _basis(d, e1, e2)
    try:
        for i in range(nv):
            u[i] = verts[i, 0] * e1[0] + verts[i, 1] * e1[1] + verts[i, 2] * e1[2]
            v[i] = verts[i, 0] * e2[0] + verts[i, 1] * e2[1] + verts[i, 2] * e2[2]
            w[i] = verts[i, 0] * d[0] + verts[i, 1] * d[1] + verts[i, 2] * d[2]
        for f in range(nf):
            if not cand[f]:
                continue
            cu = centroids[f, 0] * e1[0] + centroids[f, 1] * e1[1] + centroids[f, 2] * e1[2]
            cv = centroids[f, 0] * e2[0] + centroids[f, 1] * e2[1] + centroids[f, 2] * e2[2]
            cw = centroids[f, 0] * d[0] + centroids[f, 1] * d[1] + centroids[f, 2] * d[2]
            for j in range(nf):
                if j == f:
                    continue
                u1 = u[faces[j, 0]]; v1 = v[faces[j, 0]]; w1 = w[faces[j, 0]]
                u2 = u[faces[j, 1]]; v2 = v[faces[j, 1]]; w2 = w[faces[j, 1]]
                u3 = u[faces[j, 2]]; v3 = v[faces[j, 2]]; w3 = w[faces[j, 2]]
                det = (v2 - v3) * (u1 - u3) + (u3 - u2) * (v1 - v3)
                if fabs(det) <= DEGEN:
                    continue
                inv = 1.0 / det
                du = cu - u3
                dv = cv - v3
                b1 = ((v2 - v3) * du + (u3 - u2) * dv) * inv
                b2 = ((v3 - v1) * du + (u1 - u3) * dv) * inv
                b3 = 1.0 - b1 - b2
                if b1 >= 0.0 and b2 >= 0.0 and b3 >= 0.0:
                    depth = b1 * w1 + b2 * w2 + b3 * w3 - cw
                    if depth > eps:
                        out[f] = 1
                        break
    finally:
        free(u); free(v); free(w)
    return out_np


def radial_max(const double[:, ::1] edges, const double[::1] origin, const double[::1] angles,
               double tol):
    """Largest ray/edge intersection distance per angle (uniform grid).

    The edges are pruned by the angular interval they subtend about the
    origin, so the cost is O(E * mean span + K) instead of O(E * K).
    Falls back to exhaustive scanning when the grid is not uniform.
    """
    cdef Py_ssize_t ne = edges.shape[0], K = angles.shape[0]
    cdef Py_ssize_t e, k, kk
    r_np = np.zeros(K)
    idx_np = np.full(K, -1, dtype=np.int64)
    hits_np = np.zeros(K, dtype=np.int64)
    cdef double[::1] r = r_np
    cdef long long[::1] idx = idx_np
    cdef long long[::1] hits = hits_np
    cdef double x0 = origin[0], y0 = origin[1]
    cdef double xa, ya, xb, yb, C, D, F, A, B, E0, den, x, y, dist, alpha
    cdef double sin_a, cos_a, pa, pb, width, lo, hi, step
    cdef double da, db, best
    cdef int uniform = 1
    cdef long long k0, k1, span
    cdef int hit

    if K >= 2:
        step = angles[1] - angles[0]
        for k in range(1, K):
            if fabs((angles[k] - angles[k - 1]) - step) > 1e-9 * (fabs(step) + 1e-30):
                uniform = 0
                break
        if step <= 0.0:
            uniform = 0
        # index wraparound is only valid when the grid covers a full turn
        if fabs(K * step - TWO_PI) > 1e-6:
            uniform = 0
    else:
        step = TWO_PI
        uniform = 0

    for e in range(ne):
        xa = edges[e, 0]; ya = edges[e, 1]; xb = edges[e, 2]; yb = edges[e, 3]
        C = ya - yb
        D = xb - xa
        F = xb * ya - xa * yb
        if uniform:
            pa = atan2(ya - y0, xa - x0)
            pb = atan2(yb - y0, xb - x0)
            width = pb - pa
            while width < 0.0:
                width += TWO_PI
            if width <= 3.14159265358979323846:
                lo = pa
            else:
                lo = pb
                width = TWO_PI - width
            k0 = <long long>ceil((lo - angles[0]) / step) - 1
            span = <long long>floor(width / step) + 3
            if span > K:
                span = K
        else:
            k0 = 0
            span = K
        for kk in range(span):
            k = (k0 + kk) % K
            if k < 0:
                k += K
            alpha = angles[k]
            sin_a = sin(alpha)
            cos_a = cos(alpha)
            A = -sin_a
            B = cos_a
            E0 = A * x0 + B * y0
            den = A * D - B * C
            hit = 0
            if fabs(den) > tol:
                x = (D * E0 - B * F) / den
                y = (A * F - C * E0) / den
                if (x - xa) * (xb - x) >= -tol and (y - ya) * (yb - y) >= -tol \
                        and (x - x0) * cos_a >= -tol and (y - y0) * sin_a >= -tol:
                    hit = 1
                    dist = hypot(x - x0, y - y0)
            elif fabs(D * E0 - B * F) <= tol and fabs(A * F - C * E0) <= tol:
                best = -1.0
                if (xa - x0) * cos_a >= -tol and (ya - y0) * sin_a >= -tol:
                    da = hypot(xa - x0, ya - y0)
                    best = da
                if (xb - x0) * cos_a >= -tol and (yb - y0) * sin_a >= -tol:
                    db = hypot(xb - x0, yb - y0)
                    if best < 0.0 or db < best:
                        best = db
                if best >= 0.0:
                    hit = 1
                    dist = best
            if hit:
                hits[k] += 1
                if dist > r[k] or idx[k] < 0:
                    r[k] = dist
                    idx[k] = e
    return r_np, idx_np, hits_np


def segment_distances(const double[:, ::1] points, const double[:, ::1] poly, int closed,
                      double tol):
    """Squared point-to-polyline distances with winning segment and param."""
    cdef Py_ssize_t npts = points.shape[0]
    cdef Py_ssize_t nseg = poly.shape[0] if closed else poly.shape[0] - 1
    cdef Py_ssize_t p, s, nxt
    d2_np = np.empty(npts)
    seg_np = np.zeros(npts, dtype=np.int64)
    t_np = np.zeros(npts)
    cdef double[::1] d2 = d2_np
    cdef long long[::1] seg = seg_np
    cdef double[::1] tpar = t_np
    cdef double ax, ay, ex, ey, ee, t, fx, fy, dx, dy, dd, best, bt
    cdef Py_ssize_t bs
    for p in range(npts):
        best = 1e300
        bs = 0
        bt = 0.0
        for s in range(nseg):
            nxt = s + 1
            if nxt == poly.shape[0]:
                nxt = 0
            ax = poly[s, 0]; ay = poly[s, 1]
            ex = poly[nxt, 0] - ax; ey = poly[nxt, 1] - ay
            ee = ex * ex + ey * ey
            if ee > 0.0:
                t = ((points[p, 0] - ax) * ex + (points[p, 1] - ay) * ey) / ee
                if t < 0.0: t = 0.0
                if t > 1.0: t = 1.0
            else:
                t = 0.0
            fx = ax + t * ex
            fy = ay + t * ey
            dx = points[p, 0] - fx
            dy = points[p, 1] - fy
            dd = dx * dx + dy * dy
            if dd < best:
                best = dd
                bs = s
                bt = t
        d2[p] = best
        seg[p] = bs
        tpar[p] = bt
    return d2_np, seg_np, t_np
