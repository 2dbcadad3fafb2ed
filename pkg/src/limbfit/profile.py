"""Model profile contours of a polytope and the contour goodness-of-fit
measures.

Starlike profiles are handled through per-angle maximal radii measured from
a point inside the contour; general (possibly folded) profiles go through
the outer-contour circuit construction, which walks the boundary edges of
the visible-and-illuminated facet set, splits the projected sequences at
their mutual intersection points, keeps the visible pieces and reconnects
them into closed circuits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .brightness import visible_illuminated
from .geometry import body_frame_directions, plane_basis, projection_matrix

TWO_PI = 2.0 * math.pi


class ProfileGeometryError(ValueError):
    pass


class NonStarlikeContourError(ProfileGeometryError):
    pass


# ---------------------------------------------------------------------------
# plane primitives
# ---------------------------------------------------------------------------

def edge_ray_intersection(a, b, origin, alpha, tol=1e-12):
    """Intersection of the ray from ``origin`` at angle ``alpha`` with the
    segment ``a``--``b``.

    Returns the plane point, or None when the ray misses the segment or
    points the wrong way.  A ray collinear with the segment returns the
    nearer eligible endpoint.
    """
    xa, ya = float(a[0]), float(a[1])
    xb, yb = float(b[0]), float(b[1])
    x0, y0 = float(origin[0]), float(origin[1])
    if xa == xb and ya == yb:
        raise ValueError("degenerate segment")
    sin_a = math.sin(alpha)
    cos_a = math.cos(alpha)
    A = -sin_a
    B = cos_a
    C = ya - yb
    D = xb - xa
    E = A * x0 + B * y0
    F = xb * ya - xa * yb
    den = A * D - B * C
    if abs(den) <= tol:
        if abs(D * E - B * F) <= tol and abs(A * F - C * E) <= tol:
            best = None
            for px, py in ((xa, ya), (xb, yb)):
                if (px - x0) * cos_a >= -tol and (py - y0) * sin_a >= -tol:
                    d = math.hypot(px - x0, py - y0)
                    if best is None or d < best[0]:
                        best = (d, (px, py))
            return None if best is None else np.array(best[1])
        return None
    x = (D * E - B * F) / den
    y = (A * F - C * E) / den
    if (
        (x - xa) * (xb - x) >= -tol
        and (y - ya) * (yb - y) >= -tol
        and (x - x0) * cos_a >= -tol
        and (y - y0) * sin_a >= -tol
    ):
        return np.array([x, y])
    return None


def point_segment_projection(kappa, a, b):
    """Foot point of ``kappa`` on the line through segment ``a``--``b``.

    Uses the closed form in the segment coefficients; returns
    ``(foot, inside)`` where ``inside`` tells whether the foot lies within
    the segment.
    """
    xa, ya = float(a[0]), float(a[1])
    xb, yb = float(b[0]), float(b[1])
    x, y = float(kappa[0]), float(kappa[1])
    C = ya - yb
    D = xb - xa
    F = xb * ya - xa * yb
    den = C * C + D * D
    if den == 0.0:
        raise ValueError("degenerate segment")
    px = (D * D * x - C * D * y + C * F) / den
    py = (C * C * y - C * D * x + D * F) / den
    t = ((px - xa) * D + (py - ya) * (yb - ya)) / den
    return np.array([px, py]), 0.0 <= t <= 1.0


def segment_segment_intersection(p1, p2, q1, q2, tol=1e-12):
    """Proper intersection of two segments; returns (point, t_p, t_q) or None.

    Parallel and endpoint-touching configurations return None; the circuit
    assembly joins those through endpoint snapping instead.
    """
    p1 = np.asarray(p1, float)
    p2 = np.asarray(p2, float)
    q1 = np.asarray(q1, float)
    q2 = np.asarray(q2, float)
    d1 = p2 - p1
    d2 = q2 - q1
    den = d1[0] * d2[1] - d1[1] * d2[0]
    if abs(den) <= tol:
        return None
    dq = q1 - p1
    tp = (dq[0] * d2[1] - dq[1] * d2[0]) / den
    tq = (dq[0] * d1[1] - dq[1] * d1[0]) / den
    eps = 1e-9
    if eps < tp < 1.0 - eps and eps < tq < 1.0 - eps:
        return p1 + tp * d1, tp, tq
    return None


def polygon_area(points):
    """Signed shoelace area of a closed polygon (last edge implied)."""
    p = np.asarray(points, float)
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def polygon_perimeter(points):
    p = np.asarray(points, float)
    return float(np.linalg.norm(np.roll(p, -1, axis=0) - p, axis=1).sum())


def polygon_centroid(points):
    """Area centroid; falls back to the vertex mean for degenerate rings."""
    p = np.asarray(points, float)
    x, y = p[:, 0], p[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    a = 0.5 * cross.sum()
    if abs(a) < 1e-30:
        return p.mean(axis=0)
    cx = np.sum((x + xn) * cross) / (6.0 * a)
    cy = np.sum((y + yn) * cross) / (6.0 * a)
    return np.array([cx, cy])


def point_in_polygon(point, points):
    """Even-odd (crossing number) containment test."""
    p = np.asarray(points, float)
    x, y = float(point[0]), float(point[1])
    x1, y1 = p[:, 0], p[:, 1]
    x2, y2 = np.roll(x1, -1), np.roll(y1, -1)
    cond = (y1 <= y) != (y2 <= y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xc = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
    return bool(np.sum(cond & (x < xc)) % 2)


# ---------------------------------------------------------------------------
# starlike radius profiles
# ---------------------------------------------------------------------------

def active_edges(poly, mask):
    """Unique vertex-index pairs of the edges of the active facets."""
    f = poly.faces[np.asarray(mask, bool)]
    e = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
    e = np.sort(e, axis=1)
    return np.unique(e, axis=0)


def rmax_profile(poly, mask, omega, origin, angles, proj=None):
    """Maximal-radius profile of the active facet set.

    For each ray angle the largest intersection distance over all projected
    edges of active facets is returned.  ``origin`` must lie inside the
    projected contour; an angle with no intersection raises.
    """
    if not np.any(mask):
        raise ProfileGeometryError("empty active facet set")
    if proj is None:
        proj = plane_basis(omega)
    kappa = poly.vertices @ proj[1:, :].T
    ids = active_edges(poly, mask)
    edges = np.ascontiguousarray(
        np.concatenate([kappa[ids[:, 0]], kappa[ids[:, 1]]], axis=1)
    )
    tol = 1e-12 * 2.0 * poly.bounding_radius
    angles = np.ascontiguousarray(angles, dtype=float)
    r, idx, hits = kernels.radial_max(
        edges, np.ascontiguousarray(origin, dtype=float), angles, tol
    )
    if np.any(hits == 0):
        k = int(np.argmax(hits == 0))
        raise ProfileGeometryError(
            f"no contour intersection at angle {angles[k]:.6f} rad; "
            "is the origin inside the silhouette?"
        )
    return r, ids[idx], hits


def polar_resample(points, origin, angles, backtrack_tol=0.1):
    """Radii of an ordered contour about ``origin`` at given ray angles.

    Linear interpolation in polar angle.  Raises
    :class:`NonStarlikeContourError` when the contour does not wind once
    about the origin or the radius is multivalued (the traversal regresses
    in angle by more than ``backtrack_tol``).
    """
    p = np.asarray(points, float) - np.asarray(origin, float)
    phi = np.unwrap(np.arctan2(p[:, 1], p[:, 0]))
    rho = np.hypot(p[:, 0], p[:, 1])
    winding = phi[-1] - phi[0]
    span = abs(winding) + abs(phi[1] - phi[0])
    if not 0.8 * TWO_PI < span < 1.2 * TWO_PI:
        raise NonStarlikeContourError(
            "contour does not wind once about the origin; "
            "use the distance-based contour measure"
        )
    signed = phi * np.sign(winding)
    regression = float(np.max(np.maximum.accumulate(signed) - signed))
    if regression > backtrack_tol:
        raise NonStarlikeContourError(
            "contour radius is multivalued about the origin; "
            "use the distance-based contour measure"
        )
    order = np.argsort(phi % TWO_PI)
    phis = (phi % TWO_PI)[order]
    rhos = rho[order]
    phis = np.concatenate([phis, [phis[0] + TWO_PI]])
    rhos = np.concatenate([rhos, [rhos[0]]])
    return np.interp(np.asarray(angles, float) % TWO_PI, phis, rhos)


# ---------------------------------------------------------------------------
# outer-contour circuits
# ---------------------------------------------------------------------------

LIMB = "limb"
TERMINATOR = "terminator"


@dataclass
class ContourCircuit:
    """Closed projected circuit with per-vertex provenance.

    ``provenance`` holds one record per point: ``("v", vid)`` for a
    projected mesh vertex, or ``("x", (a0, a1, b0, b1))`` for the
    intersection of the projections of mesh edges (a0, a1) and (b0, b1).
    """

    points: np.ndarray
    provenance: list = field(default_factory=list)
    classification: str = "outer"

    def area(self):
        return abs(polygon_area(self.points))

    def signed_area(self):
        return polygon_area(self.points)

    def perimeter(self):
        return polygon_perimeter(self.points)

    @property
    def is_outer_class(self):
        return self.classification != "shadow"

    def oriented(self):
        """Counterclockwise copy (provenance reversed along)."""
        if polygon_area(self.points) >= 0.0:
            return self
        return ContourCircuit(
            self.points[::-1].copy(),
            list(reversed(self.provenance)),
            self.classification,
        )


def _boundary_sequences(poly, mask, mu):
    """Maximal same-class runs of directed boundary edges of the active set."""
    nbr = poly.neighbors()
    faces = poly.faces
    out_edges = {}
    n_edges = 0
    for f in np.nonzero(mask)[0]:
        for s in range(3):
            g = nbr[f, s]
            if g < 0 or mask[g]:
                continue
            va, vb = int(faces[f, s]), int(faces[f, (s + 1) % 3])
            cls = TERMINATOR if mu[g] >= 0.0 else LIMB
            out_edges.setdefault(va, []).append([vb, cls, False])
            n_edges += 1
    if n_edges == 0:
        raise ProfileGeometryError("active set has no boundary")

    loops = []
    for start in sorted(out_edges):
        for rec in out_edges[start]:
            if rec[2]:
                continue
            loop = []
            v = start
            r = rec
            while True:
                r[2] = True
                loop.append((v, r[0], r[1]))
                v = r[0]
                r = None
                for cand in out_edges.get(v, ()):
                    if not cand[2]:
                        r = cand
                        break
                if r is None:
                    break
            if loop[-1][1] != loop[0][0]:
                raise ProfileGeometryError(
                    f"boundary walk stranded at vertex {loop[-1][1]} "
                    "(mesh defect: open active-set boundary)"
                )
            loops.append(loop)

    sequences = []
    for loop in loops:
        # rotate so a class change (if any) sits at the start
        k = len(loop)
        cut = 0
        for i in range(k):
            if loop[i - 1][2] != loop[i][2]:
                cut = i
                break
        loop = loop[cut:] + loop[:cut]
        run = [loop[0]]
        for item in loop[1:]:
            if item[2] == run[-1][2]:
                run.append(item)
            else:
                sequences.append(run)
                run = [item]
        sequences.append(run)
    return sequences


class _Piece:
    """Open polyline piece: projected points + provenance + 3D support."""

    __slots__ = ("pts", "prov", "support")

    def __init__(self, pts, prov, support):
        self.pts = pts
        self.prov = prov
        self.support = support  # per segment: (vid_a, vid_b, t_lo, t_hi)


def _sequence_pieces(seq, kappa):
    pts = [kappa[seq[0][0]]]
    prov = [("v", seq[0][0])]
    support = []
    for va, vb, _cls in seq:
        pts.append(kappa[vb])
        prov.append(("v", vb))
        support.append((va, vb, 0.0, 1.0))
    return _Piece(np.asarray(pts), prov, support)


def _split_piece(piece, cuts):
    """Split a piece at (segment index, t, point, prov) cut records."""
    if not cuts:
        return [piece]
    by_seg = {}
    for s, t, pt, prov in cuts:
        by_seg.setdefault(s, []).append((t, pt, prov))
    out = []
    cur_pts = [piece.pts[0]]
    cur_prov = [piece.prov[0]]
    cur_sup = []
    for s in range(len(piece.support)):
        va, vb, a, b = piece.support[s]
        lo = a
        for t, pt, prov in sorted(by_seg.get(s, []), key=lambda c: c[0]):
            tt = a + t * (b - a)
            cur_pts.append(pt)
            cur_prov.append(prov)
            cur_sup.append((va, vb, lo, tt))
            out.append(_Piece(np.asarray(cur_pts), cur_prov, cur_sup))
            cur_pts = [pt]
            cur_prov = [prov]
            cur_sup = []
            lo = tt
        cur_pts.append(piece.pts[s + 1])
        cur_prov.append(piece.prov[s + 1])
        cur_sup.append((va, vb, lo, b))
    out.append(_Piece(np.asarray(cur_pts), cur_prov, cur_sup))
    return out


def _piece_visible(piece, poly, omega, mask, edge_faces, eps):
    """A piece is hidden when a facet of the active set covers it.

    Votes over up to three sample points to stay robust against grazing
    coverage at the sample location.
    """
    n = len(piece.support)
    picks = sorted({n // 2, n // 4, (3 * n) // 4})
    votes = 0
    total = 0
    for k in picks:
        va, vb, a, b = piece.support[k]
        t = 0.5 * (a + b)
        mid3 = poly.vertices[va] + t * (poly.vertices[vb] - poly.vertices[va])
        excl = edge_faces.get((min(va, vb), max(va, vb)), ())
        blocked = kernels.ray_blocked(
            poly.vertices, poly.faces, mid3, np.asarray(omega, float), eps,
            exclude=excl, allowed=mask,
        )
        total += 1
        votes += 0 if blocked else 1
    return 2 * votes >= total


def outer_contour(poly, omega, omega0, proj=None, occlusion="binned",
                  snap_factor=1e-6, vis_mask=None):
    """All closed contour circuits of the projected active set.

    Returns the circuits with the enclosing one classified ``outer``,
    enclosed ones ``shadow`` and disjoint extra ones ``secondary``.
    """
    omega = np.asarray(omega, float)
    if vis_mask is None:
        vis_mask = visible_illuminated(poly, omega, omega0, occlusion).mask
    if not vis_mask.any():
        raise ProfileGeometryError("nothing is visible and illuminated")
    if proj is None:
        proj = plane_basis(omega)
    kappa = poly.vertices @ proj[1:, :].T
    mu = poly.normals @ omega
    sequences = _boundary_sequences(poly, vis_mask, mu)
    pieces = [_sequence_pieces(s, kappa) for s in sequences]
    classes = [s[0][2] for s in sequences]

    # intersections: folds make limb projections cross anything, and
    # occlusion-induced terminator pieces can cross each other as well, so
    # every sequence pair is tested
    scale = float(np.max(np.abs(kappa))) if kappa.size else 1.0
    tol = 1e-12 * max(scale, 1e-30)
    cuts = [[] for _ in pieces]
    for i in range(len(pieces)):
        for j in range(i, len(pieces)):
            pi, pj = pieces[i], pieces[j]
            for si in range(len(pi.support)):
                sj0 = si + 1 if i == j else 0
                for sj in range(sj0, len(pj.support)):
                    if i == j and sj <= si + 1:
                        continue
                    a1, a2 = pi.pts[si], pi.pts[si + 1]
                    b1, b2 = pj.pts[sj], pj.pts[sj + 1]
                    shared = {pi.support[si][0], pi.support[si][1]} & {
                        pj.support[sj][0], pj.support[sj][1]
                    }
                    if shared:
                        continue
                    hit = segment_segment_intersection(a1, a2, b1, b2, tol)
                    if hit is None:
                        continue
                    pt, tp, tq = hit
                    prov = (
                        "x",
                        (
                            pi.support[si][0], pi.support[si][1],
                            pj.support[sj][0], pj.support[sj][1],
                        ),
                    )
                    cuts[i].append((si, tp, pt, prov))
                    cuts[j].append((sj, tq, pt, prov))

    split = []
    for piece, cut in zip(pieces, cuts):
        split.extend(_split_piece(piece, cut))

    edge_faces = poly.edge_map()
    eps = 1e-8 * 2.0 * poly.bounding_radius
    visible = [
        p for p in split
        if len(p.pts) >= 2 and _piece_visible(p, poly, omega, vis_mask, edge_faces, eps)
    ]
    if not visible:
        raise ProfileGeometryError("no visible contour pieces")

    # join pieces into closed circuits; exact endpoint matches first, then
    # facet-scale bridging across fold gaps (the construction is accurate
    # to the order of the facet size anyway)
    diam = float(np.max(kappa, axis=0).max() - np.min(kappa, axis=0).min())
    snap = snap_factor * max(diam, 1e-30)
    seg_len = [
        float(np.max(np.linalg.norm(np.diff(p.pts, axis=0), axis=1)))
        for p in visible
        if len(p.pts) > 1
    ]
    bridge = 1.25 * max(seg_len) if seg_len else snap

    def node(pt):
        return (round(pt[0] / snap), round(pt[1] / snap))

    by_node = {}
    for idx in range(len(visible)):
        for end, pt in ((0, visible[idx].pts[0]), (1, visible[idx].pts[-1])):
            by_node.setdefault(node(pt), []).append((idx, end))
    used = [False] * len(visible)
    circuits = []
    for start in range(len(visible)):
        if used[start]:
            continue
        used[start] = True
        chain_pts = [visible[start].pts]
        chain_prov = list(visible[start].prov)
        start_pt = visible[start].pts[0]
        cur_pt = visible[start].pts[-1]
        guard = 0
        while np.linalg.norm(cur_pt - start_pt) > snap:
            guard += 1
            if guard > len(visible) + 1:
                raise ProfileGeometryError(
                    f"circuit assembly stuck; dangling endpoint near {tuple(cur_pt)}"
                )
            nxt = None
            for idx, end in by_node.get(node(cur_pt), ()):
                if not used[idx]:
                    nxt = (idx, end)
                    break
            if nxt is None:
                # bridge the smallest gap to an unused endpoint or close up
                best = None
                for idx in range(len(visible)):
                    if used[idx]:
                        continue
                    for end, pt in ((0, visible[idx].pts[0]), (1, visible[idx].pts[-1])):
                        d = float(np.linalg.norm(pt - cur_pt))
                        if best is None or d < best[0]:
                            best = (d, idx, end)
                d_close = float(np.linalg.norm(cur_pt - start_pt))
                if best is not None and best[0] <= bridge and best[0] <= d_close:
                    nxt = (best[1], best[2])
                elif d_close <= bridge:
                    break  # close the circuit across the gap
                else:
                    raise ProfileGeometryError(
                        f"circuit assembly stuck; dangling endpoint near {tuple(cur_pt)}"
                    )
            idx, end = nxt
            used[idx] = True
            piece = visible[idx]
            pts = piece.pts if end == 0 else piece.pts[::-1]
            prov = piece.prov if end == 0 else list(reversed(piece.prov))
            joined = bool(np.linalg.norm(pts[0] - cur_pt) <= snap)
            chain_pts.append(pts[1:] if joined else pts)
            chain_prov.extend(prov[1:] if joined else prov)
            cur_pt = pts[-1]
        points = np.concatenate(chain_pts, axis=0)
        # drop the duplicated closing point
        if np.linalg.norm(points[-1] - points[0]) <= 2 * snap and len(points) > 3:
            points = points[:-1]
            chain_prov = chain_prov[:-1]
        if len(points) >= 3:
            circuits.append(ContourCircuit(points, chain_prov))

    if not circuits:
        raise ProfileGeometryError("no closed circuits found")

    # classification by containment
    reps = [c.points[0] for c in circuits]
    for i, c in enumerate(circuits):
        contained = False
        for j, other in enumerate(circuits):
            if i == j:
                continue
            if point_in_polygon(reps[i], other.points) and other.area() > c.area():
                contained = True
                break
        c.classification = "shadow" if contained else "outer"
    outer = [c for c in circuits if c.classification == "outer"]
    if len(outer) > 1:
        outer.sort(key=lambda c: -c.area())
        for c in outer[1:]:
            c.classification = "secondary"
    circuits.sort(key=lambda c: -c.area())
    return circuits


def outer_circuit(circuits):
    for c in circuits:
        if c.classification == "outer":
            return c
    raise ProfileGeometryError("no outer circuit present")


# ---------------------------------------------------------------------------
# contour chi-square measures
# ---------------------------------------------------------------------------

def _image_geometry(poly, spin, image, occlusion="binned"):
    om, om0 = body_frame_directions(image.epoch, spin, image.obs, image.sun)
    proj = projection_matrix(image.epoch, spin, image.obs)
    vis = visible_illuminated(poly, om, om0, occlusion)
    return om, om0, proj, vis


def default_angles(n):
    return np.arange(n) * (TWO_PI / n)


def rmax_residuals_image(poly, spin, image, offset, n_angles=360,
                         occlusion="binned", model=None):
    """Per-angle radius residuals (observed - model) for one image.

    ``offset`` is the plane position, in km in the image frame, of the
    point the observed radii are measured from; the model radii are
    measured from the projection of the body origin.
    """
    angles = default_angles(n_angles)
    if model is None:
        om, om0, proj, vis = _image_geometry(poly, spin, image, occlusion)
        r_mod, edge_ids, _ = rmax_profile(
            poly, vis.mask, om, np.zeros(2), angles, proj=proj
        )
    else:
        r_mod, edge_ids = model
    pts = image.points_km
    if not point_in_polygon(offset, pts):
        raise ProfileGeometryError("radius origin lies outside the contour")
    r_obs = polar_resample(pts, offset, angles)
    return r_obs - r_mod, (r_mod, edge_ids)


def chisq_profile_rmax(contours, poly, spin, offsets=None, n_angles=360,
                       occlusion="binned"):
    """Starlike maximal-radius contour misfit summed over images."""
    if not contours:
        raise ProfileGeometryError("no profile images given")
    total = 0.0
    for i, image in enumerate(contours):
        off = _image_offset(image, offsets, i)
        res, _ = rmax_residuals_image(poly, spin, image, off, n_angles, occlusion)
        total += float(np.dot(res, res))
    return total


def _image_offset(image, offsets, i):
    if offsets is not None:
        return np.asarray(offsets[i], float)
    off = getattr(image, "offset_km", None)
    if off is None:
        return polygon_centroid(image.points_km)
    return np.asarray(off, float)


def arc_positions(points):
    """Normalized cumulative chord-length positions of polygon vertices."""
    p = np.asarray(points, float)
    seg = np.linalg.norm(np.diff(p, axis=0, append=p[:1]), axis=1)
    total = seg.sum()
    c = np.concatenate([[0.0], np.cumsum(seg[:-1])]) / total
    return c, float(total)


def sample_closed_polyline(points, fracs):
    """Points along a closed polyline at the given perimeter fractions.

    Returns ``(samples, seg_idx, seg_t)`` so callers can differentiate
    through the interpolation.
    """
    p = np.asarray(points, float)
    seg_vec = np.roll(p, -1, axis=0) - p
    seg_len = np.linalg.norm(seg_vec, axis=1)
    total = seg_len.sum()
    bounds = np.concatenate([[0.0], np.cumsum(seg_len)])
    s = (np.asarray(fracs, float) % 1.0) * total
    idx = np.clip(np.searchsorted(bounds, s, side="right") - 1, 0, len(p) - 1)
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.where(seg_len[idx] > 0, (s - bounds[idx]) / seg_len[idx], 0.0)
    return p[idx] + t[:, None] * seg_vec[idx], idx, t


def pathlength_residuals_image(poly, spin, image, offset, arc_offset,
                               perim_weight=1.0, occlusion="binned",
                               circuit=None):
    """Arclength-matched point residuals plus the perimeter residual."""
    if circuit is None:
        om, om0, proj, vis = _image_geometry(poly, spin, image, occlusion)
        circuit = outer_circuit(
            outer_contour(poly, om, om0, proj=proj, vis_mask=vis.mask)
        ).oriented()
    obs = image.points_km
    if polygon_area(obs) < 0.0:
        obs = obs[::-1]
    c_obs, s_total = arc_positions(obs)
    samples, _, _ = sample_closed_polyline(circuit.points, arc_offset + c_obs)
    diff = obs - (samples + np.asarray(offset, float)[None, :])
    c_total = circuit.perimeter()
    perim = math.sqrt(max(perim_weight, 0.0)) * (s_total - c_total)
    return np.concatenate([diff.ravel(), [perim]]), circuit


def chisq_profile_pathlength(contours, poly, spin, offsets=None,
                             arc_offsets=None, perim_weight=1.0,
                             occlusion="binned"):
    """Normalized path-length contour misfit summed over images."""
    if not contours:
        raise ProfileGeometryError("no profile images given")
    total = 0.0
    for i, image in enumerate(contours):
        off = _image_offset(image, offsets, i)
        c0 = (
            arc_offsets[i]
            if arc_offsets is not None
            else getattr(image, "arc_offset", 0.0)
        )
        res, _ = pathlength_residuals_image(
            poly, spin, image, off, c0, perim_weight, occlusion
        )
        total += float(np.dot(res, res))
    return total


def distance_residuals_image(poly, spin, image, offset, occlusion="binned",
                             circuit=None):
    """Shortest distances from observed points to the model circuit."""
    if circuit is None:
        om, om0, proj, vis = _image_geometry(poly, spin, image, occlusion)
        circuit = outer_circuit(
            outer_contour(poly, om, om0, proj=proj, vis_mask=vis.mask)
        )
    model_pts = circuit.points + np.asarray(offset, float)[None, :]
    scale = max(float(np.max(np.abs(model_pts))), 1e-30)
    d2, seg, t = kernels.segment_distances(
        np.ascontiguousarray(image.points_km),
        np.ascontiguousarray(model_pts),
        1,
        1e-12 * scale,
    )
    return np.sqrt(d2), (circuit, seg, t)


def chisq_profile_distance(contours, poly, spin, offsets=None,
                           occlusion="binned"):
    """Point-to-contour distance misfit summed over images."""
    if not contours:
        raise ProfileGeometryError("no profile images given")
    total = 0.0
    for i, image in enumerate(contours):
        off = _image_offset(image, offsets, i)
        res, _ = distance_residuals_image(poly, spin, image, off, occlusion)
        total += float(np.dot(res, res))
    return total
