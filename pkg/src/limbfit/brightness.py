"""Visible-and-illuminated facet sets and the disk-integrated brightness
forward model.

A facet belongs to the active set when both normal tests pass and the ray
from its centroid toward the viewer (and toward the sun) is not blocked by
the rest of the mesh; the centroid stands in for the whole facet, which is
correct to the order of the facet size.  For convex bodies the ray tests
change nothing and the normal tests alone decide.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .geometry import inertial_to_body_matrix

# ray-depth guard: occluders closer than this fraction of the diameter are
# treated as numerical coincidences (adjacent, nearly coplanar facets)
OCCLUSION_DEPTH_FRACTION = 1e-8


class ScatterLaw:
    """Reflectance factor R with per-facet contribution ``R(mu, mu0) mu A``."""

    name = "base"

    def reflectance(self, mu, mu0):
        raise NotImplementedError

    def reflectance_grad(self, mu, mu0):
        """Partial derivatives (dR/dmu, dR/dmu0)."""
        raise NotImplementedError


class LommelSeeligerLambert(ScatterLaw):
    """Weighted single-scatter plus diffuse law.

    The per-facet contribution works out to
    ``f mu mu0 / (mu + mu0) + (1 - f) mu mu0`` times the facet area, the
    standard combination in disk-integrated photometry.
    """

    def __init__(self, f=0.9):
        if not 0.0 <= f <= 1.0:
            raise ValueError("weight f must lie in [0, 1]")
        self.f = float(f)
        self.name = f"ls+lambert(f={self.f})"

    def reflectance(self, mu, mu0):
        mu = np.asarray(mu, dtype=float)
        mu0 = np.asarray(mu0, dtype=float)
        s = mu + mu0
        safe = np.where(s > 1e-12, s, 1.0)
        ls = np.where(s > 1e-12, mu0 / safe, 0.0)
        return self.f * ls + (1.0 - self.f) * mu0

    def reflectance_grad(self, mu, mu0):
        mu = np.asarray(mu, dtype=float)
        mu0 = np.asarray(mu0, dtype=float)
        s = mu + mu0
        safe = np.where(s > 1e-12, s, 1.0)
        ok = s > 1e-12
        d_mu = np.where(ok, -self.f * mu0 / safe**2, 0.0)
        d_mu0 = np.where(ok, self.f * mu / safe**2, 0.0) + (1.0 - self.f)
        return d_mu, d_mu0


class Lambert(LommelSeeligerLambert):
    def __init__(self):
        super().__init__(f=0.0)
        self.name = "lambert"


@dataclass(frozen=True)
class VisibilitySet:
    """Active-set mask for one (viewing, illumination) pair."""

    mask: np.ndarray
    omega: np.ndarray
    omega0: np.ndarray


def _depth_eps(poly):
    return OCCLUSION_DEPTH_FRACTION * 2.0 * poly.bounding_radius


def visible_illuminated(poly, omega, omega0, occlusion="binned"):
    """Active set for body-frame directions ``omega`` (view), ``omega0`` (sun).

    ``occlusion`` selects the ray-test path: "binned" (default), "brute"
    (the O(F^2) oracle), or "none" (normal tests only, exact for convex
    bodies).
    """
    omega = np.asarray(omega, dtype=float)
    omega0 = np.asarray(omega0, dtype=float)
    mu = poly.normals @ omega
    mu0 = poly.normals @ omega0
    cand = (mu >= 0.0) & (mu0 >= 0.0)
    if occlusion != "none" and cand.any():
        eps = _depth_eps(poly)
        fn = kernels.brute_occluded if occlusion == "brute" else None
        if fn is not None:
            occ_v = fn(poly.vertices, poly.faces, poly.centroids, omega,
                       cand.astype(np.uint8), eps)
            alive = cand & (occ_v == 0)
            occ_s = fn(poly.vertices, poly.faces, poly.centroids, omega0,
                       alive.astype(np.uint8), eps)
            cand = alive & (occ_s == 0)
        else:
            dirs = np.ascontiguousarray(np.stack([omega, omega0]))
            occ = kernels.occluded_batch(
                poly.vertices, poly.faces, poly.centroids, dirs,
                np.ascontiguousarray(np.stack([cand, cand]).astype(np.uint8)), eps)
            cand = cand & (occ[0] == 0) & (occ[1] == 0)
    return VisibilitySet(mask=cand, omega=omega, omega0=omega0)


def visible_illuminated_batch(poly, omegas, omegas0, occlusion="binned"):
    """Active-set masks for many epochs at once; returns (N, F) bool."""
    omegas = np.ascontiguousarray(omegas, dtype=float)
    omegas0 = np.ascontiguousarray(omegas0, dtype=float)
    mu = omegas @ poly.normals.T
    mu0 = omegas0 @ poly.normals.T
    cand = (mu >= 0.0) & (mu0 >= 0.0)
    if occlusion == "none" or not cand.any():
        return cand
    eps = _depth_eps(poly)
    occ_v = kernels.occluded_batch(
        poly.vertices, poly.faces, poly.centroids, omegas,
        np.ascontiguousarray(cand.astype(np.uint8)), eps)
    alive = cand & (occ_v == 0)
    occ_s = kernels.occluded_batch(
        poly.vertices, poly.faces, poly.centroids, omegas0,
        np.ascontiguousarray(alive.astype(np.uint8)), eps)
    return alive & (occ_s == 0)


def brightness(poly, omega, omega0, scatter, vis=None):
    """Disk-integrated brightness for one body-frame geometry."""
    if vis is None:
        vis = visible_illuminated(poly, omega, omega0)
    mu = poly.normals @ np.asarray(omega, dtype=float)
    mu0 = poly.normals @ np.asarray(omega0, dtype=float)
    contrib = scatter.reflectance(mu, mu0) * mu * poly.areas
    return float(np.sum(contrib[vis.mask]))


def brightness_batch(poly, omegas, omegas0, scatter, masks=None, occlusion="binned"):
    """Brightness for many epochs; vectorized over the epoch axis."""
    omegas = np.asarray(omegas, dtype=float)
    omegas0 = np.asarray(omegas0, dtype=float)
    if masks is None:
        masks = visible_illuminated_batch(poly, omegas, omegas0, occlusion)
    mu = omegas @ poly.normals.T
    mu0 = omegas0 @ poly.normals.T
    contrib = scatter.reflectance(mu, mu0) * mu * poly.areas[None, :]
    return np.sum(np.where(masks, contrib, 0.0), axis=1)


def fit_scale(l_obs, l_mod):
    """Closed-form least-squares scale applied to the model curve."""
    denom = float(np.dot(l_mod, l_mod))
    if denom <= 0.0:
        return 0.0
    return float(np.dot(l_obs, l_mod) / denom)


def lightcurve_model(lightcurve, poly, spin, scatter, occlusion="binned"):
    """Model brightness at the epochs of one lightcurve (body-frame chain)."""
    b = inertial_to_body_matrix(lightcurve.t, spin)
    om = np.einsum("nij,nj->ni", b, lightcurve.obs)
    om0 = np.einsum("nij,nj->ni", b, lightcurve.sun)
    return brightness_batch(poly, om, om0, scatter, occlusion=occlusion)


def lightcurve_residuals(data, poly, spin, scatter, occlusion="binned"):
    """Stacked residuals after per-curve relative scaling.

    Returns ``(residuals, scales, per_curve_chisq)``.  No noise weighting
    is applied; the caller owns any such convention.
    """
    if not data:
        raise ValueError("no lightcurves given")
    res = []
    scales = []
    per_curve = []
    for lc in data:
        l_mod = lightcurve_model(lc, poly, spin, scatter, occlusion)
        s = fit_scale(lc.l_obs, l_mod)
        r = lc.l_obs - s * l_mod
        res.append(r)
        scales.append(s)
        per_curve.append(float(np.dot(r, r)))
    return np.concatenate(res), np.asarray(scales), np.asarray(per_curve)


def chisq_lightcurves(data, poly, spin, scatter, occlusion="binned"):
    """Sum of squared brightness residuals over all lightcurves."""
    r, _, _ = lightcurve_residuals(data, poly, spin, scatter, occlusion)
    return float(np.dot(r, r))
