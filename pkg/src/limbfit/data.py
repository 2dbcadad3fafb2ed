"""Observation containers shared by the forward models and the fit."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _unit_rows(v, what):
    v = np.atleast_2d(np.asarray(v, dtype=float))
    n = np.linalg.norm(v, axis=1)
    if np.any(n <= 0):
        raise ValueError(f"{what}: zero direction vector")
    return v / n[:, None]


@dataclass
class Lightcurve:
    """One block of disk-integrated brightness measurements.

    Epochs in days, brightness in relative intensity units, directions as
    unit vectors in the shared inertial frame (one row per point).
    """

    t: np.ndarray
    l_obs: np.ndarray
    sun: np.ndarray
    obs: np.ndarray

    def __post_init__(self):
        self.t = np.atleast_1d(np.asarray(self.t, dtype=float))
        self.l_obs = np.atleast_1d(np.asarray(self.l_obs, dtype=float))
        self.sun = _unit_rows(self.sun, "sun")
        self.obs = _unit_rows(self.obs, "obs")
        n = len(self.t)
        if not (len(self.l_obs) == n and len(self.sun) == n and len(self.obs) == n):
            raise ValueError("lightcurve arrays must have matching length")
        if np.any(self.l_obs <= 0):
            raise ValueError("brightness values must be positive")

    def __len__(self):
        return len(self.t)


@dataclass
class ProfileImage:
    """One measured profile contour.

    ``points_px`` are the ordered boundary points in pixel units; the
    conversion to km uses ``scale_km_px``.  The in-plane position of the
    contour is arbitrary: the offset is solved during inversion.
    """

    epoch: float
    sun: np.ndarray
    obs: np.ndarray
    scale_km_px: float
    points_px: np.ndarray
    image_id: str = ""
    # current estimates of the per-image nuisance parameters: plane offset
    # (km, image frame) and, for the path-length measure, the start offset
    offset_km: np.ndarray = None
    arc_offset: float = 0.0

    def __post_init__(self):
        self.sun = _unit_rows(self.sun, "sun")[0]
        self.obs = _unit_rows(self.obs, "obs")[0]
        self.points_px = np.asarray(self.points_px, dtype=float)
        if self.points_px.ndim != 2 or self.points_px.shape[1] != 2:
            raise ValueError("contour points must be an (N, 2) array")
        if len(self.points_px) < 3:
            raise ValueError("a contour needs at least 3 points")
        if not self.scale_km_px > 0:
            raise ValueError("pixel scale must be positive")

    @property
    def points_km(self):
        return self.points_px * self.scale_km_px

    def __len__(self):
        return len(self.points_px)


@dataclass
class Dataset:
    lightcurves: list = field(default_factory=list)
    images: list = field(default_factory=list)

    @property
    def n_lightcurve_points(self):
        return sum(len(lc) for lc in self.lightcurves)
