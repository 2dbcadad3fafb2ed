"""Rotations, plane projections and the body-frame transformation chain.

Conventions used throughout the package:

* all angles are in radians, all epochs in days,
* rotation matrices rotate the *coordinate frame* (not the vector) in the
  positive sense about the named axis,
* a viewing direction ``omega`` is a unit 3-vector, or equivalently the
  polar pair ``(theta, psi)`` with
  ``omega = (sin(theta) cos(psi), sin(theta) sin(psi), cos(theta))``,
* the projection plane of a direction carries 2-D coordinates
  ``kappa = (xi, eta)`` in the same length unit as the body model.

All functions are stateless and can be called concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

TWO_PI = 2.0 * math.pi

# below this value of sin(theta) a direction counts as polar and the
# documented psi convention for the poles is applied
_POLE_TOL = 1e-14


def unit(v):
    """Return ``v`` normalized to unit length."""
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    if np.any(n == 0.0):
        raise ValueError("cannot normalize a zero vector")
    return v / n


def direction_from_polar(theta, psi):
    """Unit vector for polar angles ``(theta, psi)``."""
    st = np.sin(theta)
    return np.stack(
        [st * np.cos(psi), st * np.sin(psi), np.cos(theta) * np.ones_like(psi)],
        axis=-1,
    )


def polar_from_direction(omega):
    """Polar angles ``(theta, psi)`` of a unit direction.

    At the poles ``psi`` is not defined by the vector; the returned
    convention (``psi = -pi/2`` at the north pole, ``+pi/2`` at the south
    pole) is the one for which the plane coordinates reduce to
    ``(x1, x2)`` and ``(-x1, x2)`` respectively.
    """
    omega = np.asarray(omega, dtype=float)
    z = np.clip(omega[2], -1.0, 1.0)
    theta = math.acos(z)
    if math.hypot(omega[0], omega[1]) < _POLE_TOL:
        psi = -0.5 * math.pi if z > 0.0 else 0.5 * math.pi
    else:
        psi = math.atan2(omega[1], omega[0]) % TWO_PI
    return theta, psi


def rot_z(phi):
    """Frame rotation matrix about the z axis."""
    c, s = np.cos(phi), np.sin(phi)
    return np.array([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])


def rot_y(phi):
    """Frame rotation matrix about the y axis."""
    c, s = np.cos(phi), np.sin(phi)
    return np.array([[c, 0.0, -s], [0.0, 1.0, 0.0], [s, 0.0, c]])


def _rot_z_many(phi):
    phi = np.asarray(phi, dtype=float)
    c, s = np.cos(phi), np.sin(phi)
    out = np.zeros(phi.shape + (3, 3))
    out[..., 0, 0] = c
    out[..., 0, 1] = s
    out[..., 1, 0] = -s
    out[..., 1, 1] = c
    out[..., 2, 2] = 1.0
    return out


def plane_basis(omega):
    """3x3 matrix mapping 3-vectors into the projection frame of ``omega``.

    Rows 2 and 3 give the plane coordinates ``(xi, eta)``; row 1 is the
    depth along ``omega`` (the matrix maps ``omega`` itself to ``(1,0,0)``).
    """
    theta, psi = polar_from_direction(omega)
    return rot_y(theta - 0.5 * math.pi) @ rot_z(psi)


def project(x, omega):
    """Project 3-D points onto the plane perpendicular to ``omega``.

    Parameters
    ----------
    x : array_like, shape (..., 3)
    omega : array_like, shape (3,)
        Unit viewing direction.

    Returns
    -------
    ndarray, shape (..., 2)
    """
    basis = plane_basis(omega)
    x = np.asarray(x, dtype=float)
    return x @ basis[1:, :].T


def lift(kappa, omega):
    """Embed plane points back into 3-D on the plane through the origin.

    The result is perpendicular to ``omega`` and projects back onto
    ``kappa``; its norm equals ``|kappa|``.
    """
    basis = plane_basis(omega)
    kappa = np.asarray(kappa, dtype=float)
    xyz = np.zeros(kappa.shape[:-1] + (3,))
    xyz[..., 1:] = kappa
    return xyz @ basis  # basis.T @ v for each row


@dataclass(frozen=True)
class SpinState:
    """Constant-rate rotation about a fixed pole.

    ``beta`` and ``lam`` are the rotation angles of the frame chain, so the
    pole direction in the inertial frame is
    ``(sin(beta) cos(lam), sin(beta) sin(lam), cos(beta))``; ``beta`` is the
    pole colatitude.  ``omega`` is the rotation rate in rad/day, ``phi0``
    the rotational phase at the epoch ``t0`` (days).
    """

    beta: float
    lam: float
    omega: float
    phi0: float = 0.0
    t0: float = 0.0

    def __post_init__(self):
        if not self.omega > 0.0:
            raise ValueError(f"rotation rate must be positive, got {self.omega}")

    @property
    def period_hours(self):
        return 24.0 * TWO_PI / self.omega

    @classmethod
    def from_period_hours(cls, beta, lam, period_hours, phi0=0.0, t0=0.0):
        if not period_hours > 0.0:
            raise ValueError("period must be positive")
        return cls(beta, lam, TWO_PI * 24.0 / period_hours, phi0, t0)

    @property
    def pole(self):
        """Pole direction as a unit vector in the inertial frame."""
        return direction_from_polar(self.beta, self.lam)

    def canonical(self):
        """Equivalent state (same rotation chain) with angles folded into
        canonical ranges."""
        beta = self.beta % TWO_PI
        lam = self.lam
        phi0 = self.phi0
        if beta > math.pi:  # fold colatitude into [0, pi]
            beta = TWO_PI - beta
            lam = lam + math.pi
            phi0 = phi0 - math.pi
        return replace(
            self, beta=beta, lam=lam % TWO_PI, phi0=phi0 % TWO_PI
        )

    def phase(self, t):
        return self.phi0 + self.omega * (np.asarray(t, dtype=float) - self.t0)


def inertial_to_body_matrix(t, spin):
    """Rotation matrices taking inertial-frame vectors to the body frame.

    ``t`` may be a scalar or an array of epochs; the result has shape
    ``t.shape + (3, 3)``.
    """
    phase = spin.phase(t)
    rz_phase = _rot_z_many(phase)
    fixed = rot_y(spin.beta) @ rot_z(spin.lam)
    return rz_phase @ fixed


def body_frame_directions(t, spin, obs_dir, sun_dir):
    """Observer and sun directions expressed in the rotating body frame.

    Both input directions are unit vectors in one consistent inertial
    frame.  Returns ``(omega, omega0)`` with shapes matching ``t``.
    """
    b = inertial_to_body_matrix(t, spin)
    obs = np.asarray(obs_dir, dtype=float)
    sun = np.asarray(sun_dir, dtype=float)
    omega = np.einsum("...ij,...j->...i", b, obs)
    omega0 = np.einsum("...ij,...j->...i", b, sun)
    return omega, omega0


def projection_matrix(t, spin, obs_dir):
    """Matrix mapping body-frame points to the observer's image frame.

    Rows 2 and 3 of the result give the plane coordinates ``(xi, eta)``;
    the in-plane orientation is tied to the inertial polar angles of the
    observer direction, so it matches the orientation of a measured image.
    """
    theta, psi = polar_from_direction(obs_dir)
    sky = rot_y(theta - 0.5 * math.pi)
    phase = spin.phase(t)
    out = (
        _rot_z_many(psi - spin.lam + np.zeros_like(phase))
        @ rot_y(-spin.beta)
        @ _rot_z_many(-phase)
    )
    return sky @ out if np.ndim(phase) == 0 else np.einsum("ij,...jk->...ik", sky, out)


def solar_phase_angle(omega, omega0):
    """Angle between viewing and illumination directions."""
    d = float(np.clip(np.dot(np.asarray(omega), np.asarray(omega0)), -1.0, 1.0))
    return math.acos(d)
