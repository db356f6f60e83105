"""Interpolation paths between noise and data tokens, with velocity targets.

Three kinds: straight Euclidean lines, shell paths (slerped direction with a
linearly interpolated radius), and constant-radius slerp geodesics.  Scalar
constructors return :class:`PathPoint`; :func:`path_rows` evaluates a whole
stack of token pairs at once.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NearZeroNorm, RadiusMismatch
from . import sphere
from .sphere import NORM_FLOOR, ON_SPHERE_RTOL, SphereToken


class PathKind(enum.Enum):
    LINEAR = "linear"
    SHELL = "shell"
    SLERP = "slerp"


@dataclass
class PathPoint:
    """State of one interpolation path at time ``t``: position and velocity."""

    z_t: np.ndarray
    u_t: np.ndarray
    t: float
    kind: PathKind

    def __post_init__(self):
        self.z_t = np.asarray(self.z_t, dtype=np.float64)
        self.u_t = np.asarray(self.u_t, dtype=np.float64)
        self.t = float(self.t)
        if self.z_t.shape != self.u_t.shape:
            raise DimensionMismatch("position and velocity shapes differ")
        if not 0.0 <= self.t <= 1.0:
            raise ValueError(f"t = {self.t!r} outside [0, 1]")
        if self.kind is PathKind.SLERP:
            inner = abs(float(np.dot(self.u_t, self.z_t)))
            bound = (
                sphere.TANGENT_RTOL
                * float(np.linalg.norm(self.u_t))
                * float(np.linalg.norm(self.z_t))
            )
            if inner > bound:
                raise ValueError("slerp velocity is not tangent at z_t")


@dataclass(frozen=True)
class RadialSplit:
    """Squared-norm split of a velocity into radial and tangential parts."""

    radial_energy: float
    tangential_energy: float
    share: float

    def __post_init__(self):
        if self.radial_energy < 0.0 or self.tangential_energy < 0.0:
            raise ValueError("energies must be nonnegative")
        if not 0.0 <= self.share <= 1.0:
            raise ValueError("share must lie in [0, 1]")


def _check_time(t: float) -> float:
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t = {t!r} outside [0, 1]")
    return t


def linear_path(z0, z1, t: float) -> PathPoint:
    """Straight-line interpolation; velocity is the constant chord z1 - z0."""
    z0 = np.asarray(z0, dtype=np.float64)
    z1 = np.asarray(z1, dtype=np.float64)
    if z0.shape != z1.shape:
        raise DimensionMismatch(f"shapes differ: {z0.shape} vs {z1.shape}")
    t = _check_time(t)
    return PathPoint((1.0 - t) * z0 + t * z1, z1 - z0, t, PathKind.LINEAR)


def shell_path(z0, z1, t: float) -> PathPoint:
    """Slerp the directions, interpolate the radii linearly.

    The velocity is the exact product-rule derivative
    ``(r1 - r0) * dir_t + r_t * d(dir_t)/dt``, not a finite difference.
    """
    z0 = np.asarray(z0, dtype=np.float64)
    z1 = np.asarray(z1, dtype=np.float64)
    if z0.shape != z1.shape:
        raise DimensionMismatch(f"shapes differ: {z0.shape} vs {z1.shape}")
    t = _check_time(t)
    z_t, u_t = path_rows(z0, z1, t, PathKind.SHELL)
    return PathPoint(z_t, u_t, t, PathKind.SHELL)


def slerp_path(z0: SphereToken, z1: SphereToken, t: float) -> PathPoint:
    """Constant-radius geodesic; the velocity target is tangent-projected."""
    t = _check_time(t)
    z_t, u_t = path_rows(
        z0.values, z1.values, t, PathKind.SLERP, radius=sphere._check_common_radius(z0, z1)
    )
    return PathPoint(z_t, u_t, t, PathKind.SLERP)


def path_rows(z0, z1, t, kind: PathKind, radius: float | None = None):
    """Evaluate a path for stacks of token pairs.

    ``z0``/``z1`` are ``(..., d)`` with matching shapes; ``t`` is a scalar
    or broadcastable against the leading shape.  Returns ``(z_t, u_t)``.
    For ``SLERP`` all endpoint rows must lie on one common radius (pass
    ``radius`` to pin it; otherwise it is inferred from the data).
    """
    z0 = np.asarray(z0, dtype=np.float64)
    z1 = np.asarray(z1, dtype=np.float64)
    if z0.shape != z1.shape:
        raise DimensionMismatch(f"shapes differ: {z0.shape} vs {z1.shape}")
    t = np.asarray(t, dtype=np.float64)

    if kind is PathKind.LINEAR:
        tt = t[..., None] if t.ndim else t
        z_t = (1.0 - tt) * z0 + tt * z1
        return z_t, np.broadcast_to(z1 - z0, z_t.shape).copy()

    r0 = np.linalg.norm(z0, axis=-1)
    r1 = np.linalg.norm(z1, axis=-1)
    if np.any(r0 < NORM_FLOOR) or np.any(r1 < NORM_FLOOR):
        raise NearZeroNorm("endpoint norm below floor")
    u0 = z0 / r0[..., None]
    u1 = z1 / r1[..., None]

    if kind is PathKind.SHELL:
        dir_t = sphere.slerp_rows(u0, u1, t)
        dir_v = sphere.slerp_velocity_rows(u0, u1, t)
        r_t = ((1.0 - t) * r0 + t * r1)[..., None]
        z_t = r_t * dir_t
        u_t = (r1 - r0)[..., None] * dir_t + r_t * dir_v
        return z_t, u_t

    if kind is PathKind.SLERP:
        if radius is None:
            radius = float(np.mean(np.concatenate([np.atleast_1d(r0), np.atleast_1d(r1)])))
        dev = max(
            float(np.max(np.abs(r0 - radius))), float(np.max(np.abs(r1 - radius)))
        )
        if dev > ON_SPHERE_RTOL * radius:
            raise RadiusMismatch(
                f"endpoints off the common sphere: max deviation {dev!r} at radius {radius!r}"
            )
        z_t = radius * sphere.slerp_rows(u0, u1, t)
        u_raw = radius * sphere.slerp_velocity_rows(u0, u1, t)
        return z_t, sphere.tangent_rows(u_raw, z_t)

    raise ValueError(f"unknown path kind: {kind!r}")


def chord_norm_sq(r0: float, r1: float, cos01: float, t: float) -> float:
    """Closed-form squared norm of the straight-line interpolation between
    vectors of norms ``r0``/``r1`` with direction cosine ``cos01``."""
    r0 = float(r0)
    r1 = float(r1)
    if r0 < 0.0 or r1 < 0.0:
        raise ValueError("radii must be nonnegative")
    cos01 = float(cos01)
    if not -1.0 <= cos01 <= 1.0:
        raise ValueError("cos01 must lie in [-1, 1]")
    t = float(t)
    return (
        (1.0 - t) ** 2 * r0 * r0
        + t ** 2 * r1 * r1
        + 2.0 * t * (1.0 - t) * r0 * r1 * cos01
    )


def radial_split(u, z) -> RadialSplit:
    """Split the squared norm of ``u`` into components along and across ``z``."""
    u = np.asarray(u, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if u.shape != z.shape or u.ndim != 1:
        raise DimensionMismatch("radial_split takes two vectors of equal dimension")
    zn = float(np.linalg.norm(z))
    if zn < NORM_FLOOR:
        raise NearZeroNorm("reference point norm below floor")
    along = float(np.dot(u, z)) / zn
    radial = along * along
    total = float(np.dot(u, u))
    tangential = max(total - radial, 0.0)
    share = radial / total if total > 0.0 else 0.0
    return RadialSplit(radial, tangential, min(share, 1.0))


def radial_share_rows(u, z) -> np.ndarray:
    """Row-wise radial share of ``u`` at ``z``; zero-velocity rows give 0."""
    u = np.asarray(u, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    zn = np.linalg.norm(z, axis=-1)
    if np.any(zn < NORM_FLOOR):
        raise NearZeroNorm("reference point norm below floor")
    along = np.einsum("...i,...i->...", u, z) / zn
    radial = along * along
    total = np.einsum("...i,...i->...", u, u)
    with np.errstate(invalid="ignore", divide="ignore"):
        share = np.where(total > 0.0, radial / np.where(total > 0.0, total, 1.0), 0.0)
    return np.minimum(share, 1.0)
