"""Vector geometry on the fixed-radius hypersphere.

Row-wise functions (``*_rows``) treat the last axis as the coordinate axis,
so they accept a single vector of shape ``(d,)`` as well as stacks of shape
``(..., d)``.  The typed wrappers (:class:`SphereToken`,
:class:`TangentVector`) carry on-sphere and tangency certificates that are
checked at construction time.  Everything runs in float64.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import DimensionMismatch, NearZeroNorm, RadiusMismatch

# Fixed numerical guard rails. Behavioural constants, not configuration.
COS_CLAMP = 1e-6          # cosines clamped to [-1 + COS_CLAMP, 1 - COS_CLAMP]
NORM_FLOOR = 1e-8         # below this a vector has no usable direction
SMALL_ANGLE = 1e-4        # below: slerp falls back to lerp + renormalise
ANTIPODAL_MARGIN = 0.1    # within this of pi: slerp follows a fixed great circle
ON_SPHERE_RTOL = 1e-6     # | ||x|| - R | <= ON_SPHERE_RTOL * R
TANGENT_RTOL = 1e-5       # |<v, p>| <= TANGENT_RTOL * ||v|| * R


def _as_vectors(x) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 0:
        raise ValueError("expected at least one coordinate axis")
    if not np.all(np.isfinite(arr)):
        raise ValueError("non-finite coordinates")
    return arr


@dataclass
class SphereToken:
    """A d-dimensional vector certified to sit on the sphere of ``radius``."""

    values: np.ndarray
    radius: float

    def __post_init__(self):
        self.values = _as_vectors(self.values)
        self.radius = float(self.radius)
        if self.values.ndim != 1 or self.values.shape[0] < 2:
            raise ValueError("sphere points need a single axis with d >= 2")
        if self.radius <= 0.0:
            raise ValueError("radius must be positive")
        norm = float(np.linalg.norm(self.values))
        if abs(norm - self.radius) > ON_SPHERE_RTOL * self.radius:
            raise ValueError(
                f"off-sphere point: ||x|| = {norm!r}, radius = {self.radius!r}"
            )

    @property
    def d(self) -> int:
        return self.values.shape[0]

    @property
    def direction(self) -> np.ndarray:
        """Exact unit direction (renormalised, not ``values / radius``)."""
        return self.values / np.linalg.norm(self.values)


@dataclass
class TangentVector:
    """A vector certified tangent to the sphere at ``base``."""

    vector: np.ndarray
    base: SphereToken

    def __post_init__(self):
        self.vector = _as_vectors(self.vector)
        if self.vector.shape != self.base.values.shape:
            raise ValueError("tangent vector and base point dimensions differ")
        inner = abs(float(np.dot(self.vector, self.base.values)))
        bound = TANGENT_RTOL * float(np.linalg.norm(self.vector)) * self.base.radius
        if inner > bound:
            raise ValueError(
                f"not tangent: |<v, p>| = {inner!r} exceeds {bound!r}"
            )

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.vector))


@dataclass(frozen=True)
class GaussianNormStats:
    """Analytical norm statistics of a standard Gaussian in dimension d."""

    d: int
    mean_radius: float
    cv: float

    def __post_init__(self):
        if self.mean_radius >= math.sqrt(self.d):
            raise ValueError("chi mean must lie strictly below sqrt(d)")
        if self.cv <= 0.0:
            raise ValueError("coefficient of variation must be positive")


# ---------------------------------------------------------------------------
# row-wise primitives


def norm_rows(x) -> np.ndarray:
    return np.linalg.norm(np.asarray(x, dtype=np.float64), axis=-1)


def unit_rows(x) -> np.ndarray:
    """Normalise rows to unit length; raises on rows below the norm floor."""
    x = _as_vectors(x)
    n = np.linalg.norm(x, axis=-1, keepdims=True)
    if np.any(n < NORM_FLOOR):
        raise NearZeroNorm(f"row norm below {NORM_FLOOR}")
    return x / n


def project_rows(x, radius: float) -> np.ndarray:
    """Radially rescale rows onto the sphere of ``radius``."""
    return unit_rows(x) * float(radius)


def uniform_rows(n: int, d: int, radius: float, rng: np.random.Generator) -> np.ndarray:
    """``n`` independent uniform draws on the sphere of ``radius`` in R^d."""
    if d < 2:
        raise ValueError("uniform sphere sampling needs d >= 2")
    eps = rng.standard_normal((n, d))
    norms = np.linalg.norm(eps, axis=-1)
    while np.any(norms < NORM_FLOOR):  # measure-zero; resample those rows
        bad = norms < NORM_FLOOR
        eps[bad] = rng.standard_normal((int(bad.sum()), d))
        norms = np.linalg.norm(eps, axis=-1)
    return eps * (float(radius) / norms)[..., None]


def cos_rows(u0, u1) -> np.ndarray:
    """Clamped cosine between unit rows."""
    dots = np.einsum("...i,...i->...", np.asarray(u0, float), np.asarray(u1, float))
    return np.clip(dots, -1.0 + COS_CLAMP, 1.0 - COS_CLAMP)


def angle_rows(u0, u1) -> np.ndarray:
    return np.arccos(cos_rows(u0, u1))


def orthonormal_rows(u) -> np.ndarray:
    """Deterministic unit vector orthogonal to each unit row.

    Uses the lowest-index standard basis vector whose component orthogonal
    to the row is non-degenerate, falling back to the next index when the
    row is (numerically) parallel to it.
    """
    u = _as_vectors(u)
    resid_sq = 1.0 - u * u  # || e_i - u_i u ||^2 for unit u
    ok = resid_sq >= 1e-12
    idx = np.argmax(ok, axis=-1)
    e = np.zeros_like(u)
    np.put_along_axis(e, idx[..., None], 1.0, axis=-1)
    ui = np.take_along_axis(u, idx[..., None], axis=-1)
    r = e - ui * u
    return r / np.linalg.norm(r, axis=-1, keepdims=True)


def slerp_rows(u0, u1, t) -> np.ndarray:
    """Spherical linear interpolation between unit rows.

    Three regimes by the angle ``w`` between the rows: below
    ``SMALL_ANGLE`` the path is a renormalised lerp (avoids 0/0 in
    ``sin w``); above ``pi - ANTIPODAL_MARGIN`` it traces the great circle
    ``cos(pi t) u0 + sin(pi t) n`` through the deterministic orthogonal
    unit ``n``; otherwise the standard sine-weighted formula.  The regime
    dispatch compares the raw cosine against the cosines of the thresholds;
    the arccos clamp floors computed angles at about 1.4e-3, which would
    otherwise make the small-angle branch unreachable.  ``t`` broadcasts
    against the rows and may lie outside ``[0, 1]`` (geodesic extension).
    """
    u0 = _as_vectors(u0)
    u1 = _as_vectors(u1)
    dots = np.einsum("...i,...i->...", u0, u1)
    dots, t = np.broadcast_arrays(dots, np.asarray(t, dtype=np.float64))
    tt = t[..., None]

    small = dots > math.cos(SMALL_ANGLE)
    anti = dots < math.cos(math.pi - ANTIPODAL_MARGIN)
    omega = np.arccos(np.clip(dots, -1.0 + COS_CLAMP, 1.0 - COS_CLAMP))
    safe = np.where(small | anti, 0.5 * np.pi, omega)[..., None]
    out = (np.sin((1.0 - tt) * safe) * u0 + np.sin(tt * safe) * u1) / np.sin(safe)
    if np.any(small):
        lerp = (1.0 - tt) * u0 + tt * u1
        lerp /= np.linalg.norm(lerp, axis=-1, keepdims=True)
        out = np.where(small[..., None], lerp, out)
    if np.any(anti):
        nhat = orthonormal_rows(np.broadcast_to(u0, out.shape))
        arc = np.cos(np.pi * tt) * u0 + np.sin(np.pi * tt) * nhat
        out = np.where(anti[..., None], arc, out)
    return out


def slerp_velocity_rows(u0, u1, t) -> np.ndarray:
    """Time derivative of :func:`slerp_rows` (norm ``w`` in the standard
    regime; degenerate regimes differentiate their fallback paths).  Regime
    dispatch mirrors :func:`slerp_rows` exactly."""
    u0 = _as_vectors(u0)
    u1 = _as_vectors(u1)
    dots = np.einsum("...i,...i->...", u0, u1)
    dots, t = np.broadcast_arrays(dots, np.asarray(t, dtype=np.float64))
    tt = t[..., None]

    small = dots > math.cos(SMALL_ANGLE)
    anti = dots < math.cos(math.pi - ANTIPODAL_MARGIN)
    omega = np.arccos(np.clip(dots, -1.0 + COS_CLAMP, 1.0 - COS_CLAMP))
    safe = np.where(small | anti, 0.5 * np.pi, omega)[..., None]
    out = (safe / np.sin(safe)) * (
        -np.cos((1.0 - tt) * safe) * u0 + np.cos(tt * safe) * u1
    )
    if np.any(small):
        # derivative of the renormalised lerp l(t)/||l(t)||
        lerp = (1.0 - tt) * u0 + tt * u1
        dl = u1 - u0
        nsq = np.sum(lerp * lerp, axis=-1, keepdims=True)
        tang = dl - lerp * (np.sum(lerp * dl, axis=-1, keepdims=True) / nsq)
        out = np.where(small[..., None], tang / np.sqrt(nsq), out)
    if np.any(anti):
        nhat = orthonormal_rows(np.broadcast_to(u0, out.shape))
        arc = np.pi * (-np.sin(np.pi * tt) * u0 + np.cos(np.pi * tt) * nhat)
        out = np.where(anti[..., None], arc, out)
    return out


def tangent_rows(v, z) -> np.ndarray:
    """Remove the radial component of ``v`` at the sphere point(s) ``z``."""
    v = _as_vectors(v)
    z = np.asarray(z, dtype=np.float64)
    coef = np.sum(v * z, axis=-1, keepdims=True) / np.sum(z * z, axis=-1, keepdims=True)
    return v - coef * z


def expmap_rows(p, v, radius: float) -> np.ndarray:
    """Exponential map at rows ``p`` along tangent rows ``v``.

    Zero-norm velocity rows return ``p`` exactly.
    """
    p = _as_vectors(p)
    v = np.asarray(v, dtype=np.float64)
    radius = float(radius)
    nv = np.linalg.norm(v, axis=-1, keepdims=True)
    safe = np.where(nv == 0.0, 1.0, nv)
    return np.cos(nv / radius) * p + (radius * np.sin(nv / radius) / safe) * v


# ---------------------------------------------------------------------------
# certified scalar API


def radial_project(z, radius: float) -> SphereToken:
    """Rescale ``z`` onto the sphere of ``radius``, keeping its direction."""
    z = _as_vectors(z)
    if z.ndim != 1:
        raise ValueError("radial_project takes a single vector")
    n = float(np.linalg.norm(z))
    if n < NORM_FLOOR:
        raise NearZeroNorm(f"cannot project: ||z|| = {n!r} < {NORM_FLOOR}")
    return SphereToken(z * (float(radius) / n), radius)


def sample_uniform_sphere(d: int, radius: float, rng: np.random.Generator) -> SphereToken:
    """One uniform draw on the sphere (radially normalised Gaussian)."""
    return SphereToken(uniform_rows(1, d, radius, rng)[0], radius)


def gaussian_mean_radius_exact(d: int) -> float:
    """Mean L2 norm of a standard Gaussian in R^d (chi-distribution mean).

    Evaluated through log-gamma differences so it stays finite far beyond
    the dimensions where direct gamma ratios overflow.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    return math.sqrt(2.0) * math.exp(gammaln((d + 1) / 2.0) - gammaln(d / 2.0))


def gaussian_mean_radius_approx(d: int) -> float:
    """Closed-form approximation sqrt(d - 1/2) of the Gaussian mean radius."""
    if d < 1:
        raise ValueError("d must be >= 1")
    return math.sqrt(d - 0.5)


def gaussian_norm_cv(d: int) -> float:
    """Coefficient of variation of the Gaussian norm: sqrt(d - m^2) / m."""
    m = gaussian_mean_radius_exact(d)
    return math.sqrt(d - m * m) / m


def gaussian_norm_stats(d: int) -> GaussianNormStats:
    return GaussianNormStats(d, gaussian_mean_radius_exact(d), gaussian_norm_cv(d))


def _check_common_radius(x0: SphereToken, x1: SphereToken) -> float:
    if x0.d != x1.d:
        raise DimensionMismatch("sphere points have different dimensions")
    if abs(x0.radius - x1.radius) > ON_SPHERE_RTOL * max(x0.radius, x1.radius):
        raise RadiusMismatch(
            f"radii differ: {x0.radius!r} vs {x1.radius!r}"
        )
    return x0.radius


def angle_between(x0: SphereToken, x1: SphereToken) -> float:
    """Angle in [0, pi] between two points on a common sphere.

    The cosine is clamped away from +/-1, so coincident (antipodal) pairs
    report a small positive angle (just below pi) rather than exactly 0 (pi).
    """
    _check_common_radius(x0, x1)
    return float(angle_rows(x0.direction, x1.direction))


def slerp(x0: SphereToken, x1: SphereToken, t: float) -> SphereToken:
    radius = _check_common_radius(x0, x1)
    out = slerp_rows(x0.direction, x1.direction, float(t)) * radius
    return SphereToken(out, radius)


def slerp_velocity(x0: SphereToken, x1: SphereToken, t: float) -> TangentVector:
    """Velocity of the slerp path at time ``t`` (constant speed R * w)."""
    radius = _check_common_radius(x0, x1)
    vec = slerp_velocity_rows(x0.direction, x1.direction, float(t)) * radius
    return TangentVector(vec, slerp(x0, x1, t))


def tangent_project(v, z: SphereToken) -> TangentVector:
    """Project ``v`` onto the tangent space of the sphere at ``z``."""
    v = _as_vectors(v)
    if v.shape != z.values.shape:
        raise ValueError("vector and base point dimensions differ")
    return TangentVector(tangent_rows(v, z.values), z)


def exp_map(p: SphereToken, v: TangentVector) -> SphereToken:
    """Follow the geodesic from ``p`` with initial velocity ``v`` for unit time."""
    vec = v.vector
    if vec.shape != p.values.shape:
        raise ValueError("velocity and base point dimensions differ")
    inner = abs(float(np.dot(vec, p.values)))
    if inner > TANGENT_RTOL * float(np.linalg.norm(vec)) * p.radius:
        raise ValueError("velocity is not tangent at p")
    nv = float(np.linalg.norm(vec))
    if nv == 0.0:
        return SphereToken(p.values.copy(), p.radius)
    return SphereToken(expmap_rows(p.values, vec, p.radius), p.radius)


def one_step_deficit(h: float, omega: float, radius: float = 1.0) -> float:
    """Arc-length shortfall of one Euler-then-project step versus one
    exponential-map step along a great circle: R * (h w - arctan(h w)).

    Uses the odd series below ``x = 1e-3`` where the direct difference
    would cancel catastrophically.
    """
    h = float(h)
    omega = float(omega)
    if h <= 0.0:
        raise ValueError("step size must be positive")
    if not 0.0 < omega < math.pi:
        raise ValueError("omega must lie in (0, pi)")
    x = h * omega
    if x < 1e-3:
        x2 = x * x
        return float(radius) * x * x2 * (1.0 / 3.0 - x2 / 5.0 + x2 * x2 / 7.0)
    return float(radius) * (x - math.atan(x))


def one_step_gap_measured(h: float, omega: float, radius: float = 1.0) -> float:
    """Geometric measurement of the one-step deficit.

    Builds the actual configuration in R^3 (point, tangent velocity of norm
    R * w), takes one exponential-map step and one Euler-then-project step,
    and returns the arc length between the two landing points via the
    half-chord angle, which stays accurate where arccos would not.
    """
    h = float(h)
    omega = float(omega)
    radius = float(radius)
    if h <= 0.0:
        raise ValueError("step size must be positive")
    if not 0.0 < omega < math.pi:
        raise ValueError("omega must lie in (0, pi)")
    p = np.array([radius, 0.0, 0.0])
    v = np.array([0.0, radius * omega, 0.0])
    landed_exp = expmap_rows(p, h * v, radius)
    landed_euler = project_rows(p + h * v, radius)
    half_chord = float(np.linalg.norm(landed_exp - landed_euler)) / (2.0 * radius)
    return 2.0 * math.asin(half_chord) * radius
