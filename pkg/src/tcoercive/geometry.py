"""Interface patches, tubular coordinates and the reflection across them.

Conventions used throughout the package:

* the unit normal ``n`` of every patch points towards the negative
  region (where the coefficient is negative);
* a point ``x`` near the interface is written ``x = foot + t * n(foot)``,
  so the signed distance ``t`` is positive on the negative side;
* the reflection keeps the foot point and flips the sign of ``t``.

Only 2D patches (segments and circular arcs) can be reflected.  The 3D
patches exist so that the curvature based norm bounds can be evaluated.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ContrastTooSmall, InvalidDelta, OutOfTube, ValidationError

#: Feet this close to the end of a patch's parameter range still belong to it.
PARAM_TOL = 1e-10

MINUS = "minus"
PLUS = "plus"


def _as_points(x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 2:
        raise ValueError(f"expected 2D points, got shape {x.shape}")
    return x


@dataclass(frozen=True)
class Segment2D:
    """Straight interface piece from ``a`` to ``b``.

    The normal is the left normal of ``b - a`` when ``minus_on_left`` is
    true, the right normal otherwise.
    """

    a: tuple
    b: tuple
    minus_on_left: bool = True

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(float(v) for v in self.a))
        object.__setattr__(self, "b", tuple(float(v) for v in self.b))
        if np.allclose(self.a, self.b, rtol=0.0, atol=0.0):
            raise ValidationError("segment endpoints must be distinct")

    @property
    def dim(self):
        return 2

    @property
    def normal(self):
        d = np.subtract(self.b, self.a)
        d = d / np.hypot(*d)
        left = np.array([-d[1], d[0]])
        return left if self.minus_on_left else -left

    @property
    def length(self):
        return float(np.hypot(*np.subtract(self.b, self.a)))

    def project(self, x):
        """Vectorised ``(foot, t, normal, in_range)`` for points ``x``."""
        x = _as_points(x)
        a = np.asarray(self.a)
        d = np.subtract(self.b, self.a)
        s = ((x - a) @ d) / (d @ d)
        foot = a + s[..., None] * d
        n = self.normal
        t = (x - foot) @ n
        normals = np.broadcast_to(n, x.shape).copy()
        in_range = (s >= -PARAM_TOL) & (s <= 1.0 + PARAM_TOL)
        return foot, t, normals, in_range

    def reflection_jacobian(self, x):
        x = _as_points(x)
        n = self.normal
        mirror = np.eye(2) - 2.0 * np.outer(n, n)
        return np.broadcast_to(mirror, x.shape[:-1] + (2, 2)).copy()

    def curvatures(self):
        return (0.0,)


@dataclass(frozen=True)
class Arc2D:
    """Circular arc ``center + radius * (cos a, sin a)`` for ``a`` in ``[theta0, theta1]``.

    ``center_in_minus`` records on which side the centre lies; since the
    normal always points into the negative region, it points towards the
    centre exactly when the centre is in the negative region.  A range of
    length ``>= 2*pi`` denotes the full circle.
    """

    center: tuple
    radius: float
    theta0: float = -math.pi
    theta1: float = math.pi
    center_in_minus: bool = True

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))
        if not self.radius > 0:
            raise ValidationError("arc radius must be positive")
        if not self.theta0 < self.theta1:
            raise ValidationError("arc angles must satisfy theta0 < theta1")

    @property
    def dim(self):
        return 2

    @property
    def full(self):
        return self.theta1 - self.theta0 >= 2.0 * math.pi - 1e-14

    def point(self, angle):
        angle = np.asarray(angle, dtype=float)
        c = np.asarray(self.center)
        return c + self.radius * np.stack([np.cos(angle), np.sin(angle)], axis=-1)

    def project(self, x):
        x = _as_points(x)
        rel = x - np.asarray(self.center)
        rho = np.hypot(rel[..., 0], rel[..., 1])
        with np.errstate(invalid="ignore", divide="ignore"):
            er = rel / rho[..., None]
        foot = np.asarray(self.center) + self.radius * er
        if self.center_in_minus:
            normals, t = -er, self.radius - rho
        else:
            normals, t = er, rho - self.radius
        if self.full:
            in_range = rho > 0
        else:
            ang = np.mod(np.arctan2(rel[..., 1], rel[..., 0]) - self.theta0, 2.0 * math.pi)
            span = self.theta1 - self.theta0
            # angular tolerance equivalent to PARAM_TOL in arc length
            tol = PARAM_TOL / self.radius
            in_range = (rho > 0) & ((ang <= span + tol) | (ang >= 2.0 * math.pi - tol))
        return foot, t, normals, in_range

    def reflection_jacobian(self, x):
        x = _as_points(x)
        rel = x - np.asarray(self.center)
        rho = np.hypot(rel[..., 0], rel[..., 1])
        er = rel / rho[..., None]
        et = np.stack([-er[..., 1], er[..., 0]], axis=-1)
        ratio = (2.0 * self.radius - rho) / rho
        return (-er[..., :, None] * er[..., None, :]
                + ratio[..., None, None] * et[..., :, None] * et[..., None, :])

    def curvatures(self):
        k = 1.0 / self.radius
        return (k if self.center_in_minus else -k,)


@dataclass(frozen=True)
class Plane3D:
    point: tuple
    normal: tuple

    @property
    def dim(self):
        return 3

    def curvatures(self):
        return (0.0, 0.0)


@dataclass(frozen=True)
class Sphere3D:
    center: tuple
    radius: float
    center_in_minus: bool = True

    def __post_init__(self):
        if not self.radius > 0:
            raise ValidationError("sphere radius must be positive")

    @property
    def dim(self):
        return 3

    def curvatures(self):
        k = 1.0 / self.radius
        k = k if self.center_in_minus else -k
        return (k, k)


@dataclass(frozen=True)
class Cylinder3D:
    axis_point: tuple
    axis_direction: tuple
    radius: float
    center_in_minus: bool = True

    def __post_init__(self):
        if not self.radius > 0:
            raise ValidationError("cylinder radius must be positive")

    @property
    def dim(self):
        return 3

    def curvatures(self):
        k = 1.0 / self.radius
        return (k if self.center_in_minus else -k, 0.0)


InterfacePatch = Union[Segment2D, Arc2D, Plane3D, Sphere3D, Cylinder3D]
PATCHES_2D = (Segment2D, Arc2D)


def _radius(patch):
    return getattr(patch, "radius", None)


@dataclass(frozen=True)
class TubularNeighborhood:
    """The band of half width ``delta`` around one patch."""

    patch: InterfacePatch
    delta: float

    def __post_init__(self):
        if not self.delta > 0:
            raise InvalidDelta("delta must be positive")
        r = _radius(self.patch)
        if r is not None and not self.delta < r:
            raise InvalidDelta(f"delta={self.delta} must be smaller than the patch radius {r}")

    def coordinates(self, x):
        """Non-raising tubular coordinates; see :meth:`Segment2D.project`."""
        foot, t, n, in_range = self.patch.project(x)
        inside = in_range & (np.abs(t) < self.delta)
        return foot, t, n, inside

    def reflect(self, x):
        foot, t, n, _ = self.patch.project(x)
        return foot - t[..., None] * n

    def jacobian(self, x):
        return self.patch.reflection_jacobian(x)


def _require_2d(patch):
    if not isinstance(patch, PATCHES_2D):
        raise ValidationError(f"{type(patch).__name__} does not support point operations")


def foot_and_distance(patch, x, delta=None):
    """Inverse of ``(foot, t) -> foot + t * n(foot)`` for a single point.

    Raises :class:`OutOfTube` when the foot lies outside the patch or, if
    ``delta`` is given, when ``|t| >= delta``.
    """
    _require_2d(patch)
    foot, t, _, in_range = patch.project(np.asarray(x, dtype=float))
    t = float(t)
    if not bool(in_range):
        raise OutOfTube(f"foot of {tuple(np.ravel(x))} lies outside the patch")
    if delta is not None and abs(t) >= delta:
        raise OutOfTube(f"|t|={abs(t):.3g} is not below delta={delta}")
    r = _radius(patch)
    if r is not None and abs(t) >= r:
        raise OutOfTube("point is at or beyond the arc centre")
    return foot, t


def unit_normal(patch, foot):
    _require_2d(patch)
    return patch.project(foot)[2]


def reflect_point(patch, x, delta=None):
    """Reflect ``x`` across the patch: ``foot - t * n(foot)``."""
    foot, t = foot_and_distance(patch, x, delta)
    n = unit_normal(patch, foot)
    return foot - t * n


def reflect_jacobian(patch, x, delta=None):
    foot_and_distance(patch, x, delta)
    return patch.reflection_jacobian(np.asarray(x, dtype=float))


def curvature(patch, x=None):
    """Signed curvature(s); positive when the normal points to the centre."""
    k = patch.curvatures()
    return k[0] if patch.dim == 2 else k


def _check_delta(patch, delta):
    if not delta > 0:
        raise InvalidDelta("delta must be positive")
    r = _radius(patch)
    if r is not None and not delta < r:
        raise InvalidDelta(f"delta={delta} must be smaller than the radius {r}")


def norm_bound(patch, delta, side):
    """Curvature bound on the norm of the reflection operator from ``side``.

    ``side="minus"`` bounds the operator defined on the negative half of the
    band, ``side="plus"`` the one defined on the positive half.
    """
    _check_delta(patch, delta)
    return _bound_from_curvatures(patch.curvatures(), delta, side)


def _bound_from_curvatures(kappas, delta, side):
    vals = [1.0]
    for k in kappas:
        if side == MINUS:
            vals.append(abs((1.0 - delta * k) / (1.0 + delta * k)))
        elif side == PLUS:
            vals.append(abs((1.0 + delta * k) / (1.0 - delta * k)))
        else:
            raise ValidationError(f"side must be 'minus' or 'plus', got {side!r}")
    return max(vals)


def interface_norm_bound(patches, delta, side):
    """Bound for an interface made of several patches (worst patch wins)."""
    return max(norm_bound(p, delta, side) for p in patches)


def max_delta_for_contrast(kappa_max, contrast, safety=1.0, cap=1.0):
    """Largest band half width for which the bound squared stays below ``contrast``.

    Solves ``(1 + kappa_max*d) / (1 - kappa_max*d) = sqrt(contrast)`` and
    scales the solution by ``safety``.  Flat interfaces (``kappa_max == 0``)
    return ``cap`` since their bound is identically one.
    """
    if not contrast > 1:
        raise ContrastTooSmall(f"contrast {contrast} must exceed 1")
    if kappa_max < 0:
        raise ValidationError("kappa_max must be non-negative")
    if not 0 < safety <= 1:
        raise ValidationError("safety must lie in (0, 1]")
    if kappa_max == 0:
        return cap
    s = math.sqrt(contrast)
    return safety * (s - 1.0) / ((s + 1.0) * kappa_max)


def contrasts(sigma_minus, sigma_plus):
    """``(k_plus, k_minus)`` for piecewise constant coefficients."""
    k_plus = abs(sigma_plus) / abs(sigma_minus)
    return k_plus, 1.0 / k_plus


def modified_side(sigma_minus, sigma_plus):
    """Side on which the test functions get the reflection correction.

    The operator built from the plus-side reflection modifies the negative
    region; it needs the plus contrast to exceed one.  Returns ``"minus"``
    or ``"plus"`` accordingly.
    """
    k_plus, k_minus = contrasts(sigma_minus, sigma_plus)
    if k_plus > 1:
        return MINUS
    if k_minus > 1:
        return PLUS
    raise ContrastTooSmall(f"neither contrast exceeds 1 (k+={k_plus:.3g}, k-={k_minus:.3g})")


def reflected_side(modified):
    """The side the reflection reads from, given the modified side."""
    return PLUS if modified == MINUS else MINUS


def check_coercivity(patches, delta, sigma_minus, sigma_plus):
    """Return ``(side, bound**2, contrast)``; raise if the bound is too large."""
    mod = modified_side(sigma_minus, sigma_plus)
    src = reflected_side(mod)
    k_plus, k_minus = contrasts(sigma_minus, sigma_plus)
    k = k_plus if src == PLUS else k_minus
    b2 = interface_norm_bound(patches, delta, src) ** 2
    if not b2 < k:
        raise InvalidDelta(
            f"squared reflection bound {b2:.4g} is not below the contrast {k:.4g}; reduce delta"
        )
    return mod, b2, k
