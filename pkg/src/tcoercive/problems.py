"""Benchmark configurations: the disc pair with a manufactured solution and
the rounded triangle in a square."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .assembly import Coefficient
from .geometry import Arc2D, check_coercivity, max_delta_for_contrast
from .mesh import gen_disc_in_disc, gen_rounded_triangle_in_square, rounded_triangle_patches


def disc_u_ref(r):
    """Radial reference profile ``r^3 - 3/2 r^2 - 2``: zero at ``r = 2``, flat at ``r = 1``."""
    return r ** 3 - 1.5 * r ** 2 - 2.0


@dataclass
class DiscProblem:
    """Disc of radius ``r_out`` containing the negative disc of radius ``r_in``.

    The source is ``f = -div(sigma grad u_ref)``, which for the radial
    profile gives ``-sigma * (9 r - 6)``.  Only valid for ``r_in = 1``,
    ``r_out = 2`` where ``u_ref`` satisfies both the flux condition and the
    boundary condition.
    """

    sigma: Coefficient = field(default_factory=lambda: Coefficient(-1.0, 3.0))
    delta: float = 0.2
    r_in: float = 1.0
    r_out: float = 2.0
    center: tuple = (0.0, 0.0)
    mirror_band: bool = False
    #: constant source replacing the manufactured one when set
    source_value: float = None

    @property
    def has_exact(self):
        return self.source_value is None and self.r_in == 1.0 and self.r_out == 2.0

    def patches(self):
        return [Arc2D(self.center, self.r_in, -math.pi, math.pi, True)]

    def mesh(self, h):
        return gen_disc_in_disc(self.r_in, self.r_out, h, self.delta, self.center, self.mirror_band)

    def _r(self, x):
        return np.hypot(x[..., 0] - self.center[0], x[..., 1] - self.center[1])

    def u(self, x):
        return disc_u_ref(self._r(np.asarray(x, dtype=float)))

    def grad_u(self, x):
        x = np.asarray(x, dtype=float)
        r = self._r(x)
        rel = x - np.asarray(self.center)
        return (3.0 * r - 3.0)[..., None] * rel

    def f(self, x, region):
        if self.source_value is not None:
            return np.full(np.shape(x)[:-1], self.source_value)
        return -self.sigma.on(region) * (9.0 * self._r(np.asarray(x, dtype=float)) - 6.0)

    def check(self):
        return check_coercivity(self.patches(), self.delta, self.sigma.minus, self.sigma.plus)


@dataclass
class RoundedTriangleProblem:
    """Square with a triangle of rounded corners (negative region), ``f = 1``."""

    sigma: Coefficient = field(default_factory=lambda: Coefficient(-1.0, 10.0))
    delta: float = 0.5
    square: tuple = (0.0, 0.0, 10.0, 10.0)
    corners: tuple = ((2.0, 2.0), (8.0, 2.0), (5.0, 2.0 + 3.0 * math.sqrt(3.0)))
    radius: float = 1.0
    source_value: float = 1.0
    has_exact = False

    def patches(self):
        return rounded_triangle_patches(self.corners, self.radius)[2]

    def mesh(self, h):
        return gen_rounded_triangle_in_square(self.square, self.corners, self.radius, h, self.delta)

    def f(self, x, region):
        return np.full(np.shape(x)[:-1], self.source_value)

    @property
    def centroid(self):
        return np.mean(np.asarray(self.corners, dtype=float), axis=0)

    def check(self):
        return check_coercivity(self.patches(), self.delta, self.sigma.minus, self.sigma.plus)


def auto_delta(patches, sigma_minus, sigma_plus, safety=0.95):
    """Band half width from the curvature bound and the usable contrast."""
    from .geometry import contrasts, modified_side, reflected_side

    mod = modified_side(sigma_minus, sigma_plus)
    k_plus, k_minus = contrasts(sigma_minus, sigma_plus)
    k = k_plus if reflected_side(mod) == "plus" else k_minus
    kappa = max(abs(c) for p in patches for c in p.curvatures())
    radii = [p.radius for p in patches if hasattr(p, "radius")]
    cap = min(radii) if radii else 1.0
    return min(max_delta_for_contrast(kappa, k, safety), 0.99 * cap)
