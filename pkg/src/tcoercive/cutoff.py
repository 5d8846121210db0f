"""C1 cut-off function of the signed distance to the interface."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import OutOfTube, ValidationError


@dataclass(frozen=True)
class CutoffProfile:
    """``1`` for ``|t| <= delta_inner``, ``0`` for ``|t| >= delta_outer``.

    In between a cubic smoothstep with vanishing slope at both ends.
    """

    delta_inner: float
    delta_outer: float

    def __post_init__(self):
        if not 0 < self.delta_inner < self.delta_outer:
            raise ValidationError("cut-off requires 0 < delta_inner < delta_outer")

    @classmethod
    def for_delta(cls, delta, inner_fraction=0.5):
        return cls(inner_fraction * delta, delta)

    @property
    def width(self):
        return self.delta_outer - self.delta_inner

    def _lam(self, t):
        s = np.abs(np.asarray(t, dtype=float))
        return np.clip((s - self.delta_inner) / self.width, 0.0, 1.0)

    def value(self, t):
        lam = self._lam(t)
        return 1.0 - lam * lam * (3.0 - 2.0 * lam)

    def slope(self, t):
        """Derivative of the profile with respect to ``|t|``."""
        lam = self._lam(t)
        return -6.0 * lam * (1.0 - lam) / self.width


def chi_value(profile, t):
    v = profile.value(t)
    return float(v) if np.ndim(v) == 0 else v


def chi_gradient_from_coords(profile, t, normals):
    """Gradient given tubular coordinates; ``grad t`` equals the normal."""
    t = np.asarray(t, dtype=float)
    return (profile.slope(t) * np.sign(t))[..., None] * normals


def chi_gradient(profile, patch, x):
    """Gradient of the cut-off at ``x`` near ``patch``."""
    x = np.asarray(x, dtype=float)
    _, t, n, in_range = patch.project(x)
    if not np.all(in_range):
        raise OutOfTube("point lies outside the patch's tubular neighbourhood")
    return chi_gradient_from_coords(profile, t, n)
