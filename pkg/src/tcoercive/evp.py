"""Dispersive eigenvalue problems: Lorentz laws, the holomorphic pencil,
Beyn's contour-integral solver and a Bessel dispersion oracle for the disc.

The pencil solves ``-div(sigma(w) grad u) - w^2 tau(w) u = 0`` with
homogeneous Dirichlet conditions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy import special
from scipy.optimize import brentq

from .assembly import (MINUS, PLUS, assemble_mass, assemble_reflection,
                       assemble_stiffness, side_code)
from .errors import AtPole, ContourThroughEigenvalue, RankAmbiguity, ValidationError
from .fespace import default_rule

POLE_TOL = 1e-12


@dataclass(frozen=True)
class LorentzLaw:
    """Generalized Lorentz law, dispersive on the negative region only.

    ``sigma = 1 / (sigma0 * (1 + sum c^2 / (w_l^2 - w^2)))`` and
    ``tau = tau0 * (1 + sum c^2 / (w_l^2 - w^2))`` on the negative region;
    on the positive region the pole sums are absent.  Poles are given as
    ``(c, w_l)`` pairs.
    """

    sigma0_minus: float = 1.0
    sigma0_plus: float = 1.0
    tau0_minus: float = 1.0
    tau0_plus: float = 1.0
    sigma_poles: tuple = ()
    tau_poles: tuple = ()

    def __post_init__(self):
        for name in ("sigma0_minus", "sigma0_plus", "tau0_minus", "tau0_plus"):
            if not getattr(self, name) > 0:
                raise ValidationError("must be positive", name)
        for name in ("sigma_poles", "tau_poles"):
            poles = tuple((float(c), float(w)) for c, w in getattr(self, name))
            if any(c < 0 or w < 0 for c, w in poles):
                raise ValidationError("pole data must be non-negative", name)
            object.__setattr__(self, name, poles)

    @classmethod
    def single_resonance(cls, cutoff_sq=200.0):
        """``sigma_minus = w^2 / (w^2 - cutoff_sq)``, ``sigma_plus = tau = 1``."""
        return cls(sigma_poles=((math.sqrt(cutoff_sq), 0.0),))


def _pole_sum(poles, w):
    s = 0.0
    ds = 0.0
    for c, wl in poles:
        d = wl * wl - w * w
        if abs(w - wl) <= POLE_TOL or abs(w + wl) <= POLE_TOL:
            raise AtPole(f"omega={w} hits the pole at {wl}")
        s = s + c * c / d
        ds = ds + 2.0 * w * c * c / (d * d)
    return s, ds


def law_eval(law, w, region):
    """``(sigma, tau)`` of ``law`` at frequency ``w`` in ``region``."""
    r = side_code(region)
    if r == PLUS:
        return 1.0 / law.sigma0_plus, law.tau0_plus
    s, _ = _pole_sum(law.sigma_poles, w)
    big = law.sigma0_minus * (1.0 + s)
    if abs(big) <= POLE_TOL:
        raise AtPole(f"sigma is singular at omega={w}")
    t, _ = _pole_sum(law.tau_poles, w)
    return 1.0 / big, law.tau0_minus * (1.0 + t)


def law_derivative(law, w, region):
    """``(dsigma/dw, dtau/dw)``."""
    r = side_code(region)
    if r == PLUS:
        return 0.0, 0.0
    s, ds = _pole_sum(law.sigma_poles, w)
    big = law.sigma0_minus * (1.0 + s)
    if abs(big) <= POLE_TOL:
        raise AtPole(f"sigma is singular at omega={w}")
    _, dt = _pole_sum(law.tau_poles, w)
    return -law.sigma0_minus * ds / (big * big), law.tau0_minus * dt


@dataclass
class HoloPencil:
    """``F(w) = sum_s sigma_s(w) G_s - w^2 sum_s tau_s(w) M_s`` on the free DOFs.

    ``G`` and ``M`` map the region tag (-1 or +1) to a frequency-independent
    block.  For the T-transformed pencil the blocks already contain the
    region sign and the reflection correction.
    """

    G: dict
    M: dict
    law: LorentzLaw
    free: np.ndarray = None
    n_total: int = 0

    @property
    def n(self):
        return self.G[PLUS].shape[0]

    def evaluate(self, w):
        out = None
        for s in (MINUS, PLUS):
            sig, tau = law_eval(self.law, w, s)
            term = sig * self.G[s] - (w * w * tau) * self.M[s]
            out = term if out is None else out + term
        return out.tocsc()

    def derivative(self, w):
        out = None
        for s in (MINUS, PLUS):
            sig, tau = law_eval(self.law, w, s)
            dsig, dtau = law_derivative(self.law, w, s)
            term = dsig * self.G[s] - (2.0 * w * tau + w * w * dtau) * self.M[s]
            out = term if out is None else out + term
        return out.tocsc()

    def expand(self, v):
        """Embed a free-DOF vector into the full DOF vector (zero on the boundary)."""
        full = np.zeros(self.n_total, dtype=np.result_type(v, float))
        full[self.free] = v
        return full


def pencil_eval(pencil, w):
    return pencil.evaluate(w)


def build_pencil(space, law, tubes=(), profile=None, side="minus", method="T",
                 rule=None, reflection_rule=None):
    """Assemble the region blocks of the pencil.

    With ``method="T"`` the test functions are ``sgn(s) (v - 2 [s == side] chi v o phi)``
    on region ``s``; ``method="standard"`` uses plain Galerkin blocks.
    """
    rule = rule or default_rule(space.order)
    reflection_rule = reflection_rule or default_rule(space.order, n=3)
    free = space.free_dofs
    m = side_code(side)
    G, M = {}, {}
    filt = {MINUS: "minus_only", PLUS: "plus_only"}
    if method == "T":
        KR = assemble_reflection(space, 1.0, tubes, profile, "stiffness", reflection_rule, side)
        MR = assemble_reflection(space, 1.0, tubes, profile, "mass", reflection_rule, side)
    elif method != "standard":
        raise ValidationError(f"unknown method {method!r}", "method")
    for s in (MINUS, PLUS):
        K = assemble_stiffness(space, 1.0, filt[s], rule)
        Ms = assemble_mass(space, 1.0, filt[s], rule)
        if method == "T":
            K = float(s) * (K - 2.0 * KR) if s == m else float(s) * K
            Ms = float(s) * (Ms - 2.0 * MR) if s == m else float(s) * Ms
        G[s] = sp.csr_matrix(K[free][:, free])
        M[s] = sp.csr_matrix(Ms[free][:, free])
    return HoloPencil(G, M, law, free, space.ndofs)


@dataclass(frozen=True)
class ContourConfig:
    """Circle ``|z - center| = radius`` sampled at ``nodes`` trapezoid points.

    ``probes`` is the number of random probe columns; it must exceed the
    number of eigenvalues inside the contour plus those close outside it
    that the trapezoid filter does not suppress below ``rank_tol``.
    """

    center: complex = 4.0
    radius: float = 0.65
    nodes: int = 64
    probes: int = 20
    rank_tol: float = 1e-10
    residual_tol: float = 1e-8
    margin: float = 1e-8

    def __post_init__(self):
        if not self.radius > 0:
            raise ValidationError("must be positive", "contour.radius")
        if self.nodes < 16:
            raise ValidationError("need at least 16 nodes", "contour.nodes")
        if self.probes < 1:
            raise ValidationError("need at least one probe", "contour.probes")


@dataclass
class EigenPair:
    value: complex
    vector: np.ndarray
    residual: float


@dataclass
class BeynResult:
    pairs: list = field(default_factory=list)
    rank: int = 0
    singular_values: np.ndarray = None

    @property
    def values(self):
        return np.array([p.value for p in self.pairs])


def _residual(pencil, lam, v):
    return float(np.linalg.norm(pencil.evaluate(lam) @ v) / np.linalg.norm(v))


def _refine(pencil, lam, v, tol, steps=6):
    """Nonlinear inverse iteration ``x = F(l)^{-1} F'(l) v``, ``l -= (v.v)/(v.x)``."""
    v = v / np.linalg.norm(v)
    res = _residual(pencil, lam, v)
    for _ in range(steps):
        if res <= tol:
            break
        try:
            lu = spla.splu(pencil.evaluate(lam))
        except RuntimeError:
            break
        x = lu.solve(pencil.derivative(lam) @ v)
        lam_new = lam - np.vdot(v, v) / np.vdot(v, x)
        v_new = x / np.linalg.norm(x)
        res_new = _residual(pencil, lam_new, v_new)
        if not res_new < res:
            break
        lam, v, res = lam_new, v_new, res_new
    return lam, v, res


def beyn_solve(pencil, contour=None, seed=0, refine=True):
    """Eigenvalues of ``pencil`` strictly inside the contour.

    Moments ``A_p = sum_j w_j ((z_j - c)/R)^p F(z_j)^{-1} V`` with
    ``w_j = R e^{i theta_j} / N``; the rank of ``A_0`` is the number of
    singular values above ``rank_tol`` times the larger of the top singular
    value and the typical size of a single node contribution (so an empty
    contour yields rank 0).  Raises :class:`RankAmbiguity` if the rank
    saturates the probe count and :class:`ContourThroughEigenvalue` if a
    node matrix is singular.
    """
    cfg = contour or ContourConfig()
    n = pencil.n
    ell = min(cfg.probes, n)
    rng = np.random.default_rng(seed)
    V = rng.standard_normal((n, ell)).astype(complex)
    c = complex(cfg.center)
    A0 = np.zeros((n, ell), dtype=complex)
    A1 = np.zeros((n, ell), dtype=complex)
    scale = 0.0
    for j in range(cfg.nodes):
        e = np.exp(2j * math.pi * j / cfg.nodes)
        z = c + cfg.radius * e
        try:
            lu = spla.splu(pencil.evaluate(z))
            X = lu.solve(V)
        except RuntimeError as exc:
            raise ContourThroughEigenvalue(f"F(z) singular at node {j} (z={z:.6g})") from exc
        if not np.all(np.isfinite(X)):
            raise ContourThroughEigenvalue(f"non-finite solve at node {j} (z={z:.6g})")
        w = cfg.radius * e / cfg.nodes
        A0 += w * X
        A1 += (w * e) * X
        scale = max(scale, abs(w) * np.linalg.norm(X, 2))
    U, s, Wh = np.linalg.svd(A0, full_matrices=False)
    ref = max(s[0] if len(s) else 0.0, scale)
    rank = int(np.sum(s > cfg.rank_tol * ref)) if ref > 0 else 0
    result = BeynResult(rank=rank, singular_values=s)
    if rank == 0:
        return result
    if rank >= ell:
        raise RankAmbiguity(f"rank {rank} saturates the {ell} probes; increase probes")
    V0 = U[:, :rank]
    W0 = Wh[:rank].conj().T
    B = (V0.conj().T @ A1 @ W0) / s[:rank]
    mu, S = np.linalg.eig(B)
    lams = c + cfg.radius * mu
    vecs = V0 @ S
    inside = np.abs(lams - c) < cfg.radius * (1.0 - cfg.margin)
    order = np.argsort(lams.real[inside], kind="stable")
    for lam, v in zip(lams[inside][order], vecs[:, inside][:, order].T):
        v = v / np.linalg.norm(v)
        res = _residual(pencil, lam, v)
        if refine and res > cfg.residual_tol:
            lam, v, res = _refine(pencil, lam, v, cfg.residual_tol)
        if abs(lam - c) < cfg.radius * (1.0 - cfg.margin):
            result.pairs.append(EigenPair(complex(lam), v, res))
    return result


def cluster_eigenvalues(values, tol=1e-2):
    """Group sorted eigenvalues closer than ``tol``; returns cluster means."""
    vals = sorted(np.asarray(values, dtype=complex), key=lambda z: (z.real, z.imag))
    groups = []
    for v in vals:
        if groups and abs(v - groups[-1][-1]) < tol:
            groups[-1].append(v)
        else:
            groups.append([v])
    return [complex(np.mean(g)) for g in groups], [len(g) for g in groups]


# ---------------------------------------------------------------------------
# dispersion oracle


def _bessel_ratio_i(m, x):
    """``I_m'(x) / I_m(x)`` via exponentially scaled Bessel functions."""
    return 0.5 * (special.ive(m - 1, x) + special.ive(m + 1, x)) / special.ive(m, x)


def dispersion_function(law, m, w, r_in=1.0, r_out=2.0):
    """Matching determinant of angular mode ``m`` at real frequency ``w``.

    Interior ``A Z_m(k r)`` with ``k^2 = w^2 tau_- / sigma_-`` (``Z = J`` for
    ``k^2 > 0``, ``Z = I`` with ``k -> sqrt(-k^2)`` otherwise); exterior
    ``E(r) = J_m(q r) Y_m(q R) - Y_m(q r) J_m(q R)`` with
    ``q^2 = w^2 tau_+ / sigma_+``, vanishing at ``R = r_out``.  Continuity of
    ``u`` and ``sigma du/dr`` at ``r_in`` gives
    ``sigma_- Z'(r_in) E(r_in) - sigma_+ Z(r_in) E'(r_in)``, with the
    modified-Bessel branch divided by ``I_m(k r_in) > 0``.  Depends on ``w``
    only through ``w^2``.
    """
    w = abs(float(w))
    sm, tm = law_eval(law, w, MINUS)
    sp_, tp = law_eval(law, w, PLUS)
    q = w * math.sqrt(tp / sp_)
    E = special.jv(m, q * r_in) * special.yv(m, q * r_out) - special.yv(m, q * r_in) * special.jv(m, q * r_out)
    dE = q * (special.jvp(m, q * r_in) * special.yv(m, q * r_out)
              - special.yvp(m, q * r_in) * special.jv(m, q * r_out))
    k2 = w * w * tm / sm
    if k2 < 0:
        k = math.sqrt(-k2)
        return sm * k * _bessel_ratio_i(m, k * r_in) * E - sp_ * dE
    k = math.sqrt(k2)
    return sm * k * special.jvp(m, k * r_in) * E - sp_ * special.jv(m, k * r_in) * dE


def disc_reference_eigenvalues(law, r_in=1.0, r_out=2.0, modes=range(0, 11), interval=(3.35, 4.65),
                               samples=4000):
    """Roots of the disc dispersion relation, as ``(m, omega)`` sorted by ``omega``.

    Each root with ``m > 0`` is an eigenvalue of multiplicity two (cos/sin).
    Roots are bracketed by sign changes on a uniform grid and refined by
    Brent's method to ``1e-12``.
    """
    lo, hi = map(float, interval)
    grid = np.linspace(lo, hi, samples + 1)
    out = []
    for m in modes:
        vals = []
        for w in grid:
            try:
                vals.append(dispersion_function(law, m, w, r_in, r_out))
            except AtPole:
                vals.append(np.nan)
        vals = np.array(vals)
        for i in range(samples):
            a, b = vals[i], vals[i + 1]
            if not (np.isfinite(a) and np.isfinite(b)):
                continue
            if a == 0.0:
                out.append((m, float(grid[i])))
            elif a * b < 0:
                root = brentq(lambda x: dispersion_function(law, m, x, r_in, r_out),
                              grid[i], grid[i + 1], xtol=1e-13, rtol=1e-15)
                out.append((m, float(root)))
    return sorted(out, key=lambda t: (t[1], t[0]))


def expand_multiplicity(roots):
    """Repeat each ``m > 0`` root twice."""
    return sorted(w for m, w in roots for _ in range(1 if m == 0 else 2))
