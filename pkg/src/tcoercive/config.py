"""TOML run configuration with schema validation.

Example (disc benchmark)::

    [geometry]
    kind = "disc"
    r_in = 1.0
    r_out = 2.0

    [material]
    sigma_minus = -1.0
    sigma_plus = 3.0

    [discretization]
    order = 1
    h = [0.2, 0.1, 0.05]
    delta = "auto"

Sections: ``geometry``, ``material``, ``discretization``, ``source``,
``law``, ``contour``, ``oracle``, ``run``.  Unknown keys are rejected.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .assembly import Coefficient
from .errors import InvalidDelta, ParseError, ValidationError
from .evp import ContourConfig, LorentzLaw, law_eval
from .geometry import (Arc2D, Cylinder3D, Plane3D, Segment2D, Sphere3D, contrasts,
                       interface_norm_bound, max_delta_for_contrast, modified_side,
                       reflected_side)
from .mesh import rounded_triangle_patches
from .problems import DiscProblem, RoundedTriangleProblem

_REQUIRED = object()

SCHEMA = {
    "geometry": {
        "kind": _REQUIRED,
        "r_in": 1.0, "r_out": 2.0, "center": [0.0, 0.0],
        "square": [0.0, 0.0, 10.0, 10.0],
        "corners": [[2.0, 2.0], [8.0, 2.0], [5.0, 2.0 + 3.0 * math.sqrt(3.0)]],
        "radius": 1.0,
        "patches": [],
    },
    "material": {"sigma_minus": -1.0, "sigma_plus": 3.0},
    "discretization": {
        "order": 1, "h": [0.1], "delta": "auto", "delta_safety": 0.95,
        "subdivisions": 3, "degree": None, "method": "T", "mirror_band": False,
        "reference_h": None, "reference_method": "T",
    },
    "source": {"kind": "auto", "value": 1.0},
    "law": {
        "sigma0_minus": 1.0, "sigma0_plus": 1.0, "tau0_minus": 1.0, "tau0_plus": 1.0,
        "sigma_poles": [], "tau_poles": [],
    },
    "contour": {
        "center": 4.0, "radius": 0.65, "nodes": 64, "probes": 20,
        "rank_tol": 1e-10, "residual_tol": 1e-8,
    },
    "oracle": {"modes": [0, 10], "interval": None, "samples": 4000},
    "run": {"seed": 0, "out": "."},
}

PATCH_SCHEMA = {
    "arc": {"kind": _REQUIRED, "center": _REQUIRED, "radius": _REQUIRED,
            "theta0": -math.pi, "theta1": math.pi, "center_in_minus": True},
    "segment": {"kind": _REQUIRED, "a": _REQUIRED, "b": _REQUIRED, "minus_on_left": True},
    "plane": {"kind": _REQUIRED, "point": [0.0, 0.0, 0.0], "normal": [0.0, 0.0, 1.0]},
    "sphere": {"kind": _REQUIRED, "center": [0.0, 0.0, 0.0], "radius": _REQUIRED,
               "center_in_minus": True},
    "cylinder": {"kind": _REQUIRED, "axis_point": [0.0, 0.0, 0.0], "axis_direction": [0.0, 0.0, 1.0],
                 "radius": _REQUIRED, "center_in_minus": True},
}


@dataclass
class RunConfig:
    geometry: dict
    material: dict
    discretization: dict
    source: dict
    law: dict
    contour: dict
    oracle: dict
    run: dict
    patches: list = field(default_factory=list)
    delta: float = None
    sections: set = field(default_factory=set)

    @property
    def kind(self):
        return self.geometry["kind"]

    @property
    def sigma(self):
        return Coefficient(self.material["sigma_minus"], self.material["sigma_plus"])

    @property
    def hs(self):
        return list(self.discretization["h"])

    def lorentz_law(self):
        lw = self.law
        return LorentzLaw(lw["sigma0_minus"], lw["sigma0_plus"], lw["tau0_minus"], lw["tau0_plus"],
                          tuple(map(tuple, lw["sigma_poles"])), tuple(map(tuple, lw["tau_poles"])))

    def contour_config(self):
        c = self.contour
        center = c["center"]
        if isinstance(center, (list, tuple)):
            center = complex(center[0], center[1])
        return ContourConfig(complex(center), c["radius"], c["nodes"], c["probes"],
                             c["rank_tol"], c["residual_tol"])

    def problem(self):
        """The source problem described by this configuration."""
        g = self.geometry
        if self.kind == "disc":
            prob = DiscProblem(self.sigma, self.delta, g["r_in"], g["r_out"], tuple(g["center"]),
                               self.discretization["mirror_band"])
        elif self.kind == "rounded_triangle":
            prob = RoundedTriangleProblem(self.sigma, self.delta, tuple(g["square"]),
                                          tuple(map(tuple, g["corners"])), g["radius"])
        else:
            raise ValidationError("source problems need a disc or rounded_triangle geometry",
                                  "geometry.kind")
        kind = self.source["kind"]
        if kind == "constant" or (kind == "auto" and self.kind != "disc"):
            prob.source_value = float(self.source["value"])
        elif kind == "manufactured" and self.kind != "disc":
            raise ValidationError("a manufactured source exists only for the disc", "source.kind")
        elif kind not in ("auto", "manufactured", "constant"):
            raise ValidationError(f"unknown source kind {kind!r}", "source.kind")
        return prob


def _fill(section, data, schema):
    if not isinstance(data, dict):
        raise ParseError("expected a table", section)
    out = {}
    for key in data:
        if key not in schema:
            raise ValidationError(f"unknown key {key!r}", f"{section}.{key}")
    for key, default in schema.items():
        if key in data:
            out[key] = data[key]
        elif default is _REQUIRED:
            raise ParseError("missing required key", f"{section}.{key}")
        else:
            out[key] = default
    return out


def _positive(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0:
        raise ValidationError(f"must be a positive number, got {value!r}", path)
    return float(value)


def _build_patch(i, raw):
    path = f"geometry.patches[{i}]"
    kind = raw.get("kind") if isinstance(raw, dict) else None
    if kind not in PATCH_SCHEMA:
        raise ValidationError(f"unknown patch kind {kind!r}", f"{path}.kind")
    p = _fill(path, raw, PATCH_SCHEMA[kind])
    try:
        if kind == "arc":
            return Arc2D(tuple(p["center"]), _positive(p["radius"], f"{path}.radius"),
                         float(p["theta0"]), float(p["theta1"]), bool(p["center_in_minus"]))
        if kind == "segment":
            return Segment2D(tuple(p["a"]), tuple(p["b"]), bool(p["minus_on_left"]))
        if kind == "plane":
            return Plane3D(tuple(p["point"]), tuple(p["normal"]))
        if kind == "sphere":
            return Sphere3D(tuple(p["center"]), _positive(p["radius"], f"{path}.radius"),
                            bool(p["center_in_minus"]))
        return Cylinder3D(tuple(p["axis_point"]), tuple(p["axis_direction"]),
                          _positive(p["radius"], f"{path}.radius"), bool(p["center_in_minus"]))
    except ValidationError as exc:
        raise ValidationError(str(exc), path) from exc


def _patches(cfg):
    g = cfg.geometry
    if cfg.kind == "disc":
        r_in = _positive(g["r_in"], "geometry.r_in")
        r_out = _positive(g["r_out"], "geometry.r_out")
        if not r_in < r_out:
            raise ValidationError("r_in must be smaller than r_out", "geometry.r_in")
        return [Arc2D(tuple(g["center"]), r_in, -math.pi, math.pi, True)]
    if cfg.kind == "rounded_triangle":
        _positive(g["radius"], "geometry.radius")
        return rounded_triangle_patches(g["corners"], g["radius"])[2]
    if cfg.kind == "patches":
        if not g["patches"]:
            raise ValidationError("at least one patch is required", "geometry.patches")
        return [_build_patch(i, p) for i, p in enumerate(g["patches"])]
    raise ValidationError(f"unknown geometry kind {cfg.kind!r}", "geometry.kind")


def _usable_contrast(cfg):
    """Contrast of the reflected side; for dispersive runs the worst one on the real window."""
    if "law" in cfg.sections:
        law = cfg.lorentz_law()
        cc = cfg.contour_config()
        ws = np.linspace(cc.center.real - cc.radius, cc.center.real + cc.radius, 201)
        sm = np.array([law_eval(law, w, "minus")[0] for w in ws])
        spl = law_eval(law, ws[0], "plus")[0]
        if np.any(sm == 0) or np.any(np.sign(sm) != np.sign(sm[0])) or np.sign(sm[0]) == np.sign(spl):
            raise ValidationError("sigma must keep opposite signs across the contour's real window",
                                  "law")
        sides = {modified_side(s, spl) for s in sm}
        if len(sides) != 1:
            raise ValidationError("the contrast crosses 1 inside the contour window", "law")
        mod = sides.pop()
        ks = [contrasts(s, spl)[0 if reflected_side(mod) == "plus" else 1] for s in sm]
        return mod, min(ks)
    sm, spl = cfg.material["sigma_minus"], cfg.material["sigma_plus"]
    if not (sm < 0 < spl):
        raise ValidationError("need sigma_minus < 0 < sigma_plus", "material")
    mod = modified_side(sm, spl)
    k = contrasts(sm, spl)[0 if reflected_side(mod) == "plus" else 1]
    return mod, k


def _resolve_delta(cfg):
    d = cfg.discretization
    delta = d["delta"]
    mod, k = _usable_contrast(cfg)
    src = reflected_side(mod)
    radii = [p.radius for p in cfg.patches if hasattr(p, "radius")]
    if delta == "auto":
        kappa = max(abs(c) for p in cfg.patches for c in p.curvatures())
        safety = d["delta_safety"]
        if not (isinstance(safety, (int, float)) and 0 < safety <= 1):
            raise ValidationError("must lie in (0, 1]", "discretization.delta_safety")
        delta = max_delta_for_contrast(kappa, k, safety)
        if radii:
            delta = min(delta, 0.99 * min(radii))
    else:
        delta = _positive(delta, "discretization.delta")
        if radii and not delta < min(radii):
            raise ValidationError(f"delta={delta} must be smaller than the smallest patch radius {min(radii)}",
                                  "discretization.delta")
        b2 = interface_norm_bound(cfg.patches, delta, src) ** 2
        if not b2 < k:
            raise InvalidDelta(f"squared norm bound {b2:.4g} is not below the contrast {k:.4g}",
                               "discretization.delta")
    if cfg.kind == "disc":
        g = cfg.geometry
        if not g["r_in"] + delta < g["r_out"]:
            raise ValidationError("band must stay inside the outer disc", "discretization.delta")
    if cfg.kind == "rounded_triangle":
        g = cfg.geometry
        if not delta < g["radius"]:
            raise ValidationError("delta must be smaller than the rounding radius", "discretization.delta")
    return float(delta)


def _validate_discretization(d):
    if d["order"] not in (1, 2):
        raise ValidationError("must be 1 or 2", "discretization.order")
    hs = d["h"] if isinstance(d["h"], list) else [d["h"]]
    if not hs:
        raise ValidationError("need at least one mesh size", "discretization.h")
    d["h"] = [_positive(h, f"discretization.h[{i}]") for i, h in enumerate(hs)]
    n = d["subdivisions"]
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ValidationError("must be an integer >= 1", "discretization.subdivisions")
    if d["degree"] is not None and (not isinstance(d["degree"], int) or d["degree"] < 1):
        raise ValidationError("must be an integer >= 1", "discretization.degree")
    for key in ("method", "reference_method"):
        if d[key] not in ("T", "standard"):
            raise ValidationError("must be 'T' or 'standard'", f"discretization.{key}")
    if d["reference_h"] is not None:
        _positive(d["reference_h"], "discretization.reference_h")


def parse_config(text):
    """Parse and validate a TOML run configuration (defaults filled in)."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(f"malformed configuration: {exc}") from exc
    for key in raw:
        if key not in SCHEMA:
            raise ValidationError("unknown section", key)
    if "geometry" not in raw:
        raise ParseError("missing [geometry] section", "geometry")
    sections = {name: _fill(name, raw.get(name, {}), schema) for name, schema in SCHEMA.items()}
    cfg = RunConfig(**sections, sections=set(raw))
    _validate_discretization(cfg.discretization)
    try:
        cfg.lorentz_law()
        cfg.contour_config()
    except ValidationError as exc:
        raise ValidationError(str(exc), exc.path or "law") from exc
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"malformed law or contour data: {exc}", "law") from exc
    cfg.patches = _patches(cfg)
    cfg.delta = _resolve_delta(cfg)
    return cfg


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    return parse_config(text)
