"""Parametric test shapes rasterized at cell centers.

Shapes are defined in physical coordinates. When a shape's bounding box
does not fit inside the grid minus ``margin`` cells, it is uniformly
scaled down about the origin until it does; otherwise it is left at its
natural size. The default margin of 6 cells leaves room for a 2-cell
dilation of the scene plus the 3-cell frame clearance flows require.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import GridError, GridSpec, VoxelSet

DEFAULTS = {
    "ball": {"r": 0.3},
    "box": {"half": 0.4},
    "l_shape": {"side": 0.625, "notch": 0.3125},
    "star": {"r_outer": 0.6, "r_inner": 0.25, "points": 5},
    "torus": {"R": 0.6, "a": 0.2},
    "catenoid_region": {"L": 1.0},
    "dumbbell": {"r": 0.3, "neck": 0.12, "sep": 0.9},
    "omega_theta0": {"L": 0.62, "a": 0.5, "theta0": 0.3},
}
KINDS = tuple(DEFAULTS)
DEFAULT_MARGIN = 6
_DIMS = {"l_shape": (2,), "star": (2,), "torus": (3,), "catenoid_region": (3,),
         "omega_theta0": (3,)}


@dataclass(frozen=True)
class SceneSpec:
    kind: str
    spec: GridSpec
    params: dict = field(default_factory=dict)
    margin: int = DEFAULT_MARGIN

    def __post_init__(self):
        if self.kind not in DEFAULTS:
            raise ValueError(f"unknown scene kind {self.kind!r}; choose from {KINDS}")
        unknown = set(self.params) - set(DEFAULTS[self.kind])
        if unknown:
            raise ValueError(f"unknown parameters for {self.kind}: {sorted(unknown)}")
        if self.spec.dim not in _DIMS.get(self.kind, (2, 3)):
            raise ValueError(f"{self.kind} is only defined in dim {_DIMS[self.kind]}")
        merged = {**DEFAULTS[self.kind], **self.params}
        object.__setattr__(self, "params", merged)
        _validate(self.kind, merged)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": dict(self.params), "margin": self.margin,
                "grid": self.spec.to_dict(), "scale": scene_scale(self)}


def _validate(kind: str, p: dict) -> None:
    def pos(*names):
        for n in names:
            if not p[n] > 0:
                raise ValueError(f"{kind}: {n} must be positive")

    if kind == "ball":
        pos("r")
    elif kind == "box":
        h = np.atleast_1d(p["half"])
        if not (h > 0).all():
            raise ValueError("box: half widths must be positive")
    elif kind == "l_shape":
        pos("side", "notch")
        if p["notch"] >= p["side"]:
            raise ValueError("l_shape: notch must be smaller than side")
    elif kind == "star":
        pos("r_outer", "r_inner")
        if p["r_inner"] >= p["r_outer"] or int(p["points"]) < 3:
            raise ValueError("star: need r_inner < r_outer and >= 3 points")
    elif kind == "torus":
        pos("R", "a")
        if p["a"] >= p["R"]:
            raise ValueError("torus: minor radius a must be smaller than major radius R")
    elif kind == "catenoid_region":
        pos("L")
    elif kind == "dumbbell":
        pos("r", "neck", "sep")
        if p["neck"] >= p["r"]:
            raise ValueError("dumbbell: neck radius must be smaller than ball radius")
    elif kind == "omega_theta0":
        pos("L", "a")
        if not 0 < p["theta0"] < 2 * math.pi:
            raise ValueError("omega_theta0: theta0 must lie in (0, 2*pi)")
        if p["a"] * math.cosh(p["L"] / p["a"]) >= 1:
            raise ValueError("omega_theta0: a*cosh(L/a) must be < 1 (empty cross-sections)")


def natural_extent(kind: str, p: dict, dim: int) -> np.ndarray:
    """Half-widths of the axis-aligned bounding box around the origin."""
    if kind == "ball":
        return np.full(dim, p["r"])
    if kind == "box":
        return np.broadcast_to(np.asarray(p["half"], float), (dim,)).copy()
    if kind == "l_shape":
        return np.full(dim, p["side"] / 2)
    if kind == "star":
        return np.full(dim, p["r_outer"])
    if kind == "torus":
        return np.array([p["R"] + p["a"]] * 2 + [p["a"]])
    if kind == "catenoid_region":
        c = math.cosh(p["L"])
        return np.array([c, c, p["L"]])
    if kind == "dumbbell":
        ext = np.full(dim, p["r"])
        ext[0] = p["sep"] / 2 + p["r"]
        return ext
    if kind == "omega_theta0":
        return np.array([1.0, 1.0, p["L"]])
    raise AssertionError(kind)


def scene_scale(s: SceneSpec) -> float:
    spec = s.spec
    half = 0.5 * np.asarray(spec.shape) * spec.spacing
    center = np.asarray(spec.origin) + half
    if np.abs(center).max() > 1e-12 * half.max():
        raise GridError("scenes expect a grid centered on the origin")
    avail = half - s.margin * spec.spacing
    if (avail <= 0).any():
        raise GridError("margin leaves no room for the scene")
    ext = natural_extent(s.kind, s.params, spec.dim)
    return float(min(1.0, (avail / ext).min()))


def _star_contains(x, y, p) -> np.ndarray:
    k = int(p["points"])
    ang = np.pi / 2 + np.arange(2 * k) * np.pi / k
    rad = np.where(np.arange(2 * k) % 2 == 0, p["r_outer"], p["r_inner"])
    vx, vy = rad * np.cos(ang), rad * np.sin(ang)
    x, y = np.broadcast_arrays(x, y)
    inside = np.zeros(x.shape, dtype=bool)
    j = len(vx) - 1
    for i in range(len(vx)):  # even-odd ray casting
        cond = (vy[i] > y) != (vy[j] > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xc = (vx[j] - vx[i]) * (y - vy[i]) / (vy[j] - vy[i]) + vx[i]
        inside ^= cond & (x < xc)
        j = i
    return inside


def indicator(kind: str, p: dict, *c) -> np.ndarray:
    """Membership of unscaled points ``c`` in the analytic shape."""
    if kind == "ball":
        return sum(x * x for x in c) <= p["r"] ** 2
    if kind == "box":
        h = np.broadcast_to(np.asarray(p["half"], float), (len(c),))
        out = np.ones(np.broadcast_shapes(*(x.shape for x in c)), dtype=bool)
        for x, hi in zip(c, h):
            out = out & (np.abs(x) <= hi)
        return out
    if kind == "l_shape":
        x, y = c
        h = p["side"] / 2
        sq = (np.abs(x) <= h) & (np.abs(y) <= h)
        cut = (x > h - p["notch"]) & (y > h - p["notch"])
        return sq & ~cut
    if kind == "star":
        return _star_contains(*c, p)
    if kind == "torus":
        x, y, z = c
        return (np.sqrt(x * x + y * y) - p["R"]) ** 2 + z * z <= p["a"] ** 2
    if kind == "catenoid_region":
        x, y, z = c
        return (np.abs(z) <= p["L"]) & (x * x + y * y <= np.cosh(z) ** 2)
    if kind == "dumbbell":
        x = c[0]
        rest = sum(v * v for v in c[1:])
        cx = p["sep"] / 2
        balls = ((x - cx) ** 2 + rest <= p["r"] ** 2) | ((x + cx) ** 2 + rest <= p["r"] ** 2)
        bar = (np.abs(x) <= cx) & (rest <= p["neck"] ** 2)
        return balls | bar
    if kind == "omega_theta0":
        x, y, z = c
        rho = np.sqrt(x * x + y * y)
        theta = np.mod(np.arctan2(y, x), 2 * np.pi)
        return ((theta >= p["theta0"]) & (np.abs(z) <= p["L"])
                & (p["a"] * np.cosh(z / p["a"]) <= rho) & (rho <= 1.0))
    raise AssertionError(kind)


def generate(s: SceneSpec) -> VoxelSet:
    scale = scene_scale(s)
    E = VoxelSet.from_predicate(s.spec, lambda *c: indicator(s.kind, s.params, *(x / scale for x in c)))
    if E.is_empty():
        raise GridError(f"scene {s.kind} rasterizes to the empty set at this resolution")
    if E.frame_distance() < 3:
        raise GridError(f"scene {s.kind} comes within 3 cells of the frame")
    return E


def torus(R: float, a: float, spec: GridSpec, margin: int = DEFAULT_MARGIN) -> VoxelSet:
    return generate(SceneSpec("torus", spec, {"R": R, "a": a}, margin))
