"""Mean-convex hull by flows against dilated obstacles, and comparators.

For each ``eps`` the obstacle is dilated by ``eps`` and, for each ``h``, the
maximal flow is run from the full interior to its stationary set. The
per-``eps`` candidate is the final set at the smallest ``h`` (limits grow as
``h`` decreases) and the hull is the candidate at the smallest ``eps``.

Runs at smaller ``eps`` may start from the previous ``eps``'s final set at
the same ``h``: the stationary set ``A`` of the smaller obstacle lies below
that start, and comparison from ``A`` keeps every iterate above ``A``, so the
limit is unchanged.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .flow import GAMMA_REF, MIN_CLEARANCE, FlowParams, default_h, run
from .grid import GridError, VoxelSet, boundary_cells, dilate, measure, symdiff_measure
from .sdf import squared_distance_cells
from .stencil import Stencil, perimeter


def default_epsilons(spacing: float) -> tuple:
    # dx/2 dilates to the obstacle itself: no other center lies that close
    return (2.0 * spacing, 1.0 * spacing, 0.5 * spacing)


def default_hs(shape, spacing: float) -> tuple:
    return (2.0 * default_h(shape, spacing), default_h(shape, spacing))


@dataclass(frozen=True, eq=False)
class HullParams:
    obstacle: VoxelSet
    stencil: Stencil
    epsilons: tuple = ()
    hs: tuple = ()
    max_steps: int = 500
    gamma_ref: float = GAMMA_REF
    warm_start: bool = True

    def __post_init__(self):
        spec = self.obstacle.spec
        if self.obstacle.is_empty():
            raise GridError("empty obstacle")
        eps = tuple(float(e) for e in (self.epsilons or default_epsilons(spec.spacing)))
        hs = tuple(float(h) for h in (self.hs or default_hs(spec.shape, spec.spacing)))
        if any(e <= 0 for e in eps) or any(b >= a for a, b in zip(eps, eps[1:])):
            raise ValueError("epsilons must be positive and strictly decreasing")
        if any(h <= 0 for h in hs) or any(b >= a for a, b in zip(hs, hs[1:])):
            raise ValueError("hs must be positive and strictly decreasing")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        object.__setattr__(self, "epsilons", eps)
        object.__setattr__(self, "hs", hs)
        if dilate(self.obstacle, eps[0]).frame_distance() < MIN_CLEARANCE:
            raise GridError(f"dilated obstacle comes within {MIN_CLEARANCE} cells of the frame")

    def gap_ok(self, eps: float, h: float) -> bool:
        """Whether one step's displacement scale cannot jump the eps-gap."""
        return 2 * self.gamma_ref * math.sqrt(h) < eps

    def to_dict(self) -> dict:
        return {"epsilons": list(self.epsilons), "hs": list(self.hs),
                "stencil": self.stencil.to_dict(), "max_steps": self.max_steps,
                "gamma_ref": self.gamma_ref, "warm_start": self.warm_start,
                "obstacle_volume": measure(self.obstacle)}


@dataclass(frozen=True, eq=False)
class RunSummary:
    eps: float
    h: float
    final: VoxelSet
    n_steps: int
    stationary: bool
    gap_ok: bool
    warm: bool

    def to_dict(self) -> dict:
        return {"eps": self.eps, "h": self.h, "volume": measure(self.final),
                "n_steps": self.n_steps, "stationary": self.stationary,
                "gap_ok": self.gap_ok, "warm_start": self.warm}


@dataclass(frozen=True, eq=False)
class HullReport:
    params: HullParams
    runs: list
    e_eps: dict
    hull: VoxelSet
    convergence: dict
    h_violation: dict
    comparison: dict
    degraded: bool

    def final(self, eps: float, h: float) -> VoxelSet:
        for r in self.runs:
            if r.eps == eps and r.h == h:
                return r.final
        raise KeyError((eps, h))

    def to_dict(self) -> dict:
        return {"params": self.params.to_dict(),
                "runs": [r.to_dict() for r in self.runs],
                "e_eps_volume": {repr(e): measure(s) for e, s in self.e_eps.items()},
                "hull_volume": measure(self.hull),
                "convergence": self.convergence,
                "h_violation": {repr(e): v for e, v in self.h_violation.items()},
                "comparison": self.comparison,
                "degraded": self.degraded}


def _eps_chain(p: HullParams, h: float, obstacles: dict) -> list:
    """All eps runs at one time step, each warm-started from the previous final."""
    spec = p.obstacle.spec
    out = []
    start = VoxelSet.interior(spec)
    for e in p.epsilons:
        warm = p.warm_start and e != p.epsilons[0]
        init = start if warm else VoxelSet.interior(spec)
        tr = run(FlowParams(h, obstacles[e], p.stencil, initial=init,
                            max_steps=p.max_steps, gamma_ref=p.gamma_ref))
        out.append(RunSummary(e, h, tr.final, len(tr.steps), tr.stationary, p.gap_ok(e, h), warm))
        start = tr.final
    return out


def mean_convex_hull(p: HullParams, jobs: int = 1) -> HullReport:
    """Run the eps x h schedule; time steps are independent and may run in parallel."""
    obstacles = {e: dilate(p.obstacle, e) for e in p.epsilons}
    if jobs > 1 and len(p.hs) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(p.hs))) as ex:
            chains = list(ex.map(_eps_chain, [p] * len(p.hs), p.hs, [obstacles] * len(p.hs)))
    else:
        chains = [_eps_chain(p, h, obstacles) for h in p.hs]
    runs = [r for c in chains for r in c]
    fin = {(r.eps, r.h): r.final for r in runs}
    e_eps = {e: fin[(e, p.hs[-1])] for e in p.epsilons}
    hull = e_eps[p.epsilons[-1]]

    conv_eps = [symdiff_measure(e_eps[a], e_eps[b]) for a, b in zip(p.epsilons, p.epsilons[1:])]
    conv_h = {repr(e): [symdiff_measure(fin[(e, a)], fin[(e, b)]) for a, b in zip(p.hs, p.hs[1:])]
              for e in p.epsilons}
    # larger h should give a smaller limit; cells of final(h) missing from final(h') violate that
    h_violation = {e: [measure(fin[(e, a)] - fin[(e, b)]) for a, b in zip(p.hs, p.hs[1:])]
                   for e in p.epsilons}
    eps_monotone = all((e_eps[b] <= e_eps[a]) for a, b in zip(p.epsilons, p.epsilons[1:]))
    nonincreasing = all(b <= a for a, b in zip(conv_eps, conv_eps[1:]))
    convergence = {"eps": conv_eps, "h": conv_h, "eps_monotone": bool(eps_monotone),
                   "eps_nonincreasing": bool(nonincreasing)}
    ch = convex_hull(p.obstacle)
    comparison = {"to_obstacle": compare_sets(hull, p.obstacle),
                  "to_convex_hull": compare_sets(hull, ch),
                  "obstacle_volume": measure(p.obstacle), "hull_volume": measure(hull),
                  "convex_hull_volume": measure(ch)}
    degraded = not all(r.stationary for r in runs)
    return HullReport(p, runs, e_eps, hull, convergence, h_violation, comparison, degraded)


# --- exact convex hull ------------------------------------------------------

def _cross3(a, b):
    return np.array([a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
                     a[0] * b[1] - a[1] * b[0]], dtype=object)


def _normalize(n, c):
    g = math.gcd(*(abs(int(x)) for x in n), abs(int(c)))
    return tuple(int(x) // g for x in n), int(c) // g


def _facets(pts: np.ndarray) -> list:
    """Exact half-spaces ``n.p <= c`` of the hull of full-dimensional integer points."""
    dim = pts.shape[1]
    ext = np.unique(np.concatenate([pts[pts[:, a] == v] for a in range(dim)
                                    for v in (pts[:, a].min(), pts[:, a].max())] +
                                   [pts]), axis=0)
    try:
        hull = ConvexHull(ext.astype(float))
    except QhullError as err:  # pragma: no cover - degenerate sets are routed elsewhere
        raise GridError(f"convex hull failed: {err}") from err
    verts = ext[hull.vertices].astype(np.int64)
    centroid_num = verts.sum(axis=0)  # centroid * len(verts), interior to the hull
    m = len(verts)
    out = set()
    for simplex in hull.simplices:
        q = [tuple(int(x) for x in ext[i]) for i in simplex]
        if dim == 2:
            d = (q[1][0] - q[0][0], q[1][1] - q[0][1])
            n = (d[1], -d[0])
        else:
            a = [q[1][k] - q[0][k] for k in range(3)]
            b = [q[2][k] - q[0][k] for k in range(3)]
            n = tuple(int(x) for x in _cross3(a, b))
        if not any(n):
            continue
        c = sum(n[k] * q[0][k] for k in range(dim))
        if sum(n[k] * int(centroid_num[k]) for k in range(dim)) > m * c:
            n, c = tuple(-x for x in n), -c
        out.add(_normalize(n, c))
    facets = sorted(out)
    N = np.array([f[0] for f in facets], dtype=np.int64)
    C = np.array([f[1] for f in facets], dtype=np.int64)
    if ((verts @ N.T) > C).any() or ((pts @ N.T) > C).any():
        raise GridError("convex hull certification failed")
    return facets


def _column_fill(shape, N: np.ndarray, C: np.ndarray) -> np.ndarray:
    """Cells satisfying ``N @ idx <= C``, scanned along the last axis."""
    dim = len(shape)
    grids = np.meshgrid(*[np.arange(s, dtype=np.int64) for s in shape[:-1]], indexing="ij")
    lo = np.full(shape[:-1], 0, dtype=np.int64)
    hi = np.full(shape[:-1], shape[-1] - 1, dtype=np.int64)
    for n, c in zip(N, C):
        rest = c - sum(n[a] * grids[a] for a in range(dim - 1))
        nz = n[-1]
        if nz > 0:
            hi = np.minimum(hi, rest // nz)
        elif nz < 0:
            lo = np.maximum(lo, -(rest // -nz))
        else:
            hi = np.where(rest >= 0, hi, -1)
    z = np.arange(shape[-1], dtype=np.int64)
    return (z >= lo[..., None]) & (z <= hi[..., None])


def _affine_rank(pts: np.ndarray):
    """Exact affine rank of integer points, with a witness direction/normal."""
    p0 = pts[0]
    d = pts - p0
    nz = np.flatnonzero(np.any(d != 0, axis=1))
    if not len(nz):
        return 0, None
    v1 = d[nz[0]]
    if pts.shape[1] == 2:
        cr = d[:, 0] * v1[1] - d[:, 1] * v1[0]
        return (1, v1) if not cr.any() else (2, None)
    cr = np.stack([d[:, 1] * v1[2] - d[:, 2] * v1[1], d[:, 2] * v1[0] - d[:, 0] * v1[2],
                   d[:, 0] * v1[1] - d[:, 1] * v1[0]], axis=1)
    k = np.flatnonzero(np.any(cr != 0, axis=1))
    if not len(k):
        return 1, v1
    n = cr[k[0]]
    if not (d @ n).any():
        return 2, n
    return 3, None


def convex_hull(E: VoxelSet) -> VoxelSet:
    """Cells whose centers lie in the convex hull of E's member centers.

    The hull is certified with integer arithmetic on cell indices: every
    facet comes from input points, and every input point is checked to lie
    on the inner side of every facet.
    """
    if E.is_empty():
        raise GridError("convex hull of an empty set")
    spec = E.spec
    pts = np.argwhere(E.mask).astype(np.int64)
    rank, w = _affine_rank(pts)
    out = np.zeros(spec.shape, dtype=bool)
    if rank == 0:
        out[tuple(pts[0])] = True
    elif rank == 1:
        g = math.gcd(*(abs(int(x)) for x in w))
        step = w // g
        t = (pts - pts[0]) @ step // int(step @ step)
        for k in range(int(t.min()), int(t.max()) + 1):
            out[tuple(pts[0] + k * step)] = True
    elif rank == spec.dim:
        if spec.dim == 3:
            # interior points never bound the hull
            keep = np.zeros(spec.shape, dtype=bool)
            keep[tuple(boundary_cells(E).T)] = True
            pts = np.argwhere(keep)
        facets = _facets(pts)
        N = np.array([f[0] for f in facets], dtype=np.int64)
        C = np.array([f[1] for f in facets], dtype=np.int64)
        out = _column_fill(spec.shape, N, C)
    else:  # planar set in 3D
        n = w // math.gcd(*(abs(int(x)) for x in w))
        c = int(n @ pts[0])
        drop = int(np.argmax(np.abs(n)))
        keep_ax = [a for a in range(3) if a != drop]
        facets = _facets(pts[:, keep_ax])
        idx = np.argwhere(np.ones(spec.shape, dtype=bool)).astype(np.int64)
        on = idx[idx @ n == c]
        q = on[:, keep_ax]
        N = np.array([f[0] for f in facets], dtype=np.int64)
        C = np.array([f[1] for f in facets], dtype=np.int64)
        inside = ((q @ N.T) <= C).all(axis=1)
        out[tuple(on[inside].T)] = True
    out &= spec.interior_mask()
    out |= E.mask
    return VoxelSet(spec, out)


def compare_sets(A: VoxelSet, B: VoxelSet) -> dict:
    """Symmetric-difference measure and two-sided boundary Hausdorff distance."""
    if A.spec != B.spec:
        raise GridError("spec mismatch")
    out = {"symdiff": symdiff_measure(A, B)}
    if A.is_empty() or B.is_empty():
        out["hausdorff_boundary"] = None
        return out
    ba, bb = boundary_cells(A), boundary_cells(B)
    ma = np.zeros(A.spec.shape, dtype=bool)
    mb = np.zeros(A.spec.shape, dtype=bool)
    ma[tuple(ba.T)] = True
    mb[tuple(bb.T)] = True
    da = squared_distance_cells(ma)
    db = squared_distance_cells(mb)
    d2 = max(int(db[ma].max()), int(da[mb].max()))
    out["hausdorff_boundary"] = A.spec.spacing * math.sqrt(d2)
    return out


def hull_perimeter(report: HullReport) -> float:
    return perimeter(report.hull, report.params.stencil)


# --- mesh export ------------------------------------------------------------

def obj_mesh(E: VoxelSet) -> str:
    """Wavefront OBJ of the zero level of the signed distance (inspection only)."""
    from skimage.measure import marching_cubes

    from .sdf import signed_distance

    if E.dim != 3:
        raise GridError("OBJ export needs a 3D set")
    sd = signed_distance(E).values
    spec = E.spec
    verts, faces, _, _ = marching_cubes(sd, level=0.0, spacing=(spec.spacing,) * 3)
    verts = verts + np.asarray(spec.origin) + 0.5 * spec.spacing
    lines = ["# mchull hull boundary mesh (non-canonical)"]
    lines += [f"v {x:.9g} {y:.9g} {z:.9g}" for x, y, z in verts]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in faces]
    return "\n".join(lines) + "\n"
