"""Executable checks of the discrete lemmas, exact or statistical.

Exact checks use integer cut counts and quantized energies, so they assert
with zero tolerance. Statistical checks fit a quantity and compare it with a
declared band. Every check takes a root seed; trial ``i`` draws from
``np.random.default_rng([seed, i])`` so results do not depend on how trials
are split across workers.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .flow import FlowParams, Trajectory, physical_time, run
from .grid import GridSpec, VoxelSet, boundary_cells, measure, symdiff_measure
from .mincut import StepInstance, enumerate_minimizers, quantized_energy, solve_extremes
from .sdf import ScalarField
from .stencil import VALID_ORDERS, Stencil, build_stencil, cut_counts, default_order, local_perimeter

DISPLACEMENT_BAND = (0.4, 0.6)
DISPLACEMENT_R2 = 0.9
HOLDER_SPREAD = 2.0


@dataclass(frozen=True)
class CheckReport:
    name: str
    mode: str
    trials: int
    violations: int
    worst_case: float
    passed: bool
    fitted: dict | None = None
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"name": self.name, "mode": self.mode, "trials": self.trials,
                "violations": self.violations, "worst_case": self.worst_case,
                "fitted": self.fitted, "pass": self.passed, "details": self.details}


def trial_rng(seed: int, i: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(i)])


def _map_trials(fn, trials: int, seed: int, jobs: int, *args):
    """Run ``fn(seed, lo, hi, *args)`` over trial chunks; results in trial order."""
    if jobs <= 1 or trials < 2:
        return fn(seed, 0, trials, *args)
    bounds = np.linspace(0, trials, min(jobs, trials) + 1).astype(int)
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        parts = list(ex.map(fn, *zip(*[(seed, a, b, *args) for a, b in zip(bounds, bounds[1:])])))
    return [x for p in parts for x in p]


def _weighted(counts: np.ndarray, s: Stencil) -> Fraction:
    return sum((int(c) * Fraction(float(w)) for c, w in zip(counts, s.pair_costs)), Fraction(0))


# --- submodularity ----------------------------------------------------------

def _random_set(rng, spec: GridSpec) -> VoxelSet:
    """Random blobby set: thresholded box-smoothed noise, density varies per draw."""
    noise = rng.random(spec.shape)
    k = int(rng.integers(0, 3))
    for _ in range(k):
        for ax in range(spec.dim):
            noise = (noise + np.roll(noise, 1, ax) + np.roll(noise, -1, ax)) / 3
    q = rng.uniform(0.1, 0.9)
    return VoxelSet(spec, (noise < np.quantile(noise, q)) & spec.interior_mask())


def _submod_trials(seed, lo, hi, size, dim, order):
    spec = GridSpec((size,) * dim)
    s = build_stencil(dim, order)
    out = []
    for i in range(lo, hi):
        rng = trial_rng(seed, i)
        E, F = _random_set(rng, spec), _random_set(rng, spec)
        cu, ci = cut_counts(E | F, s), cut_counts(E & F, s)
        ce, cf = cut_counts(E, s), cut_counts(F, s)
        per_offset = bool(((cu + ci) <= (ce + cf)).all())
        gap = _weighted(cu + ci, s) - _weighted(ce + cf, s)
        out.append((per_offset and gap <= 0, float(gap)))
    return out


def check_submodularity(trials: int = 1000, size: int = 32, seed: int = 0, dim: int = 2,
                        order: int | None = None, jobs: int = 1) -> CheckReport:
    """Per(E|F) + Per(E&F) <= Per(E) + Per(F) on random pairs, exactly."""
    if size**dim > 64**2 and dim == 2 or size < 4:
        raise ValueError("size must be in [4, 64] for 2D grids")
    order = order or default_order(dim)
    res = _map_trials(_submod_trials, trials, seed, jobs, size, dim, order)
    bad = sum(1 for ok, _ in res if not ok)
    worst = max((g for _, g in res), default=0.0)
    return CheckReport("submodularity", "exact", trials, bad, worst, bad == 0,
                       details={"size": size, "dim": dim, "order": order})


# --- minimizing hull (one-sided) ------------------------------------------

def check_minimizing_hull(E: VoxelSet, stencil: Stencil, samples: int = 200,
                          radii=(1.0, 1.5, 2.0, 3.0), seed: int = 0) -> CheckReport:
    """Per(E) <= Per(E | ball) for balls near the boundary (radii in cells).

    A violation proves E is not a discrete minimizing hull; no violation
    proves nothing beyond the sampled competitors.
    """
    spec = E.spec
    base = _weighted(cut_counts(E, stencil), stencil)
    interior = spec.interior_mask()
    bc = boundary_cells(E)
    rng = trial_rng(seed, 0)
    near = _near_boundary(E, 2)
    if not len(near):
        return CheckReport("minimizing_hull", "exact", 0, 0, 0.0, True)
    picks = near[rng.integers(0, len(near), size=samples)] if samples < len(near) else near
    idx = np.indices(spec.shape)
    bad, worst, trials, first = 0, -math.inf, 0, None
    for c in picks:
        d2 = sum((idx[a] - c[a]) ** 2 for a in range(spec.dim))
        for r in radii:
            F = VoxelSet(spec, (E.mask | (d2 <= r * r)) & interior)
            gap = base - _weighted(cut_counts(F, stencil), stencil)
            trials += 1
            worst = max(worst, float(gap))
            if gap > 0:
                bad += 1
                if first is None:
                    first = {"center": c.tolist(), "r": r}
    return CheckReport("minimizing_hull", "exact", trials, bad, worst, bad == 0,
                       details={"boundary_cells": int(len(bc)), "first_violation": first})


def _near_boundary(E: VoxelSet, width: int) -> np.ndarray:
    """Non-member interior cells within ``width`` face steps of E."""
    m = E.mask.copy()
    for _ in range(width):
        g = m.copy()
        for ax in range(E.dim):
            g |= np.roll(m, 1, ax) | np.roll(m, -1, ax)
        m = g
    return np.argwhere(m & ~E.mask & E.spec.interior_mask())


# --- lattice / oracle -------------------------------------------------------

def random_instance(rng, max_free: int = 16) -> StepInstance:
    """Tiny random step instance whose energies often tie.

    Bulk weights are integer multiples of the smallest pair cost, so equal
    quantized energies are common and the minimizer lattice is non-trivial.
    """
    dim = 2 if rng.random() < 0.75 else 3
    side = 6 if dim == 2 else 4
    spec = GridSpec((side,) * dim)
    order = int(rng.choice(VALID_ORDERS[dim]))
    s = build_stencil(dim, order)
    unit = float(s.pair_costs.min()) / spec.cell_volume
    scale = float(rng.choice([1.0, 0.5, 2.0]))
    u = rng.integers(-4, 5, size=spec.shape) * unit * scale
    forced = np.zeros(spec.shape, dtype=bool)
    cells = np.argwhere(spec.interior_mask())
    nf = int(rng.integers(0, 3))
    for c in cells[rng.choice(len(cells), size=nf, replace=False)]:
        forced[tuple(c)] = True
    inst = StepInstance(spec, s, ScalarField(spec, u), VoxelSet(spec, forced))
    if int(inst.free_mask().sum()) > max_free:
        raise AssertionError("instance too large")
    return inst


def _lattice_trials(seed, lo, hi):
    out = []
    for i in range(lo, hi):
        inst = random_instance(trial_rng(seed, i))
        mins = enumerate_minimizers(inst)
        best = quantized_energy(mins[0], inst)
        sol = solve_extremes(inst)
        union = mins[0].mask.copy()
        inter = mins[0].mask.copy()
        for M in mins[1:]:
            union |= M.mask
            inter &= M.mask
        ok = sol.energy_q == best
        ok &= np.array_equal(sol.e_max.mask, union) and np.array_equal(sol.e_min.mask, inter)
        keys = {M.mask.tobytes() for M in mins}
        rng = trial_rng(seed, 10**9 + i)
        for _ in range(min(8, len(mins) ** 2)):
            a, b = (mins[j] for j in rng.integers(0, len(mins), size=2))
            ok &= (a | b).mask.tobytes() in keys and (a & b).mask.tobytes() in keys
        out.append((bool(ok), len(mins)))
    return out


def check_lattice(trials: int = 2000, seed: int = 0, jobs: int = 1) -> CheckReport:
    """Graph-cut extremes against brute-force minimizer families."""
    res = _map_trials(_lattice_trials, trials, seed, jobs)
    bad = sum(1 for ok, _ in res if not ok)
    sizes = [n for _, n in res]
    return CheckReport("lattice", "exact", trials, bad, float(bad), bad == 0,
                       details={"max_family": max(sizes, default=0),
                                "multi_minimizer_instances": sum(n > 1 for n in sizes)})


# --- comparison -------------------------------------------------------------

def _comparison_trials(seed, lo, hi, side):
    out = []
    spec = GridSpec((side, side))
    for i in range(lo, hi):
        rng = trial_rng(seed, i)
        s = build_stencil(2, int(rng.choice(VALID_ORDERS[2])))
        unit = float(s.pair_costs.min()) / spec.cell_volume
        u0 = rng.normal(0.0, 2.0, spec.shape) * unit
        if rng.random() < 0.5:
            u1 = u0 - abs(rng.normal()) * unit
        else:
            u1 = u0 - np.abs(rng.normal(0.0, 1.0, spec.shape)) * unit
        forced = (rng.random(spec.shape) < 0.05) & spec.interior_mask()
        F = VoxelSet(spec, forced)
        a = solve_extremes(StepInstance(spec, s, ScalarField(spec, u0), F))
        b = solve_extremes(StepInstance(spec, s, ScalarField(spec, u1), F))
        out.append(bool((a.e_max <= b.e_max) and (a.e_min <= b.e_min)))
    return out


def check_comparison(trials: int = 500, seed: int = 0, side: int = 24, flows: int = 4,
                     jobs: int = 1) -> CheckReport:
    """u0 >= u1 with shared forcing gives nested extreme minimizers; flows nest."""
    res = _map_trials(_comparison_trials, trials, seed, jobs, side)
    bad = sum(1 for ok in res if not ok)
    nest_bad = 0
    for k in range(flows):
        rng = trial_rng(seed, 10**9 + k)
        spec = GridSpec((side, side))
        c = np.array(spec.shape) // 2 + rng.integers(-2, 3, size=2)
        idx = np.indices(spec.shape)
        r = rng.uniform(2.0, 5.0)
        obst = VoxelSet(spec, sum((idx[a] - c[a]) ** 2 for a in range(2)) <= r * r)
        h = rng.uniform(4.0, 24.0)
        tr = run(FlowParams(h, obst, build_stencil(2, 16), max_steps=200))
        sets = tr.sets()
        nest_bad += sum(not (b <= a) for a, b in zip(sets, sets[1:]))
    total = bad + nest_bad
    return CheckReport("comparison", "exact", trials + flows, total, float(total), total == 0,
                       details={"pair_violations": bad, "nesting_violations": nest_bad})


# --- displacement and Hoelder ---------------------------------------------

def displacement_scene(n: int = 128, radius: float = 0.3):
    """Square (full interior) shrinking onto a centered disk, on ``[-1, 1]^2``.

    The corners of the square make the first step's displacement scale like
    ``sqrt(h)``; a smooth shrinking disk would instead move ``~h * curvature``.
    """
    spec = GridSpec.centered(n, 2)
    obst = VoxelSet.from_predicate(spec, lambda x, y: x * x + y * y <= radius * radius)
    return obst, build_stencil(2, default_order(2), spec.spacing)


def sweep(obstacle: VoxelSet, stencil: Stencil, hs, initial: VoxelSet | None = None,
          max_steps: int = 500) -> list:
    return [run(FlowParams(float(h), obstacle, stencil, initial=initial, max_steps=max_steps))
            for h in hs]


def _fit_loglog(x, y):
    lx, ly = np.log(x), np.log(y)
    p, c = np.polyfit(lx, ly, 1)
    pred = p * lx + c
    ss = float(((ly - ly.mean()) ** 2).sum())
    r2 = 1.0 - float(((ly - pred) ** 2).sum()) / ss if ss > 0 else 1.0
    return float(p), float(math.exp(c)), r2


def check_displacement(trajectories: list, band=DISPLACEMENT_BAND,
                       r2_min: float = DISPLACEMENT_R2) -> CheckReport:
    """Fit ``max displacement ~ gamma * h**p`` across a sweep of time steps."""
    if len(trajectories) < 4:
        raise ValueError("need >= 4 time steps")
    hs = np.array([t.params.h for t in trajectories])
    if hs.max() / hs.min() < 8 * (1 - 1e-12):
        raise ValueError("time steps must span at least a factor 8")
    disp = np.array([max((s.max_displacement for s in t.transient()), default=0.0)
                     for t in trajectories])
    dx = trajectories[0].params.obstacle.spec.spacing
    frozen = bool((disp < dx).any())
    if frozen:
        return CheckReport("displacement", "statistical", len(hs), 0, float(disp.min()), False,
                           details={"inconclusive": "flow frozen at grid scale",
                                    "h": hs.tolist(), "max_displacement": disp.tolist()})
    p, gamma, r2 = _fit_loglog(hs, disp)
    ok = band[0] <= p <= band[1] and r2 >= r2_min
    return CheckReport("displacement", "statistical", len(hs), 0 if ok else 1, float(disp.max()),
                       ok, fitted={"exponent": p, "constant": gamma, "r_squared": r2},
                       details={"h": hs.tolist(), "max_displacement": disp.tolist(),
                                "band": list(band), "r2_min": r2_min})


def holder_ratios(tr: Trajectory) -> np.ndarray:
    """``symdiff(E_i, E_j) / sqrt(|t_i - t_j|)`` over all pairs of transient sets."""
    sets = tr.sets()
    # sets[0] is the initial set; keep those up to the first repeat
    k = len(tr.transient()) + 1
    sets = sets[:k]
    h = tr.params.h
    out = []
    for i in range(k):
        for j in range(i + 1, k):
            dt = physical_time(j, h) - physical_time(i, h)
            out.append(symdiff_measure(sets[i], sets[j]) / math.sqrt(dt))
    return np.array(out)


def check_holder(tr: Trajectory, spread: float = HOLDER_SPREAD, min_steps: int = 10) -> CheckReport:
    """Sup of the pair ratios is finite and within ``spread`` of their median."""
    n = len(tr.transient())
    if n < min_steps:
        raise ValueError(f"need >= {min_steps} transient steps, got {n}")
    r = holder_ratios(tr)
    cstar = float(r.max())
    med = float(np.median(r))
    ok = math.isfinite(cstar) and (cstar == 0 or cstar <= spread * med)
    return CheckReport("holder", "statistical", len(r), 0 if ok else 1, cstar, ok,
                       fitted={"constant": cstar, "median": med},
                       details={"h": tr.params.h, "transient_steps": n, "spread": spread})


# --- density ----------------------------------------------------------------

def _unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def check_density(E: VoxelSet, stencil: Stencil, samples: int = 50, radii=None,
                  h: float | None = None, seed: int = 0) -> CheckReport:
    """Volume and perimeter density ratios at boundary cells.

    The flat-interface values are ``omega_d / 2`` for ``|E & B_r| / r**d`` and
    ``omega_(d-1)`` for ``Per(E, B_r) / r**(d-1)``; both must stay above half.
    With ``h`` given, only radii ``<= max(3 dx, sqrt(h) / 4)`` are used.
    """
    spec, d = E.spec, E.dim
    dx = spec.spacing
    radii = np.arange(3, 11) * dx if radii is None else np.asarray(radii, float)
    if h is not None:
        radii = radii[radii <= max(3 * dx, math.sqrt(h) / 4) + 1e-12] if len(radii) else radii
    vol_flat = _unit_ball_volume(d) / 2
    per_flat = _unit_ball_volume(d - 1)
    bc = boundary_cells(E)
    if not len(bc):
        return CheckReport("density", "statistical", 0, 0, 0.0, True)
    rng = trial_rng(seed, 0)
    picks = bc[rng.choice(len(bc), size=min(samples, len(bc)), replace=False)]
    idx = np.indices(spec.shape)
    vmin, pmin, bad = math.inf, math.inf, 0
    for c in picks:
        d2 = sum((idx[a] - c[a]) ** 2 for a in range(d)) * dx * dx
        for r in radii:
            v = np.count_nonzero(E.mask & (d2 <= r * r)) * spec.cell_volume / r**d
            p = local_perimeter(E, stencil, c, r) / r ** (d - 1)
            vmin, pmin = min(vmin, float(v)), min(pmin, float(p))
            bad += int(v < vol_flat / 2 or p < per_flat / 2)
    ok = bad == 0
    return CheckReport("density", "statistical", len(picks) * len(radii), bad,
                       min(vmin / vol_flat, pmin / per_flat), ok,
                       fitted={"volume_ratio_min": vmin, "perimeter_ratio_min": pmin},
                       details={"volume_flat": vol_flat, "perimeter_flat": per_flat,
                                "radii": [float(r) for r in radii]})


# --- h-monotonicity ---------------------------------------------------------

def check_h_monotone(finals: dict, stencil: Stencil) -> CheckReport:
    """``|E_h minus E_h'|`` for consecutive ``h > h'`` against one boundary layer.

    ``finals`` maps time step to the stationary set of the flow with that step.
    """
    hs = sorted(finals, reverse=True)
    if len(hs) < 2:
        raise ValueError("need >= 2 time steps")
    from .stencil import perimeter

    dx = next(iter(finals.values())).spec.spacing
    viol, bounds, bad = [], [], 0
    for a, b in zip(hs, hs[1:]):
        v = measure(finals[a] - finals[b])
        bound = perimeter(finals[b], stencil) * dx
        viol.append(v)
        bounds.append(bound)
        bad += v > bound
    return CheckReport("h_monotone", "statistical", len(viol), bad, max(viol), bad == 0,
                       details={"h": hs, "violation": viol, "layer_bound": bounds})


SUITES = ("submodularity", "lattice", "comparison", "minimizing_hull", "displacement",
          "holder", "density", "h_monotone")
