"""Exact minimization of one time step by minimum cut.

The step energy of a set ``E`` containing the obstacle is

    G(E) = perimeter(E) + sum_{x in E} u(x) * dx**dim.

All pair costs are nonnegative, so ``G`` is submodular and a minimum s-t
cut minimizes it exactly. The minimizers form a lattice. Its smallest
element is the source-reachable side of the residual graph after max-flow;
its largest is the complement of the set that still reaches the sink.

Capacities are quantized to int64 multiples of ``quantum = 1e-6 * (smallest
pair cost)`` before solving. Every exact statement (lattice closure,
comparison, oracle agreement) is made on the quantized energy, where ties
are genuine ties.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

from . import maxflow
from .grid import GridError, GridSpec, VoxelSet
from .sdf import ScalarField
from .stencil import Stencil, cut_counts, perimeter

QUANTUM_FRACTION = 1e-6
_PAD = 2


@dataclass(frozen=True, eq=False)
class StepInstance:
    """Data of one step: ``min G(E)`` over ``forced_in <= E <= interior``."""

    spec: GridSpec
    stencil: Stencil
    u: ScalarField
    forced_in: VoxelSet

    def __post_init__(self):
        if self.u.spec != self.spec or self.forced_in.spec != self.spec:
            raise GridError("step instance spec mismatch")
        if self.stencil.dim != self.spec.dim:
            raise GridError("stencil dim does not match grid")

    @property
    def quantum(self) -> float:
        return QUANTUM_FRACTION * float(self.stencil.pair_costs.min())

    def int_pair_costs(self) -> np.ndarray:
        return np.rint(self.stencil.pair_costs / self.quantum).astype(np.int64)

    def int_bulk(self) -> np.ndarray:
        return np.rint(self.u.values * self.spec.cell_volume / self.quantum).astype(np.int64)

    def free_mask(self) -> np.ndarray:
        return self.spec.interior_mask() & ~self.forced_in.mask


@dataclass(frozen=True, eq=False)
class StepSolution:
    e_min: VoxelSet
    e_max: VoxelSet
    energy: float
    energy_q: int
    flow_value: float
    stats: dict = field(default_factory=dict)


def step_energy(E: VoxelSet, inst: StepInstance) -> float:
    if E.spec != inst.spec:
        raise GridError("spec mismatch")
    bulk = float(inst.u.values[E.mask].sum()) * inst.spec.cell_volume
    return perimeter(E, inst.stencil) + bulk


def quantized_energy(E: VoxelSet, inst: StepInstance) -> int:
    """Step energy in integer quanta (what the solver minimizes exactly)."""
    if E.spec != inst.spec:
        raise GridError("spec mismatch")
    cut = int(cut_counts(E, inst.stencil) @ inst.int_pair_costs())
    return cut + int(inst.int_bulk()[E.mask].sum())


def _directions(stencil: Stencil):
    offs = np.concatenate([stencil.offsets, -stencil.offsets])
    K = len(stencil.offsets)
    opp = np.concatenate([np.arange(K, 2 * K), np.arange(K)]).astype(np.int64)
    return offs, opp


def _build(inst: StepInstance):
    """Node arrays for the free cells (before persistency fixing)."""
    spec = inst.spec
    offs, opp = _directions(inst.stencil)
    costs = np.tile(inst.int_pair_costs(), 2)
    pshape = tuple(n + 2 * _PAD for n in spec.shape)
    inner = (slice(_PAD, -_PAD),) * spec.dim

    free = np.zeros(pshape, dtype=bool)
    free[inner] = inst.free_mask()
    forced = np.zeros(pshape, dtype=bool)
    forced[inner] = inst.forced_in.mask

    node_of = np.full(pshape, -1, dtype=np.int64)
    cells = np.flatnonzero(free)  # padded flat indices, C order
    n = len(cells)
    node_of.ravel()[cells] = np.arange(n)

    strides = np.array([int(np.prod(pshape[a + 1:])) for a in range(spec.dim)])
    delta = offs @ strides
    nbr_flat = cells[:, None] + delta[None, :]
    nbr = node_of.ravel()[nbr_flat]
    to_forced = forced.ravel()[nbr_flat]
    to_out = (nbr < 0) & ~to_forced

    bulk = inst.int_bulk()[inst.free_mask()]  # same C order as `cells`
    net = -bulk + (to_forced * costs).sum(axis=1) - (to_out * costs).sum(axis=1)
    return cells, nbr, costs, opp, net.astype(np.int64), pshape, inner


def solve_extremes(inst: StepInstance) -> StepSolution:
    """Smallest and largest minimizers of the step energy."""
    cells, nbr, costs, opp, net, pshape, inner = _build(inst)
    n = len(cells)
    A = len(opp)
    state = np.zeros(n, dtype=np.int64)
    if n:
        maxflow.fix_persistent(net, nbr, costs, state)
    live = np.flatnonzero(state == 0)
    remap = np.full(n + 1, -1, dtype=np.int64)
    remap[live] = np.arange(len(live))
    sub = nbr[live]
    head = np.where(sub >= 0, remap[sub], -1)
    head = np.where(head >= 0, head, -1).astype(np.int64)
    rcap = np.where(head >= 0, costs[None, :], 0).astype(np.int64).ravel()
    head = head.ravel()
    tr = net[live].copy()
    flow, naug = (0, 0)
    if len(live):
        flow, naug = maxflow.bk_maxflow(head, rcap, tr, opp)
        low = maxflow.source_reachable(head, rcap, tr, A)
        high = ~maxflow.sink_reaching(head, rcap, tr, opp)
    else:
        low = high = np.zeros(0, dtype=bool)

    def assemble(chosen_live: np.ndarray) -> VoxelSet:
        member = state == 1
        member[live[chosen_live]] = True
        p = np.zeros(pshape, dtype=bool)
        p.ravel()[cells[member]] = True
        return VoxelSet(inst.spec, p[inner] | inst.forced_in.mask)

    e_min = assemble(low)
    e_max = assemble(high)
    stats = {
        "nodes": int(n),
        "solver_nodes": int(len(live)),
        "edges": int(np.count_nonzero(head >= 0) // 2),
        "fixed_in": int(np.count_nonzero(state == 1)),
        "fixed_out": int(np.count_nonzero(state == 2)),
        "augmentations": int(naug),
        "quantum": inst.quantum,
    }
    return StepSolution(e_min, e_max, step_energy(e_max, inst), quantized_energy(e_max, inst),
                        float(flow) * inst.quantum, stats)


# --- brute-force oracle ---------------------------------------------------

@numba.njit(cache=True)
def _gray_min(unary, nbr, cost, base):
    m = unary.shape[0]
    A = nbr.shape[1]
    s = np.zeros(m, np.bool_)
    e = base
    best = e
    total = numba.int64(1) << m
    for i in range(1, total):
        x = 0
        t = i
        while (t & 1) == 0:
            t >>= 1
            x += 1
        d = unary[x]
        for k in range(A):
            j = nbr[x, k]
            if j >= 0:
                d += cost[k] if not s[j] else -cost[k]
        if s[x]:
            e -= d
            s[x] = False
        else:
            e += d
            s[x] = True
        if e < best:
            best = e
    return best


@numba.njit(cache=True)
def _gray_collect(unary, nbr, cost, base, target, out):
    m = unary.shape[0]
    A = nbr.shape[1]
    s = np.zeros(m, np.bool_)
    e = base
    cnt = 0
    code = numba.int64(0)
    if e == target:
        if cnt < out.shape[0]:
            out[cnt] = code
        cnt += 1
    total = numba.int64(1) << m
    for i in range(1, total):
        x = 0
        t = i
        while (t & 1) == 0:
            t >>= 1
            x += 1
        d = unary[x]
        for k in range(A):
            j = nbr[x, k]
            if j >= 0:
                d += cost[k] if not s[j] else -cost[k]
        if s[x]:
            e -= d
            s[x] = False
        else:
            e += d
            s[x] = True
        code ^= numba.int64(1) << x
        if e == target:
            if cnt < out.shape[0]:
                out[cnt] = code
            cnt += 1
    return cnt


def _oracle_parts(inst: StepInstance):
    """Energy of ``forced_in + S`` as base + unary(S) + free-free cut pairs.

    Written independently of :func:`_build`: pairs are walked offset by
    offset on the unpadded index grid.
    """
    spec = inst.spec
    free_idx = np.argwhere(inst.free_mask())
    m = len(free_idx)
    pos = {tuple(c): i for i, c in enumerate(free_idx)}
    forced = inst.forced_in.mask
    shape = np.array(spec.shape)
    ipc = inst.int_pair_costs()
    K = len(ipc)
    unary = inst.int_bulk()[tuple(free_idx.T)].astype(np.int64) if m else np.zeros(0, np.int64)
    nbr = np.full((m, 2 * K), -1, dtype=np.int64)
    for i, c in enumerate(free_idx):
        for k, e in enumerate(inst.stencil.offsets):
            for sgn, slot in ((1, k), (-1, k + K)):
                y = c + sgn * e
                inside = bool(((y >= 0) & (y < shape)).all())
                if inside and tuple(y) in pos:
                    nbr[i, slot] = pos[tuple(y)]
                elif inside and forced[tuple(y)]:
                    unary[i] -= ipc[k]   # pair with the obstacle is cut unless x joins
                else:
                    unary[i] += ipc[k]   # pair with a non-member is cut once x joins
    cells = free_idx
    base = quantized_energy(inst.forced_in, inst)
    return cells, nbr, np.tile(ipc, 2), unary, base


def enumerate_minimizers(inst: StepInstance, cap: int = 24) -> list[VoxelSet]:
    """Every feasible minimizer, by exhaustive enumeration of the free cells."""
    if cap > 24:
        raise ValueError("cap must be <= 24")
    cells, nbr, costs, unary, base = _oracle_parts(inst)
    m = len(cells)
    if m > cap:
        raise ValueError(f"too many free cells for enumeration: {m} > {cap}")
    if not m:
        return [inst.forced_in]
    best = _gray_min(unary, nbr, costs, base)
    out = np.empty(1 << 16, dtype=np.int64)
    cnt = _gray_collect(unary, nbr, costs, base, best, out)
    if cnt > len(out):
        out = np.empty(cnt, dtype=np.int64)
        _gray_collect(unary, nbr, costs, base, best, out)
    result = []
    bits = ((out[:cnt, None] >> np.arange(m)[None, :]) & 1).astype(bool)
    for row in bits:
        mask = inst.forced_in.mask.copy()
        mask[tuple(cells[row].T)] = True
        result.append(VoxelSet(inst.spec, mask))
    return result


def brute_force_minimum(inst: StepInstance, cap: int = 24) -> int:
    """Minimum quantized energy over all feasible sets."""
    cells, nbr, costs, unary, base = _oracle_parts(inst)
    if len(cells) > cap:
        raise ValueError(f"too many free cells for enumeration: {len(cells)} > {cap}")
    return int(_gray_min(unary, nbr, costs, base)) if len(cells) else int(base)
