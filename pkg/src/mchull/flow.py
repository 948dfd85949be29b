"""Discrete-in-time flow with obstacle.

Each step replaces ``E`` by the largest minimizer of

    perimeter(F) + sum_{x in F} d_E(x) / h * dx**dim,   obstacle <= F,

where ``d_E`` is the signed distance to ``E``. Starting from the full
interior the steps are nested, so the flow stops after finitely many steps
on a finite grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import GridError, VoxelSet, boundary_cells, measure, subset, symdiff_measure
from .mincut import StepInstance, solve_extremes
from .sdf import confinement_weight, signed_distance
from .stencil import Stencil, cut_counts, perimeter

GAMMA_REF = 4.0
MIN_CLEARANCE = 3


def default_h(shape, spacing: float) -> float:
    """``n * dx**2`` for a grid with ``n`` cells along its longest axis.

    A flat-ish boundary of curvature ``k`` moves about ``k * h`` per step and
    stays frozen on the grid once that drops below ``dx / 2``. Features of
    size ``~n dx / 4`` therefore need ``h`` of order ``n dx**2`` to keep
    moving; much larger steps jump over thin parts of the obstacle.
    """
    return float(max(shape)) * spacing**2


def physical_time(i: int, h: float) -> float:
    if i < 0:
        raise ValueError("step index must be >= 0")
    return i * h


@dataclass(frozen=True, eq=False)
class FlowParams:
    h: float
    obstacle: VoxelSet
    stencil: Stencil
    initial: VoxelSet | None = None
    max_steps: int = 500
    gamma_ref: float = GAMMA_REF
    check_resolution: bool = True

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("h must be positive")
        if self.initial is None:
            object.__setattr__(self, "initial", VoxelSet.interior(self.obstacle.spec))
        if self.initial.spec != self.obstacle.spec:
            raise GridError("obstacle and initial set live on different grids")
        if self.stencil.dim != self.obstacle.dim:
            raise GridError("stencil dim does not match grid")
        if not subset(self.obstacle, self.initial):
            raise GridError("obstacle must be contained in the initial set")
        if not self.obstacle.is_empty() and self.obstacle.frame_distance() < MIN_CLEARANCE:
            raise GridError(f"obstacle must stay >= {MIN_CLEARANCE} cells from the frame")
        if self.check_resolution and self.gamma_ref * math.sqrt(self.h) < 3 * self.obstacle.spec.spacing:
            raise ValueError("time step too small for the grid: gamma_ref*sqrt(h) < 3 dx "
                             "(the flow would be pinned)")


@dataclass(frozen=True, eq=False)
class StepReport:
    i: int
    set: VoxelSet
    energy: float
    energy_q: int
    perimeter: float
    perimeter_q: int
    volume: float
    max_displacement: float
    symdiff_prev: float
    stats: dict = field(default_factory=dict)

    def to_dict(self, h: float) -> dict:
        return {"i": self.i, "t": physical_time(self.i, h), "energy": self.energy,
                "perimeter": self.perimeter, "volume": self.volume,
                "max_displacement": self.max_displacement, "symdiff_prev": self.symdiff_prev,
                "solver": self.stats}


@dataclass(frozen=True, eq=False)
class Trajectory:
    params: FlowParams
    steps: list
    final: VoxelSet
    stationary: bool

    def sets(self) -> list:
        """``E_0, E_1, ...`` including the initial set."""
        return [self.params.initial] + [s.set for s in self.steps]

    def transient(self) -> list:
        """Steps that changed the set."""
        return [s for s in self.steps if s.symdiff_prev > 0]

    def to_dict(self) -> dict:
        p = self.params
        return {"h": p.h, "max_steps": p.max_steps, "gamma_ref": p.gamma_ref,
                "stencil_order": p.stencil.order, "stationary": self.stationary,
                "n_steps": len(self.steps),
                "obstacle_volume": measure(p.obstacle), "initial_volume": measure(p.initial),
                "final_volume": measure(self.final),
                "steps": [s.to_dict(p.h) for s in self.steps]}


def _quantized_perimeter(E: VoxelSet, inst: StepInstance) -> int:
    return int(cut_counts(E, inst.stencil) @ inst.int_pair_costs())


def step(E_prev: VoxelSet, params: FlowParams, i: int = 1) -> StepReport:
    """One maximal-minimizer step from ``E_prev``."""
    if not subset(params.obstacle, E_prev):
        raise GridError("obstacle must be contained in the previous set")
    u = confinement_weight(E_prev, params.h)
    inst = StepInstance(E_prev.spec, params.stencil, u, params.obstacle)
    sol = solve_extremes(inst)
    E = sol.e_max
    sd = np.abs(u.values) * params.h  # |signed distance to E_prev|
    bc = boundary_cells(E)
    disp = float(sd[tuple(bc.T)].max()) if len(bc) else 0.0
    return StepReport(
        i=i, set=E, energy=sol.energy, energy_q=sol.energy_q,
        perimeter=perimeter(E, params.stencil), perimeter_q=_quantized_perimeter(E, inst),
        volume=measure(E), max_displacement=disp,
        symdiff_prev=symdiff_measure(E, E_prev), stats=sol.stats)


def run(params: FlowParams) -> Trajectory:
    """Iterate :func:`step` until the set stops changing or ``max_steps``."""
    E = params.initial
    steps = []
    stationary = False
    for i in range(1, params.max_steps + 1):
        rep = step(E, params, i)
        steps.append(rep)
        if rep.set == E:
            stationary = True
            break
        E = rep.set
    return Trajectory(params, steps, E, stationary)


def initial_perimeter_q(params: FlowParams) -> int:
    """Quantized perimeter of the initial set (same quantum as every step)."""
    u = signed_distance(params.initial)
    inst = StepInstance(params.initial.spec, params.stencil, u, params.obstacle)
    return _quantized_perimeter(params.initial, inst)
