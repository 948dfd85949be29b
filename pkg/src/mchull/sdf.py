"""Exact Euclidean distance transforms and the signed distance weight.

Squared distances are computed in integer cell units with the separable
lower-envelope transform of Felzenszwalb and Huttenlocher; parabola
breakpoints are compared as exact rationals, so the result equals the
all-pairs minimum exactly. Physical distances are ``dx * sqrt(d2)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .grid import GridError, GridSpec, VoxelSet

_INF = np.int64(1) << 60


@dataclass(frozen=True, eq=False)
class ScalarField:
    spec: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.spec.shape:
            raise GridError("field shape does not match spec")
        if not np.isfinite(v).all():
            raise GridError("field has non-finite values")
        object.__setattr__(self, "values", v)

    def __truediv__(self, c: float) -> "ScalarField":
        return ScalarField(self.spec, self.values / c)

    def to_text(self, fmt: str = "%.6g") -> str:
        """ASCII dump for debugging; 3D fields are written slice by slice."""
        lines = [f"# shape={','.join(map(str, self.spec.shape))} spacing={self.spec.spacing!r}"]
        arr = self.values if self.spec.dim == 3 else self.values[..., None]
        for k in range(arr.shape[2]):
            if self.spec.dim == 3:
                lines.append(f"# slice {k}")
            for row in arr[:, :, k]:
                lines.append(" ".join(fmt % x for x in row))
        return "\n".join(lines) + "\n"


@numba.njit(cache=True)
def _envelope_rows(f):
    """In-place 1D squared-distance transform of every row of ``f``."""
    nrows, n = f.shape
    v = np.empty(n, np.int64)
    zn = np.empty(n + 1, np.int64)  # breakpoint numerators
    zd = np.empty(n + 1, np.int64)  # breakpoint denominators (> 0)
    out = np.empty(n, np.int64)
    for r in range(nrows):
        row = f[r]
        k = -1
        for q in range(n):
            if row[q] >= _INF:
                continue
            if k < 0:
                k = 0
                v[0] = q
                continue
            while True:
                p = v[k]
                num = (row[q] + q * q) - (row[p] + p * p)
                den = 2 * (q - p)
                # drop p while its breakpoint with q is at or left of p's own left breakpoint
                if k > 0 and num * zd[k] <= zn[k] * den:
                    k -= 1
                    continue
                k += 1
                v[k] = q
                zn[k] = num
                zd[k] = den
                break
        if k < 0:
            continue
        j = 0
        for q in range(n):
            while j < k and zn[j + 1] < q * zd[j + 1]:
                j += 1
            p = v[j]
            out[q] = (q - p) * (q - p) + row[p]
        for q in range(n):
            row[q] = out[q]


def squared_distance_cells(mask: np.ndarray) -> np.ndarray:
    """Squared distance (in cells^2, int64) from every cell to the nearest True cell."""
    if not mask.any():
        raise GridError("distance transform of an empty mask")
    f = np.where(mask, 0, _INF).astype(np.int64)
    for ax in range(mask.ndim):
        moved = np.ascontiguousarray(np.moveaxis(f, ax, -1))
        flat = moved.reshape(-1, moved.shape[-1])
        _envelope_rows(flat)
        f = np.moveaxis(flat.reshape(moved.shape), -1, ax)
    return np.ascontiguousarray(f)


def distance_transform(mask: VoxelSet) -> ScalarField:
    """Euclidean distance from each cell center to the nearest member center."""
    d2 = squared_distance_cells(mask.mask)
    return ScalarField(mask.spec, mask.spec.spacing * np.sqrt(d2))


def signed_distance(E: VoxelSet) -> ScalarField:
    """Half-cell-offset signed distance: negative on members, positive elsewhere.

    A cell's magnitude is its center's distance to the nearest cell of the
    opposite phase minus ``dx/2``. The opposite phase of a member is every
    non-member of the grid, frame included, so the full interior is a valid
    input. No value is zero.
    """
    if E.is_empty():
        raise GridError("boundary undefined: empty set")
    dx = E.spec.spacing
    outside = dx * np.sqrt(squared_distance_cells(E.mask)) - 0.5 * dx
    inside = dx * np.sqrt(squared_distance_cells(~E.mask)) - 0.5 * dx
    return ScalarField(E.spec, np.where(E.mask, -inside, outside))


def confinement_weight(E_prev: VoxelSet, h: float) -> ScalarField:
    """Bulk weight ``u = d / h`` of one time step."""
    if not h > 0:
        raise ValueError("time step h must be positive")
    return signed_distance(E_prev) / h
