"""Discrete perimeter from multi-neighborhood cut weights.

The perimeter of a voxel set is the sum, over unordered cell pairs
``(x, x + e_k)`` with exactly one member, of the pair cost ``w_k / |e_k|``.
Cells outside the grid count as non-members.

Per-pair costs are ``p_k * dx**(dim-1)`` with dimensionless coefficients
``p_k`` chosen so that the cut density of a half-space with unit normal
``n``, ``sum_k p_k |<n, e_k>|``, is close to 1 for every ``n``:

* orders 4 and 6 use the axis neighbors only, with ``p = 1`` (exact on
  axis-aligned boxes, worst on diagonals);
* orders 8, 16, 18 and 26 use minimax coefficients, i.e. the nonnegative
  ``p`` minimizing ``max_n |density(n) - 1|``. They were obtained by linear
  programming over a dense sampling of the normals' fundamental region and
  are frozen here; ``tests/test_stencil.py`` re-derives them.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .grid import GridError, VoxelSet

VALID_ORDERS = {2: (4, 8, 16), 3: (6, 18, 26)}

# offset family -> per-pair coefficient, keyed by (dim, order)
_COEFFS = {
    (2, 4): {"axis": 1.0},
    (2, 8): {"axis": 0.3978247347593161, "diag": 0.28130456767205186},
    (2, 16): {"axis": 0.23286146188128087, "diag": 0.06435861689184635,
              "knight": 0.10414419820697729},
    (3, 6): {"axis": 1.0},
    (3, 18): {"axis": 0.14290939576721284, "diag": 0.19521786505749755},
    (3, 26): {"axis": 0.1477990313809856, "diag": 0.12396780896460324,
              "body": 0.0779294225565568},
}


def _family(e: tuple[int, ...]) -> str:
    a = sorted(abs(c) for c in e if c)
    if a == [1]:
        return "axis"
    if a == [1, 1]:
        return "diag"
    if a == [1, 2]:
        return "knight"
    if a == [1, 1, 1]:
        return "body"
    return "other"


def _canonical_offsets(dim: int) -> list[tuple[int, ...]]:
    """Integer vectors with entries in [-2, 2], first nonzero entry positive."""
    out = []
    for e in itertools.product(range(-2, 3), repeat=dim):
        nz = [c for c in e if c]
        if nz and nz[0] > 0:
            out.append(e)
    return out


@dataclass(frozen=True, eq=False)
class Stencil:
    """Neighbor offsets (antipodes collapsed) and their Crofton-style weights.

    ``weights[k]`` carries units of length^(dim-1); the cost of one cut pair
    along ``offsets[k]`` is ``weights[k] / |offsets[k]|``.
    """

    dim: int
    order: int
    spacing: float
    offsets: np.ndarray
    weights: np.ndarray

    @property
    def norms(self) -> np.ndarray:
        return np.sqrt((self.offsets**2).sum(axis=1))

    @property
    def pair_costs(self) -> np.ndarray:
        return self.weights / self.norms

    def density(self, normal) -> float:
        """Cut cost per unit area of a flat interface with the given normal."""
        n = np.asarray(normal, dtype=float)
        n = n / np.linalg.norm(n)
        scale = self.spacing ** (self.dim - 1)
        return float(np.abs(self.offsets @ n) @ self.pair_costs) / scale

    def to_dict(self) -> dict:
        return {"dim": self.dim, "order": self.order, "spacing": self.spacing,
                "offsets": self.offsets.tolist(), "weights": self.weights.tolist()}


def build_stencil(dim: int, order: int, spacing: float = 1.0) -> Stencil:
    if order not in VALID_ORDERS.get(dim, ()):
        raise ValueError(f"invalid stencil order {order} for dim {dim}; "
                         f"valid orders: {VALID_ORDERS.get(dim, ())}")
    coeffs = _COEFFS[(dim, order)]
    offs = [e for e in _canonical_offsets(dim) if _family(e) in coeffs]
    offsets = np.array(offs, dtype=np.int64)
    p = np.array([coeffs[_family(e)] for e in offs])
    norms = np.sqrt((offsets**2).sum(axis=1))
    weights = p * norms * spacing ** (dim - 1)
    return Stencil(dim, order, float(spacing), offsets, weights)


def default_order(dim: int) -> int:
    return 16 if dim == 2 else 26


def _pair_slices(e, shape):
    """Slices a, b into an array of ``shape`` so that ``b`` is ``a`` shifted by ``e``."""
    sa, sb = [], []
    for c, n in zip(e, shape):
        c = int(c)
        sa.append(slice(max(0, -c), n - max(0, c)))
        sb.append(slice(max(0, c), n - max(0, -c)))
    return tuple(sa), tuple(sb)


def _padded(mask: np.ndarray) -> np.ndarray:
    return np.pad(mask, 2, constant_values=False)


def cut_counts(E: VoxelSet, s: Stencil) -> np.ndarray:
    """Number of cut pairs per stencil offset (exact integers)."""
    if s.dim != E.dim:
        raise GridError(f"stencil dim {s.dim} does not match set dim {E.dim}")
    p = _padded(E.mask)
    out = np.empty(len(s.offsets), dtype=np.int64)
    for k, e in enumerate(s.offsets):
        a, b = _pair_slices(e, p.shape)
        out[k] = np.count_nonzero(p[a] ^ p[b])
    return out


def perimeter(E: VoxelSet, s: Stencil) -> float:
    return float(cut_counts(E, s) @ s.pair_costs)


def exact_perimeter(E: VoxelSet, s: Stencil) -> Fraction:
    """Perimeter as an exact rational in the binary values of the pair costs."""
    return sum((int(c) * Fraction(float(w)) for c, w in zip(cut_counts(E, s), s.pair_costs)),
               Fraction(0))


def local_perimeter(E: VoxelSet, s: Stencil, center, r: float) -> float:
    """Cut cost restricted to pairs whose two centers lie within ``r`` of ``center``."""
    if r <= 0:
        raise ValueError("r must be positive")
    if s.dim != E.dim:
        raise GridError("stencil/set dim mismatch")
    p = _padded(E.mask)
    c = np.asarray(center) + 2
    axes = np.ix_(*(np.arange(n) - ci for n, ci in zip(p.shape, c)))
    d2 = sum(a.astype(float) ** 2 for a in axes) * E.spec.spacing**2
    ball = d2 <= r * r
    total = 0.0
    for e, cost in zip(s.offsets, s.pair_costs):
        a, b = _pair_slices(e, p.shape)
        total += np.count_nonzero((p[a] ^ p[b]) & ball[a] & ball[b]) * cost
    return float(total)
