"""Voxel grids and discrete sets of finite perimeter.

A :class:`VoxelSet` is a boolean membership array over a :class:`GridSpec`.
The outermost one-cell frame of the grid is never a member, which keeps
every set bounded and gives the flow a convex confinement box for free.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

MCHV_MAGIC = b"MCHV1\n"


class GridError(ValueError):
    """Raised for spec mismatches and invalid grid or set construction."""


@dataclass(frozen=True)
class GridSpec:
    """Uniform rectangular grid.

    ``origin`` is the physical position of the lower corner of cell 0, so
    the center of cell ``v`` sits at ``origin + (v + 0.5) * spacing``.
    """

    shape: tuple[int, ...]
    spacing: float = 1.0
    origin: tuple[float, ...] | None = None

    def __post_init__(self):
        shape = tuple(int(n) for n in self.shape)
        object.__setattr__(self, "shape", shape)
        if len(shape) not in (2, 3):
            raise GridError(f"dim must be 2 or 3, got {len(shape)}")
        if min(shape) < 4:
            raise GridError(f"every shape entry must be >= 4, got {shape}")
        if not self.spacing > 0:
            raise GridError(f"spacing must be positive, got {self.spacing}")
        object.__setattr__(self, "spacing", float(self.spacing))
        origin = (0.0,) * len(shape) if self.origin is None else self.origin
        if len(origin) != len(shape):
            raise GridError("origin length does not match dim")
        object.__setattr__(self, "origin", tuple(float(o) for o in origin))

    @classmethod
    def centered(cls, n: int, dim: int, half_width: float = 1.0) -> "GridSpec":
        """``n**dim`` grid covering the box ``[-half_width, half_width]^dim``."""
        dx = 2.0 * half_width / n
        return cls((n,) * dim, dx, (-half_width,) * dim)

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def axis_centers(self, axis: int) -> np.ndarray:
        return self.origin[axis] + (np.arange(self.shape[axis]) + 0.5) * self.spacing

    def centers(self) -> tuple[np.ndarray, ...]:
        """Cell-center coordinates as broadcastable open-mesh arrays."""
        return tuple(np.ix_(*(self.axis_centers(a) for a in range(self.dim))))

    def center_of(self, index: Sequence[int]) -> np.ndarray:
        return np.asarray(self.origin) + (np.asarray(index, dtype=float) + 0.5) * self.spacing

    def interior_mask(self) -> np.ndarray:
        m = np.zeros(self.shape, dtype=bool)
        m[(slice(1, -1),) * self.dim] = True
        return m

    def to_dict(self) -> dict:
        return {"dim": self.dim, "shape": list(self.shape), "spacing": self.spacing,
                "origin": list(self.origin)}


@dataclass(frozen=True, eq=False)
class VoxelSet:
    """Immutable set of grid cells stored as a read-only boolean array."""

    spec: GridSpec
    mask: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.array(self.mask, dtype=bool, copy=True)
        if m.shape != self.spec.shape:
            raise GridError(f"mask shape {m.shape} does not match spec {self.spec.shape}")
        if (m & ~self.spec.interior_mask()).any():
            raise GridError("set touches the grid frame")
        m.setflags(write=False)
        object.__setattr__(self, "mask", m)

    @classmethod
    def empty(cls, spec: GridSpec) -> "VoxelSet":
        return cls(spec, np.zeros(spec.shape, dtype=bool))

    @classmethod
    def interior(cls, spec: GridSpec) -> "VoxelSet":
        """The full interior: every cell except the frame."""
        return cls(spec, spec.interior_mask())

    @classmethod
    def from_predicate(cls, spec: GridSpec, pred: Callable[..., np.ndarray]) -> "VoxelSet":
        """Cell-center rasterization of ``{p : pred(*p)}``.

        Raises :class:`GridError` if the set reaches the frame.
        """
        inside = np.broadcast_to(pred(*spec.centers()), spec.shape)
        return cls(spec, inside)

    @property
    def dim(self) -> int:
        return self.spec.dim

    def count(self) -> int:
        return int(self.mask.sum())

    def is_empty(self) -> bool:
        return not self.mask.any()

    def _check(self, other: "VoxelSet") -> None:
        if self.spec != other.spec:
            raise GridError("spec mismatch")

    def __or__(self, other: "VoxelSet") -> "VoxelSet":
        self._check(other)
        return VoxelSet(self.spec, self.mask | other.mask)

    def __and__(self, other: "VoxelSet") -> "VoxelSet":
        self._check(other)
        return VoxelSet(self.spec, self.mask & other.mask)

    def __sub__(self, other: "VoxelSet") -> "VoxelSet":
        self._check(other)
        return VoxelSet(self.spec, self.mask & ~other.mask)

    def __xor__(self, other: "VoxelSet") -> "VoxelSet":
        self._check(other)
        return VoxelSet(self.spec, self.mask ^ other.mask)

    def __le__(self, other: "VoxelSet") -> bool:
        return subset(self, other)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, VoxelSet):
            return NotImplemented
        return self.spec == other.spec and np.array_equal(self.mask, other.mask)

    __hash__ = None  # type: ignore[assignment]

    def complement(self) -> "VoxelSet":
        """Complement within the interior."""
        return VoxelSet(self.spec, self.spec.interior_mask() & ~self.mask)

    def shifted(self, offset: Sequence[int]) -> "VoxelSet":
        """Translate by a lattice vector; raises if the result leaves the interior."""
        idx = np.argwhere(self.mask) + np.asarray(offset, dtype=int)
        m = np.zeros(self.spec.shape, dtype=bool)
        if len(idx):
            if (idx < 1).any() or (idx >= np.asarray(self.spec.shape) - 1).any():
                raise GridError("shifted set leaves the interior")
            m[tuple(idx.T)] = True
        return VoxelSet(self.spec, m)

    def frame_distance(self) -> int:
        """Smallest number of cells between a member and the grid edge (inf if empty)."""
        idx = np.argwhere(self.mask)
        if not len(idx):
            return np.iinfo(np.int64).max
        hi = np.asarray(self.spec.shape) - 1 - idx
        return int(min(idx.min(), hi.min()))


def measure(E: VoxelSet) -> float:
    """Member count times the cell volume."""
    return E.count() * E.spec.cell_volume


def symdiff_measure(E: VoxelSet, F: VoxelSet) -> float:
    E._check(F)
    return int(np.count_nonzero(E.mask ^ F.mask)) * E.spec.cell_volume


def subset(E: VoxelSet, F: VoxelSet) -> bool:
    E._check(F)
    return not (E.mask & ~F.mask).any()


def face_neighbors_outside(mask: np.ndarray) -> np.ndarray:
    """Cells of ``mask`` with at least one face neighbor outside it (grid edge included)."""
    p = np.pad(mask, 1, constant_values=False)
    inner = (slice(1, -1),) * mask.ndim
    out = np.zeros_like(mask)
    for ax in range(mask.ndim):
        for step in (-1, 1):
            out |= ~np.roll(p, step, axis=ax)[inner]
    return mask & out


def boundary_cells(E: VoxelSet) -> np.ndarray:
    """Indices ``(N, dim)`` of members with a face-adjacent non-member."""
    return np.argwhere(face_neighbors_outside(E.mask))


def dilate(E: VoxelSet, eps: float) -> VoxelSet:
    """Cells whose center lies within ``eps`` of some member center."""
    if eps < 0:
        raise GridError("eps must be >= 0")
    if E.is_empty() or eps == 0:
        return E
    from .sdf import distance_transform

    d = distance_transform(E).values
    grown = d <= eps
    if (grown & ~E.spec.interior_mask()).any():
        raise GridError("obstacle too large for domain")
    return VoxelSet(E.spec, grown)


# --- file formats ---------------------------------------------------------

def _fmt(x: float) -> str:
    return repr(float(x))


def mchv_bytes(E: VoxelSet) -> bytes:
    s = E.spec
    header = "dim={} shape={} spacing={} origin={}\n".format(
        s.dim, ",".join(str(n) for n in s.shape), _fmt(s.spacing),
        ",".join(_fmt(o) for o in s.origin))
    # first axis fastest == Fortran order
    bits = np.packbits(E.mask.ravel(order="F"))
    return MCHV_MAGIC + header.encode("ascii") + bits.tobytes()


def write_mchv(path: str | Path, E: VoxelSet) -> None:
    Path(path).write_bytes(mchv_bytes(E))


def parse_mchv(data: bytes) -> VoxelSet:
    if not data.startswith(MCHV_MAGIC):
        raise GridError("not an MCHV volume (bad magic)")
    rest = data[len(MCHV_MAGIC):]
    nl = rest.find(b"\n")
    if nl < 0:
        raise GridError("truncated MCHV header")
    fields = dict(tok.split("=", 1) for tok in rest[:nl].decode("ascii").split())
    try:
        dim = int(fields["dim"])
        shape = tuple(int(v) for v in fields["shape"].split(","))
        spacing = float(fields["spacing"])
        origin = tuple(float(v) for v in fields["origin"].split(","))
    except (KeyError, ValueError) as exc:
        raise GridError(f"malformed MCHV header: {exc}") from None
    if dim != len(shape):
        raise GridError("MCHV dim does not match shape")
    spec = GridSpec(shape, spacing, origin)
    n = spec.size
    payload = np.frombuffer(rest[nl + 1:], dtype=np.uint8)
    if payload.size != (n + 7) // 8:
        raise GridError(f"MCHV payload has {payload.size} bytes, expected {(n + 7) // 8}")
    bits = np.unpackbits(payload)[:n].astype(bool)
    return VoxelSet(spec, bits.reshape(shape, order="F"))


def read_mchv(path: str | Path) -> VoxelSet:
    return parse_mchv(Path(path).read_bytes())


def pgm_bytes(E: VoxelSet) -> bytes:
    """Binary PGM of a 2D set; image column = first axis, row = second axis."""
    if E.dim != 2:
        raise GridError("PGM export needs a 2D set")
    img = np.where(E.mask.T, 255, 0).astype(np.uint8)
    h, w = img.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + img.tobytes()


def write_pgm(path: str | Path, E: VoxelSet) -> None:
    Path(path).write_bytes(pgm_bytes(E))
