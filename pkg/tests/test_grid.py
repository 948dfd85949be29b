import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mchull.grid import (
    GridError, GridSpec, VoxelSet, boundary_cells, dilate, measure, mchv_bytes, parse_mchv,
    pgm_bytes, read_mchv, subset, symdiff_measure, write_mchv,
)


def disk(spec, r, c=None):
    c = np.array(spec.shape) / 2 if c is None else np.asarray(c, float)
    idx = np.indices(spec.shape) + 0.5
    d2 = sum((idx[a] - c[a]) ** 2 for a in range(spec.dim)) * spec.spacing**2
    return VoxelSet(spec, d2 <= (r * spec.spacing) ** 2)


@st.composite
def set_pairs(draw, shape=(10, 9)):
    spec = GridSpec(shape)
    inner = tuple(n - 2 for n in shape)
    a = draw(st.lists(st.booleans(), min_size=int(np.prod(inner)), max_size=int(np.prod(inner))))
    b = draw(st.lists(st.booleans(), min_size=int(np.prod(inner)), max_size=int(np.prod(inner))))
    out = []
    for bits in (a, b):
        m = np.zeros(shape, dtype=bool)
        m[1:-1, 1:-1] = np.array(bits).reshape(inner)
        out.append(VoxelSet(spec, m))
    return out


class TestGridSpec:
    def test_rejects_bad_dim_shape_spacing(self):
        with pytest.raises(GridError):
            GridSpec((8,))
        with pytest.raises(GridError):
            GridSpec((8, 3))
        with pytest.raises(GridError):
            GridSpec((8, 8), spacing=0.0)

    def test_center_formula_and_bijection(self):
        spec = GridSpec((6, 5), 0.5, (1.0, -2.0))
        assert np.allclose(spec.center_of((0, 0)), [1.25, -1.75])
        assert np.allclose(spec.center_of((5, 4)), [1.0 + 5.5 * 0.5, -2.0 + 4.5 * 0.5])
        xs, ys = spec.centers()
        idx = np.rint((xs - 1.0) / 0.5 - 0.5).astype(int)
        assert (idx.ravel() == np.arange(6)).all()

    def test_centered_covers_box(self):
        spec = GridSpec.centered(64, 3)
        c = spec.axis_centers(0)
        assert c[0] == pytest.approx(-1 + spec.spacing / 2)
        assert c.mean() == pytest.approx(0.0, abs=1e-15)


class TestVoxelSet:
    def test_frame_cells_rejected(self):
        spec = GridSpec((6, 6))
        m = np.zeros(spec.shape, bool)
        m[0, 3] = True
        with pytest.raises(GridError):
            VoxelSet(spec, m)

    def test_mask_is_read_only(self):
        E = VoxelSet.interior(GridSpec((6, 6)))
        with pytest.raises(ValueError):
            E.mask[2, 2] = False

    def test_spec_mismatch(self):
        a = VoxelSet.empty(GridSpec((6, 6)))
        b = VoxelSet.empty(GridSpec((6, 7)))
        with pytest.raises(GridError):
            symdiff_measure(a, b)
        with pytest.raises(GridError):
            subset(a, b)

    def test_shift_out_of_interior(self):
        spec = GridSpec((6, 6))
        m = np.zeros(spec.shape, bool)
        m[4, 4] = True
        with pytest.raises(GridError):
            VoxelSet(spec, m).shifted((1, 0))


class TestMeasure:
    def test_empty_and_count(self):
        spec = GridSpec((6, 6))
        assert measure(VoxelSet.empty(spec)) == 0
        assert measure(VoxelSet.interior(spec)) == 16.0

    def test_disk_area(self):
        spec = GridSpec((64, 64))
        assert measure(disk(spec, 10)) == pytest.approx(np.pi * 100, rel=0.02)

    def test_annulus(self):
        spec = GridSpec((64, 64))
        a, b = disk(spec, 10), disk(spec, 8)
        assert symdiff_measure(a, b) == pytest.approx(np.pi * (100 - 64), rel=0.05)
        assert subset(b, a)

    def test_disjoint_and_identity(self):
        spec = GridSpec((32, 32))
        a, b = disk(spec, 4, (8, 8)), disk(spec, 4, (24, 24))
        assert symdiff_measure(a, a) == 0
        assert symdiff_measure(a, b) == measure(a) + measure(b)

    @given(set_pairs())
    @settings(max_examples=60, deadline=None)
    def test_modularity_of_measure(self, pair):
        E, F = pair
        assert measure(E | F) + measure(E & F) == measure(E) + measure(F)
        if subset(E, F):
            assert measure(E) <= measure(F)
        assert subset(E & F, E) and subset(E, E | F)


class TestBoundaryAndDilate:
    def test_shell_of_full_interior(self):
        spec = GridSpec((8, 8))
        bc = boundary_cells(VoxelSet.interior(spec))
        assert len(bc) == 6 * 6 - 4 * 4

    def test_single_cell(self):
        spec = GridSpec((6, 6))
        m = np.zeros(spec.shape, bool)
        m[2, 3] = True
        assert boundary_cells(VoxelSet(spec, m)).tolist() == [[2, 3]]

    def test_disk_boundary_count(self):
        spec = GridSpec((64, 64))
        assert len(boundary_cells(disk(spec, 10))) == pytest.approx(2 * np.pi * 10, rel=0.3)

    @given(set_pairs())
    @settings(max_examples=40, deadline=None)
    def test_boundary_empty_iff_empty(self, pair):
        E = pair[0]
        assert (len(boundary_cells(E)) == 0) == E.is_empty()

    def test_dilate_single_cell(self):
        for dim, k in ((2, 4), (3, 6)):
            spec = GridSpec((7,) * dim)
            m = np.zeros(spec.shape, bool)
            m[(3,) * dim] = True
            assert dilate(VoxelSet(spec, m), 1.0).count() == 1 + k

    def test_dilate_disk(self):
        spec = GridSpec((64, 64))
        grown = dilate(disk(spec, 8), 2.0)
        assert symdiff_measure(grown, disk(spec, 10)) <= 0.03 * measure(disk(spec, 10))

    def test_dilate_zero_and_too_large(self):
        spec = GridSpec((16, 16))
        E = disk(spec, 3)
        assert dilate(E, 0.0) == E
        with pytest.raises(GridError, match="too large"):
            dilate(E, 7.0)

    def test_dilate_half_cell_is_identity(self):
        spec = GridSpec((32, 32))
        E = disk(spec, 7)
        assert dilate(E, 0.5) == E

    @given(set_pairs(shape=(14, 14)), st.floats(0, 1.5), st.floats(0, 1.5))
    @settings(max_examples=40, deadline=None)
    def test_dilate_monotone_and_triangle(self, pair, a, b):
        E = pair[0] & VoxelSet(pair[0].spec, np.pad(np.ones((8, 8), bool), 3))
        if E.is_empty():
            return
        da = dilate(E, a)
        assert subset(E, da) and subset(da, dilate(E, a + b))
        # discrete centers make composition a subset, not an equality
        assert subset(dilate(da, b), dilate(E, a + b))


class TestFormats:
    def test_mchv_round_trip(self, tmp_path):
        spec = GridSpec((9, 7, 5), 0.1, (-0.45, -0.35, 0.0))
        rng = np.random.default_rng(3)
        m = (rng.random(spec.shape) < 0.4) & spec.interior_mask()
        E = VoxelSet(spec, m)
        write_mchv(tmp_path / "a.mchv", E)
        F = read_mchv(tmp_path / "a.mchv")
        assert F == E and F.spec == E.spec

    def test_mchv_layout(self):
        spec = GridSpec((4, 4))
        m = np.zeros(spec.shape, bool)
        m[1, 1] = True  # flat index 1 + 4*1 = 5 with first axis fastest
        data = mchv_bytes(VoxelSet(spec, m))
        head, payload = data.split(b"\n", 2)[:2], data.split(b"\n", 2)[2]
        assert head[0] == b"MCHV1"
        assert head[1] == b"dim=2 shape=4,4 spacing=1.0 origin=0.0,0.0"
        assert payload == bytes([0b00000100, 0])

    def test_mchv_rejects_garbage(self):
        with pytest.raises(GridError):
            parse_mchv(b"P5\n")
        good = mchv_bytes(VoxelSet.empty(GridSpec((4, 4))))
        with pytest.raises(GridError):
            parse_mchv(good[:-1])

    def test_pgm(self):
        spec = GridSpec((5, 4))
        m = np.zeros(spec.shape, bool)
        m[3, 1] = True
        data = pgm_bytes(VoxelSet(spec, m))
        assert data.startswith(b"P5\n5 4\n255\n")
        img = np.frombuffer(data[len(b"P5\n5 4\n255\n"):], np.uint8).reshape(4, 5)
        assert img[1, 3] == 255 and img.sum() == 255
