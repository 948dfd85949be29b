import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from mchull.grid import GridError, GridSpec, VoxelSet
from mchull.stencil import (
    VALID_ORDERS, _COEFFS, _family, build_stencil, cut_counts, exact_perimeter,
    local_perimeter, perimeter,
)


def square(spec, side, corner=None):
    m = np.zeros(spec.shape, bool)
    c = corner or tuple((n - side) // 2 for n in spec.shape)
    m[tuple(slice(a, a + side) for a in c)] = True
    return VoxelSet(spec, m)


def disk(spec, r):
    idx = np.indices(spec.shape) + 0.5
    c = np.array(spec.shape) / 2
    d2 = sum((idx[a] - c[a]) ** 2 for a in range(spec.dim))
    return VoxelSet(spec, d2 <= r * r)


def sample_normals(dim, n):
    """Dense normals over the fundamental region |x| >= |y| (>= |z|), all signs +."""
    g = np.linspace(0, 1, n)
    if dim == 2:
        N = np.stack([np.ones(n), g], 1)
    else:
        a, b = np.meshgrid(g, g, indexing="ij")
        N = np.stack([np.ones(a.size), a.ravel(), (a * b).ravel()], 1)
    return N / np.linalg.norm(N, axis=1)[:, None]


def minimax_lp(dim, order):
    """Nonnegative family coefficients minimizing the worst density error."""
    s = build_stencil(dim, order)
    fams = sorted(_COEFFS[(dim, order)])
    N = sample_normals(dim, 2000 if dim == 2 else 161)
    # density(n) = sum_f p_f * sum_{e in f} |n.e| ; columns per family
    A = np.stack([np.abs(N @ s.offsets[[_family(tuple(e)) == f for e in s.offsets]].T).sum(1)
                  for f in fams], 1)
    # variables (p_f..., t): minimize t, |A p - 1| <= t
    m = len(fams)
    c = np.r_[np.zeros(m), 1.0]
    ub = np.block([[A, -np.ones((len(N), 1))], [-A, -np.ones((len(N), 1))]])
    rhs = np.r_[np.ones(len(N)), -np.ones(len(N))]
    res = linprog(c, A_ub=ub, b_ub=rhs, bounds=[(0, None)] * (m + 1))
    assert res.status == 0
    return res.fun, A, fams


def worst_error(s, normals):
    return max(abs(s.density(n) - 1) for n in normals)


class TestBuild:
    def test_invalid_order(self):
        with pytest.raises(ValueError, match="valid orders"):
            build_stencil(2, 7)
        with pytest.raises(ValueError):
            build_stencil(3, 16)

    @pytest.mark.parametrize("dim,order", [(d, o) for d in (2, 3) for o in VALID_ORDERS[d]])
    def test_structure(self, dim, order):
        s = build_stencil(dim, order, 0.5)
        assert len(s.offsets) == order // 2
        assert (s.weights >= 0).all()
        assert np.abs(s.offsets).max() <= 2
        # antipodes collapsed and pairwise non-parallel
        for i in range(len(s.offsets)):
            for j in range(i):
                assert np.linalg.matrix_rank(np.stack([s.offsets[i], s.offsets[j]])) == 2

    def test_axis_stencils(self):
        s = build_stencil(2, 4, 0.1)
        assert sorted(map(tuple, s.offsets)) == [(0, 1), (1, 0)]
        assert np.allclose(s.weights, 0.1)
        s3 = build_stencil(3, 6, 0.1)
        assert len(s3.offsets) == 3 and np.allclose(s3.weights, 0.01)
        assert s.density((1, 1)) == pytest.approx(np.sqrt(2))

    def test_order16_isotropy(self):
        s = build_stencil(2, 16)
        t = np.linspace(0, 2 * np.pi, 360, endpoint=False)
        assert worst_error(s, np.stack([np.cos(t), np.sin(t)], 1)) <= 0.015

    @pytest.mark.parametrize("dim,order", [(2, 8), (2, 16), (3, 18), (3, 26)])
    def test_frozen_coefficients_are_minimax(self, dim, order):
        best, A, fams = minimax_lp(dim, order)
        p = np.array([_COEFFS[(dim, order)][f] for f in fams])
        frozen = np.abs(A @ p - 1).max()
        assert best - 1e-9 <= frozen <= best + 5e-4

    def test_density_scales_out_spacing(self):
        a, b = build_stencil(3, 26, 1.0), build_stencil(3, 26, 0.25)
        assert a.density((1, 2, 3)) == pytest.approx(b.density((1, 2, 3)))


class TestPerimeter:
    def test_empty(self):
        spec = GridSpec((12, 12))
        assert perimeter(VoxelSet.empty(spec), build_stencil(2, 16)) == 0

    def test_single_cell_order4(self):
        spec = GridSpec((5, 5))
        m = np.zeros(spec.shape, bool)
        m[2, 2] = True
        assert perimeter(VoxelSet(spec, m), build_stencil(2, 4)) == 4.0

    @pytest.mark.parametrize("order", [4, 6])
    def test_axis_box_exact(self, order):
        dim = 2 if order == 4 else 3
        dx = 0.05
        spec = GridSpec((28,) * dim, dx)
        p = perimeter(square(spec, 20), build_stencil(dim, order, dx))
        want = 4 * 20 * dx if dim == 2 else 6 * (20 * dx) ** 2
        assert p == pytest.approx(want, rel=1e-9)

    @pytest.mark.xfail(strict=True, reason="minimax weights trade box exactness for isotropy; "
                       "axis density of order 16 is 0.9865")
    def test_order16_box_calibration(self):
        spec = GridSpec((32, 32))
        assert perimeter(square(spec, 20), build_stencil(2, 16)) == pytest.approx(80, rel=1e-9)

    @pytest.mark.parametrize("order", [8, 16])
    def test_box_corner_deficit(self, order):
        # each offset (a, b) cuts 2L(|a|+|b|) pairs on a half-space strip, minus |ab| per corner pair
        L = 20
        s = build_stencil(2, order)
        counts = cut_counts(square(GridSpec((32, 32)), L), s)
        want = [2 * L * (abs(a) + abs(b)) - 2 * abs(a * b) for a, b in s.offsets]
        assert counts.tolist() == want

    def test_disk_circumference(self):
        spec = GridSpec((128, 128))
        p = perimeter(disk(spec, 20), build_stencil(2, 16))
        assert p == pytest.approx(2 * np.pi * 20, rel=0.02)

    def test_sphere_area(self):
        spec = GridSpec((48, 48, 48))
        p = perimeter(disk(spec, 16), build_stencil(3, 26))
        assert p == pytest.approx(4 * np.pi * 16**2, rel=0.03)

    def test_dim_mismatch(self):
        with pytest.raises(GridError):
            perimeter(VoxelSet.empty(GridSpec((6, 6))), build_stencil(3, 6))

    def test_cut_counts_brute_force(self):
        rng = np.random.default_rng(1)
        spec = GridSpec((9, 8))
        E = VoxelSet(spec, (rng.random(spec.shape) < 0.5) & spec.interior_mask())
        s = build_stencil(2, 16)
        want = np.zeros(len(s.offsets), int)
        for k, e in enumerate(s.offsets):
            for x in np.ndindex(*spec.shape):
                y = np.add(x, e)
                iny = (y >= 0).all() and (y < spec.shape).all()
                a = E.mask[x]
                b = E.mask[tuple(y)] if iny else False
                want[k] += a != b
            # pairs whose first member lies outside the grid and second inside
            for y in np.ndindex(*spec.shape):
                x = np.subtract(y, e)
                if not ((x >= 0).all() and (x < spec.shape).all()):
                    want[k] += E.mask[y]
        assert (cut_counts(E, s) == want).all()

    def test_exact_perimeter_matches_float(self):
        spec = GridSpec((40, 40))
        s = build_stencil(2, 16)
        assert float(exact_perimeter(disk(spec, 12), s)) == pytest.approx(
            perimeter(disk(spec, 12), s), rel=1e-12)


@st.composite
def random_sets(draw, shape=(12, 12)):
    spec = GridSpec(shape)
    inner = (shape[0] - 4, shape[1] - 4)
    n = inner[0] * inner[1]
    out = []
    for _ in range(2):
        bits = draw(st.lists(st.booleans(), min_size=n, max_size=n))
        m = np.zeros(shape, bool)
        m[2:-2, 2:-2] = np.array(bits).reshape(inner)
        out.append(VoxelSet(spec, m))
    return out


class TestProperties:
    @given(random_sets(), st.sampled_from([4, 8, 16]))
    @settings(max_examples=80, deadline=None)
    def test_submodular_exact(self, pair, order):
        E, F = pair
        s = build_stencil(2, order)
        assert exact_perimeter(E | F, s) + exact_perimeter(E & F, s) <= \
            exact_perimeter(E, s) + exact_perimeter(F, s)

    @given(random_sets(), st.integers(-2, 2), st.integers(-2, 2))
    @settings(max_examples=40, deadline=None)
    def test_translation_invariance(self, pair, a, b):
        E = pair[0]
        s = build_stencil(2, 16)
        big = GridSpec((20, 20))
        m = np.zeros(big.shape, bool)
        m[4:16, 4:16] = E.mask
        F = VoxelSet(big, m)
        assert exact_perimeter(F.shifted((a, b)), s) == exact_perimeter(F, s)

    @given(random_sets())
    @settings(max_examples=40, deadline=None)
    def test_complement_symmetry(self, pair):
        E = pair[0]
        s = build_stencil(2, 16)
        # complement inside the 2-cell margin
        inner = np.zeros(E.spec.shape, bool)
        inner[2:-2, 2:-2] = True
        region = VoxelSet(E.spec, inner)
        comp = VoxelSet(E.spec, inner & ~E.mask)
        lhs = exact_perimeter(E, s) - exact_perimeter(comp, s)
        # both cut the region boundary the same way up to the region's own perimeter
        assert lhs == exact_perimeter(E & region, s) - exact_perimeter(comp, s)
        assert exact_perimeter(E, s) + exact_perimeter(comp, s) >= exact_perimeter(region, s)

    def test_refinement(self):
        s1, s2 = build_stencil(2, 16, 1 / 32), build_stencil(2, 16, 1 / 64)
        a = perimeter(VoxelSet(GridSpec((32, 32), 1 / 32), _r(32, 0.3)), s1)
        b = perimeter(VoxelSet(GridSpec((64, 64), 1 / 64), _r(64, 0.3)), s2)
        assert abs(a - b) <= 0.015 * 2 * np.pi * 0.3 + 4 / 32


def _r(n, r):
    c = (np.arange(n) + 0.5) / n - 0.5
    x, y = np.meshgrid(c, c, indexing="ij")
    return x * x + y * y <= r * r


class TestLocal:
    def test_empty(self):
        spec = GridSpec((24, 24))
        assert local_perimeter(VoxelSet.empty(spec), build_stencil(2, 16), (12, 12), 5) == 0

    @staticmethod
    def chord(r):
        n = int(2 * r + 16)
        spec = GridSpec((n, n))
        m = np.zeros(spec.shape, bool)
        m[1:n // 2, 1:-1] = True
        return local_perimeter(VoxelSet(spec, m), build_stencil(2, 16), (n // 2, n // 2), float(r))

    @pytest.mark.xfail(strict=True, reason="pairs must have both centers in the ball, so about "
                       "one cell is lost at each chord end; 8.4% low at r=10")
    def test_half_plane_chord_r10(self):
        assert self.chord(10) == pytest.approx(20.0, rel=0.05)

    def test_half_plane_chord_converges(self):
        errs = [1 - self.chord(r) / (2 * r) for r in (10, 20, 40)]
        assert errs[0] > errs[1] > errs[2] > 0
        assert errs[2] < 0.05
        # end loss is O(dx), so the relative error roughly halves with r
        assert errs[0] / errs[2] > 2.5

    def test_no_cut_inside(self):
        spec = GridSpec((32, 32))
        E = VoxelSet.interior(spec)
        assert local_perimeter(E, build_stencil(2, 16), (16, 16), 6.0) == 0

    def test_bad_radius(self):
        with pytest.raises(ValueError):
            local_perimeter(VoxelSet.empty(GridSpec((8, 8))), build_stencil(2, 4), (4, 4), 0)
