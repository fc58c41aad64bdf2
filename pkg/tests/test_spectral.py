import math

import numpy as np
import pytest
from hypothesis import given, settings

from dotborn.errors import CapExceededError
from dotborn.geometry import VoxelGrid, build_box, build_cube, build_sandwich, build_two_cubes
from dotborn.green import f_shape
from dotborn.linalg import power_max_shifted
from dotborn.operators import assemble_w, polarizabilities
from dotborn.spectral import (
    degeneracy_split,
    pairing_gap,
    spectrum_w,
    spectrum_wc,
    sweep_difference,
    wmax_sweep,
)

from strategies import lattice_grids


class TestSpectrumW:
    def test_cube_margin(self, cube_grid):
        rep = spectrum_w(cube_grid)
        assert rep.n == 1000 and rep.values.shape == (1000,)
        assert rep.w_max == pytest.approx(0.38666, abs=1e-5)
        assert rep.w_max < 0.9
        assert rep.max_imag_abs == 0.0
        assert rep.tag == "cube"
        assert rep.trace_defect <= 1e-10 * rep.n * rep.max_abs

    def test_contrast_monotone(self):
        base = build_cube(0.25, 0.05, 1.0)
        values = [spectrum_w(base.with_kappas(k)).w_max for k in (0.5, 1.0, 2.0)]
        assert values[0] < values[1] < values[2]

    def test_empty(self):
        g = VoxelGrid.from_arrays(1.0, np.zeros((0, 3)), [])
        rep = spectrum_w(g)
        assert rep.n == 0 and rep.values.size == 0 and rep.w_max == 0.0

    def test_cap(self, cube_grid):
        with pytest.raises(CapExceededError):
            spectrum_w(cube_grid, cap=999)
        with pytest.raises(CapExceededError):
            spectrum_wc(cube_grid, cap=999)

    @given(lattice_grids(max_voxels=30))
    @settings(max_examples=60, deadline=None)
    def test_head_equals_power(self, grid):
        w = assemble_w(grid, polarizabilities(grid))
        rep = spectrum_w(grid)
        pw = power_max_shifted(w, tol=1e-13, max_iter=200000).w_max
        assert pw == pytest.approx(rep.w_max, rel=1e-8, abs=1e-14)

    @given(lattice_grids())
    @settings(max_examples=60, deadline=None)
    def test_trace_defect(self, grid):
        for rep in (spectrum_w(grid), spectrum_wc(grid)):
            assert rep.trace_defect <= 1e-10 * rep.n * max(rep.max_abs, 1e-300)


class TestSpectrumWc:
    def test_positive_grid_is_real(self):
        g = build_cube(0.25, 0.05, 1.0)
        rep = spectrum_wc(g)
        assert rep.max_imag_abs < 1e-10 * rep.max_abs
        np.testing.assert_allclose(np.sort(rep.values.real), np.sort(spectrum_w(g).values), atol=1e-13)

    def test_methods_agree(self):
        g = build_two_cubes(0.2, 0.05, 0.25, 1.0, -1.0)
        a = spectrum_wc(g, method="similar").values
        b = spectrum_wc(g, method="complex").values
        for v in b:
            assert np.min(np.abs(a - v)) < 1e-12
        with pytest.raises(ValueError):
            spectrum_wc(g, method="qr")

    def test_sorted(self):
        rep = spectrum_wc(build_sandwich(0.25, 0.05, 1.0))
        re = rep.values.real
        assert np.all(np.diff(re) <= 0)

    @given(lattice_grids(max_voxels=25))
    @settings(max_examples=60, deadline=None)
    def test_flip_negates_spectrum(self, grid):
        a = spectrum_wc(grid, use_self_energy=False).values
        b = spectrum_wc(grid.with_kappas(-grid.kappas), use_self_energy=False).values
        scale = max(np.abs(a).max(), 1e-300)
        for v in -a:
            assert np.min(np.abs(b - v)) <= 1e-10 * scale

    def test_small_pair_imag_scales(self):
        far = spectrum_wc(build_two_cubes(0.2, 0.05, 1.0, 1.0, -1.0))
        near = spectrum_wc(build_two_cubes(0.2, 0.05, 0.0, 1.0, -1.0))
        assert far.max_imag_abs < near.max_imag_abs
        assert far.max_imag_abs < 1e-5


class TestSweep:
    def test_small_sweep(self):
        H = (0.05, 0.1, 0.15, 0.2, 0.25)
        pts = wmax_sweep(H, 0.05, tol=1e-12)
        assert [p.n for p in pts] == [1, 8, 27, 64, 125]
        assert pts[0].w_max == 0.0
        for p in pts:
            assert p.error is None
            assert p.w_max < p.bound
            assert p.bound == pytest.approx(f_shape(math.pi * math.sqrt(3) * p.H))
            assert p.w_max < 1.0
        w = [p.w_max for p in pts]
        assert all(b >= a - 1e-6 for a, b in zip(w, w[1:]))
        verified = [p for p in pts if p.w_max_full is not None]
        assert [p.H for p in verified] == [0.05, 0.25]
        for p in verified:
            assert p.w_max == pytest.approx(p.w_max_full, rel=1e-8, abs=1e-15)

    def test_failures_recorded(self):
        pts = wmax_sweep((0.1, 0.13, 0.2), 0.05, cap=30)
        assert pts[0].error is None
        assert pts[1].error.startswith("NonCommensurateError")
        assert pts[2].error.startswith("CapExceededError")
        assert pts[1].w_max is None

    def test_difference(self):
        a = wmax_sweep((0.1, 0.2), 0.05)
        b = wmax_sweep((0.2, 0.3), 0.1)
        diff = sweep_difference(a, b)
        assert len(diff) == 1 and diff[0][0] == 0.2
        assert diff[0][1] == pytest.approx(a[1].w_max - b[0].w_max)


class TestSplitting:
    def test_pairing_gap(self):
        assert pairing_gap([0.5, 0.49, 0.3, 0.3, 0.1]) == pytest.approx(0.01)
        assert pairing_gap([0.5]) == 0.0
        assert pairing_gap(np.arange(100, 0, -1.0), n_pairs=3) == 1.0

    def test_gap_decays_with_separation(self):
        # pairs are split by the inter-body coupling, which decays like exp(-kd r)/r
        gaps = []
        for dh in (10.0, 20.0):
            rep = spectrum_w(build_two_cubes(0.1, 0.05, dh, 1.0, 1.0))
            gaps.append(pairing_gap(rep.values) / rep.w_max)
        assert gaps[0] < 1e-3
        expected = math.exp(-2 * math.pi) * 1.1 / 2.1
        assert gaps[1] / gaps[0] == pytest.approx(expected, rel=0.1)

    def test_split_table(self):
        rows = degeneracy_split(
            lambda dh: build_two_cubes(0.2, 0.05, dh, 1.0, 1.0),
            (1.0, 0.5, 0.0),
            reference=build_cube(0.2, 0.05, 1.0),
        )
        assert [r.delta_h for r in rows] == [1.0, 0.5, 0.0]
        ratios = [r.ratio for r in rows]
        assert 1.0 < ratios[0] < ratios[1] < ratios[2]
        touching = spectrum_w(build_box(0.4, 0.2, 0.2, 0.05, 1.0)).w_max
        assert rows[2].w_max == pytest.approx(touching, rel=1e-12)
