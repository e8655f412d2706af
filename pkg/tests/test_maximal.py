import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from meyerflow.ensembles import random_coeff_field, single_wavelet_coeffs
from meyerflow.errors import ConfigError
from meyerflow.lorentz import CellFunction, level_majorant, upsample_to
from meyerflow.maximal import (
    MaximalConfig,
    brute_force_maximal,
    decay_weight_ratio,
    decay_weighted_sum,
    fefferman_stein_ratio,
    hl_maximal,
)


class TestMaximalOperator:
    def test_constant(self):
        g = CellFunction(np.full((8, 8), 2.5), 1.0)
        assert np.abs(hl_maximal(g).values - 2.5).max() == 0.0

    def test_single_cell_indicator(self):
        vals = np.zeros((8, 8))
        vals[3, 5] = 1.0
        m = hl_maximal(CellFunction(vals, 1.0)).values
        assert m[3, 5] == 1.0
        assert m[3, 4] == pytest.approx(0.25)     # shared 2x2 block
        assert m[0, 0] == pytest.approx(1.0 / 64)  # only the root cube

    def test_dominates_identity(self, rng):
        vals = rng.random((16, 16))
        g = CellFunction(vals, 1.0)
        assert np.all(hl_maximal(g).values >= vals - 1e-15)

    def test_matches_brute_force(self, rng):
        g = CellFunction(rng.random((16, 16)), 1.0 / 256)
        assert np.abs(hl_maximal(g).values - brute_force_maximal(g).values).max() <= 1e-14

    def test_rejects_negative(self):
        with pytest.raises(ConfigError):
            hl_maximal(CellFunction(np.array([-1.0, 0.0]), 0.5))

    def test_sublinear(self, rng):
        a = CellFunction(rng.random((16, 16)), 1.0)
        b = CellFunction(rng.random((16, 16)), 1.0)
        lhs = hl_maximal(CellFunction(a.values + b.values, 1.0)).values
        rhs = hl_maximal(a).values + hl_maximal(b).values
        assert np.all(lhs <= rhs + 1e-13)


class TestMaximalConfig:
    def test_default_decay(self):
        assert MaximalConfig(dim=2).decay_n == 6
        assert MaximalConfig(dim=3).decay_n == 8

    def test_rejects_small_decay(self):
        with pytest.raises(ConfigError):
            MaximalConfig(dim=2, decay_n=5)


class TestDecayWeightedSum:
    def test_zero_coefficients(self, small_grid):
        from meyerflow.meyer import CoeffField

        c = CoeffField(small_grid)
        assert decay_weighted_sum(c, 1, -1, (0, 0), 6) == 0.0

    def test_zero_distance_term(self, small_grid):
        # single coefficient at k' = 2^(j'-j) k with j >= j'
        c = single_wavelet_coeffs(small_grid, (1, 0), -1, (1, 2), value=3.0)
        val = decay_weighted_sum(c, 1, -1, (4, 8), 6)
        assert val == pytest.approx(2.0 ** (2 * (-1) / 2.0) * 3.0, rel=1e-12)

    def test_bounded_by_maximal(self, small_grid, rng):
        worst = 0.0
        for _ in range(5):
            c = random_coeff_field(small_grid, rng, density=0.08)
            for j in small_grid.levels:
                for jp in small_grid.levels:
                    worst = max(worst, decay_weight_ratio(c, j, jp, 6))
        assert math.isfinite(worst)
        assert worst <= 30.0  # measured ~4.2 across seeds


class TestFeffermanStein:
    def test_single_constant(self):
        fam = [CellFunction(np.full((8, 8), 1.7), 1.0)]
        assert fefferman_stein_ratio(fam, 4.0, 2.0, 2.0) == pytest.approx(1.0)

    def test_zero_family_convention(self):
        fam = [CellFunction(np.zeros((8, 8)), 1.0)]
        assert fefferman_stein_ratio(fam, 4.0, 2.0, 2.0) == 1.0

    def test_disjoint_indicators_direct(self):
        a = np.zeros((8, 8))
        a[:2, :2] = 1.0
        b = np.zeros((8, 8))
        b[6:, 6:] = 1.0
        fam = [CellFunction(a, 1.0 / 64), CellFunction(b, 1.0 / 64)]
        ratio = fefferman_stein_ratio(fam, 4.0, 2.0, 2.0)
        # direct evaluation of both cascades
        from meyerflow.lorentz import lorentz_quasi_norm

        q = 2.0
        raw = CellFunction((a**q + b**q) ** (1 / q), 1.0 / 64)
        mx = CellFunction(
            (hl_maximal(fam[0]).values ** q + hl_maximal(fam[1]).values ** q) ** (1 / q),
            1.0 / 64,
        )
        expect = lorentz_quasi_norm(mx, 4.0, 2.0, scheme="integral") / lorentz_quasi_norm(
            raw, 4.0, 2.0, scheme="integral"
        )
        assert ratio == pytest.approx(expect, rel=1e-12)
        assert ratio >= 1.0

    def test_stable_under_grid_doubling(self, small_grid, rng):
        c = random_coeff_field(small_grid, rng, density=0.15)
        m_top = small_grid.lattice_size(small_grid.j_max)
        fam = [
            CellFunction(
                upsample_to(level_majorant(c, j).values, m_top),
                2.0 ** (-2 * small_grid.j_max),
            )
            for j in small_grid.levels
        ]
        base = fefferman_stein_ratio(fam, 4.0, 2.0, 2.0)
        fam2 = [
            CellFunction(upsample_to(f.values, 2 * m_top), f.cell_volume / 4)
            for f in fam
        ]
        doubled = fefferman_stein_ratio(fam2, 4.0, 2.0, 2.0)
        assert abs(doubled - base) <= 0.1 * base


@settings(max_examples=20, deadline=None)
@given(
    hnp.arrays(np.float64, (8, 8), elements=st.floats(min_value=0.0, max_value=10.0))
)
def test_maximal_dominates_and_is_bounded_by_sup(vals):
    g = CellFunction(vals, 1.0)
    m = hl_maximal(g).values
    assert np.all(m >= vals - 1e-12)
    assert np.all(m <= vals.max() + 1e-12)
