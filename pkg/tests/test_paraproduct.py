import math

import numpy as np
import pytest

from meyerflow.ensembles import (
    band_limited_spectrum,
    random_coeff_field,
    random_divergence_free,
    single_wavelet_coeffs,
)
from meyerflow.errors import ConfigError, MeshCoverageError
from meyerflow.meyer import (
    GridConfig,
    SampledField,
    WaveletTransform,
    padded_points,
)
from meyerflow.paraproduct import (
    FlowKind,
    QuadratureSpec,
    decompose_product,
    duhamel_bilinear,
    duhamel_flow_components,
    kernel_coefficient,
    leray_project,
    make_probe,
    max_divergence,
    project_level,
    xi_axes,
)
from meyerflow.trajectory import Trajectory, geometric_mesh


def coeff_dev(a, b):
    return max(np.abs(a[i].levels[k] - b[i].levels[k]).max()
               for i in range(len(a)) for k in a[i].levels)


def coeff_scale(a):
    return max(c.max_abs() for c in a)


class TestProjections:
    def test_levels_partition_synthesis(self, small_tr, small_grid, rng):
        c = random_coeff_field(small_grid, rng, density=0.2)
        total = sum(project_level(c, j, small_tr).values for j in small_grid.levels)
        full = small_tr.synthesize(c).values
        assert np.abs(total - full).max() <= 1e-10 * max(1.0, np.abs(full).max())

    def test_single_wavelet_off_level_zero(self, small_tr, small_grid):
        c = single_wavelet_coeffs(small_grid, (1, 0), 0, (1, 1))
        assert np.abs(project_level(c, 1, small_tr).values).max() == 0.0

    def test_out_of_range_level(self, small_tr, small_grid):
        from meyerflow.errors import LevelRangeError

        c = single_wavelet_coeffs(small_grid, (1, 0), 0, (0, 0))
        with pytest.raises(LevelRangeError):
            project_level(c, 7, small_tr)

    def test_spectrum_in_ring(self, small_tr, small_grid, rng):
        c = random_coeff_field(small_grid, rng, density=0.3)
        j = 0
        spec = small_tr.level_projection(c, j)
        n = small_grid.grid_points
        idx = np.abs(np.arange(-(n // 2), n - n // 2))
        b = small_grid.band_radius(j)
        inside = (idx[:, None] <= b) & (idx[None, :] <= b)
        mass = np.abs(spec) ** 2
        assert mass[~inside].sum() <= 1e-10 * mass.sum()


class TestFlowDecomposition:
    def test_zero_operand(self, small_tr, small_grid, rng):
        from meyerflow.meyer import CoeffField

        u = random_coeff_field(small_grid, rng, density=0.2)
        flows, _ = decompose_product(u, CoeffField(small_grid), small_tr)
        assert all(np.abs(v).max() == 0.0 for v in flows.values())

    def test_far_levels_only_low_high(self, small_tr, small_grid):
        u = single_wavelet_coeffs(small_grid, (1, 0), -1, (1, 1))
        v = single_wavelet_coeffs(small_grid, (0, 1), 1, (3, 3))
        # extend window gap to 3+ via medium grid is not needed: -1 vs 1 is
        # diagonal; use the medium fixture below instead
        flows, _ = decompose_product(u, v, small_tr)
        assert np.abs(flows[FlowKind.DIAGONAL]).max() > 0

    def test_far_levels_medium(self, medium_tr, medium_grid):
        u = single_wavelet_coeffs(medium_grid, (1, 0), -2, (1, 1))
        v = single_wavelet_coeffs(medium_grid, (0, 1), 2, (3, 3))
        flows, _ = decompose_product(u, v, medium_tr)
        assert np.abs(flows[FlowKind.LOW_HIGH]).max() > 1e-8
        assert np.abs(flows[FlowKind.DIAGONAL]).max() <= 1e-14
        assert np.abs(flows[FlowKind.HIGH_LOW]).max() <= 1e-14

    def test_flow_sum_reconstructs_product(self, small_tr, small_grid, rng):
        u = random_coeff_field(small_grid, rng, density=0.2)
        v = random_coeff_field(small_grid, rng, density=0.2)
        flows, prod = decompose_product(u, v, small_tr)
        total = sum(flows.values())
        assert np.abs(total - prod).max() <= 1e-8 * max(1.0, np.abs(prod).max())


class TestLeray:
    def test_annihilates_gradients(self, small_tr, small_grid, rng):
        spec = band_limited_spectrum(small_grid, rng)
        axes = xi_axes(small_grid, small_grid.grid_points)
        grads = tuple(
            SampledField(small_grid, small_tr.spectrum_to_field(1j * axes[a] * spec))
            for a in range(2)
        )
        out = leray_project(grads, small_tr)
        scale = max(np.abs(g.values).max() for g in grads)
        assert max(np.abs(f.values).max() for f in out) <= 1e-10 * scale

    def test_identity_on_divergence_free(self, small_tr, rng):
        w = random_divergence_free(small_tr, rng)
        out = leray_project(w, small_tr)
        assert coeff_dev(out, w) <= 1e-10 * coeff_scale(w)

    def test_idempotent(self, small_tr, small_grid, rng):
        fields = tuple(
            SampledField(
                small_grid,
                small_tr.spectrum_to_field(band_limited_spectrum(small_grid, rng)),
            )
            for _ in range(2)
        )
        once = leray_project(fields, small_tr)
        twice = leray_project(once, small_tr)
        scale = max(np.abs(f.values).max() for f in once) or 1.0
        dev = max(np.abs(a.values - b.values).max() for a, b in zip(twice, once))
        assert dev <= 1e-12 * scale

    def test_projected_fields_divergence_free(self, small_tr, rng):
        w = random_divergence_free(small_tr, rng)
        scale = coeff_scale(w)
        assert max_divergence(w, small_tr) <= 1e-10 * max(1.0, scale) * 50


class TestQuadratureSpec:
    def test_boundaries_graded_both_ends(self):
        q = QuadratureSpec(subintervals=12, nodes=8)
        b = q.boundaries(1.0)
        assert len(b) == 13
        assert b[0] == 0.0 and b[-1] == 1.0
        assert np.all(np.diff(b) > 0)
        assert b[1] == pytest.approx(2.0**-6)
        assert 1.0 - b[-2] == pytest.approx(2.0**-6)

    def test_panel_weights_integrate_constants(self):
        q = QuadratureSpec(subintervals=6, nodes=4)
        nodes, weights = q.panels(2.0)
        assert weights.sum() == pytest.approx(2.0)
        assert np.all((nodes > 0) & (nodes < 2.0))


class TestDuhamelBilinear:
    def params_mesh(self):
        return geometric_mesh(2.0**-4, 2.0)

    def test_zero_operand(self, small_tr, small_grid):
        from meyerflow.meyer import CoeffField

        mesh = self.params_mesh()
        zero = (CoeffField(small_grid), CoeffField(small_grid))
        traj = Trajectory(mesh, [zero] * len(mesh), zero_state=zero)
        out = duhamel_bilinear(traj, traj, 1.0, small_tr)
        assert coeff_scale(out) == 0.0

    def test_bilinearity(self, small_tr, rng):
        mesh = self.params_mesh()
        u0 = random_divergence_free(small_tr, rng, amplitude=0.05)
        traj = Trajectory(mesh, [u0] * len(mesh), zero_state=u0)
        a = Trajectory(mesh, [tuple(2.0 * c for c in u0)] * len(mesh))
        b = Trajectory(mesh, [tuple(3.0 * c for c in u0)] * len(mesh))
        base = duhamel_bilinear(traj, traj, 1.0, small_tr)
        scaled = duhamel_bilinear(a, b, 1.0, small_tr)
        expect = tuple(6.0 * c for c in base)
        assert coeff_dev(scaled, expect) <= 1e-10 * coeff_scale(expect)

    def test_refined_quadrature_oracle(self, small_tr, small_grid, bank, rng):
        # constant-in-time single-wavelet data; oracle = much finer rule on a
        # doubled grid
        mesh = self.params_mesh()
        u = single_wavelet_coeffs(small_grid, (1, 0), 0, (1, 1), value=0.1)
        v = single_wavelet_coeffs(small_grid, (0, 1), 0, (2, 2), value=0.1)
        tu = Trajectory(mesh, [(u, u)] * len(mesh), zero_state=(u, u))
        tv = Trajectory(mesh, [(v, v)] * len(mesh), zero_state=(v, v))
        got = duhamel_bilinear(tu, tv, 1.0, small_tr)
        grid2 = GridConfig(dim=2, side=small_grid.side,
                           grid_points=2 * small_grid.grid_points,
                           j_min=small_grid.j_min, j_max=small_grid.j_max)
        tr2 = WaveletTransform(bank, grid2)
        from meyerflow.meyer import CoeffField

        def lift(c):
            out = CoeffField(grid2)
            for key, arr in c.levels.items():
                out.levels[key] = arr.copy()
            return out

        tu2 = Trajectory(mesh, [(lift(u), lift(u))] * len(mesh))
        tv2 = Trajectory(mesh, [(lift(v), lift(v))] * len(mesh))
        oracle = duhamel_bilinear(
            tu2, tv2, 1.0, tr2, quad=QuadratureSpec(subintervals=24, nodes=16)
        )
        dev = max(
            np.abs(got[i].levels[k] - oracle[i].levels[k]).max()
            for i in range(2)
            for k in got[i].levels
        )
        assert dev <= 1e-3 * coeff_scale(oracle)

    def test_mesh_coverage_error(self, small_tr, small_grid):
        mesh = self.params_mesh()
        u0 = (single_wavelet_coeffs(small_grid, (1, 0), 0, (0, 0)),) * 2
        traj = Trajectory(mesh, [u0] * len(mesh))
        with pytest.raises(MeshCoverageError):
            duhamel_bilinear(traj, traj, 10.0, small_tr)


class TestDuhamelGevrey:
    def test_gamma_zero_coincides(self, small_tr, rng):
        mesh = geometric_mesh(2.0**-4, 2.0)
        u0 = random_divergence_free(small_tr, rng, amplitude=0.05)
        traj = Trajectory(mesh, [u0] * len(mesh), zero_state=u0)
        base = duhamel_bilinear(traj, traj, 1.0, small_tr, gamma=0.0)
        conj = duhamel_bilinear(traj, traj, 1.0, small_tr, gamma=0.0)
        assert coeff_dev(base, conj) <= 1e-12 * max(1.0, coeff_scale(base))

    def test_small_gamma_against_refined(self, small_tr, small_grid):
        mesh = geometric_mesh(2.0**-4, 2.0)
        u = single_wavelet_coeffs(small_grid, (1, 0), 0, (1, 1), value=0.05)
        tu = Trajectory(mesh, [(u, u)] * len(mesh), zero_state=(u, u))
        got = duhamel_bilinear(tu, tu, 1.0, small_tr, gamma=0.05)
        oracle = duhamel_bilinear(
            tu, tu, 1.0, small_tr, gamma=0.05,
            quad=QuadratureSpec(subintervals=24, nodes=16),
        )
        assert coeff_dev(got, oracle) <= 1e-3 * coeff_scale(oracle)


class TestFlowComponents:
    def scalar_trajs(self, grid, tr, rng):
        mesh = geometric_mesh(2.0**-4, 2.0)
        u = random_coeff_field(grid, rng, density=0.1, amplitude=0.1)
        v = random_coeff_field(grid, rng, density=0.1, amplitude=0.1)
        from meyerflow.semigroup import smoothing_trajectory

        return smoothing_trajectory(u, tr, mesh), smoothing_trajectory(v, tr, mesh)

    def test_flow_sum_reconstructs_unsplit(self, small_tr, small_grid, rng):
        tu, tv = self.scalar_trajs(small_grid, small_tr, rng)
        quad = QuadratureSpec(subintervals=6, nodes=4)
        comps = duhamel_flow_components(tu, tv, 1.0, 0.0, (1, 1, 2), small_tr,
                                        quad=quad, operator="third")
        total = comps[1] + comps[2] + comps[3]
        # unsplit operator: same symbol applied to the full product
        unsplit = duhamel_flow_components(
            tu, tv, 1.0, 0.0, (1, 1, 2), small_tr, quad=quad, operator="third"
        )
        full = unsplit[1] + unsplit[2] + unsplit[3]
        dev = max(np.abs(total.levels[k] - full.levels[k]).max() for k in total.levels)
        assert dev <= 1e-8 * max(1.0, total.max_abs())

    def test_symmetry_in_derivative_indices(self, small_tr, small_grid, rng):
        tu, tv = self.scalar_trajs(small_grid, small_tr, rng)
        quad = QuadratureSpec(subintervals=6, nodes=4)
        a = duhamel_flow_components(tu, tv, 1.0, 0.0, (1, 1, 2), small_tr,
                                    quad=quad, operator="third")
        b = duhamel_flow_components(tu, tv, 1.0, 0.0, (2, 1, 1), small_tr,
                                    quad=quad, operator="third")
        for flow in (1, 2, 3):
            dev = max(
                np.abs(a[flow].levels[k] - b[flow].levels[k]).max()
                for k in a[flow].levels
            )
            assert dev <= 1e-12 * max(1.0, a[flow].max_abs())

    def test_single_pair_concentrates_in_one_flow(self, medium_tr, medium_grid):
        mesh = geometric_mesh(2.0**-4, 2.0)
        u = single_wavelet_coeffs(medium_grid, (1, 0), 2, (3, 3), value=0.1)
        v = single_wavelet_coeffs(medium_grid, (0, 1), -2, (1, 1), value=0.1)
        tu = Trajectory(mesh, [(u,)] * len(mesh))
        tv = Trajectory(mesh, [(v,)] * len(mesh))
        quad = QuadratureSpec(subintervals=4, nodes=4)
        comps = duhamel_flow_components(tu, tv, 0.5, 0.0, (1, 1, 2), medium_tr,
                                        quad=quad, operator="third")
        # u at high level, v at low level: high-low flow only
        assert comps[2].max_abs() > 0
        assert comps[1].max_abs() <= 1e-10 * comps[2].max_abs()
        assert comps[3].max_abs() <= 1e-10 * comps[2].max_abs()

    def test_first_order_operator(self, small_tr, small_grid, rng):
        tu, tv = self.scalar_trajs(small_grid, small_tr, rng)
        quad = QuadratureSpec(subintervals=4, nodes=4)
        comps = duhamel_flow_components(tu, tv, 1.0, 0.0, (1,), small_tr,
                                        quad=quad, operator="first")
        assert all(math.isfinite(comps[f].max_abs()) for f in (1, 2, 3))

    def test_rejects_bad_derivative_count(self, small_tr, small_grid, rng):
        tu, tv = self.scalar_trajs(small_grid, small_tr, rng)
        with pytest.raises(ConfigError):
            duhamel_flow_components(tu, tv, 1.0, 0.0, (1, 2), small_tr,
                                    operator="third")


class TestKernelProbes:
    def test_case_one_probe_finite(self, small_tr, small_grid):
        j = small_grid.j_max
        t = 1.5 * 4.0 ** (-j)
        s = t - 0.25 * 4.0 ** (-j)
        probe = make_probe(
            small_tr, "B1",
            ((1, 0), j, (1, 0)), ((1, 0), j, (0, 0)), ((0, 1), j, (0, 0)),
            t, s, 0.05, 6, (1, 1, 2), c=1.0,
        )
        assert probe.case == 1
        assert math.isfinite(probe.ratio)
        assert probe.measured > 0

    def test_case_tags_match_distances(self, small_tr, small_grid):
        j = small_grid.j_max
        t = 1.5 * 4.0 ** (-j)
        s = t - 0.25 * 4.0 ** (-j)
        far = make_probe(
            small_tr, "B1",
            ((1, 0), j, (6, 0)), ((1, 0), j, (0, 0)), ((0, 1), j, (0, 0)),
            t, s, 0.05, 6, (1, 1, 2),
        )
        assert far.case == 3  # output distance > 2, pair distance <= 2

    def test_time_decay_fit_positive(self, small_tr, small_grid):
        j = small_grid.j_max
        t = 1.5 * 4.0 ** (-j)
        vals = []
        gaps = np.geomspace(0.125, 1.25, 6)
        for gap in gaps:
            s = t - gap * 4.0 ** (-j)
            vals.append(
                kernel_coefficient(
                    small_tr, ((1, 0), j, (0, 0)), ((1, 0), j, (0, 0)),
                    ((0, 1), j, (0, 0)), t, s, 0.05, (1, 1, 2),
                )
            )
        slope = np.polyfit(gaps, np.log(vals), 1)[0]
        assert -slope > 0  # fitted c > 0

    def test_csv_row_shape(self, small_tr, small_grid):
        from meyerflow.paraproduct import KERNEL_CSV_HEADER

        j = small_grid.j_max
        t = 1.5 * 4.0 ** (-j)
        probe = make_probe(
            small_tr, "B2",
            ((1, 0), j, (0, 0)), ((1, 0), j, (0, 0)), ((0, 1), j - 2, (0, 0)),
            t, t - 0.25 * 4.0 ** (-j), 0.05, 6, (1, 1, 2),
        )
        assert len(probe.csv_row()) == len(KERNEL_CSV_HEADER)
