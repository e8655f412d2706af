import math

import numpy as np
import pytest

from meyerflow.ensembles import random_divergence_free, single_wavelet_coeffs
from meyerflow.errors import (
    ConfigError,
    NonContractionError,
    SmallnessError,
)
from meyerflow.lorentz import SpaceParams, f_norm, scale_map, workspace_norm
from meyerflow.meyer import CoeffField, WaveletTransform
from meyerflow.paraproduct import max_divergence
from meyerflow.semigroup import heat_flow
from meyerflow.solver import (
    PicardReport,
    SolveConfig,
    duhamel_trajectory,
    gevrey_diagnostic,
    picard_solve,
    residual,
    validate_params,
)
from meyerflow.trajectory import Trajectory


def small_params():
    return SpaceParams(n=2, p=4.0, q=2.0, r=2.0, m=1.2, m_prime=0.1)


def small_solve_config(**kw):
    base = dict(params=small_params(), t_min=2.0**-4, t_max=2.0**1.5)
    base.update(kw)
    return SolveConfig(**base)


def fixture_u0(tr, rng, target=1e-3):
    raw = random_divergence_free(tr, rng)
    scale = target / f_norm(raw, small_params())
    return tuple(c * scale for c in raw)


class TestPicard:
    def test_zero_data_converges_immediately(self, small_tr, small_grid):
        u0 = (CoeffField(small_grid), CoeffField(small_grid))
        traj, report = picard_solve(u0, small_solve_config(), small_tr)
        assert report.iterations == 1
        assert report.converged
        assert all(
            c.max_abs() == 0.0 for state in traj.states for c in state
        )

    def test_small_fixture_contracts(self, small_tr, rng):
        u0 = fixture_u0(small_tr, rng)
        traj, report = picard_solve(u0, small_solve_config(), small_tr)
        assert report.converged
        assert report.iterations <= 15
        assert max(report.contraction_ratios, default=0.0) < 0.5
        assert report.residual <= 1e-8
        assert report.divergence_max <= 1e-6

    def test_smallness_gate(self, small_tr, rng):
        u0 = fixture_u0(small_tr, rng, target=2.0)
        with pytest.raises(SmallnessError):
            picard_solve(u0, small_solve_config(smallness=1.0), small_tr)

    def test_large_data_fails_loudly(self, small_tr, rng):
        u0 = fixture_u0(small_tr, rng, target=2000.0)
        cfg = small_solve_config(smallness=1e9, divergence_tol=1e9, max_iter=6)
        with pytest.raises(NonContractionError):
            picard_solve(u0, cfg, small_tr)

    def test_rejects_divergent_data(self, small_tr, small_grid, rng):
        bad = (
            single_wavelet_coeffs(small_grid, (1, 0), 0, (1, 1)),
            single_wavelet_coeffs(small_grid, (0, 1), 0, (1, 1)),
        )
        from meyerflow.errors import DivergenceDriftError

        with pytest.raises(DivergenceDriftError):
            picard_solve(bad, small_solve_config(), small_tr)

    def test_quadratic_smallness_scaling(self, small_tr, rng):
        u0 = fixture_u0(small_tr, rng)
        cfg = small_solve_config()
        deltas = [1e-2, 1e-3, 1e-4]
        gaps = []
        for delta in deltas:
            scaled = tuple(c * (delta / 1e-3) for c in u0)
            traj, _ = picard_solve(scaled, cfg, small_tr)
            heat_states = [
                tuple(heat_flow(c, float(t), small_tr) for c in scaled)
                for t in traj.mesh
            ]
            gaps.append(
                workspace_norm(traj - Trajectory(traj.mesh, heat_states),
                               small_params()).norm
            )
        slope = float(np.polyfit(np.log(deltas), np.log(gaps), 1)[0])
        assert abs(slope - 2.0) <= 0.1

    def test_scaling_symmetry(self, small_tr, small_grid, bank, rng):
        u0 = fixture_u0(small_tr, rng)
        cfg = small_solve_config()
        traj, _ = picard_solve(u0, cfg, small_tr)
        tr2 = WaveletTransform(bank, small_grid.scaled(1))
        cfg2 = small_solve_config(t_min=cfg.t_min / 4, t_max=cfg.t_max / 4)
        traj2, _ = picard_solve(tuple(scale_map(c, 1) for c in u0), cfg2, tr2)
        worst = 0.0
        ref = 0.0
        for i in range(len(traj.mesh)):
            expect = tuple(scale_map(c, 1) for c in traj.states[i])
            for a in range(2):
                for key in expect[a].levels:
                    worst = max(worst, float(np.abs(
                        expect[a].levels[key] - traj2.states[i][a].levels[key]
                    ).max()))
                    ref = max(ref, float(np.abs(expect[a].levels[key]).max()))
        assert worst <= 1e-8 * ref


class TestResidual:
    def test_zero_everything(self, small_tr, small_grid):
        mesh = small_solve_config().mesh()
        zero = (CoeffField(small_grid), CoeffField(small_grid))
        traj = Trajectory(mesh, [zero] * len(mesh), zero_state=zero)
        assert residual(traj, zero, small_solve_config(), small_tr) == 0.0

    def test_converged_output_recheck(self, small_tr, rng):
        u0 = fixture_u0(small_tr, rng)
        cfg = small_solve_config()
        traj, report = picard_solve(u0, cfg, small_tr)
        recomputed = residual(traj, u0, cfg, small_tr)
        assert recomputed <= cfg.residual_tol
        assert recomputed == pytest.approx(report.residual, rel=1e-6, abs=1e-18)

    def test_heat_only_residual_equals_bilinear_norm(self, small_tr, rng):
        # residual of the zeroth iterate is exactly the Duhamel correction
        u0 = fixture_u0(small_tr, rng)
        cfg = small_solve_config()
        mesh = cfg.mesh()
        heat_states = [
            tuple(heat_flow(c, float(t), small_tr) for c in u0) for t in mesh
        ]
        traj = Trajectory(mesh, heat_states, zero_state=u0)
        res = residual(traj, u0, cfg, small_tr)
        correction = duhamel_trajectory(traj, small_tr)
        expect = workspace_norm(correction, cfg.params, validate=False).norm
        assert res == pytest.approx(expect, rel=1e-9)


class TestGevreyDiagnostic:
    def test_zero_trajectory(self, small_tr, small_grid):
        mesh = small_solve_config().mesh()
        zero = (CoeffField(small_grid), CoeffField(small_grid))
        traj = Trajectory(mesh, [zero] * len(mesh))
        params = SpaceParams(n=2, p=4.0, q=2.0, r=2.0, m=1.2, m_prime=0.1,
                             gamma=0.01)
        out = gevrey_diagnostic(traj, 0.01, params, small_tr)
        assert out["workspace_norm"] == 0.0

    def test_gamma_zero_consistency(self, small_tr, rng):
        u0 = fixture_u0(small_tr, rng)
        traj, _ = picard_solve(u0, small_solve_config(), small_tr)
        out = gevrey_diagnostic(traj, 0.0, small_params(), small_tr)
        base = workspace_norm(traj, small_params()).norm
        assert abs(out["workspace_norm"] - base) <= 1e-12 * base

    def test_admissible_gamma_finite(self, small_tr, rng):
        u0 = fixture_u0(small_tr, rng)
        traj, _ = picard_solve(u0, small_solve_config(), small_tr)
        params = SpaceParams(n=2, p=4.0, q=2.0, r=2.0, m=1.2, m_prime=0.1,
                             gamma=0.01)
        out = gevrey_diagnostic(traj, 0.01, params, small_tr)
        assert math.isfinite(out["workspace_norm"])
        assert all(math.isfinite(v) for v in out["level_profiles"].values())

    def test_rejects_inadmissible_gamma(self, small_tr, small_grid):
        mesh = small_solve_config().mesh()
        zero = (CoeffField(small_grid),)
        traj = Trajectory(mesh, [zero] * len(mesh))
        params = SpaceParams(n=2, p=4.0, q=2.0, r=2.0, m=1.2, m_prime=0.1)
        with pytest.raises(ConfigError):
            gevrey_diagnostic(traj, 0.4, params, small_tr)

    def test_threshold_arithmetic(self):
        # n=3, p=4, m=1 admissible ceiling and m' bound
        from meyerflow.lorentz import gamma_ceiling

        assert gamma_ceiling(3, 4.0, 1.0) == pytest.approx(1 / 64)
        params = SpaceParams(n=3, p=4.0, q=2.0, r=2.0, m=1.0, m_prime=0.3,
                             gamma=0.015)
        assert validate_params(params, 2) == []
        too_big = SpaceParams(n=3, p=4.0, q=2.0, r=2.0, m=1.0, m_prime=0.32,
                              gamma=0.015)
        assert any("m'" in v for v in validate_params(too_big, 2))


class TestSolveConfig:
    def test_rejects_bad_tolerances(self):
        with pytest.raises(ConfigError):
            SolveConfig(params=small_params(), contraction_tol=0.0)

    def test_mesh_covers_span(self):
        cfg = small_solve_config()
        mesh = cfg.mesh()
        assert mesh[0] == pytest.approx(cfg.t_min)
        assert mesh[-1] >= cfg.t_max * (1 - 1e-12)

    def test_report_round_trip(self):
        report = PicardReport(
            iterations=3, difference_norms=[1e-3, 1e-6], contraction_ratios=[1e-3],
            residual=1e-12, workspace_norm=0.5, gevrey_norm=0.0,
            initial_norm=1e-3, divergence_max=1e-9, converged=True,
            params=small_params(),
        )
        d = report.as_dict()
        assert d["iterations"] == 3 and d["converged"] is True
