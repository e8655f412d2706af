"""Verification suites: every estimate gets a numerical check with measured
constants, one suite per module.  Suites return structured reports with
pass/fail per check plus plot-ready tables.
"""

from __future__ import annotations

import math
import time

import numpy as np

from . import ensembles
from .errors import NonContractionError
from .lorentz import (
    CellFunction,
    SpaceParams,
    coefficient_growth_bound,
    f_norm,
    level_majorant,
    lorentz_power,
    lorentz_quasi_norm,
    scale_map,
    subadditivity_margin,
    upsample_to,
    validate_params,
    workspace_norm,
)
from .maximal import (
    brute_force_maximal,
    decay_weight_ratio,
    fefferman_stein_ratio,
    hl_maximal,
)
from .meyer import (
    CoeffField,
    GridConfig,
    WaveletIndex,
    WaveletTransform,
    build_filter_bank,
    component_signs,
    padded_points,
)
from .paraproduct import (
    FlowKind,
    QuadratureSpec,
    decompose_product,
    duhamel_flow_components,
    kernel_coefficient,
    make_probe,
    max_divergence,
)
from .semigroup import (
    decay_check,
    embedding_check,
    fit_decay_rate,
    gevrey_flow,
    heat_flow,
    smoothing_trajectory,
)
from .solver import (
    SolveConfig,
    duhamel_trajectory,
    gevrey_diagnostic,
    picard_solve,
    residual,
)
from .trajectory import Trajectory, geometric_mesh, window_of

SUITES = ("meyer", "lorentz", "maximal", "semigroup", "kernel", "solver")


def _check(name, measured, threshold, passed=None, mode="<=", detail=None):
    if passed is None:
        passed = measured <= threshold if mode == "<=" else measured >= threshold
    rec = {
        "name": name,
        "measured": float(measured),
        "threshold": float(threshold),
        "mode": mode,
        "passed": bool(passed),
    }
    if detail:
        rec["detail"] = detail
    return rec


def _suite_result(name, checks, tables=None, extras=None):
    out = {
        "suite": name,
        "passed": all(c["passed"] for c in checks),
        "checks": checks,
    }
    if tables:
        out["tables"] = tables
    if extras:
        out.update(extras)
    return out


def _rel(a, b):
    return a / b if b else (0.0 if a == 0.0 else math.inf)


# ---------------------------------------------------------------------------
# meyer
# ---------------------------------------------------------------------------

def verify_meyer(cfg, rng=None):
    rng = rng or np.random.default_rng(cfg.seed)
    bank = cfg.bank()
    grid = cfg.grid()
    tr = WaveletTransform(bank, grid)
    checks = []

    # filter identities on the tabulation grid
    xv = bank.xi_varphi
    sel = (xv >= 2 * math.pi / 3) & (xv <= 4 * math.pi / 3)
    gap = np.abs(
        bank.varphi_exact(xv[sel]) ** 2
        + bank.varphi_exact(2 * math.pi - xv[sel]) ** 2
        - 1.0
    ).max()
    checks.append(_check("partition_identity_tab_grid", gap, 1e-12))
    checks.append(
        _check("varphi_at_pi", abs(bank.varphi_at(math.pi) - 1 / math.sqrt(2)), 1e-12)
    )
    xp = bank.xi_phi0
    plateau = np.abs(bank.phi0_hat[np.abs(xp) <= 2 * math.pi / 3] - 1.0).max()
    outside = np.array([4 * math.pi / 3, 1.5 * math.pi, 2 * math.pi, 3 * math.pi])
    support = max(
        float(np.abs(bank.phi0_at(outside)).max()),
        float(np.abs(bank.phi0_hat[np.abs(xp) >= 4 * math.pi / 3 - 1e-12]).max(initial=0.0)),
    )
    checks.append(_check("phi0_plateau", plateau, 1e-12))
    checks.append(_check("phi0_support", support, 1e-12))

    # orthonormality over randomized index pairs
    signs = component_signs(grid.dim)
    h = grid.side / grid.grid_points
    cache = {}

    def wave(eps, j, k):
        key = (eps, j, k)
        if key not in cache:
            cache[key] = tr.wavelet_field(WaveletIndex(eps, j, k)).values
        return cache[key]

    pairs = int(cfg.doc["verify"]["pairs"])
    worst = 0.0
    for trial in range(pairs):
        j1 = int(rng.integers(grid.j_min, grid.j_max + 1))
        j2 = int(rng.integers(grid.j_min, grid.j_max + 1))
        e1 = signs[rng.integers(len(signs))]
        e2 = signs[rng.integers(len(signs))]
        k1 = tuple(int(v) for v in rng.integers(0, grid.lattice_size(j1), grid.dim))
        k2 = tuple(int(v) for v in rng.integers(0, grid.lattice_size(j2), grid.dim))
        if trial % 5 == 0:
            e2, j2, k2 = e1, j1, k1  # exercise the diagonal
        ip = float(np.sum(wave(e1, j1, k1) * wave(e2, j2, k2)) * h**grid.dim)
        expect = 1.0 if (e1, j1, k1) == (e2, j2, k2) else 0.0
        worst = max(worst, abs(ip - expect))
    checks.append(_check("orthonormality_dev", worst, 1e-6))
    cache.clear()

    # round trip and Parseval on a random band-limited field
    fld = ensembles.random_band_limited_field(tr, rng)
    coeffs = tr.analyze(fld)
    back = tr.synthesize(coeffs)
    rt = np.linalg.norm(back.values - fld.values) / np.linalg.norm(fld.values)
    checks.append(_check("round_trip_rel", rt, 1e-8))
    pv = abs(coeffs.sq_sum() - fld.l2_norm() ** 2) / fld.l2_norm() ** 2
    checks.append(_check("parseval_rel", pv, 1e-6))

    # ring support of per-level pieces
    leak = 0.0
    for j in grid.levels:
        for eps in signs:
            c = CoeffField(grid)
            m = grid.lattice_size(j)
            c.levels[(eps, j)] = rng.standard_normal((m,) * grid.dim)
            spec = tr.coeffs_to_spectrum(c)
            power = np.abs(spec) ** 2
            n = grid.grid_points
            b = grid.band_radius(j)
            idx = np.abs(np.arange(-(n // 2), n - n // 2))
            inside = np.ones((n,) * grid.dim, dtype=bool)
            for axis, bit in enumerate(eps):
                shape = [1] * grid.dim
                shape[axis] = n
                ax = idx.reshape(shape)
                lo_edge = int(m / 3)  # (2pi/3) 2^j in index units = M/3
                cond = ax <= b
                if bit == 1:
                    cond &= ax >= lo_edge
                inside &= cond
            outside = float(power[~inside].sum())
            total = float(power.sum())
            if total > 0:
                leak = max(leak, outside / total)
    checks.append(_check("ring_leakage_rel", leak, 1e-10))
    return _suite_result("meyer", checks)


# ---------------------------------------------------------------------------
# lorentz
# ---------------------------------------------------------------------------

def verify_lorentz(cfg, rng=None):
    rng = rng or np.random.default_rng(cfg.seed)
    grid = cfg.grid()
    tr = cfg.transform()
    checks = []

    # criticality: scale invariance at s = n/p - 1
    tuples = [(4.0, 2.0, 2.0), (4.0, math.inf, 2.0), (3.0, 1.0, 3.0)]
    worst = 0.0
    for p, q, r in tuples:
        params = SpaceParams(n=grid.dim, p=p, q=q, r=r, m=1.2, m_prime=0.1)
        for trial in range(5):
            c = ensembles.random_coeff_field(grid, rng, density=0.1)
            base = f_norm(c, params)
            for i in (-2, -1, 1, 2):
                dev = abs(f_norm(scale_map(c, i), params) - base)
                worst = max(worst, _rel(dev, base))
    checks.append(_check("criticality_scale_invariance", worst, 1e-12))

    # power subadditivity of the truncation utility
    margin = 0.0
    for _ in range(50):
        a = rng.random(int(rng.integers(1, 30))) * 10.0
        rho = float(rng.uniform(0.05, 1.0))
        margin = min(margin, subadditivity_margin(a, rho))
    checks.append(_check("power_subadditivity_min_margin", margin, 0.0, mode=">="))

    # monotonicity under coefficient increase
    params = SpaceParams(n=grid.dim, p=4.0, q=2.0, r=2.0, m=1.2, m_prime=0.1)
    c = ensembles.random_coeff_field(grid, rng, density=0.1)
    bumped = c.copy()
    for key in bumped.levels:
        bumped.levels[key] = np.abs(bumped.levels[key]) * 1.25
    base_abs = c.copy()
    for key in base_abs.levels:
        base_abs.levels[key] = np.abs(base_abs.levels[key])
    checks.append(
        _check(
            "norm_monotone_under_growth",
            f_norm(bumped, params) - f_norm(base_abs, params),
            0.0,
            mode=">=",
        )
    )

    # dyadic vs layer-cake bracket, and exact L^p agreement at r = p
    g = level_majorant(ensembles.random_coeff_field(grid, rng, density=0.2), grid.j_max)
    p, r = 4.0, 2.0
    dy = lorentz_quasi_norm(g, p, r, scheme="dyadic")
    ig = lorentz_quasi_norm(g, p, r, scheme="integral")
    lo = (1 - 2.0**-r) ** (1 / r)
    hi = (2.0**r - 1) ** (1 / r)
    ratio = ig / dy
    checks.append(
        _check("dyadic_integral_bracket", ratio, hi, passed=lo <= ratio <= hi,
               detail={"lower": lo, "upper": hi})
    )
    lp = lorentz_quasi_norm(g, p, p, scheme="integral")
    classical = float(np.sum(g.values**p) * g.cell_volume) ** (1 / p)
    checks.append(_check("layer_cake_equals_lp", _rel(abs(lp - classical), classical), 1e-12))

    # work-space vs instantaneous norm containment at m' = 0
    params0 = SpaceParams(n=grid.dim, p=4.0, q=2.0, r=2.0, m=1.2, m_prime=0.0)
    src = ensembles.random_coeff_field(grid, rng, density=0.1)
    traj = smoothing_trajectory(src, tr, cfg.t_grid())
    ws = workspace_norm(traj, params0)
    contain_ok = True
    measured_gap = math.inf
    for i, t in enumerate(traj.mesh):
        j_t = window_of(float(t))
        state = traj.states[i]
        m_top = grid.lattice_size(grid.j_max)
        acc = np.zeros((m_top,) * grid.dim)
        for j in grid.levels:
            if j >= j_t:
                continue
            f_j = upsample_to(level_majorant(state, j).values, m_top)
            acc += 2.0 ** (j * params0.s * params0.q) * f_j**params0.q
        inst = lorentz_power(
            CellFunction(acc ** (1 / params0.q), 2.0 ** (-grid.dim * grid.j_max)),
            params0.p, params0.r,
        )
        window_pow = next(
            (w["low"] for w in ws.windows if w["j_t"] == j_t), 0.0
        )
        measured_gap = min(measured_gap, window_pow - inst + 1e-300)
        if inst > window_pow * (1 + 1e-9) + 1e-300:
            contain_ok = False
    checks.append(
        _check("workspace_dominates_instantaneous", measured_gap, 0.0,
               passed=contain_ok, mode=">=")
    )

    # coefficient growth bound: finite and proportional to the work-space norm
    hi_b, lo_b = coefficient_growth_bound(traj, params)
    wsn = workspace_norm(traj, params).norm
    cconst = _rel(max(hi_b, lo_b), wsn)
    checks.append(
        _check("coefficient_growth_bound_finite", cconst, math.inf,
               passed=math.isfinite(cconst), detail={"C": cconst})
    )
    return _suite_result("lorentz", checks)


# ---------------------------------------------------------------------------
# maximal
# ---------------------------------------------------------------------------

def _maximal_grid(dim):
    return GridConfig(dim=dim, side=8.0, grid_points=64 if dim == 2 else 64,
                      j_min=-1, j_max=1)


def verify_maximal(cfg, rng=None):
    rng = rng or np.random.default_rng(cfg.seed)
    dim = cfg.grid().dim
    grid = _maximal_grid(dim)
    decay_n = cfg.decay_n()
    checks = []

    g = CellFunction(rng.random((16,) * dim), 8.0**dim / 16**dim)
    brute_dev = np.abs(hl_maximal(g).values - brute_force_maximal(g).values).max()
    checks.append(_check("maximal_matches_brute_force", brute_dev, 1e-12))
    checks.append(
        _check(
            "maximal_dominates_identity",
            float((hl_maximal(g).values - g.values).min()),
            0.0,
            mode=">=",
        )
    )
    g2 = CellFunction(rng.random((16,) * dim), g.cell_volume)
    sub = hl_maximal(CellFunction(g.values + g2.values, g.cell_volume)).values - (
        hl_maximal(g).values + hl_maximal(g2).values
    )
    checks.append(_check("maximal_sublinear", float(sub.max()), 1e-12))

    ensemble = int(cfg.doc["verify"]["maximal_ensemble"])
    worst_same = 0.0
    worst_cross = 0.0
    for _ in range(ensemble):
        c = ensembles.random_coeff_field(grid, rng, density=0.06)
        for j in grid.levels:
            for jp in grid.levels:
                ratio = decay_weight_ratio(c, j, jp, decay_n)
                if j >= jp:
                    worst_same = max(worst_same, ratio)
                else:
                    worst_cross = max(worst_cross, ratio)
    checks.append(
        _check("weight_bound_constant_high_to_low", worst_same, math.inf,
               passed=math.isfinite(worst_same), detail={"C": worst_same})
    )
    checks.append(
        _check("weight_bound_constant_low_to_high", worst_cross, math.inf,
               passed=math.isfinite(worst_cross), detail={"C": worst_cross})
    )

    # Fefferman-Stein ratios: bounded over the ensemble, stable under doubling
    params = cfg.space_params()
    q = params.q if params.q != math.inf else 2.0
    ratios = []
    for _ in range(ensemble):
        c = ensembles.random_coeff_field(grid, rng, density=0.1)
        m_top = grid.lattice_size(grid.j_max)
        fam = [
            CellFunction(
                upsample_to(level_majorant(c, j).values, m_top),
                2.0 ** (-grid.dim * grid.j_max),
            )
            for j in grid.levels
        ]
        ratios.append(fefferman_stein_ratio(fam, params.p, q, 2.0))
        fam2 = [
            CellFunction(upsample_to(f.values, 2 * m_top), f.cell_volume / 2**grid.dim)
            for f in fam
        ]
        doubled = fefferman_stein_ratio(fam2, params.p, q, 2.0)
        if abs(doubled - ratios[-1]) > 0.1 * ratios[-1]:
            ratios.append(math.inf)
    fs_max = max(ratios)
    checks.append(
        _check("fefferman_stein_bounded_stable", fs_max, math.inf,
               passed=math.isfinite(fs_max), detail={"max_ratio": fs_max})
    )
    return _suite_result(
        "maximal",
        checks,
        extras={"constants": {"high_to_low": worst_same, "low_to_high": worst_cross,
                              "fefferman_stein": fs_max}},
    )


# ---------------------------------------------------------------------------
# semigroup
# ---------------------------------------------------------------------------

def _admissible_tuples(dim):
    if dim == 2:
        return [
            SpaceParams(n=2, p=4.0, q=2.0, r=2.0, m=1.2, m_prime=0.1, gamma=0.01),
            SpaceParams(n=2, p=4.0, q=math.inf, r=2.0, m=1.2, m_prime=0.1, gamma=0.01),
            SpaceParams(n=2, p=3.0, q=1.0, r=3.0, m=1.2, m_prime=0.1, gamma=0.01),
        ]
    return [
        SpaceParams(n=3, p=4.0, q=2.0, r=2.0, m=1.2, m_prime=0.1, gamma=0.01),
        SpaceParams(n=3, p=4.0, q=math.inf, r=2.0, m=1.2, m_prime=0.1, gamma=0.01),
        SpaceParams(n=3, p=3.5, q=1.0, r=3.0, m=1.2, m_prime=0.1, gamma=0.01),
    ]


def verify_semigroup(cfg, rng=None):
    rng = rng or np.random.default_rng(cfg.seed)
    grid = cfg.grid()
    tr = cfg.transform()
    checks = []

    # analysis-consistent input: multiplier flows are exact on the
    # reproducing subspace, which is where all physical states live
    c = tr.analyze(ensembles.random_band_limited_field(tr, rng))
    h1 = heat_flow(heat_flow(c, 0.3, tr), 0.2, tr)
    h2 = heat_flow(c, 0.5, tr)
    dev = max(np.abs(h1.levels[k] - h2.levels[k]).max() for k in c.levels)
    ref = c.max_abs()
    checks.append(_check("semigroup_law", _rel(dev, ref), 1e-10))

    g1 = gevrey_flow(gevrey_flow(c, 0.25, 0.2, tr, sign=-1), 0.25, 0.2, tr, sign=+1)
    dev = max(np.abs(g1.levels[k] - c.levels[k]).max() for k in c.levels)
    checks.append(_check("gevrey_inverse_identity", _rel(dev, ref), 1e-10))

    # strict contraction of every magnitude for single wavelets
    w = ensembles.single_wavelet_coeffs(grid, (1,) + (0,) * (grid.dim - 1), 0, (1,) * grid.dim)
    flowed = heat_flow(w, 0.1, tr)
    checks.append(
        _check("heat_contracts_coefficients",
               flowed.max_abs(), 1.0, mode="<=",
               passed=flowed.max_abs() < 1.0)
    )

    # decay verifier on single-wavelet probes across t 2^(2j) in [1, 256]
    eps0 = (1,) + (0,) * (grid.dim - 1)
    j0 = 0
    src = ensembles.single_wavelet_coeffs(grid, eps0, j0, (1,) * grid.dim)
    scaled = np.geomspace(1.0, 256.0, 12)
    c_t, r2 = fit_decay_rate(tr, eps0, j0, scaled, gamma=0.0)
    checks.append(_check("decay_rate_positive", c_t, 0.0, mode=">="))
    checks.append(_check("decay_fit_r_squared", r2, 0.99, mode=">="))

    t_set = [0.05, 0.2, 1.0]
    report = decay_check(src, t_set, cfg.decay_n(), tr)
    checks.append(_check("cross_level_leak", report.cross_level_leak, 1e-12))
    checks.append(
        _check("decay_ratios_finite", max(report.max_ratio_high, report.max_ratio_low),
               math.inf, passed=math.isfinite(report.max_ratio_high)
               and math.isfinite(report.max_ratio_low))
    )

    # embedding ratio ensemble with resolution doubling
    ens = int(cfg.doc["verify"]["ensemble"])
    grid2 = GridConfig(dim=grid.dim, side=grid.side,
                       grid_points=2 * grid.grid_points,
                       j_min=grid.j_min, j_max=grid.j_max)
    tr2 = WaveletTransform(tr.bank, grid2)
    tuples = _admissible_tuples(grid.dim)
    ratio_rows = []
    stable = True
    finite = True
    for params in tuples:
        worst = 0.0
        for _ in range(ens):
            f = ensembles.random_coeff_field(grid, rng, density=0.08)
            res = embedding_check(f, params, tr, t_grid=cfg.t_grid())
            f2 = CoeffField(grid2)
            for (eps, j), arr in f.levels.items():
                f2.levels[(eps, j)] = arr.copy()
            res2 = embedding_check(f2, params, tr2, t_grid=cfg.t_grid())
            if not (math.isfinite(res["ratio"]) and math.isfinite(res2["ratio"])):
                finite = False
            if res["ratio"] > 0 and abs(res2["ratio"] - res["ratio"]) > 0.1 * res["ratio"]:
                stable = False
            worst = max(worst, res["ratio"])
        ratio_rows.append(
            {"p": params.p, "q": "inf" if params.q == math.inf else params.q,
             "r": params.r, "max_ratio": worst}
        )
    checks.append(
        _check("embedding_ratios_finite_stable", 0.0, 0.0,
               passed=finite and stable, detail={"rows": ratio_rows})
    )
    return _suite_result(
        "semigroup", checks,
        tables={"embedding_ratios": ratio_rows,
                "decay_fits": report.level_fits},
        extras={"fitted_c_tilde": c_t, "r_squared": r2},
    )


# ---------------------------------------------------------------------------
# kernel (paraproduct estimates)
# ---------------------------------------------------------------------------

def _sweep_grid(dim, side=16.0):
    if dim == 2:
        return GridConfig(dim=2, side=side, grid_points=1024, j_min=-2, j_max=4)
    return GridConfig(dim=3, side=8.0, grid_points=128, j_min=-1, j_max=2)


def distance_sweep(cfg, rng=None, distances=(4, 8, 16, 32, 64)):
    """Log-log decay of the kernel coefficient along an output-lattice sweep."""
    dim = cfg.grid().dim
    decay_n = cfg.decay_n()
    transition = cfg.doc["verify"]["kernel_transition"]
    bank = build_filter_bank(cfg.doc["bank"]["profile_resolution"], transition)
    grid = _sweep_grid(dim)
    tr = WaveletTransform(bank, grid)
    j = grid.j_max
    t = 1.5 * 4.0 ** (-j)
    s = t - 0.25 * 4.0 ** (-j)
    gamma = 0.05
    derivs = (1, 1, 2) if dim >= 2 else (1, 1, 1)
    eps_a = (1,) + (0,) * (dim - 1)
    eps_b = (0, 1) + (0,) * (dim - 2)
    in1 = (eps_a, j, (0,) * dim)
    in2 = (eps_b, j, (0,) * dim)
    if dim == 3:
        distances = tuple(d for d in distances if d <= grid.lattice_size(j) // 4)
    rows = []
    for d in distances:
        best = 0.0
        for off in (0, 1, 2):
            k = (d + off,) + (0,) * (dim - 1)
            best = max(best, kernel_coefficient(tr, (eps_a, j, k), in1, in2,
                                                t, s, gamma, derivs))
        rows.append({"distance": d, "value": best})
    x = np.log1p([r["distance"] for r in rows])
    y = np.log([r["value"] for r in rows])
    slope = float(np.polyfit(x, y, 1)[0])
    return slope, rows


def time_sweep(cfg, rng=None):
    """Fitted heat-decay constant from a (t - s) sweep at fixed indices."""
    grid = cfg.grid()
    tr = cfg.transform()
    j = grid.j_max
    gamma = 0.05
    derivs = (1, 1, 2) if grid.dim >= 2 else (1, 1, 1)
    eps_a = (1,) + (0,) * (grid.dim - 1)
    eps_b = (0, 1) + (0,) * (grid.dim - 2)
    t = 1.5 * 4.0 ** (-j)
    rows = []
    for gap_scaled in np.geomspace(0.125, 1.25, 8):
        s = t - gap_scaled * 4.0 ** (-j)
        a = kernel_coefficient(
            tr, (eps_a, j, (0,) * grid.dim),
            (eps_a, j, (0,) * grid.dim), (eps_b, j, (0,) * grid.dim),
            t, s, gamma, derivs,
        )
        rows.append({"gap_scaled": float(gap_scaled), "value": a})
    x = np.array([r["gap_scaled"] for r in rows])
    y = np.log([r["value"] for r in rows])
    c_fit = -float(np.polyfit(x, y, 1)[0])
    return c_fit, rows


def kernel_probe_batch(cfg, rng=None):
    """Case-tagged probes for both pairing regimes with fitted constants."""
    rng = rng or np.random.default_rng(cfg.seed)
    grid = cfg.grid()
    tr = cfg.transform()
    decay_n = cfg.decay_n()
    gamma = 0.05
    derivs = (1, 1, 2) if grid.dim >= 2 else (1, 1, 1)
    c_fit, _ = time_sweep(cfg, rng)
    c_use = max(c_fit, 0.0)
    j = grid.j_max
    jpp_b2 = j - 3
    eps_a = (1,) + (0,) * (grid.dim - 1)
    eps_b = (0, 1) + (0,) * (grid.dim - 2)
    t = 1.5 * 4.0 ** (-j)
    s = t - 0.25 * 4.0 ** (-j)
    probes = []
    m_j = grid.lattice_size(j)
    for trial in range(24):
        k = tuple(int(v) for v in rng.integers(0, 5, grid.dim))
        k_p = tuple(int(v) for v in rng.integers(0, m_j, grid.dim))
        k_pp = tuple(int(v) for v in rng.integers(0, m_j, grid.dim))
        probes.append(
            make_probe(tr, "B1",
                       (eps_a, j, tuple((a + b) % m_j for a, b in zip(k, k_p))),
                       (eps_a, j, k_p), (eps_b, j, k_pp),
                       t, s, gamma, decay_n, derivs, c=c_use)
        )
    if jpp_b2 in grid.levels:
        m_pp = grid.lattice_size(jpp_b2)
        for trial in range(12):
            k_p = tuple(int(v) for v in rng.integers(0, m_j, grid.dim))
            k_pp = tuple(int(v) for v in rng.integers(0, m_pp, grid.dim))
            probes.append(
                make_probe(tr, "B2", (eps_a, j, k_p), (eps_a, j, k_p),
                           (eps_b, jpp_b2, k_pp),
                           t, s, gamma, decay_n, derivs, c=c_use)
            )
    return probes, c_fit


def verify_kernel(cfg, rng=None, include_sweep=True):
    rng = rng or np.random.default_rng(cfg.seed)
    grid = cfg.grid()
    tr = cfg.transform()
    decay_n = cfg.decay_n()
    checks = []
    tables = {}

    probes, c_fit = kernel_probe_batch(cfg, rng)
    ratios = [p.ratio for p in probes if p.measured > 1e-280]
    finite = all(math.isfinite(r) for r in ratios)
    checks.append(
        _check("probe_ratios_finite", max(ratios) if ratios else 0.0, math.inf,
               passed=finite, detail={"count": len(probes)})
    )
    checks.append(_check("time_sweep_c_positive", c_fit, 0.0, mode=">="))
    tables["probes"] = [p.csv_row() for p in probes]

    if include_sweep:
        slope, rows = distance_sweep(cfg, rng)
        checks.append(
            _check("distance_sweep_slope", abs(slope + decay_n), 0.5,
                   detail={"slope": slope, "target": -decay_n})
        )
        tables["distance_sweep"] = rows

    # flow decomposition reconstructs the product
    worst = 0.0
    for _ in range(max(4, int(cfg.doc["verify"]["ensemble"]) // 5)):
        u = ensembles.random_coeff_field(grid, rng, density=0.08)
        v = ensembles.random_coeff_field(grid, rng, density=0.08)
        flows, prod = decompose_product(u, v, tr)
        total = sum(flows.values())
        scale = float(np.abs(prod).max()) or 1.0
        worst = max(worst, float(np.abs(total - prod).max()) / scale)
    checks.append(_check("flow_sum_reconstructs_product", worst, 1e-8))

    # flow operators keep unit-norm inputs bounded in the work space
    params = _admissible_tuples(grid.dim)[0]
    mesh = geometric_mesh(2.0**-4, 2.0, per_window=4)
    out_times = [float(t) for t in [mesh[0], mesh[len(mesh) // 2], mesh[-1]]]
    quad = QuadratureSpec(subintervals=6, nodes=4)
    flow_norms = {1: [], 2: [], 3: []}
    for trial in range(3):
        u = ensembles.random_coeff_field(grid, rng, density=0.05)
        v = ensembles.random_coeff_field(grid, rng, density=0.05)
        tu = smoothing_trajectory(u, tr, mesh)
        tv = smoothing_trajectory(v, tr, mesh)
        nu = workspace_norm(tu, params).norm
        nv = workspace_norm(tv, params).norm
        tu = tu.map_states(lambda c, t: c * (1.0 / nu))
        tv = tv.map_states(lambda c, t: c * (1.0 / nv))
        out_states = {flow: [] for flow in (1, 2, 3)}
        for t_out in out_times:
            comps = duhamel_flow_components(tu, tv, t_out, params.gamma,
                                            (1, 1, min(2, grid.dim)), tr,
                                            quad=quad, operator="third")
            for flow in (1, 2, 3):
                out_states[flow].append((comps[flow],))
        for flow in (1, 2, 3):
            traj = Trajectory(np.asarray(out_times), out_states[flow])
            flow_norms[flow].append(
                workspace_norm(traj, params, validate=False).norm
            )
    flow_max = {flow: max(vals) for flow, vals in flow_norms.items()}
    checks.append(
        _check("flow_operators_bounded", max(flow_max.values()), math.inf,
               passed=all(math.isfinite(v) for v in flow_max.values()),
               detail={"max_norms": flow_max})
    )
    tables["flow_norms"] = [
        {"flow": flow, "max_norm": val} for flow, val in flow_max.items()
    ]
    return _suite_result("kernel", checks, tables=tables,
                         extras={"fitted_c": c_fit})


# ---------------------------------------------------------------------------
# solver
# ---------------------------------------------------------------------------

def solver_fixture(cfg, rng, norm_target=1e-3):
    tr = cfg.transform()
    params = cfg.space_params()
    raw = ensembles.random_divergence_free(tr, rng)
    scale = norm_target / f_norm(raw, params)
    return tuple(c * scale for c in raw), tr


def verify_solver(cfg, rng=None):
    rng = rng or np.random.default_rng(cfg.seed)
    grid = cfg.grid()
    params = cfg.space_params()
    checks = []
    u0, tr = solver_fixture(cfg, rng, norm_target=1e-3)
    solve_cfg = cfg.solve_config()

    t0 = time.time()
    traj, report = picard_solve(u0, solve_cfg, tr)
    elapsed = time.time() - t0
    ratio = max(report.contraction_ratios) if report.contraction_ratios else 0.0
    checks.append(_check("contraction_ratio", ratio, 0.5))
    checks.append(_check("iterations_within_budget", report.iterations, 15))
    checks.append(_check("residual", report.residual, solve_cfg.residual_tol))
    checks.append(_check("divergence_max", report.divergence_max, 1e-6))

    # quadratic smallness scaling
    deltas = [1e-2, 1e-3, 1e-4]
    gaps = []
    for delta in deltas:
        scaled0 = tuple(c * (delta / 1e-3) for c in u0)
        traj_d, _ = picard_solve(scaled0, solve_cfg, tr)
        mesh = traj_d.mesh
        heat_states = [
            tuple(heat_flow(c, float(t), tr) for c in scaled0) for t in mesh
        ]
        gap = workspace_norm(
            traj_d - Trajectory(mesh, heat_states), params
        ).norm
        gaps.append(gap)
    slope = float(np.polyfit(np.log(deltas), np.log(gaps), 1)[0])
    checks.append(
        _check("quadratic_smallness_slope", abs(slope - 2.0), 0.1,
               detail={"slope": slope, "gaps": gaps})
    )

    # discrete scaling symmetry
    tr2 = WaveletTransform(tr.bank, grid.scaled(1))
    u0s = tuple(scale_map(c, 1) for c in u0)
    cfg2 = SolveConfig(
        params=params, smallness=solve_cfg.smallness,
        max_iter=solve_cfg.max_iter, contraction_tol=solve_cfg.contraction_tol,
        residual_tol=solve_cfg.residual_tol,
        t_min=solve_cfg.t_min / 4.0, t_max=solve_cfg.t_max / 4.0,
        samples_per_window=solve_cfg.samples_per_window,
    )
    traj2, _ = picard_solve(u0s, cfg2, tr2)
    worst = 0.0
    scale_ref = 0.0
    for i in range(len(traj.mesh)):
        expect = tuple(scale_map(c, 1) for c in traj.states[i])
        got = traj2.states[i]
        for a in range(grid.dim):
            for key in expect[a].levels:
                worst = max(worst, float(
                    np.abs(expect[a].levels[key] - got[a].levels[key]).max()
                ))
                scale_ref = max(scale_ref, float(np.abs(expect[a].levels[key]).max()))
    checks.append(
        _check("scaling_symmetry", _rel(worst, scale_ref), 1e-8,
               detail={"abs_dev": worst})
    )

    # Gevrey diagnostics on the solved trajectory
    diag0 = gevrey_diagnostic(traj, 0.0, params, tr)
    base = workspace_norm(traj, params).norm
    checks.append(
        _check("gevrey_zero_consistency",
               _rel(abs(diag0["workspace_norm"] - base), base), 1e-12)
    )
    gamma_ok = 0.01
    params_g = SpaceParams(n=params.n, p=max(params.p, params.n + 1.0),
                           q=params.q, r=params.r, m=max(params.m, 1.2),
                           m_prime=0.1, gamma=gamma_ok)
    diag = gevrey_diagnostic(traj, gamma_ok, params_g, tr)
    checks.append(
        _check("gevrey_norm_finite", diag["workspace_norm"], math.inf,
               passed=math.isfinite(diag["workspace_norm"]),
               detail={"norm": diag["workspace_norm"]})
    )
    return _suite_result(
        "solver", checks,
        tables={"difference_norms": [
            {"iteration": i + 1, "norm": d}
            for i, d in enumerate(report.difference_norms)
        ]},
        extras={"report": report.as_dict(), "elapsed_seconds": elapsed},
    )


SUITE_RUNNERS = {
    "meyer": verify_meyer,
    "lorentz": verify_lorentz,
    "maximal": verify_maximal,
    "semigroup": verify_semigroup,
    "kernel": verify_kernel,
    "solver": verify_solver,
}


def run_suite(name, cfg, rng=None):
    if name not in SUITE_RUNNERS:
        raise KeyError(name)
    return SUITE_RUNNERS[name](cfg, rng=rng)
