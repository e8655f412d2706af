"""Heat and Gevrey Fourier multipliers on coefficient fields, plus the
numerical verifiers for coefficient decay and work-space boundedness.

All multipliers act on the centered spectrum, so band limits are preserved
exactly and the flows commute.  Decay rates are measured by regression,
never assumed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import ConfigError, GevreyOverflowError
from .lorentz import f_norm, validate_params, workspace_norm
from .meyer import component_signs
from .trajectory import Trajectory, geometric_mesh

DEFAULT_OVERFLOW_CAP = 700.0


@dataclass(frozen=True)
class DecayEstimateConfig:
    """Sampling plan for the coefficient-decay verifier."""

    decay_n: int
    t_grid: tuple
    gamma: float = 0.0
    overflow_cap: float = DEFAULT_OVERFLOW_CAP


_XI_SQ_CACHE = {}


def xi_squared(grid, n_points=None):
    """|xi|^2 on the centered frequency grid."""
    n = grid.grid_points if n_points is None else n_points
    key = (grid.dim, grid.side, n)
    if key not in _XI_SQ_CACHE:
        xi1 = 2.0 * math.pi * np.arange(-(n // 2), n - n // 2) / grid.side
        grids = np.meshgrid(*([xi1] * grid.dim), indexing="ij")
        _XI_SQ_CACHE[key] = np.add.reduce([g * g for g in grids])
    return _XI_SQ_CACHE[key]


def top_band_xi_sq(grid):
    """Largest |xi|^2 reachable inside the analyzed band."""
    edge = 2.0 * math.pi * grid.band_radius(grid.j_max) / grid.side
    return grid.dim * edge * edge


def gevrey_exponent(grid, t, gamma):
    return t**gamma * top_band_xi_sq(grid) ** gamma


def apply_multiplier(coeffs, transform, mult, time=None):
    """Conjugate a diagonal Fourier multiplier by the wavelet transform."""
    spec = transform.coeffs_to_spectrum(coeffs)
    return transform.spectrum_to_coeffs(spec * mult, time=time)


def heat_flow(coeffs, t, transform):
    """Coefficients of exp(t*Laplacian) f; exact for band-limited data."""
    if t < 0:
        raise ConfigError(f"heat flow requires t >= 0, got {t}")
    if t == 0.0:
        return coeffs.copy(time=0.0)
    mult = np.exp(-t * xi_squared(transform.grid))
    return apply_multiplier(coeffs, transform, mult, time=t)


def gevrey_flow(coeffs, t, gamma, transform, sign=+1, overflow_cap=DEFAULT_OVERFLOW_CAP):
    """Multiply the spectrum by exp(sign * t^gamma |xi|^(2 gamma)).

    ``sign=-1`` realizes the damping conjugation factor, ``sign=+1`` the
    growth factor.  ``gamma=0`` is the identity by convention, matching the
    gamma -> 0 limits used throughout.  The growth direction is checked
    against the overflow cap and fails loudly.
    """
    if not 0.0 <= gamma <= 0.5:
        raise ConfigError(f"gamma must lie in [0, 1/2], got {gamma}")
    if t < 0:
        raise ConfigError(f"gevrey flow requires t >= 0, got {t}")
    if gamma == 0.0 or t == 0.0:
        return coeffs.copy()
    if sign > 0:
        exponent = gevrey_exponent(transform.grid, t, gamma)
        if exponent > overflow_cap:
            raise GevreyOverflowError(exponent, overflow_cap, t, transform.grid.j_max)
    mult = np.exp(
        float(sign) * t**gamma * xi_squared(transform.grid) ** gamma
    )
    return apply_multiplier(coeffs, transform, mult, time=coeffs.time)


def smoothing_flow(coeffs, t, gamma, transform, overflow_cap=DEFAULT_OVERFLOW_CAP):
    """Combined exp((-t*Lap)^gamma) exp(t*Lap) applied in one spectrum pass."""
    if t < 0:
        raise ConfigError(f"flow requires t >= 0, got {t}")
    if t == 0.0:
        return coeffs.copy(time=0.0)
    if gamma > 0.0:
        exponent = gevrey_exponent(transform.grid, t, gamma)
        if exponent > overflow_cap:
            raise GevreyOverflowError(exponent, overflow_cap, t, transform.grid.j_max)
    xi2 = xi_squared(transform.grid)
    log_mult = -t * xi2
    if gamma > 0.0:
        log_mult = log_mult + t**gamma * xi2**gamma
    return apply_multiplier(coeffs, transform, np.exp(log_mult), time=t)


# ---------------------------------------------------------------------------
# decay verifier
# ---------------------------------------------------------------------------

def log_diagonal_response(transform, eps, j, t, gamma=0.0):
    """log of the diagonal coefficient of exp((-tL)^gamma) exp(tL) phi.

    The diagonal response is a positive average of the multiplier over the
    level band, so it is evaluated in log space (exact down to arbitrary
    magnitudes, far below float underflow).
    """
    grid = transform.grid
    b = grid.band_radius(j)
    idx = np.arange(-b, b + 1)
    xi1 = 2.0 * math.pi * idx / (grid.side * 2.0**j)  # level-scaled frequency
    symbols = [np.abs(transform.bank.component_at(bit, xi1)) ** 2 for bit in (0, 1)]
    w = None
    xi2 = None
    scale = 2.0**j
    for axis, bit in enumerate(eps):
        shape = [1] * grid.dim
        shape[axis] = idx.size
        s = symbols[bit].reshape(shape)
        x2 = (scale * xi1.reshape(shape)) ** 2
        w = s if w is None else w * s
        xi2 = x2 if xi2 is None else xi2 + x2
    log_w = np.where(w > 0.0, np.log(np.maximum(w, 1e-300)), -np.inf)
    log_mult = -t * xi2
    if gamma > 0.0:
        log_mult = log_mult + t**gamma * np.where(xi2 > 0, xi2, 1.0) ** gamma * (xi2 > 0)
    total = logsumexp(log_w + log_mult)
    # weights normalize to 1 at t = 0 (orthonormality); renormalize exactly
    return float(total - logsumexp(log_w))


def _localized_majorant(source, j, eps_levels, decay_n):
    """Majorant sum over |j - j'| <= 1 with torus-wrapped lattice weights."""
    grid = source.grid
    m_j = grid.lattice_size(j)
    out = np.zeros((m_j,) * grid.dim)
    coords = np.stack(
        np.meshgrid(*[np.arange(m_j)] * grid.dim, indexing="ij"), axis=-1
    ).astype(float)
    for j_prime in range(j - 1, j + 2):
        if j_prime not in grid.levels:
            continue
        shift = 2.0 ** (j - j_prime)
        for eps_p in eps_levels:
            arr = source.levels[(eps_p, j_prime)]
            for k_prime in zip(*np.nonzero(arr)):
                center = shift * np.asarray(k_prime, dtype=float)
                delta = np.abs(coords - center)
                delta = np.minimum(delta, m_j - delta)
                dist = np.sqrt((delta**2).sum(axis=-1))
                out += abs(arr[k_prime]) * (1.0 + dist) ** (-float(decay_n))
    return out


@dataclass
class DecayReport:
    decay_n: int
    gamma: float
    fitted_c_tilde: float
    r_squared: float
    max_ratio_high: float
    max_ratio_low: float
    level_fits: list = field(default_factory=list)
    cross_level_leak: float = 0.0

    def as_dict(self):
        return {
            "N": self.decay_n,
            "gamma": self.gamma,
            "fitted_c_tilde": self.fitted_c_tilde,
            "r_squared": self.r_squared,
            "max_ratio_high": self.max_ratio_high,
            "max_ratio_low": self.max_ratio_low,
            "level_fits": self.level_fits,
            "cross_level_leak": self.cross_level_leak,
        }


def fit_decay_rate(transform, eps, j, t_scaled, gamma=0.0):
    """Least-squares fit of log response against t*2^(2j) on one level.

    ``t_scaled`` holds values of t*2^(2j) >= 1; returns (c_tilde, r_squared)
    for the model log c(t) = a - c_tilde * (t 2^(2j)).
    """
    x = np.asarray(t_scaled, dtype=float)
    t_vals = x / 4.0**j
    y = np.array([log_diagonal_response(transform, eps, j, t, gamma) for t in t_vals])
    coeffs = np.polyfit(x, y, 1)
    pred = np.polyval(coeffs, x)
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return -float(coeffs[0]), r2


def decay_check(source, t_set, decay_n, transform, gamma=0.0):
    """Verify the localized coefficient-decay estimate for the smoothing flow.

    For ``g(t) = exp((-tL)^gamma) exp(tL) source`` this measures, per
    (eps, j, k, t), the ratio of |g| to the |j - j'| <= 1 localized majorant,
    normalized by exp(-c_tilde t 2^(2j)) on the high branch (t 2^(2j) >= 1)
    and by 1 on the low branch.  ``c_tilde`` is fitted from log-space
    diagonal responses.  Underflowed coefficients (below 1e-290) are skipped.
    """
    grid = transform.grid
    signs = component_signs(grid.dim)
    nonzero = [key for key, arr in source.levels.items() if np.any(arr)]
    if not nonzero:
        return DecayReport(decay_n, gamma, 0.0, 1.0, 0.0, 0.0)

    # fitted decay rate from diagonal responses on the occupied levels
    fits = []
    for eps, j in nonzero:
        scaled = np.array([t * 4.0**j for t in t_set])
        scaled = scaled[scaled >= 1.0]
        if scaled.size >= 3:
            c_fit, r2 = fit_decay_rate(transform, eps, j, scaled, gamma)
            fits.append({"eps": list(eps), "j": j, "c_tilde": c_fit, "r_squared": r2})
    if fits:
        c_tilde = min(f["c_tilde"] for f in fits)
        r2 = min(f["r_squared"] for f in fits)
    else:
        c_tilde, r2 = 0.0, 1.0

    majorants = {
        j: _localized_majorant(source, j, signs, decay_n) for j in grid.levels
    }
    hi = 0.0
    lo = 0.0
    for t in t_set:
        flowed = smoothing_flow(source, t, gamma, transform)
        for (eps, j), arr in flowed.levels.items():
            maj = majorants[j]
            mask = (np.abs(arr) > 1e-290) & (maj > 0.0)
            if not np.any(mask):
                continue
            ratio = np.abs(arr)[mask] / maj[mask]
            if t * 4.0**j >= 1.0:
                hi = max(hi, float(np.max(ratio / math.exp(-c_tilde * t * 4.0**j))))
            else:
                lo = max(lo, float(np.max(ratio)))

    # inter-level leak: |j - j'| >= 2 couplings vanish by ring disjointness
    leak = 0.0
    probe = smoothing_flow(source, float(t_set[0]), gamma, transform)
    occupied = {j for (_, j), arr in source.levels.items() if np.any(arr)}
    for (eps, j), arr in probe.levels.items():
        if all(abs(j - j0) >= 2 for j0 in occupied):
            leak = max(leak, float(np.abs(arr).max()) if arr.size else 0.0)

    return DecayReport(
        decay_n=decay_n, gamma=gamma, fitted_c_tilde=c_tilde, r_squared=r2,
        max_ratio_high=hi, max_ratio_low=lo, level_fits=fits,
        cross_level_leak=leak,
    )


# ---------------------------------------------------------------------------
# embedding verifier
# ---------------------------------------------------------------------------

def smoothing_trajectory(source, transform, t_grid, gamma=0.0,
                         overflow_cap=DEFAULT_OVERFLOW_CAP):
    """Trajectory t -> exp((-tL)^gamma) exp(tL) f over a time mesh."""
    states = [
        smoothing_flow(source, float(t), gamma, transform, overflow_cap)
        for t in t_grid
    ]
    return Trajectory(np.asarray(t_grid, dtype=float), states, zero_state=source)


def embedding_check(source, params, transform, t_grid=None,
                    overflow_cap=DEFAULT_OVERFLOW_CAP):
    """Work-space norm of the smoothing trajectory over the static norm.

    Requires parameters passing the small-data regularity admissibility
    check; the finite ratio is the quantitative surrogate for boundedness
    of the smoothing flow from the static space into the work space.
    """
    violations = validate_params(params, theorem=2)
    if violations:
        raise ConfigError("inadmissible parameters: " + "; ".join(violations))
    base = f_norm(source, params)
    if base == 0.0:
        return {"ratio": 0.0, "workspace": 0.0, "static": 0.0}
    if t_grid is None:
        t_grid = geometric_mesh(2.0**-6, 2.0**1.5)
    traj = smoothing_trajectory(source, transform, t_grid, params.gamma, overflow_cap)
    ws = workspace_norm(traj, params)
    return {
        "ratio": ws.norm / base,
        "workspace": ws.norm,
        "static": base,
        "A_high": ws.a_high,
        "A_low": ws.a_low,
    }
