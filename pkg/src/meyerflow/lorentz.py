"""Lorentz-scale norms over wavelet coefficients.

Level majorants are piecewise constant on dyadic cells, so every superlevel
set is a finite union of cells and all distribution quantities below are
closed-form sums.  Two evaluation schemes are provided for the outer Lorentz
functional:

``dyadic``
    the literal sum over thresholds ``2**u``, ``u`` ranging over the integers
    (with the geometric tail below the smallest positive value summed in
    closed form);
``integral``
    the layer-cake integral ``int_0^inf r lam^(r-1) mu(lam)^(r/p) dlam``,
    evaluated exactly on the step distribution function.

The two are equivalent within the bracket ``[(1-2**-r)^(1/r), (2**r-1)^(1/r)]``.
The integral scheme is exactly invariant under the scaling
``u -> 2**i u(2**i .)`` at critical smoothness and is therefore the default
for the composite norms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, LevelRangeError
from .meyer import CoeffField, component_signs
from .trajectory import window_bounds

DEFAULT_SCHEME = "integral"


# ---------------------------------------------------------------------------
# parameters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpaceParams:
    """Exponent tuple (n, s, p, q, r, m, m', gamma) of the solution space.

    ``s`` defaults to the critical smoothness ``n/p - 1``.  ``q`` and ``r``
    accept ``math.inf``.  Construction checks only basic ranges; theorem
    admissibility is the job of ``solver.validate_params``.
    """

    n: int
    p: float
    q: float
    r: float
    m: float
    m_prime: float = 0.0
    gamma: float = 0.0
    s: float = None

    def __post_init__(self):
        if self.p <= 1 or not math.isfinite(self.p):
            raise ConfigError(f"p must lie in (1, inf), got {self.p}")
        if self.q < 1:
            raise ConfigError(f"q must lie in [1, inf], got {self.q}")
        if self.r <= 1:
            raise ConfigError(f"r must lie in (1, inf], got {self.r}")
        if self.m <= 0:
            raise ConfigError(f"m must be positive, got {self.m}")
        if self.m_prime < 0:
            raise ConfigError(f"m' must be nonnegative, got {self.m_prime}")
        if not 0.0 <= self.gamma <= 0.5:
            raise ConfigError(f"gamma must lie in [0, 1/2], got {self.gamma}")
        if self.s is None:
            object.__setattr__(self, "s", self.n / self.p - 1.0)

    @property
    def critical(self):
        return abs(self.s - (self.n / self.p - 1.0)) < 1e-14

    def as_dict(self):
        enc = lambda v: "inf" if v == math.inf else v
        return {
            "n": self.n, "s": self.s, "p": self.p, "q": enc(self.q),
            "r": enc(self.r), "m": self.m, "m_prime": self.m_prime,
            "gamma": self.gamma,
        }


# ---------------------------------------------------------------------------
# piecewise-constant grid functions
# ---------------------------------------------------------------------------

@dataclass
class CellFunction:
    """Nonnegative function constant on equal-volume cells."""

    values: np.ndarray
    cell_volume: float


@dataclass
class LevelFunction(CellFunction):
    """Per-level majorant 2^(nj/2) sum_{eps,k} |f_{j,k}^eps| chi(2^j x - k)."""

    j: int = 0


def level_majorant(fields, j):
    """Level majorant pooling component signs (and vector components).

    ``fields`` is a CoeffField or a sequence of them (vector components).
    """
    if isinstance(fields, CoeffField):
        fields = (fields,)
    grid = fields[0].grid
    if j not in grid.levels:
        raise LevelRangeError(f"level {j} outside window")
    acc = None
    for f in fields:
        for eps in component_signs(grid.dim):
            a = np.abs(f.levels[(eps, j)])
            acc = a if acc is None else acc + a
    vals = acc * 2.0 ** (grid.dim * j / 2.0)
    return LevelFunction(values=vals, cell_volume=2.0 ** (-grid.dim * j), j=j)


def upsample_to(values, m_target):
    """Piecewise-constant refinement of a dyadic cell array."""
    m = values.shape[0]
    if m_target % m:
        raise ConfigError(f"cannot refine lattice {m} to {m_target}")
    factor = m_target // m
    out = values
    for axis in range(values.ndim):
        out = np.repeat(out, factor, axis=axis)
    return out


# ---------------------------------------------------------------------------
# distribution machinery
# ---------------------------------------------------------------------------

def distribution_measure(g, lam):
    """Lebesgue measure of the strict superlevel set {g > lam}."""
    return float(np.count_nonzero(g.values > lam)) * g.cell_volume


def _sorted_distribution(g):
    """Distinct positive values v_1<...<v_K and measures S_i = |{g > v_i}|.

    Returns (v, S, mu_plus) with S[i] the measure strictly above v[i] and
    mu_plus the measure of the positive support.
    """
    vals = np.asarray(g.values, dtype=float).ravel()
    pos = vals[vals > 0.0]
    if pos.size == 0:
        return np.empty(0), np.empty(0), 0.0
    v, counts = np.unique(pos, return_counts=True)
    above = np.concatenate([np.cumsum(counts[::-1])[::-1][1:], [0.0]])
    return v, above * g.cell_volume, pos.size * g.cell_volume


def lorentz_power(g, p, r, scheme=DEFAULT_SCHEME):
    """Degree-r Lorentz functional of a cell function (no 1/r root).

    For finite r the ``dyadic`` scheme returns
    ``sum_u 2**(u r) |{g > 2**u}|^(r/p)`` and the ``integral`` scheme the
    layer-cake integral; for r = inf both return the degree-1 supremum
    ``sup lam |{g > lam}|^(1/p)``.
    """
    if p <= 1:
        raise ConfigError(f"p must exceed 1, got {p}")
    if r <= 1 and r != math.inf:
        raise ConfigError(f"r must lie in (1, inf], got {r}")
    v, above, mu_plus = _sorted_distribution(g)
    if v.size == 0:
        return 0.0
    if r == math.inf:
        if scheme == "dyadic":
            u_min = math.floor(math.log2(v[0]))
            u_max = math.ceil(math.log2(v[-1])) + 1
            best = 0.0
            for u in range(u_min - 1, u_max + 1):
                lam = 2.0**u
                best = max(best, lam * distribution_measure(g, lam) ** (1.0 / p))
            return best
        measures = np.concatenate([[mu_plus], above[:-1]])
        return float(np.max(v * measures ** (1.0 / p)))
    if scheme == "integral":
        measures = np.concatenate([[mu_plus], above[:-1]])
        lam = np.concatenate([[0.0], v])
        return float(np.sum(measures ** (r / p) * np.diff(lam**r)))
    if scheme != "dyadic":
        raise ConfigError(f"unknown Lorentz scheme {scheme!r}")
    u_min = math.floor(math.log2(v[0]))
    u_max = math.ceil(math.log2(v[-1]))
    total = 0.0
    for u in range(u_min, u_max + 1):
        mu = distribution_measure(g, 2.0**u)
        if mu > 0.0:
            total += 2.0 ** (u * r) * mu ** (r / p)
    # below u_min every threshold sees the full positive support
    total += 2.0 ** (u_min * r) / (2.0**r - 1.0) * mu_plus ** (r / p)
    return total


def lorentz_quasi_norm(g, p, r, scheme="dyadic"):
    """Lorentz quasi-norm of a nonnegative cell function.

    Defaults to the literal dyadic-threshold sum; pass ``scheme="integral"``
    for the exactly scale-covariant layer-cake evaluation.
    """
    power = lorentz_power(g, p, r, scheme=scheme)
    if r == math.inf:
        return power
    return power ** (1.0 / r)


def truncation_range(g):
    """Positive value range [min, max] driving the threshold truncation."""
    vals = np.asarray(g.values, dtype=float).ravel()
    pos = vals[vals > 0.0]
    if pos.size == 0:
        return None
    return [float(pos.min()), float(pos.max())]


def subadditivity_margin(a, rho):
    """sum a_k^rho - (sum a_k)^rho, nonnegative for 0 < rho <= 1."""
    a = np.asarray(a, dtype=float)
    if np.any(a < 0):
        raise ConfigError("subadditivity margin requires nonnegative terms")
    if not 0 < rho <= 1:
        raise ConfigError(f"rho must lie in (0, 1], got {rho}")
    return float(np.sum(a**rho) - np.sum(a) ** rho)


# ---------------------------------------------------------------------------
# static-field norms
# ---------------------------------------------------------------------------

def _pooled_level_grid(fields, params, weights):
    """(sum_j w_j f_j(x)^q)^(1/q) on the finest lattice (sup for q = inf)."""
    if isinstance(fields, CoeffField):
        fields = (fields,)
    grid = fields[0].grid
    m_top = grid.lattice_size(grid.j_max)
    q = params.q
    acc = None
    for j in grid.levels:
        w = weights(j)
        if w == 0.0:
            continue
        f_j = upsample_to(level_majorant(fields, j).values, m_top)
        term = w * f_j if q == math.inf else w * f_j**q
        if acc is None:
            acc = term
        else:
            acc = np.maximum(acc, term) if q == math.inf else acc + term
    if acc is None:
        acc = np.zeros((m_top,) * grid.dim)
    vals = acc if q == math.inf else acc ** (1.0 / q)
    return CellFunction(values=vals, cell_volume=2.0 ** (-grid.dim * grid.j_max))


def f_norm(fields, params, scheme=DEFAULT_SCHEME):
    """Triebel-Lizorkin-Lorentz norm: Lorentz functional of the level cascade.

    Builds ``G(x) = (sum_j 2^(jsq) f_j(x)^q)^(1/q)`` (sup over j for q = inf)
    and returns its Lorentz quasi-norm.  Vector inputs pool component
    magnitudes into the level majorant.
    """
    if isinstance(fields, CoeffField):
        fields = (fields,)
    if not fields or not fields[0].levels:
        raise ConfigError("empty coefficient set")
    s, q = params.s, params.q
    if q == math.inf:
        weights = lambda j: 2.0 ** (j * s)
    else:
        weights = lambda j: 2.0 ** (j * s * q)
    g = _pooled_level_grid(fields, params, weights)
    return lorentz_quasi_norm(g, params.p, params.r, scheme=scheme)


def besov_lorentz_norm(fields, params, scheme=DEFAULT_SCHEME):
    """Besov-Lorentz norm: outer q-sum over levels of inner Lorentz norms."""
    if isinstance(fields, CoeffField):
        fields = (fields,)
    if not fields or not fields[0].levels:
        raise ConfigError("empty coefficient set")
    grid = fields[0].grid
    s, q = params.s, params.q
    terms = []
    for j in grid.levels:
        norm_j = lorentz_quasi_norm(
            level_majorant(fields, j), params.p, params.r, scheme=scheme
        )
        terms.append(2.0 ** (j * s) * norm_j)
    terms = np.asarray(terms)
    if q == math.inf:
        return float(terms.max(initial=0.0))
    return float(np.sum(terms**q) ** (1.0 / q))


def scale_map(coeffs, i):
    """Exact coefficient image of ``u -> 2**i u(2**i .)``.

    Indices relabel ``(j, k) -> (j + i, k)`` with coefficients scaled by
    ``2**(i (1 - n/2))``; the result lives on the rescaled grid (side divided
    by ``2**i``, window shifted by ``i``), where every level keeps its lattice
    shape, so no truncation occurs and cell measures rescale by ``2**(-n i)``
    in subsequent norms.
    """
    grid = coeffs.grid
    new_grid = grid.scaled(i)
    factor = 2.0 ** (i * (1.0 - grid.dim / 2.0))
    out = CoeffField(new_grid, time=coeffs.time)
    for (eps, j), arr in coeffs.levels.items():
        out.levels[(eps, j + i)] = arr * factor
    return out


# ---------------------------------------------------------------------------
# work-space norm over trajectories
# ---------------------------------------------------------------------------

@dataclass
class WorkspaceNorm:
    """Degree-1 norm with the degree-r high/low split quantities."""

    norm: float
    a_high: float
    a_low: float
    r: float
    windows: list = field(default_factory=list)
    scheme: str = DEFAULT_SCHEME

    @property
    def total(self):
        return self.a_high + self.a_low

    def as_dict(self, params=None):
        out = {
            "norm": self.norm,
            "A_high": self.a_high,
            "A_low": self.a_low,
            "windows": self.windows,
            "scheme": self.scheme,
        }
        if params is not None:
            out["params"] = params.as_dict()
        return out


def window_majorants(traj, j_t):
    """Per-level sup over window samples: f_{j, j_t}(x) arrays.

    The supremum over continuous time is approximated by the max over the
    trajectory's stored samples falling in the window; it is monotone under
    adding samples.
    """
    idxs = traj.samples_in_window(j_t)
    grid = traj.grid
    out = {}
    for j in grid.levels:
        acc = None
        for i in idxs:
            f_j = level_majorant(traj.states[i], j).values
            acc = f_j if acc is None else np.maximum(acc, f_j)
        if acc is not None:
            out[j] = acc
    return out


def _window_power(grid, majorants, j_t, params, side, scheme):
    """Degree-r Lorentz power of one window's weighted level cascade.

    ``side`` selects the high branch (levels j >= j_t, weight exponent m)
    or the low branch (j < j_t, weight exponent m').
    """
    s, q = params.s, params.q
    w_exp = params.m if side == "high" else params.m_prime
    m_top = grid.lattice_size(grid.j_max)
    acc = None
    for j, f_j in majorants.items():
        if (side == "high") != (j >= j_t):
            continue
        if q == math.inf:
            w = 2.0 ** (2 * (j - j_t) * w_exp) * 2.0 ** (j * s)
            term = w * upsample_to(f_j, m_top)
        else:
            w = 2.0 ** (2 * (j - j_t) * w_exp * q) * 2.0 ** (j * s * q)
            term = w * upsample_to(f_j, m_top) ** q
        if acc is None:
            acc = term
        else:
            acc = np.maximum(acc, term) if q == math.inf else acc + term
    if acc is None:
        return 0.0
    vals = acc if q == math.inf else acc ** (1.0 / q)
    g = CellFunction(values=vals, cell_volume=2.0 ** (-grid.dim * grid.j_max))
    return lorentz_power(g, params.p, params.r, scheme=scheme)


def workspace_norm(traj, params, scheme=DEFAULT_SCHEME, validate=True):
    """Single-norm work-space functional of a trajectory.

    Computes the high-frequency quantity (sup over windows of the
    ``(t 2^{2j})^m``-weighted cascade over ``j >= j_t``) and its ``m'``
    low-frequency analogue over ``j < j_t``, the sup over ``j_t`` running
    over the dyadic windows meeting the stored span.  Returns a
    ``WorkspaceNorm`` whose ``norm`` is ``(A_high + A_low)**(1/r)``
    (``max`` of the two suprema for r = inf).
    """
    if validate:
        traj.validate_window_sampling()
    grid = traj.grid
    a_high = 0.0
    a_low = 0.0
    windows = []
    for j_t in traj.windows():
        maj = window_majorants(traj, j_t)
        hi = _window_power(grid, maj, j_t, params, "high", scheme)
        lo = _window_power(grid, maj, j_t, params, "low", scheme)
        windows.append({"j_t": j_t, "high": hi, "low": lo})
        a_high = max(a_high, hi)
        a_low = max(a_low, lo)
    if params.r == math.inf:
        norm = max(a_high, a_low)
    else:
        norm = (a_high + a_low) ** (1.0 / params.r)
    return WorkspaceNorm(
        norm=norm, a_high=a_high, a_low=a_low, r=params.r,
        windows=windows, scheme=scheme,
    )


def gamma_ceiling(n, p, m):
    """Largest admissible Gevrey exponent for the small-data regularity result.

    min{ m/(2n+2) - 1/(4n+4) + n/(8pn+8p),
         1/(4n+4) - n/(4pn+4p),
         m/(6n+6) }
    """
    return min(
        m / (2 * n + 2) - 1.0 / (4 * n + 4) + n / (8.0 * p * n + 8.0 * p),
        1.0 / (4 * n + 4) - n / (4.0 * p * n + 4.0 * p),
        m / (6 * n + 6),
    )


def validate_params(params, theorem):
    """Check every inequality of the selected well-posedness statement.

    ``theorem=1`` is the plain global small-data statement, ``theorem=2``
    the Gevrey-regularity statement.  Returns the violated clauses verbatim
    (empty list means admissible); violations are data, not errors.
    """
    n, p, q, r = params.n, params.p, params.q, params.r
    m, mp, gamma = params.m, params.m_prime, params.gamma
    bad = []
    if theorem == 1:
        if not 1 < p < math.inf:
            bad.append("1 < p < inf")
        if not 1 < r < math.inf:
            bad.append("1 < r < inf")
        if not m > 1:
            bad.append("m > 1")
        if q == math.inf:
            if not 0 < mp < 0.5:
                bad.append("q = inf requires 0 < m' < 1/2")
        else:
            if not 1 <= q < math.inf:
                bad.append("1 <= q < inf")
            if not 0 <= mp < 0.5:
                bad.append("0 <= m' < 1/2")
        return bad
    if theorem == 2:
        if not 1 < r < math.inf:
            bad.append("1 < r < inf")
        if not n < p < math.inf:
            bad.append("n < p < inf")
        if not m > 1 - n / (2.0 * p):
            bad.append("m > 1 - n/(2p)")
        ceiling = gamma_ceiling(n, p, m)
        if not 0 < gamma < ceiling:
            bad.append(
                "0 < gamma < min{m/(2n+2) - 1/(4n+4) + n/(8pn+8p), "
                "1/(4n+4) - n/(4pn+4p), m/(6n+6)}"
            )
        bound = 0.5 - n / (4.0 * p)
        if q == math.inf:
            if not 0 < mp < bound:
                bad.append("q = inf requires 0 < m' < 1/2 - n/(4p)")
        else:
            if not 1 <= q < math.inf:
                bad.append("1 <= q < inf")
            if not 0 <= mp < bound:
                bad.append("0 <= m' < 1/2 - n/(4p)")
        return bad
    raise ConfigError(f"theorem must be 1 or 2, got {theorem!r}")


def coefficient_growth_bound(traj, params):
    """Sup of the window-weighted coefficient sizes (high/low branches).

    Extracts ``sup (t 2^{2j})^m 2^{(n/2-1)j} |f^eps_{j,k}(t)|`` over stored
    samples with ``t 2^{2j} >= 1`` and the ``m'`` analogue for
    ``t 2^{2j} <= 1``; both are finite whenever the work-space norm is.
    """
    grid = traj.grid
    hi = 0.0
    lo = 0.0
    for t, state in zip(traj.mesh, traj.states):
        for comp in state:
            for (eps, j), arr in comp.levels.items():
                peak = float(np.abs(arr).max()) if arr.size else 0.0
                if peak == 0.0:
                    continue
                tj = t * 4.0**j
                w = 2.0 ** ((grid.dim / 2.0 - 1.0) * j)
                if tj >= 1.0:
                    hi = max(hi, tj**params.m * w * peak)
                else:
                    lo = max(lo, tj**params.m_prime * w * peak)
    return hi, lo
