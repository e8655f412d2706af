"""Level projections, the three-flow product decomposition, the Leray
projector, the Duhamel bilinear operators and their conjugated variants,
and the kernel-coefficient probe machinery.

Products are formed pointwise on a 3/2 zero-padded grid, which exactly
resolves products of analyzed bands.  The Duhamel integral is evaluated with
fixed-order Gauss nodes on sub-intervals graded dyadically toward both
endpoints of [0, t].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigError, GevreyOverflowError, LevelRangeError, MeshCoverageError
from .meyer import SampledField, component_signs, padded_points
from .semigroup import DEFAULT_OVERFLOW_CAP, gevrey_exponent, xi_squared
from .trajectory import Trajectory


class FlowKind(Enum):
    """Partition of level pairs (j_u - j_v): low-high, diagonal, high-low."""

    LOW_HIGH = 1   # j_u - j_v <= -3
    DIAGONAL = 2   # |j_u - j_v| <= 2
    HIGH_LOW = 3   # j_u - j_v >= 3


#: flow index used in the component operators: 1 diagonal, 2 high-low,
#: 3 low-high (the reflection of 2 with the roles of u and v swapped).
COMPONENT_FLOWS = {1: FlowKind.DIAGONAL, 2: FlowKind.HIGH_LOW, 3: FlowKind.LOW_HIGH}


# ---------------------------------------------------------------------------
# spectra helpers
# ---------------------------------------------------------------------------

def xi_axes(grid, n_points):
    """Per-axis angular frequency arrays broadcastable over the spectrum."""
    xi1 = 2.0 * math.pi * np.arange(-(n_points // 2), n_points - n_points // 2) / grid.side
    out = []
    for axis in range(grid.dim):
        shape = [1] * grid.dim
        shape[axis] = n_points
        out.append(xi1.reshape(shape))
    return out


def project_level(coeffs, j, transform, eps=None):
    """Synthesize the single-level (optionally single-component) piece."""
    spec = transform.level_projection(coeffs, j, eps=eps)
    return SampledField(transform.grid, transform.spectrum_to_field(spec))


def level_spectra(coeffs, transform, n_points):
    """Padded spectrum of each level's piece, keyed by level."""
    out = {}
    for j in transform.grid.levels:
        out[j] = transform.level_projection(coeffs, j, n_points=n_points)
    return out


def flow_products(u, v, transform):
    """Three partial sums of Q_j u * Q_j' v on the padded grid.

    Returns ``{FlowKind: values}`` with the pointwise identity
    ``sum(flows) == synthesize(u) * synthesize(v)`` on the padded grid.
    """
    grid = transform.grid
    if v.grid != grid or u.grid != grid:
        raise LevelRangeError("operands must share the analysis configuration")
    n_pad = padded_points(grid)
    levels = list(grid.levels)
    u_fields = {
        j: transform.spectrum_to_field(s)
        for j, s in level_spectra(u, transform, n_pad).items()
    }
    v_fields = {
        j: transform.spectrum_to_field(s)
        for j, s in level_spectra(v, transform, n_pad).items()
    }
    shape = (n_pad,) * grid.dim
    out = {kind: np.zeros(shape) for kind in FlowKind}
    # prefix sums over u levels
    prefix = {}
    acc = np.zeros(shape)
    for j in levels:
        acc = acc + u_fields[j]
        prefix[j] = acc.copy()

    def u_range(lo, hi):
        lo = max(lo, levels[0])
        hi = min(hi, levels[-1])
        if lo > hi:
            return None
        total = prefix[hi]
        if lo > levels[0]:
            total = total - prefix[lo - 1]
        return total

    for jp in levels:
        lo_part = u_range(levels[0], jp - 3)
        if lo_part is not None:
            out[FlowKind.LOW_HIGH] += lo_part * v_fields[jp]
        mid_part = u_range(jp - 2, jp + 2)
        if mid_part is not None:
            out[FlowKind.DIAGONAL] += mid_part * v_fields[jp]
        hi_part = u_range(jp + 3, levels[-1])
        if hi_part is not None:
            out[FlowKind.HIGH_LOW] += hi_part * v_fields[jp]
    return out


def decompose_product(u, v, transform):
    """Flow decomposition plus the padded pointwise product for comparison."""
    flows = flow_products(u, v, transform)
    n_pad = padded_points(transform.grid)
    u_vals = transform.spectrum_to_field(transform.coeffs_to_spectrum(u, n_pad))
    v_vals = transform.spectrum_to_field(transform.coeffs_to_spectrum(v, n_pad))
    return flows, u_vals * v_vals


# ---------------------------------------------------------------------------
# Leray projection
# ---------------------------------------------------------------------------

def leray_project_spectra(specs, grid, n_points=None):
    """Apply (delta_ab - xi_a xi_b / |xi|^2); the zero mode is annihilated."""
    n = specs[0].shape[0]
    axes = xi_axes(grid, n)
    xi2 = sum(np.broadcast_to(x * x, specs[0].shape).copy() for x in axes)
    inv = np.zeros_like(xi2)
    nz = xi2 > 0
    inv[nz] = 1.0 / xi2[nz]
    dot = sum(axes[a] * specs[a] for a in range(len(specs)))
    out = [specs[a] - axes[a] * dot * inv for a in range(len(specs))]
    center = tuple(n // 2 for _ in range(grid.dim))
    for a in range(len(out)):
        out[a][center] = 0.0
    return out


def leray_project(fields, transform):
    """Leray projection of a vector of sampled fields (or coefficient tuple)."""
    grid = transform.grid
    if isinstance(fields[0], SampledField):
        specs = [transform.field_to_spectrum(f.values) for f in fields]
        specs = leray_project_spectra(specs, grid)
        return tuple(SampledField(grid, transform.spectrum_to_field(s)) for s in specs)
    specs = [transform.coeffs_to_spectrum(c) for c in fields]
    specs = leray_project_spectra(specs, grid)
    return tuple(transform.spectrum_to_coeffs(s) for s in specs)


def divergence_field(fields, transform):
    """Pointwise divergence of a vector of coefficient fields."""
    grid = transform.grid
    axes = xi_axes(grid, grid.grid_points)
    spec = np.zeros((grid.grid_points,) * grid.dim, dtype=complex)
    for a, comp in enumerate(fields):
        spec += 1j * axes[a] * transform.coeffs_to_spectrum(comp)
    return transform.spectrum_to_field(spec)


def max_divergence(fields, transform):
    return float(np.abs(divergence_field(fields, transform)).max())


# ---------------------------------------------------------------------------
# Duhamel quadrature
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureSpec:
    """Dyadically graded composite Gauss rule on [0, t]."""

    subintervals: int = 12
    nodes: int = 8

    def boundaries(self, t):
        near_zero = self.subintervals // 2
        near_top = self.subintervals - near_zero
        bounds = [0.0]
        for i in range(near_zero, 0, -1):
            bounds.append(t * 2.0 ** (-i))
        for i in range(2, near_top + 1):
            bounds.append(t * (1.0 - 2.0 ** (-i)))
        bounds.append(t)
        return np.asarray(bounds)

    def panels(self, t):
        """(node, weight) pairs over the graded decomposition of [0, t]."""
        x, w = np.polynomial.legendre.leggauss(self.nodes)
        bounds = self.boundaries(t)
        nodes = []
        weights = []
        for a, b in zip(bounds[:-1], bounds[1:]):
            half = 0.5 * (b - a)
            nodes.append(a + half * (x + 1.0))
            weights.append(half * w)
        return np.concatenate(nodes), np.concatenate(weights)


def _interp_state(traj, s):
    return traj.state_at(s)


def nonlinear_term_spectra(u_vals, v_vals, grid, n_pad):
    """Spectra of P div(u (x) v) from padded component sample grids."""
    dim = grid.dim
    axes = xi_axes(grid, n_pad)
    scale = 1.0 / float(n_pad) ** dim
    same = all(u is v for u, v in zip(u_vals, v_vals))
    t_hats = {}
    for a in range(dim):
        for b in range(dim):
            if same and (b, a) in t_hats:
                t_hats[(a, b)] = t_hats[(b, a)]
                continue
            t_hats[(a, b)] = np.fft.fftshift(np.fft.fftn(u_vals[a] * v_vals[b])) * scale
    out = []
    for a in range(dim):
        acc = np.zeros((n_pad,) * dim, dtype=complex)
        for b in range(dim):
            acc += 1j * axes[b] * t_hats[(a, b)]
        out.append(acc)
    return leray_project_spectra(out, grid, n_pad)


def duhamel_bilinear(u_traj, v_traj, t, transform, quad=None, gamma=0.0,
                     overflow_cap=DEFAULT_OVERFLOW_CAP):
    """Duhamel bilinear operator at time t.

    Integrates ``exp((t-s) Lap) P div(u(s) (x) v(s))`` over [0, t] with the
    graded Gauss rule; with ``gamma > 0`` the operands are damped by
    ``exp(-(-s Lap)^gamma)`` before the product and the result amplified by
    ``exp((-t Lap)^gamma)`` (the conjugated operator).  Trajectory states at
    quadrature nodes are linear interpolations of stored coefficients.
    Returns the vector of coefficient fields at time t.
    """
    grid = transform.grid
    if u_traj.mesh[-1] < t * (1 - 1e-12):
        raise MeshCoverageError(f"mesh ends at {u_traj.mesh[-1]:g} before t={t:g}")
    if gamma > 0.0:
        exponent = gevrey_exponent(grid, t, gamma)
        if exponent > overflow_cap:
            raise GevreyOverflowError(exponent, overflow_cap, t, grid.j_max)
    quad = quad or QuadratureSpec()
    n_pad = padded_points(grid)
    dim = grid.dim
    xi2 = xi_squared(grid, n_pad)
    nodes, weights = quad.panels(t)
    acc = [np.zeros((n_pad,) * dim, dtype=complex) for _ in range(dim)]
    for s, w in zip(nodes, weights):
        u_state = _interp_state(u_traj, s)
        v_state = _interp_state(v_traj, s)
        u_specs = [transform.coeffs_to_spectrum(c, n_pad) for c in u_state]
        v_specs = (
            u_specs
            if v_traj is u_traj and len(u_state) == len(v_state)
            and all(a is b for a, b in zip(u_state, v_state))
            else [transform.coeffs_to_spectrum(c, n_pad) for c in v_state]
        )
        if gamma > 0.0:
            damp = np.exp(-(s**gamma) * xi2**gamma)
            u_specs = [spec * damp for spec in u_specs]
            v_specs = u_specs if v_specs is u_specs else [spec * damp for spec in v_specs]
        u_vals = [transform.spectrum_to_field(spec) for spec in u_specs]
        v_vals = (
            u_vals if v_specs is u_specs
            else [transform.spectrum_to_field(spec) for spec in v_specs]
        )
        term = nonlinear_term_spectra(u_vals, v_vals, grid, n_pad)
        heat = np.exp(-(t - s) * xi2)
        for a in range(dim):
            acc[a] += w * heat * term[a]
    if gamma > 0.0:
        grow = np.exp(t**gamma * xi2**gamma)
        acc = [spec * grow for spec in acc]
    state = tuple(transform.spectrum_to_coeffs(spec, time=t) for spec in acc)
    # in-span Leray pass: the window projection of a divergence-free field
    # can leak a gradient part at the truncation edge
    base_specs = [transform.coeffs_to_spectrum(c) for c in state]
    base_specs = leray_project_spectra(base_specs, grid)
    return tuple(transform.spectrum_to_coeffs(s, time=t) for s in base_specs)


def duhamel_flow_components(u_traj, v_traj, t, gamma, derivs, transform,
                            quad=None, operator="third",
                            overflow_cap=DEFAULT_OVERFLOW_CAP):
    """Scalar Duhamel component operators split into the three flows.

    ``operator="first"`` applies ``d/dx_l`` (``derivs = (l,)``);
    ``operator="third"`` applies ``d^3/dx_l dx_l' dx_l'' (-Lap)^(-1)``
    (``derivs = (l, l', l'')``, zero mode dropped).  Returns
    ``{flow_index: CoeffField}`` over flows 1 (diagonal), 2 (high-low),
    3 (low-high); their sum reconstructs the unsplit operator.
    """
    grid = transform.grid
    if u_traj.mesh[-1] < t * (1 - 1e-12):
        raise MeshCoverageError(f"mesh ends at {u_traj.mesh[-1]:g} before t={t:g}")
    if gamma > 0.0:
        exponent = gevrey_exponent(grid, t, gamma)
        if exponent > overflow_cap:
            raise GevreyOverflowError(exponent, overflow_cap, t, grid.j_max)
    if operator == "first" and len(derivs) != 1:
        raise ConfigError("first-order operator takes one derivative index")
    if operator == "third" and len(derivs) != 3:
        raise ConfigError("third-order operator takes three derivative indices")
    for l in derivs:
        if not 1 <= l <= grid.dim:
            raise ConfigError(f"derivative index {l} outside 1..{grid.dim}")
    quad = quad or QuadratureSpec()
    n_pad = padded_points(grid)
    dim = grid.dim
    xi2 = xi_squared(grid, n_pad)
    axes = xi_axes(grid, n_pad)
    symbol = np.ones((n_pad,) * dim, dtype=complex)
    for l in derivs:
        symbol = symbol * (1j * axes[l - 1])
    if operator == "third":
        inv = np.zeros_like(xi2)
        nz = xi2 > 0
        inv[nz] = 1.0 / xi2[nz]
        symbol = symbol * inv
    nodes, weights = quad.panels(t)
    acc = {k: np.zeros((n_pad,) * dim, dtype=complex) for k in COMPONENT_FLOWS}
    damp_pow = None
    for s, w in zip(nodes, weights):
        u_state = _interp_state(u_traj, s)[0]
        v_state = _interp_state(v_traj, s)[0]
        if gamma > 0.0:
            damp = np.exp(-(s**gamma) * xi2**gamma)
        u_specs = level_spectra(u_state, transform, n_pad)
        v_specs = level_spectra(v_state, transform, n_pad)
        if gamma > 0.0:
            u_specs = {j: sp * damp for j, sp in u_specs.items()}
            v_specs = {j: sp * damp for j, sp in v_specs.items()}
        u_fields = {j: transform.spectrum_to_field(sp) for j, sp in u_specs.items()}
        v_fields = {j: transform.spectrum_to_field(sp) for j, sp in v_specs.items()}
        levels = list(grid.levels)
        prefix = {}
        run = np.zeros((n_pad,) * dim)
        for j in levels:
            run = run + u_fields[j]
            prefix[j] = run.copy()

        def u_range(lo, hi):
            lo = max(lo, levels[0])
            hi = min(hi, levels[-1])
            if lo > hi:
                return None
            tot = prefix[hi]
            if lo > levels[0]:
                tot = tot - prefix[lo - 1]
            return tot

        heat = np.exp(-(t - s) * xi2)
        for jp in levels:
            pieces = {
                3: u_range(levels[0], jp - 3),
                1: u_range(jp - 2, jp + 2),
                2: u_range(jp + 3, levels[-1]),
            }
            for flow, up in pieces.items():
                if up is None:
                    continue
                prod_hat = (
                    np.fft.fftshift(np.fft.fftn(up * v_fields[jp]))
                    / float(n_pad) ** dim
                )
                acc[flow] += (w * heat * symbol) * prod_hat
    if gamma > 0.0:
        grow = np.exp(t**gamma * xi2**gamma)
        for flow in acc:
            acc[flow] = acc[flow] * grow
    return {
        flow: transform.spectrum_to_coeffs(spec, time=t)
        for flow, spec in acc.items()
    }


# ---------------------------------------------------------------------------
# kernel probes
# ---------------------------------------------------------------------------

@dataclass
class KernelProbe:
    """One measured kernel coefficient against its localization bound."""

    regime: str            # "B1" (diagonal pair) or "B2" (high-low pair)
    case: int              # four-way split on the two lattice distances
    eps: tuple
    j: int
    k: tuple
    eps_p: tuple
    j_p: int
    k_p: tuple
    eps_pp: tuple
    j_pp: int
    k_pp: tuple
    t: float
    s: float
    gamma: float
    decay_n: int
    dist_out: float        # |k - 2^(j-j') k'|
    dist_pair: float       # |2^(j''-j') k' - k''|
    measured: float
    bound: float

    @property
    def ratio(self):
        if self.measured == 0.0:
            return 0.0
        return self.measured / self.bound if self.bound > 0 else math.inf

    def csv_row(self):
        return [
            self.regime, self.case, self.j, self.j_p, self.j_pp,
            f"{self.dist_out:.6g}", f"{self.dist_pair:.6g}",
            f"{self.t:.6g}", f"{self.s:.6g}", f"{self.gamma:.6g}",
            self.decay_n, f"{self.measured:.9e}", f"{self.bound:.9e}",
            f"{self.ratio:.6g}",
        ]


KERNEL_CSV_HEADER = [
    "case_regime", "case", "j", "j_prime", "j_pprime", "k_dist", "k_pair_dist",
    "t", "s", "gamma", "N", "measured", "bound", "ratio",
]


def wavelet_spectrum(transform, eps, j, k, n_points):
    """Centered spectrum of one periodized wavelet on an n_points grid."""
    grid = transform.grid
    b = grid.band_radius(j)
    if b > n_points // 2 - 1:
        raise ConfigError(f"spectrum of {n_points} points cannot hold level {j}")
    idx = np.arange(-b, b + 1)
    xi1 = 2.0 * math.pi * idx / (grid.side * 2.0**j)
    spec = np.zeros((n_points,) * grid.dim, dtype=complex)
    slabs = []
    for axis, bit in enumerate(eps):
        sym = transform.bank.component_at(bit, xi1)
        phase = np.exp(-1j * xi1 * k[axis])
        shape = [1] * grid.dim
        shape[axis] = idx.size
        slabs.append((sym * phase).reshape(shape))
    slab = slabs[0]
    for extra in slabs[1:]:
        slab = slab * extra
    pref = grid.side ** (-grid.dim) * 2.0 ** (-grid.dim * j / 2.0)
    sl = tuple(slice(n_points // 2 - b, n_points // 2 + b + 1) for _ in range(grid.dim))
    spec[sl] = pref * slab
    return spec


def kernel_coefficient(transform, out_idx, in1_idx, in2_idx, t, s, gamma, derivs,
                       n_points=None):
    """Measured |a| = |<A(damped phi' . damped phi''), grown phi>|.

    ``A = exp((t-s) Lap) d^3 (-Lap)^(-1)`` with derivative axes ``derivs``;
    the damping/growth factors are the Gevrey conjugation multipliers at
    times s and t.
    """
    grid = transform.grid
    n_pad = padded_points(grid) if n_points is None else n_points
    dim = grid.dim
    spec1 = wavelet_spectrum(transform, *in1_idx, n_pad)
    spec2 = wavelet_spectrum(transform, *in2_idx, n_pad)
    xi2 = xi_squared(grid, n_pad)
    if gamma > 0.0:
        damp = np.exp(-(s**gamma) * xi2**gamma)
        spec1 = spec1 * damp
        spec2 = spec2 * damp
    f1 = np.fft.ifftn(np.fft.ifftshift(spec1)) * float(n_pad) ** dim
    f2 = np.fft.ifftn(np.fft.ifftshift(spec2)) * float(n_pad) ** dim
    prod_hat = np.fft.fftshift(np.fft.fftn(f1.real * f2.real)) / float(n_pad) ** dim
    axes = xi_axes(grid, n_pad)
    symbol = np.ones((n_pad,) * dim, dtype=complex)
    for l in derivs:
        symbol = symbol * (1j * axes[l - 1])
    inv = np.zeros_like(xi2)
    nz = xi2 > 0
    inv[nz] = 1.0 / xi2[nz]
    symbol = symbol * inv
    applied = prod_hat * symbol * np.exp(-(t - s) * xi2)
    out_spec = wavelet_spectrum(transform, *out_idx, n_pad)
    grow = np.exp(t**gamma * xi2**gamma) if gamma > 0.0 else 1.0
    val = np.sum(applied * grow * np.conj(out_spec)) * grid.side**dim
    return abs(complex(val))


def _torus_dist(a, b, extent):
    d = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))
    d = np.minimum(d, extent - d)
    return float(np.sqrt((d**2).sum()))


def probe_distances(grid, out_idx, in1_idx, in2_idx):
    """The two localization distances (output vs u-level, u vs v pair)."""
    eps, j, k = out_idx
    eps_p, j_p, k_p = in1_idx
    eps_pp, j_pp, k_pp = in2_idx
    m_j = grid.lattice_size(j)
    m_pp = grid.lattice_size(j_pp)
    d_out = _torus_dist(np.asarray(k), 2.0 ** (j - j_p) * np.asarray(k_p), m_j)
    d_pair = _torus_dist(2.0 ** (j_pp - j_p) * np.asarray(k_p), np.asarray(k_pp), m_pp)
    return d_out, d_pair


def kernel_bound(regime, grid, out_idx, in1_idx, in2_idx, t, s, gamma, decay_n,
                 c=1.0, c_tilde=0.0):
    """Right-hand side of the localization estimate with fitted constants."""
    _, j, _ = out_idx
    _, j_p, _ = in1_idx
    _, j_pp, _ = in2_idx
    d_out, d_pair = probe_distances(grid, out_idx, in1_idx, in2_idx)
    n = grid.dim
    if regime == "B1":
        pref = 2.0 ** (n * j / 2.0 + j)
        gev_in = max(1.0, (s * 4.0**j_p) ** (2 * gamma * decay_n))
    else:
        pref = 2.0 ** (n * j_pp / 2.0 + j)
        gev_in = max(1.0, (s * 4.0**j_pp) ** (gamma * decay_n))
    gev_out = max(1.0, (t * 4.0**j) ** (gamma * decay_n))
    decay = math.exp(-c * (t - s) * 4.0**j)
    gev = math.exp(c_tilde * (t**gamma - s**gamma) * 4.0 ** (j * gamma))
    denom = (1.0 + d_pair) ** decay_n * (1.0 + d_out) ** decay_n
    return pref * decay * gev * gev_in * gev_out / denom


def case_tag(d_pair, d_out):
    if d_pair <= 2.0 and d_out <= 2.0:
        return 1
    if d_pair > 2.0 and d_out <= 2.0:
        return 2
    if d_pair <= 2.0 and d_out > 2.0:
        return 3
    return 4


def make_probe(transform, regime, out_idx, in1_idx, in2_idx, t, s, gamma,
               decay_n, derivs, c=1.0, c_tilde=0.0):
    grid = transform.grid
    measured = kernel_coefficient(transform, out_idx, in1_idx, in2_idx, t, s,
                                  gamma, derivs)
    bound = kernel_bound(regime, grid, out_idx, in1_idx, in2_idx, t, s, gamma,
                         decay_n, c=c, c_tilde=c_tilde)
    d_out, d_pair = probe_distances(grid, out_idx, in1_idx, in2_idx)
    return KernelProbe(
        regime=regime, case=case_tag(d_pair, d_out),
        eps=out_idx[0], j=out_idx[1], k=tuple(out_idx[2]),
        eps_p=in1_idx[0], j_p=in1_idx[1], k_p=tuple(in1_idx[2]),
        eps_pp=in2_idx[0], j_pp=in2_idx[1], k_pp=tuple(in2_idx[2]),
        t=t, s=s, gamma=gamma, decay_n=decay_n,
        dist_out=d_out, dist_pair=d_pair,
        measured=measured, bound=bound,
    )
