"""Meyer wavelets on a periodic torus, built entirely in the Fourier domain.

The mother profile ``phi0_hat`` equals 1 on ``|xi| <= 2*pi/3``, vanishes for
``|xi| >= 4*pi/3`` and interpolates with a smooth transition in between.  The
band profile is ``varphi(xi) = sqrt(phi0_hat(xi/2)**2 - phi0_hat(xi)**2)`` and
the one-dimensional wavelet symbol is ``phi1_hat(xi) = exp(-i*xi/2)*varphi(xi)``.
Tensor products over component bits give the n-dimensional family; level ``j``
translates live on the lattice ``k / 2**j`` with ``2**j * side`` sites per
dimension, so the construction is exact (band-limited) on a torus whose side
is a power of two.

Forward/inverse transforms are computed per level by Fourier multiplication
with the conjugate symbol followed by an alias-folded inverse FFT onto the
level lattice, which is exact for band-limited data.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import betainc

from .errors import LevelRangeError, ResolutionError, TransitionProfileError

TWO_THIRDS_PI = 2.0 * math.pi / 3.0
FOUR_THIRDS_PI = 4.0 * math.pi / 3.0
EIGHT_THIRDS_PI = 8.0 * math.pi / 3.0

MIN_PROFILE_RESOLUTION = 256
MIN_LATTICE_POINTS = 4


# ---------------------------------------------------------------------------
# transition profiles
# ---------------------------------------------------------------------------

def _make_poly_ramp(order):
    """Ramp nu(x) = int_0^x t^(K-1)(1-t)^(K-1) dt / B(K,K), i.e. the
    regularized incomplete beta I_x(K, K).

    ``nu(x) + nu(1-x) = 1`` holds by symmetry of the integrand; ``order=4``
    is the classical x^4*(35 - 84x + 70x^2 - 20x^3) ramp.  Evaluating via
    ``betainc`` avoids the cancellation the raw monomial coefficients suffer
    at higher orders.
    """
    K = order

    def ramp(x):
        x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
        return betainc(K, K, x)

    return ramp


def _bump_ramp(x):
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(x > 0.0, np.exp(-1.0 / np.maximum(x, 1e-300)), 0.0)
        b = np.where(x < 1.0, np.exp(-1.0 / np.maximum(1.0 - x, 1e-300)), 0.0)
    return a / (a + b)


#: name -> ramp nu on [0, 1] with nu(x) + nu(1-x) = 1.  A ramp of order K
#: has C^(K-1) junctions, hence wavelet tails with envelope |x|^-(K+1).
TRANSITION_PROFILES = {
    "poly": _make_poly_ramp(4),
    "poly4": _make_poly_ramp(4),
    "poly5": _make_poly_ramp(5),
    "poly6": _make_poly_ramp(6),
    "poly7": _make_poly_ramp(7),
    "poly8": _make_poly_ramp(8),
    "bump": _bump_ramp,
}


# ---------------------------------------------------------------------------
# filter bank
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FilterBank:
    """Tabulated Fourier-domain profiles plus cubic-spline evaluators.

    ``phi0_hat`` is tabulated on ``xi_phi0`` covering [-4pi/3, 4pi/3] and
    ``varphi`` on ``xi_varphi`` covering [-8pi/3, 8pi/3]; both grids are
    anchored so that ``xi`` and ``2*pi - xi`` are simultaneously nodes, which
    makes the partition identity checkable on the tabulation grid itself.
    """

    profile_resolution: int
    transition: str
    xi_phi0: np.ndarray
    phi0_hat: np.ndarray
    xi_varphi: np.ndarray
    varphi: np.ndarray
    _phi0_spline: CubicSpline = field(repr=False, compare=False, default=None)
    _rise_spline: CubicSpline = field(repr=False, compare=False, default=None)
    _fall_spline: CubicSpline = field(repr=False, compare=False, default=None)

    # -- exact closed forms (used to build tables and splines) --------------

    def _ramp(self):
        return TRANSITION_PROFILES[self.transition]

    def phi0_exact(self, xi):
        xi = np.abs(np.asarray(xi, dtype=float))
        out = np.ones_like(xi)
        out[xi >= FOUR_THIRDS_PI] = 0.0
        band = (xi > TWO_THIRDS_PI) & (xi < FOUR_THIRDS_PI)
        if np.any(band):
            x = 3.0 * xi[band] / (2.0 * math.pi) - 1.0
            out[band] = np.cos(0.5 * math.pi * self._ramp()(x))
        return out

    def varphi_exact(self, xi):
        xi = np.abs(np.asarray(xi, dtype=float))
        lo = self.phi0_exact(0.5 * xi)
        hi = self.phi0_exact(xi)
        return np.sqrt(np.maximum(lo * lo - hi * hi, 0.0))

    # -- spline evaluators (the declared interpolation scheme) --------------

    def phi0_at(self, xi):
        """Even low-pass profile, cubic interpolation of the tabulation."""
        xi = np.abs(np.asarray(xi, dtype=float))
        out = np.ones_like(xi)
        out[xi >= FOUR_THIRDS_PI] = 0.0
        band = (xi > TWO_THIRDS_PI) & (xi < FOUR_THIRDS_PI)
        if np.any(band):
            out[band] = np.clip(self._phi0_spline(xi[band]), 0.0, 1.0)
        return out

    def varphi_at(self, xi):
        """Band profile; zero outside (2pi/3, 8pi/3), peak 1 at 4pi/3."""
        xi = np.abs(np.asarray(xi, dtype=float))
        out = np.zeros_like(xi)
        rise = (xi > TWO_THIRDS_PI) & (xi <= FOUR_THIRDS_PI)
        fall = (xi > FOUR_THIRDS_PI) & (xi < EIGHT_THIRDS_PI)
        if np.any(rise):
            out[rise] = np.clip(self._rise_spline(xi[rise]), 0.0, 1.0)
        if np.any(fall):
            out[fall] = np.clip(self._fall_spline(xi[fall]), 0.0, 1.0)
        return out

    def phi1_at(self, xi):
        """Wavelet symbol exp(-i*xi/2) * varphi(xi) (complex, Hermitian)."""
        xi = np.asarray(xi, dtype=float)
        return np.exp(-0.5j * xi) * self.varphi_at(xi)

    def component_at(self, bit, xi):
        """Symbol for one tensor factor: ``phi0`` for bit 0, ``phi1`` for 1."""
        if bit == 0:
            return self.phi0_at(xi).astype(complex)
        return self.phi1_at(xi)


def build_filter_bank(profile_resolution=MIN_PROFILE_RESOLUTION, transition="poly"):
    """Tabulate the Meyer profiles and attach spline evaluators.

    Parameters
    ----------
    profile_resolution : int
        Samples per unit frequency, at least 256.
    transition : str
        One of ``TRANSITION_PROFILES`` (``poly`` is the classical degree-7
        polynomial ramp; ``poly6``/``poly8`` are smoother variants; ``bump``
        is C-infinity).
    """
    if transition not in TRANSITION_PROFILES:
        raise TransitionProfileError(
            f"unknown transition profile {transition!r}; "
            f"known: {sorted(TRANSITION_PROFILES)}"
        )
    if profile_resolution < MIN_PROFILE_RESOLUTION:
        raise TransitionProfileError(
            f"profile_resolution {profile_resolution} below minimum "
            f"{MIN_PROFILE_RESOLUTION}"
        )

    res = int(profile_resolution)
    h = 1.0 / res
    # nodes pi + k*h, so that xi and 2*pi - xi are simultaneously nodes
    k_lo = -math.floor(math.pi / h)
    k_hi = math.floor((math.pi / 3.0) / h)
    half = math.pi + np.arange(k_lo, k_hi + 1) * h
    half = half[(half >= 0.0) & (half <= FOUR_THIRDS_PI)]
    xi_phi0 = np.unique(np.concatenate([-half[::-1], half]))

    bank = FilterBank(
        profile_resolution=res,
        transition=transition,
        xi_phi0=xi_phi0,
        phi0_hat=np.empty(0),
        xi_varphi=np.empty(0),
        varphi=np.empty(0),
    )
    phi0_vals = bank.phi0_exact(xi_phi0)

    # spline nodes extend a few samples past the band edges, where the closed
    # forms continue smoothly with constant values
    ext = math.pi + np.arange(k_lo - 3, k_hi + 4) * h
    band_nodes = ext[(ext >= TWO_THIRDS_PI - 3 * h) & (ext <= FOUR_THIRDS_PI + 3 * h)]

    # varphi tabulation: rising branch shares the phi0 node set, the falling
    # branch uses doubled nodes so it reduces to phi0(xi/2) at nodes.
    rise_nodes = band_nodes
    fall_nodes = 2.0 * band_nodes
    xi_varphi_half = np.unique(np.concatenate([half, 2.0 * half]))
    xi_varphi = np.unique(np.concatenate([-xi_varphi_half[::-1], xi_varphi_half]))
    varphi_vals = bank.varphi_exact(xi_varphi)

    rise_spline = CubicSpline(rise_nodes, bank.varphi_exact(rise_nodes))
    fall_spline = CubicSpline(fall_nodes, bank.varphi_exact(fall_nodes))
    phi0_spline = CubicSpline(band_nodes, bank.phi0_exact(band_nodes))

    bank = replace(
        bank,
        phi0_hat=phi0_vals,
        xi_varphi=xi_varphi,
        varphi=varphi_vals,
    )
    object.__setattr__(bank, "_phi0_spline", phi0_spline)
    object.__setattr__(bank, "_rise_spline", rise_spline)
    object.__setattr__(bank, "_fall_spline", fall_spline)
    _validate_bank(bank)
    return bank


def _validate_bank(bank, tol=1e-12):
    xi = bank.xi_phi0
    p0 = bank.phi0_hat
    if np.any(p0 < -tol) or np.any(p0 > 1.0 + tol):
        raise TransitionProfileError("phi0_hat leaves [0, 1] on the tabulation grid")
    inner = np.abs(xi) <= TWO_THIRDS_PI
    outer = np.abs(xi) >= FOUR_THIRDS_PI
    if np.any(np.abs(p0[inner] - 1.0) > tol) or np.any(np.abs(p0[outer]) > tol):
        raise TransitionProfileError("phi0_hat support/plateau constraints violated")
    # partition identity on the varphi tabulation grid
    xv, vv = bank.xi_varphi, bank.varphi
    sel = (xv >= TWO_THIRDS_PI) & (xv <= FOUR_THIRDS_PI)
    mirrored = bank.varphi_exact(2.0 * math.pi - xv[sel])
    gap = np.abs(vv[sel] ** 2 + mirrored**2 - 1.0)
    if gap.size and gap.max() > tol:
        raise TransitionProfileError(
            f"partition identity violated on tabulation grid (max gap {gap.max():.2e})"
        )


# ---------------------------------------------------------------------------
# grid configuration and domain types
# ---------------------------------------------------------------------------

def _is_pow2(x):
    if isinstance(x, float):
        m, e = math.frexp(x)
        return m == 0.5 and x > 0
    return x > 0 and (x & (x - 1)) == 0


@dataclass(frozen=True)
class GridConfig:
    """Periodic analysis domain: torus side, sampling grid, level window.

    ``side`` must be a power of two (in the wavelet's natural length unit,
    where level-j translates step by ``2**-j``) so every analyzed level has
    an integer lattice.  ``grid_points`` must resolve the top band:
    ``pi * grid_points / side >= (8*pi/3) * 2**j_max``.
    """

    dim: int
    side: float
    grid_points: int
    j_min: int
    j_max: int

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ResolutionError(f"dim must be 2 or 3, got {self.dim}")
        if not _is_pow2(float(self.side)):
            raise ResolutionError(f"side must be a power of two, got {self.side}")
        if not _is_pow2(int(self.grid_points)):
            raise ResolutionError(f"grid_points must be a power of two, got {self.grid_points}")
        if self.j_min > self.j_max:
            raise ResolutionError("j_min exceeds j_max")
        m_min = self.side * 2.0**self.j_min
        if m_min < MIN_LATTICE_POINTS or m_min != int(m_min):
            raise ResolutionError(
                f"level {self.j_min} has {m_min:.3g} lattice points per dimension; "
                f"need an integer >= {MIN_LATTICE_POINTS}"
            )
        if math.pi * self.grid_points / self.side < EIGHT_THIRDS_PI * 2.0**self.j_max - 1e-9:
            raise ResolutionError(
                f"grid_points={self.grid_points} cannot resolve level {self.j_max} "
                f"on side {self.side}"
            )

    @property
    def levels(self):
        return range(self.j_min, self.j_max + 1)

    def lattice_size(self, j):
        m = self.side * 2.0**j
        if m != int(m):
            raise LevelRangeError(f"level {j} has a non-integer lattice on side {self.side}")
        return int(m)

    def band_radius(self, j):
        """Largest frequency index in the level-j band: floor(4/3 * M_j)."""
        return int(math.floor(4.0 * self.lattice_size(j) / 3.0))

    def xi_1d(self, n_points=None):
        """Centered angular frequencies 2*pi*m/side, m in [-N/2, N/2)."""
        n = self.grid_points if n_points is None else n_points
        return 2.0 * math.pi * np.arange(-(n // 2), n - n // 2) / self.side

    def scaled(self, i):
        """Config seen by ``2**i u(2**i x)``: side halves per unit shift."""
        return GridConfig(
            dim=self.dim,
            side=self.side / 2.0**i,
            grid_points=self.grid_points,
            j_min=self.j_min + i,
            j_max=self.j_max + i,
        )

    @property
    def cell_volume_unit(self):
        return self.side**self.dim / self.grid_points**self.dim


def component_signs(dim):
    """E_n: all nonzero 0/1 component vectors, in lexicographic order."""
    return [eps for eps in itertools.product((0, 1), repeat=dim) if any(eps)]


@dataclass(frozen=True)
class WaveletIndex:
    eps: tuple
    j: int
    k: tuple


@dataclass
class SampledField:
    """Scalar field sampled on the full periodic grid."""

    grid: GridConfig
    values: np.ndarray

    def __post_init__(self):
        expected = (self.grid.grid_points,) * self.grid.dim
        if self.values.shape != expected:
            raise ResolutionError(
                f"values shape {self.values.shape} != expected {expected}"
            )

    def l2_norm(self):
        h = self.grid.side / self.grid.grid_points
        return math.sqrt(float(np.sum(self.values.astype(float) ** 2)) * h**self.grid.dim)


class CoeffField:
    """Wavelet coefficients over the truncated dyadic index lattice.

    ``levels[(eps, j)]`` is a dense real array over the level-j lattice.
    Lookup is total: every (eps, j) pair inside the window is present, with
    zeros stored explicitly.
    """

    def __init__(self, grid, levels=None, time=None):
        self.grid = grid
        self.time = time
        self.levels = {}
        signs = component_signs(grid.dim)
        for j in grid.levels:
            shape = (grid.lattice_size(j),) * grid.dim
            for eps in signs:
                key = (eps, j)
                if levels is not None and key in levels:
                    arr = np.asarray(levels[key], dtype=float)
                    if arr.shape != shape:
                        raise LevelRangeError(
                            f"level {key} array shape {arr.shape} != {shape}"
                        )
                    self.levels[key] = arr.copy()
                else:
                    self.levels[key] = np.zeros(shape)
        if levels is not None:
            for key in levels:
                if key not in self.levels:
                    raise LevelRangeError(f"coefficient level {key} outside window")

    def copy(self, time=None):
        out = CoeffField(self.grid, time=self.time if time is None else time)
        for key, arr in self.levels.items():
            out.levels[key] = arr.copy()
        return out

    def _binary(self, other, op):
        if other.grid != self.grid:
            raise LevelRangeError("coefficient fields live on different grids")
        out = CoeffField(self.grid, time=self.time)
        for key in self.levels:
            out.levels[key] = op(self.levels[key], other.levels[key])
        return out

    def __add__(self, other):
        return self._binary(other, np.add)

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __mul__(self, scalar):
        out = CoeffField(self.grid, time=self.time)
        for key in self.levels:
            out.levels[key] = self.levels[key] * float(scalar)
        return out

    __rmul__ = __mul__

    def max_abs(self):
        return max(float(np.abs(a).max()) for a in self.levels.values())

    def sq_sum(self):
        return sum(float(np.sum(a * a)) for a in self.levels.values())

    def scaled_by(self, factors):
        """Multiply each level by a per-(eps, j) scalar factor."""
        out = CoeffField(self.grid, time=self.time)
        for key in self.levels:
            out.levels[key] = self.levels[key] * factors.get(key, 1.0)
        return out


# ---------------------------------------------------------------------------
# transform plan
# ---------------------------------------------------------------------------

def _tensor_nd(arrays):
    """Outer product of 1-D arrays into an n-D array."""
    out = arrays[0]
    for a in arrays[1:]:
        out = out[..., None] * a
    return out


def _fold_axis(arr, axis, m):
    """Fold a centered index axis [-B, B] onto residues mod m (numpy order)."""
    b = (arr.shape[axis] - 1) // 2
    lead = math.ceil(b / m) * m - b  # left-pad so the leading entry is m-aligned
    total = arr.shape[axis] + lead
    trail = math.ceil(total / m) * m - total
    pad = [(0, 0)] * arr.ndim
    pad[axis] = (lead, trail)
    padded = np.pad(arr, pad)
    shape = list(padded.shape)
    shape[axis : axis + 1] = [shape[axis] // m, m]
    return padded.reshape(shape).sum(axis=axis)


class WaveletTransform:
    """Cached per-level multiplier tables for one (bank, grid) pair.

    All methods are pure; instances are immutable after construction and
    safe to share across threads.
    """

    def __init__(self, bank, grid):
        self.bank = bank
        self.grid = grid
        self.signs = component_signs(grid.dim)
        self._mults = {}
        for j in grid.levels:
            m = grid.lattice_size(j)
            b = grid.band_radius(j)
            idx = np.arange(-b, b + 1)
            xi = 2.0 * math.pi * idx / (grid.side * 2.0**j)
            self._mults[j] = {
                "idx": idx,
                0: bank.component_at(0, xi),
                1: bank.component_at(1, xi),
            }

    # -- spectra are centered complex arrays of Fourier-series coefficients --

    def field_to_spectrum(self, values):
        n = values.shape[0]
        return np.fft.fftshift(np.fft.fftn(values)) / float(n) ** self.grid.dim

    def spectrum_to_field(self, spec):
        n = spec.shape[0]
        return np.fft.ifftn(np.fft.ifftshift(spec)).real * float(n) ** self.grid.dim

    def _level_slab(self, spec, j):
        n = spec.shape[0]
        b = self.grid.band_radius(j)
        sl = tuple(slice(n // 2 - b, n // 2 + b + 1) for _ in range(self.grid.dim))
        return spec[sl]

    def _symbol_slab(self, eps, j, conjugate=False):
        tab = self._mults[j]
        arrs = [tab[bit] for bit in eps]
        slab = _tensor_nd(arrs)
        return np.conj(slab) if conjugate else slab

    def spectrum_to_coeffs(self, spec, time=None):
        """Analyze a centered spectrum into wavelet coefficients."""
        grid = self.grid
        out = CoeffField(grid, time=time)
        for j in grid.levels:
            m = grid.lattice_size(j)
            slab = self._level_slab(spec, j)
            for eps in self.signs:
                h = slab * self._symbol_slab(eps, j, conjugate=True)
                for axis in range(grid.dim):
                    h = _fold_axis(h, axis, m)
                coeff = np.fft.ifftn(h).real * float(m) ** grid.dim
                out.levels[(eps, j)] = coeff * 2.0 ** (-grid.dim * j / 2.0)
        return out

    def coeffs_to_spectrum(self, coeffs, n_points=None):
        """Synthesize coefficients into a centered spectrum."""
        grid = self.grid
        n = grid.grid_points if n_points is None else n_points
        spec = np.zeros((n,) * grid.dim, dtype=complex)
        inv_vol = grid.side ** (-grid.dim)
        for j in grid.levels:
            m = grid.lattice_size(j)
            b = grid.band_radius(j)
            if b > n // 2 - 1:
                raise ResolutionError(
                    f"target spectrum of {n} points cannot hold level {j}"
                )
            tab = self._mults[j]
            gather = tuple(np.ix_(*[tab["idx"] % m] * grid.dim))
            sl = tuple(slice(n // 2 - b, n // 2 + b + 1) for _ in range(grid.dim))
            pref = inv_vol * 2.0 ** (-grid.dim * j / 2.0)
            for eps in self.signs:
                c = coeffs.levels[(eps, j)]
                if not np.any(c):
                    continue
                chat = np.fft.fftn(c)[gather]
                spec[sl] += pref * self._symbol_slab(eps, j) * chat
        return spec

    # -- public entry points -------------------------------------------------

    def analyze(self, fld, time=None):
        if isinstance(fld, SampledField):
            values = fld.values
        else:
            values = np.asarray(fld)
        return self.spectrum_to_coeffs(self.field_to_spectrum(values), time=time)

    def synthesize(self, coeffs, n_points=None):
        spec = self.coeffs_to_spectrum(coeffs, n_points=n_points)
        values = self.spectrum_to_field(spec)
        if n_points is None:
            return SampledField(self.grid, values)
        return values

    def wavelet_field(self, idx):
        """Sample one wavelet (unit coefficient at ``idx``) on the grid."""
        c = CoeffField(self.grid)
        c.levels[(tuple(idx.eps), idx.j)][tuple(idx.k)] = 1.0
        return self.synthesize(c)

    def level_projection(self, coeffs, j, eps=None, n_points=None):
        """Synthesize the single-level (optionally single-component) piece."""
        if j not in self.grid.levels:
            raise LevelRangeError(f"level {j} outside window {list(self.grid.levels)}")
        sub = CoeffField(self.grid, time=coeffs.time)
        for sign in self.signs:
            if eps is not None and tuple(eps) != sign:
                continue
            sub.levels[(sign, j)] = coeffs.levels[(sign, j)].copy()
        spec = self.coeffs_to_spectrum(sub, n_points=n_points)
        return spec


def wavelet_hat(bank, idx, xi):
    """Fourier transform of one wavelet at frequency row(s) ``xi``.

    Returns ``2**(-n*j/2) * exp(-i 2**-j k.xi) * prod_i symbol_{eps_i}(2**-j xi_i)``.
    """
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    n = xi.shape[1]
    scale = 2.0 ** (-idx.j)
    out = np.full(xi.shape[0], 2.0 ** (-n * idx.j / 2.0), dtype=complex)
    phase = np.exp(-1j * scale * (xi @ np.asarray(idx.k, dtype=float)))
    out = out * phase
    for i, bit in enumerate(idx.eps):
        out = out * bank.component_at(bit, scale * xi[:, i])
    return out if out.size > 1 else complex(out[0])


def analyze(fld, transform, time=None):
    """Forward wavelet transform of a sampled field."""
    return transform.analyze(fld, time=time)


def synthesize(coeffs, transform, n_points=None):
    """Inverse wavelet transform onto the sampling grid."""
    return transform.synthesize(coeffs, n_points=n_points)


def padded_points(grid):
    """3/2 zero-padded grid size that resolves products of analyzed bands."""
    return 3 * grid.grid_points // 2
