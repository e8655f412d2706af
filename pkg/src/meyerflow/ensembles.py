"""Seeded random field generators shared by tests and verification suites."""

from __future__ import annotations

import math

import numpy as np

from .meyer import CoeffField, SampledField, component_signs


def band_limited_spectrum(grid, rng, amplitude=1.0):
    """Random Hermitian spectrum supported in the analyzed dyadic shell.

    Modes satisfy ``max_i |m_i| <= (2/3) M_jmax`` and
    ``max_i |m_i| >= ceil((2/3) M_jmin)``, the exact reproducing set of the
    truncated wavelet family.
    """
    n = grid.dim
    npts = grid.grid_points
    hi = int(2 * grid.lattice_size(grid.j_max) / 3)
    lo = math.ceil(2 * grid.lattice_size(grid.j_min) / 3)
    m1 = np.arange(-(npts // 2), npts - npts // 2)
    grids = np.meshgrid(*([m1] * n), indexing="ij")
    absmax = np.maximum.reduce([np.abs(g) for g in grids])
    absall = np.maximum.reduce([np.abs(g) for g in grids])
    inside = np.ones_like(absmax, dtype=bool)
    for g in grids:
        inside &= np.abs(g) <= hi
    mask = inside & (absall >= lo)
    spec = np.zeros((npts,) * n, dtype=complex)
    spec[mask] = amplitude * (
        rng.standard_normal(int(mask.sum())) + 1j * rng.standard_normal(int(mask.sum()))
    )
    # Hermitian symmetrization; the unpaired -N/2 rows are outside the shell
    mirrored = np.conj(spec[(slice(None, None, -1),) * n])
    spec = 0.5 * (spec + np.roll(mirrored, (1,) * n, axis=tuple(range(n))))
    spec[~mask] = 0.0
    return spec


def random_band_limited_field(transform, rng, amplitude=1.0):
    grid = transform.grid
    spec = band_limited_spectrum(grid, rng, amplitude)
    return SampledField(grid, transform.spectrum_to_field(spec))


def random_coeff_field(grid, rng, density=0.1, amplitude=1.0, time=None):
    """Sparse random coefficients over the full index window."""
    out = CoeffField(grid, time=time)
    for key, arr in out.levels.items():
        mask = rng.random(arr.shape) < density
        arr[mask] = amplitude * rng.standard_normal(int(mask.sum()))
    return out


def random_divergence_free(transform, rng, amplitude=1.0):
    """Random divergence-free vector field as per-component coefficients."""
    from .paraproduct import leray_project_spectra

    grid = transform.grid
    specs = [band_limited_spectrum(grid, rng, amplitude) for _ in range(grid.dim)]
    specs = leray_project_spectra(specs, grid)
    return tuple(transform.spectrum_to_coeffs(s) for s in specs)


def single_wavelet_coeffs(grid, eps, j, k, value=1.0, time=None):
    c = CoeffField(grid, time=time)
    c.levels[(tuple(eps), j)][tuple(k)] = float(value)
    return c


def all_signs(grid):
    return component_signs(grid.dim)
