"""Dyadic Hardy-Littlewood maximal operator and inter-scale weight bounds.

The maximal operator ranges over dyadic cubes of the torus (no wrap-around);
lattice distances in the weight sums use the torus metric.  Constants in the
domination estimates are measured, never assumed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .lorentz import CellFunction, level_majorant, lorentz_quasi_norm, upsample_to
from .meyer import component_signs


@dataclass(frozen=True)
class MaximalConfig:
    """Decay exponent for the weight sums; requires N > 2n + 1."""

    dim: int
    decay_n: int = None

    def __post_init__(self):
        if self.decay_n is None:
            object.__setattr__(self, "decay_n", 2 * self.dim + 2)
        if self.decay_n <= 2 * self.dim + 1:
            raise ConfigError(
                f"decay exponent {self.decay_n} must exceed 2n+1 = {2 * self.dim + 1}"
            )


def hl_maximal(g):
    """Dyadic maximal function: max over dyadic cubes containing each point.

    Input and output are piecewise-constant cell functions on a 2**L lattice.
    """
    vals = np.asarray(g.values, dtype=float)
    if np.any(vals < 0):
        raise ConfigError("maximal operator requires a nonnegative function")
    m = vals.shape[0]
    if m & (m - 1):
        raise ConfigError("dyadic maximal needs a power-of-two lattice")
    out = vals.copy()
    block = vals
    size = 1
    while block.shape[0] > 1:
        # average sibling cells into the parent cube, then broadcast back
        shape = []
        for _ in range(block.ndim):
            shape.extend([block.shape[0] // 2, 2])
        parent = block.reshape(shape).mean(axis=tuple(range(1, 2 * block.ndim, 2)))
        size *= 2
        block = parent
        out = np.maximum(out, upsample_to(parent, m))
    return CellFunction(values=out, cell_volume=g.cell_volume)


def brute_force_maximal(g):
    """Direct enumeration over all dyadic cubes, for oracle comparisons."""
    vals = np.asarray(g.values, dtype=float)
    m = vals.shape[0]
    out = vals.copy()
    gen = 1
    while gen < m or gen == m:
        if m % gen:
            break
        step = gen
        if step > 1:
            shape = []
            for _ in range(vals.ndim):
                shape.extend([m // step, step])
            perm = list(range(0, 2 * vals.ndim, 2)) + list(range(1, 2 * vals.ndim, 2))
            blocks = vals.reshape(shape).transpose(perm)
            means = blocks.reshape((m // step,) * vals.ndim + (-1,)).mean(axis=-1)
            out = np.maximum(out, upsample_to(means, m))
        gen *= 2
    return CellFunction(values=out, cell_volume=g.cell_volume)


def _torus_lattice_distance(points, center, extent):
    """Euclidean distance on the periodic lattice of per-dim size ``extent``."""
    delta = np.abs(points - center)
    delta = np.minimum(delta, extent - delta)
    return np.sqrt((delta**2).sum(axis=-1))


def decay_weighted_sum(coeffs, j, j_prime, k, decay_n):
    """Distance-weighted coefficient sum linking levels j and j'.

    For ``j >= j'`` returns
    ``sum_{eps',k'} 2^(n j'/2) |f^eps'_{j',k'}| (1 + |k' - 2^(j'-j) k|)^-N``
    and the reflected form ``(1 + |k - 2^(j-j') k'|)^-N`` for ``j < j'``;
    lattice distances wrap around the torus.
    """
    grid = coeffs.grid
    m_p = grid.lattice_size(j_prime)
    pts = np.stack(
        np.meshgrid(*[np.arange(m_p)] * grid.dim, indexing="ij"), axis=-1
    ).astype(float)
    k = np.asarray(k, dtype=float)
    if j >= j_prime:
        center = 2.0 ** (j_prime - j) * k
        dist = _torus_lattice_distance(pts, center, float(m_p))
    else:
        m_j = grid.lattice_size(j)
        scaled = 2.0 ** (j - j_prime) * pts
        delta = np.abs(scaled - k)
        delta = np.minimum(delta, m_j - delta)
        dist = np.sqrt((delta**2).sum(axis=-1))
    weight = (1.0 + dist) ** (-float(decay_n))
    total = 0.0
    pref = 2.0 ** (grid.dim * j_prime / 2.0)
    for eps in component_signs(grid.dim):
        total += float(np.sum(np.abs(coeffs.levels[(eps, j_prime)]) * weight))
    return pref * total


def decay_weight_ratio(coeffs, j, j_prime, decay_n):
    """Measured constant in the maximal-function domination of the weights.

    Evaluates the weight sum at every level-j cell and divides by the
    (appropriately 2^(n(j'-j))-scaled, for j < j') dyadic maximal function of
    the level-j' majorant, minimized over the cell.  Returns the max ratio.
    """
    grid = coeffs.grid
    m_j = grid.lattice_size(j)
    maj = level_majorant(coeffs, j_prime)
    m_top = grid.lattice_size(grid.j_max)
    mg = hl_maximal(CellFunction(upsample_to(maj.values, m_top), 2.0 ** (-grid.dim * grid.j_max)))
    # min of M(f_j') over each level-j cell: bound must hold for all x in it
    factor = m_top // m_j
    shape = []
    for _ in range(grid.dim):
        shape.extend([m_j, factor])
    perm = list(range(0, 2 * grid.dim, 2)) + list(range(1, 2 * grid.dim, 2))
    cellmin = (
        mg.values.reshape(shape).transpose(perm).reshape((m_j,) * grid.dim + (-1,)).min(axis=-1)
    )
    scale = 1.0 if j >= j_prime else 2.0 ** (grid.dim * (j_prime - j))
    worst = 0.0
    for k in np.ndindex(*(m_j,) * grid.dim):
        g = decay_weighted_sum(coeffs, j, j_prime, k, decay_n)
        denom = scale * cellmin[k]
        if g == 0.0:
            continue
        if denom == 0.0:
            return math.inf
        worst = max(worst, g / denom)
    return worst


def fefferman_stein_ratio(family, p, q, r, scheme="integral"):
    """Ratio of Lorentz functionals of maximal vs raw level cascades.

    ``family`` is a list of cell functions on a common lattice.  Returns
    ``||(sum_j M(f_j)^q)^(1/q)|| / ||(sum_j f_j^q)^(1/q)||`` with the 0/0
    convention 1; the numerator cannot vanish while the denominator is
    positive since M dominates the identity.
    """
    if not family:
        return 1.0
    vol = family[0].cell_volume
    if q == math.inf:
        raw = np.maximum.reduce([g.values for g in family])
        maxed = np.maximum.reduce([hl_maximal(g).values for g in family])
    else:
        raw = np.add.reduce([g.values**q for g in family]) ** (1.0 / q)
        maxed = np.add.reduce([hl_maximal(g).values ** q for g in family]) ** (1.0 / q)
    den = lorentz_quasi_norm(CellFunction(raw, vol), p, r, scheme=scheme)
    num = lorentz_quasi_norm(CellFunction(maxed, vol), p, r, scheme=scheme)
    if den == 0.0:
        if num == 0.0:
            return 1.0
        return math.inf
    return num / den
