"""Time-indexed families of coefficient fields on a shared mesh."""

from __future__ import annotations

import math

import numpy as np

from .errors import MeshCoverageError, WindowSamplingError

MIN_SAMPLES_PER_WINDOW = 4


def window_of(t):
    """Dyadic time window index: t in [4**-jt, 4**(1-jt)) maps to jt."""
    return -math.floor(math.log2(t) / 2.0 + 1e-12)


def window_bounds(j_t):
    return 4.0 ** (-j_t), 4.0 ** (1 - j_t)


def geometric_mesh(t_min, t_max, per_window=MIN_SAMPLES_PER_WINDOW):
    """Geometric time samples with ``per_window`` points per dyadic window."""
    ratio = 4.0 ** (1.0 / per_window)
    count = int(math.floor(math.log(t_max / t_min) / math.log(ratio) + 1e-9)) + 1
    mesh = t_min * ratio ** np.arange(count)
    if mesh[-1] < t_max * (1 - 1e-12):
        mesh = np.append(mesh, t_max)
    return mesh


class Trajectory:
    """States (tuples of CoeffField components) on an increasing time mesh.

    ``states[i]`` holds the field at ``mesh[i]``; scalar trajectories store
    1-tuples.  ``zero_state`` optionally anchors linear interpolation on
    ``[0, mesh[0])``; without it, queries below the first sample clamp to it.
    """

    def __init__(self, mesh, states, zero_state=None):
        mesh = np.asarray(mesh, dtype=float)
        if mesh.size == 0:
            raise MeshCoverageError("empty time mesh")
        if np.any(mesh <= 0.0) or np.any(np.diff(mesh) <= 0.0):
            raise MeshCoverageError("mesh must be strictly increasing and positive")
        if len(states) != mesh.size:
            raise MeshCoverageError("one state per mesh sample required")
        self.mesh = mesh
        self.states = [s if isinstance(s, tuple) else (s,) for s in states]
        self.zero_state = (
            None
            if zero_state is None
            else (zero_state if isinstance(zero_state, tuple) else (zero_state,))
        )

    @property
    def ncomp(self):
        return len(self.states[0])

    @property
    def grid(self):
        return self.states[0][0].grid

    @property
    def span(self):
        return float(self.mesh[0]), float(self.mesh[-1])

    def windows(self):
        """Window indices holding at least one sample, descending in time."""
        return sorted({window_of(t) for t in self.mesh})

    def samples_in_window(self, j_t):
        lo, hi = window_bounds(j_t)
        return [i for i, t in enumerate(self.mesh) if lo <= t < hi]

    def validate_window_sampling(self, per_window=MIN_SAMPLES_PER_WINDOW):
        """Windows fully inside the span must hold >= per_window samples."""
        t0, t1 = self.span
        for j_t in range(window_of(t1), window_of(t0) + 1):
            lo, hi = window_bounds(j_t)
            if lo >= t0 and hi <= t1 * (1 + 1e-12):
                if len(self.samples_in_window(j_t)) < per_window:
                    raise WindowSamplingError(
                        f"window [{lo:g}, {hi:g}) holds fewer than "
                        f"{per_window} samples"
                    )

    def state_at(self, t):
        """Linear interpolation of coefficients between mesh samples."""
        mesh = self.mesh
        if t >= mesh[-1] - 1e-15:
            if t > mesh[-1] * (1 + 1e-9):
                raise MeshCoverageError(f"t={t:g} beyond mesh end {mesh[-1]:g}")
            return self.states[-1]
        if t <= mesh[0]:
            if self.zero_state is None:
                return self.states[0]
            w = t / mesh[0]
            return tuple(
                (z * (1.0 - w) + s * w)
                for z, s in zip(self.zero_state, self.states[0])
            )
        i = int(np.searchsorted(mesh, t, side="right")) - 1
        w = (t - mesh[i]) / (mesh[i + 1] - mesh[i])
        return tuple(
            a * (1.0 - w) + b * w
            for a, b in zip(self.states[i], self.states[i + 1])
        )

    def map_states(self, fn):
        return Trajectory(
            self.mesh,
            [tuple(fn(c, t) for c in s) for s, t in zip(self.states, self.mesh)],
            zero_state=None
            if self.zero_state is None
            else tuple(fn(c, 0.0) for c in self.zero_state),
        )

    def __sub__(self, other):
        if not np.allclose(self.mesh, other.mesh):
            raise MeshCoverageError("trajectories live on different meshes")
        return Trajectory(
            self.mesh,
            [
                tuple(a - b for a, b in zip(sa, sb))
                for sa, sb in zip(self.states, other.states)
            ],
        )
