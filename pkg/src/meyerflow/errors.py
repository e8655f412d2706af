"""Exception types shared across the toolkit."""


class MeyerflowError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(MeyerflowError, ValueError):
    """Invalid configuration value or cross-field constraint violation."""


class ResolutionError(ConfigError):
    """Grid cannot resolve the requested dyadic level range."""


class LevelRangeError(ConfigError):
    """A dyadic level falls outside the configured analysis window."""


class TransitionProfileError(ConfigError):
    """Unknown transition profile name or resolution below the minimum."""


class MeshCoverageError(MeyerflowError):
    """Time mesh does not cover the requested integration range."""


class WindowSamplingError(MeshCoverageError):
    """A dyadic time window inside the span holds fewer samples than required."""


class GevreyOverflowError(MeyerflowError):
    """Growth multiplier exponent exceeds the configured overflow cap."""

    def __init__(self, exponent, cap, t, j_top):
        self.exponent = exponent
        self.cap = cap
        self.t = t
        self.j_top = j_top
        super().__init__(
            f"Gevrey growth exponent {exponent:.3g} exceeds cap {cap:.3g} "
            f"at t={t:.6g}, top level j={j_top}"
        )


class NonContractionError(MeyerflowError):
    """Fixed-point iteration failed to contract (data not small enough)."""

    def __init__(self, diffs):
        self.diffs = list(diffs)
        super().__init__(
            "successive-difference norms are not geometrically decreasing: "
            + ", ".join(f"{d:.3e}" for d in self.diffs)
        )


class DivergenceDriftError(MeyerflowError):
    """A trajectory state violates the divergence-free tolerance."""


class SmallnessError(MeyerflowError):
    """Initial data norm exceeds the configured smallness target."""
