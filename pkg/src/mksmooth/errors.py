"""Exception types shared across the package.

Every failure mode that callers are expected to handle gets its own class so
the CLI can map families of errors onto exit codes (config problems vs
numeric failures) without string matching.
"""


class MksmoothError(Exception):
    """Base class for all package errors."""


# --- geometry ---------------------------------------------------------------

class OffManifold(MksmoothError):
    """A point failed the on-manifold check (tolerance 1e-9)."""


class StepTooLarge(MksmoothError):
    """exp_map was asked to travel beyond the injectivity-radius bound."""


class UnsupportedManifold(MksmoothError):
    """Operation requires analytic geometry available only for built-ins."""


# --- sampling ---------------------------------------------------------------

class SamplerStalled(MksmoothError):
    """Rejection sampler exceeded its proposal cap (1e6 * n)."""


# --- kernels ----------------------------------------------------------------

class UnknownMoment(MksmoothError):
    """kernel_moment was asked for a moment it does not know."""


# --- smoothing --------------------------------------------------------------

class EmptySample(MksmoothError):
    """An estimator was given zero sample points."""


class DegenerateDenominator(MksmoothError):
    """Normalized smoothing denominator underflowed (< 1e-300)."""


class MissingResponses(MksmoothError):
    """Regression requested on a sample without responses."""


class ResolutionTooCoarse(MksmoothError):
    """Population quadrature failed its resolution-doubling validation."""


# --- spectral ---------------------------------------------------------------

class ConvergenceFailure(MksmoothError):
    """Eigendecomposition did not converge."""


class EmptyBall(MksmoothError):
    """A neighborhood count N(i) came back zero during w-normalization."""


# --- asymptotics ------------------------------------------------------------

class DegenerateVariance(MksmoothError):
    """A limit-variance formula was evaluated at a degenerate point."""


# --- harness ----------------------------------------------------------------

class ConfigError(MksmoothError):
    """Base class for configuration problems (exit code 2)."""


class SchemaError(ConfigError):
    """Unknown key/section or type mismatch; message lists every violation."""


class RangeError(ConfigError):
    """A config value is outside its legal range."""


class IoError(ConfigError):
    """Result reading/writing failed (missing directory, unwritable path)."""
