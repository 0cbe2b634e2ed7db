"""Exception types raised by the model code."""


class TwinBeamError(ValueError):
    """Base class for all model errors."""


class NonIntegrableTerm(TwinBeamError):
    """A Gaussian term with u*v <= t**2 (or u, v <= 0) has no finite integral."""


class DegenerateDenominator(TwinBeamError):
    """An IPS coefficient denominator x_j*y_j - 4B^2(1-tau_eff)^2 is not positive."""


class ZeroClickProbability(TwinBeamError):
    """The double-click conditioning event has probability zero."""


class IllConditioned(TwinBeamError):
    """The Gaussian-sum representation cancels too strongly to be trusted in float64."""


class CutoffTooSmall(TwinBeamError):
    """The Fock-space truncation violates the tail rule."""


class InvalidParity(TwinBeamError):
    """A parity expectation fell outside [-1, 1]; the state is not a valid state."""
