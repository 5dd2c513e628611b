"""Exception hierarchy.

``PairwalkError`` is the base for everything the engine raises on purpose.
``ConfigError`` marks problems with user input (exit code 2 on the CLI); the
rest are engine errors (exit code 1).
"""


class PairwalkError(Exception):
    """Base class for engine errors."""


class ConfigError(PairwalkError, ValueError):
    """Invalid user configuration.

    ``field`` names the offending entry as a dotted path when known.
    """

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class BadSpec(ConfigError):
    """A domain object was constructed with out-of-range parameters."""


class EdgeOverlap(ConfigError):
    """The initial Gaussian does not fit in the lattice."""


class NormDrift(PairwalkError):
    """Norm left its tolerance band during evolution."""


class EdgeContamination(PairwalkError):
    """Probability reached the lattice edges; the run is invalid."""


class InsufficientSamples(PairwalkError):
    """Too few samples in a fitting window."""


class UnfittedModel(PairwalkError):
    """A dispersion model was evaluated before gamma and beta were set."""


class DegenerateFit(PairwalkError):
    """Least-squares design matrix is rank deficient."""


class TooLarge(PairwalkError):
    """Dense construction requested beyond the size guard."""


class NoBoundBand(PairwalkError):
    """No eigenstate qualifies as a bound pair."""
