"""Exception types shared across the toolkit.

Every module raises subclasses of :class:`VacqrngError` for contract
violations that a caller can meaningfully handle.  Programming errors
(wrong argument types, malformed arrays) raise plain ``ValueError``.
"""


class VacqrngError(Exception):
    """Base class for all toolkit errors."""


# --- entropy bounds ---------------------------------------------------------

class DegenerateModel(VacqrngError):
    """Conditional signal variance does not exceed the excess-noise variance,
    so the effective gain is zero or imaginary."""


class InconsistentModel(VacqrngError):
    """Total variance is smaller than the conditional variance, which no
    stationary process can produce."""


class InvalidDelta(VacqrngError):
    """The bound-family parameter must be strictly positive."""


class NegativeNoise(VacqrngError):
    """Classical noise variance cannot be negative."""


# --- spectral estimation ----------------------------------------------------

class BadBlockLength(VacqrngError):
    """Periodogram blocks must be a power of two of length >= 8."""


class InsufficientData(VacqrngError):
    """Not enough samples for the requested analysis."""


class ZeroBin(VacqrngError):
    """A zero spectral bin makes the entropy rate diverge to -inf."""


class BinCountMismatch(VacqrngError):
    """Two spectra must have the same number of frequency bins."""


# --- simulation -------------------------------------------------------------

class EmptyFilter(VacqrngError):
    """Shaping filters must have at least one nonzero coefficient."""


class AliasedDetuning(VacqrngError):
    """Beat detuning at or above the Nyquist frequency cannot be synthesized."""


# --- calibration ------------------------------------------------------------

class LineNotFound(VacqrngError):
    """No spectral line with sufficient signal-to-noise ratio at the
    expected beat frequency."""


class DomainError(VacqrngError):
    """Detector parameter outside its physical range."""


# --- extractor --------------------------------------------------------------

class LengthMismatch(VacqrngError):
    """Bit-vector length does not match the configured matrix dimensions."""


class ConfigMismatch(VacqrngError):
    """Extractor configuration incompatible with the streaming sample format."""


# --- pipeline ---------------------------------------------------------------

class MissingArtifact(VacqrngError):
    """A required pipeline artifact file does not exist."""
