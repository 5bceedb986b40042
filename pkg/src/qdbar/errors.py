"""Exception types shared across the package."""


class QdbarError(Exception):
    """Base class for all library errors."""


class InvalidFamilyParams(QdbarError):
    """Weight-family parameters outside their admissible range."""


class WindowTooSmall(QdbarError):
    """Requested mode or operation does not fit in the evaluated window."""


class WindowMismatch(QdbarError):
    """Sequence window does not line up with the operator window."""


class WeightRefMismatch(QdbarError):
    """Vector carries a weight reference the operation does not recognise."""


class InvalidVariant(QdbarError):
    """Boundary variant not available on this domain, or unknown pairing."""


class NotInDomain(QdbarError):
    """Vector fails the finite-image-norm guard for the requested operator."""


class DimTooLarge(QdbarError):
    """Requested truncation dimension exceeds the evaluated window."""


class NoSpectralGap(QdbarError):
    """Singular-value gap too small to certify kernel dimensions."""


class IllConditioned(QdbarError):
    """Dense solve rejected because the condition estimate is too large."""


class ConfigParseError(QdbarError):
    """Run configuration could not be parsed or fails validation."""
