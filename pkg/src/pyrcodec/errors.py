"""Exception hierarchy shared by every module."""


class PyrCodecError(Exception):
    """Base class for all errors raised by pyrcodec."""


class DomainError(PyrCodecError, ValueError):
    """An argument lies outside the domain of an operation."""


class ShapeError(PyrCodecError, ValueError):
    """Array extents are incompatible with the requested operation."""


class FormatError(PyrCodecError):
    """A file or bitstream header could not be parsed."""


class IntegrityError(PyrCodecError):
    """Decoded data failed a checksum or length check."""


class CausalityError(PyrCodecError):
    """A context referenced a sample the decoder would not have yet."""
