"""Paired-pyramid image transform, statistics and lossless range codec."""

from .errors import CausalityError, DomainError, FormatError, IntegrityError, PyrCodecError, ShapeError
from .image import Image
from .pyramid import PairedPyramid, auto_levels, build_pyramid, invert_pyramid

__all__ = [
    "CausalityError", "DomainError", "FormatError", "Image", "IntegrityError", "PairedPyramid",
    "PyrCodecError", "ShapeError", "auto_levels", "build_pyramid", "invert_pyramid",
]
__version__ = "0.1.0"
