"""Range-coded lossless compression of paired pyramids."""

from .context import ContextConfig
from .core import CodecConfig, RateReport, decode, encode, rate_report, report_for
from .stream import CodedStream

__all__ = ["CodecConfig", "CodedStream", "ContextConfig", "RateReport", "decode", "encode", "rate_report", "report_for"]
