"""
Utils 패키지
"""
from .logger import logger, setup_logger, get_logger, set_level
from .constants import *
from .errors import (
    TexelFusionError,
    UsageError,
    DataError,
    NumericError,
    FormatError,
)

__all__ = [
    'logger', 'setup_logger', 'get_logger', 'set_level',
    'TexelFusionError', 'UsageError', 'DataError', 'NumericError', 'FormatError',
]
