"""Python bindings for the passforge pass-selection compiler."""

from ._passforge import *  # noqa: F401,F403
from ._passforge import __doc__  # noqa: F401

__version__ = "0.1.0"
