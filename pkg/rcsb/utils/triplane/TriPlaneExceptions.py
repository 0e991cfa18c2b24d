##
# File:    TriPlaneExceptions.py
# Author:  jdw
# Date:    12-Oct-2026
#
# Updates:
#
##
"""
Exception classes raised by the triplane fitting, rendering and diffusion utilities.
"""

__docformat__ = "restructuredtext en"
__author__ = "John Westbrook"
__email__ = "john.westbrook@rcsb.org"
__license__ = "Apache 2.0"


class TriPlaneError(Exception):
    """Base class for all errors raised in this package."""


class ShapeMismatchError(TriPlaneError, ValueError):
    """Array shapes, arities or resolutions do not agree."""


class ValueRangeError(TriPlaneError, ValueError):
    """An input value lies outside its admissible range."""


class RenderError(TriPlaneError):
    """Non-finite density encountered while compositing a ray."""

    def __init__(self, message, rayIndex=None, sampleIndex=None, pixel=None):
        super().__init__(message)
        self.rayIndex = rayIndex
        self.sampleIndex = sampleIndex
        self.pixel = pixel


class RenderGraphError(TriPlaneError):
    """Backward pass requested on a render graph that was already consumed."""


class DivergenceError(TriPlaneError):
    """Loss or gradient became non-finite during an optimization loop."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class DatasetWriteError(TriPlaneError):
    """Failure writing the dataset container."""


class FormatError(TriPlaneError):
    """Malformed or truncated triplane, checkpoint or depth file."""


class OutputLockError(TriPlaneError):
    """Output directory is already locked by another writer."""
