##
# File:    ConfigUtils.py
# Author:  jdw
# Date:    14-Oct-2026
#
# Updates:
#
##
"""
Stage configuration helpers: dataclass construction from loose dictionaries and flat
key = value configuration files.
"""

__docformat__ = "restructuredtext en"
__author__ = "John Westbrook"
__email__ = "john.westbrook@rcsb.org"
__license__ = "Apache 2.0"

import dataclasses
import logging

from rcsb.utils.io.MarshalUtil import MarshalUtil
from rcsb.utils.triplane.TriPlaneExceptions import ValueRangeError

logger = logging.getLogger(__name__)


def coerceValue(value, default):
    """Coerce value to the type of default (bool, int, float, str, tuple or list of numbers)."""
    if default is None or value is None:
        return value
    try:
        if isinstance(default, bool):
            if isinstance(value, str):
                if value.strip().lower() in ("1", "true", "yes", "on"):
                    return True
                if value.strip().lower() in ("0", "false", "no", "off"):
                    return False
                raise ValueError(value)
            return bool(value)
        if isinstance(default, int):
            return int(float(value)) if isinstance(value, str) else int(value)
        if isinstance(default, float):
            return float(value)
        if isinstance(default, (tuple, list)):
            vL = [v for v in value.replace(",", " ").split()] if isinstance(value, str) else list(value)
            elType = type(default[0]) if default else float
            return type(default)(elType(v) for v in vL)
        return type(default)(value)
    except (TypeError, ValueError):
        raise ValueRangeError("Cannot interpret %r as %s" % (value, type(default).__name__))


class ConfigMixin(object):
    """fromDict()/toDict() for stage configuration dataclasses."""

    @classmethod
    def fromDict(cls, configD, **overrides):
        valD = dict(configD or {})
        valD.update({k: v for k, v in overrides.items() if v is not None})
        fieldD = {fd.name: fd for fd in dataclasses.fields(cls)}
        kwD = {}
        for key, value in valD.items():
            if key not in fieldD:
                logger.warning("%s ignoring unknown configuration key %r", cls.__name__, key)
                continue
            fd = fieldD[key]
            default = fd.default if fd.default is not dataclasses.MISSING else (fd.default_factory() if fd.default_factory is not dataclasses.MISSING else None)
            kwD[key] = coerceValue(value, default)
        return cls(**kwD)

    def toDict(self):
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in dataclasses.asdict(self).items()}


class ConfigUtils(object):
    def __init__(self, **kwargs):
        self.__mU = MarshalUtil(workPath=kwargs.get("workPath", "."))

    def readKeyValueFile(self, filePath):
        """Read a flat configuration file with one "key = value" pair per line ('#' starts a comment)."""
        configD = {}
        if not filePath:
            return configD
        if not self.__mU.exists(filePath):
            raise ValueRangeError("Configuration file %s not found" % filePath)
        for ii, line in enumerate(self.__mU.doImport(filePath, fmt="list") or [], 1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ValueRangeError("Malformed configuration line %d in %s: %r" % (ii, filePath, line))
            key, value = (v.strip() for v in text.split("=", 1))
            configD[key] = value
        logger.debug("Read %d configuration values from %s", len(configD), filePath)
        return configD
