"""Quantale-valued behavioural distances, relation liftings and up-to techniques."""

from .errors import CapExceeded, UsageError
from .quantale import BOOL2, EXT_REV, UNIT_REV, Quantale, QuantaleId
from .vrel import Carrier, FiniteMap, LazyRel, VPred, VRel

__all__ = [
    "BOOL2", "EXT_REV", "UNIT_REV", "Quantale", "QuantaleId",
    "Carrier", "FiniteMap", "LazyRel", "VPred", "VRel",
    "CapExceeded", "UsageError",
]
