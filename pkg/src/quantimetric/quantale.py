"""Unital commutative quantales used as value domains.

Three instances are supported:

* ``bool2``   -- the two-element Boolean algebra, tensor = conjunction.
* ``unit-rev`` -- ``[0, 1]`` ordered by the *reversed* real order, tensor is
  truncated addition ``min(r + s, 1)``.
* ``ext-rev``  -- ``[0, inf]`` ordered by the reversed real order, tensor is
  addition.

Elements are plain Python numbers: ``0``/``1`` for ``bool2`` and floats for the
real quantales (``math.inf`` is the explicit infinity of ``ext-rev``).  All
order tests on real quantales go through a single tolerance ``eps``.

Because the real quantales are reversed, a quantale *join* is a real *inf* and
the quantale top is real ``0``.  Code elsewhere in the package always talks in
quantale terms and leaves the translation to this module.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

from .errors import UsageError

Value = Union[int, float]

INF = math.inf
DEFAULT_EPS = 1e-9


class QuantaleId(enum.Enum):
    BOOL2 = "bool2"
    UNIT_REV = "unit-rev"
    EXT_REV = "ext-rev"


@dataclass(frozen=True)
class Quantale:
    id: QuantaleId
    eps: float = DEFAULT_EPS

    @classmethod
    def from_name(cls, name: str, eps: float = DEFAULT_EPS) -> "Quantale":
        try:
            return cls(QuantaleId(name), eps)
        except ValueError:
            names = ", ".join(q.value for q in QuantaleId)
            raise UsageError(f"unknown quantale {name!r} (expected one of {names})") from None

    @property
    def name(self) -> str:
        return self.id.value

    @property
    def is_real(self) -> bool:
        return self.id is not QuantaleId.BOOL2

    # -- distinguished elements ------------------------------------------------

    @property
    def top(self) -> Value:
        return 1 if self.id is QuantaleId.BOOL2 else 0.0

    @property
    def bottom(self) -> Value:
        if self.id is QuantaleId.BOOL2:
            return 0
        if self.id is QuantaleId.UNIT_REV:
            return 1.0
        return INF

    @property
    def unit(self) -> Value:
        return 1 if self.id is QuantaleId.BOOL2 else 0.0

    # -- carrier ---------------------------------------------------------------

    def contains(self, v: Value) -> bool:
        if self.id is QuantaleId.BOOL2:
            return v in (0, 1)
        if isinstance(v, bool) or not isinstance(v, (int, float)) or math.isnan(v):
            return False
        if self.id is QuantaleId.UNIT_REV:
            return -self.eps <= v <= 1.0 + self.eps
        return v >= -self.eps

    def coerce(self, v) -> Value:
        """Validate ``v`` and normalise it into the carrier (clamping eps-noise)."""
        if self.id is QuantaleId.BOOL2:
            if v in (0, 1, True, False):
                return int(v)
            raise UsageError(f"{v!r} is not an element of bool2")
        if isinstance(v, str) and v.lower() in ("inf", "infinity"):
            v = INF
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not self.contains(v):
            raise UsageError(f"{v!r} is not an element of {self.name}")
        v = float(v)
        if v < 0.0:
            return 0.0
        if self.id is QuantaleId.UNIT_REV and v > 1.0:
            return 1.0
        return v

    # -- order -----------------------------------------------------------------

    def leq(self, u: Value, v: Value) -> bool:
        """Quantale order ``u <= v``."""
        if self.id is QuantaleId.BOOL2:
            return u <= v
        if u == v:
            return True
        return u >= v - self.eps

    def eq(self, u: Value, v: Value) -> bool:
        if self.id is QuantaleId.BOOL2 or u == v:
            return u == v
        return abs(u - v) <= self.eps

    def lt(self, u: Value, v: Value) -> bool:
        return self.leq(u, v) and not self.eq(u, v)

    def join2(self, u: Value, v: Value) -> Value:
        if self.id is QuantaleId.BOOL2:
            return u | v
        return u if u <= v else v

    def meet2(self, u: Value, v: Value) -> Value:
        if self.id is QuantaleId.BOOL2:
            return u & v
        return u if u >= v else v

    def join(self, vs: Iterable[Value]) -> Value:
        acc = self.bottom
        for v in vs:
            acc = self.join2(acc, v)
        return acc

    def meet(self, vs: Iterable[Value]) -> Value:
        acc = self.top
        for v in vs:
            acc = self.meet2(acc, v)
        return acc

    def descending(self, vs: Iterable[Value]) -> list[Value]:
        """Distinct values sorted from the quantale top downwards."""
        if self.id is QuantaleId.BOOL2:
            return sorted(set(vs), reverse=True)
        return sorted(set(vs))

    # -- monoid structure ------------------------------------------------------

    def tensor(self, u: Value, v: Value) -> Value:
        if self.id is QuantaleId.BOOL2:
            return u & v
        if self.id is QuantaleId.UNIT_REV:
            s = u + v
            return 1.0 if s >= 1.0 else s
        return u + v

    def residuate(self, y: Value, z: Value) -> Value:
        """Right adjoint ``[y, z]``: the greatest ``x`` with ``x (x) y <= z``."""
        if self.id is QuantaleId.BOOL2:
            return int((not y) or bool(z))
        if self.id is QuantaleId.EXT_REV:
            if z == INF:
                return 0.0 if y == INF else INF
            if y == INF:
                return 0.0
        return z - y if z > y else 0.0

    # -- total-below relation (finite test approximation) ----------------------

    def totally_below(self, u: Value, v: Value, candidate_join_sets: Iterable[Sequence[Value]]) -> bool:
        """True iff every supplied ``W`` with ``v <= join(W)`` has some ``w >= u``."""
        for w_set in candidate_join_sets:
            if self.leq(v, self.join(w_set)) and not any(self.leq(u, w) for w in w_set):
                return False
        return True


BOOL2 = Quantale(QuantaleId.BOOL2)
UNIT_REV = Quantale(QuantaleId.UNIT_REV)
EXT_REV = Quantale(QuantaleId.EXT_REV)


def same_quantale(*qs: Quantale) -> Quantale:
    first = qs[0]
    for q in qs[1:]:
        if q.id is not first.id:
            raise UsageError(f"mixed quantales: {first.name} and {q.name}")
    return first
