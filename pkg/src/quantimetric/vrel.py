"""Quantale-valued predicates and relations on finite, index-based carriers.

Relations are sparse: a dict of explicit entries plus a ``default`` value for
every other pair.  A relation may additionally carry a ``diagonal`` value that
is joined into every ``(x, x)`` entry; this is how reflexive closures stay
representable on carriers too large to enumerate (subset states of an NFA).

Operations that need to walk the whole carrier take an optional ``elements``
argument.  Without it the carrier is enumerated as ``range(size)``, which is
refused above :data:`ENUM_CAP` elements.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Mapping, Optional, Sequence

from .errors import UsageError
from .quantale import Quantale, Value, same_quantale

ENUM_CAP = 4096
# above this size ``leq`` compares supports and baselines instead of enumerating
DENSE_LEQ_CAP = 64

Pair = tuple[int, int]


@dataclass(frozen=True)
class Carrier:
    size: int
    labels: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        if self.size < 0:
            raise UsageError("carrier size must be non-negative")
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(self.labels))
            if len(self.labels) != self.size:
                raise UsageError("carrier labels must have one entry per element")

    @classmethod
    def labelled(cls, labels: Sequence[str]) -> "Carrier":
        return cls(len(labels), tuple(labels))

    def label(self, i: int) -> str:
        return self.labels[i] if self.labels is not None else str(i)

    def index(self, label: str) -> int:
        if self.labels is None:
            return int(label)
        try:
            return self.labels.index(label)
        except ValueError:
            raise UsageError(f"unknown element {label!r}") from None

    def elements(self, elements: Optional[Iterable[int]] = None) -> list[int]:
        if elements is not None:
            return list(elements)
        if self.size > ENUM_CAP:
            raise UsageError(
                f"carrier of size {self.size} is not enumerable; pass an explicit element list"
            )
        return list(range(self.size))


@dataclass(frozen=True)
class FiniteMap:
    domain: Carrier
    codomain: Carrier
    table: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "table", tuple(self.table))
        if len(self.table) != self.domain.size:
            raise UsageError("finite map must be total on its domain")
        if any(not 0 <= y < self.codomain.size for y in self.table):
            raise UsageError("finite map value outside its codomain")

    def __call__(self, x: int) -> int:
        return self.table[x]

    def preimages(self) -> dict[int, list[int]]:
        pre: dict[int, list[int]] = {}
        for x, y in enumerate(self.table):
            pre.setdefault(y, []).append(x)
        return pre

    def then(self, g: "FiniteMap") -> "FiniteMap":
        """The composite ``g . self``."""
        if g.domain != self.codomain:
            raise UsageError("cannot compose maps with mismatched carriers")
        return FiniteMap(self.domain, g.codomain, tuple(g.table[y] for y in self.table))

    @classmethod
    def identity(cls, carrier: Carrier) -> "FiniteMap":
        return cls(carrier, carrier, tuple(range(carrier.size)))


@dataclass(frozen=True)
class VPred:
    quantale: Quantale
    carrier: Carrier
    values: Mapping[int, Value] = field(default_factory=dict)
    default: Value = None  # type: ignore[assignment]

    def __post_init__(self):
        q = self.quantale
        default = q.bottom if self.default is None else q.coerce(self.default)
        object.__setattr__(self, "default", default)
        clean = {}
        for i, v in self.values.items():
            v = q.coerce(v)
            if not q.eq(v, default):
                clean[i] = v
        object.__setattr__(self, "values", clean)

    def __call__(self, x: int) -> Value:
        return self.values.get(x, self.default)

    @classmethod
    def from_list(cls, quantale: Quantale, values: Sequence[Value], carrier: Optional[Carrier] = None) -> "VPred":
        carrier = carrier or Carrier(len(values))
        return cls(quantale, carrier, dict(enumerate(values)), quantale.bottom)

    @classmethod
    def constant(cls, quantale: Quantale, carrier: Carrier, v: Value) -> "VPred":
        return cls(quantale, carrier, {}, v)

    def as_list(self) -> list[Value]:
        return [self(x) for x in range(self.carrier.size)]

    def as_rel(self, base: Carrier) -> "VRel":
        """Inverse of :meth:`VRel.as_pred` for a predicate on ``base x base``."""
        n = base.size
        if self.carrier.size != n * n:
            raise UsageError("predicate carrier is not the square of the base carrier")
        return VRel(self.quantale, base, {divmod(k, n): v for k, v in self.values.items()}, self.default)


@dataclass(frozen=True)
class VRel:
    quantale: Quantale
    carrier: Carrier
    values: Mapping[Pair, Value] = field(default_factory=dict)
    default: Value = None  # type: ignore[assignment]
    diagonal: Optional[Value] = None

    def __post_init__(self):
        q = self.quantale
        default = q.bottom if self.default is None else q.coerce(self.default)
        object.__setattr__(self, "default", default)
        diag = None
        if self.diagonal is not None:
            diag = q.coerce(self.diagonal)
            if q.leq(diag, default):
                diag = None
        object.__setattr__(self, "diagonal", diag)
        clean = {}
        for (i, j), v in self.values.items():
            v = q.coerce(v)
            if not q.eq(v, self._base(i, j)):
                clean[(i, j)] = v
        object.__setattr__(self, "values", clean)

    def _base(self, i: int, j: int) -> Value:
        if i == j and self.diagonal is not None:
            return self.quantale.join2(self.default, self.diagonal)
        return self.default

    def get(self, i: int, j: int) -> Value:
        v = self.values.get((i, j))
        if v is None:
            return self._base(i, j)
        if i == j and self.diagonal is not None:
            return self.quantale.join2(v, self.diagonal)
        return v

    __call__ = get

    def support(self) -> dict[Pair, Value]:
        """Explicit entries (pairs whose value differs from the baseline)."""
        return dict(self.values)

    def support_elements(self) -> set[int]:
        return {x for pair in self.values for x in pair}

    def items(self, elements: Optional[Iterable[int]] = None) -> Iterator[tuple[Pair, Value]]:
        els = self.carrier.elements(elements)
        for i in els:
            for j in els:
                yield (i, j), self.get(i, j)

    def swap(self) -> "VRel":
        return VRel(
            self.quantale, self.carrier, {(j, i): v for (i, j), v in self.values.items()},
            self.default, self.diagonal,
        )

    def with_entries(self, updates: Mapping[Pair, Value]) -> "VRel":
        values = dict(self.values)
        values.update(updates)
        return VRel(self.quantale, self.carrier, values, self.default, self.diagonal)

    def materialize(self, elements: Optional[Iterable[int]] = None) -> "VRel":
        """Copy with every diagonal value stored explicitly (no ``diagonal`` field)."""
        if self.diagonal is None:
            return self
        els = self.carrier.elements(elements)
        values = dict(self.values)
        for x in els:
            values[(x, x)] = self.get(x, x)
        return VRel(self.quantale, self.carrier, values, self.default)

    def as_pred(self) -> VPred:
        """View on the product carrier, pair ``(i, j)`` encoded as ``i * size + j``."""
        n = self.carrier.size
        rel = self.materialize()
        return VPred(self.quantale, Carrier(n * n), {i * n + j: v for (i, j), v in rel.values.items()}, rel.default)

    @classmethod
    def from_dense(cls, quantale: Quantale, matrix: Sequence[Sequence[Value]], default: Optional[Value] = None,
                   carrier: Optional[Carrier] = None) -> "VRel":
        carrier = carrier or Carrier(len(matrix))
        values = {(i, j): v for i, row in enumerate(matrix) for j, v in enumerate(row)}
        return cls(quantale, carrier, values, quantale.bottom if default is None else default)

    @classmethod
    def from_function(cls, quantale: Quantale, carrier: Carrier, fn: Callable[[int, int], Value],
                      default: Optional[Value] = None, elements: Optional[Iterable[int]] = None) -> "VRel":
        els = carrier.elements(elements)
        values = {(i, j): fn(i, j) for i in els for j in els}
        return cls(quantale, carrier, values, quantale.bottom if default is None else default)

    def to_dense(self, elements: Optional[Iterable[int]] = None) -> list[list[Value]]:
        els = self.carrier.elements(elements)
        return [[self.get(i, j) for j in els] for i in els]

    def to_json(self) -> dict:
        out = {
            "default": _json_value(self.default),
            "entries": [[i, j, _json_value(v)] for (i, j), v in sorted(self.values.items())],
        }
        if self.diagonal is not None:
            out["diagonal"] = _json_value(self.diagonal)
        return out

    @classmethod
    def from_json(cls, quantale: Quantale, carrier: Carrier, data: Mapping) -> "VRel":
        try:
            entries = {(int(i), int(j)): v for i, j, v in data.get("entries", [])}
            return cls(quantale, carrier, entries, data.get("default", quantale.bottom), data.get("diagonal"))
        except (TypeError, ValueError) as exc:
            raise UsageError(f"malformed relation: {exc}") from None


class LazyRel:
    """Relation given pointwise by a function, evaluated on demand and memoised.

    Up-to techniques whose output is only ever queried at a few pairs (the
    union closure on subset states, the convex closure) produce these.
    """

    def __init__(self, quantale: Quantale, carrier: Carrier, fn: Callable[[int, int], Value]):
        self.quantale = quantale
        self.carrier = carrier
        self._fn = fn
        self._memo: dict[Pair, Value] = {}

    def get(self, i: int, j: int) -> Value:
        v = self._memo.get((i, j))
        if v is None:
            v = self._memo[(i, j)] = self._fn(i, j)
        return v

    __call__ = get

    def on(self, pairs: Iterable[Pair]) -> VRel:
        """Materialise on ``pairs``; bottom elsewhere."""
        return VRel(self.quantale, self.carrier, {p: self.get(*p) for p in pairs})


def _json_value(v: Value):
    if v == float("inf"):
        return "inf"
    return v


def _check_carrier(a: Carrier, b: Carrier) -> None:
    if a != b:
        raise UsageError(f"carrier mismatch: size {a.size} vs {b.size}")


# -- fibrational structure ------------------------------------------------------


def reindex(f: FiniteMap, r: VRel) -> VRel:
    """``r . (f x f)``: pull a relation on the codomain back to the domain."""
    _check_carrier(f.codomain, r.carrier)
    pre = f.preimages()
    values: dict[Pair, Value] = {}
    for (y1, y2), v in r.materialize().values.items():
        for x1 in pre.get(y1, ()):
            for x2 in pre.get(y2, ()):
                values[(x1, x2)] = v
    return VRel(r.quantale, f.domain, values, r.default)


def direct_image(f: FiniteMap, r: VRel) -> VRel:
    """Push forward along ``f x f``: join over preimages, bottom off the image."""
    _check_carrier(f.domain, r.carrier)
    q = r.quantale
    values: dict[Pair, Value] = {}
    for (x1, x2), v in r.items():
        key = (f(x1), f(x2))
        values[key] = q.join2(values.get(key, q.bottom), v)
    return VRel(q, f.codomain, values, q.bottom)


def leq(p: VRel, q_rel: VRel, elements: Optional[Iterable[int]] = None) -> bool:
    """Pointwise quantale order ``p <= q``."""
    _check_carrier(p.carrier, q_rel.carrier)
    q = same_quantale(p.quantale, q_rel.quantale)
    if elements is not None or p.carrier.size <= DENSE_LEQ_CAP:
        return all(q.leq(v, q_rel.get(i, j)) for (i, j), v in p.items(elements))
    # sparse comparison: explicit entries, then the baselines everywhere else
    pairs = set(p.values) | set(q_rel.values)
    if not all(q.leq(p.get(i, j), q_rel.get(i, j)) for i, j in pairs):
        return False
    if not q.leq(p.default, q_rel.default):
        return False
    if p.diagonal is not None or q_rel.diagonal is not None:
        if not q.leq(p._base(0, 0), q_rel._base(0, 0)):
            return False
    return True


def rel_eq(p: VRel, q_rel: VRel, elements: Optional[Iterable[int]] = None) -> bool:
    return leq(p, q_rel, elements) and leq(q_rel, p, elements)


def adjunction_holds(f: FiniteMap, p: VRel, q_rel: VRel) -> bool:
    """Direct image is left adjoint to reindexing: both sides must agree."""
    return leq(direct_image(f, p), q_rel) == leq(p, reindex(f, q_rel))


def diagonal(carrier: Carrier, quantale: Quantale) -> VRel:
    return VRel(quantale, carrier, {}, quantale.bottom, quantale.unit)


def join(p: VRel, q_rel: VRel) -> VRel:
    _check_carrier(p.carrier, q_rel.carrier)
    q = same_quantale(p.quantale, q_rel.quantale)
    pairs = set(p.values) | set(q_rel.values)
    values = {pair: q.join2(p.get(*pair), q_rel.get(*pair)) for pair in pairs}
    diag = None
    if p.diagonal is not None or q_rel.diagonal is not None:
        diag = q.join2(p._base(0, 0), q_rel._base(0, 0))
    return VRel(q, p.carrier, values, q.join2(p.default, q_rel.default), diag)


def compose(p: VRel, q_rel: VRel, elements: Optional[Iterable[int]] = None) -> VRel:
    """Relational composition ``(p . q)(x, y) = join_z p(x, z) (x) q(z, y)``.

    When both defaults are bottom only support elements can contribute, so no
    enumeration of the carrier is needed.
    """
    _check_carrier(p.carrier, q_rel.carrier)
    q = same_quantale(p.quantale, q_rel.quantale)
    bot = q.bottom
    if elements is None and p.default == bot and q_rel.default == bot:
        return _compose_sparse(p, q_rel)
    els = p.carrier.elements(elements)
    values = {}
    for x in els:
        row = [p.get(x, z) for z in els]
        for y in els:
            acc = bot
            for z, pxz in zip(els, row):
                acc = q.join2(acc, q.tensor(pxz, q_rel.get(z, y)))
            values[(x, y)] = acc
    default = q.tensor(p.default, q_rel.default)
    return VRel(q, p.carrier, values, default)


def _compose_sparse(p: VRel, q_rel: VRel) -> VRel:
    q = p.quantale
    out_of: dict[int, list[tuple[int, Value]]] = {}
    for (z, y), v in q_rel.values.items():
        out_of.setdefault(z, []).append((y, v))
    values: dict[Pair, Value] = {}

    def bump(key: Pair, v: Value) -> None:
        values[key] = q.join2(values.get(key, q.bottom), v)

    for (x, z), pv in p.values.items():
        for y, qv in out_of.get(z, ()):
            bump((x, y), q.tensor(pv, qv))
        if q_rel.diagonal is not None:
            bump((x, z), q.tensor(pv, q_rel.get(z, z)))
    if p.diagonal is not None:
        for (z, y), qv in q_rel.values.items():
            bump((z, y), q.tensor(p.get(z, z), qv))
    diag = None
    if p.diagonal is not None and q_rel.diagonal is not None:
        diag = q.tensor(p.diagonal, q_rel.diagonal)
    return VRel(q, p.carrier, values, q.bottom, diag)


def is_reflexive(r: VRel, elements: Optional[Iterable[int]] = None) -> bool:
    return leq(diagonal(r.carrier, r.quantale), r, elements)


def is_transitive(r: VRel, elements: Optional[Iterable[int]] = None) -> bool:
    return leq(compose(r, r, elements), r, elements)


def is_symmetric(r: VRel, elements: Optional[Iterable[int]] = None) -> bool:
    return rel_eq(r, r.swap(), elements)
