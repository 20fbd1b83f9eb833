"""Functor values, evaluation maps and the liftings they induce.

Three functors are supported: finite powerset, the machine functor
``2 x X^A`` and finitely supported distributions.  An evaluation map
``ev: F(V) -> V`` determines a predicate lifting ``p |-> ev . F(p)`` and,
through couplings, a relation lifting (:func:`wasserstein`).  Functor values
are generic in their elements, so the same classes hold elements of a state
carrier (``int``) and elements of the quantale itself.
"""

from __future__ import annotations

import enum
import itertools
import random
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Iterable, Mapping, Optional, Union

from . import transport
from .errors import CapExceeded, UsageError
from .quantale import Quantale, QuantaleId, Value
from .vrel import VPred

MAX_ENUM = 12


class FunctorKind(enum.Enum):
    POW = "pow"
    MACHINE = "machine"
    DIST = "dist"


@dataclass(frozen=True)
class FunctorId:
    kind: FunctorKind
    letters: int = 0

    def __post_init__(self):
        if self.kind is FunctorKind.MACHINE and self.letters < 1:
            raise UsageError("machine functor needs a non-empty alphabet")


POW = FunctorId(FunctorKind.POW)
DIST = FunctorId(FunctorKind.DIST)


def machine(letters: int) -> FunctorId:
    return FunctorId(FunctorKind.MACHINE, letters)


# -- functor values ---------------------------------------------------------------


@dataclass(frozen=True)
class PowValue:
    elements: frozenset

    def __init__(self, elements: Iterable = ()):
        object.__setattr__(self, "elements", frozenset(elements))

    def __iter__(self):
        return iter(self.elements)

    def __len__(self):
        return len(self.elements)


@dataclass(frozen=True)
class MachineValue:
    accept: bool
    succ: tuple

    def __init__(self, accept: bool, succ: Iterable):
        object.__setattr__(self, "accept", bool(accept))
        object.__setattr__(self, "succ", tuple(succ))


@dataclass(frozen=True)
class DistValue:
    """Finitely supported probability distribution.

    Masses below ``eps`` are dropped and the rest renormalised; the input must
    already sum to 1 within ``tol``.
    """

    masses: tuple

    def __init__(self, masses: Union[Mapping[Hashable, float], Iterable[tuple[Hashable, float]]],
                 eps: float = 1e-9, tol: float = 1e-6):
        items = list(masses.items()) if isinstance(masses, Mapping) else list(masses)
        merged: dict = {}
        for x, m in items:
            if m < 0:
                raise UsageError("negative probability mass")
            merged[x] = merged.get(x, 0.0) + m
        total = sum(merged.values())
        if abs(total - 1.0) > tol:
            raise UsageError(f"distribution is not normalised (total mass {total})")
        kept = {x: m for x, m in merged.items() if m >= eps}
        kept_total = sum(kept.values())
        object.__setattr__(
            self, "masses", tuple(sorted(((x, m / kept_total) for x, m in kept.items()), key=lambda kv: repr(kv[0])))
        )

    @classmethod
    def point(cls, x: Hashable) -> "DistValue":
        return cls({x: 1.0})

    def support(self) -> list:
        return [x for x, _ in self.masses]

    def mass(self, x: Hashable) -> float:
        return dict(self.masses).get(x, 0.0)

    def items(self):
        return iter(self.masses)


FunctorValue = Union[PowValue, MachineValue, DistValue]


def functor_of(u: FunctorValue) -> FunctorKind:
    if isinstance(u, PowValue):
        return FunctorKind.POW
    if isinstance(u, MachineValue):
        return FunctorKind.MACHINE
    if isinstance(u, DistValue):
        return FunctorKind.DIST
    raise UsageError(f"not a functor value: {u!r}")


def fmap(f: Callable[[Any], Any], u: FunctorValue) -> FunctorValue:
    """Apply ``F(f)``; distributions merge the masses of collided points."""
    if isinstance(u, PowValue):
        return PowValue(f(x) for x in u)
    if isinstance(u, MachineValue):
        return MachineValue(u.accept, (f(x) for x in u.succ))
    if isinstance(u, DistValue):
        out: dict = {}
        for x, m in u.items():
            y = f(x)
            out[y] = out.get(y, 0.0) + m
        return DistValue(out)
    raise UsageError(f"not a functor value: {u!r}")


# -- evaluation maps -----------------------------------------------------------------


class EvalKind(enum.Enum):
    POW_CANONICAL = "pow-canonical"
    BOOL_DIAMOND = "bool-diamond"
    DIST_EXPECTATION = "dist-expectation"
    DIST_CANONICAL = "dist-canonical"
    MACHINE_DISCOUNT = "machine-discount"
    MACHINE_CANONICAL = "machine-canonical"


_FUNCTOR_OF_KIND = {
    EvalKind.POW_CANONICAL: FunctorKind.POW,
    EvalKind.BOOL_DIAMOND: FunctorKind.POW,
    EvalKind.DIST_EXPECTATION: FunctorKind.DIST,
    EvalKind.DIST_CANONICAL: FunctorKind.DIST,
    EvalKind.MACHINE_DISCOUNT: FunctorKind.MACHINE,
    EvalKind.MACHINE_CANONICAL: FunctorKind.MACHINE,
}


@dataclass(frozen=True)
class EvaluationMap:
    kind: EvalKind
    quantale: Quantale
    c: Optional[float] = None
    letters: int = 0

    def __post_init__(self):
        qid = self.quantale.id
        if self.kind in (EvalKind.DIST_EXPECTATION, EvalKind.DIST_CANONICAL) and qid is not QuantaleId.UNIT_REV:
            raise UsageError(f"{self.kind.value} needs the unit-rev quantale")
        if self.kind is EvalKind.BOOL_DIAMOND and qid is not QuantaleId.BOOL2:
            raise UsageError("bool-diamond needs the bool2 quantale")
        if self.kind is EvalKind.MACHINE_DISCOUNT:
            if qid is QuantaleId.BOOL2:
                raise UsageError("machine-discount needs a real quantale")
            if self.c is None or not 0.0 < self.c < 1.0:
                raise UsageError("machine-discount needs a constant 0 < c < 1")

    @property
    def functor(self) -> FunctorId:
        kind = _FUNCTOR_OF_KIND[self.kind]
        if kind is FunctorKind.MACHINE:
            return FunctorId(kind, self.letters or 1)
        return FunctorId(kind)

    # convenience constructors
    @classmethod
    def pow_canonical(cls, quantale: Quantale) -> "EvaluationMap":
        return cls(EvalKind.POW_CANONICAL, quantale)

    @classmethod
    def machine_discount(cls, quantale: Quantale, c: float, letters: int = 0) -> "EvaluationMap":
        return cls(EvalKind.MACHINE_DISCOUNT, quantale, c, letters)

    @classmethod
    def machine_canonical(cls, quantale: Quantale, letters: int = 0) -> "EvaluationMap":
        return cls(EvalKind.MACHINE_CANONICAL, quantale, None, letters)


def evaluate(ev: EvaluationMap, u: FunctorValue) -> Value:
    """Apply ``ev`` to an element of ``F(V)``."""
    q = ev.quantale
    if functor_of(u) is not _FUNCTOR_OF_KIND[ev.kind]:
        raise UsageError(f"{ev.kind.value} cannot evaluate a {functor_of(u).value} value")
    kind = ev.kind
    if kind is EvalKind.POW_CANONICAL:
        return q.meet(u)
    if kind is EvalKind.BOOL_DIAMOND:
        return q.join(u)
    if kind is EvalKind.DIST_EXPECTATION:
        return min(1.0, sum(r * m for r, m in u.items()))
    if kind is EvalKind.DIST_CANONICAL:
        return q.meet(u.support())
    if kind is EvalKind.MACHINE_DISCOUNT:
        # the accept bit does not enter the discounted evaluation
        return ev.c * max(u.succ) if u.succ else 0.0
    if kind is EvalKind.MACHINE_CANONICAL:
        return q.meet(u.succ)
    raise UsageError(f"unsupported evaluation map {kind}")


def canonical_eval(functor: FunctorId, quantale: Quantale, u: FunctorValue) -> Value:
    """``join { r | u in F(up r) }`` specialised per functor.

    In all three cases ``u`` lies in ``F(up r)`` exactly when every element of
    ``V`` occurring in ``u`` is above ``r``, so the join is the meet of those
    elements (the machine accept bit is unconstrained).
    """
    if functor_of(u) is not functor.kind:
        raise UsageError("functor value does not match the functor")
    if isinstance(u, PowValue):
        return quantale.meet(u)
    if isinstance(u, MachineValue):
        return quantale.meet(u.succ)
    return quantale.meet(u.support())


def canonical_map(functor: FunctorId, quantale: Quantale) -> EvaluationMap:
    if functor.kind is FunctorKind.POW:
        return EvaluationMap.pow_canonical(quantale)
    if functor.kind is FunctorKind.MACHINE:
        return EvaluationMap.machine_canonical(quantale, functor.letters)
    return EvaluationMap(EvalKind.DIST_CANONICAL, quantale)


def lift_pred(ev: EvaluationMap, p: Union[VPred, Callable[[Any], Value]], u: FunctorValue) -> Value:
    """Predicate lifting ``ev . F(p)`` evaluated at ``u``."""
    return evaluate(ev, fmap(p, u))


def composite_eval(outer: EvaluationMap, inner: EvaluationMap) -> Callable[[FunctorValue], Value]:
    """Evaluation map ``outer . G(inner)`` of the composite lifting ``G^ . F^``."""
    return lambda u: evaluate(outer, fmap(lambda w: evaluate(inner, w), u))


# -- relation liftings ---------------------------------------------------------------


def pow_couplings(t1: PowValue, t2: PowValue, max_enum: int = MAX_ENUM):
    """All ``Y <= t1 x t2`` whose projections are exactly ``t1`` and ``t2``."""
    a, b = set(t1), set(t2)
    cells = list(itertools.product(sorted(a), sorted(b)))
    if len(cells) > max_enum:
        raise CapExceeded(f"coupling enumeration over {len(cells)} pairs exceeds the cap of {max_enum}")
    for mask in range(1 << len(cells)):
        chosen = [cells[k] for k in range(len(cells)) if mask >> k & 1]
        if {x for x, _ in chosen} == a and {y for _, y in chosen} == b:
            yield frozenset(chosen)


def _pow_canonical_closed(q: Quantale, r, t1: PowValue, t2: PowValue) -> Value:
    left = q.meet(q.join(r.get(x, y) for y in t2) for x in t1)
    right = q.meet(q.join(r.get(x, y) for x in t1) for y in t2)
    return q.meet2(left, right)


def hausdorff(r, x1: PowValue, x2: PowValue) -> Value:
    """Hausdorff lifting of a real-valued relation, computed in real arithmetic."""
    q = r.quantale
    if not q.is_real:
        raise UsageError("the Hausdorff lifting needs a real-valued quantale")
    if not x1 and not x2:
        return 0.0
    if not x1 or not x2:
        return q.bottom
    forward = max(min(r.get(a, b) for b in x2) for a in x1)
    backward = max(min(r.get(a, b) for a in x1) for b in x2)
    return max(forward, backward)


def wasserstein(ev: EvaluationMap, r, t1: FunctorValue, t2: FunctorValue,
                max_enum: int = MAX_ENUM, max_pivots: int = transport.MAX_PIVOTS) -> Value:
    """Join over couplings ``t`` of ``t1, t2`` of the lifted predicate ``ev . F(r)`` at ``t``.

    ``r`` is any relation exposing ``get(i, j)`` and ``quantale``.
    """
    q = ev.quantale
    if r.quantale.id is not q.id:
        raise UsageError("relation and evaluation map live in different quantales")
    kind = _FUNCTOR_OF_KIND[ev.kind]
    if functor_of(t1) is not kind or functor_of(t2) is not kind:
        raise UsageError(f"{ev.kind.value} cannot lift {functor_of(t1).value}/{functor_of(t2).value} values")

    if kind is FunctorKind.MACHINE:
        if len(t1.succ) != len(t2.succ):
            raise UsageError("machine values over different alphabets")
        if t1.accept != t2.accept:
            return q.bottom  # no coupling exists
        return evaluate(ev, MachineValue(t1.accept, (r.get(x, y) for x, y in zip(t1.succ, t2.succ))))

    if kind is FunctorKind.POW:
        if ev.kind is EvalKind.POW_CANONICAL:
            return _pow_canonical_closed(q, r, t1, t2)
        return q.join(evaluate(ev, PowValue(r.get(x, y) for x, y in cpl)) for cpl in pow_couplings(t1, t2, max_enum))

    s1, s2 = t1.support(), t2.support()
    cost = [[r.get(x, y) for y in s2] for x in s1]
    m1 = [t1.mass(x) for x in s1]
    m2 = [t2.mass(y) for y in s2]
    if ev.kind is EvalKind.DIST_CANONICAL:
        return transport.bottleneck(m1, m2, cost)
    total, _ = transport.transport_min_cost(m1, m2, cost, max_pivots)
    return min(1.0, float(total))


# -- well-behavedness checks -------------------------------------------------------------


@dataclass
class WellBehavedReport:
    checked: int = 0
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def record(self, ok: bool, message: Callable[[], str]) -> None:
        self.checked += 1
        if not ok:
            self.violations.append(message())


class _DenseRel:
    """Minimal relation view over a nested list (used by the samplers)."""

    def __init__(self, quantale: Quantale, matrix):
        self.quantale = quantale
        self.matrix = matrix

    def get(self, i, j):
        return self.matrix[i][j]


def _functor_values(functor: FunctorId, size: int, rng: random.Random, count: int) -> list[FunctorValue]:
    if functor.kind is FunctorKind.POW:
        return [PowValue(x for x in range(size) if mask >> x & 1) for mask in range(1 << size)]
    if functor.kind is FunctorKind.MACHINE:
        out = [MachineValue(b, succ) for b in (False, True)
               for succ in itertools.product(range(size), repeat=functor.letters)]
        if len(out) > count:
            out = rng.sample(out, count)
        return out
    dists = []
    for _ in range(count):
        supp = rng.sample(range(size), rng.randint(1, size))
        weights = [rng.randint(1, 6) for _ in supp]
        total = sum(weights)
        dists.append(DistValue({x: w / total for x, w in zip(supp, weights)}))
    return dists


def _random_value(q: Quantale, rng: random.Random) -> Value:
    if q.id is QuantaleId.BOOL2:
        return rng.randint(0, 1)
    v = round(rng.randint(0, 20) * 0.05, 10)
    if q.id is QuantaleId.EXT_REV and rng.random() < 0.1:
        return q.bottom
    return v if q.id is QuantaleId.UNIT_REV else v * 3


def _metric_closure(q: Quantale, m: list[list[Value]]) -> list[list[Value]]:
    n = len(m)
    d = [row[:] for row in m]
    for x in range(n):
        d[x][x] = q.join2(d[x][x], q.unit)
    for z in range(n):
        for x in range(n):
            for y in range(n):
                d[x][y] = q.join2(d[x][y], q.tensor(d[x][z], d[z][y]))
    return d


def _all_relations(q: Quantale, size: int):
    for bits in itertools.product((0, 1), repeat=size * size):
        yield [list(bits[k * size:(k + 1) * size]) for k in range(size)]


def check_wellbehaved(ev: EvaluationMap, sample_count: int = 500, rng: Optional[random.Random] = None,
                      max_size: int = 4, exhaustive: bool = False, letters: int = 2) -> WellBehavedReport:
    """Sample the sufficient conditions for the lifting to restrict to V-Cat.

    Checks (i) ``lift(const unit) >= unit``, (ii) ``lift(p (x) q) >= lift(p) (x) lift(q)``
    and (iii) that the relation lifting preserves reflexive, transitive and
    symmetric relations.  With ``exhaustive`` (bool2 only) every predicate and
    relation on carriers up to ``max_size`` is visited instead of sampling.
    """
    q = ev.quantale
    rng = rng or random.Random(0)
    functor = ev.functor if ev.functor.kind is not FunctorKind.MACHINE else machine(ev.letters or letters)
    report = WellBehavedReport()
    if exhaustive and q.id is not QuantaleId.BOOL2:
        raise UsageError("exhaustive checking is only available over bool2")

    for size in range(1, max_size + 1):
        fvals = _functor_values(functor, size, rng, 24)
        # (i) and (ii)
        if exhaustive:
            preds = [list(bits) for bits in itertools.product((0, 1), repeat=size)]
            pred_pairs = list(itertools.product(preds, preds))
        else:
            pred_pairs = [([_random_value(q, rng) for _ in range(size)], [_random_value(q, rng) for _ in range(size)])
                          for _ in range(max(1, sample_count // max_size))]
        for u in fvals:
            lifted = lift_pred(ev, lambda x: q.unit, u)
            report.record(q.leq(q.unit, lifted), lambda: f"(i) lift(unit)({u}) = {lifted}")
        for p, p2 in pred_pairs:
            for u in fvals:
                lhs = lift_pred(ev, lambda x: q.tensor(p[x], p2[x]), u)
                rhs = q.tensor(lift_pred(ev, lambda x: p[x], u), lift_pred(ev, lambda x: p2[x], u))
                report.record(q.leq(rhs, lhs), lambda: f"(ii) p={p} q={p2} at {u}: {lhs} < {rhs}")

        # (iii): each candidate is (matrix, is a V-Cat object, is symmetric)
        candidates = []
        if exhaustive:
            for raw in _all_relations(q, size):
                vcat = (all(raw[i][i] for i in range(size))
                        and all(raw[i][j] or not (raw[i][k] and raw[k][j])
                                for i in range(size) for j in range(size) for k in range(size)))
                symmetric = all(raw[i][j] == raw[j][i] for i in range(size) for j in range(size))
                if vcat or symmetric:
                    candidates.append((raw, vcat, symmetric))
        else:
            for _ in range(max(1, sample_count // max_size)):
                raw = [[_random_value(q, rng) for _ in range(size)] for _ in range(size)]
                closed = _metric_closure(q, raw)
                sym = [[q.join2(closed[i][j], closed[j][i]) for j in range(size)] for i in range(size)]
                candidates.append((closed, True, False))
                candidates.append((_metric_closure(q, sym), True, True))
        tvals = fvals if len(fvals) <= 16 else rng.sample(fvals, 16)
        idx = range(len(tvals))
        for raw, vcat, symmetric in candidates:
            rel = _DenseRel(q, raw)
            w = {(a, b): wasserstein(ev, rel, tvals[a], tvals[b]) for a in idx for b in idx}
            if vcat:
                for a in idx:
                    report.record(q.leq(q.unit, w[(a, a)]),
                                  lambda: f"(iii) reflexivity lost at {tvals[a]}: {w[(a, a)]} for {raw}")
                for a, b, c in itertools.product(idx, repeat=3):
                    report.record(q.leq(q.tensor(w[(a, b)], w[(b, c)]), w[(a, c)]),
                                  lambda: f"(iii) transitivity lost at {tvals[a]}, {tvals[b]}, {tvals[c]} for {raw}")
            if symmetric:
                for a, b in itertools.product(idx, repeat=2):
                    report.record(q.eq(w[(a, b)], w[(b, a)]),
                                  lambda: f"(iii) symmetry lost at {tvals[a]}, {tvals[b]} for {raw}")
    return report


def check_nat_lifting(ev_f: Union[EvaluationMap, Callable], ev_g: Union[EvaluationMap, Callable],
                      zeta: Callable[[Any], Any], samples: Iterable[Any], quantale: Quantale) -> bool:
    """True iff ``ev_f(u) <= ev_g(zeta(u))`` for every sampled ``u`` in ``F(V)``."""
    f = ev_f if callable(ev_f) and not isinstance(ev_f, EvaluationMap) else (lambda u: evaluate(ev_f, u))
    g = ev_g if callable(ev_g) and not isinstance(ev_g, EvaluationMap) else (lambda u: evaluate(ev_g, u))
    return all(quantale.leq(f(u), g(zeta(u))) for u in samples)
