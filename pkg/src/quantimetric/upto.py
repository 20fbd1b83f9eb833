"""Up-to techniques: monotone maps on relations used to relax post-fixpoint checks.

Every :class:`Technique` carries a ``basis``: the conditions its
compatibility rests on.  An empty basis marks a technique with no soundness
argument; :func:`quantimetric.fixpoint.check_witness` refuses those unless
asked to run unsafely.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
from scipy.optimize import linprog

from . import vrel
from .errors import CapExceeded, UsageError
from .flift import DistValue, EvaluationMap, wasserstein
from .quantale import Quantale, QuantaleId, Value
from .vrel import LazyRel, VRel

CTX_ENUM_CAP = 1 << 16
CVX_CAP = 64


@dataclass(frozen=True)
class Technique:
    name: str
    fn: Callable
    basis: tuple[str, ...] = ()

    def __call__(self, d):
        return self.fn(d)


# -- closures -------------------------------------------------------------------------


def up_ref(d):
    """``d`` joined with the diagonal."""
    q = d.quantale
    if isinstance(d, VRel):
        return VRel(q, d.carrier, d.values, d.default, q.unit)
    return LazyRel(q, d.carrier, lambda i, j: q.unit if i == j else d.get(i, j))


def up_sym(d):
    if isinstance(d, VRel):
        return vrel.join(d, d.swap())
    q = d.quantale
    return LazyRel(q, d.carrier, lambda i, j: q.join2(d.get(i, j), d.get(j, i)))


def _needs_support(d, name: str) -> VRel:
    if not isinstance(d, VRel):
        raise UsageError(f"{name} needs a relation with an explicit support")
    return d


def up_trn(d, elements: Optional[Iterable[int]] = None, max_rounds: Optional[int] = None) -> VRel:
    """Least transitive relation above ``d``: iterate ``d v d.d`` until it stops growing."""
    cur = _needs_support(d, "trn")
    els = None if elements is None else list(elements)
    if max_rounds is None:
        max_rounds = max(1, len(cur.values)) ** 2
    for _ in range(max_rounds):
        nxt = vrel.join(cur, vrel.compose(cur, cur, els))
        if vrel.leq(nxt, cur, els):
            return cur
        cur = nxt
    return cur


def up_mtr(d, elements: Optional[Iterable[int]] = None) -> VRel:
    return up_trn(up_sym(up_ref(d)), elements)


def up_bhv(d, classes: Sequence[Sequence[int]]) -> VRel:
    """Join of ``d`` over pairs of behaviourally equivalent representatives.

    ``classes`` partitions (part of) the carrier; elements it does not mention
    are treated as singleton classes.
    """
    d = _needs_support(d, "bhv")
    q = d.quantale
    class_of: dict[int, int] = {}
    for k, cls in enumerate(classes):
        for x in cls:
            if not 0 <= x < d.carrier.size:
                raise UsageError(f"partition element {x} is outside the carrier")
            if x in class_of:
                raise UsageError(f"element {x} occurs in two classes")
            class_of[x] = k

    def members(x):
        return classes[class_of[x]] if x in class_of else (x,)

    values: dict = {}

    def bump(key, v):
        values[key] = q.join2(values.get(key, q.bottom), v)

    for (x0, y0), v in d.values.items():
        for x in members(x0):
            for y in members(y0):
                bump((x, y), v)
    if d.diagonal is not None:
        for cls in classes:
            for x in cls:
                for y in cls:
                    bump((x, y), d.diagonal)
    for key in list(values):
        values[key] = q.join2(values[key], d.get(*key))
    return VRel(q, d.carrier, values, d.default, d.diagonal)


def up_ctx(alg: Callable, ev_t: EvaluationMap, d, tvalues: Sequence, max_enum: int = CTX_ENUM_CAP) -> VRel:
    """Contextual closure along an algebra ``alg: T X -> X``.

    ``f(d)(x1, x2)`` is the join of the lifted ``d`` over all supplied
    ``u1, u2`` in ``T X`` with ``alg(ui) = xi``; pairs outside the image of
    ``alg`` get bottom.
    """
    q = d.quantale
    tvalues = list(tvalues)
    if len(tvalues) ** 2 > max_enum:
        raise CapExceeded(
            f"{len(tvalues) ** 2} decomposition pairs exceed the cap of {max_enum}; "
            "use up_ctx_union or up_cvx for the structured cases"
        )
    image = [alg(u) for u in tvalues]
    values: dict = {}
    for u1, x1 in zip(tvalues, image):
        for u2, x2 in zip(tvalues, image):
            v = wasserstein(ev_t, d, u1, u2)
            key = (x1, x2)
            values[key] = q.join2(values.get(key, q.bottom), v)
    return VRel(q, d.carrier, values, q.bottom)


def union_algebra(u) -> int:
    """Union of a set of subset states (bitsets)."""
    return functools.reduce(lambda a, b: a | b, u, 0)


class UnionClosure:
    """Congruence closure of ``d`` under union of subset states, queried pointwise.

    ``value(Q1, Q2)`` is the best ``r`` derivable from the rules: ``(0, 0)`` is
    free, pairs of ``d`` are axioms, and unions of derivable pairs are
    derivable at the worse of their values.  It equals the least ``r`` such
    that the pairs ``(A, B)`` of ``d`` with ``A <= Q1``, ``B <= Q2`` and value at
    least ``r`` cover ``Q1`` and ``Q2``.
    """

    def __init__(self, d: VRel, include_diagonal: bool = True):
        self.d = _needs_support(d, "ctx-union")
        q = d.quantale
        self.quantale = q
        key = (lambda v: -v) if q.id is QuantaleId.BOOL2 else (lambda v: v)
        self._sorted = sorted(((v, a, b) for (a, b), v in d.values.items()), key=lambda t: key(t[0]))
        self._key = key
        diag = q.bottom
        if include_diagonal:
            diag = q.unit
        if d.diagonal is not None:
            diag = q.join2(diag, d.diagonal)
        self._diag = None if diag == q.bottom else diag

    def value(self, q1: int, q2: int) -> Value:
        q = self.quantale
        direct = self.d.get(q1, q2)
        if q1 == 0 and q2 == 0:
            return q.top
        candidates = [t for t in self._sorted if not t[1] & ~q1 and not t[2] & ~q2]
        if self._diag is not None:
            common = q1 & q2
            singles = [(self._diag, 1 << k, 1 << k) for k in range(common.bit_length()) if common >> k & 1]
            candidates = sorted(singles + candidates, key=lambda t: self._key(t[0]))
        u1 = u2 = 0
        for v, a, b in candidates:
            u1 |= a
            u2 |= b
            if u1 == q1 and u2 == q2:
                return q.join2(v, direct)
        return direct


def up_ctx_union(d: VRel, query: tuple[int, int], include_diagonal: bool = True) -> Value:
    return UnionClosure(d, include_diagonal).value(*query)


@dataclass(frozen=True)
class CvxResult:
    value: float
    lower_confidence: bool = False


def up_cvx(d: VRel, states: Sequence[DistValue], query: tuple[DistValue, DistValue],
           cap: int = CVX_CAP) -> CvxResult:
    """Convex closure of ``d`` over distribution states, restricted to support pairs.

    Components are the explicit pairs of ``d`` (and the diagonal, if any) whose
    supports fit inside the query, plus all pairs of point masses.  The minimum
    mixture cost is found by a linear program over the mixing weights.  When
    more than ``cap`` support components qualify, only the ``cap`` cheapest are
    kept and the result is flagged: it is still a sound (larger) value.
    """
    q = d.quantale
    if q.id is not QuantaleId.UNIT_REV:
        raise UsageError("the convex closure needs the unit-rev quantale")
    delta, theta = query
    sd, st = set(delta.support()), set(theta.support())
    index = {s: k for k, s in enumerate(states)}

    comps: list[tuple[float, DistValue, DistValue]] = []
    pairs = list(d.values.items())
    if d.diagonal is not None:
        pairs += [((k, k), d.get(k, k)) for k in range(len(states))]
    for (i, j), v in pairs:
        a, b = states[i], states[j]
        if set(a.support()) <= sd and set(b.support()) <= st:
            comps.append((v, a, b))
    flagged = len(comps) > cap
    if flagged:
        comps = sorted(comps, key=lambda t: t[0])[:cap]
    for x in sorted(sd, key=repr):
        for y in sorted(st, key=repr):
            px, py = DistValue.point(x), DistValue.point(y)
            i, j = index.get(px), index.get(py)
            v = d.get(i, j) if i is not None and j is not None else q.bottom
            comps.append((v, px, py))

    xs, ys = sorted(sd, key=repr), sorted(st, key=repr)
    a_eq = np.zeros((len(xs) + len(ys), len(comps)))
    for k, (_, a, b) in enumerate(comps):
        for r, x in enumerate(xs):
            a_eq[r, k] = a.mass(x)
        for r, y in enumerate(ys):
            a_eq[len(xs) + r, k] = b.mass(y)
    b_eq = np.array([delta.mass(x) for x in xs] + [theta.mass(y) for y in ys])
    cost = np.array([v for v, _, _ in comps])
    res = linprog(cost, A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if res.status != 0:
        raise UsageError(f"convex decomposition LP failed: {res.message}")
    return CvxResult(min(1.0, max(0.0, float(res.fun))), flagged)


# -- techniques and combinators -----------------------------------------------------------

_CANONICAL = "lifting preserves reflexive relations (holds for every canonical lifting)"

IDENTITY = Technique("id", lambda d: d, ("the identity is compatible with every map",))
REF = Technique("ref", up_ref, (_CANONICAL,))
SYM = Technique("sym", up_sym, ("lifting commutes with converse (symmetric evaluation data)",))
TRN = Technique("trn", up_trn, ("lifting is lax for relational composition",))
MTR = Technique("mtr", up_mtr, REF.basis + SYM.basis + TRN.basis)
CTX_UNION = Technique(
    "ctx-union",
    lambda d: _union_lazy(d),
    ("canonical powerset lifting with the determinisation bialgebra", _CANONICAL),
)


def _union_lazy(d) -> LazyRel:
    closure = UnionClosure(d)
    return LazyRel(d.quantale, d.carrier, closure.value)


def bhv_technique(classes: Sequence[Sequence[int]]) -> Technique:
    return Technique("bhv", lambda d: up_bhv(d, classes), ("fibres of the map into the final coalgebra",))


def cvx_technique(states: Sequence[DistValue], cap: int = CVX_CAP) -> Technique:
    def fn(d):
        return LazyRel(d.quantale, d.carrier, lambda i, j: up_cvx(d, states, (states[i], states[j]), cap).value)

    return Technique("cvx", fn, ("trace-metric settings only",))


def trn_technique(elements: Optional[Iterable[int]] = None) -> Technique:
    els = None if elements is None else list(elements)
    return Technique("trn", lambda d: up_trn(d, els), TRN.basis)


def _halve(d):
    q = d.quantale
    if q.id is QuantaleId.BOOL2:
        return LazyRel(q, d.carrier, lambda i, j: q.top)
    return LazyRel(q, d.carrier, lambda i, j: d.get(i, j) / 2)


PLANTED_UNSOUND = Technique("planted-unsound", _halve, ())


def _pointwise_join(q: Quantale, rels: list):
    if all(isinstance(r, VRel) for r in rels):
        return functools.reduce(vrel.join, rels)
    return LazyRel(q, rels[0].carrier, lambda i, j: q.join(r.get(i, j) for r in rels))


def combine(techniques: Sequence[Technique], mode: str = "compose", lax_tensor: bool = False) -> Technique:
    """Combine techniques: ``compose`` applies them in the listed order,
    ``join`` takes the pointwise join, ``chain`` the relational composite of
    their outputs (only sound when the lifting is lax for composition)."""
    techniques = list(techniques)
    if not techniques:
        return IDENTITY
    name = ",".join(t.name for t in techniques)
    basis: tuple[str, ...] = ()
    if all(t.basis for t in techniques):
        basis = tuple(dict.fromkeys(b for t in techniques for b in t.basis))
    if mode == "compose":
        def fn(d):
            for t in techniques:
                d = t(d)
            return d
    elif mode == "join":
        def fn(d):
            return _pointwise_join(d.quantale, [t(d) for t in techniques])
    elif mode == "chain":
        if not lax_tensor:
            raise UsageError("chain needs a lifting declared lax for relational composition")
        basis = basis + ("lifting is lax for relational composition",) if basis else ()

        def fn(d):
            rels = [_needs_support(t(d), "chain") for t in techniques]
            return functools.reduce(vrel.compose, rels)
    else:
        raise UsageError(f"unknown combination mode {mode!r}")
    return Technique(f"{mode}({name})", fn, basis)


REGISTRY = {"id": IDENTITY, "ref": REF, "sym": SYM, "trn": TRN, "mtr": MTR, "ctx-union": CTX_UNION}


def technique_from_names(names: Sequence[str], classes: Optional[Sequence[Sequence[int]]] = None,
                         states: Optional[Sequence[DistValue]] = None, unsafe: bool = False) -> Technique:
    """Compose named techniques in the listed order (the ``--upto`` flag)."""
    chosen = []
    for name in names:
        if name == "bhv":
            if classes is None:
                raise UsageError("bhv needs a behavioural equivalence partition")
            chosen.append(bhv_technique(classes))
        elif name == "cvx":
            if states is None:
                raise UsageError("cvx needs distribution states")
            chosen.append(cvx_technique(states))
        elif name == "planted-unsound" and unsafe:
            chosen.append(PLANTED_UNSOUND)
        elif name in REGISTRY:
            chosen.append(REGISTRY[name])
        else:
            known = ", ".join(sorted(REGISTRY) + ["bhv", "cvx"])
            raise UsageError(f"unknown up-to technique {name!r} (known: {known})")
    if len(chosen) == 1:
        return chosen[0]
    return combine(chosen, "compose")
