"""The one-step map ``b`` of a coalgebra, its greatest fixpoint, and witness checking."""

from __future__ import annotations

import itertools
import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Optional, Sequence, Union

from .errors import CapExceeded, UsageError
from .flift import (
    DistValue, EvaluationMap, FunctorKind, MachineValue, PowValue, wasserstein, MAX_ENUM,
)
from .quantale import Quantale, Value
from .vrel import Carrier, Pair, VRel
from . import transport

DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITER = 10**5
PAIR_CAP = 200_000


@dataclass
class MonotoneMap:
    """``b(d)(x, y) = lift(d)(step(x), step(y))`` for a coalgebra ``step``."""

    coalg: object
    ev: EvaluationMap
    max_enum: int = MAX_ENUM
    max_pivots: int = transport.MAX_PIVOTS

    @property
    def quantale(self) -> Quantale:
        return self.ev.quantale

    @property
    def carrier(self) -> Carrier:
        return self.coalg.carrier

    def at(self, d, x, y) -> Value:
        return wasserstein(self.ev, d, self.coalg.step(x), self.coalg.step(y), self.max_enum, self.max_pivots)

    def apply(self, d, pairs: Iterable[Pair]) -> VRel:
        """``b(d)`` on ``pairs``, bottom elsewhere."""
        return VRel(self.quantale, self.carrier, {p: self.at(d, *p) for p in pairs})

    def successors(self, x, y) -> list[Pair]:
        """Pairs whose ``d``-value can influence ``b(d)(x, y)``."""
        return successor_pairs(self.coalg.step(x), self.coalg.step(y))


def successor_pairs(t1, t2) -> list[Pair]:
    if isinstance(t1, MachineValue):
        return list(zip(t1.succ, t2.succ))
    if isinstance(t1, PowValue):
        return list(itertools.product(sorted(t1), sorted(t2)))
    if isinstance(t1, DistValue):
        return list(itertools.product(t1.support(), t2.support()))
    raise UsageError(f"not a functor value: {t1!r}")


def build_b(coalg, ev: EvaluationMap, max_enum: int = MAX_ENUM, max_pivots: int = transport.MAX_PIVOTS) -> MonotoneMap:
    f1, f2 = coalg.functor, ev.functor
    if f1.kind is not f2.kind:
        raise UsageError(f"functor mismatch: coalgebra is {f1.kind.value}, evaluation map is {f2.kind.value}")
    if f1.kind is FunctorKind.MACHINE and ev.letters and ev.letters != f1.letters:
        raise UsageError(f"functor mismatch: {f1.letters} letters vs {ev.letters}")
    return MonotoneMap(coalg, ev, max_enum, max_pivots)


def reachable_pairs(b: MonotoneMap, starts: Iterable[Pair], cap: int = PAIR_CAP) -> list[Pair]:
    """All pairs reachable from ``starts`` through ``b.successors``, sorted."""
    seen = set(starts)
    stack = list(seen)
    while stack:
        pair = stack.pop()
        for nxt in b.successors(*pair):
            if nxt not in seen:
                if len(seen) >= cap:
                    raise CapExceeded(f"more than {cap} reachable pairs; try check-witness with an up-to technique")
                seen.add(nxt)
                stack.append(nxt)
    return sorted(seen)


@dataclass
class GfpResult:
    rel: VRel
    iterations: int
    converged: bool
    pairs: list[Pair]

    def __call__(self, x, y) -> Value:
        return self.rel.get(x, y)


def _gap(u: Value, v: Value) -> float:
    if u == v:
        return 0.0
    if math.isinf(u) or math.isinf(v):
        return math.inf
    return abs(u - v)


def gfp(b: MonotoneMap, pairs: Optional[Sequence[Pair]], tol: float = DEFAULT_TOL,
        max_iter: int = DEFAULT_MAX_ITER) -> GfpResult:
    """Kleene iteration from the top relation on an enumerated, successor-closed pair set."""
    if pairs is None:
        raise UsageError("gfp needs an explicit enumeration of pairs")
    if tol <= 0:
        raise UsageError("tol must be positive")
    q = b.quantale
    pairs = list(pairs)
    cur = {p: q.top for p in pairs}
    d = VRel(q, b.carrier, {}, q.top)
    for k in range(1, max_iter + 1):
        nxt = {p: b.at(d, *p) for p in pairs}
        change = max((_gap(cur[p], nxt[p]) for p in pairs), default=0.0)
        cur = nxt
        d = VRel(q, b.carrier, cur, q.top)
        if change < tol:
            return GfpResult(d, k, True, pairs)
    return GfpResult(d, max_iter, False, pairs)


# -- witnesses ------------------------------------------------------------------------


@dataclass
class Witness:
    """A sparse relation over subset states plus the claim it is meant to certify."""

    rel: VRel
    left: int
    right: int
    bound: Value
    c: Optional[float] = None

    def __post_init__(self):
        q = self.rel.quantale
        if self.rel.default != q.bottom or self.rel.diagonal is not None:
            raise UsageError("a witness relation must have the bottom default")
        self.bound = q.coerce(self.bound)

    @property
    def quantale(self) -> Quantale:
        return self.rel.quantale

    def to_json(self, nfa) -> dict:
        q = self.quantale
        return {
            "quantale": q.name,
            "c": self.c,
            "claim": {"left": nfa.members(self.left), "right": nfa.members(self.right),
                      "bound": _json_value(self.bound)},
            "entries": [[nfa.members(x), nfa.members(y), _json_value(v)]
                        for (x, y), v in sorted(self.rel.values.items())],
            "default": _json_value(self.rel.default),
        }

    @classmethod
    def from_json(cls, data: Mapping, nfa, quantale: Optional[Quantale] = None) -> "Witness":
        try:
            q = quantale or Quantale.from_name(data["quantale"])
            carrier = Carrier(1 << nfa.size)
            entries = {}
            for left, right, v in data["entries"]:
                entries[(nfa.subset(left), nfa.subset(right))] = v
            rel = VRel(q, carrier, entries, data.get("default", q.bottom))
            claim = data["claim"]
            return cls(rel, nfa.subset(claim["left"]), nfa.subset(claim["right"]), claim["bound"], data.get("c"))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, UsageError):
                raise
            raise UsageError(f"malformed witness: {exc!r}") from None


def _json_value(v):
    return "inf" if v == math.inf else v


def load_witness(path: Union[str, Path], nfa, quantale: Optional[Quantale] = None) -> Witness:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read witness {path}: {exc}") from None
    return Witness.from_json(data, nfa, quantale)


@dataclass
class Verdict:
    certified: bool
    pairs_examined: int
    claim_value: Value
    bound: Value
    pair: Optional[Pair] = None
    lhs: Optional[Value] = None
    rhs: Optional[Value] = None
    successor: Optional[Pair] = None
    reason: str = ""

    def to_json(self, label: Callable = str) -> dict:
        out = {"certified": self.certified, "pairs_examined": self.pairs_examined,
               "claim_value": _json_value(self.claim_value), "bound": _json_value(self.bound)}
        if not self.certified:
            out["reason"] = self.reason
            if self.pair is not None:
                out["pair"] = [label(self.pair[0]), label(self.pair[1])]
                out["lhs"] = _json_value(self.lhs)
                out["rhs"] = _json_value(self.rhs)
            if self.successor is not None:
                out["successor"] = [label(self.successor[0]), label(self.successor[1])]
        return out


def check_witness(witness: Witness, b: MonotoneMap, technique=None, unsafe: bool = False) -> Verdict:
    """Check ``d <= b(f(d))`` on the support of ``d`` and one step beyond the claim.

    Off the support ``d`` is bottom, so the inequality holds there trivially;
    the frontier pairs are still evaluated so a verdict always covers the
    claim's immediate successors.
    """
    q = b.quantale
    if witness.quantale.id is not q.id:
        raise UsageError("witness and evaluation map live in different quantales")
    if technique is not None and not technique.basis and not unsafe:
        raise UsageError(f"technique {technique.name!r} has no compatibility basis; pass unsafe to use it anyway")
    d = witness.rel
    fd = technique(d) if technique is not None else d
    claim = (witness.left, witness.right)
    claim_value = d.get(*claim)

    order = sorted(d.values)
    in_support = set(order)
    order += [p for p in dict.fromkeys(b.successors(*claim)) if p not in in_support]
    if claim not in in_support:
        order.append(claim)

    examined = 0
    for pair in order:
        lhs = d.get(*pair)
        rhs = b.at(fd, *pair)
        examined += 1
        if not q.leq(lhs, rhs):
            return Verdict(False, examined, claim_value, witness.bound, pair, lhs, rhs,
                           _culprit(q, fd, b.successors(*pair)), "post-fixpoint check failed")
    if not q.leq(witness.bound, claim_value):
        return Verdict(False, examined, claim_value, witness.bound, claim, claim_value, witness.bound,
                       None, "witness value at the claim pair does not reach the claimed bound")
    return Verdict(True, examined, claim_value, witness.bound)


def _culprit(q: Quantale, fd, succ: Sequence[Pair]) -> Optional[Pair]:
    """The successor pair with the worst (quantale-least) ``f(d)`` value."""
    worst = None
    for pair in succ:
        v = fd.get(*pair)
        if worst is None or q.lt(v, worst[0]):
            worst = (v, pair)
    return worst[1] if worst else None


# -- compatibility probe --------------------------------------------------------------------


@dataclass
class ProbeReport:
    samples: int = 0
    checked: int = 0
    counterexamples: list = field(default_factory=list)

    @property
    def compatible(self) -> bool:
        return not self.counterexamples


def random_relation(q: Quantale, carrier: Carrier, pairs: Sequence[Pair], rng: random.Random,
                    density: float = 0.5) -> VRel:
    values = {}
    for p in pairs:
        if rng.random() < density:
            if q.is_real:
                hi = 1.0 if q.bottom == 1.0 else 3.0
                values[p] = round(rng.uniform(0.0, hi) * 20) / 20
            else:
                values[p] = 1
    return VRel(q, carrier, values)


def compatibility_probe(b: MonotoneMap, f, pairs: Sequence[Pair], samples: int = 200,
                        rng: Optional[random.Random] = None, max_report: int = 5,
                        sampler: Optional[Callable[[random.Random], VRel]] = None) -> ProbeReport:
    """Sample ``d`` and test ``f(b(d)) <= b(f(d))`` on ``pairs``.

    ``b(d)`` is materialised only on ``pairs`` (bottom elsewhere), which can
    only lower the left-hand side for monotone ``f``.
    """
    rng = rng or random.Random(0)
    q = b.quantale
    report = ProbeReport()
    for _ in range(samples):
        d = sampler(rng) if sampler else random_relation(q, b.carrier, pairs, rng)
        lhs_rel = f(b.apply(d, pairs))
        fd = f(d)
        report.samples += 1
        for pair in pairs:
            lhs, rhs = lhs_rel.get(*pair), b.at(fd, *pair)
            report.checked += 1
            if not q.leq(lhs, rhs):
                if len(report.counterexamples) < max_report:
                    report.counterexamples.append((d, pair, lhs, rhs))
                else:
                    return report
                break
    return report
