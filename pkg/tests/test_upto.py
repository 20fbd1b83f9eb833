import itertools
import random
import time

import pytest

from quantimetric import fixpoint, upto, vrel
from quantimetric.errors import CapExceeded, UsageError
from quantimetric.flift import DistValue, EvaluationMap, PowValue
from quantimetric.quantale import BOOL2, UNIT_REV
from quantimetric.systems import determinize, two_chain_witness, two_chain_nfa, lang_equiv_partition, random_nfa
from quantimetric.vrel import Carrier, VRel
from refimpl import union_closure

GRID = [0.0, 0.1, 0.2, 0.25, 0.5, 0.75, 1.0]


def sample_rel(rng, n, density=0.4, q=UNIT_REV):
    values = {}
    for x in range(n):
        for y in range(n):
            if rng.random() < density:
                values[(x, y)] = rng.randint(0, 1) if q is BOOL2 else rng.choice(GRID)
    return VRel(q, Carrier(n), values)


def below_everywhere(q, lo, hi, n):
    return all(q.leq(lo.get(x, y), hi.get(x, y)) for x in range(n) for y in range(n))


def test_trn_examples():
    chain = VRel(BOOL2, Carrier(3), {(0, 1): 1, (1, 2): 1})
    assert set(upto.up_trn(chain).values) == {(0, 1), (1, 2), (0, 2)}
    d = VRel(UNIT_REV, Carrier(3), {(0, 1): 0.2, (1, 2): 0.3})
    assert upto.up_trn(d)(0, 2) == pytest.approx(0.5)


def test_mtr_fixes_pseudometrics():
    m = VRel.from_dense(UNIT_REV, [[0, 0.2, 0.5], [0.2, 0, 0.3], [0.5, 0.3, 0]])
    assert vrel.rel_eq(upto.up_mtr(m), m, elements=range(3))
    combined = upto.combine([upto.REF, upto.SYM, upto.TRN], "compose")
    rng = random.Random(2)
    for _ in range(20):
        d = sample_rel(rng, 4)
        assert vrel.rel_eq(combined(d), upto.up_mtr(d), elements=range(4))


def test_trn_needs_support():
    lazy = upto.CTX_UNION(VRel(UNIT_REV, Carrier(4), {(1, 2): 0.5}))
    with pytest.raises(UsageError):
        upto.up_trn(lazy)


def test_bhv_examples():
    d = VRel(UNIT_REV, Carrier(3), {(1, 2): 0.3})
    assert upto.up_bhv(d, [[0, 1]])(0, 2) == 0.3
    assert vrel.rel_eq(upto.up_bhv(d, [[0], [1], [2]]), d)
    bottom = VRel(UNIT_REV, Carrier(3))
    assert upto.up_bhv(bottom, [[0, 1, 2]]).values == {}
    with pytest.raises(UsageError):
        upto.up_bhv(d, [[0, 5]])
    with pytest.raises(UsageError):
        upto.up_bhv(d, [[0, 1], [1]])


def test_bhv_with_language_classes():
    nfa = two_chain_nfa(2)
    det = determinize(nfa)
    x1, y1, y0 = nfa.subset(["x1"]), nfa.subset(["y1"]), nfa.subset(["y0"])
    classes = lang_equiv_partition(det, [x1, y1, y0])
    d = VRel(UNIT_REV, det.carrier, {(y1, y0): 0.25})
    assert upto.up_bhv(d, classes)(x1, y0) == 0.25


def test_ctx_singleton_algebra_is_extensive():
    rng = random.Random(4)
    ev = EvaluationMap.pow_canonical(UNIT_REV)
    singles = [PowValue([x]) for x in range(4)]
    for _ in range(10):
        d = sample_rel(rng, 4)
        out = upto.up_ctx(lambda u: next(iter(u)), ev, d, singles)
        assert vrel.rel_eq(out, d, elements=range(4))


def test_ctx_enumeration_cap():
    ev = EvaluationMap.pow_canonical(UNIT_REV)
    tvalues = [PowValue(s) for r in range(3) for s in itertools.combinations(range(4), r)]
    with pytest.raises(CapExceeded):
        upto.up_ctx(upto.union_algebra, ev, VRel(UNIT_REV, Carrier(16)), tvalues, max_enum=10)


def all_sets(n):
    return [PowValue(x for x in range(n) if mask >> x & 1) for mask in range(1 << n)]


def test_bool2_union_context_is_congruence_closure():
    # subset states of a 2-state automaton: 0..3; decompositions are sets of them
    rng = random.Random(6)
    ev = EvaluationMap.pow_canonical(BOOL2)
    tvalues = all_sets(4)
    for _ in range(15):
        d = sample_rel(rng, 4, 0.25, BOOL2)
        got = upto.up_ctx(upto.union_algebra, ev, d, tvalues)
        assert {p for p, v in got.items() if v == 1} == union_closure(d.values)


def test_ctx_union_matches_generic_context_on_three_states():
    # 8 subset states, all 256 decompositions on each side
    rng = random.Random(8)
    ev = EvaluationMap.pow_canonical(UNIT_REV)
    tvalues = all_sets(8)
    for _ in range(2):
        d = sample_rel(rng, 8, 0.15)
        generic = upto.up_ctx(upto.union_algebra, ev, upto.up_ref(d), tvalues)
        closure = upto.UnionClosure(d)
        for q1 in range(8):
            for q2 in range(8):
                assert closure.value(q1, q2) == pytest.approx(generic.get(q1, q2), abs=1e-12), (q1, q2)


def test_ctx_union_examples():
    nfa = two_chain_nfa(3)
    w = two_chain_witness(3, 0.5)
    x0x1, y0 = nfa.subset(["x0", "x1"]), nfa.subset(["y0"])
    assert upto.up_ctx_union(w.rel, (x0x1, y0)) == 0.25
    assert upto.up_ctx_union(w.rel, (0, 0)) == UNIT_REV.top
    for (a, b), v in w.rel.values.items():
        assert UNIT_REV.leq(v, upto.up_ctx_union(w.rel, (a, b)))
    # without the diagonal the reflexive pair ({x0,x1},{x0,x1}) is not derivable
    assert upto.up_ctx_union(w.rel, (x0x1, x0x1), include_diagonal=False) == UNIT_REV.bottom
    assert upto.up_ctx_union(w.rel, (x0x1, x0x1)) == UNIT_REV.top


def dist_states():
    half = lambda a, b: DistValue({a: 0.5, b: 0.5})  # noqa: E731
    delta = DistValue({0: 0.25, 1: 0.25, 2: 0.25, 3: 0.25})
    theta = DistValue({4: 0.25, 5: 0.25, 6: 0.25, 7: 0.25})
    return [half(0, 1), half(2, 3), half(4, 5), half(6, 7), delta, theta] + [DistValue.point(k) for k in range(8)]


def test_cvx_examples():
    states = dist_states()
    d = VRel(UNIT_REV, Carrier(len(states)), {(0, 2): 0.2, (1, 3): 0.2})
    res = upto.up_cvx(d, states, (states[4], states[5]))
    assert res.value <= 0.2 + 1e-9 and not res.lower_confidence
    assert upto.up_cvx(d, states, (states[0], states[2])).value <= 0.2 + 1e-9
    points = upto.up_cvx(VRel(UNIT_REV, Carrier(len(states))), states, (states[6], states[7]))
    assert points.value == 1.0
    capped = upto.up_cvx(d, states, (states[4], states[5]), cap=1)
    assert capped.lower_confidence and capped.value >= res.value - 1e-9
    with pytest.raises(UsageError):
        upto.up_cvx(VRel(BOOL2, Carrier(len(states))), states, (states[4], states[5]))


def test_cvx_technique_is_lazy():
    states = dist_states()
    d = VRel(UNIT_REV, Carrier(len(states)), {(0, 2): 0.2, (1, 3): 0.2})
    tech = upto.cvx_technique(states)
    assert tech.basis == ("trace-metric settings only",)
    assert tech(d).get(4, 5) == pytest.approx(0.2)


def test_combine_modes():
    rng = random.Random(3)
    d = sample_rel(rng, 4)
    joined = upto.combine([upto.TRN, upto.IDENTITY], "join")
    assert vrel.rel_eq(joined(d), upto.up_trn(d), elements=range(4))
    with pytest.raises(UsageError):
        upto.combine([upto.TRN, upto.TRN], "chain")
    with pytest.raises(UsageError):
        upto.combine([upto.TRN], "sideways")
    chain = upto.combine([upto.TRN, upto.TRN], "chain", lax_tensor=True)
    tri = VRel(UNIT_REV, Carrier(3), {(0, 1): 0.2, (1, 2): 0.3})
    closed = upto.up_trn(tri)
    assert vrel.rel_eq(chain(tri), vrel.compose(closed, closed), elements=range(3))
    assert chain(tri)(0, 2) == pytest.approx(0.5)
    assert chain.name == "chain(trn,trn)" and chain.basis
    assert upto.combine([], "compose") is upto.IDENTITY
    assert upto.combine([upto.REF, upto.PLANTED_UNSOUND]).basis == ()


def test_technique_from_names():
    assert upto.technique_from_names(["ref"]) is upto.REF
    assert upto.technique_from_names(["ref", "ctx-union"]).name == "compose(ref,ctx-union)"
    for bad in (["bogus"], ["bhv"], ["cvx"], ["planted-unsound"]):
        with pytest.raises(UsageError):
            upto.technique_from_names(bad)
    assert upto.technique_from_names(["planted-unsound"], unsafe=True) is upto.PLANTED_UNSOUND


def _techniques_on(n):
    classes = [[0, 1]] if n > 1 else []
    return {
        "ref": upto.REF, "sym": upto.SYM, "trn": upto.TRN, "mtr": upto.MTR,
        "bhv": upto.bhv_technique(classes), "ctx-union": upto.CTX_UNION,
    }


@pytest.mark.parametrize("name", ["ref", "sym", "trn", "mtr", "bhv", "ctx-union"])
def test_extensive_and_monotone(name):
    rng = random.Random(sum(map(ord, name)))
    n = 8
    tech = _techniques_on(n)[name]
    for _ in range(25):
        d = sample_rel(rng, n, 0.2)
        extra = sample_rel(rng, n, 0.2)
        e = vrel.join(d, extra)
        fd, fe = tech(d), tech(e)
        assert below_everywhere(UNIT_REV, d, fd, n)
        assert below_everywhere(UNIT_REV, fd, fe, n)


def test_cvx_extensive_and_monotone():
    states = dist_states()
    n = len(states)
    rng = random.Random(12)
    tech = upto.cvx_technique(states)
    for _ in range(5):
        d = sample_rel(rng, n, 0.1)
        e = vrel.join(d, sample_rel(rng, n, 0.1))
        fd, fe = tech(d), tech(e)
        for x, y in [(4, 5), (0, 2), (1, 3), (6, 7), (0, 1), (8, 9)]:
            assert UNIT_REV.leq(d.get(x, y), fd.get(x, y) + 1e-9)
            assert UNIT_REV.leq(fd.get(x, y), fe.get(x, y) + 1e-9)


def test_compatible_techniques_keep_the_fixpoint_closed():
    # f(nu b) <= nu b for every technique with a basis
    rng = random.Random(21)
    for _ in range(8):
        nfa = random_nfa(rng, 3)
        det = determinize(nfa)
        b = fixpoint.build_b(det, EvaluationMap.machine_discount(UNIT_REV, 0.5, 2))
        pairs = [(s, t) for s in range(8) for t in range(8)]
        g = fixpoint.gfp(b, pairs)
        explicit = VRel(UNIT_REV, det.carrier, {p: g(*p) for p in pairs})
        classes = lang_equiv_partition(det, list(range(8)))
        for tech in (upto.REF, upto.SYM, upto.TRN, upto.MTR, upto.CTX_UNION, upto.bhv_technique(classes)):
            fg = tech(explicit)
            for p in pairs:
                assert fg.get(*p) >= g(*p) - 1e-9, (tech.name, p)


def test_non_expansive_under_union_context():
    from quantimetric.cli import RunConfig, distance

    rng = random.Random(33)
    cfg = RunConfig(UNIT_REV)
    for _ in range(15):
        nfa = random_nfa(rng, rng.randint(2, 4))
        full = 1 << nfa.size
        for _ in range(5):
            q1, q2, r = (rng.randrange(full) for _ in range(3))
            base = distance(nfa, q1, q2, cfg)(q1, q2)
            ctx = distance(nfa, q1 | r, q2 | r, cfg)(q1 | r, q2 | r)
            assert ctx <= base + 1e-9


def test_union_closure_is_fast_on_large_witness():
    nfa = two_chain_nfa(12)
    w = two_chain_witness(12, 0.5)
    closure = upto.UnionClosure(w.rel)
    t0 = time.perf_counter()
    for i in range(13):
        closure.value(nfa.subset(["x0", f"x{i}"]), nfa.subset(["y0"]))
    assert time.perf_counter() - t0 < 2.0
