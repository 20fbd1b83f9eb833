import json
import random

import pytest

from quantimetric.errors import CapExceeded, UsageError
from quantimetric.flift import MachineValue, PowValue
from quantimetric.systems import (
    Dfa, Nfa, determinize, distributive_law, two_chain_witness, two_chain_nfa, lang_equiv, lang_equiv_partition, load_nfa,
    random_dfa, random_nfa, save_nfa, shortest_distinguishing_word,
)
from refimpl import bounded_language, subset_table


def test_two_chain_nfa_shape():
    nfa = two_chain_nfa(1)
    assert nfa.size == 4
    assert len(nfa.members(nfa.finals)) == 2
    with pytest.raises(UsageError):
        two_chain_nfa(0)


def test_two_chain_steps():
    nfa = two_chain_nfa(3)
    det = determinize(nfa)
    a = nfa.alphabet.index("a")
    assert det.succ(nfa.subset(["x0"]), a) == nfa.subset(["x0", "x1"])
    assert det.succ(nfa.subset(["y0"]), a) == nfa.subset(["y0"])
    assert det.step(0) == MachineValue(False, [0, 0])


def test_shortest_accepted_word_from_chain_starts():
    nfa = two_chain_nfa(3)
    table = subset_table(nfa)
    for start in ("x0", "y0"):
        words = bounded_language(table, nfa.subset([start]), 3)
        assert min(len(w) for w in words) == 3


def test_sdw_examples():
    nfa = two_chain_nfa(3)
    det = determinize(nfa)
    x0, y0 = nfa.subset(["x0"]), nfa.subset(["y0"])
    assert shortest_distinguishing_word(det, x0, x0) is None
    assert shortest_distinguishing_word(det, x0, y0) == 3
    sinks = Nfa.from_transitions(["p", "q"], ["a"], ["p"], [("p", "a", ["p"]), ("q", "a", ["q"])])
    d2 = determinize(sinks)
    assert shortest_distinguishing_word(d2, sinks.subset(["p"]), sinks.subset(["q"])) == 0


def test_sdw_node_cap():
    nfa = two_chain_nfa(6)
    det = determinize(nfa)
    with pytest.raises(CapExceeded):
        shortest_distinguishing_word(det, nfa.subset(["x0"]), nfa.subset(["y0"]), node_cap=5)


def test_sdw_matches_bounded_languages():
    rng = random.Random(12)
    for _ in range(30):
        nfa = random_nfa(rng, rng.randint(1, 4))
        table = subset_table(nfa)
        det = determinize(nfa)
        for _ in range(5):
            s1, s2 = rng.randrange(1 << nfa.size), rng.randrange(1 << nfa.size)
            got = shortest_distinguishing_word(det, s1, s2)
            horizon = 1 << (2 * nfa.size)  # the product has at most this many pairs
            l1, l2 = bounded_language(table, s1, min(horizon, 6)), bounded_language(table, s2, min(horizon, 6))
            diff = l1 ^ l2
            if got is None:
                assert not diff
            elif got <= 6:
                assert min(len(w) for w in diff) == got


def test_det_step_agrees_with_distributive_law():
    # the subset step is the law applied to the singletons' steps, followed by union
    rng = random.Random(2)
    for _ in range(20):
        nfa = random_nfa(rng, 4)
        det = determinize(nfa)
        for s in range(1 << nfa.size):
            parts = [det.step(1 << q) for q in range(nfa.size) if s >> q & 1]
            if not parts:
                continue
            law = distributive_law(parts)
            union = MachineValue(law.accept, [_union(p) for p in law.succ])
            assert union == det.step(s)


def _union(p: PowValue) -> int:
    out = 0
    for t in p:
        out |= t
    return out


def test_deterministic_input_mirrors_transitions():
    rng = random.Random(4)
    for _ in range(10):
        dfa = random_dfa(rng, 4, 2)
        nfa = Nfa([f"s{k}" for k in range(4)], ["a", "b"],
                  [[1 << dfa.delta[q][a] for a in range(2)] for q in range(4)],
                  sum(1 << q for q in range(4) if dfa.accept[q]))
        det = determinize(nfa)
        for q in range(4):
            step = det.step(1 << q)
            assert step.accept == dfa.accept[q]
            assert step.succ == tuple(1 << t for t in dfa.delta[q])


def test_lang_equiv_partition_examples():
    nfa = two_chain_nfa(2)
    det = determinize(nfa)
    x1, y1, x2, y0 = (nfa.subset([s]) for s in ("x1", "y1", "x2", "y0"))
    assert lang_equiv_partition(det, [x1]) == [[x1]]
    assert lang_equiv_partition(det, [x1, y1]) == [[x1, y1]]
    classes = lang_equiv_partition(det, [x2, y0])
    assert len(classes) == 2


def test_lang_equiv_agrees_with_sdw():
    rng = random.Random(6)
    for _ in range(30):
        nfa = random_nfa(rng, rng.randint(1, 4))
        det = determinize(nfa)
        states = list(range(1 << nfa.size))
        classes = lang_equiv_partition(det, states)
        where = {s: k for k, cls in enumerate(classes) for s in cls}
        for s1 in states:
            for s2 in states:
                same = where[s1] == where[s2]
                assert same == lang_equiv(det, s1, s2)
                assert same == (shortest_distinguishing_word(det, s1, s2) is None)


def test_nfa_validation():
    with pytest.raises(UsageError):
        Nfa.from_transitions(["p"], [], [], [])
    with pytest.raises(UsageError):
        Nfa.from_transitions(["p"], ["a"], [], [("p", "a", ["q"])])
    with pytest.raises(UsageError):
        Nfa.from_json({"states": ["p"]})
    with pytest.raises(UsageError):
        Nfa(("p",), ("a",), ((2,),), 0)


def test_subset_parsing():
    nfa = two_chain_nfa(2)
    assert nfa.parse_subset("x0") == nfa.subset(["x0"])
    assert nfa.parse_subset("{x0, x1}") == nfa.subset(["x0", "x1"])
    assert nfa.parse_subset("{}") == 0
    assert nfa.format_subset(nfa.subset(["y1", "x0"])) == "{x0,y1}"
    with pytest.raises(UsageError):
        nfa.parse_subset("z9")


def test_nfa_json_roundtrip(tmp_path):
    rng = random.Random(1)
    for nfa in [two_chain_nfa(3), random_nfa(rng, 4, 3)]:
        path = tmp_path / "a.json"
        save_nfa(nfa, path)
        again = load_nfa(path)
        assert again == nfa
        assert json.loads(path.read_text()) == nfa.to_json()


def test_two_chain_witness_entries():
    w = two_chain_witness(3, 0.5)
    nfa = two_chain_nfa(3)
    assert w.rel(nfa.subset(["x0"]), nfa.subset(["y0"])) == 0.125
    assert w.rel(nfa.subset(["x2"]), nfa.subset(["y1"])) == 0.5
    assert w.rel(nfa.subset(["x3"]), nfa.subset(["y0"])) == 1.0
    assert w.bound == 0.125


def test_explicit_dfa_coalgebra():
    dfa = Dfa((True, False), ((1,), (0,)))
    assert dfa.step(0) == MachineValue(True, [1])
    assert dfa.functor.letters == 1
