"""Automata, the determinisation bialgebra and independent language oracles.

Subset states of a determinised NFA are Python ints used as bitsets over the
NFA states (bit ``k`` set means state ``k`` is in the subset).  The subset
construction is lazy: :class:`DetCoalgebra` computes a successor only when
asked and never materialises the reachable part.
"""

from __future__ import annotations

import json
import random
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union

from .errors import CapExceeded, UsageError
from .flift import DistValue, FunctorId, MachineValue, PowValue, machine, POW, DIST
from .quantale import UNIT_REV, Quantale
from .vrel import Carrier, VRel

NODE_CAP = 10**6


@dataclass(frozen=True)
class Nfa:
    states: tuple[str, ...]
    alphabet: tuple[str, ...]
    delta: tuple[tuple[int, ...], ...]  # delta[q][a]: bitset of targets
    finals: int

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        object.__setattr__(self, "delta", tuple(tuple(row) for row in self.delta))
        if not self.alphabet:
            raise UsageError("alphabet must be non-empty")
        if len(set(self.states)) != len(self.states):
            raise UsageError("duplicate state names")
        full = (1 << len(self.states)) - 1
        if len(self.delta) != len(self.states) or any(len(row) != len(self.alphabet) for row in self.delta):
            raise UsageError("transition table does not match states x alphabet")
        if any(t & ~full for row in self.delta for t in row) or self.finals & ~full:
            raise UsageError("transition target outside the state set")

    @property
    def size(self) -> int:
        return len(self.states)

    def index(self, name: str) -> int:
        try:
            return self.states.index(name)
        except ValueError:
            raise UsageError(f"unknown state {name!r}") from None

    def subset(self, names: Iterable[str]) -> int:
        mask = 0
        for name in names:
            mask |= 1 << self.index(name)
        return mask

    def parse_subset(self, text: str) -> int:
        """``"x0"``, ``"x0,x1"`` or ``"{x0,x1}"``; ``"{}"`` is the empty subset."""
        text = text.strip()
        if text.startswith("{") and text.endswith("}"):
            text = text[1:-1]
        names = [t.strip() for t in text.split(",") if t.strip()]
        return self.subset(names)

    def members(self, mask: int) -> list[str]:
        return [s for k, s in enumerate(self.states) if mask >> k & 1]

    def format_subset(self, mask: int) -> str:
        return "{" + ",".join(self.members(mask)) + "}"

    @classmethod
    def from_transitions(cls, states: Sequence[str], alphabet: Sequence[str], finals: Iterable[str],
                         transitions: Iterable[tuple[str, str, Iterable[str]]]) -> "Nfa":
        st = list(states)
        al = list(alphabet)
        delta = [[0] * len(al) for _ in st]
        for src, letter, targets in transitions:
            try:
                q, a = st.index(src), al.index(letter)
            except ValueError:
                raise UsageError(f"transition {src!r} --{letter!r}--> uses an unknown state or letter") from None
            for t in targets:
                if t not in st:
                    raise UsageError(f"unknown target state {t!r}")
                delta[q][a] |= 1 << st.index(t)
        fin = 0
        for name in finals:
            if name not in st:
                raise UsageError(f"unknown final state {name!r}")
            fin |= 1 << st.index(name)
        return cls(tuple(st), tuple(al), tuple(tuple(r) for r in delta), fin)

    def to_json(self) -> dict:
        transitions = []
        for q, row in enumerate(self.delta):
            for a, targets in enumerate(row):
                if targets:
                    transitions.append({"from": self.states[q], "letter": self.alphabet[a],
                                        "to": self.members(targets)})
        return {"states": list(self.states), "alphabet": list(self.alphabet),
                "finals": self.members(self.finals), "transitions": transitions}

    @classmethod
    def from_json(cls, data: Mapping) -> "Nfa":
        try:
            return cls.from_transitions(
                data["states"], data["alphabet"], data.get("finals", []),
                [(t["from"], t["letter"], t["to"]) for t in data.get("transitions", [])],
            )
        except (KeyError, TypeError) as exc:
            raise UsageError(f"malformed automaton: {exc}") from None


def load_nfa(path: Union[str, Path]) -> Nfa:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read automaton {path}: {exc}") from None
    return Nfa.from_json(data)


def save_nfa(nfa: Nfa, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(nfa.to_json(), indent=2) + "\n")


@dataclass
class DetCoalgebra:
    """On-the-fly subset construction, a coalgebra for ``2 x X^A``."""

    source: Nfa
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def functor(self) -> FunctorId:
        return machine(len(self.source.alphabet))

    @property
    def carrier(self) -> Carrier:
        return Carrier(1 << self.source.size)

    def accepts(self, subset: int) -> bool:
        return bool(subset & self.source.finals)

    def succ(self, subset: int, letter: int) -> int:
        out = 0
        k = 0
        while subset:
            if subset & 1:
                out |= self.source.delta[k][letter]
            subset >>= 1
            k += 1
        return out

    def step(self, subset: int) -> MachineValue:
        hit = self._cache.get(subset)
        if hit is None:
            hit = MachineValue(self.accepts(subset),
                               (self.succ(subset, a) for a in range(len(self.source.alphabet))))
            self._cache[subset] = hit
        return hit

    def label(self, subset: int) -> str:
        return self.source.format_subset(subset)


def determinize(nfa: Nfa) -> DetCoalgebra:
    return DetCoalgebra(nfa)


@dataclass(frozen=True)
class Dfa:
    """Explicit deterministic automaton, states ``0..n-1``."""

    accept: tuple[bool, ...]
    delta: tuple[tuple[int, ...], ...]  # delta[q][a]

    @property
    def size(self) -> int:
        return len(self.accept)

    @property
    def functor(self) -> FunctorId:
        return machine(len(self.delta[0]) if self.delta else 1)

    @property
    def carrier(self) -> Carrier:
        return Carrier(self.size)

    def step(self, q: int) -> MachineValue:
        return MachineValue(self.accept[q], self.delta[q])

    def label(self, q: int) -> str:
        return str(q)


@dataclass(frozen=True)
class PowCoalgebra:
    """Finitely branching transition system ``X -> P(X)``."""

    successors: tuple[frozenset, ...]

    functor = POW

    @property
    def carrier(self) -> Carrier:
        return Carrier(len(self.successors))

    def step(self, x: int) -> PowValue:
        return PowValue(self.successors[x])

    def label(self, x: int) -> str:
        return str(x)


@dataclass(frozen=True)
class MarkovChain:
    """Finite Markov chain ``X -> D(X)``."""

    transitions: tuple[DistValue, ...]

    functor = DIST

    @property
    def carrier(self) -> Carrier:
        return Carrier(len(self.transitions))

    def step(self, x: int) -> DistValue:
        return self.transitions[x]

    def label(self, x: int) -> str:
        return str(x)


def distributive_law(m: Iterable[MachineValue]) -> MachineValue:
    """``P(2 x X^A) -> 2 x (P X)^A``: or of the accept bits, letterwise sets of successors."""
    items = list(m)
    if not items:
        raise UsageError("letter count of an empty family is unknown; use distributive_law_n")
    return distributive_law_n(items, len(items[0].succ))


def distributive_law_n(m: Iterable[MachineValue], letters: int) -> MachineValue:
    items = list(m)
    accept = any(v.accept for v in items)
    return MachineValue(accept, (PowValue(v.succ[a] for v in items) for a in range(letters)))


# -- the example family ------------------------------------------------------------


def two_chain_nfa(n: int) -> Nfa:
    """Two chains ``x0..xn`` and ``y0..yn`` over ``{a, b}``.

    ``x0`` and ``y0`` loop on both letters; ``x0`` enters its chain on ``a``,
    ``y0`` on ``b``; every later chain step reads either letter; ``xn`` and
    ``yn`` are final.
    """
    if n < 1:
        raise UsageError("the example family needs n >= 1")
    xs = [f"x{i}" for i in range(n + 1)]
    ys = [f"y{i}" for i in range(n + 1)]
    transitions = [
        ("x0", "a", ["x0", "x1"]), ("x0", "b", ["x0"]),
        ("y0", "a", ["y0"]), ("y0", "b", ["y0", "y1"]),
    ]
    for i in range(1, n):
        for letter in "ab":
            transitions.append((f"x{i}", letter, [f"x{i + 1}"]))
            transitions.append((f"y{i}", letter, [f"y{i + 1}"]))
    return Nfa.from_transitions(xs + ys, ["a", "b"], [f"x{n}", f"y{n}"], transitions)


def two_chain_witness(n: int, c: float, quantale: Optional[Quantale] = None, bound: Optional[float] = None):
    """The sparse witness ``d({xi}, {yj}) = c^(n - max(i, j))`` for ``two_chain_nfa(n)``.

    The claim is ``({x0}, {y0})`` at ``c^n`` unless another ``bound`` is given.
    """
    from .fixpoint import Witness

    q = quantale or UNIT_REV
    nfa = two_chain_nfa(n)
    entries = {}
    for i in range(n + 1):
        for j in range(n + 1):
            entries[(nfa.subset([f"x{i}"]), nfa.subset([f"y{j}"]))] = c ** (n - max(i, j))
    rel = VRel(q, Carrier(1 << nfa.size), entries)
    claim = (nfa.subset(["x0"]), nfa.subset(["y0"]))
    return Witness(rel, claim[0], claim[1], c**n if bound is None else bound, c)


def random_nfa(rng: random.Random, states: int, letters: int = 2, density: float = 0.35,
               final_prob: float = 0.4) -> Nfa:
    names = [f"q{k}" for k in range(states)]
    delta = []
    for _ in range(states):
        row = []
        for _ in range(letters):
            mask = 0
            for t in range(states):
                if rng.random() < density:
                    mask |= 1 << t
            row.append(mask)
        delta.append(tuple(row))
    finals = 0
    for k in range(states):
        if rng.random() < final_prob:
            finals |= 1 << k
    return Nfa(tuple(names), tuple("abcdefgh"[:letters]), tuple(delta), finals)


def random_dfa(rng: random.Random, states: int, letters: int = 2) -> Dfa:
    return Dfa(tuple(rng.random() < 0.5 for _ in range(states)),
               tuple(tuple(rng.randrange(states) for _ in range(letters)) for _ in range(states)))


# -- language oracles ------------------------------------------------------------------


def shortest_distinguishing_word(det, s1, s2, node_cap: int = NODE_CAP) -> Optional[int]:
    """Length of a shortest word accepted from exactly one of ``s1``, ``s2``.

    Breadth-first search over pairs of deterministic states; ``None`` when the
    two states are language equivalent.
    """
    seen = {(s1, s2)}
    queue = deque([(s1, s2, 0)])
    while queue:
        x, y, depth = queue.popleft()
        tx, ty = det.step(x), det.step(y)
        if tx.accept != ty.accept:
            return depth
        for nx, ny in zip(tx.succ, ty.succ):
            if (nx, ny) not in seen:
                if len(seen) >= node_cap:
                    raise CapExceeded(f"product search exceeded the node cap of {node_cap}")
                seen.add((nx, ny))
                queue.append((nx, ny, depth + 1))
    return None


class _UnionFind:
    def __init__(self):
        self.parent: dict = {}

    def find(self, x):
        root = x
        while self.parent.get(root, root) != root:
            root = self.parent[root]
        while x != root:
            self.parent[x], x = root, self.parent.get(x, x)
        return root

    def union(self, x, y) -> None:
        rx, ry = self.find(x), self.find(y)
        if rx != ry:
            self.parent[rx] = ry


def lang_equiv(det, s1, s2, node_cap: int = NODE_CAP) -> bool:
    """Hopcroft-Karp equivalence check with a union-find over visited states."""
    uf = _UnionFind()
    todo = [(s1, s2)]
    steps = 0
    while todo:
        x, y = todo.pop()
        if uf.find(x) == uf.find(y):
            continue
        tx, ty = det.step(x), det.step(y)
        if tx.accept != ty.accept:
            return False
        uf.union(x, y)
        steps += 1
        if steps > node_cap:
            raise CapExceeded(f"equivalence check exceeded the node cap of {node_cap}")
        todo.extend(zip(tx.succ, ty.succ))
    return True


def lang_equiv_partition(det, states: Sequence) -> list[list]:
    """Partition ``states`` into language-equivalence classes (input order kept)."""
    classes: list[list] = []
    for s in states:
        for cls in classes:
            if lang_equiv(det, cls[0], s):
                cls.append(s)
                break
        else:
            classes.append([s])
    return classes
