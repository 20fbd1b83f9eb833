"""Independent reference computations used as test oracles.

None of these share code paths with the package: couplings are enumerated
over bitmasks with numpy, transport optima come from enumerating spanning
tree bases, and automata are explored with plain dictionaries.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np


# -- powerset couplings ----------------------------------------------------------------


class PowCouplingTable:
    """For a carrier of size n, every Y <= X x X as a bitmask over n*n cells."""

    def __init__(self, n: int):
        self.n = n
        cells = n * n
        self.masks = np.arange(1 << cells, dtype=np.int64)
        proj1 = np.zeros_like(self.masks)
        proj2 = np.zeros_like(self.masks)
        for k in range(cells):
            x, y = divmod(k, n)
            bit = (self.masks >> k) & 1
            proj1 |= bit << x
            proj2 |= bit << y
        self.key = proj1 * (1 << n) + proj2

    def hausdorff_all(self, r: np.ndarray) -> np.ndarray:
        """table[s1, s2] = min over couplings of the max cell value, 1 if none."""
        n = self.n
        val = np.zeros(len(self.masks))
        for k in range(n * n):
            x, y = divmod(k, n)
            bit = ((self.masks >> k) & 1).astype(bool)
            val = np.where(bit, np.maximum(val, r[x, y]), val)
        out = np.ones(1 << (2 * n))
        np.minimum.at(out, self.key, val)
        return out.reshape(1 << n, 1 << n)


# -- transport by basis enumeration -----------------------------------------------------------


def transport_by_bases(a, b, cost) -> Fraction:
    """Minimum cost over all basic feasible couplings of the marginals ``a`` and ``b``.

    Bases of the transportation polytope are spanning trees of the complete
    bipartite graph on rows and columns; each one determines its flow by
    peeling leaves.
    """
    a = [Fraction(x) for x in a]
    b = [Fraction(x) for x in b]
    m, n = len(a), len(b)
    cells = [(i, j) for i in range(m) for j in range(n)]
    best = None
    for tree in itertools.combinations(cells, m + n - 1):
        flow = _peel(tree, a, b)
        if flow is None or any(v < 0 for v in flow.values()):
            continue
        total = sum(Fraction(cost[i][j]) * v for (i, j), v in flow.items())
        best = total if best is None else min(best, total)
    return best


def _peel(tree, a, b):
    m, n = len(a), len(b)
    rest = {("r", i): a[i] for i in range(m)}
    rest.update({("c", j): b[j] for j in range(n)})
    edges = {cell: None for cell in tree}
    adj = {node: set() for node in rest}
    for i, j in tree:
        adj[("r", i)].add((i, j))
        adj[("c", j)].add((i, j))
    open_edges = set(tree)
    while open_edges:
        leaf = next((node for node, es in adj.items() if len(es) == 1), None)
        if leaf is None:
            return None  # cycle: not a tree
        (cell,) = adj[leaf]
        edges[cell] = rest[leaf]
        i, j = cell
        other = ("c", j) if leaf[0] == "r" else ("r", i)
        rest[other] -= rest[leaf]
        rest[leaf] = Fraction(0)
        adj[leaf].discard(cell)
        adj[other].discard(cell)
        open_edges.discard(cell)
    if any(v != 0 for v in rest.values()):
        return None
    return edges


def sixth_grid(points: int = 3):
    """All distributions on ``points`` elements with masses in multiples of 1/6."""
    out = []
    for parts in itertools.product(range(7), repeat=points):
        if sum(parts) == 6:
            out.append([Fraction(p, 6) for p in parts])
    return out


# -- automata ------------------------------------------------------------------------------------


def literal_machine_step(accept, delta, d, c, q1, q2):
    """One step of the discounted shortest-word distance, written out by cases."""
    if accept[q1] != accept[q2]:
        return 1.0
    return max(c * d[delta[q1][a]][delta[q2][a]] for a in range(len(delta[q1])))


def subset_table(nfa):
    """Full subset construction as explicit dictionaries (all 2^n subsets)."""
    n, k = len(nfa.states), len(nfa.alphabet)
    table = {}
    for s in range(1 << n):
        succ = []
        for a in range(k):
            t = 0
            for q in range(n):
                if s >> q & 1:
                    t |= nfa.delta[q][a]
            succ.append(t)
        table[s] = (bool(s & nfa.finals), succ)
    return table


def bounded_language(table, s, length):
    """Words of length <= ``length`` (as letter tuples) accepted from subset ``s``."""
    out = set()
    frontier = {(): s}
    for _ in range(length + 1):
        nxt = {}
        for w, t in frontier.items():
            if table[t][0]:
                out.add(w)
            for a, u in enumerate(table[t][1]):
                nxt[w + (a,)] = u
        frontier = nxt
    return out


def union_closure(pairs):
    """Classical closure of a set of subset pairs under pointwise union, with (0, 0)."""
    closed = set(pairs) | {(0, 0)}
    changed = True
    while changed:
        changed = False
        for (a, b), (c, d) in itertools.product(list(closed), repeat=2):
            if (a | c, b | d) not in closed:
                closed.add((a | c, b | d))
                changed = True
    return closed
