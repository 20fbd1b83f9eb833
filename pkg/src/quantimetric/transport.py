"""Exact discrete transport solvers on small supports.

``transport_min_cost`` runs the transportation simplex (north-west corner start,
MODI potentials, Bland's rule for entering and leaving cells) over
``fractions.Fraction`` so degenerate pivots cannot cycle and results are exact.

``bottleneck`` minimises the largest cost used by a coupling: costs are sorted,
and each threshold is tested for marginal feasibility with a max-flow.
"""

from __future__ import annotations

from collections import deque
from fractions import Fraction
from typing import Optional, Sequence

from .errors import CapExceeded, UsageError

MAX_PIVOTS = 10_000
_DENOMINATOR = 10**6


def to_fraction(x: float) -> Fraction:
    """Rational reconstruction at denominator <= 10^6 when it reproduces ``x``."""
    exact = Fraction(x)
    approx = exact.limit_denominator(_DENOMINATOR)
    if abs(approx - exact) <= Fraction(1, 10**12):
        return approx
    return exact


def _normalised(masses: Sequence[float]) -> list[Fraction]:
    fr = [to_fraction(m) for m in masses]
    total = sum(fr)
    if total <= 0:
        raise UsageError("marginal has no mass")
    return [m / total for m in fr]


def _northwest(a: list[Fraction], b: list[Fraction]) -> dict[tuple[int, int], Fraction]:
    a, b = list(a), list(b)
    m, n = len(a), len(b)
    flow: dict[tuple[int, int], Fraction] = {}
    i = j = 0
    while True:
        x = min(a[i], b[j])
        flow[(i, j)] = x
        a[i] -= x
        b[j] -= x
        if i == m - 1 and j == n - 1:
            return flow
        if (a[i] == 0 and i < m - 1) or j == n - 1:
            i += 1
        else:
            j += 1


def _potentials(basis, cost, m, n):
    adj: dict[int, list[int]] = {k: [] for k in range(m + n)}
    for i, j in basis:
        adj[i].append(m + j)
        adj[m + j].append(i)
    pot: dict[int, Fraction] = {0: Fraction(0)}
    stack = [0]
    while stack:
        node = stack.pop()
        for nb in adj[node]:
            if nb in pot:
                continue
            if node < m:
                i, j = node, nb - m
                pot[nb] = cost[i][j] - pot[node]
            else:
                i, j = nb, node - m
                pot[nb] = cost[i][j] - pot[node]
            stack.append(nb)
    return [pot[k] for k in range(m)], [pot[m + k] for k in range(n)], adj


def _tree_path(adj, start: int, goal: int) -> list[int]:
    prev = {start: None}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        if node == goal:
            break
        for nb in adj[node]:
            if nb not in prev:
                prev[nb] = node
                queue.append(nb)
    path = [goal]
    while prev[path[-1]] is not None:
        path.append(prev[path[-1]])
    return path[::-1]


def transport_min_cost(
    supply: Sequence[float],
    demand: Sequence[float],
    cost: Sequence[Sequence[float]],
    max_pivots: int = MAX_PIVOTS,
) -> tuple[Fraction, dict[tuple[int, int], Fraction]]:
    """Minimum of ``sum cost[i][j] * t[i][j]`` over couplings of the marginals.

    Marginals are renormalised to total mass exactly 1; costs are taken
    exactly as given.  Returns the optimal
    cost and the optimal plan (basic cells with positive flow).
    """
    a, b = _normalised(supply), _normalised(demand)
    m, n = len(a), len(b)
    # costs stay exact so a unique coupling reproduces its float cost bit for bit
    c = [[Fraction(v) for v in row] for row in cost]
    if len(c) != m or any(len(row) != n for row in c):
        raise UsageError("cost matrix does not match the marginals")

    flow = _northwest(a, b)
    for _ in range(max_pivots):
        u, v, adj = _potentials(flow, c, m, n)
        entering = None
        for i in range(m):
            for j in range(n):
                if (i, j) not in flow and c[i][j] - u[i] - v[j] < 0:
                    entering = (i, j)
                    break
            if entering:
                break
        if entering is None:
            total = sum(c[i][j] * x for (i, j), x in flow.items())
            return total, {k: x for k, x in flow.items() if x > 0}
        ei, ej = entering
        path = _tree_path(adj, ei, m + ej)
        cells = []
        for k in range(len(path) - 1):
            p, s = path[k], path[k + 1]
            cells.append((p, s - m) if p < m else (s, p - m))
        minus = cells[0::2]
        plus = cells[1::2]
        theta = min(flow[cell] for cell in minus)
        leaving = min(cell for cell in minus if flow[cell] == theta)
        for cell in minus:
            flow[cell] -= theta
        for cell in plus:
            flow[cell] += theta
        del flow[leaving]
        flow[entering] = theta
    raise CapExceeded(f"transportation simplex exceeded {max_pivots} pivots")


def _max_flow(cap: dict[int, dict[int, Fraction]], source: int, sink: int) -> Fraction:
    total = Fraction(0)
    while True:
        prev: dict[int, Optional[int]] = {source: None}
        queue = deque([source])
        while queue and sink not in prev:
            node = queue.popleft()
            for nb, c in cap[node].items():
                if c > 0 and nb not in prev:
                    prev[nb] = node
                    queue.append(nb)
        if sink not in prev:
            return total
        path = [sink]
        while prev[path[-1]] is not None:
            path.append(prev[path[-1]])
        path.reverse()
        push = min(cap[x][y] for x, y in zip(path, path[1:]))
        for x, y in zip(path, path[1:]):
            cap[x][y] -= push
            cap[y][x] = cap[y].get(x, Fraction(0)) + push
        total += push


def coupling_feasible(a: Sequence[Fraction], b: Sequence[Fraction], allowed) -> bool:
    """Is there a coupling of ``a`` and ``b`` supported on the ``allowed`` cells?"""
    m, n = len(a), len(b)
    source, sink = m + n, m + n + 1
    big = sum(a) + 1
    cap: dict[int, dict[int, Fraction]] = {k: {} for k in range(m + n + 2)}
    for i in range(m):
        cap[source][i] = a[i]
    for j in range(n):
        cap[m + j][sink] = b[j]
    for i, j in allowed:
        cap[i][m + j] = big
    return _max_flow(cap, source, sink) == sum(a)


def bottleneck(supply: Sequence[float], demand: Sequence[float], cost: Sequence[Sequence[float]]) -> float:
    """Least threshold ``t`` such that some coupling only uses cells of cost <= t."""
    a, b = _normalised(supply), _normalised(demand)
    m, n = len(a), len(b)
    levels = sorted({cost[i][j] for i in range(m) for j in range(n)})
    lo, hi = 0, len(levels) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        allowed = [(i, j) for i in range(m) for j in range(n) if cost[i][j] <= levels[mid]]
        if coupling_feasible(a, b, allowed):
            hi = mid
        else:
            lo = mid + 1
    return levels[lo]
