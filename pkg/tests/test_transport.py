import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from quantimetric import transport
from quantimetric.errors import CapExceeded, UsageError
from refimpl import sixth_grid, transport_by_bases


def test_to_fraction():
    assert transport.to_fraction(1 / 3) == Fraction(1, 3)
    assert transport.to_fraction(0.1) == Fraction(1, 10)
    x = 0.123456789123
    assert float(transport.to_fraction(x)) == x


def test_half_half_example():
    total, plan = transport.transport_min_cost([0.5, 0.5], [1.0], [[0.0], [1.0]])
    assert total == Fraction(1, 2)
    assert plan == {(0, 0): Fraction(1, 2), (1, 0): Fraction(1, 2)}


def test_plan_has_the_marginals():
    rng = random.Random(4)
    for _ in range(50):
        a = [rng.randint(1, 5) for _ in range(rng.randint(1, 5))]
        b = [rng.randint(1, 5) for _ in range(rng.randint(1, 5))]
        a = [x / sum(a) for x in a]
        b = [x / sum(b) for x in b]
        cost = [[rng.random() for _ in b] for _ in a]
        total, plan = transport.transport_min_cost(a, b, cost)
        for i in range(len(a)):
            assert float(sum(v for (r, _), v in plan.items() if r == i)) == pytest.approx(a[i])
        for j in range(len(b)):
            assert float(sum(v for (_, c), v in plan.items() if c == j)) == pytest.approx(b[j])
        assert float(total) == pytest.approx(sum(cost[i][j] * float(v) for (i, j), v in plan.items()))


def test_matches_basis_enumeration_on_sixth_grid():
    grid = sixth_grid()
    rng = random.Random(8)
    costs = [[[rng.randint(0, 10) / 10 for _ in range(3)] for _ in range(3)] for _ in range(3)]
    for cost in costs:
        for a, b in itertools.product(grid, grid):
            got, _ = transport.transport_min_cost(a, b, cost)
            assert abs(float(got) - float(transport_by_bases(a, b, cost))) <= 1e-9


def test_degenerate_inputs_do_not_cycle():
    # many ties and zero-cost cells
    a = [Fraction(1, 4)] * 4
    b = [Fraction(1, 4)] * 4
    cost = [[0 if i == j else 1 for j in range(4)] for i in range(4)]
    total, _ = transport.transport_min_cost(a, b, cost)
    assert total == 0
    cost = [[1] * 4 for _ in range(4)]
    assert transport.transport_min_cost(a, b, cost)[0] == 1


def test_pivot_cap():
    rng = random.Random(2)
    a = [1 / 6] * 6
    cost = [[rng.random() for _ in range(6)] for _ in range(6)]
    with pytest.raises(CapExceeded):
        transport.transport_min_cost(a, a, cost, max_pivots=0)


def test_shape_checks():
    with pytest.raises(UsageError):
        transport.transport_min_cost([1.0], [1.0], [[0.0, 1.0]])
    with pytest.raises(UsageError):
        transport.transport_min_cost([0.0], [1.0], [[0.0]])


def test_bottleneck_examples():
    assert transport.bottleneck([0.5, 0.5], [0.5, 0.5], [[0.1, 0.9], [0.8, 0.2]]) == 0.2
    assert transport.bottleneck([1.0], [0.5, 0.5], [[0.3, 0.6]]) == 0.6


def _bottleneck_brute(a, b, cost):
    levels = sorted({c for row in cost for c in row})
    for t in levels:
        allowed = [(i, j) for i in range(len(a)) for j in range(len(b)) if cost[i][j] <= t]
        # feasibility by Hall's condition over row subsets
        ok = True
        for rows in itertools.chain.from_iterable(itertools.combinations(range(len(a)), k) for k in range(1, len(a) + 1)):
            cols = {j for i, j in allowed if i in rows}
            if sum(a[i] for i in rows) > sum(b[j] for j in cols):
                ok = False
                break
        if ok:
            return t


@settings(max_examples=150, deadline=None)
@given(st.data())
def test_bottleneck_matches_hall(data):
    m = data.draw(st.integers(1, 3))
    n = data.draw(st.integers(1, 3))
    wa = data.draw(st.lists(st.integers(1, 6), min_size=m, max_size=m))
    wb = data.draw(st.lists(st.integers(1, 6), min_size=n, max_size=n))
    a = [Fraction(x, sum(wa)) for x in wa]
    b = [Fraction(x, sum(wb)) for x in wb]
    cost = data.draw(st.lists(st.lists(st.sampled_from([0.0, 0.2, 0.5, 0.7, 1.0]), min_size=n, max_size=n),
                              min_size=m, max_size=m))
    assert transport.bottleneck(a, b, cost) == _bottleneck_brute(a, b, cost)
