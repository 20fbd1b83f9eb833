"""Brute-force reference computations for the relation liftings.

These take a different route from :mod:`quantimetric.flift`: couplings are
enumerated explicitly for the powerset, and the distribution liftings are
solved as generic linear programs.  They back the ``--oracle`` flag of the
command line and are meant for small inputs only.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from .errors import UsageError
from .flift import MAX_ENUM, EvaluationMap, PowValue, evaluate, pow_couplings


def pow_bruteforce(ev: EvaluationMap, r, t1: PowValue, t2: PowValue, max_enum: int = MAX_ENUM):
    """Join over every coupling of ``t1`` and ``t2`` of ``ev`` applied to the coupled values."""
    q = ev.quantale
    return q.join(evaluate(ev, PowValue(r.get(x, y) for x, y in cpl)) for cpl in pow_couplings(t1, t2, max_enum))


def _coupling_constraints(m1: Sequence[float], m2: Sequence[float]):
    rows, cols = len(m1), len(m2)
    a_eq = np.zeros((rows + cols, rows * cols))
    for i in range(rows):
        a_eq[i, i * cols:(i + 1) * cols] = 1.0
    for j in range(cols):
        a_eq[rows + j, j::cols] = 1.0
    return a_eq, np.concatenate([np.asarray(m1, float), np.asarray(m2, float)])


def transport_lp(m1: Sequence[float], m2: Sequence[float], cost: Sequence[Sequence[float]]) -> float:
    """Optimal transport cost as a plain linear program."""
    a_eq, b_eq = _coupling_constraints(m1, m2)
    res = linprog(np.asarray(cost, float).ravel(), A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if res.status != 0:
        raise UsageError(f"transport LP failed: {res.message}")
    return float(res.fun)


def bottleneck_lp(m1: Sequence[float], m2: Sequence[float], cost: Sequence[Sequence[float]]) -> float:
    """Least threshold admitting a coupling, by scanning thresholds with LP feasibility."""
    a_eq, b_eq = _coupling_constraints(m1, m2)
    flat = np.asarray(cost, float).ravel()
    for t in sorted(set(flat.tolist())):
        bounds = [(0, None) if c <= t else (0, 0) for c in flat]
        res = linprog(np.zeros_like(flat), A_eq=a_eq, b_eq=b_eq, bounds=bounds, method="highs")
        if res.status == 0:
            return t
    raise UsageError("no coupling exists")
