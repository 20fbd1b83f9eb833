"""Command-line entry point.

Exit codes: 0 success, 1 witness refuted, 2 a cap was exceeded, 64 malformed
input or bad usage.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from . import fixpoint, oracles, transport, upto
from .errors import CapExceeded, UsageError
from .flift import (
    MAX_ENUM, DistValue, EvalKind, EvaluationMap, MachineValue, PowValue, canonical_eval, hausdorff,
    machine, wasserstein, DIST, POW,
)
from .quantale import QuantaleId, Quantale
from .systems import (
    determinize, lang_equiv_partition, load_nfa, shortest_distinguishing_word, two_chain_nfa, two_chain_witness,
)
from .vrel import Carrier, VRel

EXIT_OK = 0
EXIT_REFUTED = 1
EXIT_CAP = 2
EXIT_USAGE = 64

CAP_ENV = "QUANTIMETRIC_CAP"


@dataclass
class RunConfig:
    quantale: Quantale
    c: float = 0.5
    tol: float = fixpoint.DEFAULT_TOL
    max_iter: int = fixpoint.DEFAULT_MAX_ITER
    upto: list[str] = field(default_factory=list)
    cap: int = fixpoint.PAIR_CAP
    max_pivots: int = transport.MAX_PIVOTS
    max_enum: int = MAX_ENUM

    def __post_init__(self):
        if not 0.0 < self.c < 1.0:
            raise UsageError("the discount c must satisfy 0 < c < 1")
        if self.tol <= 0:
            raise UsageError("tol must be positive")
        if self.max_iter < 1 or self.cap < 1:
            raise UsageError("max-iter and cap must be positive")

    def evaluation_map(self, letters: int) -> EvaluationMap:
        if self.quantale.id is QuantaleId.BOOL2:
            return EvaluationMap.machine_canonical(self.quantale, letters)
        return EvaluationMap.machine_discount(self.quantale, self.c, letters)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _default_cap() -> int:
    raw = os.environ.get(CAP_ENV)
    if raw is None:
        return fixpoint.PAIR_CAP
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{CAP_ENV} must be an integer, got {raw!r}") from None


def _config(args) -> RunConfig:
    extra = {}
    if getattr(args, "config", None):
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        extra["max_pivots"] = int(data.get("transport", {}).get("max_pivots", transport.MAX_PIVOTS))
        extra["max_enum"] = int(data.get("coupling", {}).get("max_enum", MAX_ENUM))
    upto_names = [s.strip() for s in (getattr(args, "upto", "") or "").split(",") if s.strip()]
    return RunConfig(
        Quantale.from_name(args.quantale), args.c, args.tol, args.max_iter, upto_names,
        args.cap if args.cap is not None else _default_cap(), **extra,
    )


def fmt(v) -> str:
    if v == math.inf:
        return "inf"
    if isinstance(v, int):
        return str(v)
    return f"{v:.12g}"


def _jsonable(v):
    return "inf" if v == math.inf else v


def _emit(args, payload: dict, lines: Sequence[str]) -> None:
    if args.json:
        print(json.dumps(payload, sort_keys=True))
    else:
        for line in lines:
            print(line)


# -- commands -----------------------------------------------------------------------


def distance(nfa, s1: int, s2: int, cfg: RunConfig):
    """Greatest fixpoint over the subset pairs reachable from ``(s1, s2)``."""
    det = determinize(nfa)
    b = fixpoint.build_b(det, cfg.evaluation_map(len(nfa.alphabet)), cfg.max_enum, cfg.max_pivots)
    pairs = fixpoint.reachable_pairs(b, [(s1, s2)], cfg.cap)
    return fixpoint.gfp(b, pairs, cfg.tol, cfg.max_iter)


def cmd_distance(args) -> int:
    cfg = _config(args)
    nfa = load_nfa(args.automaton)
    s1, s2 = nfa.parse_subset(args.state1), nfa.parse_subset(args.state2)
    try:
        res = distance(nfa, s1, s2, cfg)
    except CapExceeded as exc:
        print(f"{exc}; use check-witness with an up-to technique instead", file=sys.stderr)
        return EXIT_CAP
    value = res(s1, s2)
    payload = {"left": nfa.format_subset(s1), "right": nfa.format_subset(s2), "distance": _jsonable(value),
               "iterations": res.iterations, "converged": res.converged, "pairs": len(res.pairs)}
    lines = [f"distance {fmt(value)}", f"iterations {res.iterations}", f"pairs {len(res.pairs)}"]
    if not res.converged:
        lines.append("warning: not converged")
    if args.oracle:
        length = shortest_distinguishing_word(determinize(nfa), s1, s2)
        expected = _sdw_value(cfg, length)
        payload["oracle"] = {"word_length": length, "distance": _jsonable(expected)}
        lines.append(f"oracle {'equivalent' if length is None else length} -> {fmt(expected)}")
    _emit(args, payload, lines)
    return EXIT_OK


def _sdw_value(cfg: RunConfig, length: Optional[int]):
    q = cfg.quantale
    if q.id is QuantaleId.BOOL2:
        return int(length is None)
    return 0.0 if length is None else cfg.c**length


def cmd_check_witness(args) -> int:
    cfg = _config(args)
    nfa = load_nfa(args.automaton)
    w = fixpoint.load_witness(args.witness, nfa, cfg.quantale if args.quantale_given else None)
    if w.c is not None and not args.c_given:
        cfg.c = w.c
    cfg = RunConfig(w.quantale, cfg.c, cfg.tol, cfg.max_iter, cfg.upto, cfg.cap, cfg.max_pivots, cfg.max_enum)
    det = determinize(nfa)
    b = fixpoint.build_b(det, cfg.evaluation_map(len(nfa.alphabet)), cfg.max_enum, cfg.max_pivots)
    classes = None
    if "bhv" in cfg.upto:
        elements = sorted({x for pair in w.rel.values for x in pair} | {w.left, w.right})
        classes = lang_equiv_partition(det, elements)
    tech = upto.technique_from_names(cfg.upto, classes=classes, unsafe=args.unsafe) if cfg.upto else None
    verdict = fixpoint.check_witness(w, b, tech, unsafe=args.unsafe)
    payload = verdict.to_json(nfa.format_subset)
    payload["technique"] = tech.name if tech else "none"
    if verdict.certified:
        lines = [f"certified: distance({nfa.format_subset(w.left)}, {nfa.format_subset(w.right)}) <= {fmt(w.bound)}"
                 if cfg.quantale.is_real else "certified",
                 f"pairs examined {verdict.pairs_examined}"]
    else:
        lines = [f"refuted: {verdict.reason}", f"pairs examined {verdict.pairs_examined}"]
        if verdict.pair is not None:
            lines.append(f"offending pair ({nfa.format_subset(verdict.pair[0])}, {nfa.format_subset(verdict.pair[1])}): "
                         f"d = {fmt(verdict.lhs)}, b(f(d)) = {fmt(verdict.rhs)}")
        if verdict.successor is not None:
            lines.append(f"weakest successor ({nfa.format_subset(verdict.successor[0])}, "
                         f"{nfa.format_subset(verdict.successor[1])})")
    _emit(args, payload, lines)
    return EXIT_OK if verdict.certified else EXIT_REFUTED


def cmd_oracle(args) -> int:
    nfa = load_nfa(args.automaton)
    s1, s2 = nfa.parse_subset(args.state1), nfa.parse_subset(args.state2)
    length = shortest_distinguishing_word(determinize(nfa), s1, s2, args.cap or 10**6)
    text = "equivalent" if length is None else str(length)
    _emit(args, {"word_length": length}, [text])
    return EXIT_OK


def bench_row(n: int, cfg: RunConfig) -> dict:
    nfa = two_chain_nfa(n)
    s1, s2 = nfa.subset(["x0"]), nfa.subset(["y0"])
    row: dict = {"n": n}
    t0 = time.perf_counter()
    try:
        res = distance(nfa, s1, s2, cfg)
        row["naive_pairs"] = len(res.pairs)
        row["naive_time"] = round(time.perf_counter() - t0, 6)
        naive_value = res(s1, s2)
    except CapExceeded:
        row["naive_pairs"] = row["naive_time"] = "cap"
        naive_value = None
    det = determinize(nfa)
    b = fixpoint.build_b(det, cfg.evaluation_map(2), cfg.max_enum, cfg.max_pivots)
    t0 = time.perf_counter()
    verdict = fixpoint.check_witness(two_chain_witness(n, cfg.c, cfg.quantale), b, upto.technique_from_names(["ref", "ctx-union"]))
    row["upto_pairs"] = verdict.pairs_examined if verdict.certified else "refuted"
    row["upto_time"] = round(time.perf_counter() - t0, 6)
    row["distance"] = naive_value if naive_value is not None else verdict.claim_value
    return row


BENCH_COLUMNS = ["n", "naive_pairs", "naive_time", "upto_pairs", "upto_time", "distance"]


def cmd_bench(args) -> int:
    cfg = _config(args)
    if cfg.quantale.id is QuantaleId.BOOL2:
        raise UsageError("bench runs the discounted distance; pick a real quantale")
    if args.n_min < 1 or args.n_max < args.n_min:
        raise UsageError("need 1 <= n-min <= n-max")
    rows = [bench_row(n, cfg) for n in range(args.n_min, args.n_max + 1)]
    if args.json:
        for row in rows:
            print(json.dumps(row, sort_keys=True))
    else:
        writer = csv.DictWriter(sys.stdout, BENCH_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: fmt(v) if isinstance(v, float) else v for k, v in row.items()})
    return EXIT_OK


# -- lift demo ------------------------------------------------------------------------------


def _relation(q: Quantale, data: dict) -> VRel:
    if "matrix" in data:
        return VRel.from_dense(q, [[q.coerce(v) for v in row] for row in data["matrix"]])
    return VRel.from_json(q, Carrier(int(data["size"])), data)


def _dist(raw) -> DistValue:
    if isinstance(raw, dict):
        return DistValue({int(k): float(v) for k, v in raw.items()})
    return DistValue([(int(x), float(m)) for x, m in raw])


def lift_demo(kind: str, data: dict, with_oracle: bool, cfg: RunConfig) -> list[dict]:
    q = Quantale.from_name(data.get("quantale", cfg.quantale.name))
    out = []
    if kind == "canonical":
        functor = data.get("functor", "pow")
        for raw in data["values"]:
            if functor == "pow":
                u, fid = PowValue(q.coerce(v) for v in raw), POW
            elif functor == "dist":
                u, fid = DistValue([(q.coerce(r), float(m)) for r, m in raw]), DIST
            elif functor == "machine":
                u, fid = MachineValue(bool(raw[0]), [q.coerce(v) for v in raw[1]]), machine(len(raw[1]))
            else:
                raise UsageError(f"unknown functor {functor!r}")
            out.append({"input": raw, "value": canonical_eval(fid, q, u)})
        return out

    r = _relation(q, data)
    ev_name = data.get("eval", "pow-canonical" if kind == "hausdorff" else "dist-expectation")
    try:
        ev = EvaluationMap(EvalKind(ev_name), q)
    except ValueError:
        raise UsageError(f"unknown evaluation map {ev_name!r}") from None
    for left, right in data["pairs"]:
        if kind == "hausdorff":
            t1, t2 = PowValue(int(x) for x in left), PowValue(int(x) for x in right)
            value = hausdorff(r, t1, t2) if ev.kind is EvalKind.POW_CANONICAL and q.is_real else \
                wasserstein(ev, r, t1, t2, cfg.max_enum)
            row = {"left": sorted(t1), "right": sorted(t2), "value": value}
            if with_oracle:
                row["oracle"] = oracles.pow_bruteforce(ev, r, t1, t2, cfg.max_enum)
        elif kind == "wasserstein":
            t1, t2 = _dist(left), _dist(right)
            value = wasserstein(ev, r, t1, t2, cfg.max_enum, cfg.max_pivots)
            row = {"left": left, "right": right, "value": value}
            if with_oracle:
                s1, s2 = t1.support(), t2.support()
                cost = [[r.get(x, y) for y in s2] for x in s1]
                m1, m2 = [t1.mass(x) for x in s1], [t2.mass(y) for y in s2]
                solve = oracles.bottleneck_lp if ev.kind is EvalKind.DIST_CANONICAL else oracles.transport_lp
                row["oracle"] = min(1.0, solve(m1, m2, cost))
        else:
            raise UsageError(f"unknown lift-demo kind {kind!r}")
        out.append(row)
    return out


def cmd_lift_demo(args) -> int:
    cfg = _config(args)
    try:
        data = json.loads(Path(args.inputs).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read inputs {args.inputs}: {exc}") from None
    try:
        rows = lift_demo(args.kind, data, args.oracle, cfg)
    except (KeyError, TypeError) as exc:
        raise UsageError(f"malformed lift-demo input: {exc!r}") from None
    if args.json:
        print(json.dumps([{k: _jsonable(v) for k, v in row.items()} for row in rows], sort_keys=True))
    else:
        for row in rows:
            line = f"{row.get('left', row.get('input'))} {row.get('right', '')} -> {fmt(row['value'])}".replace("  ", " ")
            if "oracle" in row:
                line += f" (oracle {fmt(row['oracle'])})"
            print(line)
    return EXIT_OK


# -- generators -----------------------------------------------------------------------------


def _write(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_gen_chains(args) -> int:
    _write(json.dumps(two_chain_nfa(args.n).to_json(), indent=2) + "\n", args.output)
    return EXIT_OK


def cmd_gen_witness(args) -> int:
    q = Quantale.from_name(args.quantale)
    w = two_chain_witness(args.n, args.c, q, args.bound)
    _write(json.dumps(w.to_json(two_chain_nfa(args.n)), indent=2) + "\n", args.output)
    return EXIT_OK


# -- parser ------------------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser, upto_flag: bool = False) -> None:
    p.add_argument("--quantale", default=None, help="bool2, unit-rev (default) or ext-rev")
    p.add_argument("--c", type=float, default=None, help="discount factor, 0 < c < 1 (default 0.5)")
    p.add_argument("--tol", type=float, default=fixpoint.DEFAULT_TOL)
    p.add_argument("--max-iter", type=int, default=fixpoint.DEFAULT_MAX_ITER)
    p.add_argument("--cap", type=int, default=None, help=f"pair enumeration cap (env {CAP_ENV})")
    p.add_argument("--config", help="JSON file with transport.max_pivots and coupling.max_enum")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    if upto_flag:
        p.add_argument("--upto", default="", help="comma-separated techniques, applied in the listed order")
        p.add_argument("--unsafe", action="store_true", help="allow techniques without a soundness basis")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="quantimetric", description="Quantale-valued behavioural distances for automata.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("distance", help="greatest-fixpoint distance between two subset states")
    p.add_argument("automaton")
    p.add_argument("state1", help="state name or comma-separated subset, e.g. x0 or {x0,x1}")
    p.add_argument("state2")
    p.add_argument("--oracle", action="store_true", help="also run the shortest-word oracle")
    _common(p)
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("check-witness", help="certify a witness relation up to techniques")
    p.add_argument("automaton")
    p.add_argument("witness")
    _common(p, upto_flag=True)
    p.set_defaults(func=cmd_check_witness)

    p = sub.add_parser("oracle", help="length of a shortest distinguishing word")
    p.add_argument("automaton")
    p.add_argument("state1")
    p.add_argument("state2")
    p.add_argument("--cap", type=int, default=None, help="node cap of the product search")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("bench", help="naive fixpoint vs witness certification on the chain family")
    p.add_argument("--n-min", type=int, default=2)
    p.add_argument("--n-max", type=int, default=10)
    _common(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("lift-demo", help="evaluate relation liftings on a small input file")
    p.add_argument("kind", choices=["hausdorff", "wasserstein", "canonical"])
    p.add_argument("inputs")
    p.add_argument("--oracle", action="store_true", help="compare with brute force")
    _common(p)
    p.set_defaults(func=cmd_lift_demo)

    p = sub.add_parser("gen-chains", help="write the two-chain example automaton")
    p.add_argument("n", type=int)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_gen_chains)

    p = sub.add_parser("gen-witness", help="write the sparse witness for the two-chain automaton")
    p.add_argument("n", type=int)
    p.add_argument("--c", type=float, default=0.5)
    p.add_argument("--quantale", default="unit-rev")
    p.add_argument("--bound", type=float, default=None, help="claimed bound (default c^n)")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_gen_witness)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if hasattr(args, "tol"):
        args.quantale_given = args.quantale is not None
        args.c_given = args.c is not None
        args.quantale = args.quantale or "unit-rev"
        args.c = 0.5 if args.c is None else args.c
    try:
        return args.func(args)
    except CapExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def entry() -> None:
    sys.exit(main())
