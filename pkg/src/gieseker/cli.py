"""Command-line front end.

Exit status: 0 on success, 1 for malformed input or an unmet precondition,
2 when a mathematical property fails on an instance (the offending instance
is printed with the report).
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Dict, List, Optional, Tuple

from .chainbundle import (
    ChainBundle,
    LineBundleOnChain,
    admissibility_report,
    is_admissible,
    line_tensor_degree,
    random_chain,
    reverse,
    section_space,
    subchain,
    v_image_check,
)
from .correspondence import (
    InvariantFault,
    StructuralError,
    child_seed,
    contract_step,
    gi_to_gvbd,
    gvbd_to_gi,
    insert_step,
    normal_form_bf,
    random_gi,
    roundtrip_check,
)
from .exactlin import Matrix
from .geniso import GeneralizedIsomorphism, grassmannian_point, random_bf, validate_bf, validate_gi
from .gvbd import GiesekerDatum, admissible_pair, datum_equivalent, extremal_degrees, random_datum

EXIT_OK, EXIT_INPUT, EXIT_PROPERTY = 0, 1, 2


class InputError(Exception):
    pass


# ---------------------------------------------------------------------------
# I/O


def _read_json(path: str):
    try:
        if path == "-":
            text = sys.stdin.read()
        else:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        return json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read JSON from {path}: {exc}") from exc


def parse_object(obj):
    """Dispatch on the distinguishing key of each schema."""
    if not isinstance(obj, dict):
        raise InputError("top-level JSON value must be an object")
    try:
        if "side1" in obj:
            return GiesekerDatum.from_json(obj)
        if "mu" in obj:
            return GeneralizedIsomorphism.from_json(obj)
        if "degrees" in obj:
            if "v" not in obj:
                raise ValueError("missing schema version 'v'")
            return ChainBundle.from_json(obj)
    except (ValueError, TypeError, KeyError) as exc:
        raise InputError(str(exc)) from exc
    raise InputError("unrecognized object: expected a chain, a datum or a generalized isomorphism")


def _emit(payload) -> None:
    json.dump(payload, sys.stdout, sort_keys=True)
    sys.stdout.write("\n")


# ---------------------------------------------------------------------------
# commands


def cmd_check_admissible(args) -> int:
    obj = parse_object(_read_json(args.input))
    if isinstance(obj, GiesekerDatum):
        from .gvbd import concatenated_chain

        obj = concatenated_chain(obj)
    if not isinstance(obj, ChainBundle):
        raise InputError("check-admissible expects a chain or a datum")
    report = admissibility_report(obj)
    agree = len(set(report.values())) == 1
    out = dict(report, agree=agree)
    if not agree:
        out["counterexample"] = obj.to_json()
    _emit(out)
    return EXIT_OK if agree else EXIT_PROPERTY


def cmd_to_gi(args) -> int:
    obj = parse_object(_read_json(args.input))
    if not isinstance(obj, GiesekerDatum):
        raise InputError("to-gi expects a Gieseker datum")
    if not admissible_pair(obj):
        raise InputError("datum is not admissible")
    _emit(gvbd_to_gi(obj).to_json())
    return EXIT_OK


def cmd_to_gvbd(args) -> int:
    obj = parse_object(_read_json(args.input))
    if not isinstance(obj, GeneralizedIsomorphism):
        raise InputError("to-gvbd expects a generalized isomorphism")
    problems = validate_gi(obj)
    if problems:
        raise InputError("invalid generalized isomorphism: " + "; ".join(problems))
    _emit(gi_to_gvbd(obj).to_json())
    return EXIT_OK


def cmd_roundtrip(args) -> int:
    obj = parse_object(_read_json(args.input))
    if isinstance(obj, GiesekerDatum) and not admissible_pair(obj):
        raise InputError("datum is not admissible")
    if isinstance(obj, GeneralizedIsomorphism):
        problems = validate_gi(obj)
        if problems:
            raise InputError("invalid generalized isomorphism: " + "; ".join(problems))
    if isinstance(obj, ChainBundle):
        raise InputError("roundtrip expects a datum or a generalized isomorphism")
    report = roundtrip_check(obj, seed=args.seed)
    out = report.to_json()
    if not report.ok:
        out["counterexample"] = obj.to_json()
    _emit(out)
    return EXIT_OK if report.ok else EXIT_PROPERTY


def cmd_grass(args) -> int:
    obj = parse_object(_read_json(args.input))
    if isinstance(obj, GiesekerDatum):
        if not admissible_pair(obj):
            raise InputError("datum is not admissible")
        obj = gvbd_to_gi(obj)
    if not isinstance(obj, GeneralizedIsomorphism):
        raise InputError("grass expects a generalized isomorphism or a datum")
    problems = validate_gi(obj)
    if problems:
        raise InputError("invalid generalized isomorphism: " + "; ".join(problems))
    q, dim_q = grassmannian_point(obj)
    out = {"q": q.to_json(), "dimQ": dim_q}
    if dim_q != obj.n:
        out["counterexample"] = obj.to_json()
        _emit(out)
        return EXIT_PROPERTY
    _emit(out)
    return EXIT_OK


def cmd_random(args) -> int:
    try:
        datum = random_datum(args.n, args.len1, args.len2, args.seed)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    _emit(datum.to_json())
    return EXIT_OK


# ---------------------------------------------------------------------------
# selftest


def _shape(rng: random.Random, n: int, cap: Optional[int] = None) -> Tuple[int, int]:
    total = rng.randint(0, n if cap is None else min(n, cap))
    len1 = rng.randint(0, total)
    return len1, total - len1


def prop_admissibility_core(seed: int, n: int):
    """Transversality and the two-ended vanishing test agree."""
    rng = random.Random(seed)
    cb = random_chain(n, rng.randint(1, n), seed, require_admissible=rng.random() < 0.5)
    return is_admissible(cb, "definition") == is_admissible(cb, "vanishing"), cb


def prop_admissibility_dimension(seed: int, n: int):
    """All three methods agree, and non-admissible chains have fewer sections."""
    rng = random.Random(seed)
    cb = random_chain(n, rng.randint(1, n), seed, require_admissible=rng.random() < 0.5)
    rep = admissibility_report(cb)
    dim = section_space(cb, True, False).dim
    expected = dim == sum(cb.degrees) if rep["definition"] else dim < sum(cb.degrees)
    return len(set(rep.values())) == 1 and expected, cb


def prop_v_image(seed: int, n: int):
    rng = random.Random(seed)
    cb = random_chain(n, rng.randint(1, n), seed)
    return v_image_check(cb) and section_space(cb, True, False).dim == sum(cb.degrees), cb


def prop_subchains(seed: int, n: int):
    rng = random.Random(seed)
    cb = random_chain(n, rng.randint(1, n), seed)
    ok = cb.r <= n and is_admissible(reverse(cb), "vanishing")
    for a in range(1, cb.r + 1):
        for b in range(a, cb.r + 1):
            ok = ok and is_admissible(subchain(cb, a, b), "vanishing")
    return ok, cb


def prop_contraction(seed: int, n: int):
    rng = random.Random(seed)
    len1, len2 = _shape(rng, n)
    cur = random_datum(n, len1, len2, child_seed(seed, 0))
    for k in (1, 2):
        other = 3 - k
        for i in range(n, 0, -1):
            t = n - i + 1
            before = cur.side(k)
            nxt, bf = contract_step(cur, k, t)
            if before.r and before.degrees[-1] == t:
                after = nxt.side(k)
                if after.r != before.r - 1:
                    return False, cur
                if before.r >= 2 and after.degrees[-1] != before.degrees[-1] + before.degrees[-2]:
                    return False, cur
                if extremal_degrees(nxt)[k - 1] <= t:
                    return False, cur
                if nxt.side(other) != cur.side(other) or not admissible_pair(nxt):
                    return False, cur
                if validate_bf(bf) or bf.bf_rank != i - 1:
                    return False, cur
            cur = nxt
    return True, cur


def prop_insert_contract(seed: int, n: int):
    rng = random.Random(seed)
    len1, len2 = _shape(rng, n)
    cur = random_datum(n, len1, len2, child_seed(seed, 0))
    for k in (1, 2):
        for i in range(n, 0, -1):
            nxt, bf = contract_step(cur, k, n - i + 1)
            if bf.mu == 0:
                back = insert_step(nxt, k, bf, i)
                if contract_step(back, k, n - i + 1) != (nxt, bf):
                    return False, cur
                if not datum_equivalent(back, cur, seed=seed):
                    return False, cur
            cur = nxt
    return True, cur


def prop_normal_form(seed: int, n: int):
    rng = random.Random(seed)
    rank = rng.randint(0, n - 1)
    bf = random_bf(n, rank, rng.choice([0, 0, 1, 2]), rng)
    d = n - rank
    p, q = normal_form_bf(bf)
    top = Matrix.diag([bf.mu] * d + [1] * (n - d))
    bottom = Matrix.diag([1] * d + [bf.mu] * (n - d))
    ok = not validate_bf(bf) and q @ bf.f @ p.inverse() == top and p @ bf.g @ q.inverse() == bottom
    return ok, None


def prop_roundtrip(seed: int, n: int):
    n = min(n, 4)
    rng = random.Random(seed)
    len1, len2 = _shape(rng, n)
    datum = random_datum(n, len1, len2, child_seed(seed, 0))
    gi = gvbd_to_gi(datum)
    ok = not validate_gi(gi)
    ok = ok and len(gi.mu_zeros()) == datum.side1.r and len(gi.lambda_zeros()) == datum.side2.r
    for attempt in range(2):
        s = child_seed(seed, 1 + attempt)
        if roundtrip_check(datum, seed=s).ok and roundtrip_check(gi, seed=s).ok:
            return ok, datum
    return False, datum


def prop_grassmannian(seed: int, n: int):
    gi = random_gi(n, seed, fix_base=bool(seed % 2))
    _, dim_q = grassmannian_point(gi)
    return dim_q == n and not validate_gi(gi), gi


def prop_degree_additivity(seed: int, n: int):
    rng = random.Random(seed)
    r = rng.randint(1, 6)
    a = LineBundleOnChain(tuple(rng.randint(-5, 5) for _ in range(r)))
    b = LineBundleOnChain(tuple(rng.randint(-5, 5) for _ in range(r)))
    t = a.tensor(b)
    ok = line_tensor_degree(a, b) == a.degree() + b.degree()
    ok = ok and all(x == y + z for x, y, z in zip(t.degrees, a.degrees, b.degrees))
    return ok, None


PROPERTIES: Dict[str, Callable] = {
    "admissibility_core": prop_admissibility_core,
    "admissibility_dimension": prop_admissibility_dimension,
    "v_image": prop_v_image,
    "subchains": prop_subchains,
    "contraction": prop_contraction,
    "insert_contract": prop_insert_contract,
    "normal_form": prop_normal_form,
    "roundtrip": prop_roundtrip,
    "grassmannian": prop_grassmannian,
    "degree_additivity": prop_degree_additivity,
}


def _trial(job) -> Tuple[int, List[Tuple[str, bool, Optional[dict]]]]:
    index, seed, max_n, names = job
    s = child_seed(seed, index)
    n = 1 + s % max_n
    out = []
    for name in names:
        try:
            ok, witness = PROPERTIES[name](child_seed(s, name), n)
        except (InvariantFault, StructuralError, RuntimeError) as exc:
            ok, witness = False, {"error": repr(exc)}
        if ok:
            out.append((name, True, None))
        else:
            blob = witness.to_json() if hasattr(witness, "to_json") else witness
            out.append((name, False, {"trial": index, "n": n, "instance": blob}))
    return index, out


def run_selftest(trials: int, max_n: int, seed: int, parallel: bool = False, exclude=()) -> dict:
    names = [p for p in PROPERTIES if p not in set(exclude)]
    jobs = [(i, seed, max_n, names) for i in range(trials)]
    if parallel:
        with ProcessPoolExecutor() as pool:
            results = list(pool.map(_trial, jobs))
    else:
        results = [_trial(j) for j in jobs]
    results.sort(key=lambda r: r[0])
    counts = {name: {"pass": 0, "fail": 0} for name in names}
    counterexamples = []
    for _, rows in results:
        for name, ok, ce in rows:
            counts[name]["pass" if ok else "fail"] += 1
            if ce is not None and len(counterexamples) < 5:
                counterexamples.append(dict(ce, property=name))
    ok = all(c["fail"] == 0 for c in counts.values())
    return {"ok": ok, "trials": trials, "max_n": max_n, "seed": seed, "properties": counts, "counterexamples": counterexamples}


def cmd_selftest(args) -> int:
    if args.trials < 1:
        raise InputError("--trials must be at least 1")
    if not 1 <= args.max_n <= 8:
        raise InputError("--max-n must lie in [1, 8]")
    unknown = set(args.exclude) - set(PROPERTIES)
    if unknown:
        raise InputError(f"unknown properties: {sorted(unknown)}")
    summary = run_selftest(args.trials, args.max_n, args.seed, args.parallel, args.exclude)
    _emit(summary)
    return EXIT_OK if summary["ok"] else EXIT_PROPERTY


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gieseker", description="Exact fiber calculus for Gieseker bundle data.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, help_text in (
        ("check-admissible", cmd_check_admissible, "admissibility verdicts of a chain (or a datum's glued chain)"),
        ("to-gi", cmd_to_gi, "datum -> generalized isomorphism"),
        ("to-gvbd", cmd_to_gvbd, "generalized isomorphism -> datum"),
        ("roundtrip", cmd_roundtrip, "round trip report for a datum or generalized isomorphism"),
        ("grass", cmd_grass, "normalized Grassmannian quotient and dim Q"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("input", help="JSON file, or - for standard input")
        if name == "roundtrip":
            p.add_argument("--seed", type=int, default=0)
        p.set_defaults(func=fn)
    p = sub.add_parser("random", help="seeded random admissible datum")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--len1", type=int, required=True)
    p.add_argument("--len2", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=cmd_random)
    p = sub.add_parser("selftest", help="run the property suite")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--max-n", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--parallel", action="store_true")
    p.add_argument("--exclude", action="append", default=[], metavar="PROPERTY", help="skip a property (repeatable)")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (InputError, StructuralError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InvariantFault as exc:
        print(f"property violation: {exc}", file=sys.stderr)
        return EXIT_PROPERTY


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
