"""Command-line front end.

Subcommands: group, chars, good, barrier, simulate, sweep, gsh.
Exit codes: 0 success, 1 validation error, 2 construction failure,
3 verification failure.  Defaults can be collected in a JSON config file
(--config); explicit flags win over the file.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import fields

from . import barrier_search as bs
from . import goodness as good_mod
from . import race_simulator as sim
from .characters import character_group
from .residue_group import check_modulus, unit_group_structure

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONSTRUCTION = 2
EXIT_VERIFICATION = 3

_PARAM_FLAGS = {
    "sigma1": float,
    "sigma2": float,
    "beta1": float,
    "t": float,
    "gamma": float,
    "epsilon": float,
    "sigma": float,
    "tau": float,
    "truncation": int,
}


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="racebarrier")
    ap.add_argument("--config", help="JSON file with default parameter values")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("group", help="unit group structure and character count")
    g.add_argument("q", type=int)

    c = sub.add_parser("chars", help="character table summary")
    c.add_argument("q", type=int)

    gd = sub.add_parser("good", help="goodness certificate for odd m")
    gd.add_argument("m", type=int)
    gd.add_argument("--max", type=int, default=None, help="sweep all odd m up to this bound")
    gd.add_argument("--full-range", action="store_true", help="search j over [1, m-1]")
    gd.add_argument("--out", help="write certificate records to a file")

    b = sub.add_parser("barrier", help="synthesize a barrier for a triple")
    b.add_argument("q", type=int)
    b.add_argument("a1", type=int)
    b.add_argument("a2", type=int)
    b.add_argument("a3", type=int)
    b.add_argument("--construction", choices=["auto", "I", "II", "III", "GSH"], default="auto")
    b.add_argument("--out", help="barrier file path (JSON)")
    for flag, typ in _PARAM_FLAGS.items():
        b.add_argument(f"--{flag}", type=typ, default=None)

    s = sub.add_parser("simulate", help="verify a barrier file on a u grid")
    s.add_argument("barrier_file")
    s.add_argument("--u0", type=float, default=None)
    s.add_argument("--u1", type=float, default=None)
    s.add_argument("--samples", type=int, default=None)
    s.add_argument("--out", help="profile file path (CSV)")

    w = sub.add_parser("sweep", help="barrier census over all triples up to qmax")
    w.add_argument("qmax", type=int)
    w.add_argument("--jobs", type=int, default=None)
    w.add_argument("--out", help="census CSV path")

    gs = sub.add_parser("gsh", help="infinite construction for a triple")
    gs.add_argument("q", type=int)
    gs.add_argument("a1", type=int)
    gs.add_argument("a2", type=int)
    gs.add_argument("a3", type=int)
    gs.add_argument("--out", help="barrier file path (JSON)")
    for flag, typ in _PARAM_FLAGS.items():
        gs.add_argument(f"--{flag}", type=typ, default=None)
    return ap


def _params_from(args, config: dict) -> bs.BarrierParams:
    params = bs.BarrierParams()
    names = {f.name for f in fields(bs.BarrierParams)}
    for key, value in config.items():
        if key in names:
            setattr(params, key, value)
    for flag in _PARAM_FLAGS:
        value = getattr(args, flag, None)
        if value is not None and flag in names:
            setattr(params, flag, value)
    return params


def cmd_group(args, config) -> int:
    q = check_modulus(args.q)
    g = unit_group_structure(q)
    print(f"q = {q}: phi(q) = {g.phi}, exponent = {g.exponent}")
    cyclic = "cyclic" if len(g.generators) <= 1 else f"{len(g.generators)} generators"
    print(f"structure: {cyclic}")
    for gen, order in zip(g.generators, g.orders):
        print(f"  generator {gen} of order {order}")
    print(f"characters: {g.phi}")
    return EXIT_OK


def cmd_chars(args, config) -> int:
    q = check_modulus(args.q)
    chars = character_group(q)
    print(f"q = {q}: {len(chars)} characters (index: exponents, order)")
    for chi in chars:
        tag = " principal" if chi.is_principal else ""
        print(f"  {chi.index():3d}: {list(chi.exponents)} order {chi.order}{tag}")
    return EXIT_OK


def cmd_good(args, config) -> int:
    if args.max is not None:
        good, bad = [], []
        for m in range(3, args.max + 1, 2):
            cert = good_mod.is_good(m, full_range=args.full_range)
            (good if cert.good else bad).append(m)
        print(f"odd m in [3, {args.max}]: {len(good)} good, {len(bad)} not good")
        print(f"not good: {bad}")
        return EXIT_OK
    if args.m < 3 or args.m % 2 == 0:
        print("m must be odd and >= 3", file=sys.stderr)
        return EXIT_VALIDATION
    cert = good_mod.is_good(args.m, full_range=args.full_range)
    verdict = "GOOD" if cert.good else f"NOT GOOD, failing j: {sorted(cert.failing_j)}"
    print(f"m = {cert.m}: {verdict}")
    if args.out:
        with open(args.out, "w") as fh:
            for line in cert.lines():
                fh.write(line + "\n")
        print(f"certificate written to {args.out}")
    else:
        for line in cert.lines():
            print(" ", line)
    return EXIT_OK


def cmd_barrier(args, config) -> int:
    try:
        triple = bs.RaceTriple(args.q, args.a1, args.a2, args.a3)
    except ValueError as exc:
        print(f"invalid triple: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    params = _params_from(args, config)
    try:
        if args.construction == "auto":
            barrier = bs.find_barrier(triple, params)
        elif args.construction == "I":
            found = bs.find_equal_sum_set(triple)
            if found is None:
                raise bs.ConstructionError("no qualifying character set found")
            barrier = bs.construction_one(triple, found, params)
        elif args.construction == "II":
            spacing = bs.find_spacing_character(triple)
            if not isinstance(spacing, bs.SpacingCharacter):
                raise bs.ConstructionError(f"no spacing character: got {spacing}")
            barrier = bs.construction_two(triple, spacing, params)
        elif args.construction == "III":
            barrier = bs.construction_three(triple, params)
        else:
            barrier = bs.construction_gsh(triple, params)
    except (bs.ConstructionError, ArithmeticError, ValueError) as exc:
        print(f"construction failed: {exc}", file=sys.stderr)
        return EXIT_CONSTRUCTION
    _print_barrier(barrier)
    out = args.out or f"barrier_q{args.q}_{args.a1}_{args.a2}_{args.a3}.json"
    with open(out, "w") as fh:
        json.dump(bs.barrier_to_dict(barrier), fh, indent=1)
        fh.write("\n")
    print(f"barrier written to {out}")
    return EXIT_OK


def _print_barrier(barrier) -> None:
    x, y, z = barrier.excluded_ordering
    print(f"construction {barrier.construction} for q={barrier.q} triple {barrier.triple.residues}")
    if isinstance(barrier, bs.GshBarrier):
        print(f"  t = {barrier.t}, truncation J = {barrier.truncation}")
    else:
        print(f"  |B| = {barrier.size} zeros:")
        for zz in barrier.zeros:
            print(
                f"    chi{list(zz.character.exponents)} at {zz.sigma} + {zz.gamma}i"
                f" x{zz.multiplicity}"
            )
    print(f"  excluded ordering: pi({x}) > pi({y}) > pi({z})")
    for key, value in barrier.margins.items():
        print(f"  margin {key}: {value}")


def cmd_simulate(args, config) -> int:
    try:
        with open(args.barrier_file) as fh:
            barrier = bs.barrier_from_dict(json.load(fh))
    except OSError as exc:
        print(f"cannot read barrier file: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (KeyError, ValueError) as exc:
        print(f"malformed barrier file: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    if isinstance(barrier, bs.GshBarrier):
        u0 = args.u0 if args.u0 is not None else max(1000.0, barrier.margins.get("recommended_u0", 1000.0))
        u1 = args.u1 if args.u1 is not None else u0 + 50.0
        n = args.samples if args.samples is not None else 20000
        try:
            profile = sim.gsh_simulate(barrier, u0, u1, n)
        except sim.SimulationError as exc:
            print(f"verification failed: {exc}", file=sys.stderr)
            return EXIT_VERIFICATION
        print(f"samples: {len(profile.u)}, regime-2: {int(profile.regime2.sum())}, "
              f"controlled: {profile.controlled_total}")
        print(f"excluded-ordering raw occurrences: {profile.excluded_raw}")
        print(f"window phase bound: {profile.phase_bound_max:.4f} (<= 0.21)")
        print(f"tail constant C: {profile.tail_constant:.6g}")
        ok = profile.excluded_raw == 0
    else:
        gam = min(zz.gamma for zz in barrier.zeros)
        u0 = args.u0 if args.u0 is not None else 50.0
        u1 = args.u1 if args.u1 is not None else u0 + 10.0 * 2.0 * math.pi / gam
        n = args.samples if args.samples is not None else 10**5
        try:
            profile = sim.simulate(barrier, u0, u1, n)
        except sim.SimulationError as exc:
            print(f"simulation rejected: {exc}", file=sys.stderr)
            return EXIT_VALIDATION
        x, y, z = profile.excluded_ordering
        print(f"samples: {len(profile.u)} on [{u0}, {u1}]")
        print(f"excluded ordering pi({x}) > pi({y}) > pi({z}):")
        print(f"  raw occurrences: {profile.excluded_raw}")
        print(f"  robust occurrences (above remainder): {profile.excluded_robust}")
        print(f"  avoidance margin: {profile.margin:.6g}")
        print(f"  remainder bound: {profile.remainder:.6g}")
        print(f"  verdict: {'VERIFIED' if profile.robustly_excluded else 'VIOLATED'}")
        ok = profile.excluded_robust == 0
    if args.out:
        sim.write_profile(profile, args.out)
        print(f"profile written to {args.out}")
    if not ok:
        first = None
        import numpy as np

        if not isinstance(barrier, bs.GshBarrier):
            slack = np.minimum(profile.d1, profile.d2)
            idx = np.flatnonzero(slack > (profile.remainder or 0.0))
            if idx.size:
                first = profile.u[idx[0]]
        print(f"counterexample near u = {first}", file=sys.stderr)
        return EXIT_VERIFICATION
    return EXIT_OK


def _sweep_q(task) -> list[tuple]:
    q, params = task
    import itertools

    rows = []
    units = unit_group_structure(q).units
    for a1, a2, a3 in itertools.permutations(units, 3):
        triple = bs.RaceTriple(q, a1, a2, a3)
        try:
            barrier = bs.find_barrier(triple, params)
            margin = barrier.margins.get("verdict_margin", 0.0)
            rows.append((q, a1, a2, a3, barrier.construction, barrier.size, margin))
        except Exception as exc:  # keep the census complete; failures are data
            rows.append((q, a1, a2, a3, f"FAIL:{exc}", -1, 0.0))
    return rows


def cmd_sweep(args, config) -> int:
    if args.qmax < 5:
        print("qmax must be >= 5", file=sys.stderr)
        return EXIT_VALIDATION
    params = _params_from(args, config)
    qs = [q for q in range(5, args.qmax + 1) if q == 5 or q >= 7]
    tasks = [(q, params) for q in qs]
    rows = []
    with ProcessPoolExecutor(max_workers=args.jobs) as pool:
        for chunk in pool.map(_sweep_q, tasks):
            rows.extend(chunk)
    rows.sort(key=lambda r: r[:4])
    total = len(rows)
    failed = [r for r in rows if r[5] < 0]
    small = sum(1 for r in rows if 0 < r[5] <= 3)
    by_construction: dict[str, int] = {}
    for r in rows:
        by_construction[r[4]] = by_construction.get(r[4], 0) + 1
    print(f"triples: {total}, failures: {len(failed)}")
    print(f"constructions: {by_construction}")
    print(f"|B| <= 3: {small} ({small / total:.2%})")
    if args.out:
        import csv

        with open(args.out, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["q", "a1", "a2", "a3", "construction", "size", "margin"])
            wr.writerows(rows)
        print(f"census written to {args.out}")
    return EXIT_OK if not failed else EXIT_CONSTRUCTION


def cmd_gsh(args, config) -> int:
    try:
        triple = bs.RaceTriple(args.q, args.a1, args.a2, args.a3)
    except ValueError as exc:
        print(f"invalid triple: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    params = _params_from(args, config)
    try:
        barrier = bs.construction_gsh(triple, params)
    except bs.ConstructionError as exc:
        print(f"construction failed: {exc}", file=sys.stderr)
        return EXIT_CONSTRUCTION
    _print_barrier(barrier)
    out = args.out or f"gsh_q{args.q}_{args.a1}_{args.a2}_{args.a3}.json"
    with open(out, "w") as fh:
        json.dump(bs.barrier_to_dict(barrier), fh, indent=1)
        fh.write("\n")
    print(f"barrier written to {out}")
    return EXIT_OK


_COMMANDS = {
    "group": cmd_group,
    "chars": cmd_chars,
    "good": cmd_good,
    "barrier": cmd_barrier,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "gsh": cmd_gsh,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    config = {}
    if args.config:
        try:
            with open(args.config) as fh:
                config = json.load(fh)
        except (OSError, ValueError) as exc:
            print(f"cannot read config: {exc}", file=sys.stderr)
            return EXIT_VALIDATION
    try:
        return _COMMANDS[args.command](args, config)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
