"""Command-line front end: JSON lines on stdout, diagnostics on stderr.

Exit codes: 0 success / witness found, 1 definitive negative, 2 input
error, 3 precision exhausted, 4 inconclusive (randomized regime).
"""

import argparse
import json
import os
import sys

from .bounds import (
    d_plus_bound,
    n_fam_bound,
    truncation_level_bound,
)
from .crystal import PolarizedCrystal, hodge_data, newton_polygon
from .deviation import deviations, df_reduce
from .errors import CrystalError, PrecisionExhausted, SearchSpaceTooLarge
from .files import read_crystal
from .semilinear import DEFAULT_DMAX, hom_module, isom_search
from .stairs import build_stairs_datum, stairs_run
from .truncation import i_number_probe


def _out(obj):
    sys.stdout.write(json.dumps(obj, sort_keys=True) + "\n")


def _err(msg):
    sys.stderr.write(f"error: {msg}\n")


def _load(path, want_datum=False):
    try:
        return read_crystal(path, want_datum=want_datum)
    except (OSError, ValueError, CrystalError) as exc:
        _err(f"cannot read {path}: {exc}")
        raise SystemExit(2)


def cmd_polygon(args):
    obj = _load(args.file)
    C = obj.base if isinstance(obj, PolarizedCrystal) else obj
    try:
        hodge, s, h = hodge_data(C)
        if args.newton:
            poly = newton_polygon(C)
        else:
            poly = hodge
    except PrecisionExhausted as exc:
        _err(str(exc))
        return 3
    _out({
        "slopes": [[x.numerator, x.denominator, m] for x, m in poly.points],
        "s": s,
        "h": h,
    })
    return 0


def cmd_deviation(args):
    try:
        tau = [int(x) for x in args.tuple.split(",") if x.strip() != ""]
        if not tau:
            raise ValueError("empty tuple")
    except ValueError as exc:
        _err(f"bad tuple: {exc}")
        return 2
    s, w = deviations(tau)
    red = df_reduce(tau)
    _out({"S": s, "W": w, "rescale": red.rescale,
          "reduced": red.new_exponents})
    return 0


def cmd_bound(args):
    try:
        if args.pdiv is not None:
            r, d = args.pdiv
            val = truncation_level_bound("pdiv", r, args.p, d=d)
            formula = "2*d(r^2,1,2)+eps_p" if d not in (0, r) else "0"
        elif args.polarized is not None:
            val = truncation_level_bound("polarized", args.polarized, args.p)
            formula = "2*d(2d^2+d,1,2)+eps_p"
        elif args.rank is not None:
            if args.fam:
                val = n_fam_bound(args.rank, args.s, args.h_number, args.p)
                formula = "2*d(v,s,h)+eps_p"
            else:
                val = d_plus_bound(args.rank, args.s, args.h_number)
                formula = "b*(a-1)+D0(a,c)"
        else:
            _err("need --rank, --pdiv, or --polarized")
            return 2
    except CrystalError as exc:
        _err(str(exc))
        return 2
    _out({"bound": str(val), "formula": formula})
    return 0


def cmd_hom(args):
    C1 = _load(args.file1)
    C2 = _load(args.file2)
    if isinstance(C1, PolarizedCrystal):
        C1 = C1.base
    if isinstance(C2, PolarizedCrystal):
        C2 = C2.base
    try:
        H = hom_module(C1, C2, args.prec)
    except CrystalError as exc:
        _err(str(exc))
        return 2
    from .files import matrix_to_entries
    _out({
        "precision": H.precision,
        "exponents": H.profile,
        "free_rank": H.rank_free(),
        "basis": [matrix_to_entries(b) for b in H.basis],
    })
    return 0


def cmd_isom(args):
    C1 = _load(args.file1)
    C2 = _load(args.file2)
    if isinstance(C1, PolarizedCrystal) and isinstance(C2, PolarizedCrystal):
        from .truncation import polarized_isom_search
        try:
            res = polarized_isom_search(C1, C2, args.prec)
        except SearchSpaceTooLarge as exc:
            _err(str(exc))
            return 4
    else:
        if isinstance(C1, PolarizedCrystal):
            C1 = C1.base
        if isinstance(C2, PolarizedCrystal):
            C2 = C2.base
        try:
            res = isom_search(C1, C2, args.prec, seed=args.seed,
                              jobs=args.jobs)
        except CrystalError as exc:
            _err(str(exc))
            return 2
    found = res.witness is not None
    out = {"found": found, "regime": res.regime}
    if found:
        from .files import matrix_to_entries
        out["witness"] = matrix_to_entries(res.witness)
    _out(out)
    if found:
        return 0
    return 1 if res.regime == "exhaustive" else 4


def cmd_stairs(args):
    loaded = _load(args.file, want_datum=True)
    obj, datum = loaded
    C = obj.base if isinstance(obj, PolarizedCrystal) else obj
    import random
    from .plinalg import Matrix
    if args.twist_file:
        tw = _load(args.twist_file)
        g = (tw.base if isinstance(tw, PolarizedCrystal) else tw).B
    else:
        rng = random.Random(args.seed)
        ring = C.ring
        level = args.twist_level
        delta = Matrix(ring, [
            [ring.random_element(rng) * ring.p ** level
             for _ in range(C.rank)] for _ in range(C.rank)])
        g = Matrix.identity(ring, C.rank) + delta
    try:
        if datum is None:
            datum = build_stairs_datum(C, args.dmax)
        cert = stairs_run(C, g, datum, args.dmax)
    except CrystalError as exc:
        _err(str(exc))
        return 3
    ok = cert.reverify()
    from .files import matrix_to_entries
    _out({
        "verified": ok,
        "level": cert.level,
        "field_degree": cert.ring.q,
        "extension": cert.extension,
        "witness": matrix_to_entries(cert.witness),
    })
    return 0 if ok else 1


def cmd_probe(args):
    obj = _load(args.file)
    C = obj.base if isinstance(obj, PolarizedCrystal) else obj
    rep = i_number_probe(C, trials=args.trials, seed=args.seed,
                         dmax=args.dmax)
    _out(rep)
    return 0


def cmd_verify(args):
    if args.suite != "paper":
        _err(f"unknown suite {args.suite!r}")
        return 2
    from .verify import run_paper_suite
    results = run_paper_suite(jobs=args.jobs, seed=args.seed,
                              emit=_out, fast=args.fast)
    failed = [r for r in results if not r["ok"]]
    sys.stderr.write(
        f"{len(results) - len(failed)}/{len(results)} checks passed\n")
    return 1 if failed else 0


def build_parser():
    ap = argparse.ArgumentParser(
        prog="fcrystals",
        description="exact computations with F-crystals at finite precision",
    )
    sub = ap.add_subparsers(dest="command", required=True)
    dmax_default = int(os.environ.get("CRYSTAL_DMAX", str(DEFAULT_DMAX)))

    p = sub.add_parser("polygon", help="hodge/newton slopes of a crystal file")
    p.add_argument("file")
    grp = p.add_mutually_exclusive_group()
    grp.add_argument("--hodge", action="store_true", default=True)
    grp.add_argument("--newton", action="store_true")
    p.set_defaults(func=cmd_polygon)

    p = sub.add_parser("deviation", help="sign/value deviation of a tuple")
    p.add_argument("tuple", help="comma-separated integers")
    p.set_defaults(func=cmd_deviation)

    p = sub.add_parser("bound", help="effective torsion/truncation bounds")
    p.add_argument("--rank", type=int)
    p.add_argument("--s", type=int, default=0)
    p.add_argument("--h-number", type=int, default=0)
    p.add_argument("--fam", action="store_true",
                   help="report the family bound 2d+eps instead of d")
    p.add_argument("--pdiv", nargs=2, type=int, metavar=("R", "D"))
    p.add_argument("--polarized", type=int, metavar="D")
    p.add_argument("--p", type=int, default=2)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("hom", help="canonical Hom module of two files")
    p.add_argument("file1")
    p.add_argument("file2")
    p.add_argument("--prec", type=int, default=None)
    p.set_defaults(func=cmd_hom)

    p = sub.add_parser("isom", help="isomorphism search between two files")
    p.add_argument("file1")
    p.add_argument("file2")
    p.add_argument("--prec", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_isom)

    p = sub.add_parser("stairs", help="conjugate a twist back to phi")
    p.add_argument("file")
    p.add_argument("--twist-file")
    p.add_argument("--twist-level", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dmax", type=int, default=dmax_default)
    p.set_defaults(func=cmd_stairs)

    p = sub.add_parser("probe", help="i-number upper witness and evidence")
    p.add_argument("file")
    p.add_argument("--trials", type=int, default=6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dmax", type=int, default=dmax_default)
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("verify", help="run the built-in verification suite")
    p.add_argument("--suite", default="paper")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--fast", action="store_true",
                   help="reduced sample counts")
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv=None):
    ap = build_parser()
    if argv is None:
        argv = sys.argv[1:]
    argv = list(argv)
    # tuples like "-1,1,0" would otherwise parse as option flags
    if argv and argv[0] == "deviation" and "--" not in argv:
        argv.insert(1, "--")
    args = ap.parse_args(argv)
    try:
        code = args.func(args)
    except SystemExit as exc:
        raise
    except PrecisionExhausted as exc:
        _err(str(exc))
        code = 3
    except CrystalError as exc:
        _err(str(exc))
        code = 2
    raise SystemExit(code)


if __name__ == "__main__":
    main()
