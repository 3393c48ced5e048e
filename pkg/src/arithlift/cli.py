"""Command-line front end: field, lattice, eisenstein, lfun, verify.

All machine output is JSON (one object per run); --pretty indents it.
Exit codes: 0 success, 1 verification failure, 2 input error, 3 missing or
insufficient data.  Everything is deterministic; ARITHLIFT_THREADS controls
parallel batch checks in the verify suites.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

import mpmath as mp

from . import suites
from .eisenstein import holomorphic_part, s0_module
from .errors import ArithliftError, MissingCoefficient, ParseError
from .fqm import discriminant_module
from .hermlat import (
    HermitianLattice,
    RankOneSpec,
    aut_size,
    diff_set,
    incoherent_rank_one,
    rep_number,
    standard_incoherent,
)
from .lfunc import (
    AmbientSpace,
    KernelEvaluator,
    LSeriesSpec,
    build_vector_stream,
    completion_factor,
    direct_L,
    ingest_newform,
    scalar_vector_decomposition_check,
)
from .quadfield import new_field

Frac = Fraction

EXIT_OK = 0
EXIT_VERIFY_FAIL = 1
EXIT_INPUT = 2
EXIT_DATA = 3


def _emit(obj, pretty: bool):
    json.dump(obj, sys.stdout, indent=2 if pretty else None, default=str)
    sys.stdout.write("\n")


def _parse_s0(field, text):
    if not text:
        return standard_incoherent(field)
    inv = {}
    for part in text.split(","):
        p, v = part.split("=")
        inv[int(p)] = int(v)
    return incoherent_rank_one(field, inv)


def cmd_field(args) -> int:
    field = new_field(args.d)
    dps = max(15, args.prec_bits * 3 // 10)
    out = {
        "d": field.d,
        "h": field.h,
        "w": field.w,
        "o": field.o_dk,
        "prime_divisors": field.prime_divisors_of_D,
        "class_reps": [r.to_json() for r in field.ideal_class_reps()],
        "L_chi_1": float(field.dirichlet_L(1, dps=dps)),
        "Lprime_over_L_chi_0": float(field.lchi_log_derivative_at_0(dps=dps)),
    }
    _emit(out, args.pretty)
    return EXIT_OK


def cmd_lattice(args) -> int:
    with open(args.lattice) as fh:
        obj = json.load(fh)
    field = new_field(obj["discriminant"])
    L = HermitianLattice.from_json(field, obj)
    out = {"discriminant": field.d, "rank": L.rank}
    if args.rep is not None:
        supp = tuple(int(p) for p in args.ideal.split(",")) if args.ideal else ()
        r_ideal = field.ramified_product_ideal(supp)
        out["rep_number"] = rep_number(L, Frac(args.rep), r_ideal)
    if args.aut:
        out["aut_size"] = aut_size(L)
    if args.diff is not None:
        s0 = _parse_s0(field, args.s0)
        out["diff_set"] = sorted(diff_set(s0, Frac(args.diff)).primes)
    if args.module:
        out["module_size"] = discriminant_module(L).size()
    _emit(out, args.pretty)
    return EXIT_OK


def cmd_eisenstein(args) -> int:
    field = new_field(args.d)
    s0 = _parse_s0(field, args.inv)
    eis = holomorphic_part(s0, Frac(args.max))
    module = s0_module(s0)
    dps = max(15, args.prec_bits * 3 // 10)
    lchi = field.lchi_log_derivative_at_0(dps=dps)
    rows = []
    for m in sorted(eis.table):
        fn = eis.table[m]
        rows.append(
            {
                "m": str(m),
                "coefficients": [
                    {
                        "mu_index": i,
                        "symbolic": str(a),
                        "numeric": float(a.evaluate(field=field, lchi_value=lchi, dps=dps)),
                    }
                    for i, a in enumerate(fn)
                    if not a.is_zero()
                ],
            }
        )
    _emit(
        {
            "d": field.d,
            "invariants": {str(p): s0.inv_p(p) for p in field.prime_divisors_of_D},
            "module_size": module.size(),
            "table": rows,
        },
        args.pretty,
    )
    return EXIT_OK


def cmd_lfun(args) -> int:
    field = new_field(args.d)
    g = ingest_newform(args.newform, field, args.weight)
    if args.lattice:
        with open(args.lattice) as fh:
            L = HermitianLattice.from_json(field, json.load(fh))
    else:
        L = HermitianLattice.rank1_principal(field)
    s0 = _parse_s0(field, args.s0)
    space = AmbientSpace.make(s0, L)
    jmax = min(args.terms, g.mmax)
    stream = build_vector_stream(g, space, L, jmax)
    spec = LSeriesSpec(field, g.n, stream)
    out = {"d": field.d, "weight": g.n, "terms": jmax}
    ev = KernelEvaluator(spec)
    if args.eval is not None:
        s = float(args.eval)
        out["lambda_star"] = complex(ev.lambda_star(s))
        try:
            dval, tail = direct_L(stream, g.n, field.D, s)
            out["direct"] = complex(dval)
            out["direct_tail_bound"] = tail
            out["completion_factor"] = complex(completion_factor(field, g.n, s))
        except ArithliftError:
            pass
    if args.deriv0:
        val, spread = ev.lambda_star_derivative_at_0()
        out["lambda_star_prime_0"] = val
        out["derivative_spread"] = spread
        out["L_prime_0"] = ev.l_prime_at_0()
    if args.decompose is not None:
        res = scalar_vector_decomposition_check(g, L, s0, float(args.decompose), jmax)
        out["decomposition"] = {
            "lhs": complex(res["lhs"]),
            "rhs": complex(res["rhs"]),
            "residual": res["residual"],
            "tail_lhs": res["tail_lhs"],
        }
    _emit(out, args.pretty)
    return EXIT_OK


def cmd_verify(args) -> int:
    names = list(suites.SUITES) if args.suite == "all" else [args.suite]
    kwargs = {}
    if args.perturb:
        for name in names:
            if name in ("local", "proper"):
                kwargs[name] = {"perturb": True}
    report = suites.run_suites(names, **kwargs)
    if not args.full_report:
        for name, suite in report["suites"].items():
            suite["results"] = [r for r in suite["results"] if not r["pass"]] or [
                {"name": f"{name}: all checks passed", "pass": True}
            ]
    _emit(report, args.pretty)
    return EXIT_OK if report["all_pass"] else EXIT_VERIFY_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="arithlift")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--pretty", action="store_true", help="indent JSON output")
    common.add_argument(
        "--prec", dest="prec_bits", type=int, default=80, help="precision bits"
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def add_parser(name, **kw):
        return sub.add_parser(name, parents=[common], **kw)

    p = add_parser("field", help="field invariants and L-values")
    p.add_argument("-d", type=int, required=True)
    p.set_defaults(func=cmd_field)

    p = add_parser("lattice", help="lattice queries")
    p.add_argument("lattice", help="lattice JSON file")
    p.add_argument("--rep", help="representation number at this norm")
    p.add_argument("--ideal", help="r as comma-separated ramified primes")
    p.add_argument("--aut", action="store_true")
    p.add_argument("--diff", help="Diff set of this norm")
    p.add_argument("--s0", help="invariants like 7=-1,3=-1")
    p.add_argument("--module", action="store_true")
    p.set_defaults(func=cmd_lattice)

    p = add_parser("eisenstein", help="a+ coefficient table")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--inv", help="invariants like 7=-1")
    p.add_argument("--max", type=int, default=3)
    p.set_defaults(func=cmd_eisenstein)

    p = add_parser("lfun", help="Rankin-Selberg evaluations")
    p.add_argument("--newform", required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--weight", type=int, default=2)
    p.add_argument("--lattice")
    p.add_argument("--s0")
    p.add_argument("--terms", type=int, default=10**4)
    p.add_argument("--eval", help="evaluate Lambda*(s) here")
    p.add_argument("--deriv0", action="store_true")
    p.add_argument("--decompose", help="decomposition residual at this s")
    p.set_defaults(func=cmd_lfun)

    p = add_parser("verify", help="identity suites")
    p.add_argument(
        "--suite",
        default="all",
        choices=sorted(suites.SUITES) + ["all"],
    )
    p.add_argument("--perturb", action="store_true", help="test hook: inject a failure")
    p.add_argument("--full-report", action="store_true")
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, MissingCoefficient) as exc:
        _emit({"error": str(exc)}, args.pretty)
        return EXIT_DATA
    except (ArithliftError, OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        _emit({"error": str(exc)}, args.pretty)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
