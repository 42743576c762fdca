"""Command-line front end.

Exit status: 0 success, 1 usage error or regression mismatch, 2 invariance
conditions not met (including inert level primes and primes dividing the
conductor), 3 degenerate discriminant, 4 precision failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources

from . import classpoly, etaquot, galois_plan, qforms
from .errors import (
    CMEtaError,
    DegenerateDiscriminant,
    InertPrime,
    InvalidArgument,
    InvarianceConditionsUnmet,
    NotTotallyRamified,
    PrecisionFailure,
    UnsupportedConductor,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONDITIONS = 2
EXIT_DEGENERATE = 3
EXIT_PRECISION = 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _primes(text):
    try:
        return tuple(int(p) for p in text.replace(" ", "").split(",") if p)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of primes, got {text!r}")


def _prec(text):
    if text == "auto":
        return None
    try:
        bits = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"precision must be 'auto' or a number of bits, got {text!r}")
    if bits < 64:
        raise argparse.ArgumentTypeError("precision must be at least 64 bits")
    return bits


def build_parser():
    parser = _Parser(prog="cm-eta", description="Class polynomials of multiple eta-quotients.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, primes=True):
        p.add_argument("-D", "--discriminant", type=int, required=True, help="negative discriminant")
        if primes:
            p.add_argument("-p", "--primes", type=_primes, required=True, help="level primes, e.g. 5,7")
            p.add_argument("-e", "--exponent", type=int, default=None, help="exponent e dividing s (default s)")
        p.add_argument("--format", choices=("text", "json"), default="text")

    p = sub.add_parser("classpoly", help="compute the (root-reduced) class polynomial")
    common(p)
    p.add_argument("--prec", type=_prec, default=None, help="'auto' (default) or bits")
    p.add_argument("--workers", type=int, default=1, help="parallel evaluation processes")

    p = sub.add_parser("check", help="report which invariance condition applies")
    common(p)

    p = sub.add_parser("classgroup", help="class number, structure and reduced forms")
    common(p, primes=False)

    p = sub.add_parser("nsystem", help="the n-system used for a given quotient")
    common(p)

    p = sub.add_parser("eval", help="singular values at the n-system forms")
    common(p)
    p.add_argument("--index", type=int, default=None, help="only this n-system entry")
    p.add_argument("--prec", type=_prec, default=None, help="bits (default 128)")
    p.add_argument("--digits", type=int, default=20)

    p = sub.add_parser("regress", help="run the built-in regression corpus")
    p.add_argument("--corpus", default=None, help="alternative corpus file")
    p.add_argument("--format", choices=("text", "json"), default="text")
    return parser


def _emit(args, text, data, out):
    if args.format == "json":
        out.write(dump_json(data))
    else:
        out.write(text.rstrip("\n") + "\n")


def dump_json(data):
    return json.dumps(data, indent=2, ensure_ascii=False) + "\n"


def _spec(args):
    return etaquot.make_spec(args.primes, args.exponent)


def cmd_classpoly(args, out):
    cap = classpoly.precision_cap()
    poly = classpoly.compute_class_poly(
        args.discriminant, args.primes, args.exponent, prec=args.prec, workers=args.workers, prec_cap=cap
    )
    spec = etaquot.make_spec(poly.primes, poly.e)
    plan = galois_plan.build_plan(args.discriminant, spec)
    for warning in plan.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    if plan.predicted_constant is None:
        check = "no prediction"
    else:
        check = "ok" if poly.constant_term == plan.predicted_constant else "MISMATCH"
        check = f"predicted {plan.predicted_constant}, {check}"
    label = "H" if poly.root_power == 1 else f"H^(1/{poly.root_power})"
    lines = [
        f"{label} for {spec}, D = {poly.D}",
        f"degree {poly.degree}, root_power {poly.root_power}, k' = {plan.k_prime}, domain {poly.domain}",
        f"{poly}",
        f"constant coefficient: {_fmt_coeff(poly.constant_term)} ({check})",
        f"residual: {poly.residual:.3e} at {poly.prec} bits",
        f"squarefree: {'yes' if poly.squarefree else 'no'}",
    ]
    _emit(args, "\n".join(lines), poly.to_json_dict(), out)
    return EXIT_OK


def _fmt_coeff(c):
    if isinstance(c, tuple):
        return f"{c[0]} + {c[1]}w"
    return str(c)


def cmd_check(args, out):
    spec = _spec(args)
    D = qforms.check_discriminant(args.discriminant)
    result = etaquot.check_invariance(spec, D)
    problems = etaquot.side_conditions(spec, D)
    ok = result.ok and not problems
    data = {
        "discriminant": D,
        "primes": list(spec.primes),
        "exponent": spec.e,
        "s": spec.s,
        "n": spec.n,
        "ok": ok,
        "clause": result.clause,
        "reason": result.reason,
        "side_conditions": problems,
    }
    if ok:
        text = f"{spec}, D = {D}: conditions met ({result.clause}); level n = {spec.n}"
    else:
        reasons = ([result.reason] if not result.ok else []) + problems
        text = f"{spec}, D = {D}: conditions not met: " + "; ".join(reasons)
    _emit(args, text, data, out)
    return EXIT_OK if ok else EXIT_CONDITIONS


def cmd_classgroup(args, out):
    group = qforms.class_group(args.discriminant)
    fundamental, conductor = qforms.discriminant_decompose(args.discriminant)
    structure = " x ".join(map(str, group.structure)) or "1"
    lines = [
        f"D = {group.D} (fundamental {fundamental}, conductor {conductor})",
        f"h = {group.h}, structure {structure}",
    ]
    lines += [f"  {f!r}  order {group.order(f)}" for f in group.forms]
    data = {
        "discriminant": group.D,
        "fundamental": fundamental,
        "conductor": conductor,
        "h": group.h,
        "structure": list(group.structure),
        "forms": [list(f) for f in group.forms],
    }
    _emit(args, "\n".join(lines), data, out)
    return EXIT_OK


def cmd_nsystem(args, out):
    spec = _spec(args)
    ns = etaquot.spec_nsystem(args.discriminant, spec)
    group = ns.group
    lines = [f"{ns.n}-system for {spec}, D = {ns.D} (N = {ns.N}, norm-N form {ns.nf!r})"]
    for f, j in zip(ns.forms, ns.class_index):
        lines.append(f"  {f!r}  ~ {group.forms[j]!r}")
    data = {
        "discriminant": ns.D,
        "n": ns.n,
        "N": ns.N,
        "norm_form": list(ns.nf),
        "forms": [list(f) for f in ns.forms],
        "classes": [list(group.forms[j]) for j in ns.class_index],
    }
    _emit(args, "\n".join(lines), data, out)
    return EXIT_OK


def cmd_eval(args, out):
    spec = _spec(args)
    ns = etaquot.spec_nsystem(args.discriminant, spec)
    prec = args.prec or 128
    indices = range(len(ns)) if args.index is None else [args.index]
    rows, lines = [], []
    for i in indices:
        if not 0 <= i < len(ns):
            raise InvalidArgument(f"index {i} out of range 0..{len(ns) - 1}")
        f = ns.forms[i]
        value = etaquot.eval_w(spec, f.tau(prec + 64), prec)
        re = f"{value.real:.{args.digits}g}"
        im = f"{value.imag:.{args.digits}g}"
        rows.append({"index": i, "form": list(f), "re": re, "im": im})
        lines.append(f"  {i:3d} {f!r}: {re} {'+' if not im.startswith('-') else '-'} {im.lstrip('-')}i")
    header = f"{spec} at the {ns.n}-system of D = {ns.D} ({prec} bits)"
    _emit(args, "\n".join([header] + lines), {"discriminant": ns.D, "values": rows}, out)
    return EXIT_OK


def load_corpus(path=None):
    if path is None:
        text = resources.files("cm_eta").joinpath("data/corpus.json").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    return json.loads(text)["cases"]


def expected_polynomial(case):
    return classpoly.ClassPolynomial.from_json_dict(
        {
            "discriminant": case["D"],
            "primes": case["primes"],
            "exponent": case["e"],
            "root_power": case["root_power"],
            "domain": case["domain"],
            "coefficients": case["coefficients"],
            "residual": 0.0,
            "squarefree": case["squarefree"],
        }
    )


def run_case(case):
    """``(passed, message)`` for one corpus entry."""
    expected = expected_polynomial(case)
    try:
        got = classpoly.compute_class_poly(case["D"], case["primes"], case["e"])
    except CMEtaError as exc:
        return False, f"{type(exc).__name__}: {exc}"
    mismatches = []
    for attr in ("root_power", "domain", "coefficients", "squarefree"):
        if getattr(got, attr) != getattr(expected, attr):
            mismatches.append(f"{attr}: got {getattr(got, attr)}, expected {getattr(expected, attr)}")
    if mismatches:
        return False, "; ".join(mismatches)
    return True, f"degree {got.degree}, residual {got.residual:.1e}"


def cmd_regress(args, out):
    cases = load_corpus(args.corpus)
    results = []
    for case in cases:
        ok, message = run_case(case)
        results.append({"name": case["name"], "passed": ok, "detail": message})
    failed = sum(not r["passed"] for r in results)
    lines = [f"{'PASS' if r['passed'] else 'FAIL'}  {r['name']}: {r['detail']}" for r in results]
    lines.append(f"{len(results) - failed}/{len(results)} cases passed")
    _emit(args, "\n".join(lines), {"cases": results, "failed": failed}, out)
    return EXIT_OK if failed == 0 else EXIT_USAGE


COMMANDS = {
    "classpoly": cmd_classpoly,
    "check": cmd_check,
    "classgroup": cmd_classgroup,
    "nsystem": cmd_nsystem,
    "eval": cmd_eval,
    "regress": cmd_regress,
}


def exit_code(exc):
    if isinstance(exc, (InvarianceConditionsUnmet, InertPrime, UnsupportedConductor)):
        return EXIT_CONDITIONS
    if isinstance(exc, (DegenerateDiscriminant, NotTotallyRamified)):
        return EXIT_DEGENERATE
    if isinstance(exc, PrecisionFailure):
        return EXIT_PRECISION
    return EXIT_USAGE


def main(argv=None, out=None):
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args, out)
    except CMEtaError as exc:
        stage = getattr(exc, "stage", "core")
        if isinstance(exc, InvarianceConditionsUnmet):
            print(f"conditions not met [{stage}]: {exc}", file=sys.stderr)
        else:
            print(f"error [{stage}]: {exc}", file=sys.stderr)
        return exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
