"""Class polynomials of eta-quotient class invariants.

Only the orbit representatives of an :class:`EvaluationPlan` are evaluated; the
other roots come from exact symmetries. Roots are multiplied with a balanced
product tree and the coefficients are rounded into ``Z`` (real polynomials) or
``Z + omega Z`` (otherwise). ``omega`` generates the maximal order: it is
``(1 + sqrt d)/2`` for ``d = 1 mod 4`` and ``sqrt(d)/2`` for ``d = 0 mod 4``, ``d``
the fundamental discriminant (``d = D`` for maximal orders).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import gmpy2
from gmpy2 import mpc, mpfr

from .errors import PrecisionFailure, RoundingFailure
from .etaquot import eval_w, make_spec, spec_nsystem
from .galois_plan import build_plan
from .mpc_eta import working_context
from .qforms import discriminant_decompose

MIN_PREC = 128
MAX_PREC = 1 << 20
MAX_RETRIES = 4
SAFETY_BITS = 64
ABS_TOL = 1e-4
REL_TOL = 2.0**-20


@dataclass(frozen=True)
class SingularValueSet:
    """One value per n-system entry; ``evaluated`` lists entries computed directly."""

    plan: object
    prec: int
    values: tuple
    evaluated: tuple
    tags: tuple


@dataclass(frozen=True)
class ClassPolynomial:
    """Monic polynomial, coefficients listed from the leading one down to the constant.

    In the ``"Z[omega]"`` domain each coefficient is a pair ``(u, v)`` standing
    for ``u + v omega``.
    """

    D: int
    primes: tuple
    e: int
    root_power: int
    domain: str
    coefficients: tuple
    residual: float
    squarefree: bool
    prec: int = 0
    warnings: tuple = field(default=())

    @property
    def degree(self):
        return len(self.coefficients) - 1

    @property
    def constant_term(self):
        return self.coefficients[-1]

    def to_json_dict(self):
        if self.domain == "Z":
            coeffs = [str(c) for c in self.coefficients]
        else:
            coeffs = [[str(u), str(v)] for u, v in self.coefficients]
        return {
            "discriminant": self.D,
            "primes": list(self.primes),
            "exponent": self.e,
            "root_power": self.root_power,
            "domain": self.domain,
            "coefficients": coeffs,
            "residual": self.residual,
            "squarefree": self.squarefree,
        }

    @classmethod
    def from_json_dict(cls, data):
        domain = data["domain"]
        if domain == "Z":
            coeffs = tuple(int(c) for c in data["coefficients"])
        else:
            coeffs = tuple((int(u), int(v)) for u, v in data["coefficients"])
        return cls(
            D=int(data["discriminant"]),
            primes=tuple(data["primes"]),
            e=int(data["exponent"]),
            root_power=int(data["root_power"]),
            domain=domain,
            coefficients=coeffs,
            residual=float(data["residual"]),
            squarefree=bool(data["squarefree"]),
        )

    def __str__(self):
        return format_polynomial(self.coefficients, self.domain)


def format_polynomial(coefficients, domain="Z"):
    deg = len(coefficients) - 1
    parts = []
    for i, c in enumerate(coefficients):
        power = deg - i
        if domain == "Z":
            if c == 0:
                continue
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            body = "" if (mag == 1 and power) else str(mag)
        else:
            u, v = c
            if u == 0 and v == 0:
                continue
            sign = "+"
            if v == 0:
                body, sign = str(abs(u)), "-" if u < 0 else "+"
                if abs(u) == 1 and power:
                    body = ""
            elif u == 0:
                body = "w" if v == 1 else ("-w" if v == -1 else f"{v}w")
                body = f"({body})"
            else:
                body = f"({u}{'+' if v > 0 else '-'}{'' if abs(v) == 1 else abs(v)}w)"
        mono = "" if power == 0 else ("X" if power == 1 else f"X^{power}")
        parts.append((sign, body + mono))
    if not parts:
        return "0"
    first_sign, first = parts[0]
    text = ("-" if first_sign == "-" else "") + first
    for sign, term in parts[1:]:
        text += f" {sign} {term}"
    return text


def omega(D, prec):
    """Generator of the maximal order: singular values are integral over it, not just over ``O_D``."""
    fundamental, _ = discriminant_decompose(D)
    with working_context(prec):
        root = mpc(0, gmpy2.sqrt(mpfr(-fundamental)))
        return (1 + root) / 2 if fundamental % 4 == 1 else root / 2


def _log2_root_size(D, spec, A):
    """Rough ``log2 |w^e(tau)|`` at a form with first coefficient ``A``."""
    factor = math.prod(1 - 1 / p for p in spec.primes)
    return math.pi * math.sqrt(-D) * spec.e * abs(factor) / (24 * A * math.log(2))


def estimate_precision(plan):
    """Starting precision: coefficient size from the root sizes plus a safety margin."""
    spec = plan.spec
    bits = sum(max(_log2_root_size(plan.D, spec, plan.nsystem.forms[i].A), 0) + 1 for i in plan.transversal)
    return int(min(max(bits + SAFETY_BITS, MIN_PREC), MAX_PREC))


def _evaluate_one(args):
    spec, form, prec = args
    return eval_w(spec, form.tau(prec + 64 + form.A.bit_length()), prec)


def evaluate_values(plan, prec, workers=1):
    """Evaluate the plan's representatives and derive every other value."""
    ns = plan.nsystem
    jobs = [(plan.spec, ns.forms[i], prec) for i in plan.representatives]
    if workers and workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            computed = list(pool.map(_evaluate_one, jobs))
    else:
        computed = [_evaluate_one(job) for job in jobs]
    by_rep = dict(zip(plan.representatives, computed))
    values, tags = [], []
    for i, (rep, transform) in enumerate(plan.derivation):
        values.append(transform.apply(by_rep[rep], prec))
        if i == rep:
            tags.append("evaluated")
        elif transform.conjugated:
            tags.append("conjugate")
        elif transform.inverted:
            tags.append("inverse")
        else:
            tags.append("collapsed" if transform.sign == 1 else "negated")
    return SingularValueSet(plan, prec, tuple(values), tuple(plan.representatives), tuple(tags))


def product_tree(roots, prec):
    """Coefficients (leading first) of ``prod (X - r)`` via a balanced product tree."""
    with working_context(prec):
        if not roots:
            return [mpc(1)]
        polys = [[mpc(1), -mpc(r)] for r in roots]
        while len(polys) > 1:
            nxt = []
            for i in range(0, len(polys) - 1, 2):
                nxt.append(_mul(polys[i], polys[i + 1]))
            if len(polys) % 2:
                nxt.append(polys[-1])
            polys = nxt
        return polys[0]


def _mul(f, g):
    out = [mpc(0)] * (len(f) + len(g) - 1)
    for i, a in enumerate(f):
        for j, b in enumerate(g):
            out[i + j] += a * b
    return out


def _round_coefficients(coeffs, D, real, prec):
    """Round to integers or ``Z + omega Z``; returns ``(exact, residual)``."""
    out = []
    residual = 0.0
    with working_context(prec):
        w = omega(D, prec)
        for c in coeffs:
            if real:
                exact = int(gmpy2.rint(c.real))
                err = abs(c - exact)
            else:
                v = int(gmpy2.rint(c.imag / w.imag))
                u = int(gmpy2.rint(c.real - v * w.real))
                exact = (u, v)
                err = abs(c - (u + v * w))
            err = float(err)
            size = float(abs(c))
            if not (err < ABS_TOL and err < REL_TOL * (size + 1)):
                raise RoundingFailure(f"coefficient {complex(c):.6g} is {err:.3g} away from the nearest candidate")
            residual = max(residual, err)
            out.append(exact)
    return tuple(out), residual


def _required_bits(roots, degree):
    size = sum(math.log2(1 + float(abs(r))) for r in roots)
    return math.ceil(size) + 40 + max(degree, 1).bit_length()


def is_squarefree(coefficients, D, domain):
    """Exact test ``gcd(f, f') = 1`` over ``Q`` or ``Q(sqrt D)``."""
    import sympy

    X = sympy.Symbol("X")
    if domain == "Z":
        f = sympy.Poly(list(coefficients), X, domain="ZZ")
    else:
        fundamental, _ = discriminant_decompose(D)
        r = sympy.sqrt(sympy.Integer(fundamental))
        w = (1 + r) / 2 if fundamental % 4 == 1 else r / 2
        f = sympy.Poly([u + v * w for u, v in coefficients], X, extension=r)
    return f.gcd(f.diff(X)).degree() == 0


def assemble(values, plan, prec):
    """Build the reduced class polynomial from the transversal's values."""
    roots = [values.values[i] for i in plan.transversal]
    need = _required_bits(roots, len(roots))
    if need > prec:
        raise PrecisionFailure(f"need about {need} bits for coefficient recovery, have {prec}", stage="classpoly")
    coeffs = product_tree(roots, prec)
    exact, residual = _round_coefficients(coeffs, plan.D, plan.real_poly, prec)
    domain = "Z" if plan.real_poly else "Z[omega]"
    if domain != "Z" and all(v == 0 for _, v in exact):
        # real without a conjugation symmetry being known in advance
        exact = tuple(u for u, _ in exact)
        domain = "Z"
    spec = plan.spec
    return ClassPolynomial(
        D=plan.D,
        primes=spec.primes,
        e=spec.e,
        root_power=plan.root_power,
        domain=domain,
        coefficients=exact,
        residual=residual,
        squarefree=is_squarefree(exact, plan.D, domain),
        prec=prec,
        warnings=plan.warnings,
    )


def precision_cap():
    """Cap from ``CM_ETA_PREC_CAP`` (bits), default :data:`MAX_PREC`."""
    raw = os.environ.get("CM_ETA_PREC_CAP")
    return int(raw) if raw else MAX_PREC


def compute_class_poly(D, primes, e=None, prec=None, workers=1, prec_cap=None, plan=None):
    """Reduced class polynomial of ``w_{primes}^e`` for discriminant ``D``."""
    spec = make_spec(primes, e)
    if plan is None:
        plan = build_plan(D, spec)
    cap = precision_cap() if prec_cap is None else int(prec_cap)
    prec = estimate_precision(plan) if prec is None else int(prec)
    last = None
    for _ in range(MAX_RETRIES + 1):
        if prec > cap:
            break
        values = evaluate_values(plan, prec, workers)
        roots = [values.values[i] for i in plan.transversal]
        need = _required_bits(roots, len(roots))
        if need > prec:
            prec = max(need + SAFETY_BITS, 2 * prec)
            continue
        try:
            poly = assemble(values, plan, prec)
        except PrecisionFailure as exc:
            last = exc
            prec *= 2
            continue
        _check_prediction(poly, plan)
        return poly
    reason = f"; last error: {last}" if last else ""
    raise PrecisionFailure(f"no stable coefficients up to {min(prec, cap)} bits (cap {cap}){reason}")


def _check_prediction(poly, plan):
    if poly.degree != plan.degree:
        raise PrecisionFailure(f"degree {poly.degree} differs from the predicted {plan.degree}")
    if plan.predicted_constant is not None and poly.domain == "Z":
        if poly.constant_term != plan.predicted_constant:
            raise PrecisionFailure(
                f"constant term {poly.constant_term} differs from the predicted {plan.predicted_constant}"
            )


def oracle_full_product(D, primes, e=None, prec=None):
    """Full ``H_D`` from all ``h`` singular values, no symmetry used; coefficients as in :func:`assemble`."""
    spec = make_spec(primes, e)
    ns = spec_nsystem(D, spec)
    prec = prec or 256
    for _ in range(MAX_RETRIES + 1):
        roots = [_evaluate_one((spec, f, prec)) for f in ns.forms]
        need = _required_bits(roots, len(roots))
        if need > prec:
            prec = max(need + SAFETY_BITS, 2 * prec)
            continue
        coeffs = product_tree(roots, prec)
        real = all(abs(c.imag) < 1e-6 for c in coeffs)
        try:
            exact, _ = _round_coefficients(coeffs, D, real, prec)
        except RoundingFailure:
            prec *= 2
            continue
        return exact, ("Z" if real else "Z[omega]")
    raise PrecisionFailure(f"oracle product did not stabilise for D = {D}")


def power_of(coefficients, k):
    """Integer polynomial ``f^k`` (leading coefficient first)."""
    out = [1]
    for _ in range(k):
        res = [0] * (len(out) + len(coefficients) - 1)
        for i, a in enumerate(out):
            for j, b in enumerate(coefficients):
                res[i + j] += a * b
        out = res
    return tuple(out)
