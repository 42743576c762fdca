import json

import mpmath
import pytest
from gmpy2 import mpc

from cm_eta.classpoly import (
    MIN_PREC,
    ClassPolynomial,
    assemble,
    compute_class_poly,
    estimate_precision,
    evaluate_values,
    is_squarefree,
    omega,
    oracle_full_product,
    power_of,
    product_tree,
)
from cm_eta.errors import InvarianceConditionsUnmet, PrecisionFailure
from cm_eta.etaquot import make_spec
from cm_eta.galois_plan import build_plan
from cm_eta.mpc_eta import working_context

PREC = 200


def numeric_roots(coefficients, D):
    with mpmath.workdps(60):
        if coefficients and isinstance(coefficients[0], tuple):
            w = omega(D, 256)
            w = mpmath.mpc(str(w.real), str(w.imag))
            coeffs = [u + v * w for u, v in coefficients]
        else:
            coeffs = [mpmath.mpf(c) for c in coefficients]
        return mpmath.polyroots(coeffs, maxsteps=200, extraprec=400)


def test_corrected_quartic_factor():
    """(X - z)(X - zbar)(X + 1/z)(X + 1/zbar) in closed form, x = Re z, n = |z|^2."""
    spec = make_spec((5, 7), 1)
    plan = build_plan(-455, spec)
    values = evaluate_values(plan, PREC).values
    z = next(v for v in values if abs(v.imag) > 1e-10)
    with working_context(PREC):
        x, n = z.real, abs(z) ** 2
        roots = [z, z.conjugate(), -1 / z, -1 / z.conjugate()]
        prod = product_tree(roots, PREC)
        closed = [1, 2 * x * (1 / n - 1), n + (1 - 4 * x * x) / n, -2 * x * (1 / n - 1), 1]
        for a, b in zip(prod, closed):
            assert abs(a - b) < 2.0 ** (-PREC + 20)
        # the version without X^2 on the middle term does not match
        assert abs(prod[2] - 0) > 1


def test_minus_455_sqrt_polynomial():
    poly = compute_class_poly(-455, (5, 7), 1)
    assert poly.coefficients == (1, 3, -12, 32, -38, -17, 38, 32, 12, 3, -1)
    assert poly.root_power == 2 and poly.domain == "Z" and poly.squarefree
    assert poly.residual < 1e-4


@pytest.mark.parametrize("D, primes, e", [(-455, (5, 7), 1), (-3795, (3, 5, 11), 3), (-707, (3, 7), 2),
                                          (-215, (2, 3, 5), 3), (-1155, (3, 5, 7), 1)])
def test_root_closure(D, primes, e):
    poly = compute_class_poly(D, primes, e)
    plan = build_plan(D, make_spec(primes, e))
    assert plan.k_prime >= 1
    roots = numeric_roots(poly.coefficients, D)
    for r in roots:
        target = plan.xi / r
        assert min(abs(target - s) for s in roots) < 1e-6 * (1 + abs(r))


def test_omega_coefficients_pattern():
    poly = compute_class_poly(-215, (2, 3, 7), 2)
    assert poly.domain == "Z[omega]"
    assert poly.coefficients[1] == (17, 1)
    deg = poly.degree
    for i, (u, v) in enumerate(poly.coefficients):
        u2, v2 = poly.coefficients[deg - i]
        # conj(u + v w) = (u + v) - v w for w = (1 + sqrt D) / 2
        assert (u2, v2) == (u + v, -v)


def test_realness_follows_plan():
    for D, primes, e in [(-215, (7, 11), 1), (-215, (2, 3, 5), 3), (-455, (5, 7), 1)]:
        poly = compute_class_poly(D, primes, e)
        assert build_plan(D, make_spec(primes, e)).real_poly
        assert poly.domain == "Z" and all(isinstance(c, int) for c in poly.coefficients)


def test_determinism_across_workers():
    a = compute_class_poly(-3795, (3, 5, 11), 3, prec=256, workers=1)
    b = compute_class_poly(-3795, (3, 5, 11), 3, prec=256, workers=2)
    assert a.coefficients == b.coefficients
    assert a.residual == b.residual
    plan = build_plan(-215, make_spec((7, 11), 1))
    v1 = evaluate_values(plan, 192, workers=1).values
    v2 = evaluate_values(plan, 192, workers=2).values
    assert [str(x) for x in v1] == [str(x) for x in v2]


def test_oracle_equivalence_small():
    poly = compute_class_poly(-455, (5, 7), 1)
    full, domain = oracle_full_product(-455, (5, 7), 1)
    assert domain == "Z" and len(full) == 21
    assert power_of(poly.coefficients, 2) == full


def test_full_constant_sign_twisted():
    # D = -707, w_{3,7}^1: the full product has constant (3 | 7)^3 = -1
    full, domain = oracle_full_product(-707, (3, 7), 1)
    plan = build_plan(-707, make_spec((3, 7), 1))
    assert domain == "Z" and full[-1] == plan.full_constant == -1


def test_squarefree():
    assert is_squarefree((1, 92, 2118, 92, 1), -3795, "Z") is False
    assert is_squarefree((1, 46, 1), -3795, "Z") is True
    assert is_squarefree(((1, 0), (0, 1), (1, 0)), -215, "Z[omega]") is True
    assert is_squarefree(((1, 0), (0, 2), (-54, 1)), -215, "Z[omega]") is False


def test_json_round_trip():
    poly = compute_class_poly(-215, (2, 3, 7), 2)
    text = json.dumps(poly.to_json_dict(), indent=2)
    back = ClassPolynomial.from_json_dict(json.loads(text))
    assert back.coefficients == poly.coefficients
    assert json.dumps(back.to_json_dict(), indent=2) == text


def test_single_root_and_precision_floor():
    # h = 1: one evaluation, X - round(r)
    plan = build_plan(-7, make_spec((2, 7), 4))
    assert plan.h == 1 and len(plan.representatives) == 1
    assert estimate_precision(plan) == MIN_PREC
    values = evaluate_values(plan, 128)
    poly = assemble(values, plan, 128)
    assert poly.degree == 1
    with working_context(128):
        assert abs(values.values[0] - (-poly.coefficients[1])) < 1e-20


def test_precision_cap_surfaces():
    with pytest.raises(PrecisionFailure):
        # the starting estimate is never below MIN_PREC
        compute_class_poly(-455, (5, 7), 1, prec_cap=MIN_PREC - 1)


def test_conditions_error_is_distinct():
    with pytest.raises(InvarianceConditionsUnmet):
        compute_class_poly(-3795, (3, 5, 11), 1)


def test_product_tree_small():
    with working_context(PREC):
        coeffs = product_tree([mpc(1), mpc(2), mpc(-3)], PREC)
    assert [int(c.real) for c in coeffs] == [1, 0, -7, 6]


def test_power_of():
    assert power_of((1, 46, 1), 2) == (1, 92, 2118, 92, 1)
    assert power_of((1, -1), 3) == (1, -3, 3, -1)
