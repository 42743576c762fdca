"""Multiple eta-quotients ``w_{p1,...,pk}`` of squarefree level.

``w_{p1..pk}(z)`` is a product of ``2^k`` transformed eta functions: for every
divisor ``d`` of ``N = p1 ... pk`` the factor ``eta(z/d)`` appears with
exponent ``-(-1)^omega(d)``, ``omega`` counting prime factors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import gmpy2
from gmpy2 import mpc

from .errors import InvalidArgument, InvalidExponent, InvalidPrimes
from .mpc_eta import (
    UnimodularMatrix,
    epsilon_exponent,
    eta,
    kronecker,
    odd_part_and_lambda,
    working_context,
)
from .qforms import discriminant_decompose, is_prime, n_system, prime_form


@dataclass(frozen=True)
class EtaQuotientSpec:
    primes: tuple
    e: int
    N: int
    s: int
    n: int

    @property
    def k(self):
        return len(self.primes)

    def __str__(self):
        label = "w_{" + ",".join(map(str, self.primes)) + "}"
        return label if self.e == 1 else f"{label}^{self.e}"


def full_exponent(primes):
    return 24 // math.gcd(24, math.prod(p - 1 for p in primes))


def make_spec(primes, e=None):
    """Validate the prime set and exponent; ``e`` defaults to the full exponent ``s``."""
    primes = tuple(sorted(int(p) for p in primes))
    if len(set(primes)) != len(primes):
        raise InvalidPrimes(f"repeated prime in {primes}")
    if len(primes) < 2:
        raise InvalidPrimes("need at least two primes")
    for p in primes:
        if not is_prime(p):
            raise InvalidPrimes(f"{p} is not prime")
    s = full_exponent(primes)
    e = s if e is None else int(e)
    if e < 1 or s % e:
        raise InvalidExponent(f"exponent {e} must be a positive divisor of s = {s}")
    N = math.prod(primes)
    return EtaQuotientSpec(primes, e, N, s, (s // e) * N)


@dataclass(frozen=True)
class InvarianceResult:
    ok: bool
    clause: str | None = None
    reason: str | None = None


def check_invariance(spec, D):
    """Which sufficient condition for ``w^e(tau)`` to be a class invariant holds, if any.

    Only the congruence clauses are examined; non-inertness of the level primes
    and coprimality to the conductor are reported by :func:`side_conditions`.
    """
    e, ps = spec.e, spec.primes
    prod = e * math.prod(p - 1 for p in ps)
    if spec.k == 2:
        p1, p2 = ps
        if p1 == 2:
            if e * (p2 - 1) % 24 == 0:
                return InvarianceResult(True, "double quotient, p1 = 2: e(p2-1) = 0 mod 24")
            return InvarianceResult(False, reason=f"p1 = 2 needs e(p2-1) = 0 mod 24, got {e * (p2 - 1)}")
        if p1 == 3:
            m = e * (p2 - 1)
            if m % 3:
                return InvarianceResult(False, reason=f"p1 = 3 needs e(p2-1) = 0 mod 3, got {m}")
            if m % 4 and D % 2 == 0:
                return InvarianceResult(False, reason=f"e(p2-1) = {m} is not 0 mod 4 and 2 | D")
            return InvarianceResult(True, "double quotient, p1 = 3: e(p2-1) = 0 mod 3, and 0 mod 4 or D odd")
        if prod % 3 and D % 3 == 0:
            return InvarianceResult(False, reason=f"e(p1-1)(p2-1) = {prod} is not 0 mod 3 and 3 | D")
        if prod % 8 and D % 2 == 0:
            return InvarianceResult(False, reason=f"e(p1-1)(p2-1) = {prod} is not 0 mod 8 and 2 | D")
        return InvarianceResult(True, "double quotient, p1, p2 >= 5: mod 3 and mod 8 conditions")
    if prod % 24 == 0:
        return InvarianceResult(True, "multiple quotient: e(p1-1)...(pk-1) = 0 mod 24")
    if all(p % 2 and p % 3 == 2 for p in ps) and D % 3:
        return InvarianceResult(True, "multiple quotient: all p odd and -1 mod 3, 3 does not divide D")
    return InvarianceResult(
        False,
        reason=f"e(p1-1)...(pk-1) = {prod} is not 0 mod 24 and not all primes are odd, -1 mod 3 with 3 not dividing D",
    )


def side_conditions(spec, D):
    """Problems with the level primes for ``D`` (inert, or dividing the conductor)."""
    _, conductor = discriminant_decompose(D)
    problems = []
    for p in spec.primes:
        if conductor % p == 0:
            problems.append(f"{p} divides the conductor {conductor}")
        elif prime_form(D, p) is None:
            problems.append(f"{p} is inert")
    return problems


def b_divisor(spec):
    """Required divisor of ``B_1``: 3 when the level carries a factor 3 from ``s/e``.

    In that case ``w^e(tau)`` is a class invariant only through the cubic
    root of ``j``, which needs ``3 | B`` at the basis quotient.
    """
    return 3 if (spec.s // spec.e) % 3 == 0 and spec.N % 3 else 1


def spec_nsystem(D, spec):
    """n-system for ``w^e`` at ``D``: level ``n``, ``C_1`` divisible by ``N``, ``B_1`` normalised."""
    return n_system(D, spec.n, spec.N, b_divisor(spec))


def divisor_signs(primes):
    """``(d, exponent)`` for every squarefree divisor ``d`` of the level."""
    out = []
    for r in range(len(primes) + 1):
        for subset in combinations(primes, r):
            out.append((math.prod(subset), 1 if r % 2 else -1))
    return out


def _working_prec(spec, prec):
    return int(prec) + 2 * spec.k + 16 + spec.e.bit_length()


def eval_w(spec, z, prec):
    """``w_{p1..pk}(z)^e`` as a direct product of ``2^k`` eta values."""
    wp = _working_prec(spec, prec)
    with working_context(wp):
        z = mpc(z)
        num = mpc(1)
        den = mpc(1)
        for d, sign in divisor_signs(spec.primes):
            value = eta(z / d, wp)
            if sign > 0:
                num *= value
            else:
                den *= value
        result = (num / den) ** spec.e
    with working_context(prec):
        return mpc(result)


def eval_w_recursive(spec, z, prec):
    """Same value as :func:`eval_w`, following ``w_{..,p}(z) = w_{..}(z) / w_{..}(z/p)``."""
    wp = _working_prec(spec, prec) + spec.k

    def w(primes, x):
        if len(primes) == 1:
            return eta(x / primes[0], wp) / eta(x, wp)
        *head, last = primes
        return w(head, x) / w(head, x / last)

    with working_context(wp):
        result = w(list(spec.primes), mpc(z)) ** spec.e
    with working_context(prec):
        return mpc(result)


def fricke_value(spec, z, prec):
    """``w^e(-N/z)``; equals ``w^e(z)`` for even ``k`` and ``1/w^e(z)`` for odd ``k``."""
    wp = _working_prec(spec, prec)
    with working_context(wp):
        arg = -spec.N / mpc(z)
    return eval_w(spec, arg, prec)


def _check_gamma0(spec, M):
    if not M.is_normalized():
        raise InvalidArgument(f"{M} is not normalized")
    if M.b % spec.N:
        raise InvalidArgument(f"{M} is not in Gamma^0({spec.N}): N does not divide b")


def transformation_exponent(spec, M):
    """``t`` mod 24 with ``w(M z) = zeta24^t w(z)`` for ``M`` in ``Gamma^0(N)``."""
    _check_gamma0(spec, M)
    a, c, d = M.a, M.c, M.d
    b0 = M.b // spec.N
    k = spec.k
    sgn = (-1) ** k
    c_odd, _ = odd_part_and_lambda(c)
    P = math.prod(p - 1 for p in spec.primes)
    P_odd = math.prod(odd_part_and_lambda(p)[0] - 1 for p in spec.primes)
    t = -P * (a * b0 + sgn * c * (d * (1 - a * a) - a)) - 3 * sgn * P_odd * c_odd * (a - 1)
    return t % 24


def transformation_from_eta(spec, M):
    """``(sym, t)`` for ``w(Mz) = sym * zeta24^t * w(z)``, built from the eta multipliers.

    ``M z / m = M_m (z / m)`` with ``M_m = (a, b/m; c m, d)``, and the square-root
    factors cancel because the exponents sum to zero.
    """
    _check_gamma0(spec, M)
    sym, t = 1, 0
    for m, sign in divisor_signs(spec.primes):
        s_m, t_m = epsilon_exponent(UnimodularMatrix(M.a, M.b // m, M.c * m, M.d))
        sym *= s_m
        t += sign * t_m
    return sym, t % 24


def simple_transformation(N, M):
    """``(sym, t)`` with ``w_N(M z) = sym * zeta24^t * w_N(z)`` for the simple quotient of level ``N``."""
    if not M.is_normalized() or M.b % N:
        raise InvalidArgument(f"{M} is not a normalized element of Gamma^0({N})")
    a, c, d = M.a, M.c, M.d
    b0 = M.b // N
    N_odd, lam_N = odd_part_and_lambda(N)
    c_odd, _ = odd_part_and_lambda(c)
    lam_diff = 0 if c == 0 else lam_N
    t = (N - 1) * (-a * b0 + c * (d * (1 - a * a) - a)) + 3 * (N_odd - 1) * c_odd * (a - 1)
    t += (3 * lam_diff * (a * a - 1)) // 2
    return kronecker(a, N_odd), t % 24
