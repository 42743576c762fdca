"""Dedekind eta in arbitrary precision.

Complex numbers are ``gmpy2.mpc`` values (aliased as :data:`ComplexAP`).
Every public function takes an explicit precision in bits and runs inside a
thread-local gmpy2 context, so nothing here touches shared state.

Evaluation reduces the argument to the standard fundamental domain, keeps the
root-of-unity part of the multiplier as an exact integer mod 24, and sums the
pentagonal-number series at the reduced point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import gmpy2
from gmpy2 import mpc, mpfr

from .errors import InvalidArgument

ComplexAP = mpc

MIN_PREC = 64
MAX_REDUCTION_STEPS = 100_000


def working_context(prec):
    """Thread-local gmpy2 context at ``prec`` bits."""
    return gmpy2.context(gmpy2.get_context(), precision=max(int(prec), 2))


def to_complex(z, prec):
    """Convert ints, floats, Python complex, strings or mpc to an mpc at ``prec`` bits."""
    with working_context(prec):
        if isinstance(z, tuple):
            return mpc(mpfr(z[0]), mpfr(z[1]))
        if isinstance(z, complex):
            return mpc(mpfr(z.real), mpfr(z.imag))
        return mpc(z)


def odd_part_and_lambda(n):
    """Return ``(n', lam)`` with ``n = n' * 2**lam`` and ``n'`` odd.

    The sign of ``n`` stays on ``n'``. Zero follows the convention
    ``lambda(0) = 0' = 1``.
    """
    n = int(n)
    if n == 0:
        return 1, 1
    lam = (n & -n).bit_length() - 1
    return n >> lam, lam


def kronecker(a, m):
    """Jacobi symbol ``(a | m)`` for odd positive ``m``; ``(a | 1) = 1``."""
    a, m = int(a), int(m)
    if m <= 0 or m % 2 == 0:
        raise InvalidArgument(f"kronecker: modulus must be odd and positive, got {m}")
    a %= m
    result = 1
    while a:
        while a % 2 == 0:
            a //= 2
            if m % 8 in (3, 5):
                result = -result
        a, m = m, a
        if a % 4 == 3 and m % 4 == 3:
            result = -result
        a %= m
    return result if m == 1 else 0


@dataclass(frozen=True)
class UnimodularMatrix:
    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        if self.a * self.d - self.b * self.c != 1:
            raise InvalidArgument(f"determinant of {self} is not 1")

    @classmethod
    def identity(cls):
        return cls(1, 0, 0, 1)

    @classmethod
    def S(cls):
        return cls(0, -1, 1, 0)

    @classmethod
    def T(cls, n=1):
        return cls(1, n, 0, 1)

    def __matmul__(self, other):
        return UnimodularMatrix(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def inverse(self):
        return UnimodularMatrix(self.d, -self.b, -self.c, self.a)

    def is_normalized(self):
        return self.c > 0 or (self.c == 0 and self.d > 0)

    def normalized(self):
        """The representative of ``{M, -M}`` with ``c > 0``, or ``c = 0, d > 0``."""
        if self.is_normalized():
            return self
        return UnimodularMatrix(-self.a, -self.b, -self.c, -self.d)

    def act(self, z, prec):
        with working_context(prec):
            return (self.a * z + self.b) / (self.c * z + self.d)


def epsilon_exponent(M):
    """Eta multiplier of a normalized ``M`` as ``(sym, t)``.

    ``eta(M z) = sym * zeta24**t * sqrt(c z + d) * eta(z)`` with the principal
    square root; ``sym`` is the Jacobi symbol ``(a | c')``.
    """
    if not M.is_normalized():
        raise InvalidArgument(f"{M} is not normalized (need c >= 0, and d > 0 if c = 0)")
    a, b, c, d = M.a, M.b, M.c, M.d
    c_odd, lam_c = odd_part_and_lambda(c)
    e_bar = a * b + c * (d * (1 - a * a) - a) + 3 * c_odd * (a - 1)
    # a and c are never both even, so 3/2 * lam * (a^2 - 1) is an integer
    e_full = e_bar + (3 * lam_c * (a * a - 1)) // 2
    return kronecker(a, c_odd), e_full % 24


def zeta24_power(t, prec):
    with working_context(prec):
        angle = 2 * gmpy2.const_pi() * mpfr(t % 24) / 24
        return mpc(gmpy2.cos(angle), gmpy2.sin(angle))


@dataclass(frozen=True)
class EtaMultiplier:
    """Factor relating ``eta(z)`` to ``eta(z')`` for ``z' = M z``.

    ``prefactor`` is ``sqrt(c z + d)``; the root of unity is kept exactly.
    """

    sym: int
    zeta24_exponent: int
    prefactor: mpc

    def factor(self, prec):
        with working_context(prec):
            return self.sym * zeta24_power(self.zeta24_exponent, prec) * self.prefactor

    def apply(self, eta_reduced, prec):
        """Recover ``eta(z)`` from ``eta(z')``."""
        with working_context(prec):
            return eta_reduced / self.factor(prec)


def _conditioning_bits(z):
    """Bits lost when pushing ``z`` into the fundamental domain."""
    im = float(z.imag)
    size = float(abs(z))
    return math.ceil(math.log2(1 + size)) + 2 * math.ceil(math.log2(1 + 1 / im))


def reduce_to_fundamental(z, prec):
    """Return ``(z', M, mult)`` with ``z' = M z`` in the fundamental domain.

    ``|Re z'| <= 1/2`` and ``|z'| >= 1`` hold up to rounding, and
    ``eta(z) == mult.apply(eta(z'))``.
    """
    if not z.imag > 0:
        raise InvalidArgument(f"eta is defined on the upper half-plane, got Im z = {z.imag}")
    wp = prec + 16 + _conditioning_bits(z)
    with working_context(wp):
        z = mpc(z)
        w = z
        M = UnimodularMatrix.identity()
        # points on the unit circle are already reduced; without the slack
        # rounding can bounce them back and forth under S
        threshold = 1 - mpfr(2) ** (8 - wp)
        for _ in range(MAX_REDUCTION_STEPS):
            shift = int(gmpy2.rint(w.real))
            if shift:
                w = w - shift
                M = UnimodularMatrix.T(-shift) @ M
            if gmpy2.norm(w) < threshold:
                w = -1 / w
                M = UnimodularMatrix.S() @ M
            else:
                break
        else:
            raise InvalidArgument(f"fundamental-domain reduction did not terminate for {z}")
        M = M.normalized()
        # recompute from the exact matrix to avoid drift along long chains
        cz_d = M.c * z + M.d
        z_red = (M.a * z + M.b) / cz_d
        sym, t = epsilon_exponent(M)
        mult = EtaMultiplier(sym, t, gmpy2.sqrt(cz_d))
    return z_red, M, mult


def _eta_series(z, prec):
    """``q^(1/24) * sum_n (-1)^n q^(n(3n-1)/2)`` for ``z`` with large enough Im."""
    with working_context(prec):
        two_pi_i = mpc(0, 2 * gmpy2.const_pi())
        q = gmpy2.exp(two_pi_i * z)
        cutoff = mpfr(2) ** (-prec - 32)
        total = mpc(1)
        a = mpc(1)  # q^(n(3n-1)/2)
        step = q  # q^(3n-2)
        q_n = mpc(1)  # q^n
        q3 = q * q * q
        terms = 0
        sign = 1
        while True:
            a = a * step
            q_n = q_n * q
            sign = -sign
            if abs(a) < cutoff:
                break
            total += sign * (a + a * q_n)
            step = step * q3
            terms += 1
        return gmpy2.exp(two_pi_i * z / 24) * total, terms


def guard_bits(series_terms, reduction_steps):
    return 32 + math.ceil(math.log2(series_terms + reduction_steps + 1))


def eta(z, prec):
    """Dedekind eta at ``z`` (Im z > 0), rounded to ``prec`` bits."""
    prec = max(int(prec), MIN_PREC)
    z_red, M, mult = reduce_to_fundamental(z, prec)
    steps = 2 * max(abs(M.a), abs(M.b), abs(M.c), abs(M.d)).bit_length()
    wp = prec + guard_bits(math.isqrt(prec) + 2, steps) + _conditioning_bits(z)
    value, _ = _eta_series(z_red, wp)
    value = mult.apply(value, wp)
    with working_context(prec):
        return mpc(value)
