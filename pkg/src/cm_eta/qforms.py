"""Primitive positive definite binary quadratic forms of negative discriminant.

A form ``[A, B, C]`` stands for the proper ideal ``A Z + (-B + sqrt D)/2 Z`` of
the order of discriminant ``D = B^2 - 4AC``; Gauss composition realises the
ideal class product.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import gmpy2
from gmpy2 import mpc

from .errors import (
    InertPrime,
    InvalidArgument,
    InvalidDiscriminant,
    NoNormNForm,
    UnsupportedConductor,
)
from .mpc_eta import working_context


def xgcd(a, b):
    """Return ``(g, x, y)`` with ``a x + b y = g = gcd(a, b) >= 0``."""
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q, r = divmod(a, b)
        a, b = b, r
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        return -a, -x0, -y0
    return a, x0, y0


def factorize(n):
    """Trial-division factorisation of ``|n|`` as a ``{prime: exponent}`` dict."""
    n = abs(int(n))
    out = {}
    p = 2
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 1 if p == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def is_prime(n):
    return n >= 2 and factorize(n) == {n: 1}


def check_discriminant(D):
    D = int(D)
    if D >= 0 or D % 4 not in (0, 1):
        raise InvalidDiscriminant(f"{D} is not a negative discriminant (need D < 0, D = 0,1 mod 4)")
    return D


def discriminant_decompose(D):
    """Split ``D = c^2 * Delta`` with ``Delta`` fundamental; returns ``(Delta, c)``."""
    D = check_discriminant(D)
    squarefree, square = -1, 1
    for p, k in factorize(D).items():
        square *= p ** (k // 2)
        if k % 2:
            squarefree *= p
    if squarefree % 4 == 1:
        return squarefree, square
    # squarefree part is 2 or 3 mod 4: the fundamental discriminant absorbs a 4
    return 4 * squarefree, square // 2


@dataclass(frozen=True, order=True, slots=True)
class QuadForm:
    A: int
    B: int
    C: int

    def __post_init__(self):
        if self.A <= 0:
            raise InvalidArgument(f"{self} is not positive definite")
        if self.D >= 0:
            raise InvalidArgument(f"{self} has non-negative discriminant")
        if math.gcd(math.gcd(self.A, self.B), self.C) != 1:
            raise InvalidArgument(f"{self} is not primitive")

    @classmethod
    def from_AB(cls, A, B, D):
        num = B * B - D
        if num % (4 * A):
            raise InvalidArgument(f"no form [{A}, {B}, *] of discriminant {D}")
        return cls(A, B, num // (4 * A))

    @classmethod
    def principal(cls, D):
        D = check_discriminant(D)
        b = D % 2
        return cls(1, b, (b - D) // 4)

    @property
    def D(self):
        return self.B * self.B - 4 * self.A * self.C

    def __iter__(self):
        return iter((self.A, self.B, self.C))

    def __repr__(self):
        return f"[{self.A}, {self.B}, {self.C}]"

    def is_reduced(self):
        A, B, C = self
        if not (abs(B) <= A <= C):
            return False
        if (abs(B) == A or A == C) and B < 0:
            return False
        return True

    def transform(self, t, u, s, v):
        """Apply ``(X, Y) -> (tX + uY, sX + vY)`` with ``tv - us = 1``."""
        if t * v - u * s != 1:
            raise InvalidArgument("transformation must have determinant 1")
        A, B, C = self
        return QuadForm(
            A * t * t + B * t * s + C * s * s,
            2 * A * t * u + B * (t * v + u * s) + 2 * C * s * v,
            A * u * u + B * u * v + C * v * v,
        )

    def value(self, x, y):
        return self.A * x * x + self.B * x * y + self.C * y * y

    def tau(self, prec):
        """Basis quotient ``(-B + sqrt D) / (2A)`` in the upper half-plane."""
        with working_context(prec):
            return mpc(-self.B, gmpy2.sqrt(-self.D)) / (2 * self.A)


def reduce(f):
    """Gauss-reduced form properly equivalent to ``f``."""
    A, B, C = f.A, f.B, f.C
    while True:
        # translate B into (-A, A]
        if not (-A < B <= A):
            r = (A - B) // (2 * A)
            B, C = B + 2 * r * A, A * r * r + B * r + C
        if A > C or (A == C and B < 0):
            A, B, C = C, -B, A
            continue
        break
    return QuadForm(A, B, C)


def equivalent(f, g):
    return reduce(f) == reduce(g)


def compose(f, g):
    """Reduced representative of the product class (Dirichlet composition)."""
    a1, b1, c1 = f.A, f.B, f.C
    a2, b2, c2 = g.A, g.B, g.C
    D = b1 * b1 - 4 * a1 * c1
    if b2 * b2 - 4 * a2 * c2 != D:
        raise InvalidArgument(f"cannot compose {f} and {g}: discriminants differ")
    m = (b1 + b2) // 2
    g1, x1, y1 = xgcd(a1, a2)
    e, u, z = xgcd(g1, m)
    x, y = u * x1, u * y1
    A = a1 * a2 // (e * e)
    B = (x * a1 * b2 + y * a2 * b1 + z * (b1 * b2 + D) // 2) // e
    B %= 2 * A
    return reduce(QuadForm.from_AB(A, B, D))


def inverse(f):
    return reduce(QuadForm(f.A, -f.B, f.C))


def power(f, n):
    result = QuadForm.principal(f.D)
    base = reduce(f)
    if n < 0:
        base, n = inverse(base), -n
    while n:
        if n & 1:
            result = compose(result, base)
        base = compose(base, base)
        n >>= 1
    return result


def is_principal(f):
    return reduce(f) == QuadForm.principal(f.D)


def reduced_forms(D):
    """All primitive reduced forms of discriminant ``D``, by ascending ``A`` then ``B``."""
    D = check_discriminant(D)
    out = []
    a = 1
    while 3 * a * a <= -D:
        # b has the parity of D
        start = -a + 1 if (-a + 1 - D) % 2 == 0 else -a + 2
        for b in range(start, a + 1, 2):
            num = b * b - D
            if num % (4 * a):
                continue
            c = num // (4 * a)
            if c < a or (c == a and b < 0):
                continue
            if math.gcd(math.gcd(a, b), c) != 1:
                continue
            out.append(QuadForm(a, b, c))
        a += 1
    return out


def _abelian_invariants(orders):
    """Invariant factors ``d1 | d2 | ...`` of a finite abelian group from its element orders."""
    factors = []
    for p in factorize(len(orders)):
        # ranks[j] = log_p |G[p^j]|
        ranks = [0]
        while True:
            pj = p ** len(ranks)
            count = sum(1 for o in orders if pj % o == 0)
            r = round(math.log(count, p))
            if r == ranks[-1]:
                break
            ranks.append(r)
        # at_least[j-1] = number of cyclic factors of order >= p^j
        at_least = [ranks[j] - ranks[j - 1] for j in range(1, len(ranks))] + [0]
        exps = []
        for j in range(len(ranks) - 1, 0, -1):
            exps.extend([j] * (at_least[j - 1] - at_least[j]))
        factors.append((p, exps))
    width = max((len(e) for _, e in factors), default=0)
    invariants = [1] * width
    for p, exps in factors:
        for i, k in enumerate(exps):
            invariants[width - 1 - i] *= p**k
    return invariants


@dataclass(frozen=True)
class ClassGroup:
    D: int
    forms: tuple
    structure: tuple = field(compare=False)

    @property
    def h(self):
        return len(self.forms)

    @cached_property
    def index(self):
        return {f: i for i, f in enumerate(self.forms)}

    def index_of(self, f):
        return self.index[reduce(f)]

    def order(self, f):
        f = reduce(f)
        principal = self.forms[0]
        g, k = f, 1
        while g != principal:
            g = compose(g, f)
            k += 1
        return k


def class_group(D):
    """Reduced forms of ``D`` (principal form first) and the group structure."""
    forms = tuple(reduced_forms(D))
    principal = forms[0]
    orders = []
    for f in forms:
        g, k = f, 1
        while g != principal:
            g = compose(g, f)
            k += 1
        orders.append(k)
    return ClassGroup(D, forms, tuple(_abelian_invariants(orders)))


def prime_form(D, p):
    """Form ``[p, b, *]`` with minimal ``0 <= b <= p``, or ``None`` if ``p`` is inert."""
    D = check_discriminant(D)
    _, conductor = discriminant_decompose(D)
    if conductor % p == 0:
        raise UnsupportedConductor(f"prime {p} divides the conductor {conductor} of {D}")
    for b in range(0, p + 1):
        if (b * b - D) % (4 * p) == 0:
            return QuadForm.from_AB(p, b, D)
    return None


@dataclass(frozen=True)
class NSystem:
    """Forms representing the class group with ``gcd(A_i, n) = 1`` and ``B_i = B_1 mod 2n``.

    ``N`` divides ``C_1`` (and then every ``C_i``); ``C_1 = N`` whenever such a
    first form exists. ``nf`` is the form ``[*, B_1, N]`` whose class plays the
    role of the norm-``N`` ideal in the conjugation pairing. ``class_index[i]``
    is the position of the reduced class of ``forms[i]`` in ``group.forms``.
    """

    D: int
    n: int
    N: int
    forms: tuple
    group: ClassGroup
    class_index: tuple
    nf: QuadForm

    def __len__(self):
        return len(self.forms)

    @property
    def B1(self):
        return self.forms[0].B

    @cached_property
    def by_class(self):
        return {j: i for i, j in enumerate(self.class_index)}

    def form_for_class(self, j):
        return self.forms[self.by_class[j]]

    def check(self):
        """Raise ``AssertionError`` if an n-system invariant fails."""
        assert self.forms[0].C % self.N == 0
        assert self.nf.C == self.N and self.nf.B == self.B1
        for f in self.forms:
            assert f.D == self.D
            assert math.gcd(f.A, self.n) == 1, f
            assert (f.B - self.B1) % (2 * self.n) == 0, f
        assert sorted(self.class_index) == list(range(self.group.h))
        return True


def _norm_n_roots(D, N, limit, divisor=1):
    """``b`` with ``b^2 = D mod 4N`` and ``[N, b, *]`` primitive, smallest ``|b|`` first, ``b >= 0`` first.

    Only multiples of ``divisor`` are returned.
    """
    for size in range(0, limit + 1, divisor):
        for b in (size, -size) if size else (0,):
            num = b * b - D
            if num % (4 * N) == 0 and math.gcd(math.gcd(N, b), num // (4 * N)) == 1:
                yield b


def _first_form(D, n, N, b_divisor=1):
    """First n-system form: ``[A1, -b, N]`` with ``gcd(A1, n) = 1`` if possible.

    Such a form need not exist (``D = 1 mod 8``, ``N`` odd, ``n`` even forces
    ``A1`` even); then ``[1, -b, (b^2 - D)/4]`` is used, which still has
    ``N | C_1``. ``b_divisor`` restricts ``B_1`` to its multiples. Returns
    ``(first, nf)``.
    """
    for p in factorize(N):
        if prime_form(D, p) is None:
            raise InertPrime(f"prime {p} is inert in discriminant {D}")
    limit = (2 * N * (n // N) * 24 + 2 * N) * b_divisor
    fallback = None
    for b in _norm_n_roots(D, N, limit, b_divisor):
        A1 = (b * b - D) // (4 * N)
        if fallback is None:
            fallback = b
        if math.gcd(A1, n) == 1:
            first = QuadForm(A1, -b, N)
            return first, first
    if fallback is None:
        raise NoNormNForm(f"no primitive form of norm {N} for D = {D}")
    b = fallback
    return QuadForm(1, -b, (b * b - D) // 4), QuadForm((b * b - D) // (4 * N), -b, N)


def _represent_coprime(f, n):
    """Proper transform of ``f`` whose first coefficient is prime to ``n``."""
    if math.gcd(f.A, n) == 1:
        return f
    bound = 10
    while True:
        best = None
        for t in range(-bound, bound + 1):
            for s in range(0, bound + 1):
                if s == 0 and t != 1:
                    continue
                if math.gcd(t, s) != 1:
                    continue
                a = f.value(t, s)
                if math.gcd(a, n) == 1 and (best is None or (a, abs(t), abs(s)) < best[0]):
                    best = ((a, abs(t), abs(s)), t, s)
        if best is not None:
            _, t, s = best
            g, v, w = xgcd(t, s)  # t v + s w = 1 -> matrix [[t, -w], [s, v]]
            return f.transform(t, -w, s, v)
        bound *= 2


def n_system(D, n, N, b_divisor=1):
    """Build an n-system for ``Cl(D)`` whose first form has ``N | C_1``.

    With ``b_divisor = d`` (``d | n``, ``gcd(d, N) = 1``) every ``B_i`` is a
    multiple of ``d``.
    """
    D = check_discriminant(D)
    n, N = int(n), int(N)
    if n % N:
        raise InvalidArgument(f"N = {N} must divide n = {n}")
    _, conductor = discriminant_decompose(D)
    if math.gcd(n, conductor) != 1:
        raise UnsupportedConductor(f"level {n} is not coprime to the conductor {conductor}")
    if b_divisor < 1 or n % b_divisor or math.gcd(b_divisor, N) != 1:
        raise InvalidArgument(f"b_divisor {b_divisor} must divide n = {n} and be prime to N = {N}")
    group = class_group(D)
    first, nf = _first_form(D, n, N, b_divisor)
    B1 = first.B
    forms = [first]
    first_class = group.index_of(first)
    classes = [first_class]
    for j, rep in enumerate(group.forms):
        if j == first_class:
            continue
        g = _represent_coprime(rep, n)
        # translate so that B = B1 mod 2n
        delta = ((B1 - g.B) // 2 * pow(g.A, -1, n)) % n if n > 1 else 0
        g = g.transform(1, delta, 0, 1)
        forms.append(g)
        classes.append(j)
    return NSystem(D, n, N, tuple(forms), group, tuple(classes), nf)
