"""Evaluation plans: which n-system entries must actually be evaluated.

Three kinds of symmetry relate the singular values ``f(tau_i)`` attached to the
classes of an n-system:

* classes in the same coset of the subgroup generated by the products of two
  ramified prime ideals ``p1 p_j`` give the same value (the class polynomial is
  a ``2^(k'-1)``-th power);
* multiplying a class by ``p1`` sends the value ``v`` to ``xi / v``;
* the classes ``a`` and ``n c^-1 a^-1`` give complex conjugate values, ``n``
  being the class of the form ``[*, B_1, N]`` and ``c`` either the trivial
  class or ``p1``.

A plan closes the class group under these maps, keeps one representative per
orbit, and records how every other class's value is derived from it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from gmpy2 import mpc

from .errors import (
    DegenerateDiscriminant,
    InertPrime,
    InvalidArgument,
    InvarianceConditionsUnmet,
    NotTotallyRamified,
    UnsupportedConductor,
)
from .etaquot import check_invariance, side_conditions, spec_nsystem
from .mpc_eta import kronecker, odd_part_and_lambda, working_context
from .qforms import (
    QuadForm,
    compose,
    discriminant_decompose,
    factorize,
    inverse,
    is_principal,
    n_system,
    prime_form,
)


@dataclass(frozen=True)
class Transform:
    """``v -> sign * g(v)`` with ``g`` a composite of conjugation and inversion."""

    sign: int = 1
    inverted: bool = False
    conjugated: bool = False

    def apply(self, v, prec):
        with working_context(prec):
            v = mpc(v)
            if self.conjugated:
                v = v.conjugate()
            if self.inverted:
                v = 1 / v
            return self.sign * v

    def invert(self, xi=1):
        return Transform(self.sign * xi, not self.inverted, self.conjugated)

    def conjugate(self):
        return Transform(self.sign, self.inverted, not self.conjugated)

    def negate(self):
        return Transform(-self.sign, self.inverted, self.conjugated)

    def keep(self):
        return self


@dataclass(frozen=True)
class EvaluationPlan:
    D: int
    spec: object
    nsystem: object
    k_prime: int
    ramified: tuple
    generators: tuple
    root_power: int
    xi: int
    orbits: tuple
    conj_pairing: dict | None
    inverse_pairing: dict | None
    degenerate: bool
    predicted_constant: int | None
    full_constant: int | None
    real_poly: bool
    conjugation: str | None
    representatives: tuple
    derivation: tuple
    transversal: tuple
    warnings: tuple = field(default=())

    @property
    def h(self):
        return len(self.nsystem)

    @property
    def degree(self):
        return self.h // self.root_power

    def check(self):
        """Raise ``AssertionError`` if the plan's structural invariants fail."""
        h = self.h
        covered = sorted(i for orbit in self.orbits for i in orbit)
        assert covered == list(range(h))
        for orbit in self.orbits:
            assert self.root_power % len(orbit) == 0
        assert len(self.transversal) == self.degree
        assert {self.derivation[i][0] for i in range(h)} == set(self.representatives)
        for pairing in (self.conj_pairing, self.inverse_pairing):
            if pairing is not None:
                assert all(pairing[pairing[i]] == i for i in pairing)
        return True


def _permutation(group, element):
    """Multiplication by ``element`` as a permutation of class indices."""
    return [group.index_of(compose(f, element)) for f in group.forms]


def _subgroup(group, generators):
    """Class indices of the subgroup generated by ``generators``."""
    members = {0}
    frontier = [0]
    perms = [_permutation(group, g) for g in generators]
    while frontier:
        j = frontier.pop()
        for perm in perms:
            m = perm[j]
            if m not in members:
                members.add(m)
                frontier.append(m)
    return sorted(members)


def ramified_subset(D, spec):
    """Number of level primes ramified in ``D`` and the primes reordered ramified-first."""
    fundamental, _ = discriminant_decompose(D)
    ramified = [p for p in spec.primes if fundamental % p == 0]
    others = [p for p in spec.primes if fundamental % p]
    return len(ramified), tuple(ramified + others)


def _legendre_power(p, q, exponent):
    """``(p | q')^exponent`` or ``None`` for a non-integral exponent."""
    if exponent != int(exponent):
        return None
    q_odd, _ = odd_part_and_lambda(q)
    return kronecker(p, q_odd) ** int(exponent)


def _validate(D, spec):
    result = check_invariance(spec, D)
    if not result.ok:
        raise InvarianceConditionsUnmet(f"{spec}, D = {D}: conditions not met ({result.reason})")
    problems = side_conditions(spec, D)
    for problem in problems:
        if "conductor" in problem:
            raise UnsupportedConductor(f"{spec}, D = {D}: {problem}")
        raise InertPrime(f"{spec}, D = {D}: {problem}")


def build_plan(D, spec):
    """Plan for ``H_D`` of ``w^e`` (reduced by its root power) using every available symmetry."""
    _validate(D, spec)
    ns = spec_nsystem(D, spec)
    group = ns.group
    h = group.h
    k, e = spec.k, spec.e
    k_prime, order = ramified_subset(D, spec)
    ramified = order[:k_prime]
    warnings = []

    p_forms = [prime_form(D, p) for p in ramified]
    product = math.prod(ramified)
    degenerate = k_prime >= 2 and k_prime % 2 == 0 and -D in (product, 4 * product)

    # sigma(p1) sends v to xi / v; for k = 2 the twist is (p2 | p1')^e with p1
    # ramified (checked against direct evaluation, see the tests)
    xi = 1
    if k == 2 and k_prime >= 1:
        xi = _legendre_power(order[1], order[0], e)

    # subgroup of classes fixing the value, plus a possible sign-only symmetry
    collapse, negations = [], []
    if k_prime >= 2:
        pairs = [compose(p_forms[0], p_forms[j]) for j in range(1, k_prime)]
        if k == 2:
            p1, p2 = sorted(ramified)
            if p1 == 2:
                sign = (-1) ** (e * (p2 * p2 - 1) // 8)
            else:
                sign = (-1) ** (e * (p1 - 1) * (p2 - 1) // 4)
            if sign == 1:
                collapse = pairs
            else:
                negations = pairs
                warnings.append(
                    f"p1 p2 acts by -1 on {spec} (e odd, p1 = p2 = 3 mod 4 or p2 = +-3 mod 8); "
                    "no square root taken"
                )
        else:
            collapse = pairs
    collapse = [g for g in collapse if not is_principal(g)]
    negations = [g for g in negations if not is_principal(g)]
    subgroup = _subgroup(group, collapse)
    root_power = len(subgroup)
    if degenerate:
        warnings.append(f"|D| in {{{product}, {4 * product}}}: the product of the ramified primes is principal")

    # conjugation
    if k % 2 == 0:
        conjugation, c_ideal = "trivial", QuadForm.principal(D)
    elif k_prime >= 1:
        conjugation, c_ideal = "p1", p_forms[0]
    elif ns.B1 % ns.n == 0:
        conjugation, c_ideal = "inverse", None
    else:
        conjugation, c_ideal = None, None
    real_poly = conjugation is not None

    ops = []  # (permutation of class indices, action on transforms)
    for g in collapse:
        ops.append((_permutation(group, g), Transform.keep))
    for g in negations:
        ops.append((_permutation(group, g), Transform.negate))
    inverse_perm = None
    if k_prime >= 1:
        inverse_perm = _permutation(group, p_forms[0])
        ops.append((inverse_perm, lambda t: t.invert(xi)))
    conj_perm = None
    if conjugation == "inverse":
        conj_perm = [group.index_of(inverse(f)) for f in group.forms]
    elif conjugation is not None:
        target = compose(ns.nf, inverse(c_ideal))
        conj_perm = [group.index_of(compose(target, inverse(f))) for f in group.forms]
    if conj_perm is not None:
        ops.append((conj_perm, Transform.conjugate))

    # the roots pair up as v, xi / v unless the inversion fixes a class (full
    # polynomial) or a coset of the collapse subgroup (reduced polynomial); a
    # fixed value is only known up to sign
    full_constant = None
    predicted = None
    if k_prime >= 1:
        p1_index = group.index_of(p_forms[0])
        if not is_principal(p_forms[0]):
            full_constant = xi ** (h // 2)
        if p1_index not in subgroup:
            predicted = xi ** ((h // root_power) // 2)

    return _assemble_plan(
        D=D,
        spec=spec,
        ns=ns,
        k_prime=k_prime,
        ramified=ramified,
        generators=tuple(collapse),
        subgroup=subgroup,
        xi=xi,
        ops=ops,
        conj_perm=conj_perm,
        inverse_perm=inverse_perm,
        degenerate=degenerate,
        predicted=predicted,
        full_constant=full_constant,
        real_poly=real_poly,
        conjugation=conjugation,
        warnings=tuple(warnings),
    )


def atkin_lehner_plan(D, N, spec=None):
    """Plan for a function invariant under ``Gamma^0(N)`` and the Fricke involution, ``N | D``.

    The class ``n`` of the form ``[A_1, B_1, N]`` has order 2; ``a`` and ``a n``
    give the same root and ``a^-1``, ``a^-1 n`` the conjugate root. ``spec``
    optionally attaches an eta quotient (even order, level ``N``) to evaluate.
    """
    fundamental, conductor = discriminant_decompose(D)
    N = int(N)
    if any(k > 1 for k in factorize(N).values()):
        raise InvalidArgument(f"N = {N} is not squarefree")
    if math.gcd(N, conductor) != 1:
        raise UnsupportedConductor(f"N = {N} is not coprime to the conductor {conductor}")
    if D % N:
        raise NotTotallyRamified(f"N = {N} does not divide D = {D}")
    if -D in (N, 4 * N):
        raise DegenerateDiscriminant(f"|D| = {-D} is N or 4N for N = {N}")
    if spec is not None:
        if spec.n != N or spec.k % 2:
            raise InvalidArgument(f"{spec} is not a Fricke-invariant function of level {N}")
        _validate(D, spec)
    ns = n_system(D, N, N)
    group = ns.group
    nf = ns.nf
    assert nf.B % N == 0
    if is_principal(nf) or not is_principal(compose(nf, nf)):
        raise DegenerateDiscriminant(f"class of norm {N} does not have order 2 for D = {D}")
    subgroup = _subgroup(group, [nf])
    conj_perm = [group.index_of(compose(nf, inverse(f))) for f in group.forms]
    ops = [(_permutation(group, nf), Transform.keep), (conj_perm, Transform.conjugate)]
    k_prime = len(factorize(N))
    return _assemble_plan(
        D=D,
        spec=spec,
        ns=ns,
        k_prime=k_prime,
        ramified=tuple(sorted(factorize(N))),
        generators=(nf,),
        subgroup=subgroup,
        xi=1,
        ops=ops,
        conj_perm=conj_perm,
        inverse_perm=None,
        degenerate=False,
        predicted=None,
        full_constant=None,
        real_poly=True,
        conjugation="trivial",
        warnings=(),
    )


def _assemble_plan(*, D, spec, ns, k_prime, ramified, generators, subgroup, xi, ops, conj_perm,
                   inverse_perm, degenerate, predicted, full_constant, real_poly, conjugation, warnings):
    group = ns.group
    h = group.h
    to_ns = ns.by_class

    # cosets of the collapse subgroup, in n-system order
    cosets = []
    seen = set()
    for i, j in enumerate(ns.class_index):
        if j in seen:
            continue
        coset = sorted({to_ns[group.index_of(compose(group.forms[j], group.forms[m]))] for m in subgroup})
        seen.update(ns.class_index[x] for x in coset)
        cosets.append(tuple(coset))
    transversal = tuple(c[0] for c in cosets)

    # close under all symmetries; representative = smallest A in the orbit
    derivation = [None] * h
    representatives = []
    for start in range(h):
        if derivation[start] is not None:
            continue
        orbit = _orbit(ns.class_index[start], ops)
        members = sorted(to_ns[j] for j in orbit)
        rep = min(members, key=lambda i: (ns.forms[i].A, i))
        for j, t in _orbit(ns.class_index[rep], ops).items():
            derivation[to_ns[j]] = (rep, t)
        representatives.append(rep)

    def as_ns(perm):
        if perm is None:
            return None
        return {to_ns[j]: to_ns[perm[j]] for j in range(h)}

    return EvaluationPlan(
        D=D,
        spec=spec,
        nsystem=ns,
        k_prime=k_prime,
        ramified=tuple(ramified),
        generators=tuple(generators),
        root_power=len(subgroup),
        xi=xi,
        orbits=tuple(cosets),
        conj_pairing=as_ns(conj_perm),
        inverse_pairing=as_ns(inverse_perm),
        degenerate=degenerate,
        predicted_constant=predicted,
        full_constant=full_constant,
        real_poly=real_poly,
        conjugation=conjugation,
        representatives=tuple(representatives),
        derivation=tuple(derivation),
        transversal=transversal,
        warnings=warnings,
    )


def _orbit(start, ops):
    """Breadth-first closure of one class under ``ops``; maps class index to its transform."""
    found = {start: Transform()}
    frontier = [start]
    while frontier:
        nxt = []
        for j in frontier:
            for perm, action in ops:
                m = perm[j]
                if m not in found:
                    found[m] = action(found[j])
                    nxt.append(m)
        frontier = nxt
    return found
