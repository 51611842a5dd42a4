"""Additive and multiplicative characters at finite level, conductors, the
phase-linearization constant alpha, and Gauss-sum constants.

Characters evaluate to ROOT-OF-UNITY EXPONENTS rather than complex numbers:
a character chi with value_order V maps a residue to k meaning zeta_V^k.
Callers embed exponents into a shared working modulus M (with V | M) and
accumulate counts for the exact cyclotomic backend, so the hot loops touch
only machine integers.

The standard additive character psi has conductor exponent 0 and evaluates as
psi(u/p^t) = e^(2 pi i u / p^t) on the canonical integer lift u.  On the
quadratic extension, psi_E = psi o tr, with conductor exponent -e_E + 1.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .cyclotomic import CycloValue
from .errors import BudgetError, ConstructionError, PrecisionError
from .residue import (
    PAdicScalar,
    QuadExtElement,
    get_context,
    get_ext_context,
    smallest_nonresidue,
)

GROUP_TABLE_BUDGET = 10**7


def psi_exponent_scaled(p: int, t: int, u: int, m: int) -> int:
    """Exponent e with psi(p^(-t) u) = zeta_m^e.  Requires p^t | m."""
    if t <= 0:
        return 0
    q = p**t
    if m % q:
        raise ValueError(f"modulus {m} does not contain p^{t}")
    return (u % q) * (m // q) % m


def psi_exponent(x: PAdicScalar, m: int) -> int:
    """psi(x) as an exponent in Z/m; raises PrecisionError when the residue
    of x is not known to enough digits."""
    if x.is_zero or x.val >= 0:
        return 0
    t = -x.val
    return psi_exponent_scaled(x.ctx.p, t, x.residue_unit(t), m)


def psi_ext_exponent(x: QuadExtElement, m: int) -> int:
    """psi_E(x) = psi(tr x) = psi(2a) as an exponent in Z/m."""
    a = x.a
    if a.is_zero or a.val >= 0:
        return 0
    t = -a.val
    return psi_exponent_scaled(a.ctx.p, t, 2 * a.residue_unit(t), m)


# ---------------------------------------------------------------------------
# multiplicative characters of F^x
# ---------------------------------------------------------------------------


class MultChar:
    """Character of (Z/p^level)^x given by its exponent on a fixed generator.

    chi(g^t) = zeta^(c t) with zeta of order phi(p^level).  The value at the
    uniformizer is fixed to 1 (all formulas downstream evaluate on units
    only).  Exponents are reported modulo value_order = phi(p^level)/gcd.
    """

    def __init__(self, p: int, level: int, exp_on_gen: int):
        if level < 1:
            raise ValueError("level must be >= 1")
        self.ctx = get_context(p, level)
        self.p = p
        self.level = level
        self.group_order = self.ctx.unit_count()
        self.exp_on_gen = exp_on_gen % self.group_order
        g = math.gcd(self.exp_on_gen, self.group_order)
        self.value_order = self.group_order // g
        self._reduced_exp = self.exp_on_gen // g
        self.conductor = self._compute_conductor()

    def _compute_conductor(self) -> int:
        if self.exp_on_gen == 0:
            return 0
        modulus = self.p**self.level
        for lvl in range(1, self.level + 1):
            step = self.p**lvl
            if all(
                self.exponent(1 + step * t) == 0
                for t in range(modulus // step)
            ):
                return lvl
        raise AssertionError("character nontrivial on the trivial subgroup")

    def exponent(self, u: int | PAdicScalar) -> int:
        """chi(u) = zeta_{value_order}^(returned exponent)."""
        if isinstance(u, PAdicScalar):
            u = u.residue_unit(self.level)
        return self._reduced_exp * self.ctx.dlog(u) % self.value_order

    def eval_exponent(self, u: int | PAdicScalar, m: int) -> int:
        if m % self.value_order:
            raise ValueError("working modulus incompatible with value order")
        return self.exponent(u) * (m // self.value_order) % m

    def inverse(self) -> "MultChar":
        return MultChar(self.p, self.level, -self.exp_on_gen)

    @property
    def is_primitive(self) -> bool:
        return self.conductor == self.level

    def __repr__(self) -> str:
        return (f"MultChar(p={self.p}, level={self.level}, "
                f"c={self.exp_on_gen}, a={self.conductor})")


def primitive_char(p: int, level: int) -> MultChar:
    """Canonical primitive character mod p^level (exponent 1 on the generator)."""
    chi = MultChar(p, level, 1)
    assert chi.is_primitive
    return chi


def all_primitive_chars(p: int, level: int) -> list[MultChar]:
    out = [MultChar(p, level, c) for c in range(1, (p - 1) * p ** (level - 1))
           if c % p != 0]
    assert all(chi.is_primitive for chi in out)
    return out


@lru_cache(maxsize=None)
def alpha_of_chi(chi: MultChar) -> PAdicScalar:
    """The unique alpha with v(alpha) = -a(chi) and chi(1+dx) = psi(alpha dx)
    for every dx in p^ceil(a/2), a(chi) >= 2.  Verified exhaustively; the
    unit of alpha is determined (and returned) mod p^floor(a/2)."""
    a = chi.conductor
    if a < 2:
        raise ValueError("linearization needs conductor >= 2")
    if chi.level != a:
        raise ValueError("character must be presented at its conductor level")
    p = chi.p
    hi, lo = (a + 1) // 2, a // 2
    m = math.lcm(chi.value_order, p**lo)
    mod_a = p**a
    survivors = []
    for w in range(1, p**lo):
        if w % p == 0:
            continue
        if all(
            chi.eval_exponent((1 + p**hi * t) % mod_a, m)
            == psi_exponent_scaled(p, lo, w * t, m)
            for t in range(p**lo)
        ):
            survivors.append(w)
    if len(survivors) != 1:
        raise AssertionError(f"alpha search found {len(survivors)} candidates")
    ctx = get_context(p, lo)
    return ctx.scalar(-a, survivors[0], lo)


# ---------------------------------------------------------------------------
# the unit group of o_E / p_E^L and characters theta of E^x
# ---------------------------------------------------------------------------


class UnitGroupE:
    """(o_E/p_E^L)^x on canonical integer coordinate pairs.

    Keys are (A, B) for A + B*sqrt(D) with A mod p^L, B mod p^L (unramified)
    or A mod p^ceil(L/2), B mod p^floor(L/2) (ramified).  The group is realized
    as the verified direct product of three explicit generators; the full
    discrete-log table is built by enumeration and its size is asserted to
    equal the group order, which certifies independence.
    """

    def __init__(self, p: int, ramified: bool, level: int):
        if level < 1:
            raise ValueError("level must be >= 1")
        self.p = p
        self.ramified = ramified
        self.level = level
        self.d_unit = 1 if ramified else smallest_nonresidue(p)
        if ramified:
            self.mod_a = p ** ((level + 1) // 2)
            self.mod_b = p ** (level // 2)
        else:
            self.mod_a = self.mod_b = p**level
        q_e = p if ramified else p * p
        self.order = q_e**level - q_e ** (level - 1)
        if self.order > GROUP_TABLE_BUDGET:
            raise BudgetError(f"unit group of size {self.order} exceeds budget")
        self.generators, self.gen_orders = self._find_generators()
        self.dlog = self._build_table()

    # -- coordinate arithmetic ------------------------------------------------

    def mul(self, x: tuple[int, int], y: tuple[int, int]) -> tuple[int, int]:
        a1, b1 = x
        a2, b2 = y
        if self.ramified:
            return ((a1 * a2 + self.p * b1 * b2) % self.mod_a,
                    (a1 * b2 + b1 * a2) % self.mod_b)
        d = self.d_unit
        return ((a1 * a2 + d * b1 * b2) % self.mod_a,
                (a1 * b2 + b1 * a2) % self.mod_b)

    def power(self, x: tuple[int, int], k: int) -> tuple[int, int]:
        k %= self.order
        acc = (1, 0)
        base = x
        while k:
            if k & 1:
                acc = self.mul(acc, base)
            base = self.mul(base, base)
            k >>= 1
        return acc

    def conj_key(self, x: tuple[int, int]) -> tuple[int, int]:
        return (x[0], -x[1] % self.mod_b)

    def element_order(self, x: tuple[int, int]) -> int:
        n = self.order
        for f in _prime_factors(self.order):
            while n % f == 0 and self.power(x, n // f) == (1, 0):
                n //= f
        return n

    # -- structure -------------------------------------------------------------

    def _find_generators(self):
        p, lvl = self.p, self.level
        if self.ramified:
            # Teichmueller lift of a residue-field generator, then the two
            # one-unit generators 1+sqrt(p) and 1+p
            g0 = self.power((_primitive_root(p), 0), p ** (lvl - 1))
            gens = [g0, (1, 1), ((1 + p) % self.mod_a, 0)]
            expect = [p - 1, p ** (lvl // 2), p ** ((lvl - 1) // 2)]
        else:
            g0 = self._residue_field_generator()
            gens = [g0, ((1 + p) % self.mod_a, 0), (1, p % self.mod_b)]
            expect = [p * p - 1, p ** (lvl - 1), p ** (lvl - 1)]
        orders = [self.element_order(g) for g in gens]
        if orders != expect:
            raise ConstructionError(
                f"unexpected generator orders {orders}, wanted {expect}")
        return gens, orders

    def _residue_field_generator(self) -> tuple[int, int]:
        # search F_{p^2}^x for a generator, then kill the p-part of its lift
        p, lvl = self.p, self.level
        target = p * p - 1
        for a in range(p):
            for b in range(1, p):
                if _ff_order(p, self.d_unit, a, b) == target:
                    return self.power((a, b), p ** (2 * (lvl - 1)))
        raise ConstructionError("no generator of the quadratic residue field")

    def _build_table(self) -> dict[tuple[int, int], tuple[int, int, int]]:
        g0, g1, g2 = self.generators
        o0, o1, o2 = self.gen_orders
        table: dict[tuple[int, int], tuple[int, int, int]] = {}
        x0 = (1, 0)
        for e0 in range(o0):
            x1 = x0
            for e1 in range(o1):
                x2 = x1
                for e2 in range(o2):
                    table[x2] = (e0, e1, e2)
                    x2 = self.mul(x2, g2)
                x1 = self.mul(x1, g1)
            x0 = self.mul(x0, g0)
        if len(table) != self.order:
            raise ConstructionError(
                "generators do not present the unit group as a direct product")
        return table

    def keys(self) -> list[tuple[int, int]]:
        return list(self.dlog.keys())

    def f_unit_keys(self) -> list[tuple[int, int]]:
        """Image of o^x among the keys."""
        return [(u, 0) for u in range(1, self.mod_a) if u % self.p != 0]


def _prime_factors(n: int) -> list[int]:
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def _primitive_root(p: int) -> int:
    for g in range(2, p):
        if all(pow(g, (p - 1) // f, p) != 1 for f in _prime_factors(p - 1)):
            return g
    raise ValueError(f"no primitive root mod {p}")


def _ff_order(p: int, d: int, a: int, b: int) -> int:
    # order of a + b sqrt(d) in F_{p^2}^x
    if a % p == 0 and b % p == 0:
        return 0
    x, n = (a % p, b % p), 1
    while x != (1, 0):
        x = ((x[0] * a + x[1] * b * d) % p, (x[0] * b + x[1] * a) % p)
        n += 1
    return n


@lru_cache(maxsize=None)
def get_unit_group(p: int, ramified: bool, level: int) -> UnitGroupE:
    return UnitGroupE(p, ramified, level)


class ThetaChar:
    """Character of E^x trivial on F^x, tabulated on (o_E/p_E^L)^x.

    Stored as a dense exponent table over the unit-group keys together with
    the sign at the uniformizer of E (forced to +1 in the unramified case,
    where the uniformizer lies in F^x).
    """

    def __init__(self, group: UnitGroupE, exps: tuple[int, int, int],
                 pi_sign: int = 1):
        self.group = group
        self.p = group.p
        self.ramified = group.ramified
        self.level = group.level
        self.exps = exps
        if pi_sign not in (1, -1):
            raise ValueError("uniformizer value must be +-1")
        if not group.ramified and pi_sign != 1:
            raise ValueError("unramified uniformizer lies in F^x; value forced to 1")
        self.pi_sign = pi_sign

        o0, o1, o2 = group.gen_orders
        mg = math.lcm(o0, o1, o2)
        r0, r1, r2 = mg // o0, mg // o1, mg // o2
        t0, t1, t2 = exps
        g = math.gcd(math.gcd(t0 * r0, t1 * r1), math.gcd(t2 * r2, mg))
        vo = mg // g
        if pi_sign == -1:
            vo = math.lcm(vo, 2)
        self.value_order = vo
        scale = vo // (mg // g)
        self.table = {
            key: ((t0 * e0 * r0 + t1 * e1 * r1 + t2 * e2 * r2) // g * scale) % vo
            for key, (e0, e1, e2) in group.dlog.items()
        }

    def exponent(self, key: tuple[int, int]) -> int:
        """theta on the unit class of key, as an exponent mod value_order."""
        a = key[0] % self.group.mod_a
        b = key[1] % self.group.mod_b
        return self.table[(a, b)]

    def eval_exponent(self, key: tuple[int, int], m: int) -> int:
        if m % self.value_order:
            raise ValueError("working modulus incompatible with value order")
        return self.exponent(key) * (m // self.value_order) % m

    def pi_exponent(self, c: int, m: int) -> int:
        """theta(piE^c) as an exponent in Z/m."""
        if self.pi_sign == 1 or c % 2 == 0:
            return 0
        if m % 2:
            raise ValueError("working modulus cannot express -1")
        return m // 2

    def conductor(self) -> int:
        """Recomputed from the table (for cross-checking the construction)."""
        for target in range(self.level, 0, -1):
            probe = _one_unit_keys(self.group, target - 1)
            if any(self.exponent(k) != 0 for k in probe):
                return target
        return 0

    def is_regular(self) -> bool:
        g = self.group
        return any(self.exponent(g.conj_key(k)) != self.exponent(k)
                   for k in g.generators)

    def with_pi_sign(self, sign: int) -> "ThetaChar":
        return ThetaChar(self.group, self.exps, sign)

    def conjugated(self) -> "ThetaChar":
        """theta o (Galois conjugation)."""
        out = ThetaChar(self.group, self.exps, self.pi_sign)
        g = self.group
        out.table = {k: self.table[g.conj_key(k)] for k in self.table}
        return out

    def __repr__(self) -> str:
        kind = "ramified" if self.ramified else "unramified"
        return (f"ThetaChar(p={self.p}, {kind}, a={self.level}, "
                f"exps={self.exps}, pi={self.pi_sign})")


def _one_unit_keys(group: UnitGroupE, depth: int) -> list[tuple[int, int]]:
    """All classes of (1 + p_E^depth)/(1 + p_E^L); depth 0 gives every unit."""
    if depth <= 0:
        return group.keys()
    p, lvl = group.p, group.level
    out = []
    if group.ramified:
        ca = p ** ((depth + 1) // 2)
        cb = p ** (depth // 2)
    else:
        ca = cb = p**depth
    for s in range(group.mod_a // ca):
        for t in range(group.mod_b // cb):
            if s == 0 and t == 0:
                continue
            out.append(((1 + ca * s) % group.mod_a, (cb * t) % group.mod_b))
    return out


def build_theta(p: int, ramified: bool, level: int) -> ThetaChar:
    """Deterministic construction of a character of E^x with exact conductor
    `level`, trivial on F^x and not fixed by the Galois conjugation.

    Candidates are enumerated over exponent triples on the verified generator
    set; the first (lexicographically) passing all filters is returned.  In
    the ramified case with odd level no candidate can pass (the deepest shell
    of 1-units consists of F-elements), and construction fails explicitly.
    """
    if level < 2:
        raise ValueError("need level >= 2")
    group = get_unit_group(p, ramified, level)
    o0, o1, o2 = group.gen_orders
    mg = math.lcm(o0, o1, o2)
    r0, r1, r2 = mg // o0, mg // o1, mg // o2

    f_triples = [group.dlog[k] for k in group.f_unit_keys()]
    shell_triples = [group.dlog[k] for k in _one_unit_keys(group, level - 1)]
    gen_pairs = [(group.dlog[g], group.dlog[group.conj_key(g)])
                 for g in group.generators]

    def raw(t, e):
        return (t[0] * e[0] * r0 + t[1] * e[1] * r1 + t[2] * e[2] * r2) % mg

    for t0 in range(o0):
        for t1 in range(o1):
            for t2 in range(o2):
                t = (t0, t1, t2)
                if all(raw(t, e) == 0 for e in f_triples) \
                        and any(raw(t, e) != 0 for e in shell_triples) \
                        and any(raw(t, e) != raw(t, ec) for e, ec in gen_pairs):
                    theta = ThetaChar(group, t, 1)
                    assert theta.conductor() == level
                    return theta
    raise ConstructionError(
        f"no admissible character at level {level} "
        f"({'ramified' if ramified else 'unramified'}, p={p})")


@lru_cache(maxsize=None)
def alpha_of_theta(theta: ThetaChar) -> QuadExtElement:
    """Purely imaginary alpha with v_E(alpha) = -a(theta) - e_E + 1 and
    theta(1+du) = psi_E(alpha du) for every du in p_E^ceil(a/2), verified
    exhaustively over the classes mod p_E^a."""
    a = theta.level
    if a < 2:
        raise ValueError("linearization needs conductor >= 2")
    p = theta.p
    group = theta.group
    hi = (a + 1) // 2

    if theta.ramified:
        if a % 2:
            raise ValueError("ramified linearization needs even conductor")
        # alpha = w p^(-(a+2)/2) sqrt(p);  du = p^ceil(h/2) s + p^floor(h/2) t sqrt(p)
        # with h = a/2, so tr(alpha du) = 2 w t p^(floor(h/2) - a/2): the trace
        # pairing sees (and determines) w mod p^(a/2 - floor(h/2))
        h = a // 2
        ca, cb = p ** ((h + 1) // 2), p ** (h // 2)
        sa, sb = group.mod_a // ca, group.mod_b // cb
        tr_level = a // 2 - h // 2
        m = math.lcm(theta.value_order, p**tr_level)
        survivors = []
        for w in range(1, p**tr_level):
            if w % p == 0:
                continue
            ok = True
            for s in range(sa):
                for t in range(sb):
                    key = ((1 + ca * s) % group.mod_a, cb * t % group.mod_b)
                    lhs = theta.eval_exponent(key, m)
                    rhs = psi_exponent_scaled(p, tr_level, 2 * w * t, m)
                    if lhs != rhs:
                        ok = False
                        break
                if not ok:
                    break
            if ok:
                survivors.append(w)
        if len(survivors) != 1:
            raise AssertionError(f"alpha search found {len(survivors)} candidates")
        ext = get_ext_context(p, tr_level, True)
        b = ext.base.scalar(-(a + 2) // 2, survivors[0], tr_level)
        return ext.element(ext.base.zero(), b)

    # unramified: alpha = w * sqrt(D) * p^(-a); w determined mod p^floor(a/2)
    lo = a // 2
    d = group.d_unit
    m = math.lcm(theta.value_order, p**lo)
    mod_full = p**a
    survivors = []
    for w in range(1, p**lo):
        if w % p == 0:
            continue
        ok = True
        for s in range(p ** (a - hi)):
            for t in range(p ** (a - hi)):
                key = ((1 + p**hi * s) % mod_full, p**hi * t % mod_full)
                lhs = theta.eval_exponent(key, m)
                # tr(alpha du) = 2 w t d p^(hi - a)
                rhs = psi_exponent_scaled(p, a - hi, 2 * w * t * d, m)
                if lhs != rhs:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            survivors.append(w)
    if len(survivors) != 1:
        raise AssertionError(f"alpha search found {len(survivors)} candidates")
    ext = get_ext_context(p, max(lo, 1), False)
    b = ext.base.scalar(-a, survivors[0], lo)
    return ext.element(ext.base.zero(), b)


# ---------------------------------------------------------------------------
# Gauss sums
# ---------------------------------------------------------------------------


def gauss_c0_principal_series(mu: MultChar, m: int | None = None) -> CycloValue:
    """q^(-n0) * sum over units mod p^n0 of mu(u) psi(-u/p^n0), n0 = defining
    level of mu.  For primitive mu the magnitude is exactly q^(-n0/2)."""
    p, n0 = mu.p, mu.level
    if m is None:
        m = math.lcm(mu.value_order, p**n0)
    counts = np.zeros(m, dtype=np.int64)
    for u in mu.ctx.units(n0):
        e = (mu.eval_exponent(u, m) + psi_exponent_scaled(p, n0, -u, m)) % m
        counts[e] += 1
    return CycloValue.from_counts(m, counts, Fraction(1, p**n0))


def _shell_sum_counts(theta: ThetaChar, m: int) -> np.ndarray:
    """Counts vector of sum over the shell v_E(u) = -a(theta)-e_E+1 of
    theta^(-1)(u) psi_E(u), u = piE^c u0 over the level-a transversal."""
    p, a = theta.p, theta.level
    e_e = 2 if theta.ramified else 1
    c = -a - e_e + 1
    counts = np.zeros(m, dtype=np.int64)
    pi_part = (-theta.pi_exponent(c, m)) % m
    if theta.ramified:
        n0 = a // 2
        for (A, B) in theta.group.dlog:
            # tr(piE^c (A + B sqrt(p))) = 2 B p^((c+1)/2), (c+1)/2 = -n0
            e = (pi_part - theta.eval_exponent((A, B), m)
                 + psi_exponent_scaled(p, n0, 2 * B, m)) % m
            counts[e] += 1
    else:
        for (A, B) in theta.group.dlog:
            # tr(p^c (A + B sqrt(d))) = 2 A p^c
            e = (pi_part - theta.eval_exponent((A, B), m)
                 + psi_exponent_scaled(p, a, 2 * A, m)) % m
            counts[e] += 1
    return counts


def required_gauss_modulus(theta: ThetaChar) -> int:
    p, a = theta.p, theta.level
    n0 = a // 2 if theta.ramified else a
    return math.lcm(theta.value_order, p**n0 if theta.ramified else p**a, 2)


def gauss_c0_supercuspidal(theta: ThetaChar, m: int | None = None) -> CycloValue:
    """Shell Gauss sum with the additive-compatible normalization 1/q_E^a.

    With this normalization |C0| = q_E^(-a/2) in both ramification cases, so
    |C0| q^(n/2) equals 1 (unramified) or q^(1/2) (ramified), inside the
    window [q^(-1/2), q^(1/2)].  Normalizing by the number of shell classes
    instead would scale the ramified value by q/(q-1) and leave the window.
    """
    if m is None:
        m = required_gauss_modulus(theta)
    q_e = theta.p if theta.ramified else theta.p**2
    return CycloValue.from_counts(m, _shell_sum_counts(theta, m),
                                  Fraction(1, q_e**theta.level))


def gauss_c0_shell(theta: ThetaChar, m: int | None = None) -> CycloValue:
    """Same sum normalized by the shell class count (multiplicative measure);
    this is the convention the Whittaker evaluator divides by, and any
    normalization constant cancels there."""
    if m is None:
        m = required_gauss_modulus(theta)
    return CycloValue.from_counts(m, _shell_sum_counts(theta, m),
                                  Fraction(1, theta.group.order))


def shell_norm_valuation(theta: ThetaChar) -> int:
    """v(N(u)) for shell elements u = piE^c u0, checked exhaustively to be
    the same for every representative; returns the common value (= -n)."""
    p, a = theta.p, theta.level
    e_e = 2 if theta.ramified else 1
    c = -a - e_e + 1
    if theta.ramified:
        base = c  # v(N(piE^c)) = v((-p)^c) with piE = sqrt(p)
        for (A, B) in theta.group.dlog:
            if (A * A - p * B * B) % p == 0:
                raise AssertionError("non-unit norm on the shell")
    else:
        base = 2 * c
        d = theta.group.d_unit
        for (A, B) in theta.group.dlog:
            if (A * A - d * B * B) % p == 0:
                raise AssertionError("non-unit norm on the shell")
    return base
