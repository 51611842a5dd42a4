"""Matrix coefficients of the newvector against shear-translated arguments.

phi(i, a, m) averages psi(m x) times the newvector value at a x over the unit
group; it is the ground truth every faster evaluator is checked against.  The
translated coefficient on the depth-one congruence unit ball reduces to
phi(i, a, m) through an explicit row reduction, implemented here on exact
integer residue matrices so no precision is lost in products or inverses.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .cyclotomic import CycloValue
from .residue import PAdicScalar, get_context, padic_valuation
from .whittaker import ReprSpec, WhittakerEngine, required_precision


class MatCoefQuery:
    """One evaluation request: shear depth i with diagonal and additive
    arguments.  m may be the zero scalar (additive character trivial)."""

    __slots__ = ("spec", "i", "a", "m")

    def __init__(self, spec: ReprSpec, i: int, a: PAdicScalar, m: PAdicScalar):
        if not spec.n0 < i <= spec.n:
            raise ValueError(f"shear depth {i} outside (n0, n] for {spec}")
        self.spec = spec
        self.i = i
        self.a = a
        self.m = m


class MatCoefEngine:
    """phi evaluator for one representation at a fixed cyclotomic modulus.

    Values are exact numerators over the family Gauss constant C0, like the
    newvector engine they wrap: phi = numerator / C0.
    """

    def __init__(self, spec: ReprSpec, psi_level: int | None = None,
                 m: int | None = None):
        # additive arguments down to v(m) = -(n1 + 1) fit the default modulus
        self.spec = spec
        self.weng = WhittakerEngine(
            spec, m, psi_level=spec.n1 + 1 if psi_level is None else psi_level)
        self.m = self.weng.m

    @property
    def c0(self) -> CycloValue:
        return self.weng.c0

    @property
    def c0_complex(self) -> complex:
        return self.weng.c0_complex

    def phi_counts(self, i: int, a: PAdicScalar, madd: PAdicScalar,
                   grouped: bool = True, cache_w: bool = True,
                   shell_level: int | None = None) -> tuple[np.ndarray, Fraction]:
        """Count vector and normalization of the unit average; the grouped
        path collapses x-classes on which both factors are constant, the
        ungrouped path iterates the full unit set for the stated average."""
        spec, p = self.spec, self.spec.p
        if a.is_zero or a.val != 0:
            return np.zeros(self.m, dtype=np.int64), Fraction(1)
        t = 0
        m_unit = 0
        if not madd.is_zero and madd.val < 0:
            t = -madd.val
            if self.m % p**t:
                raise ValueError("additive argument too deep for the modulus; "
                                 "rebuild the engine with a higher psi_level")
            m_unit = madd.residue_unit(t)
        w_lvl = required_precision(spec, i)
        k = max(spec.n0, spec.n - i, t) + 1
        k_eff = max(w_lvl, t, 1) if grouped else k
        pw = p**w_lvl
        pt = p**t
        scale_psi = self.m // pt
        a_res = a.residue_unit(w_lvl)
        accum = np.zeros(self.m, dtype=np.int64)
        for x in get_context(p, k_eff).units(k_eff):
            wc = self.weng.numerator_counts(i, a_res * x % pw,
                                            shell_level=shell_level,
                                            cache=cache_w)
            shift = m_unit * x % pt * scale_psi
            accum += np.roll(wc, shift) if shift else wc
        norm = self.weng.numerator_scale(shell_level) \
            / ((p - 1) * p ** (k_eff - 1))
        return accum, norm

    def phi_numerator(self, i: int, a: PAdicScalar, madd: PAdicScalar,
                      grouped: bool = True, cache_w: bool = True,
                      shell_level: int | None = None) -> CycloValue:
        counts, norm = self.phi_counts(i, a, madd, grouped, cache_w,
                                       shell_level)
        return CycloValue.from_counts(self.m, counts, norm)

    def phi_value(self, i: int, a: PAdicScalar, madd: PAdicScalar) -> complex:
        return self.phi_numerator(i, a, madd).complex() / self.c0_complex

    # -- translated coefficient on the congruence unit ball -----------------

    def phi_prime_numerator(self, g: "KStarElement") -> CycloValue:
        i, a, madd = decompose_k_star(g, self.spec)
        return self.phi_numerator(i, a, madd)

    def phi_prime_value(self, g: "KStarElement") -> complex:
        return self.phi_prime_numerator(g).complex() / self.c0_complex


class KStarElement:
    """Element of the depth-one congruence unit ball: an integer residue
    matrix mod p^k with unit diagonal and off-diagonal entries divisible
    by p.  Products and inverses stay exact at the stored modulus."""

    __slots__ = ("p", "k", "mod", "a", "b", "c", "d")

    def __init__(self, p: int, k: int, a: int, b: int, c: int, d: int):
        self.p = p
        self.k = k
        self.mod = p**k
        self.a = a % self.mod
        self.b = b % self.mod
        self.c = c % self.mod
        self.d = d % self.mod
        if self.a % p == 0 or self.d % p == 0:
            raise ValueError("diagonal entries must be units")
        if self.b % p or self.c % p:
            raise ValueError("off-diagonal entries must be divisible by p")

    @classmethod
    def identity(cls, p: int, k: int) -> "KStarElement":
        return cls(p, k, 1, 0, 0, 1)

    @classmethod
    def random(cls, p: int, k: int, rng, level: int | None = None) -> "KStarElement":
        """Uniform entries under the membership constraints; with level set,
        min(v(b), v(c)) equals that level exactly (by construction)."""
        mod = p**k

        def unit(digits: int) -> int:
            return p * rng.randrange(p ** (digits - 1)) + rng.randrange(1, p)

        if level is None:
            b = rng.randrange(mod // p) * p
            c = rng.randrange(mod // p) * p
        else:
            if not 1 <= level < k:
                raise ValueError("level must lie in [1, k)")
            exact = p**level * unit(k - level)
            other = p**level * rng.randrange(p ** (k - level))
            b, c = (exact, other) if rng.random() < 0.5 else (other, exact)
        return cls(p, k, unit(k), b, c, unit(k))

    @property
    def level(self) -> int:
        """min(v(b), v(c)), capped at the stored modulus exponent."""
        vb = padic_valuation(self.b, self.p) if self.b else self.k
        vc = padic_valuation(self.c, self.p) if self.c else self.k
        return min(vb, vc, self.k)

    def mul(self, other: "KStarElement") -> "KStarElement":
        assert self.p == other.p and self.k == other.k
        return KStarElement(
            self.p, self.k,
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def inv(self) -> "KStarElement":
        # adjugate over det; the central determinant acts trivially, so the
        # adjugate itself represents the inverse for coefficient purposes
        det = self.a * self.d - self.b * self.c
        det_inv = pow(det, -1, self.mod)
        return KStarElement(self.p, self.k, det_inv * self.d,
                            -det_inv * self.b, -det_inv * self.c,
                            det_inv * self.a)

    def __repr__(self) -> str:
        return (f"KStarElement(p={self.p}, k={self.k}, "
                f"[[{self.a},{self.b}],[{self.c},{self.d}]])")


def decompose_k_star(g: KStarElement, spec: ReprSpec
                     ) -> tuple[int, PAdicScalar, PAdicScalar]:
    """Parameters (i, a, m) with phi'(g) = phi(i, a, m).

    Conjugating g by the diagonal uniformizer power of exponent n1 and row
    reducing against the unit lower-right entry leaves an upper-triangular
    part times a lower shear of depth v(c) + n1; a unit-diagonal conjugation
    normalizes the shear and lands in the stated parameter form.  Depth at
    least n is equivalent to depth exactly n.
    """
    p, big_k = g.p, g.k
    if spec.p != p or big_k < spec.n1 + spec.n:
        raise ValueError("matrix stored at insufficient precision")
    ctx = get_context(p, big_k)
    mod = g.mod
    n, n1 = spec.n, spec.n1
    d_inv = pow(g.d, -1, mod)
    det = (g.a * g.d - g.b * g.c) % mod
    cd = g.c * d_inv % mod
    v_c = padic_valuation(cd, p) if cd else big_k
    if v_c + n1 >= n:
        i = n
        a_unit, a_prec = det * d_inv * d_inv, big_k
    else:
        i = v_c + n1
        w = cd // p**v_c
        a_prec = big_k - v_c
        a_unit = det * d_inv * d_inv * pow(w, -1, p**a_prec)
    a_out = ctx.scalar(0, a_unit, a_prec)
    if g.b == 0:
        m_out = ctx.zero()
    else:
        v_b = padic_valuation(g.b, p)
        m_out = ctx.scalar(v_b - n1, g.b // p**v_b * d_inv, big_k - v_b)
    return i, a_out, m_out


# -- support and decay verifiers ------------------------------------------


def support_expected_zero(spec: ReprSpec, i: int, v_a: int | None,
                          v_m: int | None) -> bool:
    """Support law: away from the boundary depths the coefficient lives on
    v(a) = 0 and v(m) = i - n exactly; at i in {n-1, n} the window relaxes
    to v(m) >= -1.  None encodes a zero argument (valuation +infinity)."""
    if v_a != 0:
        return True
    if i <= spec.n - 2:
        return v_m != i - spec.n
    return v_m is not None and v_m <= -2


def verify_support(engine: MatCoefEngine, i: int,
                   grid: list[tuple[PAdicScalar, PAdicScalar]]) -> list[dict]:
    """Evaluate every grid point and compare exact vanishing against the
    support law; rows with violation=True are law breaches (expected none)."""
    spec = engine.spec
    rows = []
    for a, madd in grid:
        v_a = None if a.is_zero else a.val
        v_m = None if madd.is_zero else madd.val
        num = engine.phi_numerator(i, a, madd)
        expected = support_expected_zero(spec, i, v_a, v_m)
        exact = num.is_zero()
        value = num.complex() / engine.c0_complex
        rows.append({
            "p": spec.p, "n": spec.n, "family": spec.label, "i": i,
            "v_a": v_a, "a_unit": None if a.is_zero else a.unit,
            "v_m": v_m, "m_unit": None if madd.is_zero else madd.unit,
            "re": value.real, "im": value.imag, "abs": abs(value),
            "ratio_normalized": abs(value) * spec.p ** ((spec.n - i) / 2),
            "expected_zero": expected, "exact_zero": exact,
            "violation": expected and not exact,
        })
    return rows


def decay_bound(spec: ReprSpec) -> int:
    """Normalized-size bound: the explicit constant chain gives 2q^2 for
    principal series; for supercuspidals the recorded empirical bound q^3."""
    q = spec.p
    return 2 * q * q if spec.family == "ps" else q**3


def verify_decay(engine: MatCoefEngine, i: int, samples: int, rng) -> dict:
    """Max of |phi| q^((n-i)/2) over sampled supported pairs plus the family
    bound; caller asserts max_ratio <= bound."""
    spec = engine.spec
    if not spec.n0 < i < spec.n - 1:
        raise ValueError("decay statement applies strictly inside the range")
    p = spec.p
    ctx = get_context(p, spec.n1 + spec.n)
    worst = (0.0, None)
    for _ in range(samples):
        a = ctx.scalar(0, _random_unit(p, spec.n0 + 1, rng), spec.n0 + 1)
        madd = ctx.scalar(i - spec.n, _random_unit(p, spec.n1 + 1, rng),
                          spec.n1 + 1)
        value = engine.phi_value(i, a, madd)
        ratio = abs(value) * p ** ((spec.n - i) / 2)
        if ratio > worst[0]:
            worst = (ratio, (a.unit, madd.unit))
    return {"p": p, "n": spec.n, "family": spec.label, "i": i,
            "samples": samples, "max_ratio": worst[0], "argmax": worst[1],
            "bound": decay_bound(spec), "ok": worst[0] <= decay_bound(spec)}


def _random_unit(p: int, level: int, rng) -> int:
    return rng.randrange(p ** (level - 1)) * p + rng.randrange(1, p)


# -- invariant subspace dimension ------------------------------------------


def filtration_depth(n1: int, eta: Fraction) -> int:
    """Depth schedule eta -> floor(n1 eta / 2) mapping an exponent budget in
    [0, 1/2] to a congruence level; monotone, bounded by n1."""
    eta = Fraction(eta)
    if not 0 <= eta <= Fraction(1, 2):
        raise ValueError("eta must lie in [0, 1/2]")
    return int(n1 * eta / 2)


def gram_dimension_estimate(engine: MatCoefEngine, sample_count: int, rng,
                            tol: float = 1e-6, return_spectrum: bool = False,
                            elements: list[KStarElement] | None = None):
    """Numerical rank of the Gram matrix of translated coefficients over
    random ball elements; lower-bounds the cyclic span dimension and must
    stay below 4 q^n0.  Raises if the Gram matrix is not PSD within tol.
    Passing elements explicitly lets stabilization checks nest samples."""
    spec = engine.spec
    k = spec.n1 + spec.n
    if elements is not None:
        elems = elements
        sample_count = len(elems)
    else:
        elems = [KStarElement.random(spec.p, k, rng)
                 for _ in range(sample_count)]
    gram = np.empty((sample_count, sample_count), dtype=complex)
    for s in range(sample_count):
        inv = elems[s].inv()
        for t in range(s, sample_count):
            gram[s, t] = engine.phi_prime_value(inv.mul(elems[t]))
            gram[t, s] = gram[s, t].conjugate()
    gram = (gram + gram.conj().T) / 2
    eigs = np.linalg.eigvalsh(gram)
    top = float(eigs[-1])
    if top <= 0:
        return (0, eigs) if return_spectrum else 0
    if float(eigs[0]) < -tol * top:
        raise AssertionError(f"Gram matrix not PSD: min eig {eigs[0]:.3e}")
    rank = int(np.count_nonzero(eigs > tol * top))
    return (rank, eigs) if return_spectrum else rank
