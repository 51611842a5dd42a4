"""Whittaker newvector values for the two representation families.

The quantity computed here is the value of the normalized newvector along a
diagonal argument composed with a lower-triangular shear of depth i.  For a
principal-series representation induced from a pair (mu, mu^-1) this reduces
to a character sum over units of the base field; for a supercuspidal built
from a regular character theta of a quadratic extension it reduces to a sum
over one multiplicative shell of the extension.

Values are returned as exact cyclotomic numerators together with the family
Gauss constant C0; the true value is numerator / C0.  Keeping the quotient
symbolic lets support tests assert exact zeros and lets downstream averages
accumulate integer count vectors with a single basis reduction at the end.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .characters import (
    MultChar,
    ThetaChar,
    gauss_c0_principal_series,
    gauss_c0_shell,
    psi_exponent_scaled,
)
from .cyclotomic import CycloValue
from .errors import PrecisionError
from .residue import PAdicScalar, get_ext_context, unit_shell_reps


class ReprSpec:
    """Representation data: family tag plus the inducing character.

    Derived integers: the conductor exponent n, n1 = ceil(n/2) and
    n0 = floor(n/2).  The central character is trivial in both families by
    construction, and n > 2 always (depth-zero cases are out of scope).
    """

    __slots__ = ("family", "p", "mu", "theta", "ramified", "n", "n0", "n1")

    def __init__(self, family: str, p: int, mu, theta, ramified, n: int):
        self.family = family
        self.p = p
        self.mu = mu
        self.theta = theta
        self.ramified = ramified
        self.n = n
        self.n0 = n // 2
        self.n1 = n - n // 2

    @classmethod
    def principal_series(cls, mu: MultChar) -> "ReprSpec":
        if not mu.is_primitive or mu.conductor < 2:
            raise ValueError("inducing character must be primitive of level >= 2")
        return cls("ps", mu.p, mu, None, None, 2 * mu.conductor)

    @classmethod
    def supercuspidal(cls, theta: ThetaChar) -> "ReprSpec":
        if theta.conductor() != theta.level:
            raise ValueError("character level must equal its conductor")
        if not theta.is_regular():
            raise ValueError("character must differ from its Galois conjugate")
        if any(theta.exponent(k) for k in theta.group.f_unit_keys()):
            raise ValueError("character must be trivial on base-field units")
        if theta.ramified and theta.level % 2:
            raise ValueError("ramified conductor must be even")
        n = theta.level + 1 if theta.ramified else 2 * theta.level
        return cls("sc", theta.p, None, theta, theta.ramified, n)

    @property
    def label(self) -> str:
        if self.family == "ps":
            return "ps"
        return "sc-ram" if self.ramified else "sc-unram"

    @property
    def char_value_order(self) -> int:
        return (self.mu or self.theta).value_order

    def modulus(self, psi_level: int | None = None) -> int:
        """Root-of-unity order large enough for every term the evaluators
        produce: the character values plus additive characters of level up
        to max(psi_level, n0)."""
        level = max(psi_level or 0, self.n0)
        return math.lcm(self.char_value_order, self.p**level)

    def __repr__(self) -> str:
        return f"ReprSpec({self.label}, p={self.p}, n={self.n})"


def required_precision(spec: ReprSpec, i: int) -> int:
    """Residue precision of the diagonal argument that pins the value down:
    the answer depends on x only through x mod p^(this level)."""
    if spec.family == "ps":
        return spec.n0
    return max(spec.n - i, 1)


class WhittakerEngine:
    """Evaluator for one representation at a fixed cyclotomic modulus.

    Count vectors are cached per (shear depth, unit residue); the cache is
    what makes grid averaging fast, and can be bypassed for timing honesty.
    """

    def __init__(self, spec: ReprSpec, m: int | None = None,
                 psi_level: int | None = None):
        self.spec = spec
        self.m = m if m is not None else spec.modulus(psi_level)
        if self.m % spec.char_value_order or self.m % spec.p**spec.n0:
            raise ValueError("modulus not compatible with the representation")
        self._cache: dict[tuple[int, int, int], np.ndarray] = {}
        self._mu1_cache: dict[int, np.ndarray] = {}
        self._c0 = None
        self._c0_complex = None
        if spec.family == "ps":
            self._init_ps_tables()
        else:
            self._sc_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    # -- principal series tables ------------------------------------------

    def _init_ps_tables(self) -> None:
        spec = self.spec
        p, n0, m = spec.p, spec.n0, self.m
        pn0 = p**n0
        self._u_arr = np.array(spec.mu.ctx.units(n0), dtype=np.int64)
        dense = np.zeros(pn0, dtype=np.int64)
        for u in spec.mu.ctx.units(n0):
            dense[u] = spec.mu.eval_exponent(u, m)
        self._mu_dense = dense

    def _ps_shift_factor(self, i: int) -> np.ndarray:
        # mu(1 + u pi^(i-n0)) per unit u; constant 1 once i - n0 >= n0
        if i not in self._mu1_cache:
            p, n0 = self.spec.p, self.spec.n0
            arg = (1 + self._u_arr * p ** (i - n0)) % p**n0
            self._mu1_cache[i] = self._mu_dense[arg]
        return self._mu1_cache[i]

    # -- supercuspidal shell tables ----------------------------------------

    def _sc_tables(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        """Per-representative arrays at shell transversal level k >= a:
        (character + trace exponent scaled to m, unit part of the norm)."""
        if k in self._sc_cache:
            return self._sc_cache[k]
        theta = self.spec.theta
        p, a, n0, m = theta.p, theta.level, self.spec.n0, self.m
        ext = get_ext_context(p, max(self.spec.n, 2), theta.ramified)
        reps = unit_shell_reps(ext, k)
        e_e = 2 if theta.ramified else 1
        c = -a - e_e + 1
        pi_part = (-theta.pi_exponent(c, m)) % m
        mod_a, mod_b = theta.group.mod_a, theta.group.mod_b
        pn0 = p**n0
        base = np.empty(len(reps), dtype=np.int64)
        norm = np.empty(len(reps), dtype=np.int64)
        for j, (A, B) in enumerate(reps):
            key = (A % mod_a, B % mod_b)
            if theta.ramified:
                # tr(piE^c (A + B sqrt(p))) = 2 B p^(-n0); N(piE^c) = -p^(-n)
                tr = psi_exponent_scaled(p, n0, 2 * B, m)
                norm[j] = (-(A * A - p * B * B)) % pn0
            else:
                # tr(p^c (A + B sqrt(d))) = 2 A p^(-a); N(p^c) = p^(-n)
                tr = psi_exponent_scaled(p, a, 2 * A, m)
                norm[j] = (A * A - theta.group.d_unit * B * B) % pn0
            base[j] = (pi_part - theta.eval_exponent(key, m) + tr) % m
        self._sc_cache[k] = (base, norm)
        return self._sc_cache[k]

    # -- evaluation ---------------------------------------------------------

    @property
    def c0(self) -> CycloValue:
        if self._c0 is None:
            if self.spec.family == "ps":
                self._c0 = gauss_c0_principal_series(self.spec.mu, self.m)
            else:
                self._c0 = gauss_c0_shell(self.spec.theta, self.m)
        return self._c0

    @property
    def c0_complex(self) -> complex:
        if self._c0_complex is None:
            self._c0_complex = self.c0.complex()
        return self._c0_complex

    def term_count(self, shell_level: int | None = None) -> int:
        if self.spec.family == "ps":
            return self.spec.mu.ctx.unit_count()
        k = shell_level if shell_level is not None else self.spec.theta.level
        q_e = self.spec.p if self.spec.ramified else self.spec.p**2
        return q_e**k - q_e ** (k - 1)

    def numerator_scale(self, shell_level: int | None = None) -> Fraction:
        # ps: additive measure vol(o) = 1, matching the C0 normalization;
        # sc: multiplicative measure vol(o_E^x) = 1, one weight per class
        if self.spec.family == "ps":
            return Fraction(1, self.spec.p**self.spec.n0)
        return Fraction(1, self.term_count(shell_level))

    def _check_range(self, i: int) -> None:
        if not self.spec.n0 < i <= self.spec.n:
            raise ValueError(f"shear depth {i} outside (n0, n] for {self.spec}")

    def numerator_counts(self, i: int, x_res: int, shell_level: int | None = None,
                         cache: bool = True) -> np.ndarray:
        """Integer count vector of the unnormalized sum for a unit residue
        x_res; the value is from_counts(m, counts, numerator_scale()) / C0."""
        self._check_range(i)
        spec, p, m = self.spec, self.spec.p, self.m
        if spec.family == "ps":
            pn0 = p**spec.n0
            x_res %= pn0
            key = (i, x_res, 0)
            if cache and key in self._cache:
                return self._cache[key]
            xu = (x_res * self._u_arr) % pn0
            exps = (self._ps_shift_factor(i) + self._mu_dense[xu]
                    + ((-xu) % pn0) * (m // pn0)) % m
        else:
            k = shell_level if shell_level is not None else spec.theta.level
            lvl = spec.n - i
            pl = p**lvl
            x_res %= pl
            key = (i, x_res, k)
            if cache and key in self._cache:
                return self._cache[key]
            base, norm = self._sc_tables(k)
            inv = pow(x_res, -1, pl) if lvl else 0
            exps = (base + ((-inv * norm) % pl) * (m // pl)) % m
        counts = np.zeros(m, dtype=np.int64)
        np.add.at(counts, exps, 1)
        counts.flags.writeable = False
        if cache:
            self._cache[key] = counts
        return counts

    def numerator(self, i: int, x: PAdicScalar,
                  shell_level: int | None = None) -> CycloValue:
        """Exact cyclotomic numerator of the value at diagonal argument x;
        zero off the unit locus.  The value itself is numerator / C0."""
        self._check_range(i)
        if x.is_zero or x.val != 0:
            return CycloValue.zero(self.m)
        res = x.residue_unit(required_precision(self.spec, i))
        counts = self.numerator_counts(i, res, shell_level)
        return CycloValue.from_counts(self.m, counts,
                                      self.numerator_scale(shell_level))

    def value(self, i: int, x: PAdicScalar) -> complex:
        """Float value numerator / C0 (for oracles and reports; exact paths
        should compare numerators instead)."""
        return self.numerator(i, x).complex() / self.c0_complex
