"""Exact arithmetic in Z[zeta_M] with an exact zero test and a float embedding.

Values are integer coordinate vectors over the tensor of prime-power power
bases: Z[zeta_M] = (x) Z[zeta_{p^a}] over the prime powers p^a || M, each
factor in its power basis {zeta_{p^a}^j : j < phi(p^a)}.  Reducing a sum of
roots of unity onto this basis is a linear-time fold per axis (the relation
zeta^{phi(p^a)} = -(1 + zeta^{p^(a-1)} + ... + zeta^{(p-2)p^(a-1)})), so no
reduction table in the size of M is ever materialized.  Coordinates are exact
integers and a value is zero iff every coordinate is zero; an optional
Fraction scale carries measure normalizations exactly.  Division by a Gauss
sum is never performed in this ring: zero tests run on numerators and
magnitudes go through the float embedding.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import BudgetError

PHI_BUDGET = 10**4


def factorize(n: int) -> list[tuple[int, int]]:
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            a = 0
            while n % d == 0:
                n //= d
                a += 1
            out.append((d, a))
        d += 1
    if n > 1:
        out.append((n, 1))
    return out


def euler_phi(n: int) -> int:
    return math.prod((p - 1) * p ** (a - 1) for p, a in factorize(n))


def _poly_divexact(num: list[int], den: list[int]) -> list[int]:
    # exact division of integer polynomials, den monic
    num = list(num)
    q = [0] * (len(num) - len(den) + 1)
    for i in range(len(q) - 1, -1, -1):
        c = num[i + len(den) - 1]
        q[i] = c
        if c:
            for j, dj in enumerate(den):
                num[i + j] -= c * dj
    if any(num[: len(den) - 1]):
        raise ArithmeticError("non-exact polynomial division")
    return q


@lru_cache(maxsize=None)
def cyclotomic_poly(m: int) -> tuple[int, ...]:
    """Coefficients (low to high) of the m-th cyclotomic polynomial.

    Standard recursive quotient of x^m - 1 by the proper-divisor cyclotomics,
    with the radical shortcut Phi_m(x) = Phi_rad(m)(x^(m/rad)).
    """
    if m == 1:
        return (-1, 1)
    rad = math.prod(p for p, _ in factorize(m))
    if rad != m:
        inner = cyclotomic_poly(rad)
        step = m // rad
        out = [0] * ((len(inner) - 1) * step + 1)
        for i, c in enumerate(inner):
            out[i * step] = c
        return tuple(out)
    num = [0] * m + [1]
    num[0] = -1
    for d in range(1, m):
        if m % d == 0:
            num = _poly_divexact(num, list(cyclotomic_poly(d)))
    return tuple(num)


@lru_cache(maxsize=None)
def _basis(m: int) -> "_CycloBasis":
    return _CycloBasis(m)


class _CycloBasis:
    """Cached per-M data: factor shape, fold rules, complex embedding."""

    def __init__(self, m: int):
        if m < 1:
            raise ValueError("modulus must be positive")
        if euler_phi(m) > PHI_BUDGET:
            raise BudgetError(f"phi({m}) = {euler_phi(m)} exceeds the cyclotomic budget")
        self.m = m
        self.factors = factorize(m) if m > 1 else []
        self.moduli = [p**a for p, a in self.factors] or [1]
        self.phis = [(p - 1) * p ** (a - 1) for p, a in self.factors] or [1]
        self.shape = tuple(self.phis)
        # zeta_M^t = prod_i zeta_{q_i}^(w_i t) with w_i = (M/q_i)^(-1) mod q_i;
        # the naive index t mod q_i would embed a Galois twist of the value
        self.axis_unit = [pow(m // q, -1, q) for q in self.moduli] if m > 1 else [1]
        self.axis_index = [
            (w * np.arange(m, dtype=np.int64)) % q
            for w, q in zip(self.axis_unit, self.moduli)
        ]
        roots = []
        for q, phi in zip(self.moduli, self.phis):
            roots.append(np.exp(2j * np.pi * np.arange(phi) / q))
        self.axis_roots = roots

    def fold_axis(self, arr: np.ndarray, axis: int) -> np.ndarray:
        """Reduce axis indices from Z/p^a down to the power basis of Z[zeta_{p^a}]."""
        p, a = self.factors[axis]
        q = p**a
        phi = (p - 1) * p ** (a - 1)
        step = p ** (a - 1)
        arr = np.moveaxis(arr, axis, 0)
        # every folded row e in [phi, q) lands entirely below phi, so the
        # block subtractions are independent of each other
        top = arr[phi:q]
        for k in range(1, p):
            arr[phi - k * step:q - k * step] -= top
        out = arr[:phi]
        return np.moveaxis(out, 0, axis)

    def reduce_counts(self, counts: np.ndarray) -> np.ndarray:
        """Counts over exponents Z/m -> coordinates on the tensor basis."""
        if self.m == 1:
            return counts.reshape(1).copy()
        arr = np.zeros(self.moduli, dtype=counts.dtype)
        idx = tuple(ix for ix in self.axis_index)
        np.add.at(arr, idx, counts)
        for axis in range(len(self.factors)):
            arr = self.fold_axis(arr, axis)
        return arr

    def scatter(self, coords: np.ndarray) -> np.ndarray:
        """Coordinates -> full-shape array over prod(Z/p^a) (identity embed)."""
        full = np.zeros(self.moduli, dtype=coords.dtype)
        full[tuple(slice(0, s) for s in self.shape)] = coords
        return full

    def embed(self, coords: np.ndarray) -> complex:
        acc = coords.astype(np.complex128)
        for roots in reversed(self.axis_roots):
            acc = acc @ roots
        return complex(acc)


class CycloValue:
    """scale * sum(coords[j] * basis_j) in Z[zeta_M], exact."""

    __slots__ = ("m", "coords", "scale")

    def __init__(self, m: int, coords: np.ndarray, scale: Fraction = Fraction(1)):
        basis = _basis(m)
        coords = np.asarray(coords)
        if coords.shape != basis.shape:
            raise ValueError(f"coords shape {coords.shape} != basis shape {basis.shape}")
        if scale == 0 or not coords.any():
            coords = np.zeros(basis.shape, dtype=np.int64)
            scale = Fraction(1)
        self.m = m
        self.coords = coords
        self.scale = scale

    # -- constructors --------------------------------------------------------

    @staticmethod
    def zero(m: int) -> "CycloValue":
        return CycloValue(m, np.zeros(_basis(m).shape, dtype=np.int64))

    @staticmethod
    def one(m: int) -> "CycloValue":
        return root_of_unity(m, 0)

    @staticmethod
    def from_int(m: int, n: int) -> "CycloValue":
        v = root_of_unity(m, 0)
        return CycloValue(m, v.coords * n if abs(n) < 2**40 else v.coords.astype(object) * n)

    @staticmethod
    def from_counts(m: int, counts, scale: Fraction = Fraction(1)) -> "CycloValue":
        """Exact reduction of sum_t counts[t] * zeta_M^t."""
        basis = _basis(m)
        arr = np.asarray(counts)
        if arr.shape != (m,):
            raise ValueError("counts must have length M")
        if arr.dtype != object and np.abs(arr).max(initial=0) > 2**56:
            arr = arr.astype(object)
        return CycloValue(m, basis.reduce_counts(arr), scale)

    # -- ring ops --------------------------------------------------------------

    def _common_scale(self, other: "CycloValue") -> tuple[Fraction, int, int]:
        s1, s2 = self.scale, other.scale
        g = Fraction(math.gcd(s1.numerator * s2.denominator, s2.numerator * s1.denominator),
                     s1.denominator * s2.denominator)
        return g, int(s1 / g), int(s2 / g)

    def __add__(self, other: "CycloValue") -> "CycloValue":
        if self.m != other.m:
            raise ValueError("mixed cyclotomic moduli")
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        g, k1, k2 = self._common_scale(other)
        return CycloValue(self.m, self.coords * k1 + other.coords * k2, g)

    def __neg__(self) -> "CycloValue":
        return CycloValue(self.m, -self.coords, self.scale)

    def __sub__(self, other: "CycloValue") -> "CycloValue":
        return self + (-other)

    def __mul__(self, other) -> "CycloValue":
        if isinstance(other, (int, Fraction)):
            return CycloValue(self.m, self.coords, self.scale * other) if other else CycloValue.zero(self.m)
        if self.m != other.m:
            raise ValueError("mixed cyclotomic moduli")
        basis = _basis(self.m)
        if self.is_zero() or other.is_zero():
            return CycloValue.zero(self.m)
        u = basis.scatter(self.coords)
        v = basis.scatter(other.coords)
        nz_u, nz_v = int(np.count_nonzero(u)), int(np.count_nonzero(v))
        if nz_u > nz_v:
            u, v, nz_u = v, u, nz_v
        if nz_u * self.m > 5 * 10**7:
            raise BudgetError("dense cyclotomic product too large; use root multiplications")
        big = (u.dtype == object or v.dtype == object
               or int(np.abs(u).max()) * int(np.abs(v).max()) * nz_u > 2**60)
        acc = np.zeros(basis.moduli, dtype=object if big else np.int64)
        if big:
            v = v.astype(object)
        it = np.argwhere(u)
        for idx in it:
            c = u[tuple(idx)]
            shifted = v
            for axis, off in enumerate(idx):
                if off:
                    shifted = np.roll(shifted, int(off), axis=axis)
            acc += c * shifted
        for axis in range(len(basis.factors)):
            acc = basis.fold_axis(acc, axis)
        return CycloValue(self.m, acc, self.scale * other.scale)

    __rmul__ = __mul__

    def rotate(self, e: int) -> "CycloValue":
        """Multiply by zeta_M^e (cheap)."""
        basis = _basis(self.m)
        if self.is_zero():
            return self
        full = basis.scatter(self.coords)
        for axis, (q, w) in enumerate(zip(basis.moduli, basis.axis_unit)):
            off = (w * e) % q
            if off:
                full = np.roll(full, off, axis=axis)
        for axis in range(len(basis.factors)):
            full = basis.fold_axis(full, axis)
        return CycloValue(self.m, full, self.scale)

    def conj(self) -> "CycloValue":
        basis = _basis(self.m)
        full = basis.scatter(self.coords)
        for axis, q in enumerate(basis.moduli):
            idx = (-np.arange(q)) % q
            full = np.take(full, idx, axis=axis)
        for axis in range(len(basis.factors)):
            full = basis.fold_axis(full, axis)
        return CycloValue(self.m, full, self.scale)

    def divide_rational(self, r: Fraction | int) -> "CycloValue":
        r = Fraction(r)
        if r == 0:
            raise ZeroDivisionError("division of a cyclotomic value by zero")
        return CycloValue(self.m, self.coords, self.scale / r)

    # -- predicates / embedding -----------------------------------------------

    def is_zero(self) -> bool:
        return not self.coords.any()

    def equals(self, other: "CycloValue") -> bool:
        return (self - other).is_zero()

    def complex(self) -> complex:
        return complex(self.scale) * _basis(self.m).embed(self.coords)

    def __abs__(self) -> float:
        return abs(self.complex())

    def term_count(self) -> int:
        return int(np.abs(self.coords.astype(object) if self.coords.dtype == object
                          else self.coords).sum())

    def __repr__(self) -> str:
        return f"CycloValue(M={self.m}, scale={self.scale}, nonzeros={int(np.count_nonzero(self.coords))})"


def root_of_unity(m: int, e: int) -> CycloValue:
    """zeta_M^e as an exact value."""
    basis = _basis(m)
    counts = np.zeros(m, dtype=np.int64)
    counts[e % m] = 1
    return CycloValue(m, basis.reduce_counts(counts))


def embed_counts(m: int, counts) -> complex:
    """Float evaluation of sum_t counts[t] zeta_M^t without exact reduction.

    Independent of the exact path; used to cross-check the reduction.
    """
    arr = np.asarray(counts, dtype=np.float64)
    roots = np.exp(2j * np.pi * np.arange(m) / m)
    return complex(arr @ roots)
