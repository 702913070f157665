"""Dirichlet characters mod q with exact rational-angle values.

A character is its exponent vector (h_1..h_t) over the canonical generators:
chi(g_i) = e(h_i / s_i).  Values on units are exact fractions of a turn;
complex numbers are materialized only at the simulator boundary.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from math import gcd, lcm

from .cyclotomic import angles_to_counts, reduce_root_sum
from .residue_group import (
    check_modulus,
    check_residue,
    dlog_vector,
    multiplicative_order,
    unit_group_structure,
)

RationalAngle = Fraction  # value e(angle), angle reduced into [0, 1)


@dataclass(frozen=True)
class DirichletCharacter:
    q: int
    exponents: tuple[int, ...]

    def __post_init__(self):
        group = unit_group_structure(self.q)
        if len(self.exponents) != len(group.orders):
            raise ValueError("exponent vector length mismatch")
        if any(not 0 <= h < s for h, s in zip(self.exponents, group.orders)):
            raise ValueError("exponents out of range")

    @property
    def group(self):
        return unit_group_structure(self.q)

    @property
    def is_principal(self) -> bool:
        return not any(self.exponents)

    @cached_property
    def order(self) -> int:
        orders = self.group.orders
        return lcm(*(s // gcd(h, s) for h, s in zip(self.exponents, orders))) if orders else 1

    def evaluate(self, a: int) -> RationalAngle:
        """Exact angle of chi(a) as a fraction of a turn in [0, 1)."""
        return Fraction(self.angle_numerator(a), self.group.exponent)

    def angle_numerator(self, a: int) -> int:
        """Angle as integer k with chi(a) = e(k / exponent)."""
        a = check_residue(self.q, a)
        f = dlog_vector(self.q, a)
        g = self.group
        n = g.exponent
        return sum(h * fi * (n // s) for h, fi, s in zip(self.exponents, f, g.orders)) % n

    def value(self, a: int) -> complex:
        return _roots_of_unity(self.group.exponent)[self.angle_numerator(a)]

    def conjugate(self) -> "DirichletCharacter":
        orders = self.group.orders
        return DirichletCharacter(self.q, tuple((-h) % s for h, s in zip(self.exponents, orders)))

    def __mul__(self, other: "DirichletCharacter") -> "DirichletCharacter":
        if self.q != other.q:
            raise ValueError("characters of different moduli")
        orders = self.group.orders
        return DirichletCharacter(
            self.q,
            tuple((h1 + h2) % s for h1, h2, s in zip(self.exponents, other.exponents, orders)),
        )

    def __pow__(self, k: int) -> "DirichletCharacter":
        orders = self.group.orders
        return DirichletCharacter(self.q, tuple((h * k) % s for h, s in zip(self.exponents, orders)))

    def index(self) -> int:
        """Canonical position: row-major over the generator orders."""
        idx = 0
        for h, s in zip(self.exponents, self.group.orders):
            idx = idx * s + h
        return idx


def angle_to_complex(angle: RationalAngle) -> complex:
    """e(angle) with the argument reduced exactly before going to floats."""
    a = angle % 1
    theta = 2.0 * math.pi * (a.numerator / a.denominator)
    return complex(math.cos(theta), math.sin(theta))


@lru_cache(maxsize=None)
def _roots_of_unity(n: int) -> tuple[complex, ...]:
    return tuple(angle_to_complex(Fraction(k, n)) for k in range(n))


@lru_cache(maxsize=None)
def character_group(q: int) -> tuple[DirichletCharacter, ...]:
    """All phi(q) characters in canonical (row-major exponent) order."""
    group = unit_group_structure(check_modulus(q))
    chars = []
    vec = [0] * len(group.orders)
    total = 1
    for s in group.orders:
        total *= s
    for _ in range(total):
        chars.append(DirichletCharacter(q, tuple(vec)))
        for i in range(len(vec) - 1, -1, -1):
            vec[i] += 1
            if vec[i] < group.orders[i]:
                break
            vec[i] = 0
    return tuple(chars)


def principal_character(q: int) -> DirichletCharacter:
    group = unit_group_structure(q)
    return DirichletCharacter(q, (0,) * len(group.orders))


def nonprincipal_characters(q: int) -> tuple[DirichletCharacter, ...]:
    return tuple(ch for ch in character_group(q) if not ch.is_principal)


def char_order(chi: DirichletCharacter) -> int:
    return chi.order


def evaluate(chi: DirichletCharacter, a: int) -> RationalAngle:
    return chi.evaluate(a)


def character_with_unit_value(q: int, b: int) -> DirichletCharacter:
    """A character with chi(b) = e(1/m), m the order of b mod q.

    Solves sum_i h_i * (f_i' m / s_i') ≡ 1 (mod m) over the generator basis;
    the gcd of m and those t numbers is 1, so the congruence is solvable.
    """
    q = check_modulus(q)
    b = check_residue(q, b)
    group = unit_group_structure(q)
    f = dlog_vector(q, b)
    orders = group.orders
    s_red = []  # s_i' = order of g_i^{f_i}
    f_red = []  # f_i' = f_i / gcd(f_i, s_i)
    for fi, s in zip(f, orders):
        d = gcd(fi, s)
        s_red.append(s // d)
        f_red.append(fi // d)
    m = lcm(*s_red) if s_red else 1
    if m == 1:
        return principal_character(q)
    coefs = [fp * (m // sp) for fp, sp in zip(f_red, s_red)]
    h = _solve_unit_combination(m, coefs)
    exps = tuple(hi % s for hi, s in zip(h, orders))
    chi = DirichletCharacter(q, exps)
    assert chi.evaluate(b) == Fraction(1, m)
    return chi


def _solve_unit_combination(m: int, coefs: list[int]) -> list[int]:
    """Integers h_i with sum h_i coefs[i] ≡ 1 (mod m); requires gcd(m, *coefs) = 1."""
    g = m
    h = [0] * len(coefs)
    for i, c in enumerate(coefs):
        gg, u, v = _ext_gcd(g, c)
        for j in range(i):
            h[j] = h[j] * u % m
        h[i] = v % m
        g = gg
        if g == 1 and i < len(coefs) - 1:
            break
    if g != 1:
        raise ArithmeticError("combination is not solvable (gcd != 1)")
    return h


def _ext_gcd(a: int, b: int) -> tuple[int, int, int]:
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        qq = old_r // r
        old_r, r = r, old_r - qq * r
        old_s, s = s, old_s - qq * s
        old_t, t = t, old_t - qq * t
    if old_r < 0:
        old_r, old_s, old_t = -old_r, -old_s, -old_t
    return old_r, old_s, old_t


def character_pair_constraint(q: int, b: int, c: int, r: int) -> DirichletCharacter:
    """A character with chi(b) = e(1/r) and chi(c)^r = 1.

    Requires r | ord(b), and for every prime power p^a || r that
    p^(a+1) does not divide ord(c).
    """
    q = check_modulus(q)
    b = check_residue(q, b)
    c = check_residue(q, c)
    if r < 1:
        raise ValueError("r must be positive")
    s1 = multiplicative_order(q, b)
    if s1 % r != 0:
        raise ValueError(f"r={r} does not divide ord({b}) = {s1}")
    s2 = multiplicative_order(q, c)
    for p, a in _factorize(r):
        if s2 % p ** (a + 1) == 0:
            raise ValueError(
                f"prime power {p}^{a} || r={r} but {p}^{a + 1} divides ord({c}) = {s2}"
            )
    if r == 1:
        return principal_character(q)
    # split s2 = v*u with v collecting the primes of r (so v | r) and u coprime to r
    v = 1
    for p, _ in _factorize(r):
        while s2 % (v * p) == 0:
            v *= p
    u = s2 // v
    chi1 = character_with_unit_value(q, b)
    chi2 = chi1 ** (s1 // r)
    x = pow(u, -1, r)
    chi = chi2 ** (x * u)
    assert chi.evaluate(b) == Fraction(1, r)
    assert (r * chi.evaluate(c)) % 1 == 0
    return chi


def _factorize(n: int) -> list[tuple[int, int]]:
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            e = 0
            while n % d == 0:
                n //= d
                e += 1
            out.append((d, e))
        d += 1
    if n > 1:
        out.append((n, 1))
    return out


def character_sum_reduced(chars, a: int):
    """Canonical cyclotomic form of sum_{chi in chars} chi(a)."""
    if not chars:
        raise ValueError("empty character collection")
    n = unit_group_structure(chars[0].q).exponent
    ks = [chi.angle_numerator(a) for chi in chars]
    return reduce_root_sum(angles_to_counts(ks, n), n)
