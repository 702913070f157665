"""Barrier synthesis for a race triple.

Three finite constructions and one infinite construction, each producing a
hypothetical zero configuration under which one ordering of the three
prime-counting functions cannot occur for large x:

  I   - a set S of characters whose value sums agree on two of the residues
        and differ on the third, plus one auxiliary zero at double height;
  II  - a character whose values are spaced per the window condition, with a
        zero for chi and one for chi^2 at double height;
  III - high-multiplicity zeros for every character, with multiplicities
        rationalized from a nonnegative solution of a small linear system;
  GSH - an infinite family for one character with rationally independent
        ordinates, phase-locked to a set H of integers.

Side conditions are verified at construction time and recorded in the
barrier's margins.
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import race_simulator as sim
from .characters import (
    DirichletCharacter,
    character_group,
    character_pair_constraint,
    nonprincipal_characters,
)
from .cyclotomic import angles_to_counts, reduce_root_sum
from .goodness import spacing_ok, witness_for
from .residue_group import (
    check_modulus,
    check_residue,
    mod_div,
    multiplicative_order,
    unit_group_structure,
)

TWO_PI = 2.0 * math.pi
B_SNAP = 1e-12  # treat the phase offset as exactly zero below this
NE_SLACK = 1e-9  # float slack before escalating an (in)equality to high precision
SUBSET_CAP_PHI = 17  # full subset enumeration allowed while phi(q) <= this


class ConstructionError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class RaceTriple:
    q: int
    a1: int
    a2: int
    a3: int

    def __post_init__(self):
        check_modulus(self.q)
        res = [check_residue(self.q, a) for a in (self.a1, self.a2, self.a3)]
        if len(set(res)) != 3:
            raise ValueError(f"residues {res} are not pairwise distinct mod {self.q}")
        object.__setattr__(self, "a1", res[0])
        object.__setattr__(self, "a2", res[1])
        object.__setattr__(self, "a3", res[2])

    @property
    def residues(self) -> tuple[int, int, int]:
        return (self.a1, self.a2, self.a3)


@dataclass(frozen=True)
class ZeroSpec:
    character: DirichletCharacter
    sigma: float
    gamma: float
    multiplicity: int

    def __post_init__(self):
        if not 0.5 < self.sigma <= 1.0:
            raise ValueError(f"zero real part {self.sigma} outside (1/2, 1]")
        if self.gamma <= 0:
            raise ValueError("zero ordinate must be positive")
        if self.multiplicity < 1:
            raise ValueError("multiplicity must be >= 1")

    @property
    def rho(self) -> complex:
        return complex(self.sigma, self.gamma)


@dataclass(frozen=True)
class Barrier:
    triple: RaceTriple
    permutation: tuple[int, int, int]  # positions of the relabeled residues
    relabeled_triple: tuple[int, int, int]
    construction: str  # 'I' | 'II' | 'III'
    beta1: float
    zeros: tuple[ZeroSpec, ...]
    excluded_ordering: tuple[int, int, int]
    parameters: dict = field(default_factory=dict, compare=False)
    margins: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.zeros:
            raise ValueError("barrier needs at least one zero")
        beta2 = min(z.sigma for z in self.zeros)
        if not 0.5 <= self.beta1 < beta2:
            raise ValueError(f"beta1={self.beta1} not below the zero strip [{beta2}, ...]")
        if sorted(self.excluded_ordering) != sorted(self.triple.residues):
            raise ValueError("excluded ordering is not a permutation of the triple")

    @property
    def q(self) -> int:
        return self.triple.q

    @property
    def size(self) -> int:
        return sum(z.multiplicity for z in self.zeros)


@dataclass(frozen=True)
class GshBarrier:
    triple: RaceTriple
    permutation: tuple[int, int, int]
    relabeled_triple: tuple[int, int, int]
    chi1: DirichletCharacter
    chi2: DirichletCharacter
    t: float
    sigma1: float
    sigma2: float
    beta: float
    truncation: int
    h_values: tuple[int, ...]
    in_h: tuple[bool, ...]
    gammas: tuple[float, ...]
    deltas: tuple[float, ...]
    z: complex
    w: complex
    alpha: float
    beta_phase: float
    excluded_ordering: tuple[int, int, int]
    construction: str = "GSH"
    parameters: dict = field(default_factory=dict, compare=False)
    margins: dict = field(default_factory=dict, compare=False)

    @property
    def q(self) -> int:
        return self.triple.q


@dataclass
class BarrierParams:
    sigma: float = 0.501  # ceiling for zero real parts
    tau: float = 100.0  # floor for zero ordinates
    sigma1: float = 0.501
    sigma2: float = 0.5005
    beta1: float = 0.5
    t: float = 1000.0
    gamma: float = 1000.0
    epsilon: float = 1e-3
    q_cap_power10: int = 6  # largest denominator 10^k for rationalization
    gsh_sigma1: float = 0.6
    gsh_sigma2: float = 0.55
    gsh_beta: float = 0.5
    truncation: int = 10_000
    gap_check_limit: int = 1_000_000


# ---------------------------------------------------------------------------
# fast integer-angle tables


@lru_cache(maxsize=None)
def _angle_tables(q: int):
    """per-character integer angles: tables[ci][a] = k with chi(a) = e(k/n)."""
    group = unit_group_structure(q)
    n = group.exponent
    chars = character_group(q)
    tables = []
    for chi in chars:
        tables.append({a: chi.angle_numerator(a) for a in group.units})
    return chars, tables, n


# ---------------------------------------------------------------------------
# first construction: search


@dataclass(frozen=True)
class EqualSumSet:
    permutation: tuple[int, int, int]
    relabeled_triple: tuple[int, int, int]
    family: str
    characters: tuple[DirichletCharacter, ...]
    chi2: DirichletCharacter
    sums: tuple[complex, complex, complex]


_PERMS = tuple(itertools.permutations((0, 1, 2)))


def _relabelings(D: RaceTriple):
    res = D.residues
    for perm in _PERMS:
        yield perm, tuple(res[i] for i in perm)


def _first_separating_character(q: int, a1: int, a2: int) -> DirichletCharacter:
    chars, tables, n = _angle_tables(q)
    for ci, chi in enumerate(chars):
        if chi.is_principal:
            continue
        if tables[ci][a1] != tables[ci][a2]:
            return chi
    raise ConstructionError(f"no character separates {a1} and {a2} mod {q}")


def find_equal_sum_set(D: RaceTriple) -> EqualSumSet | None:
    """Character set S with equal value sums on two residues, different on the third.

    Family priority: primitive-root shortcut, singletons, conjugate pairs,
    power families (which subsume the even-power variant), then full subset
    enumeration while phi(q) <= 17.  First success in deterministic order wins.
    Also returns a character separating the first two relabeled residues.
    """
    q = D.q
    chars, tables, n = _angle_tables(q)
    group = unit_group_structure(q)

    def package(perm, triple, family, char_list):
        sums = tuple(
            sum(chi.value(a) for chi in char_list) for a in triple
        )
        chi2 = _first_separating_character(q, triple[0], triple[1])
        return EqualSumSet(perm, triple, family, tuple(char_list), chi2, sums)

    # primitive-root shortcut: cyclic group, second ratio outside <a2/a1>
    if len(group.generators) == 1:
        phi = group.phi
        for perm, (b1, b2, b3) in _relabelings(D):
            f = group.dlog[mod_div(q, b2, b1)][0]
            d = math.gcd(f, phi)
            e = group.dlog[mod_div(q, b3, b2)][0]
            if e % d != 0:
                chi = DirichletCharacter(q, (phi // d,))
                assert chi.evaluate(b1) == chi.evaluate(b2) != chi.evaluate(b3)
                return package(perm, (b1, b2, b3), "primitive-root", [chi])

    nonprinc = [ci for ci, chi in enumerate(chars) if not chi.is_principal]

    # singletons
    for perm, triple in _relabelings(D):
        for ci in nonprinc:
            t = tables[ci]
            k1, k2, k3 = t[triple[0]], t[triple[1]], t[triple[2]]
            if k1 == k2 != k3:
                return package(perm, triple, "singleton", [chars[ci]])

    # conjugate pairs: sums are 2 cos(2 pi k / n)
    for perm, triple in _relabelings(D):
        for ci in nonprinc:
            if chars[ci].order <= 2:
                continue
            t = tables[ci]
            k1, k2, k3 = t[triple[0]], t[triple[1]], t[triple[2]]
            if (k1 == k2 or (k1 + k2) % n == 0) and k3 != k1 and (k1 + k3) % n != 0:
                pair = [chars[ci], chars[ci].conjugate()]
                return package(perm, triple, "conjugate-pair", pair)

    # power families {chi, ..., chi^(ord-1)}: sums depend only on chi(a) = 1 or not
    for perm, triple in _relabelings(D):
        for ci in nonprinc:
            t = tables[ci]
            z1, z2, z3 = t[triple[0]] == 0, t[triple[1]] == 0, t[triple[2]] == 0
            if z1 == z2 != z3:
                chi = chars[ci]
                fam = [chi**i for i in range(1, chi.order)]
                return package(perm, triple, "power", fam)

    # full subsets with a float screen and exact cyclotomic confirmation
    if group.phi <= SUBSET_CAP_PHI:
        res = D.residues
        vals = [
            [cmath.exp(TWO_PI * 1j * tables[ci][a] / n) for a in res] for ci in nonprinc
        ]
        kvecs = [[tables[ci][a] for a in res] for ci in nonprinc]
        m_count = len(nonprinc)
        for mask in range(1, 1 << m_count):
            s = [0j, 0j, 0j]
            mm = mask
            while mm:
                b = (mm & -mm).bit_length() - 1
                mm &= mm - 1
                v = vals[b]
                s[0] += v[0]
                s[1] += v[1]
                s[2] += v[2]
            for perm in _PERMS:
                i, j, k = perm
                # float screen on the equality only; the exact cyclotomic
                # check decides both the equality and the difference
                if abs(s[i] - s[j]) < NE_SLACK:
                    members = [b for b in range(m_count) if mask >> b & 1]
                    if _subset_exact_ok(kvecs, members, perm, n):
                        triple = tuple(res[p] for p in perm)
                        fam = [chars[nonprinc[b]] for b in members]
                        return package(perm, triple, "subset", fam)
    return None


def _subset_exact_ok(kvecs, members, perm, n) -> bool:
    i, j, k = perm
    si = reduce_root_sum(angles_to_counts([kvecs[b][i] for b in members], n), n)
    sj = reduce_root_sum(angles_to_counts([kvecs[b][j] for b in members], n), n)
    sk = reduce_root_sum(angles_to_counts([kvecs[b][k] for b in members], n), n)
    return si == sj and si != sk


# ---------------------------------------------------------------------------
# first construction: barrier


def _wrap_pi(x: float) -> float:
    """wrap into [-pi, pi)"""
    return (x + math.pi) % TWO_PI - math.pi


def construction_one(D: RaceTriple, found: EqualSumSet, params: BarrierParams) -> Barrier:
    """Simple zeros at sigma1 + it for each chi in S and sigma2 + 2it for chi2."""
    p = params
    if not (0.5 <= p.beta1 < p.sigma2 < p.sigma1 <= min(p.sigma, 0.501)):
        raise ConstructionError(
            f"need 1/2 <= beta1 < sigma2 < sigma1 <= min(sigma, 0.501), got "
            f"{p.beta1}, {p.sigma2}, {p.sigma1}, {p.sigma}"
        )
    b1, b2, b3 = found.relabeled_triple
    chi2 = found.chi2
    w = chi2.value(b2).conjugate() - chi2.value(b1).conjugate()
    z = sum(chi.value(b2).conjugate() - chi.value(b3).conjugate() for chi in found.characters)
    if abs(w) == 0 or abs(z) == 0:
        raise ConstructionError("degenerate phase coefficients (W or Z vanished)")

    b_val = ((cmath.phase(w) - 2.0 * cmath.phase(z)) / math.pi) % 1.0 - 0.5
    if abs(b_val) < B_SNAP:
        b_val = 0.0
    t = max(p.t, 2.0 * p.tau, 1000.0)
    while b_val != 0.0 and abs(b_val) <= 2.0 / t:
        t *= 2.0

    f0 = 2.0 * math.atan(p.sigma1 / t) - math.atan(p.sigma2 / (2.0 * t))
    c_star = _wrap_pi(cmath.phase(w) - 2.0 * cmath.phase(z) - math.pi / 2.0 + math.atan(
        p.sigma2 / (2.0 * t)) - 2.0 * math.atan(p.sigma1 / t))
    sign = math.cos(c_star)
    phase_slack = abs(math.pi * b_val - f0)
    if sign == 0.0:
        raise ConstructionError("phase analysis inconclusive (cos C* = 0)")
    # D1 = phi(q)(pi_{b1} - pi_{b2}) keeps the sign of cos C* on the locked set
    excluded = (b2, b3, b1) if sign > 0 else (b1, b3, b2)

    zeros = [ZeroSpec(chi, p.sigma1, t, 1) for chi in found.characters]
    zeros.append(ZeroSpec(chi2, p.sigma2, 2.0 * t, 1))
    barrier = Barrier(
        triple=D,
        permutation=found.permutation,
        relabeled_triple=found.relabeled_triple,
        construction="I",
        beta1=p.beta1,
        zeros=tuple(zeros),
        excluded_ordering=excluded,
        parameters={"sigma1": p.sigma1, "sigma2": p.sigma2, "t": t, "family": found.family},
        margins={
            "B": b_val,
            "B_times_t": b_val * t,
            "F0": f0,
            "cos_c_star": sign,
            "phase_slack": phase_slack,
            "abs_W": abs(w),
            "abs_Z": abs(z),
            "verdict_margin": phase_slack,
        },
    )
    assert barrier.size == len(found.characters) + 1
    return barrier


# ---------------------------------------------------------------------------
# second construction: search


@dataclass(frozen=True)
class SpacingCharacter:
    permutation: tuple[int, int, int]
    relabeled_triple: tuple[int, int, int]
    chi: DirichletCharacter
    d1: Fraction
    d2: Fraction
    c1: int
    c2: int
    base_modulus: int  # m in the witness search
    witness_k: int


@dataclass(frozen=True)
class CaseIDeferral:
    """A character making two of the three values coincide: the first
    construction applies with the singleton family."""

    permutation: tuple[int, int, int]
    relabeled_triple: tuple[int, int, int]
    chi: DirichletCharacter


_SMALL_PRIME_SET = frozenset((3, 7, 13))


def _prime_valuation(n: int, p: int) -> int:
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


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


def multiplicities_for(d1: Fraction, d2: Fraction) -> tuple[int, int]:
    if d1 > Fraction(1, 3):
        return (1, 2)
    if (d1, d2) == (Fraction(6, 19), Fraction(9, 19)):
        return (5, 9)
    if (d1, d2) == (Fraction(12, 37), Fraction(16, 37)):
        return (3, 5)
    raise ValueError(f"gap pair {(d1, d2)} outside the admissible spacing set")


def find_spacing_character(D: RaceTriple):
    """Character with admissibly spaced values, or a coincidence deferral, or None.

    Follows the order decomposition of the ratio orders s_i: a prime-power
    route when some s_i has a prime-power divisor outside {3, 7, 13}, the
    {39, 91, 273} route otherwise, then powers the base character by the
    goodness witness to land the gaps in the admissible spacing set.
    Returns None exactly when every s_i lies in {3, 7, 13, 21}.
    """
    q = D.q
    for perm, (b1, b2, b3) in _relabelings(D):
        s1 = multiplicative_order(q, mod_div(q, b2, b1))
        s2 = multiplicative_order(q, mod_div(q, b3, b2))
        s3 = multiplicative_order(q, mod_div(q, b1, b3))
        for p in _prime_factors(s1):
            w = _prime_valuation(s1, p)
            if p**w in _SMALL_PRIME_SET:
                continue
            if _prime_valuation(s2, p) > w or _prime_valuation(s3, p) > w:
                continue
            return _spacing_from_route(D, perm, (b1, b2, b3), p**w, p)
    # the {39, 91, 273} route
    for perm, (b1, b2, b3) in _relabelings(D):
        s1 = multiplicative_order(q, mod_div(q, b2, b1))
        s2 = multiplicative_order(q, mod_div(q, b3, b2))
        s3 = multiplicative_order(q, mod_div(q, b1, b3))
        if s1 in (39, 91, 273) and 273 % s2 == 0 and 273 % s3 == 0:
            return _spacing_from_route(D, perm, (b1, b2, b3), s1, None)
    return None


def _spacing_from_route(D: RaceTriple, perm, triple, r: int, p: int | None):
    """Build the base character for the route and scan witness powers."""
    q = D.q
    b1, b2, b3 = triple
    ratio21 = mod_div(q, b2, b1)
    ratio32 = mod_div(q, b3, b2)
    chi1 = character_pair_constraint(q, ratio21, ratio32, r)
    if p is not None:
        # reduce to chi2 with chi2(b2/b1) = e(1/m), m = p or p^2
        u_exp = 2 if p in _SMALL_PRIME_SET else 1
        w = r
        e = 0
        while w % p == 0:
            w //= p
            e += 1
        chi2 = chi1 ** (p ** (e - u_exp))
        m = p**u_exp
    else:
        chi2 = chi1
        m = r
    angle = chi2.evaluate(ratio32)
    assert m % angle.denominator == 0
    j_tilde = int(angle * m)
    if j_tilde == 0:
        return CaseIDeferral(perm, triple, chi2)  # chi2(b2) = chi2(b3)
    j_good = j_tilde + 1
    if j_good == m:
        return CaseIDeferral(perm, triple, chi2)  # chi2(b1) = chi2(b3)
    k = witness_for(m, j_good)
    if k is None:
        raise ConstructionError(f"base modulus m={m} has no witness for j={j_good}")
    chi_k = chi2**k
    points = (0, k % m, k * j_good % m)
    if len(set(points)) < 3:
        return CaseIDeferral(perm, triple, chi_k)
    return _assemble_spacing(D, chi_k, m, k)


def _assemble_spacing(D: RaceTriple, chi: DirichletCharacter, m: int, k: int):
    """Read off the relabeling and gap pair from the actual character values."""
    res = D.residues
    for candidate in (chi, chi.conjugate()):
        angles = sorted((candidate.evaluate(a), a) for a in res)
        (t1, r1), (t2, r2), (t3, r3) = angles
        gaps = (t2 - t1, t3 - t2, 1 - t3 + t1)
        rotations = (
            ((r1, r2, r3), (gaps[0], gaps[1])),
            ((r2, r3, r1), (gaps[1], gaps[2])),
            ((r3, r1, r2), (gaps[2], gaps[0])),
        )
        for labels, (d1, d2) in rotations:
            if spacing_ok(d1, d2):
                perm = tuple(res.index(a) for a in labels)
                c1, c2 = multiplicities_for(d1, d2)
                return SpacingCharacter(perm, labels, candidate, d1, d2, c1, c2, m, k)
    raise ConstructionError(
        f"witness k={k} (m={m}) did not produce admissible gaps on the values"
    )


# ---------------------------------------------------------------------------
# second construction: inequality check and barrier


@dataclass(frozen=True)
class CrossingInequality:
    ok: bool
    margin: float
    z1: float
    z2: float
    lambda1: float
    lambda2: float


def verify_crossing_inequality(c1: int, c2: int, d1, d2) -> CrossingInequality:
    """z1 + z2 < pi (d1 + d2) with z_j the envelope zero crossings."""
    lam1 = (c2 / c1) * math.cos(math.pi * float(d1))
    lam2 = (c2 / c1) * math.cos(math.pi * float(d2))
    z1 = sim.v_lambda(lam1)  # raises if lam outside (0, 1)
    z2 = sim.v_lambda(lam2)
    margin = math.pi * (float(d1) + float(d2)) - (z1 + z2)
    return CrossingInequality(margin > 0.0, margin, z1, z2, lam1, lam2)


def construction_two(D: RaceTriple, spacing: SpacingCharacter, params: BarrierParams) -> Barrier:
    """Zero of order c1 for chi and order c2 for chi^2 at double height."""
    p = params
    ineq = verify_crossing_inequality(spacing.c1, spacing.c2, spacing.d1, spacing.d2)
    if not ineq.ok:
        raise ConstructionError(f"spacing inequality failed, margin {ineq.margin}")
    chi = spacing.chi
    b1_, b2_, b3_ = spacing.relabeled_triple
    t1, t2, t3 = (chi.evaluate(a) for a in (b1_, b2_, b3_))
    if ((t2 - t1) % 1, (t3 - t2) % 1) != (spacing.d1 % 1, spacing.d2 % 1):
        raise ConstructionError("character values do not realize the declared gaps")
    if (spacing.c1, spacing.c2) != multiplicities_for(spacing.d1, spacing.d2):
        raise ConstructionError("multiplicities inconsistent with the gap pair")
    chi_sq = chi * chi
    if chi_sq.is_principal:
        raise ConstructionError("chi^2 is principal; spacing geometry violated")
    delta, y_worst = sim.envelope_min(spacing.d1, spacing.d2, spacing.c1, spacing.c2)
    gamma = max(p.gamma, 2.0 * p.tau, 1000.0)
    alpha_sigma = p.sigma1
    if not (0.5 <= p.beta1 < alpha_sigma <= p.sigma):
        raise ConstructionError("need 1/2 <= beta1 < alpha <= sigma")
    b1, b2, b3 = spacing.relabeled_triple
    zeros = (
        ZeroSpec(chi, alpha_sigma, gamma, spacing.c1),
        ZeroSpec(chi_sq, alpha_sigma, 2.0 * gamma, spacing.c2),
    )
    barrier = Barrier(
        triple=D,
        permutation=spacing.permutation,
        relabeled_triple=spacing.relabeled_triple,
        construction="II",
        beta1=p.beta1,
        zeros=zeros,
        excluded_ordering=(b3, b2, b1),
        parameters={
            "alpha": alpha_sigma,
            "gamma": gamma,
            "d1": [spacing.d1.numerator, spacing.d1.denominator],
            "d2": [spacing.d2.numerator, spacing.d2.denominator],
            "c1": spacing.c1,
            "c2": spacing.c2,
            "witness_m": spacing.base_modulus,
            "witness_k": spacing.witness_k,
        },
        margins={
            "envelope_delta": delta,
            "envelope_worst_y": y_worst,
            "inequality_margin": ineq.margin,
            "z1": ineq.z1,
            "z2": ineq.z2,
            "verdict_margin": delta,
        },
    )
    assert barrier.size == spacing.c1 + spacing.c2 <= 14
    if spacing.d1 > Fraction(1, 3):
        assert barrier.size == 3
    return barrier


# ---------------------------------------------------------------------------
# third construction


@dataclass(frozen=True)
class DeterminantWitness:
    chi: DirichletCharacter
    h: int
    k: int


def _distinct(lhs: float, rhs: float, lhs_exact, rhs_exact) -> bool:
    """Float inequality with high-precision escalation on near ties."""
    if abs(lhs - rhs) > NE_SLACK:
        return True
    import mpmath as mp

    with mp.workdps(50):
        return abs(lhs_exact() - rhs_exact()) > mp.mpf("1e-40")


def _mp_trig(angle: Fraction, kind: str):
    import mpmath as mp

    x = 2 * mp.pi * mp.mpf(angle.numerator) / angle.denominator
    return mp.cos(x) if kind == "cos" else mp.sin(x)


def find_order7_character(D: RaceTriple) -> DeterminantWitness:
    """First character passing both 2x2 determinant tests (real and imaginary).

    Applicable whenever the first construction's search failed; any character
    nontrivial on a2/a1 then works and has order at least 7, which is asserted.
    """
    q = D.q
    a1, a2, a3 = D.residues
    chars = nonprincipal_characters(q)
    for chi in chars:
        if chi.evaluate(mod_div(q, a2, a1)) == 0:
            continue

        def re_diff(power: int, x: int, y: int) -> float:
            return (chi**power).value(x).real - (chi**power).value(y).real

        def im_diff(power: int, x: int, y: int) -> float:
            return (chi**power).value(x).imag - (chi**power).value(y).imag

        def re_mp(power, x, y):
            return _mp_trig((chi**power).evaluate(x), "cos") - _mp_trig(
                (chi**power).evaluate(y), "cos"
            )

        def im_mp(power, x, y):
            return _mp_trig((chi**power).evaluate(x), "sin") - _mp_trig(
                (chi**power).evaluate(y), "sin"
            )

        ok_real = _distinct(
            re_diff(1, a3, a2) * re_diff(2, a2, a1),
            re_diff(1, a2, a1) * re_diff(2, a3, a2),
            lambda: re_mp(1, a3, a2) * re_mp(2, a2, a1),
            lambda: re_mp(1, a2, a1) * re_mp(2, a3, a2),
        )
        if not ok_real:
            continue
        for h, k in ((1, 2), (1, 3), (2, 3)):
            ok_imag = _distinct(
                im_diff(h, a3, a2) * im_diff(k, a2, a1),
                im_diff(h, a2, a1) * im_diff(k, a3, a2),
                lambda h=h, k=k: im_mp(h, a3, a2) * im_mp(k, a2, a1),
                lambda h=h, k=k: im_mp(h, a2, a1) * im_mp(k, a3, a2),
            )
            if ok_imag:
                if chi.order < 7:
                    raise ConstructionError(
                        f"determinant witness has order {chi.order} < 7: "
                        "triple leaks into the first construction"
                    )
                return DeterminantWitness(chi, h, k)
    raise ConstructionError(f"no character passes the determinant tests for {D}")


def solve_lambda_system(
    D: RaceTriple, chi: DirichletCharacter, h: int, k: int, z1: complex, z2: complex
) -> dict[DirichletCharacter, float]:
    """Nonnegative coefficients lambda_chi with

        z1 = sum_chi lambda_chi (conj chi(a2) - conj chi(a1))
        z2 = sum_chi lambda_chi (conj chi(a3) - conj chi(a2)).

    Solves two 2x2 systems (real parts on chi, chi^2; imaginary parts on
    chi^h, chi^k), spreads the solution over conjugate pairs, and shifts all
    coefficients up by a constant, which leaves both sums unchanged because
    the full non-principal value sum at each residue is -1.
    """
    q = D.q
    a1, a2, a3 = D.residues
    if any(a == 1 for a in (a1, a2, a3)):
        raise ValueError("residue 1 breaks the constant-shift identity")

    def vdiff(power, x, y):
        return (chi**power).value(x) - (chi**power).value(y)

    m_re = ((vdiff(1, a2, a1).real, vdiff(2, a2, a1).real),
            (vdiff(1, a3, a2).real, vdiff(2, a3, a2).real))
    m_im = ((vdiff(h, a2, a1).imag, vdiff(k, a2, a1).imag),
            (vdiff(h, a3, a2).imag, vdiff(k, a3, a2).imag))
    l1, l2 = _solve_2x2(m_re, (z1.real / 2.0, z2.real / 2.0))
    # the conjugate-antisymmetric spread turns Im sums into -2i times the
    # solved combination, so the right-hand side enters negated
    l3, l4 = _solve_2x2(m_im, (-z1.imag / 2.0, -z2.imag / 2.0))

    theta: dict[DirichletCharacter, float] = {c: 0.0 for c in nonprincipal_characters(q)}

    def bump(c, val):
        theta[c] = theta.get(c, 0.0) + val

    bump(chi, l1)
    bump(chi.conjugate(), l1)
    bump(chi**2, l2)
    bump((chi**2).conjugate(), l2)
    bump(chi**h, l3)
    bump((chi**h).conjugate(), -l3)
    bump(chi**k, l4)
    bump((chi**k).conjugate(), -l4)

    y = max(0.0, -min(theta.values()))
    lam = {c: v + y for c, v in theta.items()}

    r1 = sum(v * (c.value(a2).conjugate() - c.value(a1).conjugate()) for c, v in lam.items())
    r2 = sum(v * (c.value(a3).conjugate() - c.value(a2).conjugate()) for c, v in lam.items())
    resid = max(abs(r1 - z1), abs(r2 - z2))
    if resid >= 1e-10:
        raise ArithmeticError(f"linear system residual {resid} too large")
    return lam


def _solve_2x2(m, rhs):
    det = m[0][0] * m[1][1] - m[0][1] * m[1][0]
    if det == 0.0:
        raise ArithmeticError("singular 2x2 system; determinant tests inconsistent")
    x = (rhs[0] * m[1][1] - rhs[1] * m[0][1]) / det
    y = (m[0][0] * rhs[1] - m[1][0] * rhs[0]) / det
    return x, y


def construction_three(D: RaceTriple, params: BarrierParams) -> Barrier:
    """Zeros of rationalized multiplicities N/Q for every character at two heights."""
    p = params
    witness = find_order7_character(D)
    nu1 = solve_lambda_system(D, witness.chi, witness.h, witness.k, 1j, -1j)
    nu2 = solve_lambda_system(D, witness.chi, witness.h, witness.k, 1j, 1j)

    q_denom = None
    errs = None
    for power in range(p.q_cap_power10 + 1):
        qq = 10**power
        e1 = max(abs(v - round(qq * v) / qq) for v in nu1.values())
        e2 = max(abs(v - round(qq * v) / qq) for v in nu2.values())
        errs = (e1, e2)
        if max(e1, e2) < p.epsilon:
            q_denom = qq
            break
    if q_denom is None:
        raise ConstructionError(
            f"epsilon={p.epsilon} unachievable with Q <= 10^{p.q_cap_power10}; "
            f"best errors {errs}"
        )

    gamma = max(p.gamma, 2.0 * p.tau, 1000.0)
    sigma1 = p.sigma1
    if not (0.5 <= p.beta1 < sigma1 <= p.sigma):
        raise ConstructionError("need 1/2 <= beta1 < sigma1 <= sigma")
    zeros = []
    for kk, nu in ((1, nu1), (2, nu2)):
        for c in nonprincipal_characters(D.q):
            mult = max(0, round(q_denom * nu[c]))
            if mult > 0:
                zeros.append(ZeroSpec(c, sigma1, kk * gamma, mult))
    if not zeros:
        raise ConstructionError("all rationalized multiplicities vanished; raise Q")

    # bound on the drift of the normalized main terms away from the ideal
    # (Q/gamma)(±2 cos + cos 2) envelope, from the rationalization errors
    scale = sum(
        abs(c.value(a).conjugate() - c.value(b).conjugate())
        for c in nonprincipal_characters(D.q)
        for a, b in ((D.a1, D.a2), (D.a2, D.a3))
    )
    barrier = Barrier(
        triple=D,
        permutation=(0, 1, 2),
        relabeled_triple=D.residues,
        construction="III",
        beta1=p.beta1,
        zeros=tuple(zeros),
        excluded_ordering=D.residues,
        parameters={
            "sigma1": sigma1,
            "gamma": gamma,
            "Q": q_denom,
            "epsilon": p.epsilon,
            "det_chi": list(witness.chi.exponents),
            "det_h": witness.h,
            "det_k": witness.k,
        },
        margins={
            "err_nu1": errs[0],
            "err_nu2": errs[1],
            "rationalization_scale": scale,
            "envelope_bound": -1.0 + 2.0 * max(errs) * scale,
            "verdict_margin": 1.0 - 2.0 * max(errs) * scale,
        },
    )
    return barrier


# ---------------------------------------------------------------------------
# pipeline


def find_barrier(D: RaceTriple, params: BarrierParams | None = None) -> Barrier:
    """Construction I if the set search succeeds, else II if a spacing
    character exists, else III."""
    params = params or BarrierParams()
    found = find_equal_sum_set(D)
    if found is not None:
        barrier = construction_one(D, found, params)
    else:
        spacing = find_spacing_character(D)
        if isinstance(spacing, CaseIDeferral):
            # two values coincide: the singleton family qualifies after all
            found = _equal_sum_from_deferral(D, spacing)
            barrier = construction_one(D, found, params)
        elif isinstance(spacing, SpacingCharacter):
            barrier = construction_two(D, spacing, params)
        else:
            barrier = construction_three(D, params)
    for z in barrier.zeros:
        if z.sigma > params.sigma or z.gamma <= params.tau:
            raise ConstructionError(
                f"zero {z.rho} violates the requested region (sigma <= {params.sigma}, "
                f"gamma > {params.tau})"
            )
    return barrier


def _equal_sum_from_deferral(D: RaceTriple, deferral: CaseIDeferral) -> EqualSumSet:
    chi = deferral.chi
    b = deferral.relabeled_triple
    vals = [chi.evaluate(a) for a in b]
    for i, j in ((0, 1), (0, 2), (1, 2)):
        kk = 3 - i - j
        if vals[i] == vals[j] != vals[kk]:
            triple = (b[i], b[j], b[kk])
            perm = tuple(D.residues.index(a) for a in triple)
            chi2 = _first_separating_character(D.q, triple[0], triple[1])
            sums = tuple(chi.value(a) for a in triple)
            return EqualSumSet(perm, triple, "deferral-singleton", (chi,), chi2, sums)
    raise ConstructionError("deferral character has no coinciding value pair")


# ---------------------------------------------------------------------------
# infinite construction


def _first_n_primes(n: int) -> list[int]:
    # n-th prime < n (ln n + ln ln n) for n >= 6
    if n < 6:
        limit = 14
    else:
        limit = int(n * (math.log(n) + math.log(math.log(n)))) + 10
    sieve = np.ones(limit, dtype=bool)
    sieve[:2] = False
    for i in range(2, int(limit**0.5) + 1):
        if sieve[i]:
            sieve[i * i :: i] = False
    primes = np.flatnonzero(sieve)
    return primes[:n].tolist()


def _phase_quality(alpha: float) -> float:
    # both alpha near an integer and alpha near a half-integer make the walk
    # h alpha + beta drift slowly, stretching the gaps of H
    d1 = abs(alpha - round(alpha))
    d2 = abs(2 * alpha - round(2 * alpha))
    return min(d1, d2)


def find_gsh_characters(D: RaceTriple, sigma1: float = 0.6, t: float = 1000.0):
    """Characters (chi1, chi2) with chi1 equal on the first relabeled pair but
    not the third, and chi2 separating the first pair.

    Among qualifying candidates the one whose phase offset sits farthest from
    the slow-drift values 0 and 1/2 is chosen, so the window checks carry
    information at moderate heights; ties resolve to the canonical first.
    """
    q = D.q
    chars, tables, n = _angle_tables(q)
    nonprinc = [ci for ci, chi in enumerate(chars) if not chi.is_principal]
    best = None
    best_score = -1.0
    for perm, (b1, b2, b3) in _relabelings(D):
        for ci in nonprinc:
            t_ang = tables[ci]
            if not (t_ang[b1] == t_ang[b2] != t_ang[b3]):
                continue
            chi1 = chars[ci]
            z = chi1.value(b2).conjugate() - chi1.value(b3).conjugate()
            alpha = -(math.atan(sigma1 / t) + cmath.phase(z)) / math.pi
            score = _phase_quality(alpha)
            if score > best_score + 1e-12:
                chi2 = None
                for cj in nonprinc:
                    if tables[cj][b1] != tables[cj][b2]:
                        chi2 = chars[cj]
                        break
                if chi2 is not None:
                    best = (perm, (b1, b2, b3), chi1, chi2)
                    best_score = score
    return best


def construction_gsh(D: RaceTriple, params: BarrierParams | None = None) -> GshBarrier:
    """Infinite (truncated) barrier: one isolated zero for chi1 and a family
    of zeros for chi2 whose ordinates are phase-locked through the set H."""
    p = params or BarrierParams()
    sigma1, sigma2, beta = p.gsh_sigma1, p.gsh_sigma2, p.gsh_beta
    if not 0.5 <= beta < sigma2 < sigma1:
        raise ConstructionError("need 1/2 <= beta < sigma2 < sigma1")
    found = find_gsh_characters(D, sigma1=sigma1, t=max(p.t, 2.0 * p.tau, 1000.0))
    if found is None:
        raise ConstructionError(f"no character pair satisfies the phase conditions for {D}")
    perm, triple, chi1, chi2 = found
    b1, b2, b3 = triple
    j_max = p.truncation

    z = chi1.value(b2).conjugate() - chi1.value(b3).conjugate()
    w = chi2.value(b2).conjugate() - chi2.value(b1).conjugate()
    assert abs(z) > 0 and abs(w) > 0

    t = max(p.t, 2.0 * p.tau, 1000.0)
    for _ in range(64):
        alpha = -(math.atan(sigma1 / t) + cmath.phase(z)) / math.pi
        dist = abs(alpha - round(alpha))
        if 1.0 / (10.0 * t) <= dist <= 0.5 - 1.0 / (10.0 * t):
            break
        t *= 2.0
    else:
        raise ConstructionError("could not place the phase offset away from 0 and 1/2")
    beta_phase = cmath.phase(w) / TWO_PI - 0.25

    def in_h_set(hs: np.ndarray) -> np.ndarray:
        frac = hs * alpha + beta_phase
        return np.abs(frac - np.round(frac)) <= 0.2

    h_values = []
    in_h_flags = []
    for j in range(1, j_max + 1):
        window = np.arange(j * j, j * j + j + 1, dtype=np.int64)
        hits = np.flatnonzero(in_h_set(window))
        if hits.size:
            h_values.append(int(window[hits[0]]))
            in_h_flags.append(True)
        else:
            if j >= 10.0 * t:
                # a window of j+1 >= 10t+1 consecutive integers must meet H
                raise ConstructionError(f"window at j={j} missed H; gap property broken")
            h_values.append(int(window[0]))
            in_h_flags.append(False)

    # decay exponents of order j^-3, clipped inside the allowed strip
    c_delta = 8.0 * (sigma2 - beta)
    cap = 0.95 * (sigma2 - beta)
    deltas = [min(cap, c_delta / (j * j * j)) for j in range(1, j_max + 1)]
    primes = _first_n_primes(j_max)
    gammas = []
    for j, (h, pr) in enumerate(zip(h_values, primes), start=1):
        xi = (math.sqrt(pr) % 1.0) * j ** -10.0
        gammas.append(2.0 * t * h + xi)
    if len(set(gammas)) != len(gammas):
        raise ConstructionError("ordinate collision in the truncated family")

    # gap property of H on the configured check range
    limit = p.gap_check_limit
    hs = np.arange(limit + 1, dtype=np.int64)
    members = np.flatnonzero(in_h_set(hs))
    if members.size < 2:
        raise ConstructionError("H has too few members on the check range")
    max_gap = int(np.diff(members).max())
    bound = int(10.0 * t) + 1
    if max_gap > bound:
        raise ConstructionError(f"H gap {max_gap} exceeds {bound} on [0, {limit}]")

    # samples below this see non-negligible mass from phase-uncontrolled terms;
    # j <= 2 count as uncontrolled because their ordinate perturbations xi_j
    # rotate the phase at moderate heights
    rec_u0 = 1000.0
    for j, flag in enumerate(in_h_flags, start=1):
        if (not flag or j <= 2) and j <= 50:
            rec_u0 = max(rec_u0, 20.0 / deltas[j - 1])

    return GshBarrier(
        triple=D,
        permutation=perm,
        relabeled_triple=triple,
        chi1=chi1,
        chi2=chi2,
        t=t,
        sigma1=sigma1,
        sigma2=sigma2,
        beta=beta,
        truncation=j_max,
        h_values=tuple(h_values),
        in_h=tuple(in_h_flags),
        gammas=tuple(gammas),
        deltas=tuple(deltas),
        z=z,
        w=w,
        alpha=alpha,
        beta_phase=beta_phase,
        excluded_ordering=(b2, b3, b1),
        parameters={"t": t, "sigma1": sigma1, "sigma2": sigma2, "beta": beta,
                    "J": j_max, "gap_check_limit": limit},
        margins={"h_max_gap": max_gap, "h_gap_bound": bound,
                 "alpha_dist": abs(alpha - round(alpha)),
                 "recommended_u0": rec_u0,
                 "uncontrolled_j": [j for j, f in enumerate(in_h_flags, 1) if not f][:20]},
    )


# ---------------------------------------------------------------------------
# serialization


def barrier_to_dict(barrier) -> dict:
    if isinstance(barrier, GshBarrier):
        return {
            "kind": "gsh",
            "q": barrier.q,
            "triple": list(barrier.triple.residues),
            "permutation": list(barrier.permutation),
            "relabeled_triple": list(barrier.relabeled_triple),
            "construction": "GSH",
            "chi1": list(barrier.chi1.exponents),
            "chi2": list(barrier.chi2.exponents),
            "t": barrier.t,
            "sigma1": barrier.sigma1,
            "sigma2": barrier.sigma2,
            "beta": barrier.beta,
            "truncation": barrier.truncation,
            "h_values": list(barrier.h_values),
            "in_h": [bool(f) for f in barrier.in_h],
            "gammas": list(barrier.gammas),
            "deltas": list(barrier.deltas),
            "z": [barrier.z.real, barrier.z.imag],
            "w": [barrier.w.real, barrier.w.imag],
            "alpha": barrier.alpha,
            "beta_phase": barrier.beta_phase,
            "excluded_ordering": list(barrier.excluded_ordering),
            "parameters": barrier.parameters,
            "margins": barrier.margins,
        }
    return {
        "kind": "finite",
        "q": barrier.q,
        "triple": list(barrier.triple.residues),
        "permutation": list(barrier.permutation),
        "relabeled_triple": list(barrier.relabeled_triple),
        "construction": barrier.construction,
        "beta1": barrier.beta1,
        "zeros": [
            {
                "character": list(z.character.exponents),
                "sigma": z.sigma,
                "gamma": z.gamma,
                "multiplicity": z.multiplicity,
            }
            for z in barrier.zeros
        ],
        "excluded_ordering": list(barrier.excluded_ordering),
        "parameters": barrier.parameters,
        "margins": barrier.margins,
    }


def barrier_from_dict(data: dict):
    q = data["q"]
    triple = RaceTriple(q, *data["triple"])
    if data.get("kind") == "gsh":
        return GshBarrier(
            triple=triple,
            permutation=tuple(data["permutation"]),
            relabeled_triple=tuple(data["relabeled_triple"]),
            chi1=DirichletCharacter(q, tuple(data["chi1"])),
            chi2=DirichletCharacter(q, tuple(data["chi2"])),
            t=data["t"],
            sigma1=data["sigma1"],
            sigma2=data["sigma2"],
            beta=data["beta"],
            truncation=data["truncation"],
            h_values=tuple(data["h_values"]),
            in_h=tuple(bool(f) for f in data["in_h"]),
            gammas=tuple(data["gammas"]),
            deltas=tuple(data["deltas"]),
            z=complex(*data["z"]),
            w=complex(*data["w"]),
            alpha=data["alpha"],
            beta_phase=data["beta_phase"],
            excluded_ordering=tuple(data["excluded_ordering"]),
            parameters=data.get("parameters", {}),
            margins=data.get("margins", {}),
        )
    zeros = tuple(
        ZeroSpec(
            DirichletCharacter(q, tuple(zd["character"])),
            zd["sigma"],
            zd["gamma"],
            zd["multiplicity"],
        )
        for zd in data["zeros"]
    )
    return Barrier(
        triple=triple,
        permutation=tuple(data["permutation"]),
        relabeled_triple=tuple(data["relabeled_triple"]),
        construction=data["construction"],
        beta1=data["beta1"],
        zeros=zeros,
        excluded_ordering=tuple(data["excluded_ordering"]),
        parameters=data.get("parameters", {}),
        margins=data.get("margins", {}),
    )
