"""Main-term evaluation for hypothesized zero configurations.

Evaluates the normalized explicit-formula main terms

    -2 Re sum_chi (conj(chi)(a) - conj(chi)(b)) sum_rho n(rho, chi) e^(rho u) / (rho u)

scaled by u / e^(sigma_max u), on grids of u = log x.  The dropped remainders
(the integral tail of each zero term and the contribution of unhypothesized
zeros below the beta_1 ceiling) are never silently added; explicit bounds are
computed alongside and every ordering verdict is compared against them.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .characters import DirichletCharacter

LN2 = math.log(2.0)
TWO_PI_ = 2.0 * math.pi


class SimulationError(ValueError):
    pass


@dataclass(frozen=True)
class MainTermConfig:
    """Zero data ready for grid evaluation."""

    q: int
    zeros: tuple[tuple[DirichletCharacter, complex, int], ...]  # (chi, rho, multiplicity)
    sigma_max: float
    beta1: float = 0.5

    @classmethod
    def from_zeros(cls, q, zeros, beta1=0.5) -> "MainTermConfig":
        packed = tuple((z.character, complex(z.sigma, z.gamma), int(z.multiplicity)) for z in zeros)
        sigma_max = max((z.sigma for z in zeros), default=beta1)
        return cls(q=q, zeros=packed, sigma_max=sigma_max, beta1=beta1)

    def max_gamma(self) -> float:
        return max((rho.imag for _, rho, _ in self.zeros), default=0.0)

    def pair_coefficients(self, a: int, b: int) -> dict[complex, complex]:
        """Per-distinct-rho coefficient sum_chi n(rho,chi)(conj chi(a) - conj chi(b))."""
        coeffs: dict[complex, complex] = {}
        for chi, rho, mult in self.zeros:
            w = (chi.value(a).conjugate() - chi.value(b).conjugate()) * mult
            coeffs[rho] = coeffs.get(rho, 0j) + w
        return coeffs


def main_term_pair_diff(config: MainTermConfig, a: int, b: int, u: float) -> float:
    """Normalized main term of phi(q)(pi(x;a) - pi(x;b)) at u = log x."""
    return float(pair_diff_grid(config, a, b, np.asarray([u], dtype=float))[0])


def pair_diff_grid(config: MainTermConfig, a: int, b: int, us: np.ndarray) -> np.ndarray:
    """Vectorized main term over a u grid (leading f term only, normalized)."""
    us = np.asarray(us, dtype=float)
    out = np.zeros_like(us)
    if a == b:
        return out
    coeffs = config.pair_coefficients(a, b)
    for rho, c in coeffs.items():
        if c == 0:
            continue
        # -2 Re [ c * e^{(rho - sigma_max) u} / rho ]
        expo = (rho.real - config.sigma_max) * us
        phase = rho.imag * us
        z = c / rho
        out += -2.0 * np.exp(expo) * (z.real * np.cos(phase) - z.imag * np.sin(phase))
    return out


def remainder_bound(config: MainTermConfig, a: int, b: int, u: float) -> float:
    """Upper bound on everything the main term drops, at the same normalization.

    Per distinct rho the integral tail of f is at most
    (1/|rho|) [4 e^(sigma u)/(sigma u^2) + e^(sigma u/2)/ln 2], and zeros below
    the beta_1 ceiling contribute at most e^(beta1 u) u^2 times a constant
    depending only on q (reported with constant 1; see package docs).
    """
    if a == b:
        return 0.0
    total = 0.0
    for rho, c in config.pair_coefficients(a, b).items():
        mag = abs(c)
        if mag == 0.0:
            continue
        sig = rho.real
        norm_main = 4.0 * math.exp((sig - config.sigma_max) * u) / (sig * u)
        norm_half = u * math.exp((sig / 2.0 - config.sigma_max) * u) / LN2
        total += 2.0 * mag * (norm_main + norm_half) / abs(rho)
    tail = 2.0 * math.exp((config.beta1 - config.sigma_max) * u) * u * u
    return total + tail


def remainder_sup(config: MainTermConfig, a: int, b: int, u0: float, u1: float) -> float:
    """Supremum of the remainder bound over [u0, u1].

    Each piece is monotone except the ceiling term u^2 e^((beta1 - sigma_max) u),
    whose interior maximum sits at u = 2 / (sigma_max - beta1).
    """
    us = [u0, u1]
    if config.sigma_max > config.beta1:
        critical = 2.0 / (config.sigma_max - config.beta1)
        if u0 < critical < u1:
            us.append(critical)
    return max(remainder_bound(config, a, b, u) for u in us)


@dataclass
class RaceProfile:
    u: np.ndarray
    d1: np.ndarray | None
    d2: np.ndarray | None
    ordering_histogram: dict[tuple, int] = field(default_factory=dict)
    ties: int = 0
    margin: float | None = None
    remainder: float | None = None
    excluded_ordering: tuple | None = None
    excluded_raw: int = 0
    excluded_robust: int = 0
    ordering_codes: np.ndarray | None = None

    @property
    def sample_count(self) -> int:
        return len(self.u)

    def total(self) -> int:
        return sum(self.ordering_histogram.values()) + self.ties

    @property
    def robustly_excluded(self) -> bool:
        """No sample shows the excluded ordering with slack above the remainder.

        The avoidance margin itself legitimately touches zero where two race
        functions cross, so it is reported, not thresholded.
        """
        return self.remainder is not None and self.excluded_robust == 0


def _classify(triple, dab, dbc, dac):
    """Ordering tuples (largest first) per sample from pairwise signs.

    Each difference is taken as computed (no cocycle), because the pairwise
    coefficients can cancel exactly for one pair, leaving a term many orders
    of magnitude below the others.  Any zero sign, or a sign cycle from
    float noise, counts as a tie.
    """
    a, b, c = triple
    orders = []
    for x, y, z in zip(dab, dbc, dac):
        if x == 0 or y == 0 or z == 0:
            orders.append(None)
            continue
        wins = {
            a: int(x > 0) + int(z > 0),
            b: int(x < 0) + int(y > 0),
            c: int(y < 0) + int(z < 0),
        }
        if tuple(sorted(wins.values())) != (0, 1, 2):
            orders.append(None)
            continue
        orders.append(tuple(sorted(wins, key=wins.get, reverse=True)))
    return orders


def simulate(barrier, u0: float, u1: float, n: int, allow_empty: bool = False) -> RaceProfile:
    """Grid evaluation of the main terms of a finite barrier.

    Classifies every sample's strict ordering, counts occurrences of the
    barrier's excluded ordering, and reports the avoidance margin next to the
    remainder bound.
    """
    if n < 2:
        raise SimulationError("need at least 2 samples")
    if u1 <= u0:
        raise SimulationError("empty u range")
    triple = tuple(barrier.relabeled_triple)
    zeros = list(barrier.zeros)
    if not zeros and not allow_empty:
        raise SimulationError("empty zero configuration")
    config = MainTermConfig.from_zeros(barrier.q, zeros, beta1=barrier.beta1)
    gmax = config.max_gamma()
    floor = max(10.0, math.log(gmax) if gmax > 0 else 0.0)
    if u0 < floor:
        raise SimulationError(f"u0={u0} below admissible floor {floor:.3f}")

    us = np.linspace(u0, u1, n)
    a, b, c = triple
    dab = pair_diff_grid(config, a, b, us)
    dbc = pair_diff_grid(config, b, c, us)
    dac = pair_diff_grid(config, a, c, us)

    histogram: dict[tuple, int] = {}
    ties = 0
    codes = []
    for o in _classify(triple, dab, dbc, dac):
        if o is None:
            ties += 1
            codes.append("tie")
        else:
            histogram[o] = histogram.get(o, 0) + 1
            codes.append(">".join(str(r) for r in o))

    diffs = {(a, b): dab, (b, a): -dab, (b, c): dbc, (c, b): -dbc, (a, c): dac, (c, a): -dac}
    x, y, z = barrier.excluded_ordering
    slack = np.minimum(diffs[(x, y)], diffs[(y, z)])
    rem = max(remainder_sup(config, x, y, u0, u1), remainder_sup(config, y, z, u0, u1))
    profile = RaceProfile(
        u=us,
        d1=diffs[(x, y)],
        d2=diffs[(y, z)],
        ordering_histogram=histogram,
        ties=ties,
        margin=float(-slack.max()),
        remainder=rem,
        excluded_ordering=(x, y, z),
        excluded_raw=int((slack > 0).sum()),
        excluded_robust=int((slack > rem).sum()),
        ordering_codes=codes,
    )
    return profile


def verify_exclusion(barrier, u0: float, periods: float = 10.0, samples_per_period: int = 10**4):
    """Refinement-stable exclusion check: doubles the grid until the verdict
    (robust occurrence count zero or not) stabilizes twice."""
    gam = min(z.gamma for z in barrier.zeros)
    u1 = u0 + periods * 2.0 * math.pi / gam
    n = max(2, int(periods * samples_per_period))
    verdicts = []
    profile = None
    while len(verdicts) < 3 or not (verdicts[-1] == verdicts[-2] == verdicts[-3]):
        profile = simulate(barrier, u0, u1, n)
        verdicts.append(profile.excluded_robust == 0)
        if len(verdicts) >= 6:
            break
        n *= 2
    return profile, all(verdicts[-3:])


# ---------------------------------------------------------------------------
# envelope analysis


def v_lambda(lam: float) -> float:
    """Zero crossing of cos y + lam cos 2y on [0, pi], for 0 < lam < 1.

    Uses 2 lam / (1 + sqrt(1 + 8 lam^2)) for the cosine, which is stable for
    small lam (the textbook (-1 + sqrt(8 lam^2 + 1)) / (4 lam) form cancels).
    """
    if not 0.0 < lam < 1.0:
        raise ValueError(f"lambda must be in (0, 1), got {lam}")
    return math.acos(2.0 * lam / (1.0 + math.sqrt(1.0 + 8.0 * lam * lam)))


def envelope_h(y: float, lam: float) -> float:
    return math.cos(y) + lam * math.cos(2.0 * y)


@lru_cache(maxsize=4096)
def envelope_min(d1, d2, c1: int, c2: int, grid: int = 1 << 16, refinements: int = 3):
    """delta > 0 and the worst y with min(g1(y), g2(y - pi(d1+d2))) <= -delta for all y.

    g_j(y) = c1 sin(pi d_j) cos y + (c2/2) sin(2 pi d_j) cos 2y.  Dense grid over
    one period followed by local refinement around the argmax of the min.
    """
    d1f, d2f = float(d1), float(d2)
    shift = math.pi * (d1f + d2f)

    def g(dj, y):
        return c1 * math.sin(math.pi * dj) * np.cos(y) + 0.5 * c2 * math.sin(
            2.0 * math.pi * dj
        ) * np.cos(2.0 * y)

    lo, hi = 0.0, 2.0 * math.pi
    best_y = 0.0
    for _ in range(refinements + 1):
        ys = np.linspace(lo, hi, grid)
        m = np.minimum(g(d1f, ys), g(d2f, ys - shift))
        i = int(np.argmax(m))
        best_y = float(ys[i])
        width = (hi - lo) / grid * 4.0
        lo, hi = best_y - width, best_y + width
    worst = min(
        c1 * math.sin(math.pi * d1f) * math.cos(best_y)
        + 0.5 * c2 * math.sin(2 * math.pi * d1f) * math.cos(2 * best_y),
        c1 * math.sin(math.pi * d2f) * math.cos(best_y - shift)
        + 0.5 * c2 * math.sin(2 * math.pi * d2f) * math.cos(2 * (best_y - shift)),
    )
    delta = -worst
    if delta <= 0.0:
        raise ArithmeticError(f"envelope maximum {worst} is not negative for {(d1, d2, c1, c2)}")
    return delta, best_y


def envelope3_max(grid: int = 10**6):
    """Grid maximum of min(2cos u + cos 2u, -2cos u + cos 2u) over one period."""
    us = np.linspace(0.0, 2.0 * math.pi, grid, endpoint=False)
    c2 = np.cos(2.0 * us)
    c1 = 2.0 * np.cos(us)
    m = np.minimum(c1 + c2, -c1 + c2)
    i = int(np.argmax(m))
    return float(m[i]), float(us[i]), us, m


# ---------------------------------------------------------------------------
# infinite construction


@dataclass
class GshProfile:
    u: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    regime2: np.ndarray
    controlled: np.ndarray
    ordering_histogram: dict[tuple, int]
    ties: int
    excluded_ordering: tuple
    excluded_raw: int
    phase_bound_max: float
    tail_constant: float
    controlled_positive: int
    controlled_total: int
    dominance_violations: int


def _nearest_int_dist(x):
    return np.abs(x - np.round(x))


def gsh_simulate(gsh, u0: float, u1: float, n: int, include_lock_points: bool = True,
                 max_lock_points: int = 2000) -> GshProfile:
    """Two-regime evaluation of a truncated infinite barrier.

    The second main term uses the single isolated zero; the first sums the
    infinite family truncated at J.  Samples split by whether t u / pi is
    within u^-0.9 of the phase offset alpha (nearest-integer distance).  The
    positivity assertion applies to the phase-controlled subset of those
    samples; at desk scale the window phases are only pinned where
    ||t u / pi - alpha|| * max h_j is small, so the rest are reported, not
    asserted.
    """
    if u1 <= u0:
        raise SimulationError("empty u range")
    if n < 2:
        raise SimulationError("need at least 2 samples")
    t = gsh.t
    if gsh.truncation < u1 ** 0.4:
        raise SimulationError(
            f"truncation J={gsh.truncation} too small for u1={u1} (need >= u1^0.4)"
        )
    gam = np.asarray(gsh.gammas)
    del_ = np.asarray(gsh.deltas)
    if u0 < max(10.0, math.log(gam.max())):
        raise SimulationError("u0 below admissible floor for the truncated family")

    us = np.linspace(u0, u1, n)
    if include_lock_points:
        # u with t u / pi = alpha (mod 1): the phase-locked spine of regime 2
        n_lo = math.ceil(t * u0 / math.pi - gsh.alpha)
        n_hi = math.floor(t * u1 / math.pi - gsh.alpha)
        if n_hi >= n_lo:
            idx = np.unique(np.linspace(n_lo, n_hi, min(max_lock_points, n_hi - n_lo + 1)).astype(np.int64))
            locks = (math.pi / t) * (gsh.alpha + idx)
            us = np.unique(np.concatenate([us, locks]))

    w = complex(gsh.w)
    z = complex(gsh.z)
    sigma1, sigma2 = gsh.sigma1, gsh.sigma2

    # second term: 2 Re(e^{itu} Z / (sigma1 + it)), at the x^{sigma1}/u scale
    z1 = z / complex(sigma1, t)
    d2 = 2.0 * (z1.real * np.cos(t * us) - z1.imag * np.sin(t * us))

    # first term: 2 sum_j Re(W e^{(-delta_j + i gamma_j) u} / rho_j), x^{sigma2}/u scale
    rho = (sigma2 - del_) + 1j * gam
    wj = w / rho
    d1 = np.zeros_like(us)
    chunk = 512
    for s in range(0, len(gam), chunk):
        sl = slice(s, min(s + chunk, len(gam)))
        damp = np.exp(-np.outer(us, del_[sl]))
        ph = np.outer(us, gam[sl])
        d1 += 2.0 * (damp * (np.cos(ph) * wj[sl].real - np.sin(ph) * wj[sl].imag)).sum(axis=1)

    # regime split and per-sample positivity certificate
    dist = _nearest_int_dist(t * us / math.pi - gsh.alpha)
    regime2 = dist <= us ** -0.9
    controlled = np.zeros_like(regime2)
    phase_bound_max = 0.0
    ctrl_pos = 0
    ctrl_tot = 0
    h_arr = np.asarray(gsh.h_values, dtype=float)
    in_h_arr = np.asarray(gsh.in_h, dtype=bool)
    xi_arr = np.asarray(gsh.gammas) - 2.0 * t * h_arr
    abs_w = abs(w)
    for i in np.flatnonzero(regime2):
        u = us[i]
        mag = abs_w * np.exp(-del_ * u) / gam  # |B_j|
        rho_corr = mag * (sigma2 / gam)  # 1/rho_j vs 1/(i gamma_j) drift
        # rigorous per-term phase budget: H membership (0.2) plus the drift
        # from the sample's offset and the ordinate perturbation
        budget = 0.2 + h_arr * dist[i] + xi_arr * u / TWO_PI_
        certified = in_h_arr & (budget < 0.24)
        lower = (mag[certified] * np.cos(TWO_PI_ * budget[certified])).sum()
        lower -= mag[~certified].sum() + rho_corr.sum()
        if lower <= 0.0:
            continue
        controlled[i] = True
        ctrl_tot += 1
        j_lo = max(2, math.ceil(u ** 0.25))
        j_hi = min(len(gam), math.floor(u ** 0.4))
        if j_hi >= j_lo:
            js = np.arange(j_lo - 1, j_hi)
            bj = w * np.exp((-del_[js] + 1j * gam[js]) * u) / (1j * gam[js])
            pb = _nearest_int_dist(np.angle(bj) / TWO_PI_)
            phase_bound_max = max(phase_bound_max, float(pb.max()))
        if d1[i] > 0:
            ctrl_pos += 1

    # regime 1 dominance: |D2| at x^{sigma1} beats D1 at x^{sigma2}
    scale = np.exp(np.minimum((sigma1 - sigma2) * us, 700.0))
    dom_viol = int(((np.abs(d2) * scale) <= np.abs(d1))[~regime2].sum())

    # orderings: d1 = phi(q)(pi_a1 - pi_a2) scaled, d2 = phi(q)(pi_a3 - pi_a2) scaled
    a1, a2, a3 = gsh.relabeled_triple
    d_a1a2 = d1 * np.exp((sigma2 - sigma1) * us)  # common x^{sigma1} scale
    d_a3a2 = d2
    d_a1a3 = d_a1a2 - d_a3a2
    histogram: dict[tuple, int] = {}
    ties = 0
    for o in _classify((a1, a2, a3), d_a1a2, -d_a3a2, d_a1a3):
        if o is None:
            ties += 1
        else:
            histogram[o] = histogram.get(o, 0) + 1
    x_, y_, z_ = gsh.excluded_ordering
    dmap = {
        (a1, a2): d_a1a2, (a2, a1): -d_a1a2,
        (a3, a2): d_a3a2, (a2, a3): -d_a3a2,
        (a1, a3): d_a1a3, (a3, a1): -d_a1a3,
    }
    slack = np.minimum(dmap[(x_, y_)], dmap[(y_, z_)])
    excluded_raw = int((slack > 0).sum())

    # tail constant: sum_j e^{-delta_j u} / gamma_j^2 against u^{-3/4}
    tails = np.zeros_like(us)
    for s in range(0, len(gam), chunk):
        sl = slice(s, min(s + chunk, len(gam)))
        tails += (np.exp(-np.outer(us, del_[sl])) / (gam[sl] ** 2)).sum(axis=1)
    tail_c = float((tails * us ** 0.75).max())

    if ctrl_tot and ctrl_pos != ctrl_tot:
        raise SimulationError(
            f"positivity failed on {ctrl_tot - ctrl_pos} of {ctrl_tot} controlled samples"
        )
    if dom_viol:
        raise SimulationError(f"dominance failed on {dom_viol} regime-1 samples")

    return GshProfile(
        u=us, d1=d1, d2=d2, regime2=regime2, controlled=controlled,
        ordering_histogram=histogram, ties=ties,
        excluded_ordering=(x_, y_, z_), excluded_raw=excluded_raw,
        phase_bound_max=phase_bound_max, tail_constant=tail_c,
        controlled_positive=ctrl_pos, controlled_total=ctrl_tot,
        dominance_violations=dom_viol,
    )


# ---------------------------------------------------------------------------
# independence scenario


def independence_scenario(q: int, sigma: float, gammas: dict, u0: float = 50.0,
                          u1: float = 1000.0, n: int = 10**6) -> RaceProfile:
    """One simple zero per non-principal character; census of observed orderings.

    With rationally independent ordinates every ordering of the phi(q) race
    functions is expected to appear eventually; the census reports what a
    finite grid sees and asserts nothing.
    """
    from .characters import nonprincipal_characters
    from .residue_group import unit_group_structure

    chars = nonprincipal_characters(q)
    if set(gammas) != set(chars):
        raise ValueError("need exactly one ordinate per non-principal character")
    vals = sorted(gammas.values())
    if any(abs(x - y) < 1e-12 for x, y in zip(vals, vals[1:])):
        raise ValueError("ordinates must be pairwise distinct")

    units = unit_group_structure(q).units
    us = np.linspace(u0, u1, n)
    v = np.zeros((len(units), n))
    for chi in chars:
        g = gammas[chi]
        rho = complex(sigma, g)
        ph = g * us
        cosp, sinp = np.cos(ph), np.sin(ph)
        for ai, a in enumerate(units):
            w = chi.value(a).conjugate() / rho
            v[ai] += -2.0 * (w.real * cosp - w.imag * sinp)

    order_idx = np.argsort(-v, axis=0, kind="stable")
    histogram: dict[tuple, int] = {}
    # count distinct descending orderings
    codes = order_idx.T
    uniq, counts = np.unique(codes, axis=0, return_counts=True)
    for row, cnt in zip(uniq, counts):
        key = tuple(units[i] for i in row)
        histogram[key] = int(cnt)
    return RaceProfile(u=us, d1=None, d2=None, ordering_histogram=histogram, ties=0)


# ---------------------------------------------------------------------------
# export


def write_profile(profile, path) -> None:
    """Delimited text: header, then u, D1, D2, ordering code per sample."""
    a_cols = profile.d1 is not None and profile.d2 is not None
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["u", "D1", "D2", "ordering"])
        if not a_cols:
            return
        codes = getattr(profile, "ordering_codes", None) or ["?"] * len(profile.u)
        for u, x, y, code in zip(profile.u, profile.d1, profile.d2, codes):
            wr.writerow([format(u, ".15g"), format(x, ".15g"), format(y, ".15g"), code])
