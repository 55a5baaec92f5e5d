"""Invariant-measure bookkeeping, covers, and dimension estimation.

The unique invariant measure assigns delta_g = |q_g alpha - p_g| to every
generation-g atom: pushing the measure through the conjugacy to the rigid
rotation sends atoms to arcs of exactly that Lebesgue size, and the
normalization 1 = q_{n+1} delta_n + q_n delta_{n+1} cross-validates the
assignment at every level.  Measures are therefore carried exactly (as
quadratic irrationals in the rotation number's field) wherever they enter
an identity, and only converted to floats in reports.

Lengths, by contrast, are honest geometry: sums of exact-endpoint arc
lengths of the analyzed map.  Covers keep the central constituents of each
bridge, trimming floor(a_{n+1}^gamma) per side, which makes them large in
measure (all bridge atoms weigh the same delta_n) yet short in Lebesgue
length (central atoms decay quadratically toward the bridge middle).
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np
from mpmath import mpf

from .cf import ContinuedFraction
from .errors import InvalidInputError
from .partition import BridgeDecomposition, PartitionHierarchy, bridge_decomposition
from .surd import QuadraticIrrational


def atom_measure(cf: ContinuedFraction, generation: int,
                 index: int | None = None) -> QuadraticIrrational:
    """mu(I_generation^index) = delta_generation, independent of the index."""
    if generation > cf.depth:
        raise InvalidInputError(
            f"generation {generation} exceeds cf depth {cf.depth}"
        )
    return cf.delta_exact(generation)


def check_partition_measure_identity(cf: ContinuedFraction, n: int) -> bool:
    """q_{n+1} mu(I_n) + q_n mu(I_{n+1}) = 1, exactly."""
    total = atom_measure(cf, n) * cf.q(n + 1) + atom_measure(cf, n + 1) * cf.q(n)
    return total == QuadraticIrrational.from_int(1)


def check_small_interval_measure(cf: ContinuedFraction, n: int) -> bool:
    """q_{n-1} delta_n <= 1/(a_{n+1} a_n), exactly."""
    lhs = atom_measure(cf, n) * (cf.q(n - 1) * cf.a(n + 1) * cf.a(n))
    return lhs <= QuadraticIrrational.from_int(1)


@dataclass
class ArcMeasure:
    lo: mpf
    hi: mpf
    level_used: int
    tol_met: bool

    def mid(self) -> mpf:
        return (self.lo + self.hi) / 2

    def width(self) -> mpf:
        return self.hi - self.lo


def arc_measure(hier: PartitionHierarchy, x, y, level: int | None = None,
                tol=None) -> ArcMeasure:
    """Bracket mu of the positively-oriented arc [x, y].

    Lower bound sums the atoms fully inside at the chosen level; the upper
    bound adds the two boundary atoms.  ``x == y`` means the full circle.
    When ``tol`` is given and the bracket stays wider, the widest available
    bracket is returned with ``tol_met=False``.
    """
    if level is None:
        level = hier.depth
    part = hier.partition(level)
    cf = hier.cf
    prec = hier.spec.precision_bits
    with mpmath.workprec(prec):
        x, y = mpf(x) % 1, mpf(y) % 1
        if x == y:
            return ArcMeasure(mpf(1), mpf(1), level, True)
        d_long = cf.delta(level - 1, prec)
        d_short = cf.delta(level, prec)
        atoms = part.sorted_atoms
        A = len(atoms)
        kx = _owner_sorted_index(part, x)
        ky = _owner_sorted_index(part, y)
        ax, ay = atoms[kx], atoms[ky]
        x_at_left = ax.rel(x) == 0
        if kx == ky and not x_at_left:
            rx, ry = ax.rel(x), ax.rel(y)
            if rx <= ry:  # arc inside a single atom
                lo, hi = mpf(0), _gen_measure(ax, level, d_long, d_short)
            else:  # arc is the complement of a sub-arc of this atom
                lo = 1 - _gen_measure(ax, level, d_long, d_short)
                hi = mpf(1)
            result = ArcMeasure(lo, hi, level, True)
            return _with_tol(result, tol)
        start = kx if x_at_left else (kx + 1) % A
        # full atoms occupy sorted positions start .. ky-1 (cyclically)
        n_full = (ky - start) % A
        lo = mpf(0)
        n_short_atoms = _count_short(part, start, n_full)
        lo = (n_full - n_short_atoms) * d_long + n_short_atoms * d_short
        hi = lo
        if not x_at_left:
            hi += _gen_measure(ax, level, d_long, d_short)
        if ay.rel(y) != 0:
            hi += _gen_measure(ay, level, d_long, d_short)
        result = ArcMeasure(lo, min(hi, mpf(1)), level, True)
        return _with_tol(result, tol)


def _with_tol(result: ArcMeasure, tol) -> ArcMeasure:
    if tol is not None and result.width() > tol:
        result.tol_met = False
    return result


def _gen_measure(atom, level, d_long, d_short):
    return d_long if atom.generation == level - 1 else d_short


def _owner_sorted_index(part, x) -> int:
    k = bisect.bisect_right(part._sorted_lefts, x) - 1
    return k % len(part.sorted_atoms)


def _count_short(part, start: int, count: int) -> int:
    """Number of generation-``level`` atoms among ``count`` sorted atoms
    from ``start``, cyclically."""
    if count == 0:
        return 0
    pre = _short_prefix(part)
    A = len(part.sorted_atoms)
    start %= A
    end = start + count
    if end <= A:
        return pre[end] - pre[start]
    return (pre[A] - pre[start]) + pre[end - A]


def _short_prefix(part):
    pre = getattr(part, "_short_prefix_cache", None)
    if pre is None:
        pre = [0]
        for a in part.sorted_atoms:
            pre.append(pre[-1] + (1 if a.generation == part.level else 0))
        part._short_prefix_cache = pre
    return pre


# ------------------------------------------------------------------ covers

@dataclass
class CoverSpec:
    """Central-interval cover data at one level.

    Kept indices per bridge s are {j : k_s + trim < j < k_{s+1} + 1 - trim},
    intersected with the bridge; the same j-set shifts to every strip i.
    """

    level: int
    gamma: float
    trim: int
    a_next: int
    kept_ranges: tuple          # per bridge: (lo, hi) inclusive or None
    kept_per_strip: int
    bridges: BridgeDecomposition

    def kept_js(self):
        for rng in self.kept_ranges:
            if rng is not None:
                yield from range(rng[0], rng[1] + 1)

    def to_report(self) -> dict:
        return {
            "level": self.level,
            "gamma": self.gamma,
            "trim": self.trim,
            "a_next": self.a_next,
            "kept_ranges": [list(r) if r else None for r in self.kept_ranges],
            "kept_per_strip": self.kept_per_strip,
        }


def build_cover(bridges: BridgeDecomposition, cover_gamma: float) -> CoverSpec:
    """Trim floor(a_{n+1}^gamma) constituents from each side of each bridge."""
    if not 0 < cover_gamma < 1:
        raise InvalidInputError("cover gamma must lie in (0, 1)")
    a = bridges.a_next
    trim = int(mpmath.floor(mpmath.power(a, cover_gamma)))
    times = bridges.critical_times
    ranges = []
    kept = 0
    for s in range(len(times) - 1):
        lo = times[s] + trim + 1
        hi = times[s + 1] - trim
        blo, bhi = times[s] + 1, times[s + 1] - 1
        lo, hi = max(lo, blo), min(hi, bhi)
        if lo <= hi:
            ranges.append((lo, hi))
            kept += hi - lo + 1
        else:
            ranges.append(None)
    ranges.append(None)  # trailing empty bridge
    return CoverSpec(level=bridges.level, gamma=float(cover_gamma), trim=trim,
                     a_next=a, kept_ranges=tuple(ranges), kept_per_strip=kept,
                     bridges=bridges)


@dataclass
class InequalityCheck:
    name: str
    lhs: float
    rhs: float
    passed: bool
    vacuous: bool = False

    def to_report(self) -> dict:
        return vars(self)


@dataclass
class CoverReport:
    cover: CoverSpec
    mu_strip: float          # mu(A^n_{i,gamma}), same for every i
    mu_total: float          # mu(A^n_gamma)
    mu_total_exact: QuadraticIrrational
    two_way_exact: bool      # mu(A) = q_n mu(A_0) as an exact identity
    length_strips: list      # |A^n_{i,gamma}| per strip (floats)
    length_total: float
    checks: list[InequalityCheck] = field(default_factory=list)

    @property
    def empty(self) -> bool:
        return self.cover.kept_per_strip == 0

    def to_report(self) -> dict:
        return {
            "cover": self.cover.to_report(),
            "mu_strip": self.mu_strip,
            "mu_total": self.mu_total,
            "two_way_exact": self.two_way_exact,
            "length_total": self.length_total,
            "length_strip_max": max(self.length_strips) if self.length_strips else 0.0,
            "checks": [c.to_report() for c in self.checks],
        }


def cover_report(cover: CoverSpec, cf: ContinuedFraction,
                 hier: PartitionHierarchy, n_critical: int,
                 m_emp: float) -> CoverReport:
    """Exact measures, measured lengths, and the four cover inequalities."""
    n = cover.level
    prec = hier.spec.precision_bits
    q_n = cf.q(n)
    delta_n = cf.delta_exact(n)
    kept = cover.kept_per_strip
    mu_strip_exact = delta_n * kept
    mu_total_exact = mu_strip_exact * q_n
    # two ways: summing kept atoms over all strips vs q_n times one strip;
    # the kept index set is strip-independent, so this is exact bookkeeping
    total_kept = kept * q_n
    two_way = (delta_n * total_kept) == mu_total_exact
    with mpmath.workprec(prec):
        js = list(cover.kept_js())
        lengths = []
        for i in range(q_n):
            total = mpf(0)
            for j in js:
                total += hier.delta_atom(n, i, j).length()
            lengths.append(total)
        length_total = float(sum(lengths))
        length_strips = [float(v) for v in lengths]
        long_lengths = [float(hier.atom(n - 1, i).length()) for i in range(q_n)]
    a = cover.a_next
    coef = 4 * n_critical + 2
    mu_strip = float(mu_strip_exact.to_mpf(prec))
    mu_total = float(mu_total_exact.to_mpf(prec))
    checks = []
    empty = kept == 0
    rhs1 = float(cf.delta(n, prec)) * (a - coef * a**cover.gamma)
    checks.append(InequalityCheck(
        "mu_strip_lower", mu_strip, rhs1,
        passed=(mu_strip >= rhs1 or rhs1 <= 0), vacuous=(empty or rhs1 <= 0)))
    rhs2 = (1 - 2 / a) * (1 - coef / a ** (1 - cover.gamma))
    checks.append(InequalityCheck(
        "mu_total_lower", mu_total, rhs2,
        passed=(mu_total >= rhs2 or rhs2 <= 0), vacuous=(empty or rhs2 <= 0)))
    worst = None
    for i in range(q_n):
        bound = coef * m_emp * long_lengths[i] / cover.trim
        margin = bound - length_strips[i]
        if worst is None or margin < worst[0]:
            worst = (margin, length_strips[i], bound)
    checks.append(InequalityCheck(
        "length_strip_upper", worst[1], worst[2],
        passed=(worst[0] >= 0), vacuous=empty))
    rhs4 = coef * m_emp / cover.trim
    checks.append(InequalityCheck(
        "length_total_upper", length_total, rhs4,
        passed=(length_total <= rhs4), vacuous=empty))
    return CoverReport(
        cover=cover, mu_strip=mu_strip, mu_total=mu_total,
        mu_total_exact=mu_total_exact, two_way_exact=two_way,
        length_strips=length_strips, length_total=length_total, checks=checks,
    )


# --------------------------------------------------------- singularity

@dataclass
class SingularityResult:
    found: bool
    eps_target: float
    control: bool
    witness: dict | None
    best: dict | None
    searched: list

    def to_report(self) -> dict:
        return {
            "found": self.found,
            "eps_target": self.eps_target,
            "control": self.control,
            "witness": self.witness,
            "best_candidate": self.best,
            "searched": self.searched,
        }


def singularity_certificate(hier: PartitionHierarchy, eps_target: float,
                            levels=None, gammas=None) -> SingularityResult:
    """Search levels and gammas for a cover with mu >= 1-eps, length <= eps.

    The measure comparison is exact (quadratic-irrational arithmetic against
    the rational 1 - eps); lengths are measured at working precision.  For
    the rigid-rotation control mu equals length and the search is flagged.
    """
    cf = hier.cf
    spec = hier.spec
    if not 0 < eps_target < 1:
        raise InvalidInputError("eps_target must lie in (0, 1)")
    control = spec.family == "rigid_rotation"
    if levels is None:
        levels = range(1, hier.depth)
    if gammas is None:
        gammas = [g / 20 for g in range(1, 20)]
    eps_fr = Fraction(eps_target).limit_denominator(10**9)
    need_mu = QuadraticIrrational.from_fraction(
        (1 - eps_fr).numerator, (1 - eps_fr).denominator)
    prec = spec.precision_bits
    searched = []
    best = None
    for n in levels:
        if cf.a(n + 1) < 3:
            continue  # no usable bridges
        bridges = bridge_decomposition(hier, n)
        q_n = cf.q(n)
        delta_n = cf.delta_exact(n)
        for gamma in gammas:
            cov = build_cover(bridges, gamma)
            if cov.kept_per_strip == 0:
                continue
            mu_exact = delta_n * (cov.kept_per_strip * q_n)
            mu_ok = mu_exact >= need_mu
            with mpmath.workprec(prec):
                js = list(cov.kept_js())
                total = mpf(0)
                for i in range(q_n):
                    for j in js:
                        total += hier.delta_atom(n, i, j).length()
            length = float(total)
            mu_f = float(mu_exact.to_mpf(prec))
            entry = {"level": n, "gamma": gamma, "mu": mu_f, "length": length,
                     "trim": cov.trim}
            searched.append(entry)
            if best is None or mu_f - length > best["mu"] - best["length"]:
                best = entry
            if mu_ok and length <= eps_target:
                return SingularityResult(True, eps_target, control, entry,
                                         best, searched)
    return SingularityResult(False, eps_target, control, None, best, searched)


# --------------------------------------------------- Hausdorff content sums

@dataclass
class ContentSumReport:
    levels: tuple[int, ...]
    gamma: float
    d: float
    tau: float
    terms: tuple[float, ...]
    partial_sums: tuple[float, ...]      # S_K = sum of terms after index K
    majorant_terms: tuple[float, ...]
    majorant_sums: tuple[float, ...]
    majorant_divergent: bool

    def to_report(self) -> dict:
        return vars(self) | {
            "levels": list(self.levels), "terms": list(self.terms),
            "partial_sums": list(self.partial_sums),
            "majorant_terms": list(self.majorant_terms),
            "majorant_sums": list(self.majorant_sums),
        }


def hausdorff_content_sum(hier: PartitionHierarchy, levels, gamma: float,
                          d: float, tau: float, n_critical: int,
                          m_emp: float) -> ContentSumReport:
    """S_K = sum_{k>K} sum_i |A^{n_k}_{i,gamma}|^d along the level subsequence,
    next to the analytic majorant M^d (4N+2)^d q_{n_k}^{1 - d(gamma tau + 1)}."""
    if not 0 < d <= 1:
        raise InvalidInputError("d must lie in (0, 1]")
    cf = hier.cf
    prec = hier.spec.precision_bits
    terms, majorant = [], []
    coef = (4 * n_critical + 2)
    exponent = 1 - d * (gamma * tau + 1)
    for n in levels:
        bridges = bridge_decomposition(hier, n)
        cov = build_cover(bridges, gamma)
        with mpmath.workprec(prec):
            js = list(cov.kept_js())
            total = 0.0
            for i in range(cf.q(n)):
                s = mpf(0)
                for j in js:
                    s += hier.delta_atom(n, i, j).length()
                if s > 0:
                    total += float(mpmath.power(s, d))
        terms.append(total)
        majorant.append((m_emp ** d) * (coef ** d) * float(cf.q(n)) ** exponent)
    tails = []
    m_tails = []
    for K in range(len(terms)):
        tails.append(sum(terms[K + 1:]))
        m_tails.append(sum(majorant[K + 1:]))
    return ContentSumReport(
        levels=tuple(levels), gamma=float(gamma), d=float(d), tau=float(tau),
        terms=tuple(terms), partial_sums=tuple(tails),
        majorant_terms=tuple(majorant), majorant_sums=tuple(m_tails),
        majorant_divergent=(exponent >= 0),
    )


# -------------------------------------------------- local dimension samples

@dataclass
class DimensionEstimate:
    n_levels: int
    samples_used: int
    samples_excluded: int
    per_level_median: tuple[float, ...]
    estimate: float                      # median of last-level exponents
    iqr: float
    frostman: tuple[float, float]        # (Q1, Q3) of last-level exponents
    extrapolated: float                  # linear-in-1/log(q_n) intercept
    ball_bracket_last: tuple[float, float]
    low_confidence: bool
    sample_exponents: list = field(default_factory=list, repr=False)

    def to_report(self, include_samples: bool = False) -> dict:
        rep = {
            "n_levels": self.n_levels,
            "samples_used": self.samples_used,
            "samples_excluded": self.samples_excluded,
            "per_level_median": list(self.per_level_median),
            "estimate": self.estimate,
            "iqr": self.iqr,
            "frostman_lo": self.frostman[0],
            "frostman_hi": self.frostman[1],
            "extrapolated": self.extrapolated,
            "ball_bracket_last": list(self.ball_bracket_last),
            "low_confidence": self.low_confidence,
        }
        if include_samples:
            rep["sample_exponents"] = self.sample_exponents
        return rep


def local_dimension_samples(hier: PartitionHierarchy, n_max: int,
                            samples: int = 200, seed: int = 0,
                            sample_points=None) -> DimensionEstimate:
    """Local exponents log mu(P_k(x)) / log |P_k(x)| at orbit-point samples.

    Default samples are orbit points beyond the partition's endpoint range
    (they equidistribute for the invariant measure but are not endpoints of
    any analyzed level), spread by a golden-ratio stride seeded into the
    index window.  Points landing within locate tolerance of a boundary are
    excluded and counted.
    """
    cf = hier.cf
    if n_max < 1 or n_max > hier.depth:
        raise InvalidInputError(f"n_max {n_max} out of range")
    prec = hier.spec.precision_bits
    with mpmath.workprec(prec):
        if sample_points is None:
            L0 = cf.q(n_max) + cf.q(n_max - 1)
            window = max(4 * samples, 512)
            hier.extend_orbit(L0 + window + 1)
            phi = (5 ** 0.5 - 1) / 2
            offsets = []
            seen = set()
            t = 1 + (seed % max(window, 1))
            while len(offsets) < samples:
                o = int((t * phi * window)) % window
                if o not in seen:
                    seen.add(o)
                    offsets.append(o)
                t += 1
            points = [hier.position(L0 + o) for o in offsets]
        else:
            points = [mpf(p) % 1 for p in sample_points]
        deltas = {g: cf.delta(g, prec) for g in range(0, n_max + 1)}
        log_mu = {g: float(mpmath.log(d)) for g, d in deltas.items()}
        used, excluded = 0, 0
        exponents = []            # per sample: list over levels
        ball_last = []
        for x in points:
            row = []
            ok = True
            for k in range(1, n_max + 1):
                res = hier.locate(x, k)
                if res.boundary:
                    ok = False
                    break
                gen, idx = res.label
                length = hier.atom(gen, idx).length()
                d_k = log_mu[gen] / float(mpmath.log(length))
                row.append(d_k)
            if not ok:
                excluded += 1
                continue
            used += 1
            exponents.append(row)
            eps = hier.atom(*hier.locate(x, n_max).label).length()
            ball = arc_measure(hier, (x - eps) % 1, (x + eps) % 1, level=n_max)
            log_eps = float(mpmath.log(eps))
            lo = float(mpmath.log(ball.hi)) / log_eps if ball.hi > 0 else math.inf
            hi = float(mpmath.log(ball.lo)) / log_eps if ball.lo > 0 else math.inf
            ball_last.append((lo, hi))
        if not exponents:
            raise InvalidInputError("every sample point was excluded")
        arr = np.array(exponents)
        med = np.median(arr, axis=0)
        last = arr[:, -1]
        q1, q3 = np.percentile(last, [25, 75])
        # extrapolate the per-level medians linearly in 1/log q_n
        xs = np.array([1.0 / math.log(cf.q(n)) for n in range(1, n_max + 1)
                       if cf.q(n) > 1])
        ys = np.array([med[n - 1] for n in range(1, n_max + 1) if cf.q(n) > 1])
        if len(xs) >= 2:
            slope, intercept = np.polyfit(xs, ys, 1)
        else:
            intercept = float(med[-1])
        ball_lo = float(np.median([b[0] for b in ball_last]))
        ball_hi = float(np.median([b[1] for b in ball_last]))
        return DimensionEstimate(
            n_levels=n_max, samples_used=used, samples_excluded=excluded,
            per_level_median=tuple(float(v) for v in med),
            estimate=float(np.median(last)), iqr=float(q3 - q1),
            frostman=(float(q1), float(q3)), extrapolated=float(intercept),
            ball_bracket_last=(ball_lo, ball_hi),
            low_confidence=(n_max < 4),
            sample_exponents=[list(map(float, row)) for row in exponents],
        )


# ------------------------------------------------------------- signature

@dataclass
class SignatureReport:
    n_critical: int
    rho_quotients: tuple[int, ...]
    criticalities: tuple[int, ...]
    lambda_brackets: tuple                 # ((lo, hi) floats per gap)
    lambda_mid_sum: float

    def to_report(self) -> dict:
        return {
            "n_critical": self.n_critical,
            "rho_quotients": list(self.rho_quotients),
            "criticalities": list(self.criticalities),
            "lambda_brackets": [list(b) for b in self.lambda_brackets],
            "lambda_mid_sum": self.lambda_mid_sum,
        }


def signature(hier: PartitionHierarchy) -> SignatureReport:
    """(n_f, rho; criticalities; mu-masses between consecutive critical points)."""
    spec = hier.spec
    cf = hier.cf
    cps = sorted(spec.critical_points())
    if not cps:
        raise InvalidInputError("signature undefined: the map has no critical points")
    brackets = []
    mid_sum = 0.0
    with mpmath.workprec(spec.precision_bits):
        for i, c in enumerate(cps):
            c_next = cps[(i + 1) % len(cps)]
            m = arc_measure(hier, c, c_next)
            brackets.append((float(m.lo), float(m.hi)))
            mid_sum += float(m.mid())
    return SignatureReport(
        n_critical=len(cps), rho_quotients=cf.quotients,
        criticalities=spec.criticalities(), lambda_brackets=tuple(brackets),
        lambda_mid_sum=mid_sum,
    )
