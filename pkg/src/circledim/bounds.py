"""Empirical real bounds: comparability ratios, quadratic bridge decay,
negative-Schwarzian checks, and the smallest constant making them all hold.

The comparability statistics are symmetric (every entry is max(v, 1/v), so
values are >= 1) and the per-level constant is their maximum over the four
items; the empirical constant M_emp over a level range is monotone in the
range by construction.  The quadratic-decay item is measured as a
regression of log length against log distance-to-the-nearest-critical-time,
separately on each monotone half of a bridge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np
from mpmath import mpf

from .errors import InvalidInputError
from .maps import MapSpec
from .partition import (
    BridgeDecomposition,
    DynamicalPartition,
    PartitionHierarchy,
    bridge_decomposition,
)


@dataclass
class AdjacencyStats:
    level: int
    max_ratio: float
    argmax_pair: tuple          # (label, label) attaining the max
    histogram: dict             # floor(log2 ratio) -> count

    def to_report(self) -> dict:
        return {
            "level": self.level,
            "max_ratio": self.max_ratio,
            "argmax_pair": [list(l) for l in self.argmax_pair],
            "histogram": {str(k): v for k, v in sorted(self.histogram.items())},
        }


def adjacency_ratios(part: DynamicalPartition) -> AdjacencyStats:
    """Length ratios of cyclically adjacent atoms (item 1)."""
    with mpmath.workprec(part.precision_bits):
        atoms = part.sorted_atoms
        best, pair = 0.0, None
        hist: dict[int, int] = {}
        lengths = [a.length() for a in atoms]
        for k in range(len(atoms)):
            l1, l2 = lengths[k], lengths[(k + 1) % len(atoms)]
            r = float(l1 / l2)
            r = max(r, 1.0 / r)
            hist[int(math.floor(math.log2(r)))] = \
                hist.get(int(math.floor(math.log2(r))), 0) + 1
            if r > best:
                best, pair = r, (atoms[k].label, atoms[(k + 1) % len(atoms)].label)
        return AdjacencyStats(part.level, best, pair, hist)


@dataclass
class ComparabilityStats:
    level: int
    bridge_max: float | None    # item 2: |I_{n-1}^i| vs |G_{i,s}|
    spot_max: float | None      # item 3: |I_{n-1}^i| vs |Delta_{i,k_s}|
    vacuous: bool

    def to_report(self) -> dict:
        return vars(self)


def bridge_and_spot_comparability(hier: PartitionHierarchy,
                                  bridges: BridgeDecomposition) -> ComparabilityStats:
    """Items 2 and 3 over every strip i and every nonempty bridge/spot."""
    cf = hier.cf
    n = bridges.level
    with mpmath.workprec(hier.spec.precision_bits):
        bridge_max = None
        spot_max = None
        real_bridges = [b for b in bridges.bridges if b is not None]
        for i in range(cf.q(n)):
            base_len = hier.atom(n - 1, i).length()
            for s in range(bridges.r):
                js = bridges.bridge_js(s)
                if len(js) == 0:
                    continue
                g_len = mpf(0)
                for j in js:
                    g_len += hier.delta_atom(n, i, j).length()
                v = float(base_len / g_len)
                v = max(v, 1.0 / v)
                bridge_max = v if bridge_max is None else max(bridge_max, v)
            for k_s in bridges.critical_times:
                d_len = hier.delta_atom(n, i, k_s).length()
                v = float(base_len / d_len)
                v = max(v, 1.0 / v)
                spot_max = v if spot_max is None else max(spot_max, v)
        return ComparabilityStats(
            level=n, bridge_max=bridge_max, spot_max=spot_max,
            vacuous=not real_bridges,
        )


def fit_power_law(distances, lengths) -> tuple[float, float, float]:
    """Least-squares slope/intercept/rms-residual of log length vs log distance."""
    if len(distances) < 2:
        raise InvalidInputError("need at least two points to fit")
    xs = np.log(np.asarray(distances, dtype=float))
    ys = np.asarray([float(v) for v in lengths])
    ys = np.log(ys)
    slope, intercept = np.polyfit(xs, ys, 1)
    resid = float(np.sqrt(np.mean((np.polyval([slope, intercept], xs) - ys) ** 2)))
    return float(slope), float(intercept), resid


@dataclass
class YoccozFit:
    level: int
    bridge: int
    strip: int
    n_atoms: int
    halves: tuple   # per monotone half: dict(slope, intercept, residual, points)

    def to_report(self) -> dict:
        return {
            "level": self.level, "bridge": self.bridge, "strip": self.strip,
            "n_atoms": self.n_atoms, "halves": list(self.halves),
        }


def yoccoz_fit(hier: PartitionHierarchy, bridges: BridgeDecomposition,
               s: int, strip: int = 0, min_atoms: int = 8) -> YoccozFit | None:
    """Quadratic-decay regression on bridge s (skips short bridges).

    Fits log |Delta_{i,j}| against log min(j - k_s, k_{s+1} - j) separately
    for the half closer to k_s and the half closer to k_{s+1}.
    """
    n = bridges.level
    js = list(bridges.bridge_js(s))
    if len(js) < min_atoms:
        return None
    k_lo = bridges.critical_times[s]
    k_hi = bridges.critical_times[s + 1]
    with mpmath.workprec(hier.spec.precision_bits):
        lengths = {j: hier.delta_atom(n, strip, j).length() for j in js}
        halves = []
        for side in ("left", "right"):
            if side == "left":
                pts = [(j - k_lo, lengths[j]) for j in js if j - k_lo <= k_hi - j]
            else:
                pts = [(k_hi - j, lengths[j]) for j in js if k_hi - j < j - k_lo]
            if len(pts) < 3:
                halves.append(None)
                continue
            slope, intercept, resid = fit_power_law(
                [p[0] for p in pts], [p[1] for p in pts])
            halves.append({"slope": slope, "intercept": intercept,
                           "residual": resid, "points": len(pts)})
    return YoccozFit(level=n, bridge=s, strip=strip, n_atoms=len(js),
                     halves=tuple(halves))


@dataclass
class SchwarzianRecord:
    level: int
    bridge: int
    n_samples: int
    n_valid: int
    n_skipped: int
    fraction_negative: float
    control: bool              # affine family: identically zero cocycle

    def to_report(self) -> dict:
        return vars(self)


def _schwarzian_step(spec: MapSpec):
    """Closure: x -> (f(x) mod 1, f'(x), S f(x)); caller owns the context."""
    omega = spec.omega
    if spec.family == "rigid_rotation":
        def step(x):
            y = x + omega
            return y - mpmath.floor(y), mpf(1), mpf(0)
        return step
    if spec.family in ("arnold_cubic", "mfold_cubic"):
        m = spec.params[0] if spec.family == "mfold_cubic" else 1
        w = 2 * mpmath.pi * m
        def step(x):
            c, s = mpmath.cos_sin(w * x)
            y = x + omega - s / w
            d1 = 1 - c
            if d1 == 0:
                return y - mpmath.floor(y), d1, mpf(0)
            d2 = w * s
            d3 = w * w * c
            r = d2 / d1
            return y - mpmath.floor(y), d1, d3 / d1 - 1.5 * r * r
        return step
    a1, a2 = spec.params
    w1, w2 = 2 * mpmath.pi, 4 * mpmath.pi
    def step(x):
        c1, s1 = mpmath.cos_sin(w1 * x)
        c2, s2 = mpmath.cos_sin(w2 * x)
        y = x + omega + a1 * s1 + a2 * s2
        d1 = 1 + w1 * a1 * c1 + w2 * a2 * c2
        if d1 == 0:
            return y - mpmath.floor(y), d1, mpf(0)
        d2 = -(w1**2) * a1 * s1 - (w2**2) * a2 * s2
        d3 = -(w1**3) * a1 * c1 - (w2**3) * a2 * c2
        r = d2 / d1
        return y - mpmath.floor(y), d1, d3 / d1 - 1.5 * r * r
    return step


def almost_parabolic_check(hier: PartitionHierarchy, bridges: BridgeDecomposition,
                           s: int, n_samples: int = 100) -> SchwarzianRecord | None:
    """Sign of S(f^{q_n}) sampled across the reduced bridge.

    The Schwarzian of the composition accumulates via the cocycle
    S(g o f) = (S g o f) (f')^2 + S f along the orbit.  Samples whose orbit
    passes within the derivative guard of a critical point are skipped and
    counted.  Returns None for an empty reduced bridge.
    """
    js = list(bridges.reduced_js(s))
    if not js:
        return None
    n = bridges.level
    cf = hier.cf
    spec = hier.spec
    prec = spec.precision_bits
    q_n = cf.q(n)
    with mpmath.workprec(prec):
        first = hier.delta_atom(n, 0, js[0])
        last = hier.delta_atom(n, 0, js[-1])
        if n % 2 == 0:
            left, right = first.left, last.right
        else:
            left, right = last.left, first.right
        arc_len = (right - left) % 1
        guard = mpf(2) ** (-(prec // 2))
        step = _schwarzian_step(spec)
        negative = valid = skipped = 0
        for t in range(n_samples):
            x = (left + arc_len * (2 * t + 1) / (2 * n_samples)) % 1
            s_acc = mpf(0)
            deriv = mpf(1)
            ok = True
            for _ in range(q_n):
                x_next, d1, sf = step(x)
                if abs(d1) < guard:
                    ok = False
                    break
                s_acc += sf * deriv * deriv
                deriv *= d1
                x = x_next
            if not ok:
                skipped += 1
                continue
            valid += 1
            if s_acc < 0:
                negative += 1
        return SchwarzianRecord(
            level=n, bridge=s, n_samples=n_samples, n_valid=valid,
            n_skipped=skipped,
            fraction_negative=(negative / valid if valid else 0.0),
            control=(spec.family == "rigid_rotation"),
        )


# ----------------------------------------------------------- per-level + M

@dataclass
class LevelBounds:
    level: int
    item1: AdjacencyStats
    item2_3: ComparabilityStats
    item4_max: float | None      # max over strips/bridges of max(v, 1/v)
    yoccoz: list = field(default_factory=list)
    schwarzian: list = field(default_factory=list)
    min_atom_length_log2: float = 0.0

    def level_constant(self) -> float:
        vals = [self.item1.max_ratio]
        if self.item2_3.bridge_max is not None:
            vals.append(self.item2_3.bridge_max)
        if self.item2_3.spot_max is not None:
            vals.append(self.item2_3.spot_max)
        if self.item4_max is not None:
            vals.append(self.item4_max)
        return max(vals)

    def to_report(self) -> dict:
        return {
            "level": self.level,
            "item1": self.item1.to_report(),
            "item2_3": self.item2_3.to_report(),
            "item4_max": self.item4_max,
            "level_constant": self.level_constant(),
            "yoccoz": [y.to_report() for y in self.yoccoz if y],
            "schwarzian": [r.to_report() for r in self.schwarzian if r],
            "min_atom_length_log2": self.min_atom_length_log2,
        }


def item4_constant(hier: PartitionHierarchy, bridges: BridgeDecomposition,
                   strips: int | None = None) -> float | None:
    """Worst two-sided constant in |Delta_{i,j}| ~ |I_{n-1}^i| / dist^2."""
    cf = hier.cf
    n = bridges.level
    worst = None
    with mpmath.workprec(hier.spec.precision_bits):
        n_strips = cf.q(n) if strips is None else min(strips, cf.q(n))
        for i in range(n_strips):
            base_len = hier.atom(n - 1, i).length()
            for s in range(bridges.r):
                k_lo = bridges.critical_times[s]
                k_hi = bridges.critical_times[s + 1]
                for j in bridges.bridge_js(s):
                    dist = min(j - k_lo, k_hi - j)
                    v = float(hier.delta_atom(n, i, j).length() * dist * dist
                              / base_len)
                    v = max(v, 1.0 / v)
                    worst = v if worst is None else max(worst, v)
    return worst


def level_bounds(hier: PartitionHierarchy, n: int, *, yoccoz_min_atoms: int = 8,
                 schwarzian_samples: int = 100,
                 bridges: BridgeDecomposition | None = None) -> LevelBounds:
    """All real-bounds statistics for one level."""
    part = hier.partition(n)
    if bridges is None:
        bridges = bridge_decomposition(hier, n)
    item1 = adjacency_ratios(part)
    item23 = bridge_and_spot_comparability(hier, bridges)
    item4 = item4_constant(hier, bridges)
    fits = [yoccoz_fit(hier, bridges, s, min_atoms=yoccoz_min_atoms)
            for s in range(bridges.r)]
    sch = [almost_parabolic_check(hier, bridges, s, schwarzian_samples)
           for s in range(bridges.r)]
    with mpmath.workprec(hier.spec.precision_bits):
        min_len = min(a.length() for a in part.atoms)
        min_log2 = float(mpmath.log(min_len, 2))
    return LevelBounds(level=n, item1=item1, item2_3=item23, item4_max=item4,
                       yoccoz=fits, schwarzian=sch,
                       min_atom_length_log2=min_log2)


@dataclass
class RealBoundsReport:
    levels: tuple[int, ...]
    per_level: dict               # n -> LevelBounds
    M_emp: float
    n0: int
    item5: dict                   # n -> log2 slack of min |I| vs M^-n/(prod a)^2

    def to_report(self) -> dict:
        return {
            "levels": list(self.levels),
            "per_level": {str(n): lb.to_report() for n, lb in self.per_level.items()},
            "M_emp": self.M_emp,
            "n0": self.n0,
            "item5_log2_slack": {str(k): v for k, v in self.item5.items()},
        }


def empirical_M(hier: PartitionHierarchy, levels, **level_kwargs) -> RealBoundsReport:
    """Smallest constant satisfying items 1-4 across ``levels``, with the
    stabilization choice of n0 (drop leading levels while M_emp moves by
    5% or more) and the item-5 slack at the result.
    """
    levels = sorted(levels)
    if len(levels) < 3:
        raise InvalidInputError("need at least 3 levels for a stable constant")
    per_level = {n: level_bounds(hier, n, **level_kwargs) for n in levels}
    consts = {n: per_level[n].level_constant() for n in levels}

    def m_from(start_idx: int) -> float:
        return max(consts[n] for n in levels[start_idx:])

    n0_idx = 0
    for idx in range(len(levels) - 2):
        m_here, m_next = m_from(idx), m_from(idx + 1)
        if m_here <= 0 or abs(m_here - m_next) / m_here < 0.05:
            n0_idx = idx
            break
    else:
        n0_idx = len(levels) - 3
    n0 = levels[n0_idx]
    m_emp = m_from(n0_idx)
    cf = hier.cf
    item5 = {}
    log_prod = 0.0
    for n in range(1, max(levels) + 1):
        log_prod += math.log2(cf.a(n))
        if n in per_level and n >= n0:
            bound_log2 = -n * math.log2(m_emp) - 2 * log_prod
            item5[n] = per_level[n].min_atom_length_log2 - bound_log2
    return RealBoundsReport(levels=tuple(levels), per_level=per_level,
                            M_emp=m_emp, n0=n0, item5=item5)
