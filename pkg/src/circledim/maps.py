"""Parametric circle-map families at configurable precision.

All families are lifts F with F(x+1) = F(x) + 1, evaluated with mpmath at
``precision_bits``:

  rigid_rotation          F(x) = x + omega                    (no critical points)
  arnold_cubic            F(x) = x + omega - sin(2 pi x)/(2 pi)       (one, at 0)
  mfold_cubic(m)          F(x) = x + omega - sin(2 pi m x)/(2 pi m)   (m, at j/m)
  perturbed_bicritical    F(x) = x + omega + a1 sin(2 pi x) + a2 sin(4 pi x)

The trigonometric families have F' >= 0 with double zeros at the declared
critical set, giving power-law exponent 3 there.  For the bicritical family
the amplitudes come from a double-root parameter u0 in (-1, 1):

    a2 = 1/(4 pi (2 u0^2 + 1)),   a1 = -8 u0 a2
    =>  F'(x) = 8 pi a2 (cos 2 pi x - u0)^2,

which vanishes exactly at x = arccos(u0)/(2 pi) and its mirror point.
Critical points are declared analytically per family, never searched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np
from mpmath import mpf

from .errors import (
    DomainError,
    InvalidFamilyError,
    InvalidInputError,
    PrecisionError,
)

FAMILIES = ("rigid_rotation", "arnold_cubic", "mfold_cubic", "perturbed_bicritical")

#: valid bits that must remain for an orbit to be accepted
_MIN_VALID_BITS = 64


def _pi(prec: int) -> mpf:
    with mpmath.workprec(prec):
        return +mpmath.pi


@dataclass(frozen=True)
class MapSpec:
    """Immutable description of one family member.

    ``params``: () for rigid_rotation/arnold_cubic, (m,) for mfold_cubic,
    (a1, a2) for perturbed_bicritical.
    """

    family: str
    omega: mpf
    params: tuple = ()
    precision_bits: int = 256

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidInputError(f"unknown family {self.family!r}")
        if self.precision_bits < 64:
            raise InvalidInputError("precision_bits must be >= 64")

    def with_omega(self, omega) -> "MapSpec":
        with mpmath.workprec(self.precision_bits):
            return MapSpec(self.family, +mpf(omega), self.params, self.precision_bits)

    def critical_points(self) -> tuple[mpf, ...]:
        """Declared critical set, as circle positions in [0, 1)."""
        prec = self.precision_bits
        with mpmath.workprec(prec):
            if self.family == "rigid_rotation":
                return ()
            if self.family == "arnold_cubic":
                return (mpf(0),)
            if self.family == "mfold_cubic":
                m = int(self.params[0])
                return tuple(mpf(j) / m for j in range(m))
            # perturbed_bicritical: recover the double-root parameter
            a1, a2 = self.params
            if a2 == 0:
                return ()
            u0 = -a1 / (8 * a2)
            residual = 8 * mpmath.pi * a2 * u0**2 + 2 * mpmath.pi * a1 * u0 \
                + 1 - 4 * mpmath.pi * a2
            if abs(u0) >= 1 or abs(residual) > mpf(2) ** (-prec // 2):
                return ()
            x0 = mpmath.acos(u0) / (2 * mpmath.pi)
            return (+x0, +(1 - x0))

    def criticalities(self) -> tuple[int, ...]:
        return (3,) * len(self.critical_points())

    def to_config(self) -> dict:
        dps = mpmath.libmp.libmpf.prec_to_dps(self.precision_bits)
        return {
            "family": self.family,
            "omega": mpmath.nstr(self.omega, dps),
            "params": [mpmath.nstr(mpf(p), dps) if not isinstance(p, int) else p
                       for p in self.params],
            "precision_bits": self.precision_bits,
        }


def make_map(family: str, omega, *, m: int | None = None, u0=None,
             a1=None, a2=None, precision_bits: int = 256) -> MapSpec:
    """Build a MapSpec, normalizing omega (and amplitudes) at precision."""
    with mpmath.workprec(precision_bits):
        om = +mpf(omega if not isinstance(omega, str) else mpmath.mpf(omega))
        if family in ("rigid_rotation", "arnold_cubic"):
            return MapSpec(family, om, (), precision_bits)
        if family == "mfold_cubic":
            if m is None or m < 1:
                raise InvalidInputError("mfold_cubic needs m >= 1")
            return MapSpec(family, om, (int(m),), precision_bits)
        if family == "perturbed_bicritical":
            if u0 is not None:
                u = mpf(u0)
                if not (-1 < u < 1):
                    raise InvalidInputError("u0 must lie in (-1, 1)")
                a2v = 1 / (4 * mpmath.pi * (2 * u**2 + 1))
                a1v = -8 * u * a2v
            elif a1 is not None and a2 is not None:
                a1v, a2v = mpf(a1), mpf(a2)
            else:
                raise InvalidInputError("perturbed_bicritical needs u0 or (a1, a2)")
            return MapSpec(family, om, (+a1v, +a2v), precision_bits)
    raise InvalidInputError(f"unknown family {family!r}")


def spec_from_config(block: dict) -> MapSpec:
    prec = int(block.get("precision_bits", 256))
    family = block["family"]
    params = block.get("params", [])
    kw = {}
    if family == "mfold_cubic":
        kw["m"] = int(params[0])
    elif family == "perturbed_bicritical":
        kw["a1"], kw["a2"] = params[0], params[1]
    return make_map(family, str(block["omega"]), precision_bits=prec, **kw)


# ------------------------------------------------------------------ lift

def eval_lift(spec: MapSpec, x) -> mpf:
    """F(x) at the spec's precision."""
    with mpmath.workprec(spec.precision_bits):
        x = mpf(x)
        if spec.family == "rigid_rotation":
            return x + spec.omega
        if spec.family == "arnold_cubic":
            two_pi = 2 * mpmath.pi
            return x + spec.omega - mpmath.sin(two_pi * x) / two_pi
        if spec.family == "mfold_cubic":
            m = spec.params[0]
            w = 2 * mpmath.pi * m
            return x + spec.omega - mpmath.sin(w * x) / w
        a1, a2 = spec.params
        two_pi = 2 * mpmath.pi
        return x + spec.omega + a1 * mpmath.sin(two_pi * x) \
            + a2 * mpmath.sin(2 * two_pi * x)


def derivatives(spec: MapSpec, x, order: int) -> mpf:
    """Analytic d^order F / dx^order, order in 1..3."""
    if order not in (1, 2, 3):
        raise InvalidInputError("order must be 1, 2 or 3")
    with mpmath.workprec(spec.precision_bits):
        x = mpf(x)
        if spec.family == "rigid_rotation":
            return mpf(1) if order == 1 else mpf(0)
        if spec.family in ("arnold_cubic", "mfold_cubic"):
            m = spec.params[0] if spec.family == "mfold_cubic" else 1
            w = 2 * mpmath.pi * m
            c, s = mpmath.cos_sin(w * x)
            if order == 1:
                return 1 - c
            if order == 2:
                return w * s
            return w * w * c
        a1, a2 = spec.params
        w1 = 2 * mpmath.pi
        w2 = 4 * mpmath.pi
        c1, s1 = mpmath.cos_sin(w1 * x)
        c2, s2 = mpmath.cos_sin(w2 * x)
        if order == 1:
            return 1 + w1 * a1 * c1 + w2 * a2 * c2
        if order == 2:
            return -(w1**2) * a1 * s1 - (w2**2) * a2 * s2
        return -(w1**3) * a1 * c1 - (w2**3) * a2 * c2


def schwarzian(spec: MapSpec, x) -> mpf:
    """S f(x) = F'''/F' - (3/2)(F''/F')^2 away from the critical set."""
    prec = spec.precision_bits
    with mpmath.workprec(prec):
        d1 = derivatives(spec, x, 1)
        if abs(d1) <= mpf(2) ** (-(prec // 2)):
            cps = spec.critical_points()
            nearest = min(cps, key=lambda c: abs(circle_dist(mpf(x), c))) if cps else None
            raise DomainError(
                f"Schwarzian undefined within guard distance of critical point "
                f"{mpmath.nstr(nearest, 8) if nearest is not None else '?'}"
            )
        d2 = derivatives(spec, x, 2)
        d3 = derivatives(spec, x, 3)
        r = d2 / d1
        return d3 / d1 - 1.5 * r * r


def circle_dist(x, y) -> mpf:
    """Distance on R/Z (caller sets the precision context)."""
    d = (x - y) % 1
    return d if d <= mpf("0.5") else 1 - d


# --------------------------------------------------------------- stepping

def lift_step(spec: MapSpec):
    """Closure: circle position x -> (x', winding_increment, F'(x)).

    Built once per orbit; all family constants are materialized at the
    working precision.  Caller is responsible for the workprec context.
    """
    omega = spec.omega
    if spec.family == "rigid_rotation":
        def step(x):
            y = x + omega
            w = int(mpmath.floor(y))
            return y - w, w, mpf(1)
        return step
    if spec.family in ("arnold_cubic", "mfold_cubic"):
        m = spec.params[0] if spec.family == "mfold_cubic" else 1
        w_ang = 2 * mpmath.pi * m
        def step(x):
            c, s = mpmath.cos_sin(w_ang * x)
            y = x + omega - s / w_ang
            w = int(mpmath.floor(y))
            return y - w, w, 1 - c
        return step
    a1, a2 = spec.params
    w1 = 2 * mpmath.pi
    w2 = 4 * mpmath.pi
    def step(x):
        c1, s1 = mpmath.cos_sin(w1 * x)
        c2, s2 = mpmath.cos_sin(w2 * x)
        y = x + omega + a1 * s1 + a2 * s2
        w = int(mpmath.floor(y))
        return y - w, w, 1 + w1 * a1 * c1 + w2 * a2 * c2
    return step


@dataclass
class OrbitSegment:
    """Forward orbit of x0 with winding bookkeeping.

    positions[k] is x_k reduced mod 1; windings[k] is the accumulated
    integer part, so the lift value is positions[k] + windings[k].
    error_bounds[k] is an a-posteriori bound on |stored - true| position,
    propagated through local derivative magnitudes.
    """

    x0: mpf
    positions: list
    windings: list
    error_bounds: list
    precision_bits: int

    def __len__(self):
        return len(self.positions)

    def lift_value(self, k: int) -> mpf:
        return self.positions[k] + self.windings[k]


def iterate_orbit(spec: MapSpec, x0, count: int, *,
                  collect: bool = True) -> OrbitSegment:
    """x_0, .., x_count with winding numbers and running error bounds.

    Refuses (PrecisionError) as soon as the propagated error bound leaves
    fewer than 64 valid bits, rather than silently degrading.
    """
    if count < 1:
        raise InvalidInputError("count must be >= 1")
    prec = spec.precision_bits
    with mpmath.workprec(prec):
        x = mpf(x0) % 1
        if spec.family == "rigid_rotation":
            # isometry: compute positions directly, no error accumulation
            positions, windings, errors = [x], [0], [0.0]
            err = 2.0 ** (8 - prec)
            for k in range(1, count + 1):
                y = x + k * spec.omega
                w = int(mpmath.floor(y))
                if collect or k == count:
                    positions.append(y - w)
                    windings.append(w)
                    errors.append(err)
            return OrbitSegment(x, positions, windings, errors, prec)
        step = lift_step(spec)
        ulp = 2.0 ** (2 - prec)
        err = ulp
        positions, windings, errors = [x], [0], [0.0]
        winding = 0
        limit = 2.0 ** (-_MIN_VALID_BITS)
        for k in range(1, count + 1):
            x, w, d1 = step(x)
            winding += w
            err = err * max(float(abs(d1)), ulp) + ulp
            if err > limit:
                raise PrecisionError(
                    f"error bound {err:.3g} after {k} of {count} steps leaves "
                    f"fewer than {_MIN_VALID_BITS} valid bits; retry with "
                    f"precision_bits >= {prec + int(math.log2(err / ulp)) + _MIN_VALID_BITS}",
                    suggested_bits=prec + int(math.log2(err / ulp)) + _MIN_VALID_BITS,
                )
            if collect or k == count:
                positions.append(x)
                windings.append(winding)
                errors.append(err)
        return OrbitSegment(positions[0], positions, windings, errors, prec)


# -------------------------------------------------------------- validation

@dataclass
class CriticalPointReport:
    position: float
    d1_abs: float
    d2_abs: float
    d3: float
    fitted_exponent: float
    fit_residual: float


@dataclass
class ValidationReport:
    family: str
    monotone_min: float
    grid_size: int
    critical_points: list[CriticalPointReport] = field(default_factory=list)

    def to_report(self) -> dict:
        return {
            "family": self.family,
            "monotone_min": self.monotone_min,
            "grid_size": self.grid_size,
            "critical_points": [vars(c) for c in self.critical_points],
        }


def validate_map(spec: MapSpec, grid: int = 4096) -> ValidationReport:
    """Monotonicity scan, critical-derivative checks, and exponent fits.

    Raises InvalidFamilyError if F' is negative beyond rounding tolerance
    anywhere on the scan grid (the parameters have left the orientation
    preserving homeomorphism class).
    """
    prec = spec.precision_bits
    with mpmath.workprec(prec):
        tol = mpf(2) ** (-(prec // 2))
        cps = spec.critical_points()
        xs = [mpf(i) / grid for i in range(grid)]
        for c in cps:
            xs.extend(c + mpf(2) ** (-k) for k in range(2, 17))
            xs.extend(c - mpf(2) ** (-k) for k in range(2, 17))
        mono_min = min(derivatives(spec, x, 1) for x in xs)
        if mono_min < -tol:
            raise InvalidFamilyError(
                f"F' reaches {mpmath.nstr(mono_min, 8)} < 0: not an "
                f"orientation-preserving homeomorphism"
            )
        report = ValidationReport(spec.family, float(mono_min), len(xs))
        ks = list(range(8, max(prec // 4, 12) + 1))
        for c in cps:
            d1 = abs(derivatives(spec, c, 1))
            d2 = abs(derivatives(spec, c, 2))
            d3 = derivatives(spec, c, 3)
            fc = eval_lift(spec, c)
            logs_h, logs_df = [], []
            for k in ks:
                for sgn in (1, -1):
                    h = mpf(2) ** (-k) * sgn
                    df = abs(eval_lift(spec, c + h) - fc)
                    if df > 0:
                        logs_h.append(-k)
                        logs_df.append(float(mpmath.log(df, 2)))
            slope, intercept = np.polyfit(logs_h, logs_df, 1)
            resid = float(np.sqrt(np.mean(
                (np.polyval([slope, intercept], logs_h) - np.array(logs_df)) ** 2
            )))
            report.critical_points.append(CriticalPointReport(
                position=float(c), d1_abs=float(d1), d2_abs=float(d2),
                d3=float(d3), fitted_exponent=float(slope), fit_residual=resid,
            ))
        return report
