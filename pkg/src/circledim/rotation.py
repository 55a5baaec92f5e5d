"""Rotation-number measurement and parameter tuning.

Extraction uses closest-return combinatorics: scanning the orbit of a base
point, the times that improve the nearest approach on one side of the base
come in same-side runs ``q_{k-1} + j q_k`` (j = 1..a_{k+1}); the last time
of each run is the next return time ``q_{k+1}``.  Runs alternate sides with
the parity of k (the orientation convention puts ``x_{q_k}`` on the positive
side exactly for even k).  Everything here is decided by circular order, so
the recovered return times are invariant under topological conjugacy and in
particular agree with the continued fraction of the rotation number.

Tuning bisects on omega in a monotone family, ordering each candidate
against the target by the integer comparison of the lift iterate
``F^{q_k}(0)`` with ``p_k`` at the target's convergents (signs must
alternate with the parity of k).  The test stays correct across
mode-locking plateaus because ``F_omega^q(0)`` is strictly increasing
in omega even where the rotation number is locked.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import mpmath
from mpmath import mpf

from .cf import ContinuedFraction
from .errors import (
    AmbiguousComparisonError,
    InvalidInputError,
    PrecisionError,
    TuningError,
)
from .maps import MapSpec, lift_step

_LOCK_MARGIN_BITS = 32  # returns below 2^-(prec-32) count as exact (rational)


@dataclass
class RotationReading:
    """One measurement of a rotation number."""

    bracket: tuple  # (rho_lo, rho_hi) as exact Fractions
    quotients_observed: tuple[int, ...]
    return_times_observed: tuple[int, ...]
    rational_lock: Fraction | None
    record_times: tuple[int, ...]
    record_sides: tuple[int, ...]  # +1 positive side, -1 negative
    iterations_used: int
    tested_depth: int = 0   # depth through which order tests pinned rho

    def to_report(self) -> dict:
        return {
            "bracket": [str(b) for b in self.bracket],
            "quotients": list(self.quotients_observed),
            "return_times": list(self.return_times_observed),
            "rational_lock": str(self.rational_lock) if self.rational_lock else None,
            "iterations_used": self.iterations_used,
            "tested_depth": self.tested_depth,
        }


def birkhoff_estimate(spec: MapSpec, n_iterations: int, x0=0) -> RotationReading:
    """Bracket rho by the displacement average (F^n(x) - x)/n, width 2/n."""
    if n_iterations < 10:
        raise InvalidInputError("need n_iterations >= 10")
    prec = spec.precision_bits
    with mpmath.workprec(prec):
        base = mpf(x0) % 1
        step = lift_step(spec)
        lock_tol = mpf(2) ** (-(prec - _LOCK_MARGIN_BITS))
        x, winding = base, 0
        lock = None
        for t in range(1, n_iterations + 1):
            x, w, _ = step(x)
            winding += w
            pos = (x - base) % 1
            dist = pos if pos <= mpf("0.5") else 1 - pos
            if dist < lock_tol and lock is None:
                p = winding + (0 if pos <= mpf("0.5") else 1)
                lock = Fraction(p, t)
                break
        n = t
        displacement = Fraction(float((x + winding) - base))
        lo = displacement / n - Fraction(1, n)
        hi = displacement / n + Fraction(1, n)
        return RotationReading(
            bracket=(lo, hi), quotients_observed=(), return_times_observed=(),
            rational_lock=lock, record_times=(), record_sides=(),
            iterations_used=n,
        )


def closest_return_quotients(spec: MapSpec, base, depth: int,
                             max_steps: int = 5_000_000) -> RotationReading:
    """Recover a_1..a_depth and q_1..q_depth from closest returns of ``base``.

    Stops early with ``rational_lock`` on an exact (to precision) return.
    Raises AmbiguousComparisonError when a distance comparison falls inside
    the propagated error bound, and PrecisionError when the error budget or
    the step cap is exhausted before ``depth`` quotients are confirmed.
    """
    if depth < 1:
        raise InvalidInputError("depth must be >= 1")
    prec = spec.precision_bits
    with mpmath.workprec(prec):
        base = mpf(base) % 1
        step = lift_step(spec)
        ulp = 2.0 ** (2 - prec)
        lock_tol = mpf(2) ** (-(prec - _LOCK_MARGIN_BITS))
        err_limit = 2.0 ** -64

        records: list[int] = []       # emitted record times (run ends)
        sides: list[int] = []         # side of each emitted record
        run_side, run_last = 0, 0
        right_best = left_best = None
        lock = None
        x, winding, err = base, 0, ulp
        t_used = 0

        def recover(include_open_run: bool = False):
            rec = records + ([run_last] if include_open_run and run_side else [])
            sd = sides + ([run_side] if include_open_run and run_side else [])
            return _recover_quotients(rec, sd, depth)

        for t in range(1, max_steps + 1):
            x, w, d1 = step(x)
            winding += w
            if spec.family != "rigid_rotation":
                err = err * max(float(abs(d1)), ulp) + ulp
                if err > err_limit:
                    raise PrecisionError(
                        f"orbit error bound {err:.3g} at step {t}; increase "
                        f"precision_bits beyond {prec}",
                        suggested_bits=2 * prec,
                    )
            pos = (x - base) % 1
            right_d, left_d = pos, 1 - pos
            if min(right_d, left_d) < lock_tol:
                p = winding + (0 if right_d <= left_d else 1)
                lock = Fraction(p, t)
                t_used = t
                break
            margin = mpf(4) * mpf(err)
            if t == 1:
                right_best, left_best = right_d, left_d
                records.append(1)
                sides.append(0)  # first point caps both sides
                continue
            improved = 0
            if right_d < right_best:
                if right_best - right_d < margin:
                    raise AmbiguousComparisonError(
                        f"closest-return comparison at step {t} is within the "
                        f"error bound; rerun with more precision bits"
                    )
                right_best = right_d
                improved = 1
            elif left_d < left_best:
                if left_best - left_d < margin:
                    raise AmbiguousComparisonError(
                        f"closest-return comparison at step {t} is within the "
                        f"error bound; rerun with more precision bits"
                    )
                left_best = left_d
                improved = -1
            if not improved:
                continue
            if run_side == 0:
                run_side, run_last = improved, t
            elif improved == run_side:
                run_last = t
            else:
                records.append(run_last)
                sides.append(run_side)
                run_side, run_last = improved, t
                result = recover()
                if result is not None:
                    t_used = t
                    break
        else:
            raise PrecisionError(
                f"no depth-{depth} reading within {max_steps} steps",
                suggested_bits=None,
            )
        if lock is not None:
            result = recover(include_open_run=True)
            quots, qs, ps = result if result else ((), (), ())
            return RotationReading(
                bracket=(lock, lock), quotients_observed=quots,
                return_times_observed=qs, rational_lock=lock,
                record_times=tuple(records), record_sides=tuple(sides),
                iterations_used=t_used,
            )
        quots, qs, ps = result
        lo = Fraction(ps[-1], qs[-1])
        hi = Fraction(ps[-1] + (ps[-2] if len(ps) > 1 else 1),
                      qs[-1] + (qs[-2] if len(qs) > 1 else 0))
        return RotationReading(
            bracket=(min(lo, hi), max(lo, hi)),
            quotients_observed=quots, return_times_observed=qs,
            rational_lock=None, record_times=tuple(records),
            record_sides=tuple(sides), iterations_used=t_used,
        )


def _recover_quotients(records, sides, depth):
    """Turn emitted record times into (a_1..a_depth, q_1..q_depth, p_1..p_depth).

    records[0] == 1 always (the first orbit point); its side is undetermined.
    The branch is decided by the side of the second record: the return time
    q_k lands on the positive side exactly for even k, so a positive second
    record is q_2 (meaning a_1 = 1, q_1 = 1 collapsed into records[0]) and a
    negative one is q_1 (a_1 >= 2).
    """
    if len(records) < 2:
        return None
    if any(s1 == s2 for s1, s2 in zip(sides[1:], sides[2:])):
        raise AmbiguousComparisonError(
            "record sides do not alternate; orbit data is inconsistent"
        )
    if sides[1] > 0:
        q_list = [1, 1] + list(records[1:])   # q_0, q_1, q_2, ...
    else:
        q_list = [1] + list(records[1:])      # q_0, q_1, ...
    if len(q_list) - 1 < depth:
        return None
    quots, ps = [], [1, 0]  # p_{-1}, p_0
    q_prev2 = 0  # q_{-1}
    for k in range(1, depth + 1):
        qk, qk1, qk2 = q_list[k], q_list[k - 1], (q_list[k - 2] if k >= 2 else q_prev2)
        num = qk - qk2
        if num <= 0 or num % qk1:
            raise AmbiguousComparisonError(
                f"observed return times {q_list[:k + 1]} violate the "
                f"continued-fraction recurrence"
            )
        a = num // qk1
        quots.append(a)
        ps.append(a * ps[-1] + ps[-2])
    return tuple(quots), tuple(q_list[1:depth + 1]), tuple(ps[2:])


def _classify(spec: MapSpec, target: ContinuedFraction, upto: int) -> int:
    """Order rho(f) against the target by convergent tests.

    Returns -1 (rho below target), +1 (above), or 0 (consistent with the
    target through depth ``upto``).  Walks a single orbit of 0, checking the
    winding number against p_k at each t = q_k; exits at the first failure.
    """
    prec = spec.precision_bits
    with mpmath.workprec(prec):
        step = lift_step(spec)
        near_tol = mpf(2) ** (-(prec - _LOCK_MARGIN_BITS))
        checkpoints = {target.q(k): k for k in range(1, upto + 1)}
        last_q = target.q(upto)
        x, winding = mpf(0), 0
        for t in range(1, last_q + 1):
            x, w, _ = step(x)
            winding += w
            k = checkpoints.get(t)
            if k is None:
                continue
            pk = target.p(k)
            # F^{q_k}(0) = x + winding; compare with the integer p_k.
            if winding == pk and x < near_tol:
                return -1 if k % 2 == 0 else 1  # sitting on the convergent
            if winding == pk - 1 and 1 - x < near_tol:
                return -1 if k % 2 == 0 else 1
            above = winding >= pk
            if k % 2 == 0 and not above:   # need rho > p_k/q_k
                return -1
            if k % 2 == 1 and above:       # need rho < p_k/q_k
                return 1
        return 0


def _compare_reading(reading: RotationReading, target: ContinuedFraction) -> int:
    """Sign of (measured rho - target alpha), from quotients or a lock."""
    if reading.rational_lock is not None:
        lock = reading.rational_lock
        diff = (target.alpha * lock.denominator - lock.numerator).sign()
        return -diff  # lock < alpha  =>  alpha - lock > 0  =>  reading below
    obs = reading.quotients_observed
    tgt = target.quotients
    for j in range(min(len(obs), len(tgt))):
        if obs[j] != tgt[j]:
            bigger = obs[j] > tgt[j]
            # at odd 1-based positions a larger quotient means a smaller value
            return (-1 if bigger else 1) if (j + 1) % 2 else (1 if bigger else -1)
    return 0


def tune_parameter(spec_proto: MapSpec, target: ContinuedFraction, depth: int,
                   *, orbit_cap: int = 50_000, max_steps: int = 600,
                   ) -> tuple[MapSpec, RotationReading]:
    """Bisect omega until the extracted quotients match the target prefix.

    ``target`` supplies the quotients and (through its canonical alpha) a
    continuation used to pin rho beyond ``depth``: convergent tests are run
    as deep as return times fit ``orbit_cap``, so on success rho(f) lies in
    the extended fundamental interval, not merely the depth-``depth`` one.
    """
    if depth < 1 or depth > target.depth:
        raise InvalidInputError("depth out of range for the target")
    ext = target.extended(orbit_cap)
    # order tests as deep as the orbit budget allows, but never shallower
    # than the requested depth
    upto = depth
    while upto < ext.depth and ext.q(upto + 1) <= orbit_cap:
        upto += 1
    lo, hi = mpf(0), mpf(1)
    best = None
    with mpmath.workprec(spec_proto.precision_bits):
        for _ in range(max_steps):
            mid = (lo + hi) / 2
            cand = spec_proto.with_omega(mid)
            side = _classify(cand, ext, upto)
            if side == 0:
                reading = closest_return_quotients(cand, 0, depth)
                if reading.quotients_observed[:depth] == target.quotients[:depth]:
                    reading.tested_depth = upto
                    return cand, reading
                best = (float(lo), float(hi))
                side = _compare_reading(reading, target)
                if side == 0:
                    raise TuningError(
                        "extraction matches the target prefix but shallower than "
                        "requested; increase precision or orbit budget",
                        bracket=(float(lo), float(hi)),
                    )
            if side < 0:
                lo = mid
            else:
                hi = mid
        raise TuningError(
            f"no match after {max_steps} bisection steps",
            bracket=best or (float(lo), float(hi)),
        )
