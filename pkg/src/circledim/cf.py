"""Exact continued-fraction arithmetic.

Convergents, return times, best-approximation distances, Diophantine
profiles, and the dimension bound formulas.

The distances delta_n = |q_n * alpha - p_n| are carried two ways at once:

* as integer linear forms ``u + v*alpha`` (``delta_form``), which make the
  identities ``1 = q_{n+1} delta_n + q_n delta_{n+1}`` and the determinant
  relation checkable with zero tolerance by pure integer arithmetic, for
  *any* value of alpha compatible with the quotients;
* as exact quadratic irrationals (``delta_exact``), once a concrete alpha
  is fixed.

A finite quotient list only pins alpha to its fundamental interval.  When
the caller does not supply an exact value we adopt the *canonical
extension*: the value of ``[a_1, ..., a_N, 1, 1, 1, ...]``, which is a
quadratic irrational strictly inside the fundamental interval.  Reports
always state which alpha was used.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction

import mpmath

from .errors import InvalidInputError
from .surd import QuadraticIrrational

SQRT2 = 2  # q_n^2 > 2^n expresses q_n > sqrt(2)^n exactly


def _iroot(n: int, k: int) -> int:
    """Floor of the k-th root of n >= 0, exact."""
    if n < 0:
        raise InvalidInputError("negative radicand")
    if n == 0:
        return 0
    if k == 1:
        return n
    r = int(round(n ** (1.0 / k))) if n.bit_length() < 500 else 1 << (n.bit_length() // k + 1)
    # Newton correction to the exact floor root
    while r > 0 and r**k > n:
        r = (r * (k - 1) + n // r ** (k - 1)) // k
    while (r + 1) ** k <= n:
        r += 1
    return r


def _ceil_pow(q: int, tau: Fraction) -> int:
    """ceil(q ** tau) for integer q >= 1 and rational tau >= 0, exact."""
    if q == 1 or tau == 0:
        return 1
    num, den = tau.numerator, tau.denominator
    t = q**num
    r = _iroot(t, den)
    return r if r**den == t else r + 1


class ContinuedFraction:
    """Convergent data of alpha = [a_1, a_2, ..., a_N] in (0, 1).

    Index conventions follow the classical ones: q_{-1} = 0, q_0 = 1,
    p_{-1} = 1, p_0 = 0, delta_{-1} = 1, delta_0 = alpha, and for n >= 1

        q_n = a_n q_{n-1} + q_{n-2},    p_n = a_n p_{n-1} + p_{n-2},
        delta_n = delta_{n-2} - a_n delta_{n-1}.
    """

    def __init__(self, quotients, alpha: QuadraticIrrational | None = None,
                 alpha_is_exact: bool = False, continuation_word=(1,)):
        quotients = tuple(int(a) for a in quotients)
        if not quotients:
            raise InvalidInputError("need at least one partial quotient")
        if any(a < 1 for a in quotients):
            raise InvalidInputError(f"partial quotients must be >= 1: {quotients}")
        self.quotients = quotients
        N = len(quotients)
        p = [1, 0]  # p_{-1}, p_0
        q = [0, 1]  # q_{-1}, q_0
        for a in quotients:
            p.append(a * p[-1] + p[-2])
            q.append(a * q[-1] + q[-2])
        self._p = p
        self._q = q
        self.depth = N
        self.continuation_word = tuple(int(a) for a in continuation_word)
        if alpha is None:
            alpha = QuadraticIrrational.from_periodic_cf([1], preperiod=quotients)
            alpha_is_exact = False
        self.alpha = alpha
        self.alpha_is_exact = bool(alpha_is_exact)
        self._validate_alpha()

    # -- accessors (paper-style indices) ---------------------------------

    def a(self, n: int) -> int:
        """Partial quotient a_n, 1-based."""
        if not 1 <= n <= self.depth:
            raise InvalidInputError(f"a_{n} out of range 1..{self.depth}")
        return self.quotients[n - 1]

    def q(self, n: int) -> int:
        """Return time q_n for -1 <= n <= depth."""
        if not -1 <= n <= self.depth:
            raise InvalidInputError(f"q_{n} out of range")
        return self._q[n + 1]

    def p(self, n: int) -> int:
        if not -1 <= n <= self.depth:
            raise InvalidInputError(f"p_{n} out of range")
        return self._p[n + 1]

    def delta_form(self, n: int) -> tuple[int, int]:
        """delta_n as the exact linear form (u, v): delta_n = u + v*alpha.

        From delta_n = (-1)^n (q_n alpha - p_n):  u = (-1)^{n+1} p_n and
        v = (-1)^n q_n.  Valid for -1 <= n <= depth.
        """
        s = -1 if n % 2 else 1
        return (-s * self.p(n), s * self.q(n))

    def delta_exact(self, n: int) -> QuadraticIrrational:
        """delta_n evaluated exactly at the stored alpha."""
        u, v = self.delta_form(n)
        return self.alpha * v + u

    def delta(self, n: int, prec: int = 256) -> mpmath.mpf:
        return self.delta_exact(n).to_mpf(prec)

    def alpha_mpf(self, prec: int = 256) -> mpmath.mpf:
        return self.alpha.to_mpf(prec)

    def fundamental_interval(self) -> tuple[Fraction, Fraction]:
        """Open interval of all reals whose expansion starts with the quotients."""
        N = self.depth
        lo = Fraction(self.p(N), self.q(N))
        hi = Fraction(self.p(N) + self.p(N - 1), self.q(N) + self.q(N - 1))
        return (lo, hi) if lo < hi else (hi, lo)

    def extended(self, orbit_cap: int) -> "ContinuedFraction":
        """Deepen the quotients along the continuation word while return
        times stay within ``orbit_cap``.  The stored alpha is the value of
        the infinite continuation, so it remains exactly compatible."""
        quots = list(self.quotients)
        word = self.continuation_word
        q2, q1 = self.q(self.depth - 1), self.q(self.depth)
        while True:
            a = word[len(quots) % len(word)]
            q_next = a * q1 + q2
            if q_next > orbit_cap:
                break
            quots.append(a)
            q2, q1 = q1, q_next
        return ContinuedFraction(quots, alpha=self.alpha,
                                 alpha_is_exact=self.alpha_is_exact,
                                 continuation_word=word)

    # -- exact invariant checks ------------------------------------------

    def check_unit_identity(self, n: int) -> bool:
        """1 = q_{n+1} delta_n + q_n delta_{n+1}, zero tolerance.

        Holds as an identity of linear forms in alpha, hence independent of
        the numeric value of alpha.
        """
        u1, v1 = self.delta_form(n)
        u2, v2 = self.delta_form(n + 1)
        u = self.q(n + 1) * u1 + self.q(n) * u2
        v = self.q(n + 1) * v1 + self.q(n) * v2
        return u == 1 and v == 0

    def check_determinant(self, n: int) -> bool:
        """p_n q_{n-1} - p_{n-1} q_n = (-1)^{n+1}."""
        return self.p(n) * self.q(n - 1) - self.p(n - 1) * self.q(n) == (-1) ** (n + 1)

    def check_growth(self, n: int) -> bool:
        """Exponential growth of return times, exactly (squared form).

        q_n > sqrt(2)^n for n >= 3; at n = 2 only q_2 >= sqrt(2)^2 holds,
        with equality exactly when a_1 = a_2 = 1 (q_2 = a_1 a_2 + 1 = 2).
        """
        if n == 2:
            return self.q(n) ** 2 >= 2**n
        return self.q(n) ** 2 > 2**n

    def _validate_alpha(self) -> None:
        # alpha must lie strictly inside every fundamental interval, which
        # is equivalent to delta_n > 0 for all n; deltas then decrease.
        prev = None
        for n in range(-1, len(self.quotients) + 1):
            d = self.delta_exact(n)
            if not d.sign() > 0:
                raise InvalidInputError(
                    f"alpha is not compatible with the quotients (delta_{n} <= 0)"
                )
            if prev is not None and not (d < prev):
                raise InvalidInputError(
                    f"distances not strictly decreasing at n={n}"
                )
            prev = d

    def to_report(self, prec: int = 256) -> dict:
        dps = mpmath.libmp.libmpf.prec_to_dps(prec)
        return {
            "quotients": list(self.quotients),
            "p": [self.p(n) for n in range(0, self.depth + 1)],
            "q": [self.q(n) for n in range(-1, self.depth + 1)],
            "delta": [
                mpmath.nstr(self.delta(n, prec), dps)
                for n in range(-1, self.depth + 1)
            ],
            "alpha": mpmath.nstr(self.alpha_mpf(prec), dps),
            "alpha_is_exact": self.alpha_is_exact,
            "precision_bits": prec,
        }

    def __repr__(self):
        qs = ",".join(map(str, self.quotients[:8]))
        more = ",..." if self.depth > 8 else ""
        return f"ContinuedFraction([{qs}{more}], depth={self.depth})"


def convergents(quotients, depth: int | None = None,
                alpha: QuadraticIrrational | None = None,
                alpha_is_exact: bool = False) -> ContinuedFraction:
    """Build convergent data for the first ``depth`` quotients."""
    quotients = list(quotients)
    if depth is None:
        depth = len(quotients)
    if depth < 1 or depth > len(quotients):
        raise InvalidInputError(f"depth {depth} out of range for {len(quotients)} quotients")
    return ContinuedFraction(quotients[:depth], alpha=alpha, alpha_is_exact=alpha_is_exact)


def periodic_cf(word, depth: int) -> ContinuedFraction:
    """Continued fraction of the exact periodic value [w, w, w, ...]."""
    word = list(word)
    if not word:
        raise InvalidInputError("empty periodic word")
    quotients = (word * (depth // len(word) + 1))[:depth]
    alpha = QuadraticIrrational.from_periodic_cf(word)
    return ContinuedFraction(quotients, alpha=alpha, alpha_is_exact=True,
                             continuation_word=word)


def golden_cf(depth: int) -> ContinuedFraction:
    return periodic_cf([1], depth)


def generate_quotients(kind: str, depth: int, *, word=None, tau=None,
                       max_a: int | None = None, seed: int | None = None) -> list[int]:
    """Test-input quotient sequences.

    kinds:
      golden              all ones
      periodic            repetition of ``word``
      prescribed_growth   a_{n+1} = ceil(q_n ** tau), computed alongside the
                          return-time recurrence, so the sequence violates
                          the D_tau' criterion for every tau' < tau
      random_bounded      uniform in [1, max_a], reproducible from ``seed``
    """
    if depth < 1:
        raise InvalidInputError("depth must be >= 1")
    if kind == "golden":
        return [1] * depth
    if kind == "periodic":
        if not word:
            raise InvalidInputError("periodic kind needs a non-empty word")
        word = [int(a) for a in word]
        if any(a < 1 for a in word):
            raise InvalidInputError("partial quotients must be >= 1")
        return (word * (depth // len(word) + 1))[:depth]
    if kind == "prescribed_growth":
        if tau is None or tau < 0:
            raise InvalidInputError("prescribed_growth needs tau >= 0")
        tau = Fraction(tau)
        qs = []
        q_prev2, q_prev = 0, 1  # q_{-1}, q_0
        for _ in range(depth):
            a = _ceil_pow(q_prev, tau)
            qs.append(a)
            q_prev2, q_prev = q_prev, a * q_prev + q_prev2
        return qs
    if kind == "random_bounded":
        if max_a is None or max_a < 1:
            raise InvalidInputError("random_bounded needs max_a >= 1")
        rng = random.Random(seed)
        return [rng.randint(1, max_a) for _ in range(depth)]
    raise InvalidInputError(f"unknown quotient kind: {kind}")


@dataclass(frozen=True)
class DiophantineProfile:
    """Finite-depth arithmetic profile of a rotation number.

    Everything here is "at depth N": membership in D_tau is a tail property
    that no finite computation decides, so ``bounded_type_flag`` is a
    report about the tested range, not a verdict about the true number.
    """

    tau: float
    depth: int
    Gamma: float                 # max over tested n of a_{n+1} / q_n^tau
    Gamma_argmax: int
    dio_gamma: float             # best Diophantine constant at this depth
    nu1_seq: tuple[float, ...]   # 2 log(a_1..a_n) / log q_n
    nu2_seq: tuple[float, ...]   # n / log q_n
    seq_start: int               # n of the first entry (skips q_n = 1)
    bounded_type_flag: bool

    @property
    def nu1(self) -> float:
        return self.nu1_seq[-1]

    @property
    def nu2(self) -> float:
        return self.nu2_seq[-1]

    def to_report(self) -> dict:
        return {
            "tau": self.tau,
            "depth": self.depth,
            "Gamma": self.Gamma,
            "Gamma_argmax": self.Gamma_argmax,
            "dio_gamma": self.dio_gamma,
            "nu1": self.nu1,
            "nu2": self.nu2,
            "nu1_seq": list(self.nu1_seq),
            "nu2_seq": list(self.nu2_seq),
            "seq_start": self.seq_start,
            "bounded_type_at_depth": self.bounded_type_flag,
        }


def diophantine_profile(cf: ContinuedFraction, tau: float) -> DiophantineProfile:
    """Gamma = sup a_{n+1}/q_n^tau at tested depth, plus the nu sequences."""
    if cf.depth < 3:
        raise InvalidInputError("need depth >= 3 for a Diophantine profile")
    if tau < 0:
        raise InvalidInputError("tau must be >= 0")
    N = cf.depth
    best_log, best_n = None, 0
    for n in range(0, N):
        log_val = math.log(cf.a(n + 1)) - tau * math.log(cf.q(n))
        if best_log is None or log_val > best_log:
            best_log, best_n = log_val, n
    best = float(max(cf.quotients)) if tau == 0 else math.exp(best_log)
    # Best Diophantine constant over the tested convergents:
    # |alpha - p_n/q_n| = delta_n / q_n, so gamma_N = min q_n^{tau+1} delta_n.
    with mpmath.workprec(300):
        dio = min(
            float(mpmath.mpf(cf.q(n)) ** (tau + 1) * cf.delta(n, 300))
            for n in range(0, N)
        )
    nu1, nu2 = [], []
    log_prod = 0.0
    seq_start = None
    for n in range(1, N + 1):
        log_prod += math.log(cf.a(n))
        if cf.q(n) > 1:
            if seq_start is None:
                seq_start = n
            lq = math.log(cf.q(n))
            nu1.append(2.0 * log_prod / lq)
            nu2.append(n / lq)
    if seq_start is None:
        raise InvalidInputError("all return times equal 1; depth too small")
    # Finite-depth heuristic: consistent with bounded type iff the running
    # maximum of the quotients does not grow in the second half.
    half = N // 2
    bounded = max(cf.quotients[:half + 1]) == max(cf.quotients)
    return DiophantineProfile(
        tau=float(tau), depth=N, Gamma=best, Gamma_argmax=best_n,
        dio_gamma=dio, nu1_seq=tuple(nu1), nu2_seq=tuple(nu2),
        seq_start=seq_start, bounded_type_flag=bounded,
    )


def theorem1_bounds(tau: float, nu1: float, nu2: float, M: float) -> tuple[float, float]:
    """Dimension bounds from the rotation number's arithmetic.

    lower = 1 / (2 tau + nu1 + nu2 log M), clamped to 1 (a measure on the
    circle has dimension at most 1, so larger values are vacuous);
    upper = 1 / (tau + 1).  Natural logarithm throughout.
    """
    if M <= 1:
        raise InvalidInputError("M must exceed 1 (log M <= 0 breaks positivity)")
    if tau < 0 or nu1 < 0 or nu2 <= 0:
        raise InvalidInputError("need tau >= 0, nu1 >= 0, nu2 > 0")
    lower = 1.0 / (2.0 * tau + nu1 + nu2 * math.log(M))
    upper = 1.0 / (tau + 1.0)
    return (min(lower, 1.0), upper)
