"""Distributions of success runs in Bernoulli trials.

``L_n`` is the longest success run in n trials and ``N_{n,k}`` the number of
non-overlapping success runs of length k, counted greedily so a maximal run of
length l contributes ``l // k``. The two are linked by
``{L_n < k} == {N_{n,k} == 0}``.

Three routes to the same tail probability are provided and cross-checked in
the tests:

* the closed-form alternating sum (evaluated in exact integer arithmetic),
* Feller's recurrent-event approximation,
* the finite Markov chain imbedding, which also handles per-trial
  probabilities and is the general-purpose engine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Iterable, Sequence

import numpy as np

from chessruns._backend import imbed as _kernel

EXACT_MAX_N = 1000
BRUTE_FORCE_MAX_N = 24


class ExactBoundError(ValueError):
    pass


class DegenerateParameterError(ValueError):
    pass


@dataclass(frozen=True)
class TrialSeries:
    """Per-trial success probabilities p_1..p_n."""

    probs: tuple

    def __post_init__(self):
        probs = tuple(float(p) for p in self.probs)
        for i, p in enumerate(probs):
            if not 0.0 <= p <= 1.0 or math.isnan(p):
                raise ValueError(f"probability {i} out of [0, 1]: {p}")
        object.__setattr__(self, "probs", probs)

    @classmethod
    def constant(cls, n: int, p: float) -> "TrialSeries":
        return cls((p,) * n)

    def __len__(self) -> int:
        return len(self.probs)

    def __iter__(self):
        return iter(self.probs)

    def complement(self) -> "TrialSeries":
        return TrialSeries(tuple(1.0 - p for p in self.probs))


def _series(series: TrialSeries | Iterable[float]) -> TrialSeries:
    return series if isinstance(series, TrialSeries) else TrialSeries(tuple(series))


@dataclass(frozen=True)
class RunDistribution:
    """pmf of the longest run: ``pmf[k] = P(L_n = k)`` for k = 0..n."""

    n: int
    pmf: tuple

    def tail(self, k: int) -> float:
        """P(L_n >= k)."""
        if k <= 0:
            return 1.0
        return math.fsum(self.pmf[k:])

    def mean(self) -> float:
        return math.fsum(k * p for k, p in enumerate(self.pmf))

    def mode(self) -> int:
        return max(range(len(self.pmf)), key=self.pmf.__getitem__)


@dataclass(frozen=True)
class RunCountQuery:
    n: int
    k: int
    x: int
    p: float

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.n < 0 or self.x < 0:
            raise ValueError("n and x must be nonnegative")
        if self.x > self.n // self.k:
            raise ValueError(f"x must be <= n // k = {self.n // self.k}")

    def evaluate(self) -> float:
        return exact_run_count_pmf(self.n, self.k, self.x, self.p)


def _as_ratio(p) -> tuple[int, int]:
    fr = Fraction(p)
    if not 0 <= fr <= 1:
        raise ValueError(f"p out of [0, 1]: {p}")
    return fr.numerator, fr.denominator


def _no_run_count_numerator(n: int, k: int, x: int, a: int, b: int) -> int:
    # P(N_{n,k} = x) * b**n with p = a/b; every term is an exact integer
    m = n - k * x
    if m < 0:
        return 0
    c = b - a
    total = 0
    for y in range(m // k, m + 1):
        s = 0
        for j in range((m - y) // k + 1):
            term = comb(y + 1, j) * comb(m - j * k, y)
            s += -term if j & 1 else term
        if s:
            total += c ** y * a ** (n - y) * comb(y + x, x) * s
    return total


def _check_exact(n: int, k: int) -> None:
    if k < 1:
        raise ValueError("k must be >= 1")
    if n < 0:
        raise ValueError("n must be >= 0")
    if n > EXACT_MAX_N:
        raise ExactBoundError(
            f"n = {n} exceeds the exact-formula bound {EXACT_MAX_N}; "
            "use imbed_longest_run_tail instead"
        )


def exact_run_count_pmf(n: int, k: int, x: int, p, as_fraction: bool = False):
    """P(N_{n,k} = x) from the alternating-sum formula, in exact arithmetic.

    ``p`` may be a float (taken at its exact binary value), a Fraction or a
    decimal string such as ``"0.5"``.
    """
    _check_exact(n, k)
    if x < 0:
        raise ValueError("x must be >= 0")
    a, b = _as_ratio(p)
    value = Fraction(_no_run_count_numerator(n, k, x, a, b), b ** n)
    return value if as_fraction else float(value)


def longest_run_tail_exact(n: int, k: int, p, as_fraction: bool = False):
    """P(L_n >= k) = 1 - P(N_{n,k} = 0), exact."""
    _check_exact(n, k)
    if k > n:
        value = Fraction(0)
    else:
        a, b = _as_ratio(p)
        total = b ** n
        value = Fraction(total - _no_run_count_numerator(n, k, 0, a, b), total)
    return value if as_fraction else float(value)


def _check_open_p(p: float) -> None:
    if not 0.0 < p < 1.0:
        raise DegenerateParameterError(f"p must lie strictly between 0 and 1, got {p}")


def _feller_delta(k: int, p: float) -> float | None:
    """theta - 1 for the root in (1, 1/p), or None when no such root exists."""
    q = 1.0 - p
    c = q * p ** k
    if (k + 1) * q <= 1.0:
        return None
    delta = 0.0
    for _ in range(10_000):
        nxt = c * (1.0 + delta) ** (k + 1)
        if abs(nxt - delta) <= 1e-14 * (1.0 + delta):
            return nxt
        delta = nxt
    # slow contraction: bisect g(t) = 1 + c t^(k+1) - t on (1, argmin g)
    lo = 0.0
    hi = ((k + 1) * c) ** (-1.0 / k) - 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if c * (1.0 + mid) ** (k + 1) - mid > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def solve_feller_theta(k: int, p: float) -> float:
    """Smallest root above 1 of ``theta = 1 + q p^k theta^(k+1)``.

    When ``(k + 1) q <= 1`` the only root in [1, 1/p] is 1/p itself, which is
    returned.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    _check_open_p(p)
    delta = _feller_delta(k, p)
    return 1.0 / p if delta is None else 1.0 + delta


def _feller_log_cdf(n: int, k: int, p: float) -> float:
    q = 1.0 - p
    delta = _feller_delta(k, p)
    if delta is None:
        raise DegenerateParameterError(
            f"Feller approximation undefined for k={k}, p={p}: (k+1)q <= 1"
        )
    theta = 1.0 + delta
    ratio = (1.0 - p * theta) / ((k + 1 - k * theta) * q)
    return math.log(ratio) - (n + 1) * math.log1p(delta)


def feller_longest_run_cdf(n: int, k: int, p: float) -> float:
    """Feller's approximation to P(L_n < k), clamped to [0, 1]."""
    if k < 1:
        raise ValueError("k must be >= 1")
    _check_open_p(p)
    return min(1.0, max(0.0, math.exp(_feller_log_cdf(n, k, p))))


def feller_longest_run_tail(n: int, k: int, p: float) -> float:
    """1 - feller_longest_run_cdf, computed without cancellation."""
    if k < 1:
        raise ValueError("k must be >= 1")
    _check_open_p(p)
    return min(1.0, max(0.0, -math.expm1(_feller_log_cdf(n, k, p))))


def imbed_longest_run_tail(series: TrialSeries | Iterable[float], k: int) -> float:
    """P(L_n >= k) by Markov chain imbedding; O(n k) time, O(k) space."""
    if k < 1:
        raise ValueError("k must be >= 1")
    s = _series(series)
    if k > len(s):
        return 0.0
    return float(_kernel.imbed_tail(s.probs, k))


def longest_run_tail(n: int, k: int, p: float) -> float:
    """P(L_n >= k) for constant p: exact formula when small, imbedding beyond."""
    if k <= 0:
        return 1.0
    if n <= EXACT_MAX_N:
        return longest_run_tail_exact(n, k, p)
    return imbed_longest_run_tail(TrialSeries.constant(n, p), k)


def longest_run_pmf(series: TrialSeries | Iterable[float], tail_cutoff: float | None = None) -> RunDistribution:
    """pmf of L_n under per-trial probabilities.

    Tails are evaluated for k = 1, 2, ... until one falls to ``tail_cutoff``;
    that remaining mass is assigned to the last k evaluated. The default
    cutoff is 0 for n <= 1000 and 1e-20 beyond.
    """
    s = _series(series)
    n = len(s)
    if n == 0:
        return RunDistribution(0, (1.0,))
    if tail_cutoff is None:
        tail_cutoff = 0.0 if n <= EXACT_MAX_N else 1e-20
    tails = [1.0] + list(_kernel.longest_run_tails(s.probs, n, tail_cutoff)) + [0.0]
    pmf = [max(0.0, tails[k] - tails[k + 1]) for k in range(n + 1)]
    return RunDistribution(n, tuple(pmf))


def _enumerate(probs: Sequence[float]):
    """Yield (weights, longest run) over all 2**n outcome strings in chunks."""
    n = len(probs)
    if n > BRUTE_FORCE_MAX_N:
        raise ValueError(f"brute force limited to n <= {BRUTE_FORCE_MAX_N}, got {n}")
    p = np.asarray(probs, dtype=float)
    shifts = np.arange(n)
    chunk = 1 << min(n, 16)
    for start in range(0, 1 << n, chunk):
        idx = np.arange(start, start + chunk, dtype=np.int64)
        bits = ((idx[:, None] >> shifts) & 1).astype(bool)
        weights = np.prod(np.where(bits, p, 1.0 - p), axis=1)
        run = np.zeros(chunk, dtype=np.int64)
        best = np.zeros(chunk, dtype=np.int64)
        for i in range(n):
            run = (run + 1) * bits[:, i]
            np.maximum(best, run, out=best)
        yield weights, best


def brute_force_longest_run_tails(series: TrialSeries | Iterable[float]) -> list[float]:
    """[P(L_n >= k) for k = 0..n] by enumerating every outcome string."""
    s = _series(series)
    n = len(s)
    mass = np.zeros(n + 1)
    for weights, best in _enumerate(s.probs):
        mass += np.bincount(best, weights=weights, minlength=n + 1)
    return [math.fsum(mass[k:]) for k in range(n + 1)]


def brute_force_longest_run_tail(series: TrialSeries | Iterable[float], k: int) -> float:
    s = _series(series)
    if k > len(s):
        if len(s) > BRUTE_FORCE_MAX_N:
            raise ValueError(f"brute force limited to n <= {BRUTE_FORCE_MAX_N}")
        return 0.0
    return brute_force_longest_run_tails(s)[max(k, 0)]


def poisson_run_approx(n: int, k: int, p: float, x: int) -> float:
    """Poisson limit e^-lam lam^x / x! with lam = n q p^k."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p out of [0, 1]: {p}")
    if x < 0:
        return 0.0
    lam = n * (1.0 - p) * p ** k
    if lam == 0.0:
        return 1.0 if x == 0 else 0.0
    return math.exp(-lam + x * math.log(lam) - math.lgamma(x + 1))


def bonferroni_adjust(p: float, m: int) -> float:
    if m < 1:
        raise ValueError("m must be >= 1")
    return min(1.0, m * p)


def holm_adjust(pvalues: Sequence[float]) -> list[float]:
    """Holm step-down adjusted p-values, returned in input order."""
    m = len(pvalues)
    order = sorted(range(m), key=lambda i: pvalues[i])
    adjusted = [0.0] * m
    running = 0.0
    for rank, i in enumerate(order):
        running = max(running, min(1.0, (m - rank) * pvalues[i]))
        adjusted[i] = running
    return adjusted


def smooth_pmf(dist: RunDistribution, bandwidth: float = 1.0, step: float = 0.1) -> list[tuple[float, float]]:
    """Gaussian-kernel density of the pmf on the grid ``i * step``.

    The grid spans four bandwidths beyond 0 and n.
    """
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    if step <= 0:
        raise ValueError("step must be positive")
    lo = math.floor(-4 * bandwidth / step)
    hi = math.ceil((dist.n + 4 * bandwidth) / step)
    grid = np.arange(lo, hi + 1) * step
    ks = np.arange(len(dist.pmf))
    z = (grid[:, None] - ks[None, :]) / bandwidth
    dens = (np.exp(-0.5 * z * z) / (bandwidth * math.sqrt(2 * math.pi))) @ np.asarray(dist.pmf)
    return [(round(float(x), 10), float(d)) for x, d in zip(grid, dens)]
