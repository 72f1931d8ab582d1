"""Closed-form yield analysis of the block extractor.

For click probability p and block length n, the extractor's expected
output is

* ``shannon_binary(p)``      -- the single-trial entropy ceiling,
* ``block_entropy_rate``     -- bits/window before binary expansion:
                                (1/n) sum_k C(n,k) p^k q^(n-k) log2 C(n,k),
* ``binary_rate``            -- bits/window actually emitted after the
                                power-of-two subblock expansion.

The module also verifies, numerically, that p = 1/2 maximizes the block
rate, that the rate at p = 1/2 increases towards 1 with n, and that the
symmetrized weight function p^k q^(n-k) + p^(n-k) q^k crosses its
p = 1/2 value exactly twice in k (the structure behind the optimality
proof).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .combinatorics import MAX_BLOCK_LEN, binary_expansion, binomial
from .errors import DomainError


def _check_p(p: float) -> None:
    if not (0.0 < p < 1.0):
        raise DomainError(f"probability must lie strictly in (0, 1), got {p}")


def _check_n(n: int) -> None:
    if not (2 <= n <= MAX_BLOCK_LEN):
        raise DomainError(f"block length must be in [2, {MAX_BLOCK_LEN}], got {n}")


def shannon_binary(p: float) -> float:
    """Entropy of one Bernoulli trial, in bits."""
    _check_p(p)
    q = 1.0 - p
    return -p * math.log2(p) - q * math.log2(q)


def block_entropy_rate(n: int, p: float) -> float:
    """Expected bits per window of the block ranking, before expansion."""
    _check_n(n)
    _check_p(p)
    q = 1.0 - p
    total = 0.0
    for k in range(1, n):
        c = binomial(n, k)
        total += c * p**k * q ** (n - k) * math.log2(c)
    return total / n


@lru_cache(maxsize=None)
def _expansion_bit_weights(n: int) -> tuple[int, ...]:
    """For k = 1..n-1: total bits emitted over all C(n,k) patterns,
    i.e. sum of width * 2^width over the expansion's subblocks."""
    return tuple(
        sum(w * (1 << w) for w in binary_expansion(n, k).exponents)
        for k in range(1, n)
    )


def binary_rate(n: int, p: float) -> float:
    """Expected bits per window actually emitted after expansion."""
    _check_n(n)
    _check_p(p)
    q = 1.0 - p
    weights = _expansion_bit_weights(n)
    total = 0.0
    for k in range(1, n):
        total += p**k * q ** (n - k) * weights[k - 1]
    return total / n


@dataclass(frozen=True)
class EfficiencyReport:
    n: int
    p: float
    shannon: float
    block_rate: float
    binary_rate: float


def efficiency_report(n: int, p: float) -> EfficiencyReport:
    return EfficiencyReport(n, p, shannon_binary(p), block_entropy_rate(n, p), binary_rate(n, p))


# ---------------------------------------------------------------------------
# slow modulation


@dataclass(frozen=True)
class ModulationProfile:
    """Sinusoidal drive of the click probability: base + amplitude*sin(w*t)."""

    base: float
    amplitude: float
    angular_frequency: float  # rad/s
    duration: float  # averaging window, seconds

    def __post_init__(self):
        if self.amplitude < 0:
            raise DomainError(f"amplitude must be >= 0, got {self.amplitude}")
        if not (0.0 < self.base - self.amplitude and self.base + self.amplitude < 1.0):
            raise DomainError(
                "modulated probability must stay in (0, 1): "
                f"base={self.base} amplitude={self.amplitude}"
            )
        if not self.duration > 0:
            raise DomainError(f"duration must be > 0, got {self.duration}")

    def p_at(self, t):
        """Click probability at time ``t`` (scalar or array, seconds)."""
        return self.base + self.amplitude * np.sin(self.angular_frequency * t)


def _adaptive_simpson(fn, a: float, b: float, tol: float) -> float:
    fa, fm, fb = fn(a), fn(0.5 * (a + b)), fn(b)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    def recurse(lo, hi, flo, fmid, fhi, est, eps, depth):
        mid = 0.5 * (lo + hi)
        lmid, rmid = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = fn(lmid), fn(rmid)
        left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid)
        right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi)
        delta = left + right - est
        if depth <= 0 or abs(delta) <= 15.0 * eps:
            return left + right + delta / 15.0
        return recurse(lo, mid, flo, flm, fmid, left, eps / 2.0, depth - 1) + recurse(
            mid, hi, fmid, frm, fhi, right, eps / 2.0, depth - 1
        )

    return recurse(a, b, fa, fm, fb, whole, tol, 48)


def time_average_binary_rate(n: int, profile: ModulationProfile) -> float:
    """Mean of :func:`binary_rate` over one modulation window."""
    _check_n(n)

    def integrand(t: float) -> float:
        return binary_rate(n, float(profile.p_at(t)))

    integral = _adaptive_simpson(integrand, 0.0, profile.duration, tol=1e-8)
    return integral / profile.duration


# ---------------------------------------------------------------------------
# numeric verification of the optimality structure


@dataclass(frozen=True)
class OptimalPRecord:
    n: int
    grid_step: float
    argmax_p: float
    max_violation: float  # max over the grid of H(n,p) - H(n,1/2)
    passed: bool


def verify_optimal_p(n: int, grid_step: float = 0.01) -> OptimalPRecord:
    """Check on a p-grid that the block rate peaks at p = 1/2."""
    _check_n(n)
    if not (0.0 < grid_step <= 0.1):
        raise DomainError(f"grid_step must be in (0, 0.1], got {grid_step}")
    reference = block_entropy_rate(n, 0.5)
    best_p, best_h = 0.5, reference
    max_violation = 0.0
    i = 1
    while True:
        p = i * grid_step
        if p >= 1.0:
            break
        h = block_entropy_rate(n, p)
        max_violation = max(max_violation, h - reference)
        if h > best_h:
            best_p, best_h = p, h
        i += 1
    passed = max_violation <= 1e-12 and abs(best_p - 0.5) <= grid_step * (1 + 1e-9)
    return OptimalPRecord(n, grid_step, best_p, max_violation, passed)


@dataclass(frozen=True)
class MonotoneRecord:
    n_max: int
    values: tuple[float, ...]  # block rate at p = 1/2 for n = 2..n_max
    strictly_increasing: bool
    below_one: bool
    passed: bool


def verify_monotone_convergence(n_max: int = 64) -> MonotoneRecord:
    """Check that the p = 1/2 block rate climbs towards (but below) 1."""
    if not (3 <= n_max <= MAX_BLOCK_LEN):
        raise DomainError(f"n_max must be in [3, {MAX_BLOCK_LEN}], got {n_max}")
    values = tuple(block_entropy_rate(n, 0.5) for n in range(2, n_max + 1))
    increasing = all(b > a for a, b in zip(values, values[1:]))
    below_one = all(v < 1.0 for v in values)
    return MonotoneRecord(n_max, values, increasing, below_one, increasing and below_one)


def crossing_points(n: int, p: float) -> tuple[float, float]:
    """Roots in k of p^k q^(n-k) + p^(n-k) q^k = 2^(1-n).

    The symmetrized weight starts above its p = 1/2 value at k = 0,
    dips below it around k = n/2, and crosses exactly twice; the two
    crossings are symmetric about n/2.  Each root is located by
    independent bracketed bisection.
    """
    _check_n(n)
    _check_p(p)
    if p == 0.5:
        raise DomainError("p = 1/2 is degenerate: the identity holds for every k")
    lp, lq = math.log(p), math.log(1.0 - p)
    target = 2.0 ** (1 - n)

    def g(x: float) -> float:
        return math.exp(x * lp + (n - x) * lq) + math.exp((n - x) * lp + x * lq) - target

    def bisect(lo: float, hi: float) -> float:
        glo, ghi = g(lo), g(hi)
        if not (glo > 0.0 > ghi or glo < 0.0 < ghi):
            raise DomainError(f"no sign change on [{lo}, {hi}] for n={n} p={p}")
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if mid == lo or mid == hi:
                break
            gm = g(mid)
            if (gm > 0.0) == (glo > 0.0):
                lo, glo = mid, gm
            else:
                hi, ghi = mid, gm
        return 0.5 * (lo + hi)

    x1 = bisect(0.0, n / 2.0)
    x2 = bisect(n / 2.0, float(n))
    return x1, x2
