"""Independent oracles for the test suite.

Everything in this module is computed from first principles: closed-form
algebra, stdlib math, brute-force enumeration, or bisection root finding.
Nothing here imports from privote, so agreement between the package and
these functions is a genuine second opinion rather than a tautology.
"""

from __future__ import annotations

import itertools
import math


# ---------------------------------------------------------------------------
# Distributions


def laplace_cdf(x: float, scale: float) -> float:
    if x < 0:
        return 0.5 * math.exp(x / scale)
    return 1.0 - 0.5 * math.exp(-x / scale)


def laplace_tail_above(a: float, scale: float) -> float:
    """P(Lap(scale) > a)."""
    return 1.0 - laplace_cdf(a, scale)


def gaussian_cdf(x: float, sigma: float) -> float:
    return 0.5 * (1.0 + math.erf(x / (sigma * math.sqrt(2.0))))


def binomial_se(p: float, n: int) -> float:
    """Standard error of a frequency estimate from n Bernoulli(p) draws."""
    return math.sqrt(max(p * (1.0 - p), 1e-12) / n)


# ---------------------------------------------------------------------------
# Privacy accounting algebra


def zcdp_epsilon(rho: float, delta: float) -> float:
    return rho + 2.0 * math.sqrt(rho * math.log(1.0 / delta))


def gaussian_session_epsilon(sigma: float, ell: int, delta: float) -> float:
    """Privacy loss of ell sensitivity-1 releases at noise sigma.

    This is the left-hand side of the calibration equation: the zCDP cost
    ell/(2 sigma^2) converted to (epsilon, delta)-DP.
    """
    return math.sqrt(2.0 * ell * math.log(1.0 / delta)) / sigma + ell / (
        2.0 * sigma**2
    )


def solve_sigma_bisect(ell: int, epsilon: float, delta: float) -> float:
    """Bisection solve of gaussian_session_epsilon(sigma) = epsilon.

    Independent of any closed form; the loss is strictly decreasing in sigma.
    """
    lo, hi = 1e-9, 1.0
    while gaussian_session_epsilon(hi, ell, delta) > epsilon:
        hi *= 2.0
    for _ in range(50000):
        mid = 0.5 * (lo + hi)
        if gaussian_session_epsilon(mid, ell, delta) > epsilon:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-13 * hi:
            break
    return 0.5 * (lo + hi)


def svt_lambda_formula(T: int, epsilon: float, delta: float) -> float:
    a = math.log(2.0 / delta)
    return (math.sqrt(2.0 * T * (epsilon + a)) + math.sqrt(2.0 * T * a)) / epsilon


def svt_threshold_formula(lam: float, ell: int, T: int, delta: float) -> float:
    return 3.0 * lam * math.log(2.0 * (ell + T) / delta)


# ---------------------------------------------------------------------------
# Votes, margins, stability (brute force over explicit vote vectors)


def brute_majority(votes: list[int]) -> int:
    ones = sum(votes)
    return 1 if ones >= len(votes) / 2 else 0


def brute_margin(votes: list[int]) -> int:
    ones = sum(votes)
    return abs(2 * ones - len(votes))


def brute_distance(votes: list[int]) -> int:
    """Flips needed beyond one to change the majority, floored at zero.

    Counted directly: the smallest number of single-vote flips that changes
    brute_majority, minus one.
    """
    base = brute_majority(votes)
    k = len(votes)
    for flips in range(k + 1):
        ones = sum(votes)
        # flipping f votes moves `ones` anywhere in [ones-f, ones+f]
        lo = max(0, ones - flips)
        hi = min(k, ones + flips)
        for new_ones in range(lo, hi + 1):
            maj = 1 if new_ones >= k / 2 else 0
            if maj != base:
                return max(0, flips - 1)
    return k


def all_vote_vectors(k: int):
    return itertools.product((0, 1), repeat=k)


def pigeonhole_violated(mistakes: list[list[int]]) -> bool:
    """Direct check of the vote-matrix counting bound.

    mistakes[k][j] = 1 iff teacher k is wrong on point j. Returns True when
    the number of points with at least K/3 wrong teachers exceeds 3B, where
    B is the worst per-teacher mistake count.
    """
    K = len(mistakes)
    m = len(mistakes[0])
    B = max(sum(row) for row in mistakes)
    heavy = sum(1 for j in range(m) if sum(row[j] for row in mistakes) >= K / 3)
    return heavy > 3 * B


# ---------------------------------------------------------------------------
# The four-point counterexample, recomputed from its own table


VF_CLASS = [
    (1, 1, 0, 0),
    (1, 0, 1, 0),
    (1, 0, 0, 1),
]
VF_LABELS = (1, 1, 1, 1)


def vf_member_error(member: tuple[int, ...]) -> float:
    return sum(1 for p, y in zip(member, VF_LABELS) if p != y) / 4.0


def vf_exact_majority() -> tuple[int, ...]:
    out = []
    for j in range(4):
        ones = sum(h[j] for h in VF_CLASS)
        out.append(1 if ones >= len(VF_CLASS) / 2 else 0)
    return tuple(out)


def vf_majority_error() -> float:
    maj = vf_exact_majority()
    return sum(1 for p, y in zip(maj, VF_LABELS) if p != y) / 4.0


# ---------------------------------------------------------------------------
# 1-D threshold noise family: closed forms


def tnc_margin(x: float, tau: float, c: float = 0.5) -> float:
    """Regression-function distance from 1/2 at x, for the 1-D family."""
    if tau == 1.0:
        return min(0.5, c)
    q = (1.0 - tau) / tau
    return min(0.5, c * abs(x - 0.5) ** q)


def tnc_excess(t: float, tau: float, c: float = 0.5) -> float:
    """Exact excess risk of the threshold at t against the optimum at 1/2.

    Integrates 2 * margin(x) between t and 1/2, in closed form (piecewise:
    the margin is c*u^q until it clamps at 1/2, where u = |x - 1/2|).
    """
    a = abs(t - 0.5)
    if tau == 1.0:
        return 2.0 * min(0.5, c) * a
    q = (1.0 - tau) / tau
    if c >= 0.5:
        u_star = (0.5 / c) ** (1.0 / q)
    else:
        u_star = float("inf")
    if a <= u_star:
        return 2.0 * c * a ** (q + 1.0) / (q + 1.0)
    return 2.0 * c * u_star ** (q + 1.0) / (q + 1.0) + (a - u_star)


def tnc_tail_mass(t: float, tau: float, c: float = 0.5) -> float:
    """P(margin(X) <= t) for X uniform on [0,1], exact."""
    if tau == 1.0:
        return 0.0 if t < min(0.5, c) else 1.0
    q = (1.0 - tau) / tau
    if t <= 0:
        return 0.0
    radius = (t / c) ** (1.0 / q)
    return min(1.0, 2.0 * radius)


# ---------------------------------------------------------------------------
# Misc


def hoeffding_vote_bound(k: int, xi: float) -> float:
    return math.exp(-2.0 * k * xi**2)


def is_partition(parts: list[list[int]], whole: list[int]) -> bool:
    seen: list[int] = []
    for p in parts:
        seen.extend(p)
    return sorted(seen) == sorted(whole) and len(seen) == len(set(seen))


def mean_halfwidth(values: list[float]) -> tuple[float, float]:
    """Mean and the 1.96 * sd / sqrt(n) half-width used by summary reports."""
    n = len(values)
    mu = sum(values) / n
    if n < 2:
        return mu, 0.0
    var = sum((v - mu) ** 2 for v in values) / (n - 1)
    return mu, 1.96 * math.sqrt(var) / math.sqrt(n)
