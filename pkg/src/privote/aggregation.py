"""Private labeling sessions over adaptive vote-count streams.

Two session types answer "what does the ensemble say at x?" queries:

* GaussianSession perturbs every vote count and pays for every answer.
* SvtSession releases the exact majority only when the vote margin clears a
  noisy stability threshold, pays only for threshold crossings, and emits at
  most ``cutoff`` bottom (None) answers over its lifetime.

Sessions are strictly sequential single-owner state machines; the caller
supplies the next query after seeing each answer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dp_core import (
    PrivacyBudget,
    calibrate_gaussian_sigma,
    calibrate_svt_lambda,
    gaussian_composition_rho,
    sample_gaussian,
    sample_laplace,
    svt_threshold_w,
    zcdp_to_dp,
)

__all__ = [
    "VoteCount",
    "Margin",
    "PseudoLabel",
    "SessionExhausted",
    "GaussianSession",
    "SvtSession",
    "margin",
    "distance_to_instability",
    "vote_majority",
    "gaussian_answer",
    "svt_answer",
    "svt_generic",
    "stability_release",
    "session_privacy_report",
]


@dataclass(frozen=True)
class VoteCount:
    """Teacher votes at one query point: `ones` of `total` voted for 1."""

    ones: int
    total: int

    def __post_init__(self) -> None:
        if self.total < 1 or self.total != int(self.total):
            raise ValueError("total must be a positive integer")
        if not (0 <= self.ones <= self.total) or self.ones != int(self.ones):
            raise ValueError(
                f"ones must lie in [0, total], got {self.ones}/{self.total}"
            )


class Margin(int):
    """Absolute vote gap; an int constrained to be nonnegative.

    Built from a VoteCount, it additionally shares the ensemble size's
    parity and never exceeds it.
    """

    def __new__(cls, value):
        if value < 0 or value != int(value):
            raise ValueError("a margin is a nonnegative integer")
        return super().__new__(cls, value)


def margin(votes: VoteCount) -> Margin:
    """Absolute vote gap |2*ones - total|.

    One vote flip moves the margin by exactly 2, and the parity always
    matches the ensemble size.
    """
    return Margin(abs(2 * votes.ones - votes.total))


def distance_to_instability(votes: VoteCount) -> int:
    """Flips the majority output is guaranteed to withstand: max{0, ceil(margin/2)-1}.

    A conservative stability radius with global sensitivity 1 in the
    underlying dataset (one record changes one teacher's vote).
    """
    m = margin(votes)
    return max(0, (m + 1) // 2 - 1)


def vote_majority(votes: VoteCount) -> int:
    """Majority label; exact ties release 1 (the `>= total/2` rule)."""
    return int(votes.ones >= votes.total / 2)


@dataclass(frozen=True)
class PseudoLabel:
    """A released 0/1 label, or the bottom marker (value None).

    Only stable-release sessions ever emit bottom; noisy-majority sessions
    always answer.
    """

    value: int | None

    def __post_init__(self) -> None:
        if self.value is not None and self.value not in (0, 1):
            raise ValueError("released labels are 0 or 1")

    @classmethod
    def released(cls, value: int) -> "PseudoLabel":
        return cls(int(value))

    @classmethod
    def bot(cls) -> "PseudoLabel":
        return cls(None)

    @property
    def is_bot(self) -> bool:
        return self.value is None


class SessionExhausted(RuntimeError):
    """The session's query budget or unstable cutoff has been consumed."""


class GaussianSession:
    """Budgeted noisy-majority labeler.

    Each answer perturbs the vote count with N(0, sigma^2) and applies the
    majority rule, spending 1/(2 sigma^2) zCDP per query.
    """

    def __init__(
        self,
        sigma: float,
        budget_ell: int,
        delta: float,
        rng: np.random.Generator,
    ) -> None:
        if not sigma > 0:
            raise ValueError("sigma must be positive")
        if budget_ell < 1:
            raise ValueError("budget_ell must be positive")
        if not (0.0 < delta < 1.0):
            raise ValueError("delta must lie in (0, 1)")
        self.sigma = sigma
        self.budget_ell = int(budget_ell)
        self.delta = delta
        self.answered = 0
        self._rng = rng

    @classmethod
    def for_budget(
        cls, ell: int, budget: PrivacyBudget, rng: np.random.Generator
    ) -> "GaussianSession":
        """Calibrate sigma so that ell answers exactly exhaust the budget."""
        return cls(calibrate_gaussian_sigma(ell, budget), ell, budget.delta, rng)

    def answer(self, votes: VoteCount) -> int:
        if self.answered >= self.budget_ell:
            raise SessionExhausted(
                f"query budget of {self.budget_ell} already spent"
            )
        noise = sample_gaussian(self.sigma, self._rng)
        self.answered += 1
        return int(votes.ones + noise >= votes.total / 2)

    def privacy_report(self) -> tuple[float, float]:
        """Realized (epsilon, delta) for the answers released so far."""
        rho = gaussian_composition_rho(self.answered, self.sigma)
        return zcdp_to_dp(rho, self.delta), self.delta


class SvtSession:
    """Stable-release labeler with unstable cutoff.

    Per query, the margin-derived stability distance plus Laplace(2*lambda)
    is compared against a noisy threshold. Above: the exact (noise-free)
    majority label is released. Below: None is emitted, one unit of the
    cutoff is consumed, and the threshold is re-noised. After `cutoff`
    bottom answers the session refuses further queries.

    The privacy cost is fixed by (cutoff, lambda) alone; released answers
    are free, so the report never depends on how many queries were stable.
    """

    def __init__(
        self,
        lam: float,
        w: float,
        cutoff: int,
        budget: PrivacyBudget,
        rng: np.random.Generator,
    ) -> None:
        if not lam > 0:
            raise ValueError("lambda must be positive")
        if not w > 0:
            raise ValueError("w must be positive")
        if cutoff < 1:
            raise ValueError("cutoff must be positive")
        self.lam = lam
        self.w = w
        self.cutoff = int(cutoff)
        self.budget = budget
        self.consumed = 0
        self.answered = 0
        self._rng = rng
        self._noisy_threshold = w + sample_laplace(lam, rng)

    @classmethod
    def for_budget(
        cls,
        ell: int,
        cutoff: int,
        budget: PrivacyBudget,
        rng: np.random.Generator,
    ) -> "SvtSession":
        lam = calibrate_svt_lambda(cutoff, budget)
        w = svt_threshold_w(lam, ell, cutoff, budget.delta)
        return cls(lam, w, cutoff, budget, rng)

    @property
    def halted(self) -> bool:
        return self.consumed >= self.cutoff

    def answer(self, votes: VoteCount) -> int | None:
        if self.halted:
            raise SessionExhausted(
                f"unstable cutoff of {self.cutoff} already consumed"
            )
        dist = distance_to_instability(votes)
        if dist + sample_laplace(2.0 * self.lam, self._rng) > self._noisy_threshold:
            self.answered += 1
            return vote_majority(votes)
        self.consumed += 1
        if not self.halted:
            # threshold noise is refreshed after every bottom answer; on the
            # final one the session dies first, so no draw is spent
            self._noisy_threshold = self.w + sample_laplace(self.lam, self._rng)
        return None

    def privacy_report(self) -> tuple[float, float]:
        """The budgeted (epsilon, delta); depends only on cutoff and lambda."""
        return self.budget.epsilon, self.budget.delta


def gaussian_answer(session: GaussianSession, votes: VoteCount) -> int:
    """One noisy-majority label; spends one unit of the session budget."""
    return session.answer(votes)


def svt_answer(session: SvtSession, votes: VoteCount) -> PseudoLabel:
    """One stable-release attempt, wrapped in the tagged label type."""
    raw = session.answer(votes)
    return PseudoLabel.bot() if raw is None else PseudoLabel.released(raw)


def session_privacy_report(session) -> tuple[float, float]:
    """(epsilon, delta) statement for either session type."""
    report = getattr(session, "privacy_report", None)
    if report is None:
        raise TypeError(f"{type(session).__name__} is not a session")
    return report()


def svt_generic(
    queries,
    T: int,
    w: float,
    budget: PrivacyBudget,
    rng: np.random.Generator,
) -> list[bool]:
    """Above-threshold over sensitivity-1 real queries with cutoff T.

    Returns one boolean per processed query (True = above). Processing
    stops once T below-threshold answers have been emitted, so the output
    may be shorter than the input.
    """
    if T < 1:
        raise ValueError("T must be positive")
    lam = math.sqrt(32.0 * T * math.log(1.0 / budget.delta)) / budget.epsilon
    noisy_w = w + sample_laplace(lam, rng)
    out: list[bool] = []
    below = 0
    for q in queries:
        if q + sample_laplace(2.0 * lam, rng) > noisy_w:
            out.append(True)
        else:
            out.append(False)
            below += 1
            if below >= T:
                break
            noisy_w = w + sample_laplace(lam, rng)
    return out


def stability_release(
    value,
    dist: int,
    gamma_threshold: float,
    epsilon: float,
    rng: np.random.Generator,
):
    """Release `value` iff its stability distance clears a noisy threshold.

    The caller certifies that `dist` is the true distance to instability of
    the function that produced `value`. Returns the value or None.
    """
    if dist < 0:
        raise ValueError("dist must be nonnegative")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if dist + sample_laplace(1.0 / epsilon, rng) > gamma_threshold:
        return value
    return None
