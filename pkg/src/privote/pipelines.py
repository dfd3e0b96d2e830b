"""End-to-end private student training.

Two pipelines share the same shape: split the sensitive data into a
teacher committee, answer label queries about a public pool through a
private aggregation session, and train a student on the result.

passive (PSQ): every pool point is queried once, in stream order.
active (ASQ): a disagreement-based learner decides which points are worth
    one of its limited label queries, so the realized privacy loss tracks
    the number of labels actually requested.

Parameter-sizing helpers translate accuracy targets into the committee
size K and the unstable-query cutoff T.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np
import scipy.sparse as sp

from .aggregation import GaussianSession, SvtSession, VoteCount, vote_majority
from .dp_core import (
    PrivacyBudget,
    calibrate_svt_lambda,
    ex_post_epsilon,
    make_rng,
)
from .learners import (
    Dataset,
    FiniteHypothesisClass,
    LinearHypothesis,
    TrainerSettings,
    empirical_error,
    train_committee,
    train_erm,
)

__all__ = [
    "PsqConfig",
    "AsqConfig",
    "ActiveState",
    "RunReport",
    "LinearClassDescriptor",
    "FiniteClassDescriptor",
    "pate_psq",
    "pate_psq_noiseless",
    "pate_asq",
    "pate_asq_noiseless",
    "active_disagreement_test",
    "active_update_version_space",
    "run_active_learning",
    "compute_k_for_gaussian",
    "compute_svt_params",
    "svt_works_params",
]

MECHANISMS = ("gaussian", "svt")
BOT_POLICIES = ("zero", "coinflip")


@dataclass(frozen=True)
class RunReport:
    """What a pipeline run cost and bought.

    queries counts interactions with the aggregation session; bots counts
    pool points that never received a released label (refusals plus any
    points after an early halt) and were filled in by policy instead.
    """

    queries: int
    bots: int
    eps_ex_post: float
    accuracy: float
    halted_early: bool = False


@dataclass(frozen=True)
class PsqConfig:
    K: int
    budget: PrivacyBudget
    mechanism: str = "gaussian"
    T: int | None = None
    bot_policy: str = "zero"
    trainer: TrainerSettings | None = None

    def __post_init__(self) -> None:
        if self.K < 1:
            raise ValueError("K must be positive")
        if self.mechanism not in MECHANISMS:
            raise ValueError(f"mechanism must be one of {MECHANISMS}")
        if self.bot_policy not in BOT_POLICIES:
            raise ValueError(f"bot_policy must be one of {BOT_POLICIES}")
        if self.mechanism == "svt" and (self.T is None or self.T < 1):
            raise ValueError("the svt mechanism needs a positive cutoff T")


@dataclass(frozen=True)
class AsqConfig:
    K: int
    query_budget: int
    budget: PrivacyBudget
    gamma: float = 0.1
    c_prime: float = 1.0
    slack: float | None = None  # None: 1/|Q|, refreshed as Q grows
    trainer: TrainerSettings | None = None

    def __post_init__(self) -> None:
        if self.K < 1:
            raise ValueError("K must be positive")
        if self.query_budget < 1:
            raise ValueError("query_budget must be positive")
        if not (0.0 < self.gamma < 1.0):
            raise ValueError("gamma must lie in (0, 1)")
        if self.c_prime <= 0:
            raise ValueError("c_prime must be positive")


def _bot_label(policy: str, rng: np.random.Generator) -> int:
    if policy == "coinflip":
        return int(rng.integers(0, 2))
    return 0


def _require_pools(teacher_data: Dataset, student_pool: Dataset, test_data: Dataset, K: int) -> None:
    if len(teacher_data) < max(1, K):
        raise ValueError("teacher pool must hold at least K examples")
    if not teacher_data.labeled:
        raise ValueError("teacher pool must be labeled")
    if len(student_pool) < 1:
        raise ValueError("student pool is empty")
    if len(test_data) < 1 or not test_data.labeled:
        raise ValueError("test data must be nonempty and labeled")


def pate_psq(
    teacher_data: Dataset,
    student_pool: Dataset,
    test_data: Dataset,
    config: PsqConfig,
    rng: np.random.Generator | int | None = None,
) -> tuple[LinearHypothesis, RunReport]:
    """Passive pipeline: pseudo-label the whole pool, then fit a student.

    Every pool point is pushed through the aggregation session in stream
    order. A stable-release session may refuse some answers and eventually
    halt; refused and post-halt points get bot_policy labels, and the
    report records how many.
    """
    _require_pools(teacher_data, student_pool, test_data, config.K)
    rng = make_rng(rng)
    ensemble = train_committee(teacher_data, config.K, rng, config.trainer)
    ones = ensemble.vote_ones(student_pool.X)
    m = len(student_pool)

    if config.mechanism == "gaussian":
        session = GaussianSession.for_budget(m, config.budget, rng)
    else:
        session = SvtSession.for_budget(m, config.T, config.budget, rng)

    labels = np.empty(m, dtype=np.int64)
    queries = 0
    bots = 0
    for i in range(m):
        votes = VoteCount(int(ones[i]), config.K)
        if isinstance(session, SvtSession) and session.halted:
            answer = None
        else:
            answer = session.answer(votes)
            queries += 1
        if answer is None:
            bots += 1
            answer = _bot_label(config.bot_policy, rng)
        labels[i] = answer

    eps, _ = session.privacy_report()
    student = train_erm(student_pool.with_labels(labels), config.trainer, rng)
    report = RunReport(
        queries=queries,
        bots=bots,
        eps_ex_post=eps,
        accuracy=1.0 - empirical_error(student, test_data),
        halted_early=isinstance(session, SvtSession) and session.halted,
    )
    return student, report


def pate_psq_noiseless(
    teacher_data: Dataset,
    student_pool: Dataset,
    test_data: Dataset,
    K: int,
    rng: np.random.Generator | int | None = None,
    trainer: TrainerSettings | None = None,
) -> tuple[LinearHypothesis, RunReport]:
    """Non-private baseline: exact majority labels for the whole pool."""
    _require_pools(teacher_data, student_pool, test_data, K)
    rng = make_rng(rng)
    ensemble = train_committee(teacher_data, K, rng, trainer)
    ones = ensemble.vote_ones(student_pool.X)
    labels = (2 * ones >= K).astype(np.int64)
    student = train_erm(student_pool.with_labels(labels), trainer, rng)
    report = RunReport(
        queries=len(student_pool),
        bots=0,
        eps_ex_post=math.inf,
        accuracy=1.0 - empirical_error(student, test_data),
    )
    return student, report


# ---------------------------------------------------------------------------
# Disagreement-based active learning
#
# The learner is generic over a hypothesis-class descriptor. Finite classes
# keep an exact version space; linear classes carry the semantics through a
# constrained-refit surrogate and keep no explicit member set.


@dataclass
class ActiveState:
    """Mutable state of one active-learning run."""

    descriptor: Any
    xs: list = field(default_factory=list)  # queried points, native form
    ys: list = field(default_factory=list)
    j: int = 0  # stream position, 1-based
    c: int = 0  # label queries spent
    hypothesis: Any = None
    alive: np.ndarray | None = None  # finite classes: version-space mask


@dataclass(frozen=True)
class FiniteClassDescriptor:
    """Exact version-space bookkeeping over an explicit finite class.

    theta is the disagreement-coefficient surrogate: a constant, or a
    callable evaluated at d/j (and at the empirical noise level for the
    second-order term).
    """

    hclass: FiniteHypothesisClass
    vc_dim: int = 1
    theta: float | Callable[[float], float] = 2.0
    c_prime: float = 1.0

    kind = "finite"

    def _theta_at(self, arg: float) -> float:
        value = self.theta(arg) if callable(self.theta) else self.theta
        if value <= 1.0:
            raise ValueError("theta must exceed 1")
        return float(value)

    def init_state(self) -> ActiveState:
        alive = np.ones(self.hclass.n_members, dtype=bool)
        return ActiveState(descriptor=self, hypothesis=0, alive=alive)

    def disagreement(self, state: ActiveState, x, slack: float) -> bool:
        col = self.hclass.labels[state.alive, int(x)]
        return bool(col.min() != col.max())

    def update(self, state: ActiveState, j: int, gamma: float) -> None:
        gamma_j = gamma / math.log2(2 * j) ** 2
        if state.xs:
            mistakes = self.hclass.mistake_counts(state.xs, state.ys)
        else:
            mistakes = np.zeros(self.hclass.n_members, dtype=np.int64)
        best = int(mistakes[state.alive].min())
        base = self.c_prime * (
            self.vc_dim * math.log(self._theta_at(self.vc_dim / j))
            + math.log(1.0 / gamma_j)
        )
        if best > 0:
            noise_rate = best / j
            second = self.c_prime * math.sqrt(
                best
                * (
                    self.vc_dim * math.log(self._theta_at(noise_rate))
                    + math.log(1.0 / gamma_j)
                )
            )
        else:
            second = 0.0
        tolerance = base + second
        state.alive &= mistakes - best <= tolerance
        self.refit(state)

    def refit(self, state: ActiveState) -> None:
        if state.xs:
            mistakes = self.hclass.mistake_counts(state.xs, state.ys).astype(float)
        else:
            mistakes = np.zeros(self.hclass.n_members)
        mistakes[~state.alive] = np.inf
        state.hypothesis = int(np.argmin(mistakes))

    def predict(self, state: ActiveState, xs) -> np.ndarray:
        return self.hclass.predictions(state.hypothesis, xs)


@dataclass(frozen=True)
class LinearClassDescriptor:
    """Constrained-refit surrogate for halfspaces.

    No explicit version space exists; a point counts as ambiguous when some
    near-optimal fit on the queried pool Q labels it opposite to the
    current hypothesis. The probe fit pins the point's label with a heavy
    sample weight and must stay within `slack` of the current empirical
    error on Q.
    """

    n_features: int
    settings: TrainerSettings = TrainerSettings()
    probe_settings: TrainerSettings = TrainerSettings(max_iter=150)

    kind = "linear"

    def init_state(self) -> ActiveState:
        h0 = LinearHypothesis(np.zeros(self.n_features), 0.0)
        return ActiveState(descriptor=self, hypothesis=h0)

    def _pool(self, state: ActiveState) -> Dataset:
        return Dataset(sp.vstack(state.xs), np.asarray(state.ys))

    def disagreement(self, state: ActiveState, x, slack: float) -> bool:
        if math.isinf(slack) or not state.xs:
            return True
        pool = self._pool(state)
        # the reference is a fresh unconstrained optimum, not the possibly
        # stale current hypothesis
        base = train_erm(pool, self.probe_settings, init=state.hypothesis)
        base_errors = int((base.predict(pool.X) != pool.y).sum())
        forced = 1 - int(base.predict(x)[0])
        probe = Dataset(
            sp.vstack([pool.X, sp.csr_matrix(x)]),
            np.append(pool.y, forced),
        )
        weights = np.ones(len(probe))
        weights[-1] = len(pool) + 1.0
        h = train_erm(
            probe, self.probe_settings, sample_weight=weights, init=base
        )
        if int(h.predict(x)[0]) != forced:
            return False
        probe_errors = int((h.predict(pool.X) != pool.y).sum())
        return probe_errors <= base_errors + slack * len(pool)

    def update(self, state: ActiveState, j: int, gamma: float) -> None:
        self.refit(state)

    def refit(self, state: ActiveState) -> None:
        if state.xs:
            state.hypothesis = train_erm(
                self._pool(state), self.settings, init=state.hypothesis
            )

    def predict(self, state: ActiveState, xs) -> np.ndarray:
        return state.hypothesis.predict(xs)


def active_disagreement_test(state: ActiveState, x, slack: float) -> bool:
    """Would labeling x tell the learner anything it cannot infer?

    Exact for finite classes (some two live members split on x); for
    linear classes the constrained-refit surrogate decides. Infinite slack
    degenerates to passive learning: everything is ambiguous.
    """
    return state.descriptor.disagreement(state, x, slack)


def active_update_version_space(state: ActiveState, j: int, gamma: float) -> ActiveState:
    """Shrink the version space at stream position j (a power of two).

    Finite classes drop every member whose mistake count on Q exceeds the
    best live member's by more than the confidence tolerance at level
    gamma_j = gamma / log2(2j)^2. Linear classes refresh the hypothesis by
    retraining on Q.
    """
    if j < 1 or 2 ** int(math.log2(j)) != j:
        raise ValueError("updates happen on the doubling schedule")
    state.descriptor.update(state, j, gamma)
    return state


def run_active_learning(
    descriptor,
    stream,
    oracle: Callable[[Any, int], int],
    query_budget: int,
    gamma: float,
    slack: float | None = None,
) -> ActiveState:
    """Drive the disagreement learner down a fixed stream.

    oracle(x, i) supplies a label for stream element i on request; calls
    are made only inside the disagreement region and stop once the budget
    is spent. The final hypothesis is refit on everything queried.
    """
    if query_budget < 1:
        raise ValueError("query_budget must be positive")
    state = descriptor.init_state()
    for i, x in enumerate(stream):
        j = i + 1
        state.j = j
        effective_slack = (
            slack if slack is not None else 1.0 / max(1, len(state.xs))
        )
        if active_disagreement_test(state, x, effective_slack):
            state.ys.append(oracle(x, i))
            state.xs.append(x)
            state.c += 1
        if j & (j - 1) == 0:
            active_update_version_space(state, j, gamma)
        if state.c >= query_budget:
            break
    descriptor.refit(state)
    return state


def pate_asq(
    teacher_data: Dataset,
    student_pool: Dataset,
    test_data: Dataset,
    config: AsqConfig,
    rng: np.random.Generator | int | None = None,
) -> tuple[LinearHypothesis, RunReport]:
    """Active pipeline: spend label queries only where the learner is unsure.

    The teacher committee sits behind a noisy-majority session calibrated
    for `query_budget` answers, so the privacy statement covers the worst
    case while the reported ex-post loss reflects the queries actually
    made.
    """
    _require_pools(teacher_data, student_pool, test_data, config.K)
    rng = make_rng(rng)
    ensemble = train_committee(teacher_data, config.K, rng, config.trainer)
    ones = ensemble.vote_ones(student_pool.X)
    session = GaussianSession.for_budget(config.query_budget, config.budget, rng)

    state = _drive_asq(
        student_pool,
        config,
        lambda x, i: session.answer(VoteCount(int(ones[i]), config.K)),
    )
    report = RunReport(
        queries=state.c,
        bots=0,
        eps_ex_post=ex_post_epsilon(
            session.answered, session.sigma, config.budget.delta
        ),
        accuracy=1.0 - empirical_error(state.hypothesis, test_data),
    )
    return state.hypothesis, report


def pate_asq_noiseless(
    teacher_data: Dataset,
    student_pool: Dataset,
    test_data: Dataset,
    config: AsqConfig,
    rng: np.random.Generator | int | None = None,
) -> tuple[LinearHypothesis, RunReport]:
    """Active baseline answered by the exact committee majority."""
    _require_pools(teacher_data, student_pool, test_data, config.K)
    rng = make_rng(rng)
    ensemble = train_committee(teacher_data, config.K, rng, config.trainer)
    ones = ensemble.vote_ones(student_pool.X)

    state = _drive_asq(
        student_pool,
        config,
        lambda x, i: vote_majority(VoteCount(int(ones[i]), config.K)),
    )
    report = RunReport(
        queries=state.c,
        bots=0,
        eps_ex_post=math.inf,
        accuracy=1.0 - empirical_error(state.hypothesis, test_data),
    )
    return state.hypothesis, report


def _drive_asq(student_pool: Dataset, config: AsqConfig, oracle) -> ActiveState:
    descriptor = LinearClassDescriptor(
        n_features=student_pool.n_features,
        settings=config.trainer or TrainerSettings(),
    )
    stream = [student_pool.X[i] for i in range(len(student_pool))]
    return run_active_learning(
        descriptor,
        stream,
        oracle,
        config.query_budget,
        config.gamma,
        config.slack,
    )


# ---------------------------------------------------------------------------
# Parameter sizing


def compute_k_for_gaussian(m_or_ell: int, budget: PrivacyBudget, n: int) -> int:
    """Committee size for noisy-majority labeling of m queries.

    Equals ceil(6 * sigma * sqrt(2 log 2n)) for the sigma that spends the
    budget over m answers; sized so realized vote margins beat the noise
    on every query simultaneously, with n the per-teacher sample size.
    """
    m = int(m_or_ell)
    if m < 1 or n < 1:
        raise ValueError("m and n must be positive")
    eps, delta = budget.epsilon, budget.delta
    inner = math.sqrt(m * math.log(1.0 / delta)) + math.sqrt(
        m * math.log(1.0 / delta) + eps * m
    )
    return math.ceil(6.0 * math.sqrt(math.log(2.0 * n)) * inner / eps)


def compute_svt_params(
    m: int,
    expected_teacher_error: float,
    beta: float,
    budget: PrivacyBudget,
) -> tuple[int, int]:
    """Cutoff T and committee size K for stable-release labeling.

    T budgets the unstable queries a typical teacher error rate produces
    over m points (at failure level beta); K makes the remaining margins
    comfortably clear the noisy threshold.
    """
    if m < 1:
        raise ValueError("m must be positive")
    if not (0.0 <= expected_teacher_error <= 1.0):
        raise ValueError("expected_teacher_error must lie in [0, 1]")
    if not (0.0 < beta < 1.0):
        raise ValueError("beta must lie in (0, 1)")
    eps, delta = budget.epsilon, budget.delta
    T = math.ceil(
        3.0
        * (
            expected_teacher_error * m
            + math.sqrt(m * math.log(m / beta) / 2.0)
        )
    )
    T = max(T, 1)
    K = math.ceil(
        136.0
        * math.log(4.0 * m * T / min(delta, beta / 2.0))
        * math.sqrt(T * math.log(2.0 / delta))
        / eps
    )
    return T, K


def svt_works_params(
    m: int,
    nu: float,
    xi: float,
    gamma: float,
    budget: PrivacyBudget,
) -> tuple[int, int]:
    """(T, K) sized from distributional margins instead of teacher error.

    nu bounds the mass of points whose expected vote margin is below xi;
    with these parameters a stable-release session finishes all m rounds
    with probability at least 1 - gamma.
    """
    if m < 1:
        raise ValueError("m must be positive")
    if not (0.0 <= nu < 1.0):
        raise ValueError("nu must lie in [0, 1)")
    if not (0.0 < xi < 0.5):
        raise ValueError("xi must lie in (0, 1/2)")
    if not (0.0 < gamma < 1.0):
        raise ValueError("gamma must lie in (0, 1)")
    log3g = math.log(3.0 / gamma)
    T = math.ceil(nu * m + math.sqrt(2.0 * nu * m * log3g) + 2.0 * log3g / 3.0)
    T = max(T, 1)
    lam = calibrate_svt_lambda(T, budget)
    log_alive = math.log(3.0 * m / gamma)
    K = math.ceil(
        max(
            2.0 * log_alive / xi**2,
            3.0
            * lam
            * (math.log(4.0 * m / budget.delta) + log_alive)
            / xi,
        )
    )
    return T, K
