"""Hypotheses, ERM training, ensembles, and population estimators.

Linear models with sparse features carry the real-data experiments; an
explicit finite hypothesis class backs the counterexample fixtures and the
exact version-space machinery. Monte-Carlo estimators approximate the
infinite-ensemble aggregate, the expected vote margin, and the high-margin
failure mass of a data distribution.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

from .aggregation import VoteCount, vote_majority

__all__ = [
    "Dataset",
    "LinearHypothesis",
    "TrainerSettings",
    "Ensemble",
    "FiniteHypothesisClass",
    "threshold_class",
    "split_disjoint",
    "train_erm",
    "predict",
    "empirical_error",
    "empirical_disagreement",
    "vote_count",
    "majority_label",
    "train_committee",
    "train_voting_student",
    "estimate_infinite_ensemble",
    "estimate_expected_margin",
    "estimate_high_margin_nu",
    "margin_distribution_report",
]


def _as_csr(X) -> sp.csr_matrix:
    if sp.issparse(X):
        return X.tocsr()
    arr = np.atleast_2d(np.asarray(X, dtype=float))
    return sp.csr_matrix(arr)


@dataclass
class Dataset:
    """Sparse feature matrix plus optional binary labels.

    Unlabeled datasets (y is None) represent student pools; labels live in
    {0, 1}.
    """

    X: sp.csr_matrix
    y: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.X = _as_csr(self.X)
        if self.y is not None:
            self.y = np.asarray(self.y)
            if self.y.shape != (self.X.shape[0],):
                raise ValueError(
                    f"labels shape {self.y.shape} does not match "
                    f"{self.X.shape[0]} examples"
                )
            if not np.isin(self.y, (0, 1)).all():
                raise ValueError("labels must be 0 or 1")
            self.y = self.y.astype(np.int64)

    def __len__(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def labeled(self) -> bool:
        return self.y is not None

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices)
        y = None if self.y is None else self.y[idx]
        return Dataset(self.X[idx], y)

    def without_labels(self) -> "Dataset":
        return Dataset(self.X, None)

    def with_labels(self, y) -> "Dataset":
        return Dataset(self.X, np.asarray(y))


@dataclass
class LinearHypothesis:
    """Halfspace classifier: predicts 1 iff w.x + b >= 0."""

    weights: np.ndarray
    bias: float = 0.0
    loss_curve: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.ndim != 1:
            raise ValueError("weights must be a vector")
        if not (np.isfinite(self.weights).all() and np.isfinite(self.bias)):
            raise ValueError("weights and bias must be finite")

    def decision(self, X) -> np.ndarray:
        return np.asarray(_as_csr(X) @ self.weights + self.bias).ravel()

    def predict(self, X) -> np.ndarray:
        return (self.decision(X) >= 0.0).astype(np.int64)


def predict(h: LinearHypothesis, x) -> int:
    """Label of a single example (ties at the boundary go to 1)."""
    return int(h.predict(x)[0])


@dataclass(frozen=True)
class TrainerSettings:
    """Full-batch gradient descent settings for the logistic surrogate."""

    max_iter: int = 500
    l2: float = 0.0
    grad_tol: float = 1e-10
    track_loss: bool = False

    def __post_init__(self) -> None:
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")
        if self.l2 < 0:
            raise ValueError("l2 must be nonnegative")


def train_erm(
    data: Dataset,
    settings: TrainerSettings | None = None,
    rng: np.random.Generator | None = None,
    sample_weight: np.ndarray | None = None,
    init: LinearHypothesis | None = None,
) -> LinearHypothesis:
    """Logistic-loss approximation of the 0-1 empirical risk minimizer.

    Full-batch gradient descent from zero initialization with step 1/L,
    where L bounds the logistic smoothness on this data, so the loss is
    non-increasing across iterations. Deterministic for fixed inputs.
    """
    if settings is None:
        settings = TrainerSettings()
    if len(data) == 0:
        raise ValueError("cannot train on an empty dataset")
    if not data.labeled:
        raise ValueError("training data must be labeled")
    X = data.X
    n, d = X.shape
    signs = 2.0 * data.y - 1.0
    if sample_weight is None:
        wts = np.full(n, 1.0 / n)
    else:
        wts = np.asarray(sample_weight, dtype=float)
        if wts.shape != (n,) or (wts < 0).any() or wts.sum() <= 0:
            raise ValueError("sample_weight must be nonnegative with positive sum")
        wts = wts / wts.sum()

    # smoothness bound: rows augmented with the bias coordinate
    row_sq = np.asarray(X.multiply(X).sum(axis=1)).ravel() + 1.0
    L = 0.25 * float(row_sq.max()) + settings.l2
    step = 1.0 / L

    if init is None:
        w = np.zeros(d)
        b = 0.0
    else:
        if init.weights.shape != (d,):
            raise ValueError("warm-start hypothesis has the wrong dimension")
        w = init.weights.copy()
        b = float(init.bias)
    losses = [] if settings.track_loss else None
    for _ in range(settings.max_iter):
        scores = signs * (np.asarray(X @ w).ravel() + b)
        if losses is not None:
            loss = float(np.dot(wts, np.logaddexp(0.0, -scores)))
            loss += 0.5 * settings.l2 * (np.dot(w, w) + b * b)
            losses.append(loss)
        coef = wts * signs * expit(-scores)
        grad_w = -(X.T @ coef) + settings.l2 * w
        grad_b = -coef.sum() + settings.l2 * b
        gnorm = np.sqrt(np.dot(grad_w, grad_w) + grad_b * grad_b)
        if gnorm < settings.grad_tol:
            break
        w -= step * grad_w
        b -= step * grad_b

    curve = None if losses is None else np.asarray(losses)
    return LinearHypothesis(w, b, loss_curve=curve)


def empirical_error(h, data: Dataset) -> float:
    """Fraction of labeled examples the hypothesis gets wrong."""
    if len(data) == 0:
        raise ValueError("empirical error of an empty dataset is undefined")
    if not data.labeled:
        raise ValueError("empirical error needs labels")
    return float(np.mean(h.predict(data.X) != data.y))


def empirical_disagreement(h1, h2, data: Dataset) -> float:
    """Fraction of examples where the two hypotheses differ."""
    if len(data) == 0:
        raise ValueError("empirical disagreement of an empty dataset is undefined")
    return float(np.mean(h1.predict(data.X) != h2.predict(data.X)))


def split_disjoint(
    data: Dataset, K: int, rng: np.random.Generator
) -> list[Dataset]:
    """Random partition into K parts with sizes differing by at most one."""
    n = len(data)
    if K < 1 or K != int(K):
        raise ValueError("K must be a positive integer")
    if K > n:
        raise ValueError(f"cannot split {n} examples into {K} parts")
    perm = rng.permutation(n)
    base, rem = divmod(n, K)
    parts = []
    start = 0
    for k in range(K):
        size = base + (1 if k < rem else 0)
        parts.append(data.subset(perm[start : start + size]))
        start += size
    return parts


@dataclass
class Ensemble:
    """A committee of linear hypotheses combined by majority vote."""

    members: list[LinearHypothesis]

    def __post_init__(self) -> None:
        if len(self.members) < 1:
            raise ValueError("an ensemble needs at least one member")

    @property
    def size(self) -> int:
        return len(self.members)

    def vote_ones(self, X) -> np.ndarray:
        """Number of members voting 1 at each row of X."""
        W = np.stack([m.weights for m in self.members], axis=1)
        b = np.array([m.bias for m in self.members])
        scores = np.asarray(_as_csr(X) @ W) + b
        return (scores >= 0.0).sum(axis=1).astype(np.int64)


def vote_count(ensemble: Ensemble, x) -> VoteCount:
    """Vote tally of the ensemble at a single example."""
    ones = int(ensemble.vote_ones(x)[0])
    return VoteCount(ones, ensemble.size)


def majority_label(ensemble: Ensemble, x) -> int:
    """Majority prediction at x; exact ties go to 1."""
    return vote_majority(vote_count(ensemble, x))


def train_committee(
    data: Dataset,
    K: int,
    rng: np.random.Generator,
    settings: TrainerSettings | None = None,
) -> Ensemble:
    """K linear fits on disjoint random splits, combined by majority."""
    parts = split_disjoint(data, K, rng)
    return Ensemble([train_erm(p, settings, rng) for p in parts])


def train_voting_student(
    pseudo_labeled: Dataset,
    K: int,
    rng: np.random.Generator,
    settings: TrainerSettings | None = None,
) -> Ensemble:
    """Split-and-vote student committee over pseudo-labeled data."""
    return train_committee(pseudo_labeled, K, rng, settings)


@dataclass
class FiniteHypothesisClass:
    """Explicit class over a finite domain: one row of labels per member."""

    labels: np.ndarray

    def __post_init__(self) -> None:
        self.labels = np.asarray(self.labels)
        if self.labels.ndim != 2 or self.labels.shape[0] < 1:
            raise ValueError("labels must be a nonempty members-by-domain matrix")
        if not np.isin(self.labels, (0, 1)).all():
            raise ValueError("labels must be 0 or 1")
        self.labels = self.labels.astype(np.int8)

    @property
    def n_members(self) -> int:
        return self.labels.shape[0]

    @property
    def domain_size(self) -> int:
        return self.labels.shape[1]

    def predictions(self, member: int, xs) -> np.ndarray:
        return self.labels[member, np.asarray(xs)]

    def mistake_counts(self, xs, ys) -> np.ndarray:
        """Per-member number of errors on a sample of (domain index, label)."""
        xs = np.asarray(xs)
        ys = np.asarray(ys)
        return (self.labels[:, xs] != ys).sum(axis=1)

    def erm(
        self,
        xs,
        ys,
        rng: np.random.Generator | None = None,
        randomize_ties: bool = False,
    ) -> int:
        """Index of an empirical-risk minimizer.

        Ties go to the lowest index by default; with randomize_ties the
        winner is uniform over the argmin set (rng required).
        """
        counts = self.mistake_counts(xs, ys)
        if not randomize_ties:
            return int(np.argmin(counts))
        if rng is None:
            raise ValueError("randomized tie-breaking needs an rng")
        priority = rng.random(self.n_members)
        best = counts == counts.min()
        cand = np.flatnonzero(best)
        return int(cand[np.argmin(priority[cand])])


def threshold_class(points) -> FiniteHypothesisClass:
    """All (n+1) threshold classifiers 1(x >= t) restricted to these points.

    Member k predicts 1 exactly on the k-th and later points in sorted
    order, so member 0 is all-ones and member n is all-zeros. Domain
    indices follow the input order of `points`.
    """
    xs = np.asarray(points, dtype=float)
    n = len(xs)
    if n < 1:
        raise ValueError("need at least one point")
    ranks = np.argsort(np.argsort(xs, kind="stable"), kind="stable")
    # member k labels point i with 1 iff rank(i) >= k
    members = np.arange(n + 1)[:, None]
    return FiniteHypothesisClass((ranks[None, :] >= members).astype(np.int8))


# ---------------------------------------------------------------------------
# Monte-Carlo estimators of population quantities
#
# A "distribution" here is any object with
#   sample_xy(n, rng) -> (xs, ys)          a fresh labeled sample
#   fit(xs, ys, rng)  -> callable          a teacher trained on that sample
# and, where an estimator needs them,
#   probe_points(count, rng) -> xs          fresh probe inputs
#   optimal_labels(xs) -> np.ndarray        reference-classifier labels
# Probes use the distribution's native batch form (index arrays for finite
# domains, row matrices for feature vectors).


def _probe_means(dist, n: int, probes, reps: int, rng) -> np.ndarray:
    """Mean prediction at each probe over `reps` freshly trained teachers."""
    if reps < 1:
        raise ValueError("reps must be positive")
    total = None
    for _ in range(reps):
        xs, ys = dist.sample_xy(n, rng)
        teacher = dist.fit(xs, ys, rng)
        preds = np.asarray(teacher(probes), dtype=float)
        total = preds if total is None else total + preds
    return total / reps


def estimate_infinite_ensemble(
    dist, n_per_teacher: int, x, reps: int, rng: np.random.Generator
) -> tuple[int, float]:
    """Limit-ensemble label at a single probe, plus the vote-for-1 rate.

    Trains `reps` independent teachers on fresh n-point samples; the label
    is 1 iff the mean prediction reaches 1/2. `x` is a length-one probe
    batch in the distribution's native form.
    """
    p = float(_probe_means(dist, n_per_teacher, x, reps, rng)[0])
    return int(p >= 0.5), p


def estimate_expected_margin(
    dist, n: int, x, reps: int, rng: np.random.Generator
) -> float:
    """Estimated |P(teacher votes 1 at x) - 1/2| for n-sample teachers."""
    p = float(_probe_means(dist, n, x, reps, rng)[0])
    return abs(p - 0.5)


def estimate_high_margin_nu(
    dist,
    n: int,
    xi: float,
    probe_count: int,
    reps: int,
    rng: np.random.Generator,
) -> float:
    """Estimated failure mass of the margin condition at level xi.

    Returns the fraction of probe points whose estimated expected margin is
    at most xi (the mass NOT exceeding the margin requirement).
    """
    if not (0.0 < xi < 0.5):
        raise ValueError("xi must lie in (0, 1/2)")
    probes = dist.probe_points(probe_count, rng)
    means = _probe_means(dist, n, probes, reps, rng)
    return float(np.mean(np.abs(means - 0.5) <= xi))


def margin_distribution_report(
    source,
    K: int,
    probe_count: int,
    reps: int,
    rng: np.random.Generator,
    n_per_teacher: int = 100,
) -> list[dict]:
    """Per-probe margin estimates for histogramming.

    For each probe x, two independent teacher pools of size K*reps estimate
    delta_hat = |P(teacher(x)=1) - 1/2| and delta_hstar = |P(teacher(x) !=
    reference(x)) - 1/2|, where the reference is the source's optimal
    classifier (its labels, for dataset-backed sources). Returns rows of
    {probe_id, delta_hat, delta_hstar}.
    """
    if isinstance(source, Dataset):
        return _dataset_margin_report(source, K, probe_count, reps, rng)
    probes = source.probe_points(probe_count, rng)
    ref = np.asarray(source.optimal_labels(probes), dtype=float)
    means_a = _probe_means(source, n_per_teacher, probes, K * reps, rng)
    means_b = _probe_means(source, n_per_teacher, probes, K * reps, rng)
    disagree = np.abs(means_b - ref)  # mean of 1(pred != ref) per probe
    return [
        {
            "probe_id": int(i),
            "delta_hat": float(abs(means_a[i] - 0.5)),
            "delta_hstar": float(abs(disagree[i] - 0.5)),
        }
        for i in range(len(means_a))
    ]


def _dataset_margin_report(
    data: Dataset, K: int, probe_count: int, reps: int, rng
) -> list[dict]:
    if not data.labeled:
        raise ValueError("dataset-backed margin reports need labels")
    if probe_count >= len(data):
        raise ValueError("probe pool must be smaller than the dataset")
    perm = rng.permutation(len(data))
    probe_idx, train_idx = perm[:probe_count], perm[probe_count:]
    probes = data.subset(probe_idx)
    train = data.subset(train_idx)
    votes_a = np.zeros(probe_count)
    votes_b = np.zeros(probe_count)
    total = 0
    for _ in range(reps):
        for goal in (votes_a, votes_b):
            ens = train_voting_student(train, K, rng)
            goal += ens.vote_ones(probes.X)
        total += K
    mean_a = votes_a / total
    mean_b = votes_b / total
    # P(member != y): members vote 1 a fraction mean_b of the time
    disagree = np.where(probes.y == 1, 1.0 - mean_b, mean_b)
    return [
        {
            "probe_id": int(i),
            "delta_hat": float(abs(mean_a[i] - 0.5)),
            "delta_hstar": float(abs(disagree[i] - 0.5)),
        }
        for i in range(probe_count)
    ]
