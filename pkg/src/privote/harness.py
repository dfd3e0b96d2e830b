"""Dataset ingestion, the split-and-repeat experiment protocol, and reports.

The protocol: per trial, re-split the data at a derived seed into a
sensitive teacher pool (80%), an unlabeled public student pool (2%), and a
test set (18%); size the committee at roughly one teacher per hundred
sensitive points; run the chosen pipeline; aggregate trial rows into a
mean plus a normal-approximation confidence half-width.

Reports are byte-stable: identical config and master seed give identical
CSV/JSON files. Wall-clock columns are zero unless timing is switched on,
since real timings would break that guarantee.
"""

from __future__ import annotations

import bz2
import gzip
import io
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .dp_core import PrivacyBudget, derive_seed, make_rng
from .learners import Dataset, TrainerSettings, empirical_error, train_erm
from .pipelines import (
    AsqConfig,
    PsqConfig,
    RunReport,
    compute_svt_params,
    pate_asq,
    pate_asq_noiseless,
    pate_psq,
    pate_psq_noiseless,
)
from .synthdata import gen_massart, gen_realizable, gen_tnc

__all__ = [
    "LibsvmParseError",
    "parse_libsvm",
    "write_libsvm",
    "Split",
    "split_protocol",
    "ExperimentConfig",
    "TrialReport",
    "SummaryReport",
    "run_experiment",
    "estimate_teacher_error",
    "render_trial_csv",
    "render_margin_csv",
    "emit_report",
    "METHODS",
    "TRIAL_COLUMNS",
]

METHODS = ("PsqGaussian", "PsqSvt", "Asq", "PsqNoPrivacy", "AsqNoPrivacy")
SYNTH_DATASETS = ("realizable", "massart", "tnc")

TRIAL_COLUMNS = (
    "dataset",
    "method",
    "epsilon",
    "delta",
    "trial",
    "seed",
    "queries",
    "bots",
    "eps_ex_post",
    "accuracy",
    "wall_ms",
)
MARGIN_COLUMNS = ("probe_id", "delta_hat", "delta_hstar")


class LibsvmParseError(ValueError):
    """Malformed LIBSVM input; the message names the offending line."""


def _open_text(path):
    p = str(path)
    if p.endswith(".bz2"):
        return io.TextIOWrapper(bz2.open(p, "rb"), encoding="utf-8")
    if p.endswith(".gz"):
        return io.TextIOWrapper(gzip.open(p, "rb"), encoding="utf-8")
    return open(p, "r", encoding="utf-8")


# accepted label spellings; 2 covers datasets published with {1, 2} classes
_LABEL_MAP = {1.0: 1, -1.0: 0, 0.0: 0, 2.0: 0}


def parse_libsvm(path) -> Dataset:
    """Read `label idx:val ...` lines into a sparse dataset.

    Labels {+1, 1} map to 1 and {-1, 0, 2} to 0. Feature indices are
    1-based in the file, strictly increasing within a line, and stored
    0-based. Anything after '#' on a line is a comment.
    """
    labels: list[int] = []
    indptr = [0]
    indices: list[int] = []
    values: list[float] = []
    max_index = -1

    with _open_text(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tokens = line.split()
            try:
                label_value = float(tokens[0])
            except ValueError:
                raise LibsvmParseError(
                    f"line {lineno}: unreadable label {tokens[0]!r}"
                ) from None
            label = _LABEL_MAP.get(label_value)
            if label is None:
                raise LibsvmParseError(
                    f"line {lineno}: unknown label value {tokens[0]}"
                )
            previous = 0
            for token in tokens[1:]:
                idx_str, _, val_str = token.partition(":")
                try:
                    idx = int(idx_str)
                    val = float(val_str)
                except ValueError:
                    raise LibsvmParseError(
                        f"line {lineno}: malformed feature {token!r}"
                    ) from None
                if idx < 1:
                    raise LibsvmParseError(
                        f"line {lineno}: feature index {idx} is not positive"
                    )
                if idx <= previous:
                    raise LibsvmParseError(
                        f"line {lineno}: feature index {idx} does not increase"
                    )
                previous = idx
                indices.append(idx - 1)
                values.append(val)
                max_index = max(max_index, idx - 1)
            labels.append(label)
            indptr.append(len(indices))

    if not labels:
        raise LibsvmParseError("no examples found")
    X = sp.csr_matrix(
        (np.asarray(values), np.asarray(indices), np.asarray(indptr)),
        shape=(len(labels), max_index + 1),
    )
    return Dataset(X, np.asarray(labels))


def write_libsvm(data: Dataset, path) -> None:
    """Canonical LIBSVM text for a labeled dataset (1-based indices)."""
    if not data.labeled:
        raise ValueError("writing needs labels")
    X = data.X
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for i in range(len(data)):
            start, end = X.indptr[i], X.indptr[i + 1]
            feats = " ".join(
                # plain-float repr: numpy scalars stringify as np.float64(..)
                f"{j + 1}:{float(X.data[k])!r}"
                for k, j in zip(range(start, end), X.indices[start:end])
            )
            fh.write(f"{int(data.y[i])} {feats}".rstrip() + "\n")


@dataclass(frozen=True)
class Split:
    """One trial's partition; student labels ride along for evaluation only."""

    teacher: Dataset
    student: Dataset  # unlabeled
    test: Dataset
    student_labels: np.ndarray

    def __iter__(self):
        return iter((self.teacher, self.student, self.test))


def split_protocol(data: Dataset, fractions, rng) -> Split:
    """Disjoint random split into (teacher, unlabeled student, test).

    The teacher pool takes floor(f_t * N), the student pool ceil(f_s * N),
    and the test set the remainder, so sizes are reproducible integers.
    """
    f = tuple(float(x) for x in fractions)
    if len(f) != 3 or any(x <= 0 for x in f) or abs(sum(f) - 1.0) > 1e-9:
        raise ValueError(
            "fractions must be three positive numbers summing to 1"
        )
    if not data.labeled:
        raise ValueError("splitting needs a labeled dataset")
    n = len(data)
    n_teacher = math.floor(f[0] * n)
    n_student = math.ceil(f[1] * n)
    n_test = n - n_teacher - n_student
    if min(n_teacher, n_student, n_test) < 1:
        raise ValueError(f"split of {n} examples leaves an empty part")
    perm = make_rng(rng).permutation(n)
    teacher = data.subset(perm[:n_teacher])
    student = data.subset(perm[n_teacher : n_teacher + n_student])
    test = data.subset(perm[n_teacher + n_student :])
    return Split(teacher, student.without_labels(), test, student.y.copy())


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one repeated experiment needs, JSON-mirrorable.

    dataset is a LIBSVM file path or a synthetic generator name
    (realizable, massart, tnc). delta=None defers to 1/(teacher pool
    size) per trial; K=None sizes the committee at one teacher per
    hundred sensitive points.
    """

    dataset: str
    method: str
    epsilon: float = 1.0
    delta: float | None = None
    trials: int = 30
    seed: int = 0
    fractions: tuple[float, float, float] = (0.8, 0.02, 0.18)
    K: int | None = None
    query_fraction: float = 0.3
    bot_policy: str = "zero"
    gamma: float = 0.1
    svt_T: int | None = None
    svt_beta: float = 0.05
    synth_n: int = 4000
    generator_params: dict = field(default_factory=dict)
    record_timing: bool = False

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if self.trials < 1:
            raise ValueError("trials must be positive")
        if not (0.0 < self.query_fraction <= 1.0):
            raise ValueError("query_fraction must lie in (0, 1]")
        if self.synth_n < 10:
            raise ValueError("synth_n is too small to split")

    @property
    def private(self) -> bool:
        return self.method not in ("PsqNoPrivacy", "AsqNoPrivacy")


@dataclass(frozen=True)
class TrialReport:
    dataset: str
    method: str
    epsilon: float
    delta: float
    trial: int
    seed: int
    queries: int
    bots: int
    eps_ex_post: float
    accuracy: float
    wall_ms: int = 0

    def __post_init__(self) -> None:
        if self.eps_ex_post > self.epsilon * (1 + 1e-9):
            raise ValueError("realized privacy loss exceeds the budget")
        if not (0.0 <= self.accuracy <= 1.0):
            raise ValueError("accuracy must lie in [0, 1]")

    def as_row(self) -> dict:
        return {c: getattr(self, c) for c in TRIAL_COLUMNS}


@dataclass(frozen=True)
class SummaryReport:
    dataset: str
    method: str
    trials: int
    mean_accuracy: float
    accuracy_halfwidth: float
    mean_queries: float
    queries_halfwidth: float

    @classmethod
    def from_trials(cls, trials: list[TrialReport]) -> "SummaryReport":
        if not trials:
            raise ValueError("no trials to summarize")
        acc = np.array([t.accuracy for t in trials], dtype=float)
        qs = np.array([t.queries for t in trials], dtype=float)
        return cls(
            dataset=trials[0].dataset,
            method=trials[0].method,
            trials=len(trials),
            mean_accuracy=float(acc.mean()),
            accuracy_halfwidth=_halfwidth(acc),
            mean_queries=float(qs.mean()),
            queries_halfwidth=_halfwidth(qs),
        )


def _halfwidth(values: np.ndarray) -> float:
    if len(values) < 2:
        return 0.0
    return float(1.96 * values.std(ddof=1) / math.sqrt(len(values)))


def estimate_teacher_error(
    teacher_data: Dataset, K: int, rng: np.random.Generator
) -> float:
    """Expected single-teacher error, measured on a 10% holdout.

    Trains one committee-sized fit on the remaining data and scores it,
    approximating E[Err] for a teacher trained on n/K points.
    """
    n = len(teacher_data)
    n_holdout = max(1, round(0.1 * n))
    if n - n_holdout < 1:
        raise ValueError("teacher pool too small to hold out from")
    perm = make_rng(rng).permutation(n)
    holdout = teacher_data.subset(perm[:n_holdout])
    rest = perm[n_holdout:]
    chunk = rest[: max(1, len(rest) // K)]
    teacher = train_erm(teacher_data.subset(chunk))
    return empirical_error(teacher, holdout)


def _load_source(config: ExperimentConfig):
    """Returns a per-trial dataset factory; real files parse once."""
    name = config.dataset
    p = config.generator_params
    if name in SYNTH_DATASETS:
        n = config.synth_n

        def factory(rng):
            if name == "realizable":
                return gen_realizable(p.get("d", 5), n, rng)[0]
            if name == "massart":
                return gen_massart(p.get("d", 5), n, p.get("flip", 0.1), rng)[0]
            return gen_tnc(p.get("tau", 1.0), n, rng, c=p.get("c", 0.5))[0]

        return factory
    if not Path(name).exists():
        raise FileNotFoundError(
            f"dataset {name!r} is neither a readable file nor one of "
            f"{SYNTH_DATASETS}"
        )
    parsed = parse_libsvm(name)
    return lambda rng: parsed


def _run_trial(
    config: ExperimentConfig, data: Dataset, rng: np.random.Generator
) -> tuple[RunReport, float, float]:
    """One pipeline run on a fresh split; returns (report, eps, delta)."""
    split = split_protocol(data, config.fractions, rng)
    teacher, student, test = split.teacher, split.student, split.test
    K = config.K if config.K is not None else math.ceil(len(teacher) / 100)
    method = config.method

    if not config.private:
        if method == "PsqNoPrivacy":
            _, report = pate_psq_noiseless(teacher, student, test, K, rng)
        else:
            dummy = PrivacyBudget(1.0, 1.0 / len(teacher))
            cfg = AsqConfig(
                K=K,
                query_budget=max(1, round(config.query_fraction * len(student))),
                budget=dummy,
                gamma=config.gamma,
            )
            _, report = pate_asq_noiseless(teacher, student, test, cfg, rng)
        return report, math.inf, 0.0

    delta = config.delta if config.delta is not None else 1.0 / len(teacher)
    budget = PrivacyBudget(config.epsilon, delta)
    if method == "PsqGaussian":
        cfg = PsqConfig(K=K, budget=budget, bot_policy=config.bot_policy)
        _, report = pate_psq(teacher, student, test, cfg, rng)
    elif method == "PsqSvt":
        if config.svt_T is not None:
            T = config.svt_T
        else:
            err = estimate_teacher_error(teacher, K, rng)
            T, _ = compute_svt_params(len(student), err, config.svt_beta, budget)
        cfg = PsqConfig(
            K=K,
            budget=budget,
            mechanism="svt",
            T=T,
            bot_policy=config.bot_policy,
        )
        _, report = pate_psq(teacher, student, test, cfg, rng)
    else:  # Asq
        cfg = AsqConfig(
            K=K,
            query_budget=max(1, round(config.query_fraction * len(student))),
            budget=budget,
            gamma=config.gamma,
        )
        _, report = pate_asq(teacher, student, test, cfg, rng)
    return report, budget.epsilon, budget.delta


def run_experiment(
    config: ExperimentConfig,
) -> tuple[SummaryReport, list[TrialReport]]:
    """The repeat protocol: fresh derived-seed split and run per trial."""
    factory = _load_source(config)
    trials: list[TrialReport] = []
    for t in range(config.trials):
        seed = derive_seed(config.seed, t)
        try:
            started = time.perf_counter() if config.record_timing else 0.0
            rng = make_rng(seed)
            data = factory(rng)
            report, eps, delta = _run_trial(config, data, rng)
            wall_ms = (
                round(1000.0 * (time.perf_counter() - started))
                if config.record_timing
                else 0
            )
        except Exception as exc:
            raise RuntimeError(
                f"trial {t} (seed {seed}) failed: {exc}"
            ) from exc
        trials.append(
            TrialReport(
                dataset=config.dataset,
                method=config.method,
                epsilon=eps,
                delta=delta,
                trial=t,
                seed=seed,
                queries=report.queries,
                bots=report.bots,
                eps_ex_post=report.eps_ex_post,
                accuracy=report.accuracy,
                wall_ms=wall_ms,
            )
        )
    return SummaryReport.from_trials(trials), trials


# ---------------------------------------------------------------------------
# Report emission


def _format_cell(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return repr(float(value))
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def _render_csv(columns, rows: list[dict]) -> str:
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_format_cell(row[c]) for c in columns))
    return "\n".join(lines) + "\n"


def render_trial_csv(trials: list[TrialReport]) -> str:
    return _render_csv(TRIAL_COLUMNS, [t.as_row() for t in trials])


def render_margin_csv(rows: list[dict]) -> str:
    return _render_csv(MARGIN_COLUMNS, rows)


def _coerce_rows(reports) -> tuple[tuple[str, ...], list[dict]]:
    first = reports[0]
    if isinstance(first, TrialReport):
        return TRIAL_COLUMNS, [t.as_row() for t in reports]
    if isinstance(first, dict) and "probe_id" in first:
        return MARGIN_COLUMNS, list(reports)
    raise TypeError(f"cannot emit reports of type {type(first).__name__}")


def emit_report(reports, format: str, path) -> Path:
    """Write trial or margin records as CSV or JSON; byte-stable."""
    if not reports:
        raise ValueError("nothing to emit")
    if format not in ("csv", "json"):
        raise ValueError("format must be csv or json")
    columns, rows = _coerce_rows(reports)
    if format == "csv":
        text = _render_csv(columns, rows)
    else:
        ordered = [{c: row[c] for c in columns} for row in rows]
        text = json.dumps(ordered, indent=2) + "\n"
    out = Path(path)
    out.write_text(text, encoding="utf-8", newline="\n")
    return out
