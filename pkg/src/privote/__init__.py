"""Privately aggregated teacher-committee labeling.

Split sensitive data across a committee of teachers, release their
majority votes through calibrated noise (per-query Gaussian or
stable-release with an unstable-query cutoff), and train a public student
on the pseudo-labels. Includes a disagreement-driven active variant that
pays privacy only for the labels it actually requests, plus the synthetic
families and experiment harness used to study when voting helps.
"""

from .aggregation import (
    GaussianSession,
    Margin,
    PseudoLabel,
    SessionExhausted,
    SvtSession,
    VoteCount,
    distance_to_instability,
    gaussian_answer,
    margin,
    session_privacy_report,
    svt_answer,
    stability_release,
    svt_generic,
    vote_majority,
)
from .dp_core import (
    NoiseScale,
    PrivacyAccount,
    PrivacyBudget,
    calibrate_gaussian_sigma,
    calibrate_svt_lambda,
    derive_seed,
    dp_to_zcdp,
    ex_post_epsilon,
    gaussian_composition_rho,
    make_rng,
    sample_gaussian,
    sample_laplace,
    svt_threshold_w,
    zcdp_to_dp,
)
from .harness import (
    ExperimentConfig,
    LibsvmParseError,
    Split,
    SummaryReport,
    TrialReport,
    emit_report,
    estimate_teacher_error,
    parse_libsvm,
    render_margin_csv,
    render_trial_csv,
    run_experiment,
    split_protocol,
    write_libsvm,
)
from .learners import (
    Dataset,
    Ensemble,
    FiniteHypothesisClass,
    LinearHypothesis,
    TrainerSettings,
    empirical_disagreement,
    empirical_error,
    estimate_expected_margin,
    estimate_high_margin_nu,
    estimate_infinite_ensemble,
    majority_label,
    margin_distribution_report,
    predict,
    split_disjoint,
    threshold_class,
    train_committee,
    train_erm,
    train_voting_student,
    vote_count,
)
from .pipelines import (
    ActiveState,
    AsqConfig,
    FiniteClassDescriptor,
    LinearClassDescriptor,
    PsqConfig,
    RunReport,
    active_disagreement_test,
    active_update_version_space,
    compute_k_for_gaussian,
    compute_svt_params,
    pate_asq,
    pate_asq_noiseless,
    pate_psq,
    pate_psq_noiseless,
    run_active_learning,
    svt_works_params,
)
from .synthdata import (
    DataGenerator,
    TncGenerator,
    VotingFailsFixture,
    VotingWinsGenerator,
    gen_massart,
    gen_realizable,
    gen_tnc,
    gen_voting_fails,
    gen_voting_wins,
)

__version__ = "0.1.0"
