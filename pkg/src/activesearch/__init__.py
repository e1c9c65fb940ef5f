"""Asynchronous multi-agent active search of sparse targets under region sensing."""

from .actions import ActionSet, RegionAction, enumerate_actions, to_dense
from .bayes import (
    BlockHyper,
    GaussianPosterior,
    LaplaceHyper,
    bsbl_em,
    expected_reward_lambda_plus,
    gaussian_posterior,
    gibbs_sample_laplace,
    laplace_em_map,
    sample_block_posterior,
    sample_inverse_gaussian,
)
from .experiments import ExperimentConfig, RecoveryCurve, emit_results, full_recovery, run_sweep
from .grid import (
    GridShape,
    Measurement,
    MeasurementSet,
    NoiseModel,
    SparseSignal,
    assemble,
    generate_signal,
    observe,
)
from .info import (
    HypothesisPosterior,
    PeelingState,
    mutual_information,
    peel_update,
    update_hypothesis_posterior,
)
from .policies import (
    Decision,
    LaplaceTsPolicy,
    LatsiPolicy,
    PointSweepPolicy,
    RandomPointPolicy,
    RsiPolicy,
    SpatsPolicy,
    make_policy,
)
from .regret import (
    bound_regret_1sparse,
    bound_regret_block,
    bound_regret_multi,
    lemma1_bound,
    mc_availability,
    mc_regret_game,
    regret_single_exact,
)
from .sim import (
    DurationModel,
    EpisodeTrace,
    SearchEnvironment,
    run_episode,
    worst_case_visibility,
)

__version__ = "0.1.0"
