"""Adversarial imitation learning with kernel-ball rewards on tabular MDPs.

The package couples two provably convergent stochastic optimizers with exact
tabular oracles for every quantity their analysis references, plus the
generalization machinery (reward-ball policy distance, independent blocks,
covering-number bounds) needed to study how demonstration size controls the
distance gap.
"""

from .analysis import (
    BlockPartition,
    covering_bound_kernel,
    covering_bound_nn,
    empirical_r_distance,
    exact_r_distance,
    generalization_gap_experiment,
    kernel_rademacher,
    make_blocks,
    theorem1_bound,
)
from .errors import (
    BallViolation,
    ChainMismatch,
    ConfigError,
    DegenerateDecay,
    InfeasibleConstants,
    InsufficientHistory,
    KernelGailError,
    MissingExpert,
    NonErgodicChain,
    SingularSystem,
    TrajectoryTooShort,
)
from .features import (
    FeatureSystem,
    KernelReward,
    build_features,
    feature_expectation,
    load_features,
    reward_features,
    save_features,
)
from .imitation import GailImitator
from .mdp import (
    BetaMixingCurve,
    MixingFit,
    PolicyChain,
    TabularMDP,
    average_reward_policy_iteration,
    beta_mixing_curve,
    fit_mixing,
    fit_mixing_worst_start,
    induced_chain,
    load_mdp,
    pair_distribution,
    save_mdp,
    tv_distance,
)
from .optimize import (
    AltSgdConfig,
    PotentialState,
    RunResult,
    StepMetrics,
    TheoryConstants,
    TrainerState,
    alt_sgd_step,
    assemble_constants,
    decrement_constants,
    greedy_sgd_step,
    potential_eval,
    project_ball,
    run_training,
    substationarity_I,
    substationarity_J,
    theorem2_schedule,
    theorem3_bound,
    theorem3_schedule,
)
from .oracles import (
    ExactEval,
    PoissonResult,
    PolicyOracle,
    bias_bound,
    build_policy_oracle,
    evaluate_exact,
    exact_avg_reward,
    exact_grad_omega,
    exact_grad_theta,
    exact_objective,
    lipschitz_constants,
    objective_lower_bound,
    solve_poisson,
)
from .policy import (
    RegularityConstants,
    SoftmaxPolicy,
    entropy,
    estimate_regularity,
    fit_policy_to_actions,
    load_policy,
    log_prob_grad,
    make_policy,
    save_policy,
    uniform_policy,
)
from .sampling import (
    StochGrad,
    TrajectoryBatch,
    empirical_feature_expectation,
    load_demos,
    rollout,
    save_demos,
    stoch_grad_omega,
    stoch_grad_theta,
    theta_star_estimator,
)

__version__ = "0.1.0"
