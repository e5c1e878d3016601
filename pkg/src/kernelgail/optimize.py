"""Alternating and greedy stochastic optimizers for the regularized minimax
objective, with theory-derived step sizes and stationarity monitors.

One alternating iteration ascends theta first (projected onto the kappa
ball, at the current omega), then descends omega using the *updated* theta.
Sub-stationarity is tracked as a running minimum of

    J_t = ||theta_t - proj(theta_t + grad_theta F(omega_t, theta_t))||^2
          + ||grad_omega F(omega_t, theta_{t+1})||^2

with exact oracle gradients; the greedy algorithm instead tracks
I_t = ||grad_omega F(omega_t, theta*(omega_t))||^2 with the closed-form
inner maximizer theta*(omega) = (G(pi_omega) - G_demo) / mu.

The potential monitor evaluates

    E_t = F(omega_t, theta_t) + s * ( (1 + 2 eta_w L_w)/2 ||omega_t - omega_{t-1}||^2
          + (eta_w/(2 eta_t) - mu eta_w/4 + 3 eta_w eta_t mu^2/2) ||theta_{t+1} - theta_t||^2
          + mu eta_w / 8 ||theta_t - theta_{t-1}||^2 ),   s = 8 / (eta_w^2 (58 L_w + 9)),

which decreases monotonically under exact gradients and conforming steps.
Note E_t looks one theta update ahead, so it is evaluated mid-iteration.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InfeasibleConstants, InsufficientHistory
from .features import FeatureSystem, KernelReward
from .mdp import TabularMDP, induced_chain
from .oracles import PolicyOracle, build_policy_oracle, lipschitz_constants
from .policy import RegularityConstants, make_policy
from .sampling import stoch_grad_omega, stoch_grad_theta, theta_star_estimator

THEORY_MARGIN = 0.99


def project_ball(v: np.ndarray, kappa: float) -> np.ndarray:
    """Euclidean projection onto the kappa ball (a contraction)."""
    v = np.asarray(v, dtype=float)
    norm = float(np.linalg.norm(v.reshape(-1)))
    if norm <= kappa:
        return v.copy()
    return v * (kappa / norm)


@dataclass(frozen=True)
class AltSgdConfig:
    """Step sizes, batch sizes, and problem constants for one training run."""

    eta_theta: float
    eta_omega: float
    q_theta: int
    q_omega: int
    kappa: float
    mu: float
    lam: float
    n_iters: int
    mode: str = "sample"  # "population" | "sample"
    strict_theory: bool = False
    exact_gradients: bool = False
    reward_updates: int = 1
    L_omega: float | None = None
    S_omega: float | None = None

    def __post_init__(self):
        if self.mode not in ("population", "sample"):
            raise ConfigError(f"mode must be 'population' or 'sample', got {self.mode!r}")
        for key in ("eta_theta", "eta_omega"):
            if getattr(self, key) < 0:
                raise ConfigError(f"{key} must be >= 0")
        for key in ("q_theta", "q_omega", "reward_updates"):
            if getattr(self, key) < 1:
                raise ConfigError(f"{key} must be >= 1")
        if self.kappa <= 0 or self.mu < 0 or self.lam < 0:
            raise ConfigError("kappa must be positive; mu and lam nonnegative")
        if self.n_iters < 0:
            raise ConfigError("n_iters must be >= 0")
        self.check_step_sizes()

    def check_step_sizes(self) -> None:
        """Enforce the convergence-theory step constraints under
        `strict_theory`; warn about violations otherwise."""
        if self.L_omega is None or self.S_omega is None:
            if self.strict_theory:
                raise ConfigError("strict_theory requires L_omega and S_omega")
            return
        caps = theory_step_caps(self.L_omega, self.S_omega, self.mu)
        problems = []
        if self.eta_omega > caps[0]:
            problems.append(f"eta_omega {self.eta_omega:g} > cap {caps[0]:g}")
        if self.eta_theta > caps[1]:
            problems.append(f"eta_theta {self.eta_theta:g} > cap {caps[1]:g}")
        ratio_cap = self.mu / (30.0 * self.L_omega + 5.0)
        if self.eta_theta > 0 and self.eta_omega / self.eta_theta > ratio_cap:
            problems.append(
                f"eta_omega/eta_theta {self.eta_omega / self.eta_theta:g} > cap {ratio_cap:g}"
            )
        if problems:
            msg = "; ".join(problems)
            if self.strict_theory:
                raise ConfigError(f"step sizes violate theory constraints: {msg}")
            warnings.warn(f"step sizes outside theory range: {msg}", stacklevel=2)


def theory_step_caps(L_omega: float, S_omega: float, mu: float) -> tuple[float, float]:
    """(eta_omega cap, eta_theta cap) before the ratio constraint."""
    if mu <= 0:
        raise InfeasibleConstants("mu must be positive for the step-size caps")
    L = np.float64(L_omega)
    S = np.float64(S_omega)
    with np.errstate(divide="ignore", over="ignore"):
        eta_w = min(
            float(L / (S * (8.0 * L + 2.0))) if S > 0 else np.inf,
            float(1.0 / (2.0 * L)) if L > 0 else np.inf,
        )
        eta_t = min(
            1.0 / (150.0 * mu),
            float((7.0 * L + 1.0) / (150.0 * S * S)) if S > 0 else np.inf,
            float(1.0 / (100.0 * (2.0 * mu + S))),
        )
    return float(eta_w), float(eta_t)


@dataclass(frozen=True)
class TheoryConstants:
    """Everything the step/batch/iteration formulas consume."""

    L_omega: float
    S_omega: float
    mu: float
    lam: float
    kappa: float
    rho_g: float
    B_H: float
    M_theta: float = 0.0
    M_omega: float = 0.0
    M_G: float = 0.0


def assemble_constants(
    rc: RegularityConstants,
    fs: FeatureSystem,
    kappa: float,
    mu: float,
    lam: float,
    M_theta: float = 0.0,
    M_omega: float = 0.0,
    M_G: float = 0.0,
) -> TheoryConstants:
    L_omega, S_omega = lipschitz_constants(rc, fs, kappa, fs.q)
    return TheoryConstants(L_omega=L_omega, S_omega=S_omega, mu=mu, lam=lam, kappa=kappa,
                           rho_g=fs.rho_g, B_H=rc.B_H, M_theta=M_theta, M_omega=M_omega,
                           M_G=M_G)


def decrement_constants(L: float, S: float, mu: float, eta_theta: float, eta_omega: float) -> dict:
    """Potential-decrement coefficients k1..k5 plus (s, k, phi, nu).

    Raises InfeasibleConstants if min(k1, k4) is nonpositive, since the
    iteration-count formula divides by it.
    """
    if eta_omega <= 0 or eta_theta <= 0 or mu <= 0:
        raise InfeasibleConstants("step sizes and mu must be positive")
    s = 8.0 / (eta_omega**2 * (58.0 * L + 9.0))
    k1 = 1.0 / (2.0 * eta_omega) - s * (eta_omega * (7.0 * L + 1.0) / 2.0
                                        + 1.5 * eta_omega * eta_theta * S**2)
    k2 = s * eta_omega * L / 2.0 - S / 2.0
    k3 = s * (eta_omega * mu / 4.0 - 1.5 * eta_theta * eta_omega * mu**2)
    k4 = s * mu * eta_omega / 8.0 - (1.0 / (2.0 * eta_theta) + (S + 2.0 * mu) / 2.0)
    k5 = s * mu * eta_omega / 8.0 - (1.0 / (2.0 * eta_theta) + mu / 2.0)
    if min(k1, k4) <= 0:
        raise InfeasibleConstants(
            f"potential decrement constants not positive: k1={k1:g}, k4={k4:g}"
        )
    k = 1.0 / min(k1, k4)
    phi = max(1.0, 1.0 / eta_theta**2, 1.0 / eta_omega**2)
    nu = max(
        2.0 * max(eta_omega + s * eta_omega**2 + s * eta_omega / (2.0 * mu), s * eta_omega / 2.0),
        3.0 * max(1.0 / (2.0 * mu), 1.5 * eta_omega * eta_theta),
    )
    return {"s": s, "k1": k1, "k2": k2, "k3": k3, "k4": k4, "k5": k5,
            "k": k, "phi": phi, "nu": nu}


def theorem2_schedule(
    constants: TheoryConstants,
    epsilon: float,
    C0_estimate: float,
    mode: str = "sample",
) -> AltSgdConfig:
    """Largest step sizes passing the theory constraints (with a 0.99 margin)
    plus the matching batch sizes and iteration budget for accuracy epsilon.

    Batch sizes are ceil(4 k phi nu M / epsilon) with measured noise moments;
    the iteration count is k phi (C0 + 4 sqrt(2) rho_g kappa + mu kappa^2
    + 2 lam B_H) / epsilon, with C0 estimated from the initialization as
    twice the initial potential.
    """
    if epsilon <= 0:
        raise InfeasibleConstants("epsilon must be positive")
    L, S, mu = constants.L_omega, constants.S_omega, constants.mu
    cap_w, cap_t = theory_step_caps(L, S, mu)
    eta_theta = THEORY_MARGIN * cap_t
    eta_omega = min(THEORY_MARGIN * cap_w,
                    THEORY_MARGIN * eta_theta * mu / (30.0 * L + 5.0))
    dec = decrement_constants(L, S, mu, eta_theta, eta_omega)
    k_phi_nu = dec["k"] * dec["phi"] * dec["nu"]
    q_theta = max(1, math.ceil(4.0 * k_phi_nu * constants.M_theta / epsilon))
    q_omega = max(1, math.ceil(4.0 * k_phi_nu * constants.M_omega / epsilon))
    horizon = (C0_estimate + 4.0 * np.sqrt(2.0) * constants.rho_g * constants.kappa
               + mu * constants.kappa**2 + 2.0 * constants.lam * constants.B_H)
    n_iters = max(1, math.ceil(dec["k"] * dec["phi"] * max(horizon, 0.0) / epsilon))
    return AltSgdConfig(
        eta_theta=eta_theta, eta_omega=eta_omega, q_theta=q_theta, q_omega=q_omega,
        kappa=constants.kappa, mu=mu, lam=constants.lam, n_iters=n_iters, mode=mode,
        strict_theory=True, L_omega=L, S_omega=S,
    )


def greedy_objective_bound(constants: TheoryConstants) -> float:
    """Bound on |F(omega, theta*(omega))|: 12 rho_g^2 / mu + lam B_H."""
    return 12.0 * constants.rho_g**2 / constants.mu + constants.lam * constants.B_H


def theorem3_schedule(constants: TheoryConstants, epsilon: float) -> tuple[float, int]:
    """Greedy step size epsilon / ((L + S^2/mu) M_G) and the iteration count
    at which the I_N bound reaches epsilon."""
    if epsilon <= 0:
        raise InfeasibleConstants("epsilon must be positive")
    if constants.mu <= 0 or constants.M_G <= 0:
        raise InfeasibleConstants("theorem3_schedule needs mu > 0 and M_G > 0")
    C = constants.L_omega + constants.S_omega**2 / constants.mu
    eta_omega = epsilon / (C * constants.M_G)
    n_iters = max(1, math.ceil(4.0 * greedy_objective_bound(constants) * C * constants.M_G
                               / epsilon**2))
    return float(eta_omega), n_iters


def theorem3_bound(constants: TheoryConstants, t: int) -> float:
    """Running-minimum bound 2 sqrt(B_F (L + S^2/mu) M_G / t) at iteration t."""
    C = constants.L_omega + constants.S_omega**2 / constants.mu
    return 2.0 * float(np.sqrt(greedy_objective_bound(constants) * C * constants.M_G / t))


# ---------------------------------------------------------------------------
# Trainer state and steps
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TrainerState:
    omega: np.ndarray  # (n_actions, d_S)
    theta: np.ndarray  # (q,)
    iteration: int
    seed: int
    omega_prev: np.ndarray
    theta_prev: np.ndarray

    @classmethod
    def initial(cls, omega: np.ndarray, theta: np.ndarray, seed: int) -> "TrainerState":
        omega = np.array(omega, dtype=float)
        theta = np.array(theta, dtype=float)
        return cls(omega=omega, theta=theta, iteration=0, seed=seed,
                   omega_prev=omega.copy(), theta_prev=theta.copy())


@dataclass(frozen=True, eq=False)
class StepMetrics:
    iteration: int
    F_exact: float
    J_value: float
    I_value: float
    potential: float
    grad_omega_norm: float
    proj_residual: float
    theta_norm: float
    avg_true_reward: float


@dataclass(frozen=True, eq=False)
class PotentialState:
    """History needed by the potential: two omega iterates and three theta
    iterates (the value at step t references theta_{t+1})."""

    s_coefficient: float
    omega_prev: np.ndarray | None = None  # omega_{t-1}
    theta_prev: np.ndarray | None = None  # theta_{t-1}
    theta_next: np.ndarray | None = None  # theta_{t+1}
    value: float | None = None


def potential_coefficients(cfg: AltSgdConfig) -> tuple[float, float, float, float]:
    if cfg.L_omega is None:
        raise ConfigError("potential evaluation needs cfg.L_omega")
    L, et, ew, mu = cfg.L_omega, cfg.eta_theta, cfg.eta_omega, cfg.mu
    s = 8.0 / (ew**2 * (58.0 * L + 9.0))
    c_omega = (1.0 + 2.0 * ew * L) / 2.0
    c_mid = ew / (2.0 * et) - mu * ew / 4.0 + 1.5 * ew * et * mu**2
    c_last = mu * ew / 8.0
    return s, c_omega, c_mid, c_last


def potential_eval(
    ps: PotentialState,
    state: TrainerState,
    mdp: TabularMDP,
    fs: FeatureSystem,
    demo_fe: np.ndarray,
    cfg: AltSgdConfig,
    oracle: PolicyOracle | None = None,
) -> float:
    """Potential at (omega_t, theta_t) = (state.omega, state.theta) given the
    surrounding iterates stored in ps."""
    if ps.omega_prev is None or ps.theta_prev is None or ps.theta_next is None:
        raise InsufficientHistory("potential needs omega_{t-1}, theta_{t-1}, theta_{t+1}")
    s, c_omega, c_mid, c_last = potential_coefficients(cfg)
    if abs(s - ps.s_coefficient) > 1e-9 * max(1.0, abs(s)):
        raise ConfigError("PotentialState s_coefficient does not match cfg")
    if oracle is None:
        oracle = build_policy_oracle(mdp, fs, make_policy(fs, state.omega))
    reward = KernelReward(theta=state.theta, kappa=cfg.kappa)
    F = float(reward.theta @ (oracle.feat_exp - demo_fe)
              - cfg.lam * oracle.entropy - 0.5 * cfg.mu * reward.theta @ reward.theta)
    d_omega = float(np.sum((state.omega - ps.omega_prev) ** 2))
    d_mid = float(np.sum((ps.theta_next - state.theta) ** 2))
    d_last = float(np.sum((state.theta - ps.theta_prev) ** 2))
    return F + s * (c_omega * d_omega + c_mid * d_mid + c_last * d_last)


def _exact_grad_theta(oracle: PolicyOracle, theta: np.ndarray, demo_fe: np.ndarray,
                      mu: float) -> np.ndarray:
    return oracle.feat_exp - demo_fe - mu * theta


def _metrics_common(mdp: TabularMDP, oracle: PolicyOracle) -> float:
    if mdp.eval_reward is None:
        return float("nan")
    return float(oracle.chain.stationary @ mdp.eval_reward.reshape(-1))


def _alt_iteration(
    mdp: TabularMDP,
    fs: FeatureSystem,
    cfg: AltSgdConfig,
    demo_fe: np.ndarray,
    state: TrainerState,
    oracle: PolicyOracle,
    with_potential: bool,
    demo_sampler=None,
) -> tuple[np.ndarray, np.ndarray, StepMetrics]:
    t = state.iteration + 1
    omega, theta = state.omega, state.theta
    policy = make_policy(fs, omega)

    theta_cur = theta
    for j in range(cfg.reward_updates):
        inner = t * cfg.reward_updates + j
        demo_step = demo_fe if demo_sampler is None else demo_sampler(t, j)
        if cfg.exact_gradients:
            ghat = _exact_grad_theta(oracle, theta_cur, demo_step, cfg.mu)
        else:
            reward_cur = KernelReward(theta=theta_cur, kappa=cfg.kappa)
            ghat = stoch_grad_theta(
                mdp, fs, policy, reward_cur, cfg.mu, demo_step, cfg.q_theta, state.seed,
                index=inner, chain=oracle.chain,
            ).value
        theta_cur = project_ball(theta_cur + cfg.eta_theta * ghat, cfg.kappa)
    theta_next = theta_cur

    # Exact stationarity pieces for this iteration.
    g_theta_exact = _exact_grad_theta(oracle, theta, demo_fe, cfg.mu)
    residual = theta - project_ball(theta + g_theta_exact, cfg.kappa)
    proj_residual = float(np.linalg.norm(residual))
    g_omega_next = oracle.grad_omega(theta_next, cfg.lam)
    grad_omega_norm = float(np.linalg.norm(g_omega_next))
    J_value = proj_residual**2 + grad_omega_norm**2
    if cfg.mu > 0:
        theta_star = (oracle.feat_exp - demo_fe) / cfg.mu
        I_value = float(np.sum(oracle.grad_omega(theta_star, cfg.lam) ** 2))
    else:
        I_value = float("nan")
    F_exact = float(theta @ (oracle.feat_exp - demo_fe)
                    - cfg.lam * oracle.entropy - 0.5 * cfg.mu * theta @ theta)

    potential = float("nan")
    if with_potential and cfg.L_omega is not None:
        s, c_omega, c_mid, c_last = potential_coefficients(cfg)
        potential = F_exact + s * (
            c_omega * float(np.sum((omega - state.omega_prev) ** 2))
            + c_mid * float(np.sum((theta_next - theta) ** 2))
            + c_last * float(np.sum((theta - state.theta_prev) ** 2))
        )

    if cfg.exact_gradients:
        ghat_omega = g_omega_next
    else:
        reward_next = KernelReward(theta=theta_next, kappa=cfg.kappa)
        ghat_omega = stoch_grad_omega(
            mdp, fs, policy, reward_next, cfg.lam, cfg.q_omega, state.seed,
            index=t, oracle=oracle,
        ).value
    omega_next = omega - cfg.eta_omega * ghat_omega

    metrics = StepMetrics(
        iteration=t, F_exact=F_exact, J_value=J_value, I_value=I_value,
        potential=potential, grad_omega_norm=grad_omega_norm,
        proj_residual=proj_residual, theta_norm=float(np.linalg.norm(theta_next)),
        avg_true_reward=_metrics_common(mdp, oracle),
    )
    return omega_next, theta_next, metrics


def alt_sgd_step(
    state: TrainerState,
    cfg: AltSgdConfig,
    mdp: TabularMDP,
    fs: FeatureSystem,
    demo_fe: np.ndarray,
) -> tuple[TrainerState, StepMetrics]:
    """One alternating iteration: projected theta ascent at (omega_t,
    theta_t), then omega descent evaluated at (omega_t, theta_{t+1})."""
    oracle = build_policy_oracle(mdp, fs, make_policy(fs, state.omega))
    omega_next, theta_next, metrics = _alt_iteration(
        mdp, fs, cfg, demo_fe, state, oracle, with_potential=cfg.L_omega is not None
    )
    new_state = TrainerState(
        omega=omega_next, theta=theta_next, iteration=state.iteration + 1,
        seed=state.seed, omega_prev=state.omega, theta_prev=state.theta,
    )
    return new_state, metrics


def _greedy_iteration(
    mdp: TabularMDP,
    fs: FeatureSystem,
    cfg: AltSgdConfig,
    demo_fe: np.ndarray,
    state: TrainerState,
    oracle: PolicyOracle,
    demo_sampler=None,
) -> tuple[np.ndarray, np.ndarray, StepMetrics]:
    if cfg.mu <= 0:
        raise ConfigError("greedy updates need mu > 0")
    t = state.iteration + 1
    policy = make_policy(fs, state.omega)
    theta_star = (oracle.feat_exp - demo_fe) / cfg.mu
    demo_step = demo_fe if demo_sampler is None else demo_sampler(t, 0)
    if cfg.exact_gradients:
        theta_hat = theta_star
        ghat_omega = oracle.grad_omega(theta_hat, cfg.lam)
    else:
        theta_hat = theta_star_estimator(
            mdp, fs, policy, demo_step, cfg.mu, cfg.q_theta, state.seed,
            index=t, chain=oracle.chain,
        )
        # The inner maximizer is used unconstrained (no ball projection).
        reward_hat = KernelReward(theta=theta_hat, kappa=float("inf"))
        ghat_omega = stoch_grad_omega(
            mdp, fs, policy, reward_hat, cfg.lam, cfg.q_omega, state.seed,
            index=t, oracle=oracle,
        ).value
    omega_next = state.omega - cfg.eta_omega * ghat_omega

    g_at_star = oracle.grad_omega(theta_star, cfg.lam)
    I_value = float(np.sum(g_at_star**2))
    F_exact = float(theta_star @ (oracle.feat_exp - demo_fe)
                    - cfg.lam * oracle.entropy - 0.5 * cfg.mu * theta_star @ theta_star)
    metrics = StepMetrics(
        iteration=t, F_exact=F_exact, J_value=float("nan"), I_value=I_value,
        potential=float("nan"), grad_omega_norm=float(np.linalg.norm(g_at_star)),
        proj_residual=float("nan"), theta_norm=float(np.linalg.norm(theta_hat)),
        avg_true_reward=_metrics_common(mdp, oracle),
    )
    return omega_next, theta_hat, metrics


def greedy_sgd_step(
    state: TrainerState,
    cfg: AltSgdConfig,
    mdp: TabularMDP,
    fs: FeatureSystem,
    demo_fe: np.ndarray,
) -> tuple[TrainerState, StepMetrics]:
    """One greedy iteration: estimate the inner maximizer, then take one
    stochastic omega step against it."""
    oracle = build_policy_oracle(mdp, fs, make_policy(fs, state.omega))
    omega_next, theta_hat, metrics = _greedy_iteration(mdp, fs, cfg, demo_fe, state, oracle)
    new_state = TrainerState(
        omega=omega_next, theta=theta_hat, iteration=state.iteration + 1,
        seed=state.seed, omega_prev=state.omega, theta_prev=state.theta,
    )
    return new_state, metrics


def substationarity_J(
    state: TrainerState,
    mdp: TabularMDP,
    fs: FeatureSystem,
    demo_fe: np.ndarray,
    cfg: AltSgdConfig,
) -> float:
    """Exact J value of the last completed iteration (state must contain the
    pre-step iterates, i.e. at least one step was taken)."""
    if state.iteration < 1:
        raise InsufficientHistory("no completed iteration to evaluate")
    oracle = build_policy_oracle(mdp, fs, make_policy(fs, state.omega_prev))
    g_theta = _exact_grad_theta(oracle, state.theta_prev, demo_fe, cfg.mu)
    residual = state.theta_prev - project_ball(state.theta_prev + g_theta, cfg.kappa)
    g_omega = oracle.grad_omega(state.theta, cfg.lam)
    return float(np.sum(residual**2) + np.sum(g_omega**2))


def substationarity_I(
    state: TrainerState,
    mdp: TabularMDP,
    fs: FeatureSystem,
    demo_fe: np.ndarray,
    cfg: AltSgdConfig,
) -> float:
    """Exact squared gradient norm at the closed-form inner maximizer, at the
    iterate where the last step was taken."""
    if state.iteration < 1:
        raise InsufficientHistory("no completed iteration to evaluate")
    if cfg.mu <= 0:
        raise ConfigError("substationarity_I needs mu > 0")
    oracle = build_policy_oracle(mdp, fs, make_policy(fs, state.omega_prev))
    theta_star = (oracle.feat_exp - demo_fe) / cfg.mu
    return float(np.sum(oracle.grad_omega(theta_star, cfg.lam) ** 2))


# ---------------------------------------------------------------------------
# Run driver
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class RunResult:
    state: TrainerState
    history: list[StepMetrics]
    J_running: float
    I_running: float
    initial: StepMetrics


def _initial_metrics(mdp, fs, cfg, demo_fe, omega, theta) -> StepMetrics:
    oracle = build_policy_oracle(mdp, fs, make_policy(fs, omega))
    g_theta = _exact_grad_theta(oracle, theta, demo_fe, cfg.mu)
    residual = theta - project_ball(theta + g_theta, cfg.kappa)
    F = float(theta @ (oracle.feat_exp - demo_fe)
              - cfg.lam * oracle.entropy - 0.5 * cfg.mu * theta @ theta)
    return StepMetrics(
        iteration=0, F_exact=F, J_value=float("nan"), I_value=float("nan"),
        potential=float("nan"),
        grad_omega_norm=float(np.linalg.norm(oracle.grad_omega(theta, cfg.lam))),
        proj_residual=float(np.linalg.norm(residual)),
        theta_norm=float(np.linalg.norm(theta)),
        avg_true_reward=_metrics_common(mdp, oracle),
    )


def run_training(
    mdp: TabularMDP,
    fs: FeatureSystem,
    cfg: AltSgdConfig,
    demo_fe: np.ndarray,
    *,
    algo: str = "alt",
    seed: int = 0,
    init_omega: np.ndarray | None = None,
    init_theta: np.ndarray | None = None,
    n_iters: int | None = None,
    stop=None,
    checkpoint_hook=None,
    demo_sampler=None,
) -> RunResult:
    """Run the selected optimizer, recording exact metrics every iteration.

    The per-iteration chain solve is warm-started from the previous
    stationary vector; ergodicity is fully verified on the first iteration
    only (softmax policies keep the kernel's support pattern fixed, so
    ergodicity cannot change along the run). `stop(metrics, J_running,
    I_running)` may end the run early; `checkpoint_hook(state)` fires after
    every iteration. When `demo_sampler(iteration, inner_step)` is given, the
    stochastic gradient estimates replace the demonstration feature
    expectation with a fresh minibatch value each step; exact metrics always
    use the full `demo_fe`.
    """
    if algo not in ("alt", "greedy"):
        raise ConfigError(f"algo must be 'alt' or 'greedy', got {algo!r}")
    demo_fe = np.asarray(demo_fe, dtype=float)
    omega = np.zeros((fs.n_actions, fs.d_S)) if init_omega is None else np.array(init_omega, float)
    theta = np.zeros(fs.q) if init_theta is None else np.array(init_theta, float)
    state = TrainerState.initial(omega, theta, seed)
    total = cfg.n_iters if n_iters is None else min(cfg.n_iters, n_iters)

    initial = _initial_metrics(mdp, fs, cfg, demo_fe, omega, theta)
    history: list[StepMetrics] = []
    J_running = float("inf")
    I_running = float("inf")
    guess = None
    for t in range(total):
        chain = induced_chain(mdp, make_policy(fs, state.omega),
                              init_guess=guess, verify_ergodic=(t == 0))
        oracle = build_policy_oracle(mdp, fs, make_policy(fs, state.omega), chain=chain)
        if algo == "alt":
            omega_next, theta_next, metrics = _alt_iteration(
                mdp, fs, cfg, demo_fe, state, oracle,
                with_potential=cfg.L_omega is not None,
                demo_sampler=demo_sampler,
            )
        else:
            omega_next, theta_next, metrics = _greedy_iteration(
                mdp, fs, cfg, demo_fe, state, oracle, demo_sampler=demo_sampler
            )
        state = TrainerState(omega=omega_next, theta=theta_next,
                             iteration=state.iteration + 1, seed=seed,
                             omega_prev=state.omega, theta_prev=state.theta)
        if np.isfinite(metrics.J_value):
            J_running = min(J_running, metrics.J_value)
        if np.isfinite(metrics.I_value):
            I_running = min(I_running, metrics.I_value)
        history.append(metrics)
        guess = chain.stationary
        if checkpoint_hook is not None:
            checkpoint_hook(state)
        if stop is not None and stop(metrics, J_running, I_running):
            break
    return RunResult(state=state, history=history, J_running=J_running,
                     I_running=I_running, initial=initial)
