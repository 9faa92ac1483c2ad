//! Exploration strategies: BEAR, PCSE, four action-level baselines and the
//! generative-model uniform sampler.

use std::fmt;
use std::str::FromStr;

use ndarray::{ArrayView1, ArrayView2, Zip};
use rand::Rng;

use crate::cmdp::{expected_start_value, occupancy_of_policy, policy_evaluation, value_iteration, Policy};
use crate::envs::{sample_action, GridEnv};
use crate::error::{IcrlError, Result};
use crate::estimation::{log_term, plus, CountTable, EstimatedProblem};
use crate::solver::{min_attainable_cost, ConstrainedModel, SafeSolution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StrategyKind {
    Bear,
    Pcse,
    Random,
    EpsGreedy,
    MaxEntropy,
    Ucb,
    UniformGenerative,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 7] = [
        StrategyKind::Bear,
        StrategyKind::Pcse,
        StrategyKind::Random,
        StrategyKind::EpsGreedy,
        StrategyKind::MaxEntropy,
        StrategyKind::Ucb,
        StrategyKind::UniformGenerative,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Bear => "bear",
            StrategyKind::Pcse => "pcse",
            StrategyKind::Random => "random",
            StrategyKind::EpsGreedy => "eps-greedy",
            StrategyKind::MaxEntropy => "max-entropy",
            StrategyKind::Ucb => "ucb",
            StrategyKind::UniformGenerative => "uniform",
        }
    }

    /// Strategies that pick a whole policy per iteration.
    pub fn is_policy_level(self) -> bool {
        matches!(self, StrategyKind::Bear | StrategyKind::Pcse)
    }

    /// Strategies that pick an action at every step.
    pub fn is_action_level(self) -> bool {
        matches!(self, StrategyKind::Random | StrategyKind::EpsGreedy | StrategyKind::MaxEntropy | StrategyKind::Ucb)
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = IcrlError;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        let norm = if norm == "uniform-generative" { "uniform".to_string() } else { norm };
        Self::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| IcrlError::InvalidArgument(format!("unknown strategy {s:?}; expected one of bear|pcse|random|eps-greedy|max-entropy|ucb|uniform")))
    }
}

/// Per-run strategy state.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyState {
    pub kind: StrategyKind,
    pub k: usize,
    pub eps_k: f64,
    pub last_policy: Option<Policy>,
    /// `(lambda1, lambda2)` from the latest PCSE solve.
    pub dual: (f64, f64),
    /// Running minimum of the reward-margin surrogate.
    pub r_hat: f64,
    pub pcse_fallbacks: usize,
    pub rng_stream: &'static str,
}

impl StrategyState {
    pub fn new(kind: StrategyKind, gamma: f64) -> Self {
        Self {
            kind,
            k: 0,
            eps_k: 1.0 / (1.0 - gamma),
            last_policy: None,
            dual: (0.0, 0.0),
            r_hat: f64::INFINITY,
            pcse_fallbacks: 0,
            rng_stream: "strategy",
        }
    }
}

/// Optimal policy of the MDP `(P_hat, C_k)`: explore where the width is large.
pub fn bear_policy(width: ArrayView2<f64>, est: &EstimatedProblem, gamma: f64) -> Result<Policy> {
    Ok(value_iteration(est.p_hat.view(), width, gamma, None)?.policy)
}

/// `max C / (1 - gamma)`.
pub fn bear_accuracy(width: ArrayView2<f64>, gamma: f64) -> f64 {
    width.iter().fold(0.0_f64, |m, &x| m.max(x)) / (1.0 - gamma)
}

/// `max_s [(I - gamma P_hat pi)^{-1} C_pi](s)`.
pub fn pcse_accuracy(width: ArrayView2<f64>, est: &EstimatedProblem, policy: &Policy, gamma: f64) -> Result<f64> {
    let v = policy_evaluation(est.p_hat.view(), width, policy, gamma)?.v;
    Ok(v.iter().fold(0.0_f64, |m, &x| m.max(x)))
}

/// Hoeffding-style stand-in for the reward margin of the candidate set.
/// The caller keeps the running minimum over iterations.
pub fn r_hat_surrogate(counts: &CountTable, delta: f64, r_max: f64, gamma: f64) -> f64 {
    let (s, a) = (counts.n_states(), counts.n_actions());
    let beta = |n: u64| (2.0 * log_term(s, a, n as f64, delta) / plus(n)).sqrt().min(2.0);
    let beta_p = counts.cum_sa().iter().map(|&n| beta(n)).fold(0.0, f64::max);
    let beta_pi = counts.cum_s().iter().map(|&n| beta(n)).fold(0.0, f64::max);
    let scale = gamma * r_max / ((1.0 - gamma) * (1.0 - gamma));
    2.0 * scale * beta_p + scale * beta_pi
}

/// Bounds defining the plausibly optimal candidate set, in occupancy units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcseCandidateSpec {
    /// `(1 - gamma)(mu0ᵀV^{c,*} + 4 eps_k + 2 budget)`.
    pub cost_cap: f64,
    /// `(1 - gamma)(mu0ᵀV^{r,pi_hat*} + R_hat_k)`.
    pub reward_floor: f64,
    pub r_hat_k: f64,
}

impl PcseCandidateSpec {
    /// From the optimal safe policy of the estimated problem.
    pub fn new(sol_hat: &SafeSolution, mu0: ArrayView1<f64>, gamma: f64, eps_k: f64, budget: f64, r_hat_k: f64) -> Self {
        let g1 = 1.0 - gamma;
        Self {
            cost_cap: g1 * (sol_hat.start_cost(mu0) + 4.0 * eps_k + 2.0 * budget),
            reward_floor: g1 * (sol_hat.start_reward(mu0) + r_hat_k),
            r_hat_k,
        }
    }

    /// No constraints: the Lagrangian reduces to the BEAR objective.
    pub fn unconstrained() -> Self {
        Self { cost_cap: f64::INFINITY, reward_floor: f64::NEG_INFINITY, r_hat_k: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcseConfig {
    pub b0: f64,
    pub max_steps: usize,
    pub tol: f64,
    pub lambda_init: (f64, f64),
    /// Keep `lambda1` fixed at its initial value.
    pub freeze_lambda1: bool,
    /// Keep `lambda2` fixed at its initial value.
    pub freeze_lambda2: bool,
}

impl Default for PcseConfig {
    fn default() -> Self {
        Self { b0: 1.0, max_steps: 500, tol: 1e-4, lambda_init: (0.0, 0.0), freeze_lambda1: false, freeze_lambda2: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcseFallback {
    /// Even the cost-minimising policy exceeds the cost cap.
    CostCapUnreachable,
    /// Even the reward-maximising policy stays below the reward floor.
    RewardFloorUnreachable,
    /// No best response met both constraints within tolerance.
    NoFeasibleResponse,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcseDiagnostics {
    pub lambda: (f64, f64),
    /// `<rho, c_hat> - cost_cap` of the returned policy (positive = violated).
    pub cost_violation: f64,
    /// `reward_floor - <rho, r>` of the returned policy.
    pub reward_violation: f64,
    pub dual_steps: usize,
    pub fallback: Option<PcseFallback>,
    pub spec: PcseCandidateSpec,
}

/// Dual ascent on the Lagrangian of
/// `max <rho, C> s.t. <rho, c_hat> <= cost_cap, <rho, r> >= reward_floor`
/// over occupancy measures of `(P_hat, mu0, gamma)`, with an exact best
/// response (value iteration on `C - l1 c_hat + l2 r`) at every step.
#[allow(clippy::too_many_arguments)]
pub fn pcse_policy(
    width: ArrayView2<f64>,
    est: &EstimatedProblem,
    c_hat: ArrayView2<f64>,
    reward: ArrayView2<f64>,
    mu0: ArrayView1<f64>,
    gamma: f64,
    spec: PcseCandidateSpec,
    cfg: &PcseConfig,
) -> Result<(Policy, PcseDiagnostics)> {
    let kernel = est.p_hat.view();
    let g1 = 1.0 - gamma;
    let measure = |policy: &Policy| -> Result<(f64, f64)> {
        let occ = occupancy_of_policy(kernel, mu0, gamma, policy)?;
        Ok((occ.pairing(c_hat) - spec.cost_cap, spec.reward_floor - occ.pairing(reward)))
    };
    let fallback = |reason: PcseFallback, lambda: (f64, f64), steps: usize| -> Result<(Policy, PcseDiagnostics)> {
        let policy = bear_policy(width, est, gamma)?;
        let (cv, rv) = measure(&policy)?;
        let diag = PcseDiagnostics { lambda, cost_violation: cv, reward_violation: rv, dual_steps: steps, fallback: Some(reason), spec };
        Ok((policy, diag))
    };

    if spec.cost_cap.is_finite() {
        let model = ConstrainedModel { kernel, reward, cost: c_hat, mu0, gamma, budget: 0.0, r_max: 1.0 };
        if g1 * min_attainable_cost(model)? > spec.cost_cap + cfg.tol {
            return fallback(PcseFallback::CostCapUnreachable, cfg.lambda_init, 0);
        }
    }
    if spec.reward_floor.is_finite() {
        let best = value_iteration(kernel, reward, gamma, None)?;
        if g1 * expected_start_value(mu0, best.v.view()) < spec.reward_floor - cfg.tol {
            return fallback(PcseFallback::RewardFloorUnreachable, cfg.lambda_init, 0);
        }
    }

    let (mut l1, mut l2) = cfg.lambda_init;
    let mut best: Option<(f64, Policy, f64, f64, (f64, f64))> = None;
    let mut steps = 0;
    for t in 1..=cfg.max_steps {
        steps = t;
        let g = Zip::from(width).and(c_hat).and(reward).map_collect(|&w, &c, &r| w - l1 * c + l2 * r);
        let policy = value_iteration(kernel, g.view(), gamma, None)?.policy;
        let (cv, rv) = measure(&policy)?;
        let worst = cv.max(rv).max(0.0);
        if best.as_ref().map_or(true, |b| worst < b.0) {
            best = Some((worst, policy, cv, rv, (l1, l2)));
        }
        if worst <= cfg.tol {
            break;
        }
        let step = cfg.b0 / (t as f64).powf(0.75);
        if !cfg.freeze_lambda1 {
            l1 = (l1 + step * cv).max(0.0);
        }
        if !cfg.freeze_lambda2 {
            l2 = (l2 + step * rv).max(0.0);
        }
    }
    match best {
        Some((worst, policy, cv, rv, lambda)) if worst <= cfg.tol => {
            let diag = PcseDiagnostics { lambda, cost_violation: cv, reward_violation: rv, dual_steps: steps, fallback: None, spec };
            Ok((policy, diag))
        }
        _ => fallback(PcseFallback::NoFeasibleResponse, (l1, l2), steps),
    }
}

/// Action of an action-level baseline at state `s`.
///
/// `k` is the 1-based iteration number (eps-greedy explores with
/// probability `1/sqrt(k)`); `bear_q` is the exploitation target of
/// eps-greedy and is ignored by the other kinds.
pub fn baseline_action<R: Rng + ?Sized>(
    kind: StrategyKind,
    s: usize,
    counts_sa: ArrayView2<u64>,
    k: usize,
    bear_q: Option<ArrayView2<f64>>,
    rng: &mut R,
) -> Result<usize> {
    let n_actions = counts_sa.ncols();
    if s >= counts_sa.nrows() {
        return Err(IcrlError::OutOfRange(format!("state {s}")));
    }
    let row = counts_sa.row(s);
    match kind {
        StrategyKind::Random => Ok(rng.gen_range(0..n_actions)),
        StrategyKind::EpsGreedy => {
            let q = bear_q.ok_or_else(|| IcrlError::InvalidArgument("eps-greedy needs the BEAR action values".into()))?;
            let eps = 1.0 / (k.max(1) as f64).sqrt();
            if rng.gen::<f64>() < eps {
                Ok(rng.gen_range(0..n_actions))
            } else {
                Ok(argmax_lowest(q.row(s).iter().copied()))
            }
        }
        StrategyKind::MaxEntropy => Ok(argmax_lowest(row.iter().map(|&n| -(n as f64)))),
        StrategyKind::Ucb => {
            let ln_n = plus(row.sum()).ln();
            Ok(argmax_lowest(row.iter().map(|&n| if n == 0 { f64::INFINITY } else { (2.0 * ln_n / n as f64).sqrt() })))
        }
        other => Err(IcrlError::InvalidArgument(format!("{other} is not an action-level strategy"))),
    }
}

fn argmax_lowest(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// Samples collected by one round of uniform generative sampling.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GenerativeRound {
    pub transitions: Vec<(usize, usize, usize)>,
    pub expert_obs: Vec<(usize, usize)>,
}

/// `ceil(n_max / (S A))` next-state draws at every pair plus one expert
/// query at every live state.
pub fn uniform_generative_round<R1: Rng + ?Sized, R2: Rng + ?Sized>(
    env: &GridEnv,
    n_max: usize,
    env_rng: &mut R1,
    expert: &SafeSolution,
    expert_rng: &mut R2,
) -> Result<GenerativeRound> {
    if !env.is_generative() {
        return Err(IcrlError::GenerativeDisabled);
    }
    let (s, a) = (env.cmdp.n_states(), env.cmdp.n_actions());
    let per_pair = n_max.div_ceil(s * a).max(1);
    let mut round = GenerativeRound::default();
    for si in 0..s {
        for ai in 0..a {
            for _ in 0..per_pair {
                round.transitions.push((si, ai, env.query(si, ai, env_rng)?));
            }
        }
    }
    for si in (0..s).filter(|&si| !expert.is_dead(si)) {
        round.expert_obs.push((si, sample_action(&expert.policy, si, expert_rng)));
    }
    Ok(round)
}
