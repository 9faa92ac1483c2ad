//! Forward constrained RL: the optimal safe policy of a known-cost CMDP.
//!
//! Hard constraints (`budget == 0`) are solved exactly by masking the least
//! fixed point of "unsafe" pairs and running value iteration on the reward.
//! Soft constraints search deterministic policies by bisection on a single
//! Lagrange multiplier.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, ArrayView3};

use crate::cmdp::{evaluate_probs, evaluate_trusted, expected_start_value, value_iteration, Cmdp, Policy};
use crate::error::{IcrlError, Result};

const FEAS_TOL: f64 = 1e-9;
const HARD_TOL: f64 = 1e-12;
const LAMBDA_CAP: f64 = (1u64 << 30) as f64;

/// Borrowed view of a constrained problem. Unlike [`Cmdp`] the kernel may
/// be substochastic, so estimated models (`M_hat ∪ c_hat`) can be solved.
#[derive(Debug, Clone, Copy)]
pub struct ConstrainedModel<'a> {
    pub kernel: ArrayView3<'a, f64>,
    pub reward: ArrayView2<'a, f64>,
    pub cost: ArrayView2<'a, f64>,
    pub mu0: ArrayView1<'a, f64>,
    pub gamma: f64,
    pub budget: f64,
    pub r_max: f64,
}

impl<'a> From<&'a Cmdp> for ConstrainedModel<'a> {
    fn from(m: &'a Cmdp) -> Self {
        Self {
            kernel: m.transition().view(),
            reward: m.reward().view(),
            cost: m.cost().view(),
            mu0: m.mu0().view(),
            gamma: m.gamma(),
            budget: m.budget(),
            r_max: m.r_max(),
        }
    }
}

/// Optimal safe policy and its values.
#[derive(Debug, Clone, PartialEq)]
pub struct SafeSolution {
    pub policy: Policy,
    pub v_reward: Array1<f64>,
    pub v_cost: Array1<f64>,
    /// States with no safe action. The expert is undefined there.
    pub dead_states: Vec<usize>,
    /// Dual weight of the cost constraint; `None` for hard constraints.
    pub lambda_star: Option<f64>,
}

impl SafeSolution {
    pub fn is_dead(&self, s: usize) -> bool {
        self.dead_states.binary_search(&s).is_ok()
    }

    /// Expert action at `s`, an error at dead states.
    pub fn expert_action(&self, s: usize) -> Result<usize> {
        if self.is_dead(s) {
            return Err(IcrlError::DeadState(s));
        }
        self.policy.action(s).ok_or_else(|| IcrlError::InvalidArgument(format!("policy is not deterministic at {s}")))
    }

    pub fn start_reward(&self, mu0: ArrayView1<f64>) -> f64 {
        expected_start_value(mu0, self.v_reward.view())
    }

    pub fn start_cost(&self, mu0: ArrayView1<f64>) -> f64 {
        expected_start_value(mu0, self.v_cost.view())
    }
}

/// Forbidden pairs under a hard constraint: `(s, a)` is masked iff it has
/// positive cost or can reach, with positive probability, a state whose
/// actions are all masked. Iterated to the least fixed point.
pub fn unsafe_mask(kernel: ArrayView3<f64>, cost: ArrayView2<f64>) -> Array2<bool> {
    let (s, a) = cost.dim();
    let mut mask = cost.mapv(|c| c > 0.0);
    let mut dead = vec![false; s];
    loop {
        let mut grew = false;
        for si in 0..s {
            if !dead[si] && (0..a).all(|ai| mask[[si, ai]]) {
                dead[si] = true;
                grew = true;
            }
        }
        for si in 0..s {
            for ai in 0..a {
                if mask[[si, ai]] {
                    continue;
                }
                if (0..s).any(|sp| dead[sp] && kernel[[si, ai, sp]] > 0.0) {
                    mask[[si, ai]] = true;
                    grew = true;
                }
            }
        }
        if !grew {
            return mask;
        }
    }
}

pub fn unsafe_closure(cmdp: &Cmdp) -> Array2<bool> {
    unsafe_mask(cmdp.transition().view(), cmdp.cost().view())
}

pub fn solve_cmdp(cmdp: &Cmdp) -> Result<SafeSolution> {
    solve_constrained(ConstrainedModel::from(cmdp))
}

/// Solves `max mu0ᵀV^r s.t. mu0ᵀV^c <= budget` over deterministic policies.
pub fn solve_constrained(m: ConstrainedModel<'_>) -> Result<SafeSolution> {
    if m.budget == 0.0 {
        solve_hard(m)
    } else {
        solve_soft(m)
    }
}

fn evaluate_pair(m: &ConstrainedModel<'_>, policy: &Policy) -> Result<(Array1<f64>, Array1<f64>)> {
    // one validated call covers the kernel shared by both evaluations
    let vc = evaluate_probs(m.kernel, m.cost, policy.probs().view(), m.gamma)?.v;
    let vr = evaluate_trusted(m.kernel, m.reward, policy.probs().view(), m.gamma)?.v;
    Ok((vr, vc))
}

/// Smallest attainable `mu0ᵀV^c` over deterministic policies.
pub fn min_attainable_cost(m: ConstrainedModel<'_>) -> Result<f64> {
    let neg = m.cost.mapv(|c| -c);
    let sol = value_iteration(m.kernel, neg.view(), m.gamma, None)?;
    Ok(-expected_start_value(m.mu0, sol.v.view()))
}

fn solve_hard(m: ConstrainedModel<'_>) -> Result<SafeSolution> {
    let mask = unsafe_mask(m.kernel, m.cost);
    let sol = value_iteration(m.kernel, m.reward, m.gamma, Some(mask.view()))?;
    if sol.dead_states.iter().any(|&s| m.mu0[s] > 0.0) {
        return Err(IcrlError::Infeasible { min_cost: min_attainable_cost(m)? });
    }
    let (v_reward, v_cost) = evaluate_pair(&m, &sol.policy)?;
    let start_cost = expected_start_value(m.mu0, v_cost.view());
    if start_cost > HARD_TOL {
        return Err(IcrlError::Infeasible { min_cost: min_attainable_cost(m)? });
    }
    Ok(SafeSolution { policy: sol.policy, v_reward, v_cost, dead_states: sol.dead_states, lambda_star: None })
}

struct Candidate {
    policy: Policy,
    v_reward: Array1<f64>,
    v_cost: Array1<f64>,
    jr: f64,
    jc: f64,
}

fn scalarized(m: &ConstrainedModel<'_>, lambda: f64) -> Result<Candidate> {
    let g = &m.reward - &(&m.cost * lambda);
    let sol = value_iteration(m.kernel, g.view(), m.gamma, None)?;
    let (v_reward, v_cost) = evaluate_pair(m, &sol.policy)?;
    let jr = expected_start_value(m.mu0, v_reward.view());
    let jc = expected_start_value(m.mu0, v_cost.view());
    Ok(Candidate { policy: sol.policy, v_reward, v_cost, jr, jc })
}

fn solve_soft(m: ConstrainedModel<'_>) -> Result<SafeSolution> {
    let feasible = |c: &Candidate| c.jc <= m.budget + FEAS_TOL;
    let mut best: Option<Candidate> = None;
    let keep = |c: Candidate, best: &mut Option<Candidate>| {
        let better = match best {
            None => true,
            Some(b) => c.jr > b.jr + FEAS_TOL || ((c.jr - b.jr).abs() <= FEAS_TOL && c.jc < b.jc),
        };
        if better {
            *best = Some(c);
        }
    };

    let first = scalarized(&m, 0.0)?;
    if feasible(&first) {
        return Ok(SafeSolution {
            policy: first.policy,
            v_reward: first.v_reward,
            v_cost: first.v_cost,
            dead_states: Vec::new(),
            lambda_star: Some(0.0),
        });
    }

    let min_pos_cost = m.cost.iter().copied().filter(|&c| c > 0.0).fold(f64::INFINITY, f64::min);
    let mut hi = m.r_max / ((1.0 - m.gamma) * min_pos_cost);
    loop {
        let cand = scalarized(&m, hi)?;
        if feasible(&cand) {
            keep(cand, &mut best);
            break;
        }
        hi *= 2.0;
        if hi > LAMBDA_CAP {
            return Err(IcrlError::Infeasible { min_cost: min_attainable_cost(m)? });
        }
    }
    // The feasible end of the bracket resolves ties toward the lower-cost
    // action, since it carries the larger multiplier.
    let mut lo = 0.0;
    for _ in 0..100 {
        if hi - lo <= 1e-12 * hi.max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let cand = scalarized(&m, mid)?;
        if feasible(&cand) {
            hi = mid;
            keep(cand, &mut best);
        } else {
            lo = mid;
        }
    }
    let best = best.expect("bracket holds a feasible candidate");
    Ok(SafeSolution {
        policy: best.policy,
        v_reward: best.v_reward,
        v_cost: best.v_cost,
        dead_states: Vec::new(),
        lambda_star: Some(hi),
    })
}

/// Exhaustive optimum over deterministic policies, used as a test oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceResult {
    /// `None` when no deterministic policy meets the budget.
    pub value: Option<f64>,
    pub policy: Option<Policy>,
    pub min_cost: f64,
}

pub const BRUTE_FORCE_MAX_STATES: usize = 6;
pub const BRUTE_FORCE_MAX_ACTIONS: usize = 4;

pub fn brute_force_cmdp(cmdp: &Cmdp) -> Result<BruteForceResult> {
    let (s, a) = (cmdp.n_states(), cmdp.n_actions());
    if s > BRUTE_FORCE_MAX_STATES || a > BRUTE_FORCE_MAX_ACTIONS {
        return Err(IcrlError::TooLarge(format!("{s} states x {a} actions")));
    }
    let tol = if cmdp.budget() == 0.0 { HARD_TOL } else { FEAS_TOL };
    let total = a.pow(s as u32);
    let mut actions = vec![0usize; s];
    let mut best: Option<(f64, Policy)> = None;
    let mut min_cost = f64::INFINITY;
    for code in 0..total {
        let mut c = code;
        for slot in actions.iter_mut() {
            *slot = c % a;
            c /= a;
        }
        let policy = Policy::deterministic(&actions, a)?;
        let jr = expected_start_value(cmdp.mu0().view(), cmdp.evaluate_reward(&policy)?.v.view());
        let jc = expected_start_value(cmdp.mu0().view(), cmdp.evaluate_cost(&policy)?.v.view());
        min_cost = min_cost.min(jc);
        if jc <= cmdp.budget() + tol && best.as_ref().map_or(true, |(v, _)| jr > *v) {
            best = Some((jr, policy));
        }
    }
    Ok(match best {
        Some((v, p)) => BruteForceResult { value: Some(v), policy: Some(p), min_cost },
        None => BruteForceResult { value: None, policy: None, min_cost },
    })
}
