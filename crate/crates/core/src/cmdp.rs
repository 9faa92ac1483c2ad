//! Tabular CMDP model plus the exact evaluation machinery shared by every
//! other module: policy evaluation, value iteration, advantages and
//! discounted occupancy measures.
//!
//! Kernels are stored as dense `[S, A, S']` arrays. Solvers accept
//! substochastic rows (estimated kernels leave unvisited pairs at zero) and
//! never renormalize them.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2, Array3, ArrayView1, ArrayView2, ArrayView3, Axis};

use crate::error::{IcrlError, Result};

/// Row-sum tolerance for probability vectors.
pub const PROB_TOL: f64 = 1e-9;

/// Largest `S * A` solved by dense factorization; bigger instances iterate.
pub const DIRECT_SOLVE_LIMIT: usize = 4096;

const ITER_TOL: f64 = 1e-10;
const ITER_CAP: usize = 100_000;

/// A fully specified tabular constrained MDP.
#[derive(Debug, Clone, PartialEq)]
pub struct Cmdp {
    transition: Array3<f64>,
    reward: Array2<f64>,
    cost: Array2<f64>,
    budget: f64,
    mu0: Array1<f64>,
    gamma: f64,
    r_max: f64,
    c_max: f64,
}

#[allow(clippy::too_many_arguments)]
impl Cmdp {
    pub fn new(
        transition: Array3<f64>,
        reward: Array2<f64>,
        cost: Array2<f64>,
        budget: f64,
        mu0: Array1<f64>,
        gamma: f64,
        r_max: f64,
        c_max: f64,
    ) -> Result<Self> {
        let (s, a, s2) = transition.dim();
        if s == 0 || a == 0 {
            return Err(IcrlError::InvalidModel("need at least one state and one action".into()));
        }
        if s2 != s {
            return Err(IcrlError::Shape(format!("transition is {s}x{a}x{s2}")));
        }
        if reward.dim() != (s, a) || cost.dim() != (s, a) {
            return Err(IcrlError::Shape(format!(
                "reward {:?} / cost {:?} do not match ({s}, {a})",
                reward.dim(),
                cost.dim()
            )));
        }
        if mu0.len() != s {
            return Err(IcrlError::Shape(format!("mu0 has {} entries, expected {s}", mu0.len())));
        }
        check_finite(transition.iter(), "transition")?;
        check_finite(reward.iter(), "reward")?;
        check_finite(cost.iter(), "cost")?;
        check_finite(mu0.iter(), "mu0")?;
        if !(0.0..1.0).contains(&gamma) {
            return Err(IcrlError::InvalidModel(format!("gamma {gamma} outside [0, 1)")));
        }
        if !(r_max > 0.0 && c_max > 0.0) {
            return Err(IcrlError::InvalidModel("r_max and c_max must be positive".into()));
        }
        if !(budget >= 0.0) {
            return Err(IcrlError::InvalidModel(format!("budget {budget} is negative")));
        }
        for si in 0..s {
            for ai in 0..a {
                let row = transition.slice(ndarray::s![si, ai, ..]);
                if row.iter().any(|&p| p < 0.0) || (row.sum() - 1.0).abs() > PROB_TOL {
                    return Err(IcrlError::InvalidModel(format!(
                        "transition row ({si}, {ai}) is not a probability vector"
                    )));
                }
            }
        }
        if reward.iter().any(|&r| r < 0.0 || r > r_max) {
            return Err(IcrlError::InvalidModel("reward outside [0, r_max]".into()));
        }
        if cost.iter().any(|&c| c < 0.0 || c > c_max) {
            return Err(IcrlError::InvalidModel("cost outside [0, c_max]".into()));
        }
        if mu0.iter().any(|&p| p < 0.0) || (mu0.sum() - 1.0).abs() > PROB_TOL {
            return Err(IcrlError::InvalidModel("mu0 is not a probability vector".into()));
        }
        Ok(Self { transition, reward, cost, budget, mu0, gamma, r_max, c_max })
    }

    pub fn n_states(&self) -> usize {
        self.reward.nrows()
    }

    pub fn n_actions(&self) -> usize {
        self.reward.ncols()
    }

    pub fn transition(&self) -> &Array3<f64> {
        &self.transition
    }

    pub fn reward(&self) -> &Array2<f64> {
        &self.reward
    }

    pub fn cost(&self) -> &Array2<f64> {
        &self.cost
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn mu0(&self) -> &Array1<f64> {
        &self.mu0
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn c_max(&self) -> f64 {
        self.c_max
    }

    /// Same dynamics and reward with a different cost function (`M ∪ c'`).
    pub fn with_cost(&self, cost: Array2<f64>) -> Result<Self> {
        Self::new(
            self.transition.clone(),
            self.reward.clone(),
            cost,
            self.budget,
            self.mu0.clone(),
            self.gamma,
            self.r_max,
            self.c_max,
        )
    }

    pub fn with_budget(&self, budget: f64) -> Result<Self> {
        let mut out = self.clone();
        if !(budget >= 0.0) {
            return Err(IcrlError::InvalidModel(format!("budget {budget} is negative")));
        }
        out.budget = budget;
        Ok(out)
    }

    pub fn evaluate_reward(&self, policy: &Policy) -> Result<ValuePair> {
        self.check_policy(policy)?;
        evaluate_trusted(self.transition.view(), self.reward.view(), policy.probs().view(), self.gamma)
    }

    pub fn evaluate_cost(&self, policy: &Policy) -> Result<ValuePair> {
        self.check_policy(policy)?;
        evaluate_trusted(self.transition.view(), self.cost.view(), policy.probs().view(), self.gamma)
    }

    fn check_policy(&self, policy: &Policy) -> Result<()> {
        if policy.probs().dim() != self.reward.dim() {
            return Err(IcrlError::Shape(format!("policy {:?} vs {:?}", policy.probs().dim(), self.reward.dim())));
        }
        Ok(())
    }

    pub fn occupancy(&self, policy: &Policy) -> Result<OccupancyMeasure> {
        occupancy_of_policy(self.transition.view(), self.mu0.view(), self.gamma, policy)
    }
}

/// Row-stochastic state-to-action distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    probs: Array2<f64>,
}

impl Policy {
    pub fn new(probs: Array2<f64>) -> Result<Self> {
        check_finite(probs.iter(), "policy")?;
        for (s, row) in probs.axis_iter(Axis(0)).enumerate() {
            if row.iter().any(|&p| p < 0.0) || (row.sum() - 1.0).abs() > PROB_TOL {
                return Err(IcrlError::InvalidModel(format!("policy row {s} is not a distribution")));
            }
        }
        if probs.ncols() == 0 {
            return Err(IcrlError::InvalidModel("policy has no actions".into()));
        }
        Ok(Self { probs })
    }

    /// One-hot policy from a per-state action list.
    pub fn deterministic(actions: &[usize], n_actions: usize) -> Result<Self> {
        let mut probs = Array2::zeros((actions.len(), n_actions));
        for (s, &a) in actions.iter().enumerate() {
            if a >= n_actions {
                return Err(IcrlError::OutOfRange(format!("action {a} at state {s}")));
            }
            probs[[s, a]] = 1.0;
        }
        Ok(Self { probs })
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        Self { probs: Array2::from_elem((n_states, n_actions), 1.0 / n_actions as f64) }
    }

    pub fn probs(&self) -> &Array2<f64> {
        &self.probs
    }

    pub fn n_states(&self) -> usize {
        self.probs.nrows()
    }

    pub fn n_actions(&self) -> usize {
        self.probs.ncols()
    }

    pub fn is_deterministic(&self) -> bool {
        self.probs
            .axis_iter(Axis(0))
            .all(|row| row.iter().filter(|&&p| p > 0.0).count() == 1 && row.iter().any(|&p| p == 1.0))
    }

    /// The chosen action at `s` when the row is one-hot.
    pub fn action(&self, s: usize) -> Option<usize> {
        let row = self.probs.row(s);
        let hot = row.iter().position(|&p| p == 1.0)?;
        row.iter().enumerate().all(|(a, &p)| a == hot || p == 0.0).then_some(hot)
    }
}

/// State value, action value and advantage of one policy for one signal.
#[derive(Debug, Clone, PartialEq)]
pub struct ValuePair {
    pub v: Array1<f64>,
    pub q: Array2<f64>,
    pub adv: Array2<f64>,
}

/// Discounted, normalized state-action visitation distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyMeasure {
    pub rho: Array2<f64>,
}

impl OccupancyMeasure {
    pub fn pairing(&self, g: ArrayView2<f64>) -> f64 {
        (&self.rho * &g).sum()
    }

    pub fn state_mass(&self) -> Array1<f64> {
        self.rho.sum_axis(Axis(1))
    }
}

/// Optimal values and the lowest-index greedy policy from [`value_iteration`].
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalSolution {
    pub v: Array1<f64>,
    pub q: Array2<f64>,
    pub policy: Policy,
    /// States whose every action is masked; their value is pinned to zero.
    pub dead_states: Vec<usize>,
    /// Bellman optimality residual over unmasked actions at live states.
    pub residual: f64,
}

impl OptimalSolution {
    pub fn is_dead(&self, s: usize) -> bool {
        self.dead_states.binary_search(&s).is_ok()
    }
}

fn check_finite<'a>(mut it: impl Iterator<Item = &'a f64>, what: &'static str) -> Result<()> {
    if it.all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(IcrlError::NonFinite(what))
    }
}

fn check_kernel(kernel: ArrayView3<f64>, s: usize, a: usize) -> Result<()> {
    if kernel.dim() != (s, a, s) {
        return Err(IcrlError::Shape(format!("kernel {:?} vs ({s}, {a}, {s})", kernel.dim())));
    }
    match kernel.as_slice() {
        Some(flat) if s > 0 => flat.chunks_exact(s).try_for_each(|row| check_row(row.iter().copied())),
        _ => kernel.lanes(Axis(2)).into_iter().try_for_each(|row| check_row(row.iter().copied())),
    }
}

fn check_row(row: impl Iterator<Item = f64>) -> Result<()> {
    let mut sum = 0.0;
    let mut bad = false;
    for p in row {
        // `!(p >= 0.0)` also catches NaN
        bad |= !(p >= 0.0);
        sum += p;
    }
    if bad || !sum.is_finite() {
        return Err(if sum.is_nan() || sum.is_infinite() {
            IcrlError::NonFinite("kernel")
        } else {
            IcrlError::InvalidModel("kernel row is not substochastic".into())
        });
    }
    if sum > 1.0 + PROB_TOL {
        return Err(IcrlError::InvalidModel("kernel row is not substochastic".into()));
    }
    Ok(())
}

fn check_gamma(gamma: f64) -> Result<()> {
    if (0.0..1.0).contains(&gamma) {
        Ok(())
    } else {
        Err(IcrlError::InvalidModel(format!("gamma {gamma} outside [0, 1)")))
    }
}

/// `P_pi[s, s'] = sum_a pi(a|s) P(s'|s,a)`.
pub(crate) fn state_kernel(kernel: ArrayView3<f64>, probs: ArrayView2<f64>) -> Array2<f64> {
    let (s, a, _) = kernel.dim();
    let mut p_pi = Array2::zeros((s, s));
    if let (Some(k), Some(out)) = (kernel.as_slice(), p_pi.as_slice_mut()) {
        for (si, out_row) in out.chunks_exact_mut(s).enumerate() {
            for ai in 0..a {
                let w = probs[[si, ai]];
                if w != 0.0 {
                    let row = &k[(si * a + ai) * s..(si * a + ai + 1) * s];
                    for (o, &p) in out_row.iter_mut().zip(row) {
                        *o += w * p;
                    }
                }
            }
        }
        return p_pi;
    }
    for si in 0..s {
        let mut out = p_pi.row_mut(si);
        for ai in 0..a {
            let w = probs[[si, ai]];
            if w != 0.0 {
                out.scaled_add(w, &kernel.slice(ndarray::s![si, ai, ..]));
            }
        }
    }
    p_pi
}

/// `(P V)[s, a] = sum_s' P(s'|s,a) V(s')`.
pub(crate) fn expect_next(kernel: ArrayView3<f64>, v: ArrayView1<f64>) -> Array2<f64> {
    let (s, a, _) = kernel.dim();
    if let (Some(k), Some(vs)) = (kernel.as_slice(), v.as_slice()) {
        if s > 0 {
            let out: Vec<f64> = k.chunks_exact(s).map(|row| row.iter().zip(vs).map(|(p, x)| p * x).sum()).collect();
            return Array2::from_shape_vec((s, a), out).expect("s * a entries");
        }
    }
    Array2::from_shape_fn((s, a), |(si, ai)| kernel.slice(ndarray::s![si, ai, ..]).dot(&v))
}

/// Solves `(I - gamma * M) x = b` where `M` is substochastic (or its transpose).
fn solve_discounted(m: &Array2<f64>, b: &Array1<f64>, gamma: f64, transpose: bool, direct: bool) -> Result<Array1<f64>> {
    let n = b.len();
    if direct {
        let sys = DMatrix::from_fn(n, n, |i, j| {
            let mij = if transpose { m[[j, i]] } else { m[[i, j]] };
            let id = if i == j { 1.0 } else { 0.0 };
            id - gamma * mij
        });
        let rhs = DVector::from_iterator(n, b.iter().copied());
        let x = sys
            .lu()
            .solve(&rhs)
            .ok_or_else(|| IcrlError::InvalidModel("singular discounted system".into()))?;
        return Ok(Array1::from_iter(x.iter().copied()));
    }
    // Gauss-Seidel sweeps; a gamma-contraction in the max norm.
    let mut x = b.clone();
    for sweep in 0..ITER_CAP {
        let mut delta: f64 = 0.0;
        for i in 0..n {
            let mut acc = b[i];
            for j in 0..n {
                let mij = if transpose { m[[j, i]] } else { m[[i, j]] };
                if mij != 0.0 {
                    acc += gamma * mij * x[j];
                }
            }
            delta = delta.max((acc - x[i]).abs());
            x[i] = acc;
        }
        if delta <= ITER_TOL {
            return Ok(x);
        }
        if sweep + 1 == ITER_CAP {
            return Err(IcrlError::NotConverged { sweeps: ITER_CAP, residual: delta });
        }
    }
    unreachable!()
}

/// Evaluates `policy` for signal `g`: solves `Q = g + gamma * P (pi Q)`.
pub fn policy_evaluation(kernel: ArrayView3<f64>, g: ArrayView2<f64>, policy: &Policy, gamma: f64) -> Result<ValuePair> {
    evaluate_probs(kernel, g, policy.probs().view(), gamma)
}

/// Like [`policy_evaluation`] but accepts substochastic policy rows, as
/// produced by the empirical expert estimate at unvisited states. A zero
/// row pins `V(s) = 0`.
pub fn evaluate_probs(kernel: ArrayView3<f64>, g: ArrayView2<f64>, probs: ArrayView2<f64>, gamma: f64) -> Result<ValuePair> {
    let (s, a) = g.dim();
    evaluate_with_limit(kernel, g, probs, gamma, s * a <= DIRECT_SOLVE_LIMIT)
}

pub(crate) fn evaluate_with_limit(
    kernel: ArrayView3<f64>,
    g: ArrayView2<f64>,
    probs: ArrayView2<f64>,
    gamma: f64,
    direct: bool,
) -> Result<ValuePair> {
    let (s, a) = g.dim();
    check_gamma(gamma)?;
    check_kernel(kernel, s, a)?;
    check_finite(g.iter(), "signal")?;
    check_finite(probs.iter(), "policy")?;
    if probs.dim() != (s, a) {
        return Err(IcrlError::Shape(format!("policy {:?} vs ({s}, {a})", probs.dim())));
    }
    evaluate_unchecked(kernel, g, probs, gamma, direct)
}

/// Evaluation of inputs the caller has already validated.
pub(crate) fn evaluate_trusted(kernel: ArrayView3<f64>, g: ArrayView2<f64>, probs: ArrayView2<f64>, gamma: f64) -> Result<ValuePair> {
    let (s, a) = g.dim();
    evaluate_unchecked(kernel, g, probs, gamma, s * a <= DIRECT_SOLVE_LIMIT)
}

fn evaluate_unchecked(kernel: ArrayView3<f64>, g: ArrayView2<f64>, probs: ArrayView2<f64>, gamma: f64, direct: bool) -> Result<ValuePair> {
    let p_pi = state_kernel(kernel, probs);
    let g_pi = (&probs * &g).sum_axis(Axis(1));
    let v = solve_discounted(&p_pi, &g_pi, gamma, false, direct)?;
    let q = &g + &(expect_next(kernel, v.view()) * gamma);
    let adv = &q - &v.view().insert_axis(Axis(1));
    Ok(ValuePair { v, q, adv })
}

/// Max-norm residual of `Q = g + gamma * P (pi Q)`.
pub fn bellman_residual(kernel: ArrayView3<f64>, g: ArrayView2<f64>, probs: ArrayView2<f64>, gamma: f64, q: ArrayView2<f64>) -> f64 {
    let v = (&probs * &q).sum_axis(Axis(1));
    let rhs = &g + &(expect_next(kernel, v.view()) * gamma);
    (&rhs - &q).iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Optimal control of `g` under an optional action mask (`true` = forbidden).
///
/// Small instances run Howard policy iteration with exact evaluation, larger
/// ones plain value-iteration sweeps. The returned policy is greedy with
/// respect to the final action values, ties going to the lowest action index.
pub fn value_iteration(
    kernel: ArrayView3<f64>,
    g: ArrayView2<f64>,
    gamma: f64,
    mask: Option<ArrayView2<bool>>,
) -> Result<OptimalSolution> {
    let (s, a) = g.dim();
    value_iteration_with_limit(kernel, g, gamma, mask, s * a <= DIRECT_SOLVE_LIMIT)
}

fn tie_tol(best: f64) -> f64 {
    1e-10 * best.abs().max(1.0)
}

pub(crate) fn value_iteration_with_limit(
    kernel: ArrayView3<f64>,
    g: ArrayView2<f64>,
    gamma: f64,
    mask: Option<ArrayView2<bool>>,
    direct: bool,
) -> Result<OptimalSolution> {
    let (s, a) = g.dim();
    check_gamma(gamma)?;
    check_kernel(kernel, s, a)?;
    check_finite(g.iter(), "signal")?;
    if let Some(m) = mask {
        if m.dim() != (s, a) {
            return Err(IcrlError::Shape(format!("mask {:?} vs ({s}, {a})", m.dim())));
        }
    }
    let allowed = |si: usize, ai: usize| mask.map_or(true, |m| !m[[si, ai]]);
    let dead: Vec<usize> = (0..s).filter(|&si| (0..a).all(|ai| !allowed(si, ai))).collect();
    let is_dead = |si: usize| dead.binary_search(&si).is_ok();

    let greedy = |q: &Array2<f64>, si: usize| -> (usize, f64) {
        let best = (0..a).filter(|&ai| allowed(si, ai)).map(|ai| q[[si, ai]]).fold(f64::NEG_INFINITY, f64::max);
        let tol = tie_tol(best);
        let act = (0..a).find(|&ai| allowed(si, ai) && q[[si, ai]] >= best - tol).unwrap_or(0);
        (act, best)
    };

    let (v, q) = if direct {
        let g_owned = g.to_owned();
        let mut actions: Vec<usize> = (0..s).map(|si| if is_dead(si) { 0 } else { greedy(&g_owned, si).0 }).collect();
        let mut probs = Array2::<f64>::zeros((s, a));
        let mut result = None;
        for _ in 0..10_000 {
            probs.fill(0.0);
            for si in 0..s {
                if !is_dead(si) {
                    probs[[si, actions[si]]] = 1.0;
                }
            }
            let vp = evaluate_unchecked(kernel, g, probs.view(), gamma, true)?;
            let mut changed = false;
            for si in 0..s {
                if is_dead(si) {
                    continue;
                }
                let (best_a, best) = greedy(&vp.q, si);
                if vp.q[[si, actions[si]]] < best - tie_tol(best) {
                    actions[si] = best_a;
                    changed = true;
                }
            }
            if !changed {
                result = Some((vp.v, vp.q));
                break;
            }
        }
        result.ok_or(IcrlError::NotConverged { sweeps: 10_000, residual: f64::NAN })?
    } else {
        let mut v = Array1::<f64>::zeros(s);
        let mut sweeps = 0;
        loop {
            let q = &g + &(expect_next(kernel, v.view()) * gamma);
            let mut delta: f64 = 0.0;
            let mut next = Array1::zeros(s);
            for si in 0..s {
                if !is_dead(si) {
                    next[si] = greedy(&q, si).1;
                    delta = delta.max((next[si] - v[si]).abs());
                }
            }
            v = next;
            sweeps += 1;
            if delta <= ITER_TOL {
                break;
            }
            if sweeps >= ITER_CAP {
                return Err(IcrlError::NotConverged { sweeps, residual: delta });
            }
        }
        let q = &g + &(expect_next(kernel, v.view()) * gamma);
        (v, q)
    };

    let mut actions = vec![0usize; s];
    let mut residual: f64 = 0.0;
    for si in 0..s {
        if is_dead(si) {
            continue;
        }
        let (act, best) = greedy(&q, si);
        actions[si] = act;
        residual = residual.max((best - v[si]).abs());
    }
    let policy = Policy::deterministic(&actions, a)?;
    Ok(OptimalSolution { v, q, policy, dead_states: dead, residual })
}

/// Discounted normalized occupancy of `policy` from start distribution `mu0`.
pub fn occupancy_of_policy(kernel: ArrayView3<f64>, mu0: ArrayView1<f64>, gamma: f64, policy: &Policy) -> Result<OccupancyMeasure> {
    occupancy_of_probs(kernel, mu0, gamma, policy.probs().view())
}

pub(crate) fn occupancy_of_probs(kernel: ArrayView3<f64>, mu0: ArrayView1<f64>, gamma: f64, probs: ArrayView2<f64>) -> Result<OccupancyMeasure> {
    let (s, a) = probs.dim();
    check_gamma(gamma)?;
    check_kernel(kernel, s, a)?;
    if mu0.len() != s {
        return Err(IcrlError::Shape(format!("mu0 has {} entries, expected {s}", mu0.len())));
    }
    let p_pi = state_kernel(kernel, probs);
    let b = mu0.mapv(|m| (1.0 - gamma) * m);
    let d = solve_discounted(&p_pi, &b, gamma, true, s * a <= DIRECT_SOLVE_LIMIT)?;
    let rho = &probs * &d.view().insert_axis(Axis(1));
    Ok(OccupancyMeasure { rho })
}

/// Max over states of the discounted flow-equation violation of `rho`.
pub fn bellman_flow_residual(rho: ArrayView2<f64>, kernel: ArrayView3<f64>, mu0: ArrayView1<f64>, gamma: f64) -> f64 {
    let (s, a) = rho.dim();
    let mut inflow = Array1::<f64>::zeros(s);
    for sp in 0..s {
        for ap in 0..a {
            let w = rho[[sp, ap]];
            if w != 0.0 {
                inflow.scaled_add(w, &kernel.slice(ndarray::s![sp, ap, ..]));
            }
        }
    }
    let mass = rho.sum_axis(Axis(1));
    (0..s)
        .map(|si| (mass[si] - (1.0 - gamma) * mu0[si] - gamma * inflow[si]).abs())
        .fold(0.0, f64::max)
}

/// `pi(a|s) = rho(s,a) / sum_a rho(s,a)`; zero-mass states get the uniform row.
pub fn policy_extraction(rho: ArrayView2<f64>) -> Result<Policy> {
    check_finite(rho.iter(), "occupancy")?;
    if rho.iter().any(|&x| x < 0.0) {
        return Err(IcrlError::InvalidArgument("occupancy has negative entries".into()));
    }
    let (s, a) = rho.dim();
    let mut probs = Array2::zeros((s, a));
    for si in 0..s {
        let mass = rho.row(si).sum();
        if mass > 0.0 {
            probs.row_mut(si).assign(&rho.row(si).mapv(|x| x / mass));
        } else {
            probs.row_mut(si).fill(1.0 / a as f64);
        }
    }
    Policy::new(probs)
}

/// Right-hand side of the action-value simulation identity
/// `Q - Q_hat = gamma (I - gamma P pi)^{-1} (P - P_hat) V_hat`.
pub fn simulation_q_gap(
    p: ArrayView3<f64>,
    p_hat: ArrayView3<f64>,
    policy: &Policy,
    v_hat: ArrayView1<f64>,
    gamma: f64,
) -> Result<Array2<f64>> {
    let diff = (expect_next(p, v_hat) - expect_next(p_hat, v_hat)) * gamma;
    Ok(policy_evaluation(p, diff.view(), policy, gamma)?.q)
}

/// `mu0^T v`.
pub fn expected_start_value(mu0: ArrayView1<f64>, v: ArrayView1<f64>) -> f64 {
    mu0.dot(&v)
}
