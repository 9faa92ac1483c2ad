//! Visit counting, empirical models, confidence widths and cost recovery.
//!
//! All `x^+` quantities use `max(1, x)`. Logarithms are natural.

use ndarray::{Array1, Array2, Array3, ArrayView1, ArrayView2, ArrayView3};

use crate::cmdp::{evaluate_probs, expect_next, policy_evaluation, state_kernel, Cmdp, Policy};
use crate::error::{IcrlError, Result};
use crate::solver::{solve_cmdp, solve_constrained, ConstrainedModel};

/// Advantage tolerance used when classifying a pair as constraint violating.
pub const ADV_TOL: f64 = 1e-6;

/// Tolerance on the sign conditions checked by [`feasibility_check`].
pub const FEASIBILITY_TOL: f64 = 1e-8;

/// Default floor on the minimum positive advantage entering `sigma`.
pub const DEFAULT_ADV_FLOOR: f64 = 0.05;

#[inline]
pub fn plus(n: u64) -> f64 {
    n.max(1) as f64
}

/// Transition and expert-query counters.
#[derive(Debug, Clone, PartialEq)]
pub struct CountTable {
    n_sas: Array3<u64>,
    cum_sas: Array3<u64>,
    cum_sa: Array2<u64>,
    cum_s: Array1<u64>,
    expert_sa: Array2<u64>,
}

impl CountTable {
    pub fn new(n_states: usize, n_actions: usize) -> Self {
        Self {
            n_sas: Array3::zeros((n_states, n_actions, n_states)),
            cum_sas: Array3::zeros((n_states, n_actions, n_states)),
            cum_sa: Array2::zeros((n_states, n_actions)),
            cum_s: Array1::zeros(n_states),
            expert_sa: Array2::zeros((n_states, n_actions)),
        }
    }

    pub fn n_states(&self) -> usize {
        self.cum_sa.nrows()
    }

    pub fn n_actions(&self) -> usize {
        self.cum_sa.ncols()
    }

    /// Clears the per-iteration counter `n_k`.
    pub fn begin_iteration(&mut self) {
        self.n_sas.fill(0);
    }

    /// Adds observed transitions and expert actions. Validates every index
    /// before touching any counter.
    pub fn update(&mut self, transitions: &[(usize, usize, usize)], expert_obs: &[(usize, usize)]) -> Result<()> {
        let (s, a) = (self.n_states(), self.n_actions());
        if let Some(t) = transitions.iter().find(|&&(x, y, z)| x >= s || y >= a || z >= s) {
            return Err(IcrlError::OutOfRange(format!("transition {t:?}")));
        }
        if let Some(o) = expert_obs.iter().find(|&&(x, y)| x >= s || y >= a) {
            return Err(IcrlError::OutOfRange(format!("expert observation {o:?}")));
        }
        for &(x, y, z) in transitions {
            self.n_sas[[x, y, z]] += 1;
            self.cum_sas[[x, y, z]] += 1;
            self.cum_sa[[x, y]] += 1;
            self.cum_s[x] += 1;
        }
        for &(x, y) in expert_obs {
            self.expert_sa[[x, y]] += 1;
        }
        Ok(())
    }

    pub fn iteration_sas(&self) -> &Array3<u64> {
        &self.n_sas
    }

    pub fn cum_sas(&self) -> &Array3<u64> {
        &self.cum_sas
    }

    pub fn cum_sa(&self) -> &Array2<u64> {
        &self.cum_sa
    }

    pub fn cum_s(&self) -> &Array1<u64> {
        &self.cum_s
    }

    pub fn expert_sa(&self) -> &Array2<u64> {
        &self.expert_sa
    }

    pub fn total_samples(&self) -> u64 {
        self.cum_s.sum()
    }
}

/// Functional form of [`CountTable::update`].
pub fn update_counts(
    counts: &CountTable,
    transitions: &[(usize, usize, usize)],
    expert_obs: &[(usize, usize)],
) -> Result<CountTable> {
    let mut out = counts.clone();
    out.update(transitions, expert_obs)?;
    Ok(out)
}

/// Empirical transition kernel and expert policy at iteration `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatedProblem {
    /// Substochastic: rows of unvisited pairs are zero.
    pub p_hat: Array3<f64>,
    /// Rows of states without expert observations are zero.
    pub pi_hat: Array2<f64>,
    pub k: usize,
    pub delta: f64,
}

impl EstimatedProblem {
    /// The "estimate" equal to the truth: exact kernel, expert rows at live
    /// states and zero rows at dead states.
    pub fn from_truth(cmdp: &Cmdp, expert: &Policy, dead_states: &[usize], delta: f64) -> Self {
        let mut pi_hat = expert.probs().clone();
        for &s in dead_states {
            pi_hat.row_mut(s).fill(0.0);
        }
        Self { p_hat: cmdp.transition().clone(), pi_hat, k: 0, delta }
    }

    /// Brings the estimate up to date after new counts, recomputing only the
    /// transition rows of `touched` pairs. Equivalent to
    /// [`empirical_models`] when `touched` covers every pair whose counts
    /// changed.
    pub fn refresh(&mut self, counts: &CountTable, k: usize, touched: impl IntoIterator<Item = (usize, usize)>) {
        for (si, ai) in touched {
            let n = plus(counts.cum_sa[[si, ai]]);
            let src = counts.cum_sas.slice(ndarray::s![si, ai, ..]);
            self.p_hat.slice_mut(ndarray::s![si, ai, ..]).zip_mut_with(&src, |p, &c| *p = c as f64 / n);
        }
        fill_expert(&mut self.pi_hat, &counts.expert_sa);
        self.k = k;
    }

    pub fn n_states(&self) -> usize {
        self.pi_hat.nrows()
    }

    pub fn n_actions(&self) -> usize {
        self.pi_hat.ncols()
    }

    pub fn visited_states(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_states()).filter(move |&s| self.pi_hat.row(s).sum() > 0.0)
    }
}

pub fn empirical_models(counts: &CountTable, k: usize, delta: f64) -> Result<EstimatedProblem> {
    check_delta(delta)?;
    let (s, a) = (counts.n_states(), counts.n_actions());
    let mut p_hat = Array3::zeros((s, a, s));
    for si in 0..s {
        for ai in 0..a {
            let n = plus(counts.cum_sa[[si, ai]]);
            for sp in 0..s {
                p_hat[[si, ai, sp]] = counts.cum_sas[[si, ai, sp]] as f64 / n;
            }
        }
    }
    let mut pi_hat = Array2::zeros((s, a));
    fill_expert(&mut pi_hat, &counts.expert_sa);
    Ok(EstimatedProblem { p_hat, pi_hat, k, delta })
}

fn fill_expert(pi_hat: &mut Array2<f64>, expert_sa: &Array2<u64>) {
    for (mut out, row) in pi_hat.outer_iter_mut().zip(expert_sa.outer_iter()) {
        let n = plus(row.sum());
        out.zip_mut_with(&row, |p, &c| *p = c as f64 / n);
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(IcrlError::InvalidArgument(format!("delta {delta} outside (0, 1)")))
    }
}

/// Width scale `sigma` of the cost confidence bound.
pub fn sigma_constant(r_max: f64, c_max: f64, gamma: f64, min_pos_adv: f64) -> Result<f64> {
    if !(min_pos_adv > 0.0) {
        return Err(IcrlError::InvalidArgument(format!("min positive advantage {min_pos_adv} must be > 0")));
    }
    let g1 = 1.0 - gamma;
    Ok(gamma * c_max * (r_max * (3.0 + gamma) / min_pos_adv + g1) / (g1 * g1))
}

/// Smallest `|A(s,a)|` above [`ADV_TOL`], floored at `floor`.
pub fn min_positive_advantage(adv: ArrayView2<f64>, floor: f64) -> f64 {
    let m = adv.iter().map(|x| x.abs()).filter(|&x| x > ADV_TOL).fold(f64::INFINITY, f64::min);
    if m.is_finite() {
        m.max(floor)
    } else {
        floor
    }
}

/// `ln(36 S A (n^+)^2 / delta)`.
pub fn log_term(n_states: usize, n_actions: usize, n: f64, delta: f64) -> f64 {
    let np = n.max(1.0);
    (36.0 * n_states as f64 * n_actions as f64 * np * np / delta).ln()
}

/// One entry of the width: `min(sigma sqrt(ell / 2 N^+), c_max)`.
pub fn width_entry(n_states: usize, n_actions: usize, n: u64, delta: f64, sigma: f64, c_max: f64) -> f64 {
    let ell = log_term(n_states, n_actions, n as f64, delta);
    (sigma * (ell / (2.0 * plus(n))).sqrt()).min(c_max)
}

pub fn confidence_width(counts: &CountTable, delta: f64, sigma: f64, c_max: f64) -> Result<Array2<f64>> {
    check_delta(delta)?;
    let (s, a) = (counts.n_states(), counts.n_actions());
    Ok(counts.cum_sa.mapv(|n| width_entry(s, a, n, delta, sigma, c_max)))
}

/// How `recover_cost` treats the cost-shaping term.
#[derive(Debug, Clone, Copy)]
pub enum CostMode<'a> {
    /// `V^c = 0`.
    Hard,
    /// Caller-supplied `V^c`; `None` is rejected.
    Soft { v_c: Option<ArrayView1<'a, f64>> },
}

/// Canonical feasible cost from the estimated problem.
///
/// A pair is constraint violating when the expert never chose it at a
/// visited state and its reward advantage exceeds [`ADV_TOL`]; those pairs
/// get `c_max`. Everything else, including every pair at unvisited states,
/// gets zero (plus the shaping term in soft mode).
pub fn recover_cost(est: &EstimatedProblem, reward: ArrayView2<f64>, gamma: f64, c_max: f64, mode: CostMode<'_>) -> Result<Array2<f64>> {
    let adv = evaluate_probs(est.p_hat.view(), reward, est.pi_hat.view(), gamma)?.adv;
    let mut c_hat = violating_indicator(est, adv.view()) * c_max;
    match mode {
        CostMode::Hard => {}
        CostMode::Soft { v_c: None } => {
            return Err(IcrlError::InvalidArgument("soft-mode recovery needs V^c".into()));
        }
        CostMode::Soft { v_c: Some(v_c) } => {
            if v_c.len() != est.n_states() {
                return Err(IcrlError::Shape("V^c length".into()));
            }
            let pv = expect_next(est.p_hat.view(), v_c);
            for s in est.visited_states().collect::<Vec<_>>() {
                for a in 0..est.n_actions() {
                    c_hat[[s, a]] += v_c[s] - gamma * pv[[s, a]];
                }
            }
        }
    }
    Ok(c_hat)
}

fn violating_indicator(est: &EstimatedProblem, adv: ArrayView2<f64>) -> Array2<f64> {
    let (s, a) = adv.dim();
    let mut out = Array2::zeros((s, a));
    for si in est.visited_states() {
        for ai in 0..a {
            if est.pi_hat[[si, ai]] == 0.0 && adv[[si, ai]] > ADV_TOL {
                out[[si, ai]] = 1.0;
            }
        }
    }
    out
}

/// Recovered cost, its certified width and the accuracy reached so far.
#[derive(Debug, Clone, PartialEq)]
pub struct CostEstimate {
    pub c_hat: Array2<f64>,
    pub width: Array2<f64>,
    pub sigma: f64,
    pub eps_k: f64,
}

/// Recomputes `sigma`, the widths and the hard-mode cost for the current
/// counts. `eps_k` is left to the exploration strategy.
pub fn estimate_costs(
    counts: &CountTable,
    est: &EstimatedProblem,
    reward: ArrayView2<f64>,
    gamma: f64,
    r_max: f64,
    c_max: f64,
    adv_floor: f64,
) -> Result<CostEstimate> {
    let adv = evaluate_probs(est.p_hat.view(), reward, est.pi_hat.view(), gamma)?.adv;
    let sigma = sigma_constant(r_max, c_max, gamma, min_positive_advantage(adv.view(), adv_floor))?;
    let width = confidence_width(counts, est.delta, sigma, c_max)?;
    let c_hat = violating_indicator(est, adv.view()) * c_max;
    Ok(CostEstimate { c_hat, width, sigma, eps_k: f64::NAN })
}

/// Which feasibility condition governs a state-action pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseLabel {
    ExpertConsistent,
    ConstraintViolating,
    NonCritical,
    /// Dead state: the expert is undefined there.
    Excluded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub labels: Array2<CaseLabel>,
    /// `Q^{c,pi_E} - V^{c,pi_E}` under the candidate cost.
    pub cost_gap: Array2<f64>,
    pub reward_adv: Array2<f64>,
    pub violations: Vec<(usize, usize)>,
    pub verdict: bool,
}

/// Checks the three sign conditions characterising feasible costs, under the
/// true model and a total expert policy. Dead states are skipped.
pub fn feasibility_check(c_candidate: ArrayView2<f64>, cmdp: &Cmdp, expert: &Policy, dead_states: &[usize]) -> Result<FeasibilityReport> {
    let cost_gap = policy_evaluation(cmdp.transition().view(), c_candidate, expert, cmdp.gamma())?.adv;
    let reward_adv = cmdp.evaluate_reward(expert)?.adv;
    let (s, a) = cost_gap.dim();
    let mut labels = Array2::from_elem((s, a), CaseLabel::Excluded);
    let mut violations = Vec::new();
    for si in 0..s {
        if dead_states.contains(&si) {
            continue;
        }
        for ai in 0..a {
            let gap = cost_gap[[si, ai]];
            let (label, ok) = if expert.probs()[[si, ai]] > 0.0 {
                (CaseLabel::ExpertConsistent, gap.abs() <= FEASIBILITY_TOL)
            } else if reward_adv[[si, ai]] > FEASIBILITY_TOL {
                (CaseLabel::ConstraintViolating, gap > FEASIBILITY_TOL)
            } else {
                (CaseLabel::NonCritical, gap <= FEASIBILITY_TOL)
            };
            labels[[si, ai]] = label;
            if !ok {
                violations.push((si, ai));
            }
        }
    }
    let verdict = violations.is_empty();
    Ok(FeasibilityReport { labels, cost_gap, reward_adv, violations, verdict })
}

/// `c = A ⊙ zeta + V^c(s) - gamma (P V^c)(s, a)`: the explicit feasible-set
/// parametrisation.
pub fn cost_from_parameters(adv: ArrayView2<f64>, zeta: ArrayView2<f64>, kernel: ArrayView3<f64>, v_c: ArrayView1<f64>, gamma: f64) -> Array2<f64> {
    let pv = expect_next(kernel, v_c);
    let mut c = &adv * &zeta;
    for ((s, a), x) in c.indexed_iter_mut() {
        *x += v_c[s] - gamma * pv[[s, a]];
    }
    c
}

/// Elementwise bound `gamma |(P - P_hat) V^c| + |A - A_hat| ⊙ zeta` on the
/// gap between a true feasible cost and its estimated counterpart.
pub fn error_propagation_bound(
    est: &EstimatedProblem,
    cmdp: &Cmdp,
    expert: &Policy,
    v_c: ArrayView1<f64>,
    zeta: ArrayView2<f64>,
) -> Result<Array2<f64>> {
    if zeta.iter().any(|&z| z < 0.0) {
        return Err(IcrlError::InvalidArgument("zeta must be nonnegative".into()));
    }
    let gamma = cmdp.gamma();
    let adv = cmdp.evaluate_reward(expert)?.adv;
    let adv_hat = evaluate_probs(est.p_hat.view(), cmdp.reward().view(), est.pi_hat.view(), gamma)?.adv;
    let model_term = (expect_next(cmdp.transition().view(), v_c) - expect_next(est.p_hat.view(), v_c)).mapv(|x| gamma * x.abs());
    let adv_term = (&adv - &adv_hat).mapv(f64::abs) * &zeta;
    Ok(model_term + adv_term)
}

/// Expected visitation counts induced by the executed policy sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoCounts {
    pub bar_n: Array2<f64>,
    pub horizon: usize,
    pub k: usize,
}

impl PseudoCounts {
    pub fn new(n_states: usize, n_actions: usize, horizon: usize) -> Self {
        Self { bar_n: Array2::zeros((n_states, n_actions)), horizon, k: 0 }
    }

    /// Adds `sum_{h=1..n_max} eta^h` for one more executed policy, with
    /// `eta^0(s,a) = mu0(s) pi(a|s)` and
    /// `eta^{h+1}(s,a) = pi(a|s) sum_{s',a'} P(s|s',a') eta^h(s',a')`.
    pub fn push(&mut self, policy: &Policy, kernel: ArrayView3<f64>, mu0: ArrayView1<f64>) {
        let probs = policy.probs();
        let p_pi = state_kernel(kernel, probs.view());
        let n = mu0.len();
        let rows: Vec<Vec<(usize, f64)>> =
            p_pi.outer_iter().map(|row| row.iter().enumerate().filter(|(_, &p)| p != 0.0).map(|(t, &p)| (t, p)).collect()).collect();
        let mut d = mu0.to_vec();
        let mut next = vec![0.0; n];
        let mut mass = vec![0.0; n];
        for _ in 0..self.horizon {
            next.iter_mut().for_each(|x| *x = 0.0);
            for (row, &w) in rows.iter().zip(&d) {
                if w != 0.0 {
                    for &(t, p) in row {
                        next[t] += w * p;
                    }
                }
            }
            std::mem::swap(&mut d, &mut next);
            mass.iter_mut().zip(&d).for_each(|(m, &x)| *m += x);
        }
        for ((mut out, pi), &m) in self.bar_n.outer_iter_mut().zip(probs.outer_iter()).zip(&mass) {
            out.zip_mut_with(&pi, |b, &p| *b += p * m);
        }
        self.k += 1;
    }
}

pub fn pseudo_counts(history: &[Policy], cmdp: &Cmdp, n_max: usize) -> PseudoCounts {
    let mut pc = PseudoCounts::new(cmdp.n_states(), cmdp.n_actions(), n_max);
    for p in history {
        pc.push(p, cmdp.transition().view(), cmdp.mu0().view());
    }
    pc
}

/// Checks `min(sigma sqrt(ell/2N^+), c_max) <= sigma_check sqrt(2 ell_bar / N_bar^+)`
/// at every pair, `sigma_check = max(sigma, sqrt(2) c_max)`. Returns the
/// violating pairs.
pub fn pseudo_count_violations(counts: &CountTable, pseudo: &PseudoCounts, delta: f64, sigma: f64, c_max: f64) -> Vec<(usize, usize)> {
    let (s, a) = (counts.n_states(), counts.n_actions());
    let sigma_check = sigma.max(std::f64::consts::SQRT_2 * c_max);
    let mut out = Vec::new();
    for si in 0..s {
        for ai in 0..a {
            let lhs = width_entry(s, a, counts.cum_sa[[si, ai]], delta, sigma, c_max);
            let nbar = pseudo.bar_n[[si, ai]].max(1.0);
            let ell_bar = log_term(s, a, nbar, delta);
            let rhs = sigma_check * (2.0 * ell_bar / nbar).sqrt();
            if lhs > rhs {
                out.push((si, ai));
            }
        }
    }
    out
}

/// Completeness and accuracy errors of the cost-value criterion, measured
/// with the supplied canonical costs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacErrors {
    pub completeness: f64,
    pub accuracy: f64,
}

pub fn pac_error(c_true: ArrayView2<f64>, c_hat: ArrayView2<f64>, cmdp: &Cmdp, est: &EstimatedProblem) -> Result<PacErrors> {
    let truth = cmdp.with_cost(c_true.to_owned())?;
    let true_sol = solve_cmdp(&truth)?;
    let est_sol = solve_constrained(ConstrainedModel {
        kernel: est.p_hat.view(),
        reward: cmdp.reward().view(),
        cost: c_hat,
        mu0: cmdp.mu0().view(),
        gamma: cmdp.gamma(),
        budget: cmdp.budget(),
        r_max: cmdp.r_max(),
    })?;
    let gap = |policy: &Policy| -> Result<f64> {
        let q_true = policy_evaluation(cmdp.transition().view(), c_true, policy, cmdp.gamma())?.q;
        let q_hat = policy_evaluation(cmdp.transition().view(), c_hat, policy, cmdp.gamma())?.q;
        let mut m: f64 = 0.0;
        for ((s, _), d) in (&q_true - &q_hat).indexed_iter() {
            if !true_sol.is_dead(s) {
                m = m.max(d.abs());
            }
        }
        Ok(m)
    };
    Ok(PacErrors { completeness: gap(&true_sol.policy)?, accuracy: gap(&est_sol.policy)? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::{arr1, arr2};

    #[test]
    fn update_examples() {
        let mut c = CountTable::new(3, 4);
        c.update(&[], &[]).unwrap();
        assert_eq!(c, CountTable::new(3, 4));
        c.update(&[(0, 1, 2)], &[(0, 3), (0, 3)]).unwrap();
        assert_eq!(c.cum_sas()[[0, 1, 2]], 1);
        assert_eq!(c.cum_sa()[[0, 1]], 1);
        assert_eq!(c.cum_s()[0], 1);
        assert_eq!(c.expert_sa()[[0, 3]], 2);
        assert!(matches!(c.update(&[(3, 0, 0)], &[]), Err(IcrlError::OutOfRange(_))));
        assert!(c.update(&[(0, 0, 0)], &[(0, 4)]).is_err());
        // rejected batches leave counters untouched
        assert_eq!(c.total_samples(), 1);
        c.begin_iteration();
        assert_eq!(c.iteration_sas().sum(), 0);
        assert_eq!(c.cum_sas().sum(), 1);
    }

    #[test]
    fn empirical_ratios() {
        let mut c = CountTable::new(2, 2);
        let mut tr = vec![(0, 0, 0); 3];
        tr.push((0, 0, 1));
        c.update(&tr, &[(0, 1), (0, 1), (0, 1), (0, 1)]).unwrap();
        let est = empirical_models(&c, 1, 0.1).unwrap();
        assert_abs_diff_eq!(est.p_hat[[0, 0, 0]], 0.75);
        assert_abs_diff_eq!(est.p_hat[[0, 0, 1]], 0.25);
        assert_eq!(est.p_hat.slice(ndarray::s![1, 1, ..]).sum(), 0.0);
        assert_eq!(est.pi_hat.row(0).to_vec(), vec![0.0, 1.0]);
        assert_eq!(est.pi_hat.row(1).sum(), 0.0);
        assert!(empirical_models(&c, 1, 1.0).is_err());
    }

    #[test]
    fn sigma_examples() {
        // 0.9 * (1 * 3.9 / 0.5 + 0.1) / 0.01 = 711
        assert_abs_diff_eq!(sigma_constant(1.0, 1.0, 0.9, 0.5).unwrap(), 711.0, epsilon = 1e-9);
        assert_eq!(sigma_constant(1.0, 1.0, 0.0, 0.5).unwrap(), 0.0);
        let s1 = sigma_constant(1.0, 1.0, 0.7, 0.2).unwrap();
        let s2 = sigma_constant(1.0, 2.0, 0.7, 0.2).unwrap();
        assert_abs_diff_eq!(s2, 2.0 * s1, epsilon = 1e-9);
        assert!(sigma_constant(1.0, 1.0, 0.9, 0.0).is_err());
    }

    #[test]
    fn width_examples() {
        // ln(36 * 49 * 8 / 0.1) = ln(141120)
        let ell = log_term(49, 8, 1.0, 0.1);
        assert_abs_diff_eq!(ell, 141120.0_f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(ell, 11.857366, epsilon = 1e-5);
        assert_eq!(width_entry(49, 8, 1, 0.1, 711.0, 1.0), 1.0);
        let w3 = width_entry(49, 8, 1_000, 0.1, 1.0, 10.0);
        let w6 = width_entry(49, 8, 1_000_000, 0.1, 1.0, 10.0);
        assert!(w6 < w3 && w3 < 10.0);
    }

    #[test]
    fn min_positive_advantage_floors() {
        let adv = arr2(&[[0.0, -0.2], [0.07, 1e-9]]);
        assert_abs_diff_eq!(min_positive_advantage(adv.view(), 0.05), 0.07);
        assert_abs_diff_eq!(min_positive_advantage(adv.view(), 0.1), 0.1);
        assert_abs_diff_eq!(min_positive_advantage(Array2::zeros((1, 1)).view(), 0.05), 0.05);
    }

    /// Two states: s0 has a safe detour (a0, stays) and a shortcut (a1)
    /// into the rewarding absorbing s1. The expert always takes a0.
    fn shortcut_problem() -> (EstimatedProblem, Array2<f64>) {
        let mut p = Array3::zeros((2, 2, 2));
        p[[0, 0, 0]] = 1.0;
        p[[0, 1, 1]] = 1.0;
        p[[1, 0, 1]] = 1.0;
        p[[1, 1, 1]] = 1.0;
        let reward = arr2(&[[0.0, 0.0], [1.0, 1.0]]);
        let pi_hat = arr2(&[[1.0, 0.0], [0.5, 0.5]]);
        (EstimatedProblem { p_hat: p, pi_hat, k: 1, delta: 0.1 }, reward)
    }

    #[test]
    fn recover_cost_three_cases() {
        let (est, reward) = shortcut_problem();
        let c = recover_cost(&est, reward.view(), 0.9, 1.0, CostMode::Hard).unwrap();
        // violating: expert avoids shortcut with positive advantage
        assert_eq!(c[[0, 1]], 1.0);
        // expert consistent
        assert_eq!(c[[0, 0]], 0.0);
        assert_eq!(c[[1, 0]], 0.0);
        assert_eq!(c[[1, 1]], 0.0);

        // non-critical: the avoided action is worse than the expert's
        let mut est2 = est.clone();
        est2.pi_hat = arr2(&[[0.0, 1.0], [0.5, 0.5]]);
        let c2 = recover_cost(&est2, reward.view(), 0.9, 1.0, CostMode::Hard).unwrap();
        assert_eq!(c2[[0, 0]], 0.0);
        assert!(c2.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn recover_cost_unvisited_rows_zero_and_soft_needs_vc() {
        let (mut est, reward) = shortcut_problem();
        est.pi_hat.row_mut(0).fill(0.0);
        let c = recover_cost(&est, reward.view(), 0.9, 1.0, CostMode::Hard).unwrap();
        assert!(c.row(0).iter().all(|&x| x == 0.0));
        assert!(recover_cost(&est, reward.view(), 0.9, 1.0, CostMode::Soft { v_c: None }).is_err());
        let zeros = Array1::zeros(2);
        let soft = recover_cost(&est, reward.view(), 0.9, 1.0, CostMode::Soft { v_c: Some(zeros.view()) }).unwrap();
        assert_eq!(soft, c);
    }

    fn shortcut_cmdp(cost: Array2<f64>) -> Cmdp {
        // s0 start; a0 -> s1 (detour), a1 -> s2 (goal, shortcut); s1 a* -> s2.
        let mut p = Array3::zeros((3, 2, 3));
        p[[0, 0, 1]] = 1.0;
        p[[0, 1, 2]] = 1.0;
        p[[1, 0, 2]] = 1.0;
        p[[1, 1, 2]] = 1.0;
        p[[2, 0, 2]] = 1.0;
        p[[2, 1, 2]] = 1.0;
        let reward = arr2(&[[0.0, 1.0], [1.0, 1.0], [0.0, 0.0]]);
        Cmdp::new(p, reward, cost, 0.0, arr1(&[1.0, 0.0, 0.0]), 0.9, 1.0, 1.0).unwrap()
    }

    #[test]
    fn feasibility_of_zero_cost_fails_at_shortcut() {
        let m = shortcut_cmdp(Array2::zeros((3, 2)));
        let expert = Policy::deterministic(&[0, 0, 0], 2).unwrap();
        let rep = feasibility_check(Array2::zeros((3, 2)).view(), &m, &expert, &[]).unwrap();
        assert!(!rep.verdict);
        assert_eq!(rep.violations, vec![(0, 1)]);
        assert_eq!(rep.labels[[0, 1]], CaseLabel::ConstraintViolating);

        let shortcut_cost = arr2(&[[0.0, 1.0], [0.0, 0.0], [0.0, 0.0]]);
        let rep = feasibility_check(shortcut_cost.view(), &m, &expert, &[]).unwrap();
        assert!(rep.verdict, "{:?}", rep.violations);
    }

    #[test]
    fn extra_cost_on_non_critical_pair() {
        let m = shortcut_cmdp(Array2::zeros((3, 2)));
        let expert = Policy::deterministic(&[0, 0, 0], 2).unwrap();
        // At s2 every action is expert-consistent; at s1 action 1 is not the
        // expert's and has advantage 0, so it is non-critical. Charging it
        // makes Q - V = 1 > 0 there.
        let c = arr2(&[[0.0, 1.0], [0.0, 1.0], [0.0, 0.0]]);
        let rep = feasibility_check(c.view(), &m, &expert, &[]).unwrap();
        assert_eq!(rep.labels[[1, 1]], CaseLabel::NonCritical);
        assert_abs_diff_eq!(rep.cost_gap[[1, 1]], 1.0, epsilon = 1e-12);
        assert_eq!(rep.violations, vec![(1, 1)]);
    }

    #[test]
    fn error_bound_vanishes_on_exact_estimates() {
        let m = shortcut_cmdp(Array2::zeros((3, 2)));
        let expert = Policy::deterministic(&[0, 0, 0], 2).unwrap();
        let est = EstimatedProblem::from_truth(&m, &expert, &[], 0.1);
        let v_c = arr1(&[1.0, 2.0, 0.5]);
        let zeta = Array2::from_elem((3, 2), 0.3);
        let b = error_propagation_bound(&est, &m, &expert, v_c.view(), zeta.view()).unwrap();
        assert!(b.iter().all(|&x| x.abs() < 1e-12));

        let mut est2 = est.clone();
        est2.p_hat.fill(0.0);
        let b = error_propagation_bound(&est2, &m, &expert, Array1::zeros(3).view(), Array2::zeros((3, 2)).view()).unwrap();
        assert!(b.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn pseudo_count_examples() {
        // self loop
        let p = Array3::from_elem((1, 2, 1), 1.0);
        let m = Cmdp::new(p, Array2::zeros((1, 2)), Array2::zeros((1, 2)), 0.0, arr1(&[1.0]), 0.9, 1.0, 1.0).unwrap();
        let pi = Policy::deterministic(&[1], 2).unwrap();
        let pc = pseudo_counts(&[pi.clone()], &m, 2);
        assert_abs_diff_eq!(pc.bar_n[[0, 1]], 2.0);
        assert_eq!(pc.bar_n[[0, 0]], 0.0);
        let pc3 = pseudo_counts(&[pi.clone(), pi.clone(), pi], &m, 2);
        assert_abs_diff_eq!(pc3.bar_n[[0, 1]], 6.0);

        // deterministic two-cycle
        let mut p = Array3::zeros((2, 1, 2));
        p[[0, 0, 1]] = 1.0;
        p[[1, 0, 0]] = 1.0;
        let m = Cmdp::new(p, Array2::zeros((2, 1)), Array2::zeros((2, 1)), 0.0, arr1(&[1.0, 0.0]), 0.9, 1.0, 1.0).unwrap();
        let pc = pseudo_counts(&[Policy::uniform(2, 1)], &m, 2);
        assert_abs_diff_eq!(pc.bar_n[[0, 0]], 1.0);
        assert_abs_diff_eq!(pc.bar_n[[1, 0]], 1.0);
    }

    #[test]
    fn pac_error_zero_for_identical_problems() {
        let c = arr2(&[[0.0, 1.0], [0.0, 0.0], [0.0, 0.0]]);
        let m = shortcut_cmdp(c.clone());
        let sol = solve_cmdp(&m).unwrap();
        let est = EstimatedProblem::from_truth(&m, &sol.policy, &sol.dead_states, 0.1);
        let e = pac_error(c.view(), c.view(), &m, &est).unwrap();
        assert_eq!(e.completeness, 0.0);
        assert_eq!(e.accuracy, 0.0);
    }

    #[test]
    fn pac_error_bounded_under_uniform_shift() {
        let c = arr2(&[[0.0, 1.0], [0.0, 0.0], [0.0, 0.0]]);
        let m = shortcut_cmdp(c.clone());
        let sol = solve_cmdp(&m).unwrap();
        let est = EstimatedProblem::from_truth(&m, &sol.policy, &sol.dead_states, 0.1);
        let c_hat = arr2(&[[0.0, 1.1], [0.0, 0.0], [0.0, 0.0]]);
        let e = pac_error(c.view(), c_hat.view(), &m, &est).unwrap();
        assert!(e.completeness <= 0.1 / (1.0 - 0.9) + 1e-12);
        assert!(e.completeness > 0.0);
    }

    #[test]
    fn pac_error_positive_when_constraint_missed() {
        let c = arr2(&[[0.0, 1.0], [0.0, 0.0], [0.0, 0.0]]);
        let m = shortcut_cmdp(c.clone());
        let sol = solve_cmdp(&m).unwrap();
        let est = EstimatedProblem::from_truth(&m, &sol.policy, &sol.dead_states, 0.1);
        let e = pac_error(c.view(), Array2::zeros((3, 2)).view(), &m, &est).unwrap();
        assert!(e.completeness > 0.0 && e.accuracy > 0.0);
    }
}
