//! The exploration loop, experiment configuration, RNG streams and run
//! artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{Array2, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::cmdp::{expected_start_value, value_iteration, Policy};
use crate::csvio::{fmt17, matrix_to_string};
use crate::envs::{builtin_layout, goal_reachable, run_episode, sample_action, GridEnv, GridLayout, GridParams};
use crate::error::{IcrlError, Result};
use crate::estimation::{
    empirical_models, estimate_costs, recover_cost, CostEstimate, CostMode, CountTable, EstimatedProblem,
};
use crate::exploration::{
    baseline_action, bear_accuracy, bear_policy, pcse_accuracy, pcse_policy, r_hat_surrogate, uniform_generative_round,
    PcseCandidateSpec, PcseConfig, PcseDiagnostics, StrategyKind, StrategyState,
};
use crate::metrics::{pac_report, running_score, wgiou_with, MetricRow, PacReport, WgiouVariant, METRICS_HEADER};
use crate::solver::{solve_cmdp, solve_constrained, ConstrainedModel, SafeSolution};

/// Seeds of the standard five-seed experiment.
pub const DEFAULT_SEEDS: [u64; 5] = [123456, 123, 1234, 36, 34];

#[derive(Debug, Clone, PartialEq)]
pub enum LayoutSource {
    Setting(u8),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub layout: LayoutSource,
    pub strategy: StrategyKind,
    pub gamma: f64,
    pub delta: f64,
    pub target_eps: f64,
    pub budget_eps: f64,
    pub n_e: usize,
    pub n_max: usize,
    pub k_max: usize,
    pub seeds: Vec<u64>,
    pub c_max: f64,
    pub r_max: f64,
    pub adv_floor: f64,
    pub output: PathBuf,
    pub wgiou: WgiouVariant,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            layout: LayoutSource::Setting(1),
            strategy: StrategyKind::Bear,
            gamma: 0.95,
            delta: 0.1,
            target_eps: 0.5,
            budget_eps: 0.0,
            n_e: 1,
            n_max: 50,
            k_max: 2000,
            seeds: DEFAULT_SEEDS.to_vec(),
            c_max: 1.0,
            r_max: 1.0,
            adv_floor: 0.05,
            output: PathBuf::from("out"),
            wgiou: WgiouVariant::Hadamard,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.parse::<T>().map_err(|e| IcrlError::Config(format!("{key}={value}: {e}")))
}

impl ExperimentConfig {
    /// Parses flat `key=value` text; `#` starts a comment. Relative layout
    /// paths are resolved against `base_dir`.
    pub fn parse(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| IcrlError::Config(format!("line {}: expected key=value, got {line:?}", i + 1)))?;
            cfg.set(key.trim(), value.trim(), base_dir)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::parse(&text, path.parent())
    }

    pub fn set(&mut self, key: &str, value: &str, base_dir: Option<&Path>) -> Result<()> {
        match key {
            "setting" => {
                let s: u8 = parse_num(key, value)?;
                if !(1..=4).contains(&s) {
                    return Err(IcrlError::Config(format!("setting={value}: expected 1..4")));
                }
                self.layout = LayoutSource::Setting(s);
            }
            "layout" => {
                let p = PathBuf::from(value);
                self.layout = LayoutSource::File(match base_dir {
                    Some(b) if p.is_relative() => b.join(p),
                    _ => p,
                });
            }
            "strategy" => self.strategy = value.parse().map_err(|e: IcrlError| IcrlError::Config(e.to_string()))?,
            "gamma" => self.gamma = parse_num(key, value)?,
            "delta" => self.delta = parse_num(key, value)?,
            "target_eps" => self.target_eps = parse_num(key, value)?,
            "budget_eps" => self.budget_eps = parse_num(key, value)?,
            "n_e" => self.n_e = parse_num(key, value)?,
            "n_max" => self.n_max = parse_num(key, value)?,
            "k_max" => self.k_max = parse_num(key, value)?,
            "seeds" => {
                self.seeds = value.split(',').map(|s| parse_num(key, s.trim())).collect::<Result<_>>()?;
            }
            "c_max" => self.c_max = parse_num(key, value)?,
            "r_max" => self.r_max = parse_num(key, value)?,
            "adv_floor" => self.adv_floor = parse_num(key, value)?,
            "output" => self.output = PathBuf::from(value),
            "wgiou" => {
                self.wgiou = match value {
                    "hadamard" => WgiouVariant::Hadamard,
                    "scalar" => WgiouVariant::ScalarInner,
                    other => return Err(IcrlError::Config(format!("wgiou={other}: expected hadamard|scalar"))),
                }
            }
            other => return Err(IcrlError::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(IcrlError::Config(m));
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta={} must lie in (0, 1)", self.delta));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return bad(format!("gamma={} must lie in [0, 1)", self.gamma));
        }
        if self.n_e == 0 || self.n_max == 0 {
            return bad("n_e and n_max must be at least 1".into());
        }
        if !(self.c_max > 0.0 && self.r_max > 0.0) {
            return bad("c_max and r_max must be positive".into());
        }
        if !(self.adv_floor > 0.0) {
            return bad("adv_floor must be positive".into());
        }
        if !(self.budget_eps >= 0.0) || !(self.target_eps >= 0.0) {
            return bad("budget_eps and target_eps must be nonnegative".into());
        }
        if self.seeds.is_empty() {
            return bad("seeds must not be empty".into());
        }
        Ok(())
    }

    /// Canonical `key=value` text for one run (single seed).
    pub fn to_text(&self, seed: u64, layout_name: &str) -> String {
        let mut s = String::new();
        match &self.layout {
            LayoutSource::Setting(k) => writeln!(s, "setting={k}").unwrap(),
            LayoutSource::File(_) => writeln!(s, "layout={layout_name}").unwrap(),
        }
        writeln!(s, "strategy={}", self.strategy).unwrap();
        writeln!(s, "gamma={}", self.gamma).unwrap();
        writeln!(s, "delta={}", self.delta).unwrap();
        writeln!(s, "target_eps={}", self.target_eps).unwrap();
        writeln!(s, "budget_eps={}", self.budget_eps).unwrap();
        writeln!(s, "n_e={}", self.n_e).unwrap();
        writeln!(s, "n_max={}", self.n_max).unwrap();
        writeln!(s, "k_max={}", self.k_max).unwrap();
        writeln!(s, "seeds={seed}").unwrap();
        writeln!(s, "c_max={}", self.c_max).unwrap();
        writeln!(s, "r_max={}", self.r_max).unwrap();
        writeln!(s, "adv_floor={}", self.adv_floor).unwrap();
        let w = match self.wgiou {
            WgiouVariant::Hadamard => "hadamard",
            WgiouVariant::ScalarInner => "scalar",
        };
        writeln!(s, "wgiou={w}").unwrap();
        s
    }

    pub fn load_layout(&self) -> Result<GridLayout> {
        match &self.layout {
            LayoutSource::Setting(k) => builtin_layout(*k),
            LayoutSource::File(p) => GridLayout::from_file(p),
        }
    }

    pub fn grid_params(&self) -> GridParams {
        GridParams { gamma: self.gamma, r_max: self.r_max, c_max: self.c_max, budget: self.budget_eps }
    }
}

/// Independent RNG for a named stream: ChaCha8 seeded with
/// `SHA-256(root_seed_le || name)`.
pub fn substream(root_seed: u64, name: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(root_seed.to_le_bytes());
    h.update(name.as_bytes());
    let digest = h.finalize();
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(seed)
}

/// Everything about an experiment that does not depend on the seed.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub config: ExperimentConfig,
    pub env: GridEnv,
    pub expert: SafeSolution,
    /// Expert's true discounted reward from `mu0`.
    pub expert_reward: f64,
    /// Canonical cost recovered from the true model and true expert.
    pub canonical_cost: Array2<f64>,
    pub warnings: Vec<String>,
}

impl Prepared {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let layout = config.load_layout()?;
        Self::with_layout(config, layout)
    }

    pub fn with_layout(config: &ExperimentConfig, layout: GridLayout) -> Result<Self> {
        let generative = config.strategy == StrategyKind::UniformGenerative;
        let env = GridEnv::new(layout, config.grid_params(), generative)?;
        let mut warnings = Vec::new();
        if !goal_reachable(&env.cmdp, &env.layout) {
            warnings.push("goal is unreachable from the start cell".to_string());
        }
        let expert = solve_cmdp(&env.cmdp)?;
        let expert_reward = expert.start_reward(env.cmdp.mu0().view());
        let truth = EstimatedProblem::from_truth(&env.cmdp, &expert.policy, &expert.dead_states, config.delta);
        let canonical_cost = recover_cost(&truth, env.cmdp.reward().view(), config.gamma, config.c_max, CostMode::Hard)?;
        Ok(Self { config: config.clone(), env, expert, expert_reward, canonical_cost, warnings })
    }
}

/// Nonzero entries of one recovered cost matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCost {
    pub k: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl SparseCost {
    fn from_matrix(k: usize, m: ArrayView2<f64>) -> Self {
        let entries = m.indexed_iter().filter(|(_, &x)| x != 0.0).map(|((s, a), &x)| (s, a, x)).collect();
        Self { k, entries }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub strategy: StrategyKind,
    pub seed: u64,
    pub rows: Vec<MetricRow>,
    pub cost_log: Vec<SparseCost>,
    pub final_cost: Array2<f64>,
    pub pac: PacReport,
    pub expert_reward: f64,
    /// Whether the loop stopped because `eps_k <= target_eps`.
    pub reached_target: bool,
    pub pcse_fallbacks: usize,
}

impl RunLog {
    pub fn last(&self) -> &MetricRow {
        self.rows.last().expect("run logs always hold the k = 0 row")
    }

    /// Samples at the first row with `eps_k <= target`, if any.
    pub fn samples_to_target(&self, target: f64) -> Option<u64> {
        self.rows.iter().find(|r| r.eps_k <= target).map(|r| r.samples)
    }

    pub fn metrics_csv(&self) -> String {
        let mut out = String::from(METRICS_HEADER);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.to_csv_line(self.strategy.name(), self.seed));
            out.push('\n');
        }
        out
    }

    pub fn costs_csv(&self) -> String {
        let mut out = String::from("k,state,action,c_hat\n");
        for sc in &self.cost_log {
            for &(s, a, x) in &sc.entries {
                writeln!(out, "{},{s},{a},{}", sc.k, fmt17(x)).unwrap();
            }
        }
        out
    }
}

/// State handed to an observer after every iteration, including `k = 0`.
pub struct IterationSnapshot<'a> {
    pub k: usize,
    pub counts: &'a CountTable,
    pub est: &'a EstimatedProblem,
    pub estimate: &'a CostEstimate,
    /// Policy executed during iteration `k` (policy-level strategies only).
    pub executed_policy: Option<&'a Policy>,
    pub pcse: Option<&'a PcseDiagnostics>,
    pub row: &'a MetricRow,
    pub prepared: &'a Prepared,
}

pub fn run_experiment(config: &ExperimentConfig, seed: u64) -> Result<RunLog> {
    let prep = Prepared::new(config)?;
    run_prepared(&prep, seed, |_| {})
}

struct Evaluation {
    sol_hat: Option<SafeSolution>,
    disc_reward: f64,
    disc_cost: f64,
}

fn evaluate_estimate(prep: &Prepared, est: &EstimatedProblem, c_hat: ArrayView2<f64>) -> Result<Evaluation> {
    let cfg = &prep.config;
    let cmdp = &prep.env.cmdp;
    let model = ConstrainedModel {
        kernel: est.p_hat.view(),
        reward: cmdp.reward().view(),
        cost: c_hat,
        mu0: cmdp.mu0().view(),
        gamma: cfg.gamma,
        budget: cfg.budget_eps,
        r_max: cfg.r_max,
    };
    match solve_constrained(model) {
        Ok(sol) => {
            let mu0 = cmdp.mu0().view();
            let disc_reward = expected_start_value(mu0, cmdp.evaluate_reward(&sol.policy)?.v.view());
            let disc_cost = expected_start_value(mu0, cmdp.evaluate_cost(&sol.policy)?.v.view());
            Ok(Evaluation { sol_hat: Some(sol), disc_reward, disc_cost })
        }
        Err(IcrlError::Infeasible { .. }) => Ok(Evaluation { sol_hat: None, disc_reward: f64::NAN, disc_cost: f64::NAN }),
        Err(e) => Err(e),
    }
}

/// Runs the exploration loop for one seed, calling `observer` after every
/// logged iteration.
pub fn run_prepared<F>(prep: &Prepared, seed: u64, mut observer: F) -> Result<RunLog>
where
    F: FnMut(&IterationSnapshot<'_>),
{
    let cfg = &prep.config;
    let env = &prep.env;
    let cmdp = &env.cmdp;
    let (n_s, n_a) = (cmdp.n_states(), cmdp.n_actions());
    let gamma = cfg.gamma;
    let horizon = env.layout.horizon.min(cfg.n_max);
    let mu0 = cmdp.mu0().view();
    let reward = cmdp.reward().view();

    let mut env_rng = substream(seed, "env");
    let mut strategy_rng = substream(seed, "strategy");
    let mut expert_rng = substream(seed, "expert");

    let mut state = StrategyState::new(cfg.strategy, gamma);
    let mut counts = CountTable::new(n_s, n_a);
    let mut est = empirical_models(&counts, 0, cfg.delta)?;
    let mut estimate = estimate_costs(&counts, &est, reward, gamma, cfg.r_max, cfg.c_max, cfg.adv_floor)?;
    estimate.eps_k = state.eps_k;
    let mut eval = evaluate_estimate(prep, &est, estimate.c_hat.view())?;
    let wg = |c: &Array2<f64>| wgiou_with(c.view(), env.true_cost.view(), cfg.wgiou);
    let mut row = MetricRow {
        k: 0,
        samples: 0,
        eps_k: state.eps_k,
        disc_reward: eval.disc_reward,
        disc_cost: eval.disc_cost,
        wgiou: wg(&estimate.c_hat)?,
        running_reward: eval.disc_reward,
        running_cost: eval.disc_cost,
    };
    observer(&IterationSnapshot { k: 0, counts: &counts, est: &est, estimate: &estimate, executed_policy: None, pcse: None, row: &row, prepared: prep });
    let mut rows = vec![row.clone()];
    let mut cost_log = vec![SparseCost::from_matrix(0, estimate.c_hat.view())];

    let mut iteration_pairs: Vec<(usize, usize)> = Vec::new();
    while state.eps_k > cfg.target_eps && state.k < cfg.k_max {
        let k = state.k;
        counts.begin_iteration();
        let mut pcse_diag = None;
        let mut executed = None;
        match cfg.strategy {
            StrategyKind::Bear | StrategyKind::Pcse => {
                let policy = if cfg.strategy == StrategyKind::Bear {
                    bear_policy(estimate.width.view(), &est, gamma)?
                } else {
                    state.r_hat = state.r_hat.min(r_hat_surrogate(&counts, cfg.delta, cfg.r_max, gamma));
                    let spec = match &eval.sol_hat {
                        Some(sol) => PcseCandidateSpec::new(sol, mu0, gamma, state.eps_k, cfg.budget_eps, state.r_hat),
                        None => PcseCandidateSpec::unconstrained(),
                    };
                    let (policy, diag) = pcse_policy(
                        estimate.width.view(),
                        &est,
                        estimate.c_hat.view(),
                        reward,
                        mu0,
                        gamma,
                        spec,
                        &PcseConfig::default(),
                    )?;
                    state.dual = diag.lambda;
                    if diag.fallback.is_some() {
                        state.pcse_fallbacks += 1;
                    }
                    pcse_diag = Some(diag);
                    policy
                };
                for _ in 0..cfg.n_e {
                    let rec = run_episode(env, horizon, |s| sample_action(&policy, s, &mut strategy_rng), &mut env_rng, &prep.expert, &mut expert_rng);
                    counts.update(&rec.transitions(), &rec.expert_queries)?;
                    iteration_pairs.extend(rec.steps.iter().map(|st| (st.s, st.a)));
                }
                executed = Some(policy);
            }
            StrategyKind::Random | StrategyKind::EpsGreedy | StrategyKind::MaxEntropy | StrategyKind::Ucb => {
                let bear_q = if cfg.strategy == StrategyKind::EpsGreedy {
                    Some(value_iteration(est.p_hat.view(), estimate.width.view(), gamma, None)?.q)
                } else {
                    None
                };
                for _ in 0..cfg.n_e {
                    let mut live = counts.cum_sa().clone();
                    let mut failure = None;
                    let rec = run_episode(
                        env,
                        horizon,
                        |s| {
                            let a = baseline_action(cfg.strategy, s, live.view(), k + 1, bear_q.as_ref().map(|q| q.view()), &mut strategy_rng)
                                .unwrap_or_else(|e| {
                                    failure.get_or_insert(e);
                                    0
                                });
                            live[[s, a]] += 1;
                            a
                        },
                        &mut env_rng,
                        &prep.expert,
                        &mut expert_rng,
                    );
                    if let Some(e) = failure {
                        return Err(e);
                    }
                    counts.update(&rec.transitions(), &rec.expert_queries)?;
                    iteration_pairs.extend(rec.steps.iter().map(|st| (st.s, st.a)));
                }
            }
            StrategyKind::UniformGenerative => {
                for _ in 0..cfg.n_e {
                    let round = uniform_generative_round(env, cfg.n_max, &mut env_rng, &prep.expert, &mut expert_rng)?;
                    counts.update(&round.transitions, &round.expert_obs)?;
                }
            }
        }

        state.k += 1;
        let touched: Vec<(usize, usize)> = if cfg.strategy == StrategyKind::UniformGenerative {
            (0..n_s).flat_map(|s| (0..n_a).map(move |a| (s, a))).collect()
        } else {
            let mut t: Vec<(usize, usize)> = iteration_pairs.drain(..).collect();
            t.sort_unstable();
            t.dedup();
            t
        };
        est.refresh(&counts, state.k, touched);
        estimate = estimate_costs(&counts, &est, reward, gamma, cfg.r_max, cfg.c_max, cfg.adv_floor)?;
        state.eps_k = match (&cfg.strategy, &executed) {
            (StrategyKind::Pcse, Some(policy)) => pcse_accuracy(estimate.width.view(), &est, policy, gamma)?,
            _ => bear_accuracy(estimate.width.view(), gamma),
        };
        estimate.eps_k = state.eps_k;
        eval = evaluate_estimate(prep, &est, estimate.c_hat.view())?;
        row = MetricRow {
            k: state.k,
            samples: counts.total_samples(),
            eps_k: state.eps_k,
            disc_reward: eval.disc_reward,
            disc_cost: eval.disc_cost,
            wgiou: wg(&estimate.c_hat)?,
            running_reward: running_score(row.running_reward, eval.disc_reward),
            running_cost: running_score(row.running_cost, eval.disc_cost),
        };
        state.last_policy = executed;
        observer(&IterationSnapshot {
            k: state.k,
            counts: &counts,
            est: &est,
            estimate: &estimate,
            executed_policy: state.last_policy.as_ref(),
            pcse: pcse_diag.as_ref(),
            row: &row,
            prepared: prep,
        });
        rows.push(row.clone());
        cost_log.push(SparseCost::from_matrix(state.k, estimate.c_hat.view()));
    }

    let pac = pac_report(prep.canonical_cost.view(), estimate.c_hat.view(), cmdp, &est, cfg.target_eps)?;
    Ok(RunLog {
        strategy: cfg.strategy,
        seed,
        rows,
        cost_log,
        final_cost: estimate.c_hat,
        pac,
        expert_reward: prep.expert_reward,
        reached_target: state.eps_k <= cfg.target_eps,
        pcse_fallbacks: state.pcse_fallbacks,
    })
}

/// Writes `metrics.csv`, `cost_final.csv`, `costs.csv`, `pac.txt` and the
/// replayable `config.txt` (plus `layout.txt` for file layouts).
pub fn write_run(log: &RunLog, prep: &Prepared, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("metrics.csv"), log.metrics_csv())?;
    fs::write(dir.join("cost_final.csv"), matrix_to_string(&log.final_cost))?;
    fs::write(dir.join("costs.csv"), log.costs_csv())?;
    fs::write(dir.join("pac.txt"), log.pac.to_text())?;
    if let LayoutSource::File(_) = prep.config.layout {
        fs::write(dir.join("layout.txt"), prep.env.layout.serialize())?;
    }
    let mut cfg = prep.config.clone();
    cfg.strategy = log.strategy;
    fs::write(dir.join("config.txt"), cfg.to_text(log.seed, "layout.txt"))?;
    Ok(())
}

/// Outcome of replaying a saved run.
#[derive(Debug, Clone, PartialEq)]
pub struct Replay {
    pub recomputed: String,
    pub saved: String,
    /// 1-based line number of the first differing line.
    pub first_mismatch: Option<usize>,
}

/// Re-runs the experiment recorded in `dir/config.txt` and compares the
/// recomputed metrics with `dir/metrics.csv`.
pub fn replay_run(dir: &Path) -> Result<Replay> {
    let cfg = ExperimentConfig::from_file(&dir.join("config.txt"))?;
    let seed = cfg.seeds[0];
    let log = run_experiment(&cfg, seed)?;
    let recomputed = log.metrics_csv();
    let saved = fs::read_to_string(dir.join("metrics.csv"))?;
    let first_mismatch = if recomputed == saved {
        None
    } else {
        let mut a = recomputed.lines();
        let mut b = saved.lines();
        let mut i = 1;
        loop {
            match (a.next(), b.next()) {
                (Some(x), Some(y)) if x == y => i += 1,
                _ => break Some(i),
            }
        }
    };
    Ok(Replay { recomputed, saved, first_mismatch })
}

/// Writes the layout and the CMDP matrices: `transition.csv` has one row per
/// `(s, a)` in order `s * A + a`.
pub fn export_env(prep: &Prepared, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let cmdp = &prep.env.cmdp;
    let (s, a) = (cmdp.n_states(), cmdp.n_actions());
    fs::write(dir.join("layout.txt"), prep.env.layout.serialize())?;
    let flat = cmdp.transition().to_shape((s * a, s)).map_err(|e| IcrlError::Shape(e.to_string()))?.to_owned();
    fs::write(dir.join("transition.csv"), matrix_to_string(&flat))?;
    fs::write(dir.join("reward.csv"), matrix_to_string(cmdp.reward()))?;
    fs::write(dir.join("cost.csv"), matrix_to_string(cmdp.cost()))?;
    let mu0 = cmdp.mu0().to_shape((s, 1)).map_err(|e| IcrlError::Shape(e.to_string()))?.to_owned();
    fs::write(dir.join("mu0.csv"), matrix_to_string(&mu0))?;
    fs::write(dir.join("expert_policy.csv"), matrix_to_string(prep.expert.policy.probs()))?;
    Ok(())
}
