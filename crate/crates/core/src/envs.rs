//! Gridworld CMDPs with slip noise, episodic interaction and expert queries.
//!
//! Cells are `(row, col)` with row 0 at the bottom. States are indexed
//! row-major: `s = row * width + col`.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::path::Path;

use ndarray::{Array1, Array2, Array3};
use rand::Rng;

use crate::cmdp::{Cmdp, Policy};
use crate::error::{IcrlError, Result};
use crate::solver::SafeSolution;

/// Action order and `(d_row, d_col)` offsets: N, S, E, W, NE, NW, SE, SW.
pub const ACTIONS: [(isize, isize); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];

pub const ACTION_NAMES: [&str; 8] = ["N", "S", "E", "W", "NE", "NW", "SE", "SW"];

pub const N_ACTIONS: usize = ACTIONS.len();

#[derive(Debug, Clone, PartialEq)]
pub struct GridLayout {
    pub width: usize,
    pub height: usize,
    pub start: (usize, usize),
    pub goal: (usize, usize),
    pub constrained_cells: BTreeSet<(usize, usize)>,
    pub slip: f64,
    pub horizon: usize,
}

impl GridLayout {
    pub fn n_states(&self) -> usize {
        self.width * self.height
    }

    pub fn state(&self, cell: (usize, usize)) -> usize {
        cell.0 * self.width + cell.1
    }

    pub fn cell(&self, s: usize) -> (usize, usize) {
        (s / self.width, s % self.width)
    }

    /// Target of moving from `cell` in direction `a`, if it lies on the grid.
    pub fn target(&self, cell: (usize, usize), a: usize) -> Option<(usize, usize)> {
        let (dr, dc) = ACTIONS[a];
        let r = cell.0.checked_add_signed(dr)?;
        let c = cell.1.checked_add_signed(dc)?;
        (r < self.height && c < self.width).then_some((r, c))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(IcrlError::InvalidArgument(format!("layout: {m}")));
        if self.width == 0 || self.height == 0 {
            return bad("empty grid");
        }
        let on_grid = |(r, c): (usize, usize)| r < self.height && c < self.width;
        if !on_grid(self.start) || !on_grid(self.goal) || !self.constrained_cells.iter().all(|&x| on_grid(x)) {
            return bad("cell outside the grid");
        }
        if self.constrained_cells.contains(&self.start) {
            return bad("start cell is constrained");
        }
        if self.goal == self.start {
            return bad("goal equals start");
        }
        if !(0.0..1.0).contains(&self.slip) {
            return bad("slip must lie in [0, 1)");
        }
        if self.horizon == 0 {
            return bad("horizon must be at least 1");
        }
        Ok(())
    }

    /// Parses `W H slip horizon` followed by `H` rows of `W` characters from
    /// `.`, `S`, `G`, `#`. The first grid line is the top row.
    pub fn parse(text: &str) -> Result<Self> {
        let err = |line: usize, column: usize, message: String| IcrlError::Layout { line, column, message };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
        let (hl, header) = lines.next().ok_or_else(|| err(1, 1, "empty layout".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(err(hl, 1, format!("header needs `W H slip horizon`, got {} fields", fields.len())));
        }
        let col_of = |i: usize| header.find(fields[i]).unwrap_or(0) + 1;
        let int = |i: usize| fields[i].parse::<usize>().map_err(|e| err(hl, col_of(i), format!("{:?}: {e}", fields[i])));
        let width = int(0)?;
        let height = int(1)?;
        let slip = fields[2].parse::<f64>().map_err(|e| err(hl, col_of(2), format!("{:?}: {e}", fields[2])))?;
        let horizon = int(3)?;
        if width == 0 || height == 0 {
            return Err(err(hl, 1, "grid dimensions must be positive".into()));
        }
        if !(0.0..1.0).contains(&slip) {
            return Err(err(hl, col_of(2), format!("slip {slip} outside [0, 1)")));
        }
        if horizon == 0 {
            return Err(err(hl, col_of(3), "horizon must be at least 1".into()));
        }

        let mut start = None;
        let mut goal = None;
        let mut constrained_cells = BTreeSet::new();
        let mut n_rows = 0;
        let mut last_line = hl;
        for (ln, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            last_line = ln;
            if n_rows == height {
                return Err(err(ln, 1, format!("more than {height} grid rows")));
            }
            let row = height - 1 - n_rows;
            let chars: Vec<char> = line.chars().collect();
            if chars.len() != width {
                return Err(err(ln, chars.len().min(width) + 1, format!("row has {} cells, expected {width}", chars.len())));
            }
            for (col, ch) in chars.into_iter().enumerate() {
                let here = (row, col);
                match ch {
                    '.' => {}
                    '#' => {
                        constrained_cells.insert(here);
                    }
                    'S' | 'G' => {
                        let slot = if ch == 'S' { &mut start } else { &mut goal };
                        if slot.is_some() {
                            return Err(err(ln, col + 1, format!("second '{ch}' cell")));
                        }
                        *slot = Some(here);
                    }
                    other => return Err(err(ln, col + 1, format!("unexpected character {other:?}"))),
                }
            }
            n_rows += 1;
        }
        if n_rows != height {
            return Err(err(last_line + 1, 1, format!("found {n_rows} grid rows, expected {height}")));
        }
        let start = start.ok_or_else(|| err(last_line, 1, "no 'S' cell".into()))?;
        let goal = goal.ok_or_else(|| err(last_line, 1, "no 'G' cell".into()))?;
        let layout = Self { width, height, start, goal, constrained_cells, slip, horizon };
        layout.validate()?;
        Ok(layout)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn serialize(&self) -> String {
        let mut out = format!("{} {} {} {}\n", self.width, self.height, self.slip, self.horizon);
        for row in (0..self.height).rev() {
            for col in 0..self.width {
                let here = (row, col);
                out.push(if here == self.start {
                    'S'
                } else if here == self.goal {
                    'G'
                } else if self.constrained_cells.contains(&here) {
                    '#'
                } else {
                    '.'
                });
            }
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for GridLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.serialize())
    }
}

/// Scalar parameters of the generated CMDP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridParams {
    pub gamma: f64,
    pub r_max: f64,
    pub c_max: f64,
    pub budget: f64,
}

impl Default for GridParams {
    fn default() -> Self {
        Self { gamma: 0.95, r_max: 1.0, c_max: 1.0, budget: 0.0 }
    }
}

/// Builds the gridworld CMDP and returns it with its true cost matrix.
///
/// * The intended move succeeds with probability `1 - slip`; with
///   probability `slip` a direction is drawn uniformly among the viable
///   ones (those landing on the grid, the intended one included).
/// * An off-grid intended move leaves the agent in place.
/// * The goal is absorbing. `r(s, a) = R_max * P(goal | s, a)` for `s` off
///   the goal, i.e. the expected reward for entering it; zero at the goal.
/// * `c(s, a) = C_max` when the intended destination of `a` from `s` is a
///   constrained cell (including staying in one after a blocked move).
pub fn make_gridworld(layout: &GridLayout, params: GridParams) -> Result<(Cmdp, Array2<f64>)> {
    layout.validate()?;
    let (n, na) = (layout.n_states(), N_ACTIONS);
    let goal = layout.state(layout.goal);
    let mut p = Array3::zeros((n, na, n));
    let mut reward = Array2::zeros((n, na));
    let mut cost = Array2::zeros((n, na));
    for s in 0..n {
        let cell = layout.cell(s);
        if s == goal {
            for a in 0..na {
                p[[s, a, s]] = 1.0;
            }
            continue;
        }
        let viable: Vec<usize> = (0..na).filter_map(|d| layout.target(cell, d).map(|t| layout.state(t))).collect();
        for a in 0..na {
            let intended = layout.target(cell, a).map_or(s, |t| layout.state(t));
            if viable.is_empty() {
                p[[s, a, s]] = 1.0;
            } else {
                p[[s, a, intended]] += 1.0 - layout.slip;
                let share = layout.slip / viable.len() as f64;
                for &t in &viable {
                    p[[s, a, t]] += share;
                }
            }
            reward[[s, a]] = params.r_max * p[[s, a, goal]];
            if layout.constrained_cells.contains(&layout.cell(intended)) {
                cost[[s, a]] = params.c_max;
            }
        }
    }
    let mut mu0 = Array1::zeros(n);
    mu0[layout.state(layout.start)] = 1.0;
    let cmdp = Cmdp::new(p, reward, cost.clone(), params.budget, mu0, params.gamma, params.r_max, params.c_max)?;
    Ok((cmdp, cost))
}

/// Whether some policy reaches the goal from the start with positive
/// probability.
pub fn goal_reachable(cmdp: &Cmdp, layout: &GridLayout) -> bool {
    let n = cmdp.n_states();
    let mut seen = vec![false; n];
    let start = layout.state(layout.start);
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    let p = cmdp.transition();
    while let Some(s) = queue.pop_front() {
        for a in 0..cmdp.n_actions() {
            for t in 0..n {
                if p[[s, a, t]] > 0.0 && !seen[t] {
                    seen[t] = true;
                    queue.push_back(t);
                }
            }
        }
    }
    seen[layout.state(layout.goal)]
}

/// Cumulative next-state distributions for sampling.
#[derive(Debug, Clone)]
struct Sampler {
    rows: Vec<Vec<(usize, f64)>>,
    n_actions: usize,
}

impl Sampler {
    fn new(p: &Array3<f64>) -> Self {
        let (s, a, _) = p.dim();
        let mut rows = Vec::with_capacity(s * a);
        for si in 0..s {
            for ai in 0..a {
                let mut acc = 0.0;
                let row: Vec<(usize, f64)> = p
                    .slice(ndarray::s![si, ai, ..])
                    .iter()
                    .enumerate()
                    .filter(|(_, &x)| x > 0.0)
                    .map(|(t, &x)| {
                        acc += x;
                        (t, acc)
                    })
                    .collect();
                rows.push(row);
            }
        }
        Self { rows, n_actions: a }
    }

    fn sample<R: Rng + ?Sized>(&self, s: usize, a: usize, rng: &mut R) -> usize {
        let row = &self.rows[s * self.n_actions + a];
        let total = row.last().map_or(1.0, |x| x.1);
        let u: f64 = rng.gen::<f64>() * total;
        row.iter().find(|&&(_, c)| u < c).or(row.last()).map_or(s, |x| x.0)
    }
}

/// An environment handle: the true CMDP plus sampling access.
#[derive(Debug, Clone)]
pub struct GridEnv {
    pub layout: GridLayout,
    pub cmdp: Cmdp,
    pub true_cost: Array2<f64>,
    generative: bool,
    sampler: Sampler,
}

impl GridEnv {
    pub fn new(layout: GridLayout, params: GridParams, generative: bool) -> Result<Self> {
        let (cmdp, true_cost) = make_gridworld(&layout, params)?;
        let sampler = Sampler::new(cmdp.transition());
        Ok(Self { layout, cmdp, true_cost, generative, sampler })
    }

    pub fn is_generative(&self) -> bool {
        self.generative
    }

    pub fn with_generative(mut self, generative: bool) -> Self {
        self.generative = generative;
        self
    }

    /// Generative-model query at an arbitrary pair.
    pub fn query<R: Rng + ?Sized>(&self, s: usize, a: usize, rng: &mut R) -> Result<usize> {
        if !self.generative {
            return Err(IcrlError::GenerativeDisabled);
        }
        if s >= self.cmdp.n_states() || a >= self.cmdp.n_actions() {
            return Err(IcrlError::OutOfRange(format!("({s}, {a})")));
        }
        Ok(self.sampler.sample(s, a, rng))
    }

    pub fn start_state(&self) -> usize {
        self.layout.state(self.layout.start)
    }

    fn is_absorbing(&self, s: usize) -> bool {
        (0..self.cmdp.n_actions()).all(|a| self.cmdp.transition()[[s, a, s]] == 1.0)
    }
}

/// One step `(s, a, r, c, s')`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub s: usize,
    pub a: usize,
    pub r: f64,
    pub c: f64,
    pub next: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EpisodeRecord {
    pub steps: Vec<Step>,
    /// Expert action drawn at each distinct state acted in, in first-visit
    /// order. Dead states are skipped.
    pub expert_queries: Vec<(usize, usize)>,
    /// The step cap ended the episode before an absorbing state was reached.
    pub truncated: bool,
}

impl EpisodeRecord {
    pub fn transitions(&self) -> Vec<(usize, usize, usize)> {
        self.steps.iter().map(|st| (st.s, st.a, st.next)).collect()
    }
}

/// Draws an action from a policy row.
pub fn sample_action<R: Rng + ?Sized>(policy: &Policy, s: usize, rng: &mut R) -> usize {
    let row = policy.probs().row(s);
    if let Some(a) = policy.action(s) {
        return a;
    }
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (a, &p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return a;
        }
    }
    row.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Runs one episode of `horizon` steps from `mu0`. `act` picks the action at
/// each visited state. The episode continues inside absorbing states.
pub fn run_episode<R1, R2, F>(env: &GridEnv, horizon: usize, mut act: F, env_rng: &mut R1, expert: &SafeSolution, expert_rng: &mut R2) -> EpisodeRecord
where
    R1: Rng + ?Sized,
    R2: Rng + ?Sized,
    F: FnMut(usize) -> usize,
{
    let cmdp = &env.cmdp;
    let mut s = sample_from(cmdp.mu0().as_slice().expect("contiguous"), env_rng);
    let mut queried = vec![false; cmdp.n_states()];
    let mut rec = EpisodeRecord::default();
    for _ in 0..horizon {
        if !queried[s] {
            queried[s] = true;
            if !expert.is_dead(s) {
                rec.expert_queries.push((s, sample_action(&expert.policy, s, expert_rng)));
            }
        }
        let a = act(s);
        let next = env.sampler.sample(s, a, env_rng);
        rec.steps.push(Step { s, a, r: cmdp.reward()[[s, a]], c: cmdp.cost()[[s, a]], next });
        s = next;
    }
    rec.truncated = !env.is_absorbing(s);
    rec
}

/// [`run_episode`] with actions drawn from a fixed policy.
pub fn run_policy_episode<R1, R2, R3>(
    env: &GridEnv,
    policy: &Policy,
    horizon: usize,
    env_rng: &mut R1,
    policy_rng: &mut R2,
    expert: &SafeSolution,
    expert_rng: &mut R3,
) -> EpisodeRecord
where
    R1: Rng + ?Sized,
    R2: Rng + ?Sized,
    R3: Rng + ?Sized,
{
    run_episode(env, horizon, |s| sample_action(policy, s, policy_rng), env_rng, expert, expert_rng)
}

fn sample_from<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    if let Some(i) = probs.iter().position(|&p| p == 1.0) {
        return i;
    }
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// The four shipped settings, embedded so the binary works from any
/// directory. The same text lives in `envs/setting{1..4}.txt`.
pub fn builtin_layout(setting: u8) -> Result<GridLayout> {
    let text = match setting {
        1 => include_str!("../../../envs/setting1.txt"),
        2 => include_str!("../../../envs/setting2.txt"),
        3 => include_str!("../../../envs/setting3.txt"),
        4 => include_str!("../../../envs/setting4.txt"),
        other => return Err(IcrlError::InvalidArgument(format!("setting {other} not in 1..=4"))),
    };
    GridLayout::parse(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::solve_cmdp;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const ONE_BY_TWO: &str = "2 1 0 5\nSG\n";

    #[test]
    fn parse_round_trip_and_errors() {
        for k in 1..=4 {
            let l = builtin_layout(k).unwrap();
            assert_eq!(GridLayout::parse(&l.serialize()).unwrap(), l);
            assert_eq!(l.n_states(), 49);
        }
        let l = GridLayout::parse(ONE_BY_TWO).unwrap();
        assert_eq!(l.serialize(), ONE_BY_TWO);

        let two_starts = "3 1 0 5\nSSG\n";
        match GridLayout::parse(two_starts) {
            Err(IcrlError::Layout { line, column, .. }) => assert_eq!((line, column), (2, 2)),
            other => panic!("{other:?}"),
        }
        let ragged = "3 2 0 5\nS..\n.G\n";
        assert!(matches!(GridLayout::parse(ragged), Err(IcrlError::Layout { line: 3, .. })));
        let bad_char = "2 1 0 5\nSx\n";
        assert!(matches!(GridLayout::parse(bad_char), Err(IcrlError::Layout { line: 2, column: 2, .. })));
        assert!(GridLayout::parse("2 1 0 5\nS.\n").is_err());
        assert!(GridLayout::parse("2 2 0 5\nSG\n").is_err());
    }

    #[test]
    fn bottom_row_is_row_zero() {
        let l = GridLayout::parse("2 2 0 3\n.G\nS#\n").unwrap();
        assert_eq!(l.start, (0, 0));
        assert_eq!(l.goal, (1, 1));
        assert!(l.constrained_cells.contains(&(0, 1)));
    }

    #[test]
    fn gridworld_shapes_and_rows() {
        let l = builtin_layout(1).unwrap();
        let (m, c) = make_gridworld(&l, GridParams::default()).unwrap();
        assert_eq!((m.n_states(), m.n_actions()), (49, 8));
        assert_eq!(c, *m.cost());
        for row in m.transition().lanes(ndarray::Axis(2)) {
            assert!((row.sum() - 1.0).abs() < 1e-12);
        }
        assert!(goal_reachable(&m, &l));
    }

    #[test]
    fn corner_has_three_viable_directions() {
        let l = builtin_layout(1).unwrap();
        let viable = (0..8).filter(|&a| l.target((0, 0), a).is_some()).count();
        assert_eq!(viable, 3);
        let (m, _) = make_gridworld(&l, GridParams::default()).unwrap();
        // blocked move (S) from the corner: stay w.p. 0.95, slip 0.05/3 each
        let p = m.transition();
        assert!((p[[0, 1, 0]] - 0.95).abs() < 1e-12);
        assert!((p[[0, 1, 7]] - 0.05 / 3.0).abs() < 1e-12);
        assert!((p[[0, 0, 7]] - (0.95 + 0.05 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn deterministic_without_slip() {
        let mut l = builtin_layout(1).unwrap();
        l.slip = 0.0;
        let (m, _) = make_gridworld(&l, GridParams::default()).unwrap();
        for x in m.transition().iter() {
            assert!(*x == 0.0 || *x == 1.0);
        }
        let l = GridLayout::parse(ONE_BY_TWO).unwrap();
        let (m, _) = make_gridworld(&l, GridParams::default()).unwrap();
        let to_goal: Vec<usize> = (0..8).filter(|&a| m.transition()[[0, a, 1]] == 1.0).collect();
        assert_eq!(to_goal, vec![2]);
        assert_eq!(m.reward()[[0, 2]], 1.0);
        assert_eq!(m.reward().row(1).sum(), 0.0);
    }

    #[test]
    fn episodes_are_deterministic_and_full_length() {
        let env = GridEnv::new(builtin_layout(1).unwrap(), GridParams::default(), false).unwrap();
        let expert = solve_cmdp(&env.cmdp).unwrap();
        let pi = Policy::uniform(49, 8);
        let run = |seed| {
            let mut e = ChaCha8Rng::seed_from_u64(seed);
            let mut p = ChaCha8Rng::seed_from_u64(seed + 1);
            let mut x = ChaCha8Rng::seed_from_u64(seed + 2);
            run_policy_episode(&env, &pi, 50, &mut e, &mut p, &expert, &mut x)
        };
        assert_eq!(run(7), run(7));
        assert_eq!(run(7).steps.len(), 50);
        let one = {
            let mut r = ChaCha8Rng::seed_from_u64(0);
            run_episode(&env, 1, |_| 0, &mut r.clone(), &expert, &mut r)
        };
        assert_eq!(one.steps.len(), 1);
        assert_eq!(one.expert_queries.len(), 1);
        let visited: BTreeSet<usize> = run(3).steps.iter().map(|s| s.s).collect();
        assert_eq!(run(3).expert_queries.len(), visited.len());
    }

    #[test]
    fn absorbing_start_loops() {
        let l = GridLayout::parse(ONE_BY_TWO).unwrap();
        let mut env = GridEnv::new(l, GridParams::default(), false).unwrap();
        // make the goal the start distribution
        let mu0 = ndarray::arr1(&[0.0, 1.0]);
        env.cmdp = Cmdp::new(
            env.cmdp.transition().clone(),
            env.cmdp.reward().clone(),
            env.cmdp.cost().clone(),
            0.0,
            mu0,
            0.95,
            1.0,
            1.0,
        )
        .unwrap();
        let expert = solve_cmdp(&env.cmdp).unwrap();
        let mut r = ChaCha8Rng::seed_from_u64(1);
        let rec = run_episode(&env, 4, |_| 3, &mut r.clone(), &expert, &mut r);
        assert_eq!(rec.steps.len(), 4);
        assert!(rec.steps.iter().all(|st| st.s == 1 && st.next == 1));
        assert!(!rec.truncated);
    }

    #[test]
    fn generative_access_is_gated() {
        let env = GridEnv::new(builtin_layout(2).unwrap(), GridParams::default(), false).unwrap();
        let mut r = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(env.query(0, 0, &mut r), Err(IcrlError::GenerativeDisabled)));
        let env = env.with_generative(true);
        assert!(env.query(0, 0, &mut r).unwrap() < 49);
    }
}
