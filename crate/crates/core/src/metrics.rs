//! Discounted returns, running scores, WGIoU and the PAC report.

use ndarray::{ArrayView2, Zip};

use crate::cmdp::Cmdp;
use crate::csvio::fmt17;
use crate::envs::EpisodeRecord;
use crate::error::{IcrlError, Result};
use crate::estimation::{pac_error, EstimatedProblem, PacErrors};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Signal {
    Reward,
    Cost,
}

pub fn discounted_return(episode: &EpisodeRecord, gamma: f64, signal: Signal) -> f64 {
    let mut total = 0.0;
    let mut disc = 1.0;
    for st in &episode.steps {
        total += disc
            * match signal {
                Signal::Reward => st.r,
                Signal::Cost => st.c,
            };
        disc *= gamma;
    }
    total
}

pub fn running_score(prev: f64, current: f64) -> f64 {
    0.2 * prev + 0.8 * current
}

/// How the `<c_hat*, c*>` term inside the WGIoU denominator is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WgiouVariant {
    /// Elementwise product per pair; numerator is its sum.
    #[default]
    Hadamard,
    /// Scalar inner product broadcast to every pair.
    ScalarInner,
}

fn min_positive(m: ArrayView2<f64>) -> Option<f64> {
    m.iter().copied().filter(|&x| x > 0.0).reduce(f64::min)
}

pub fn wgiou(c_hat: ArrayView2<f64>, c_true: ArrayView2<f64>) -> Result<f64> {
    wgiou_with(c_hat, c_true, WgiouVariant::Hadamard)
}

pub fn wgiou_with(c_hat: ArrayView2<f64>, c_true: ArrayView2<f64>, variant: WgiouVariant) -> Result<f64> {
    if c_hat.dim() != c_true.dim() {
        return Err(IcrlError::Shape(format!("wgiou: {:?} vs {:?}", c_hat.dim(), c_true.dim())));
    }
    if c_hat.iter().chain(c_true.iter()).any(|x| !x.is_finite() || *x < 0.0) {
        return Err(IcrlError::InvalidArgument("wgiou needs finite nonnegative costs".into()));
    }
    let min_true = min_positive(c_true).ok_or_else(|| IcrlError::InvalidArgument("true cost is identically zero".into()))?;
    let scale = min_positive(c_hat).map_or(min_true, |m| m.min(min_true));
    let hat = c_hat.mapv(|x| x / scale);
    let tru = c_true.mapv(|x| x / scale);
    let inner: f64 = Zip::from(&hat).and(&tru).fold(0.0, |acc, &a, &b| acc + a * b);
    let union: f64 = Zip::from(&hat).and(&tru).fold(0.0, |acc, &a, &b| acc + a.max(b));
    let overlap = if inner > 0.0 {
        let denom: f64 = match variant {
            WgiouVariant::Hadamard => Zip::from(&hat).and(&tru).fold(0.0, |acc, &a, &b| acc + a.max(b).max(a * b)),
            WgiouVariant::ScalarInner => Zip::from(&hat).and(&tru).fold(0.0, |acc, &a, &b| acc + a.max(b).max(inner)),
        };
        inner / denom
    } else {
        0.0
    };
    let penalty = if inner == 0.0 { (-union).exp() - 1.0 } else { 0.0 };
    Ok(overlap + penalty)
}

/// One row of `metrics.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub k: usize,
    pub samples: u64,
    pub eps_k: f64,
    pub disc_reward: f64,
    pub disc_cost: f64,
    pub wgiou: f64,
    pub running_reward: f64,
    pub running_cost: f64,
}

pub const METRICS_HEADER: &str = "k,samples,eps_k,disc_reward,disc_cost,wgiou,running_reward,running_cost,strategy,seed";

impl MetricRow {
    pub fn to_csv_line(&self, strategy: &str, seed: u64) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.k,
            self.samples,
            fmt17(self.eps_k),
            fmt17(self.disc_reward),
            fmt17(self.disc_cost),
            fmt17(self.wgiou),
            fmt17(self.running_reward),
            fmt17(self.running_cost),
            strategy,
            seed
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacReport {
    pub errors: PacErrors,
    pub target_eps: f64,
    pub satisfied: bool,
}

impl PacReport {
    pub fn to_text(&self) -> String {
        format!(
            "completeness_err={}\naccuracy_err={}\ntarget_eps={}\nsatisfied={}\n",
            fmt17(self.errors.completeness),
            fmt17(self.errors.accuracy),
            fmt17(self.target_eps),
            self.satisfied
        )
    }
}

pub fn pac_report(c_true: ArrayView2<f64>, c_hat: ArrayView2<f64>, cmdp: &Cmdp, est: &EstimatedProblem, target_eps: f64) -> Result<PacReport> {
    let errors = pac_error(c_true, c_hat, cmdp, est)?;
    let satisfied = errors.completeness <= target_eps && errors.accuracy <= target_eps;
    Ok(PacReport { errors, target_eps, satisfied })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::Step;
    use approx::assert_abs_diff_eq;
    use ndarray::{arr2, Array2};

    fn episode(rewards: &[f64]) -> EpisodeRecord {
        EpisodeRecord {
            steps: rewards.iter().map(|&r| Step { s: 0, a: 0, r, c: 0.0, next: 0 }).collect(),
            ..Default::default()
        }
    }

    #[test]
    fn discounted_return_examples() {
        assert_eq!(discounted_return(&episode(&[0.0; 5]), 0.9, Signal::Reward), 0.0);
        assert_eq!(discounted_return(&episode(&[1.0, 0.0, 0.0]), 0.9, Signal::Reward), 1.0);
        assert_abs_diff_eq!(discounted_return(&episode(&[1.0, 1.0, 1.0]), 0.5, Signal::Reward), 1.75);
        assert_eq!(discounted_return(&episode(&[1.0, 1.0]), 0.5, Signal::Cost), 0.0);
    }

    #[test]
    fn running_score_examples() {
        assert_abs_diff_eq!(running_score(0.0, 1.0), 0.8);
        assert_abs_diff_eq!(running_score(0.3, 0.3), 0.3);
        assert_abs_diff_eq!(running_score(1.0, 0.0), 0.2);
    }

    #[test]
    fn wgiou_examples() {
        let c = arr2(&[[1.0, 0.0], [0.0, 1.0]]);
        assert_abs_diff_eq!(wgiou(c.view(), c.view()).unwrap(), 1.0);
        let a = arr2(&[[1.0, 0.0], [0.0, 0.0]]);
        let b = arr2(&[[0.0, 0.0], [0.0, 1.0]]);
        assert_abs_diff_eq!(wgiou(a.view(), b.view()).unwrap(), (-2.0_f64).exp() - 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(wgiou(a.view(), b.view()).unwrap(), -0.864665, epsilon = 1e-6);
        let zero = Array2::zeros((2, 2));
        assert_abs_diff_eq!(wgiou(zero.view(), a.view()).unwrap(), -0.632121, epsilon = 1e-6);
        assert!(wgiou(a.view(), zero.view()).is_err());
    }

    #[test]
    fn scalar_variant_is_small_on_identical_supports() {
        let c = arr2(&[[1.0, 0.0], [0.0, 1.0]]);
        // inner = 2, denominator = 4 * 2
        assert_abs_diff_eq!(wgiou_with(c.view(), c.view(), WgiouVariant::ScalarInner).unwrap(), 0.25);
    }

    #[test]
    fn metric_line_format() {
        let row = MetricRow { k: 3, samples: 150, eps_k: 20.0, disc_reward: 0.5, disc_cost: 0.0, wgiou: -0.5, running_reward: 0.4, running_cost: 0.0 };
        let line = row.to_csv_line("bear", 123);
        assert_eq!(line.split(',').count(), METRICS_HEADER.split(',').count());
        assert!(line.starts_with("3,150,2.0000000000000000e1,"));
        assert!(line.ends_with(",bear,123"));
    }
}
