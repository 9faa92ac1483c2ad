//! Random instance generators shared by the integration tests.
#![allow(dead_code)]

use icrl::cmdp::Cmdp;
use ndarray::{Array1, Array2, Array3};
use rand::seq::index::sample;
use rand::Rng;

/// Random row over `n` states with support of size `1..=max_support`.
pub fn random_row<R: Rng + ?Sized>(rng: &mut R, n: usize, max_support: usize) -> Vec<f64> {
    let k = rng.gen_range(1..=max_support.min(n));
    let mut row = vec![0.0; n];
    let idx = sample(rng, n, k);
    let weights: Vec<f64> = (0..k).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = weights.iter().sum();
    for (i, w) in idx.iter().zip(weights) {
        row[i] = w / total;
    }
    row
}

pub fn random_kernel<R: Rng + ?Sized>(rng: &mut R, s: usize, a: usize, max_support: usize) -> Array3<f64> {
    let mut k = Array3::zeros((s, a, s));
    for si in 0..s {
        for ai in 0..a {
            for (sj, p) in random_row(rng, s, max_support).into_iter().enumerate() {
                k[[si, ai, sj]] = p;
            }
        }
    }
    k
}

/// Random hard-constraint instance: sparse kernels so that safe routes
/// exist, and costs that are either 0 or `c_max`.
pub fn random_hard_instance<R: Rng + ?Sized>(rng: &mut R, s: usize, a: usize) -> Cmdp {
    let kernel = random_kernel(rng, s, a, 2);
    let reward = Array2::from_shape_fn((s, a), |_| rng.gen_range(0.0..1.0));
    let cost = Array2::from_shape_fn((s, a), |_| if rng.gen_bool(0.25) { 1.0 } else { 0.0 });
    let mut mu0 = Array1::zeros(s);
    mu0[rng.gen_range(0..s)] = 1.0;
    let gamma = rng.gen_range(0.5..0.95);
    Cmdp::new(kernel, reward, cost, 0.0, mu0, gamma, 1.0, 1.0).expect("generated instance is valid")
}

/// Random nonnegative matrix with at least one positive entry.
pub fn random_cost_matrix<R: Rng + ?Sized>(rng: &mut R, s: usize, a: usize, density: f64) -> Array2<f64> {
    let mut m = Array2::from_shape_fn((s, a), |_| if rng.gen_bool(density) { rng.gen_range(0.01..2.0) } else { 0.0 });
    if m.iter().all(|&x| x == 0.0) {
        m[[rng.gen_range(0..s), rng.gen_range(0..a)]] = rng.gen_range(0.01..2.0);
    }
    m
}
