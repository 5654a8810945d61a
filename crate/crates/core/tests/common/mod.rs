#![allow(dead_code)]

use std::sync::Arc;

use kgm_core::mesh::{Grid, ScalarField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn cube(n: usize) -> Arc<Grid> {
    Arc::new(Grid::cube(1.0, n).unwrap())
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random combination of low sine modes plus a little nodal noise,
/// vanishing on the boundary.
pub fn random_dirichlet(grid: &Arc<Grid>, rng: &mut ChaCha8Rng, amplitude: f64) -> ScalarField {
    let l = grid.lengths();
    let coeffs: Vec<([f64; 3], f64)> = (0..6)
        .map(|_| {
            let k = [1.0 + rng.random_range(0..3) as f64, 1.0 + rng.random_range(0..3) as f64, 1.0 + rng.random_range(0..3) as f64];
            (k, rng.random_range(-1.0..1.0))
        })
        .collect();
    let noise: Vec<f64> = (0..grid.len()).map(|_| rng.random_range(-0.05..0.05)).collect();
    let pi = std::f64::consts::PI;
    let base = ScalarField::dirichlet_from_fn(grid, |x| {
        coeffs
            .iter()
            .map(|(k, c)| c * (0..3).map(|a| (pi * k[a] * x[a] / l[a]).sin()).product::<f64>())
            .sum()
    });
    let v: Vec<f64> = base.values().iter().zip(&noise).map(|(b, n)| amplitude * (b + n)).collect();
    ScalarField::new(grid.clone(), v).unwrap().to_dirichlet()
}

/// Random nodal field, not necessarily zero on the boundary.
pub fn random_field(grid: &Arc<Grid>, rng: &mut ChaCha8Rng, amplitude: f64) -> ScalarField {
    let v = (0..grid.len()).map(|_| amplitude * rng.random_range(-1.0..1.0)).collect();
    ScalarField::new(grid.clone(), v).unwrap()
}
