//! Shared fixtures for the solver benchmarks.

use std::f64::consts::PI;
use std::sync::Arc;

use kgm_core::elliptic::solve_chi;
use kgm_core::{BoundaryData, Grid, LiftingPotential, Params, ScalarField};

pub fn cube(n: usize) -> Arc<Grid> {
    Arc::new(Grid::cube(1.0, n).expect("valid grid"))
}

/// `prod sin(pi x_a)`, zero on the boundary.
pub fn bump(grid: &Arc<Grid>) -> ScalarField {
    ScalarField::dirichlet_from_fn(grid, |x| (0..3).map(|a| (PI * x[a]).sin()).product())
}

/// Constant outward flux `0.05`.
pub fn flux_lifting(grid: &Arc<Grid>) -> LiftingPotential {
    solve_chi(&BoundaryData::constant(grid, 0.05), 1e-12).expect("lifting converges")
}

/// Face dipole of amplitude `0.05` across `x`.
pub fn dipole_lifting(grid: &Arc<Grid>) -> LiftingPotential {
    solve_chi(&BoundaryData::per_face(grid, [0.05, -0.05, 0.0, 0.0, 0.0, 0.0]), 1e-12).expect("lifting converges")
}

pub fn params() -> Params {
    Params::new(1.0, 0.1, 0.0).expect("valid parameters")
}
