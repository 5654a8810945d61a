use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::elliptic::{default_max_iter, dirichlet_solve_weighted, LiftingPotential};
use crate::error::{KgmError, Result};
use crate::mesh::{weighted_inner, Grid, ScalarField};
use crate::reduced::Params;

/// Dirichlet eigenpair of the discrete Laplacian, eigenvector normalized
/// to unit quadrature `L^2` norm.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: f64,
    pub vector: ScalarField,
}

const EIGEN_SEED: u64 = 0x5eed_1a3b;

/// Smallest `k` Dirichlet eigenpairs by block inverse iteration with
/// Rayleigh-Ritz, stopping when the relative change of each of the `k`
/// Ritz values drops below `tol`.
pub fn dirichlet_eigenpairs(grid: &Arc<Grid>, k: usize, tol: f64) -> Result<Vec<EigenPair>> {
    if k == 0 {
        return Err(KgmError::InvalidParameter("need k >= 1 eigenpairs".into()));
    }
    let interior = grid.interior_nodes().len();
    if k > interior {
        return Err(KgmError::InvalidParameter(format!(
            "asked for {k} eigenpairs but the grid has {interior} interior nodes"
        )));
    }
    let block = (k + (k / 2).max(3)).min(interior);
    let n = grid.len();
    let w = grid.volume_weights();
    let mut rng = ChaCha8Rng::seed_from_u64(EIGEN_SEED);
    let mut basis: Vec<Vec<f64>> = (0..block)
        .map(|_| {
            let mut v = vec![0.0; n];
            for &i in grid.interior_nodes() {
                v[i] = rng.random_range(-1.0..1.0);
            }
            v
        })
        .collect();
    let linear_tol = (tol * 1e-2).clamp(1e-12, 1e-8);
    let max_outer = default_max_iter(n).min(1000);
    let mut prev: Vec<f64> = vec![f64::INFINITY; k];
    let mut solutions: Vec<Vec<f64>> = vec![vec![0.0; n]; block];

    for outer in 0..max_outer {
        // Y = K_D^{-1} W X
        for (x, y) in basis.iter().zip(solutions.iter_mut()) {
            let mut b: Vec<f64> = x.iter().zip(w).map(|(x, w)| x * w).collect();
            for &i in grid.boundary_nodes() {
                b[i] = 0.0;
            }
            dirichlet_solve_weighted(grid, &b, y, linear_tol)?;
        }
        let ortho = orthonormalize(w, &solutions);
        let m = ortho.len();
        let mut ky = vec![vec![0.0; n]; m];
        for (y, out) in ortho.iter().zip(ky.iter_mut()) {
            grid.apply_stiffness(y, out);
        }
        let a = DMatrix::from_fn(m, m, |i, j| {
            let s = crate::mesh::dot(&ortho[i], &ky[j]) + crate::mesh::dot(&ortho[j], &ky[i]);
            0.5 * s
        });
        let eig = SymmetricEigen::new(a);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        basis = order
            .iter()
            .map(|&c| {
                let mut v = vec![0.0; n];
                for (r, y) in ortho.iter().enumerate() {
                    let coef = eig.eigenvectors[(r, c)];
                    for (v, y) in v.iter_mut().zip(y) {
                        *v += coef * y;
                    }
                }
                v
            })
            .collect();
        let values: Vec<f64> = order.iter().map(|&c| eig.eigenvalues[c]).collect();
        if values.len() < k {
            return Err(KgmError::NotConverged {
                solver: "block inverse iteration",
                iterations: outer,
                residual: f64::NAN,
            });
        }
        let change = values[..k]
            .iter()
            .zip(&prev)
            .map(|(v, p)| ((v - p) / v).abs())
            .fold(0.0, f64::max);
        prev = values[..k].to_vec();
        if change <= tol {
            return Ok(values
                .into_iter()
                .zip(basis)
                .take(k)
                .map(|(value, v)| EigenPair {
                    value,
                    vector: ScalarField::new(grid.clone(), canonical_sign(v)).expect("grid length"),
                })
                .collect());
        }
        while basis.len() < block {
            let mut v = vec![0.0; n];
            for &i in grid.interior_nodes() {
                v[i] = rng.random_range(-1.0..1.0);
            }
            basis.push(v);
        }
        // x / lambda approximates K_D^{-1} W x for a converged Ritz vector
        solutions = basis
            .iter()
            .enumerate()
            .map(|(j, v)| {
                let s = values.get(j).map_or(0.0, |l| 1.0 / l);
                v.iter().map(|x| x * s).collect()
            })
            .collect();
    }
    Err(KgmError::NotConverged {
        solver: "block inverse iteration",
        iterations: max_outer,
        residual: f64::NAN,
    })
}

/// Modified Gram-Schmidt (two passes) in the quadrature inner product;
/// numerically dependent columns are dropped.
fn orthonormalize(w: &[f64], cols: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(cols.len());
    for c in cols {
        let mut v = c.clone();
        let norm0 = weighted_inner(w, &v, &v).sqrt();
        for _ in 0..2 {
            for q in &out {
                let p = weighted_inner(w, q, &v);
                for (v, q) in v.iter_mut().zip(q) {
                    *v -= p * q;
                }
            }
        }
        let norm = weighted_inner(w, &v, &v).sqrt();
        if norm > 1e-10 * norm0 && norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
            out.push(v);
        }
    }
    out
}

/// Sign convention: the entry of largest magnitude is positive.
fn canonical_sign(mut v: Vec<f64>) -> Vec<f64> {
    let big = v.iter().copied().fold(0.0f64, |a, b| if b.abs() > a.abs() { b } else { a });
    if big < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    v
}

pub fn lambda_k(grid: &Arc<Grid>, k: usize, tol: f64) -> Result<Vec<f64>> {
    Ok(dirichlet_eigenpairs(grid, k, tol)?.into_iter().map(|p| p.value).collect())
}

pub fn lambda1(grid: &Arc<Grid>, tol: f64) -> Result<f64> {
    Ok(lambda_k(grid, 1, tol)?[0])
}

/// Smallness conditions on the datum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmallnessReport {
    pub q_chi_inf: f64,
    /// `q |chi|_inf <= m`.
    pub sign_condition: bool,
    /// `q^2 |chi|_inf^2 < lambda_1 + m^2`.
    pub spectral_condition: bool,
    /// `min { j : q^2 |chi|_inf^2 - m^2 < lambda_j }`, 1-based; `None`
    /// when no supplied eigenvalue exceeds the threshold.
    pub split_index: Option<usize>,
    pub lambda1: f64,
}

impl SmallnessReport {
    pub fn passed(&self) -> bool {
        self.sign_condition && self.spectral_condition
    }
}

/// `lambdas` must hold the Dirichlet eigenvalues in increasing order,
/// starting with `lambda_1`.
pub fn smallness_check(lift: &LiftingPotential, params: &Params, lambdas: &[f64]) -> Result<SmallnessReport> {
    let Some(&lambda1) = lambdas.first() else {
        return Err(KgmError::InvalidParameter("need at least lambda_1".into()));
    };
    let q_chi = params.q.abs() * lift.chi_inf();
    let m2 = params.m * params.m;
    let threshold = q_chi * q_chi - m2;
    Ok(SmallnessReport {
        q_chi_inf: q_chi,
        sign_condition: q_chi <= params.m,
        spectral_condition: q_chi * q_chi < lambda1 + m2,
        split_index: lambdas.iter().position(|&l| threshold < l).map(|j| j + 1),
        lambda1,
    })
}
