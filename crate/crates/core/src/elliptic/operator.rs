use std::sync::Arc;

use super::cg::{
    default_max_iter, pcg, CgSettings, Jacobi, JacobiWithConstants, LinearOperator, SolveReport,
};
use crate::error::Result;
use crate::mesh::{Grid, ScalarField};

/// `-Laplace + screening` with zero-flux closure by ghost-node mirroring.
///
/// Internally the solver works with the weighted matrix `K + W S`, which is
/// symmetric in the Euclidean sense; [`NeumannOperator::action`] returns the
/// strong form `W^{-1} (K + W S) f`, symmetric under the quadrature inner
/// product.
#[derive(Debug, Clone)]
pub struct NeumannOperator {
    grid: Arc<Grid>,
    screening: ScalarField,
    diag: Vec<f64>,
}

impl NeumannOperator {
    /// `screening` must be nonnegative.
    pub fn new(screening: ScalarField) -> Self {
        let grid = screening.grid().clone();
        let mut diag = grid.stiffness_diagonal();
        for ((d, w), s) in diag.iter_mut().zip(grid.volume_weights()).zip(screening.values()) {
            *d += w * s;
        }
        Self {
            grid,
            screening,
            diag,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn screening(&self) -> &ScalarField {
        &self.screening
    }

    /// `1^T (K + W S) 1 = integrate(screening)`.
    pub fn constant_energy(&self) -> f64 {
        self.screening.integrate()
    }

    /// Strong-form action `-Laplace f + screening * f`.
    pub fn action(&self, f: &ScalarField) -> Result<ScalarField> {
        self.screening.check_same_grid(f)?;
        let mut y = vec![0.0; f.values().len()];
        self.apply(f.values(), &mut y);
        for (y, w) in y.iter_mut().zip(self.grid.volume_weights()) {
            *y /= w;
        }
        Ok(ScalarField::from_vec_unchecked(&self.grid, y))
    }

    /// Solve `(K + W S) x = b` for a weighted right-hand side `b`.
    pub(crate) fn solve_weighted(
        &self,
        b: &[f64],
        x: &mut [f64],
        tol: f64,
    ) -> Result<SolveReport> {
        let inv_diag = self.diag.iter().map(|d| 1.0 / d).collect();
        let pre = JacobiWithConstants {
            inv_diag,
            constant_energy: self.constant_energy(),
        };
        let iw: Vec<f64> = self.grid.volume_weights().iter().map(|w| 1.0 / w).collect();
        pcg(
            self,
            &pre,
            b,
            x,
            &CgSettings {
                tol,
                max_iter: default_max_iter(self.grid.len()),
                inv_weight: &iw,
                project: None,
                name: "screened Neumann CG",
            },
        )
    }
}

impl LinearOperator for NeumannOperator {
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.grid.apply_stiffness(x, y);
        for (((y, x), w), s) in y
            .iter_mut()
            .zip(x)
            .zip(self.grid.volume_weights())
            .zip(self.screening.values())
        {
            *y += w * s * x;
        }
    }
}

/// Pure zero-flux stiffness `K`; singular, used for the lifting potential.
pub(crate) struct NeumannStiffness<'a>(pub &'a Grid);

impl LinearOperator for NeumannStiffness<'_> {
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.0.apply_stiffness(x, y);
    }
}

/// Stiffness restricted to interior nodes; boundary rows act as the identity.
pub(crate) struct DirichletStiffness<'a> {
    pub grid: &'a Grid,
    pub boundary_diag: Vec<f64>,
}

impl LinearOperator for DirichletStiffness<'_> {
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.grid.apply_stiffness(x, y);
        for (&i, d) in self.grid.boundary_nodes().iter().zip(&self.boundary_diag) {
            y[i] = d * x[i];
        }
    }
}

/// Solve `-Laplace d = r` with `d = 0` on the boundary, i.e. `K_D d = W r`.
/// This is the Riesz map of `H^1_0` with inner product `(grad u, grad v)`.
pub fn solve_dirichlet_poisson(
    rhs: &ScalarField,
    tol: f64,
    warm: Option<&ScalarField>,
) -> Result<(ScalarField, SolveReport)> {
    let grid = rhs.grid();
    let mut b: Vec<f64> = rhs
        .values()
        .iter()
        .zip(grid.volume_weights())
        .map(|(r, w)| r * w)
        .collect();
    for &i in grid.boundary_nodes() {
        b[i] = 0.0;
    }
    let mut x = match warm {
        Some(w) => w.to_dirichlet().into_values(),
        None => vec![0.0; grid.len()],
    };
    let rep = dirichlet_solve_weighted(grid, &b, &mut x, tol)?;
    Ok((ScalarField::from_vec_unchecked(grid, x), rep))
}

pub(crate) fn dirichlet_solve_weighted(
    grid: &Grid,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
) -> Result<SolveReport> {
    let diag = grid.stiffness_diagonal();
    let boundary_diag: Vec<f64> = grid.boundary_nodes().iter().map(|&i| diag[i]).collect();
    let op = DirichletStiffness {
        grid,
        boundary_diag,
    };
    let pre = Jacobi {
        inv_diag: diag.iter().map(|d| 1.0 / d).collect(),
    };
    let mut iw: Vec<f64> = grid.volume_weights().iter().map(|w| 1.0 / w).collect();
    for &i in grid.boundary_nodes() {
        iw[i] = 0.0;
    }
    pcg(
        &op,
        &pre,
        b,
        x,
        &CgSettings {
            tol,
            max_iter: default_max_iter(grid.len()),
            inv_weight: &iw,
            project: None,
            name: "Dirichlet Poisson CG",
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::NormKind;

    #[test]
    fn action_is_symmetric_in_quadrature_product() {
        let grid = Arc::new(Grid::new([1.0, 0.8, 1.2], [5, 6, 7]).unwrap());
        let s = ScalarField::from_fn(&grid, |p| 1.0 + p[0] * p[1]);
        let op = NeumannOperator::new(s);
        let f = ScalarField::from_fn(&grid, |p| (3.0 * p[0]).sin() + p[2]);
        let g = ScalarField::from_fn(&grid, |p| (p[1] * p[2]).cos());
        let a = op.action(&f).unwrap().inner(&g).unwrap();
        let b = f.inner(&op.action(&g).unwrap()).unwrap();
        assert!((a - b).abs() <= 1e-10 * a.abs());
        // positive definite since the screening is positive
        assert!(op.action(&f).unwrap().inner(&f).unwrap() > 0.0);
    }

    #[test]
    fn dirichlet_poisson_recovers_sine_mode() {
        let n = 17;
        let grid = Arc::new(Grid::cube(1.0, n).unwrap());
        let pi = std::f64::consts::PI;
        let mode = ScalarField::dirichlet_from_fn(&grid, |p| {
            (pi * p[0]).sin() * (pi * p[1]).sin() * (pi * p[2]).sin()
        });
        let h = grid.spacing()[0];
        let lam = 3.0 * 4.0 / (h * h) * (pi * h / 2.0).sin().powi(2);
        let (d, rep) = solve_dirichlet_poisson(&mode, 1e-12, None).unwrap();
        assert!(rep.residual <= 1e-12);
        let err = d.sub(&mode.scale(1.0 / lam)).unwrap().norm(NormKind::Linf);
        assert!(err < 1e-10, "{err}");
        assert!(d.is_dirichlet_conforming());
    }
}
