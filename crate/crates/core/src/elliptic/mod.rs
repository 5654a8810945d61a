//! Linear elliptic solves: the lifting potential `chi` of the Neumann datum
//! and the screened zero-flux problems that define `xi_u`, `eta_u` and
//! `phi_u = xi_u + eta_u`.

mod cg;
mod operator;

pub use cg::{default_max_iter, SolveReport};
pub use operator::{solve_dirichlet_poisson, NeumannOperator};

pub(crate) use cg::{pcg, CgSettings, Jacobi};
pub(crate) use operator::dirichlet_solve_weighted;

use std::sync::Arc;

use serde::Serialize;

use crate::error::{KgmError, Result};
use crate::mesh::{BoundaryData, Grid, NormKind, ScalarField};
use operator::NeumannStiffness;

/// Default relative residual tolerance of the linear solves.
pub const DEFAULT_LINEAR_TOL: f64 = 1e-10;

/// Zero-mean solution `chi` of `Laplace chi = kappa`, `d chi / dn = h`.
#[derive(Debug, Clone)]
pub struct LiftingPotential {
    chi: ScalarField,
    boundary: BoundaryData,
    kappa: f64,
    chi_inf: f64,
    chi_grad: f64,
    chi_max: f64,
    chi_min: f64,
    report: SolveReport,
}

/// Summary numbers of a lifting potential, for reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LiftingSummary {
    pub kappa: f64,
    pub boundary_integral: f64,
    pub chi_inf: f64,
    pub chi_grad: f64,
    pub chi_max: f64,
    pub chi_min: f64,
    pub iterations: usize,
    pub residual: f64,
}

impl LiftingPotential {
    pub fn chi(&self) -> &ScalarField {
        &self.chi
    }

    pub fn boundary(&self) -> &BoundaryData {
        &self.boundary
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.chi.grid()
    }

    /// `kappa`, snapped to exactly zero when `int h` vanishes up to round-off.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn is_mean_zero(&self) -> bool {
        self.kappa == 0.0
    }

    pub fn chi_inf(&self) -> f64 {
        self.chi_inf
    }

    pub fn chi_grad(&self) -> f64 {
        self.chi_grad
    }

    pub fn chi_max(&self) -> f64 {
        self.chi_max
    }

    pub fn chi_min(&self) -> f64 {
        self.chi_min
    }

    pub fn report(&self) -> SolveReport {
        self.report
    }

    pub fn summary(&self) -> LiftingSummary {
        LiftingSummary {
            kappa: self.kappa,
            boundary_integral: self.boundary.boundary_integral(),
            chi_inf: self.chi_inf,
            chi_grad: self.chi_grad,
            chi_max: self.chi_max,
            chi_min: self.chi_min,
            iterations: self.report.iterations,
            residual: self.report.residual,
        }
    }

    /// Strong residual `Laplace chi - kappa` (flux source included) in the quadrature norm.
    pub fn residual_norm(&self) -> f64 {
        let grid = self.grid();
        let mut kchi = vec![0.0; grid.len()];
        grid.apply_stiffness(self.chi.values(), &mut kchi);
        let s = self.boundary.flux_source();
        grid.volume_weights()
            .iter()
            .zip(&kchi)
            .zip(&s)
            .map(|((w, k), s)| {
                // K chi = s - kappa W 1  <=>  -Laplace_h chi + flux = -kappa
                let r = (s - k) / w - self.kappa;
                w * r * r
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// Solve for the lifting potential.
///
/// The flux enters as the boundary source `surface_weight * h`, and `kappa`
/// is the quadrature of `h` over `|Omega|`, so the singular system is
/// compatible by construction. Iterates are kept zero-mean.
pub fn solve_chi(h: &BoundaryData, tol: f64) -> Result<LiftingPotential> {
    if !(tol > 0.0) {
        return Err(KgmError::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let grid = h.grid().clone();
    let n = grid.len();
    let kappa = if h.is_mean_zero() { 0.0 } else { h.kappa() };
    let w = grid.volume_weights();
    let mut b = h.flux_source();
    for (b, w) in b.iter_mut().zip(w) {
        *b -= kappa * w;
    }
    let mean_b = b.iter().sum::<f64>() / n as f64;
    b.iter_mut().for_each(|v| *v -= mean_b);

    let volume = grid.volume();
    let project = |x: &mut [f64], r: &mut [f64]| {
        let mx = x.iter().zip(w).map(|(x, w)| x * w).sum::<f64>() / volume;
        x.iter_mut().for_each(|v| *v -= mx);
        let mr = r.iter().sum::<f64>() / n as f64;
        r.iter_mut().for_each(|v| *v -= mr);
    };
    let diag = grid.stiffness_diagonal();
    let pre = Jacobi {
        inv_diag: diag.iter().map(|d| 1.0 / d).collect(),
    };
    let iw: Vec<f64> = w.iter().map(|w| 1.0 / w).collect();
    let mut x = vec![0.0; n];
    let report = pcg(
        &NeumannStiffness(&grid),
        &pre,
        &b,
        &mut x,
        &CgSettings {
            tol,
            max_iter: default_max_iter(n),
            inv_weight: &iw,
            project: Some(&project),
            name: "lifting CG",
        },
    )?;
    let chi = ScalarField::from_vec_unchecked(&grid, x);
    Ok(LiftingPotential {
        chi_inf: chi.norm(NormKind::Linf),
        chi_grad: chi.norm(NormKind::GradL2),
        chi_max: chi.max(),
        chi_min: chi.min(),
        chi,
        boundary: h.clone(),
        kappa,
        report,
    })
}

/// Threshold below which `u` counts as the zero function for the screened problem.
pub fn degenerate_threshold(grid: &Grid) -> f64 {
    1e-14 * grid.volume()
}

/// Solve `-Laplace phi + q^2 u^2 phi = rho` with zero flux.
pub fn solve_screened(u: &ScalarField, rho: &ScalarField, q: f64, tol: f64) -> Result<ScalarField> {
    solve_screened_with(u, rho, q, tol, None).map(|(f, _)| f)
}

/// [`solve_screened`] with an optional initial guess and the solver report.
pub fn solve_screened_with(
    u: &ScalarField,
    rho: &ScalarField,
    q: f64,
    tol: f64,
    warm: Option<&ScalarField>,
) -> Result<(ScalarField, SolveReport)> {
    u.check_same_grid(rho)?;
    if !(tol > 0.0) {
        return Err(KgmError::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let grid = u.grid();
    let q2 = q * q;
    let screening = u.map(|v| q2 * v * v);
    let integral = screening.integrate();
    if !(integral > q2 * degenerate_threshold(grid)) || q2 == 0.0 {
        return Err(KgmError::DegenerateScreening {
            integral: u.map(|v| v * v).integrate(),
        });
    }
    let op = NeumannOperator::new(screening);
    let b: Vec<f64> = rho
        .values()
        .iter()
        .zip(grid.volume_weights())
        .map(|(r, w)| r * w)
        .collect();
    let mut x = match warm {
        Some(w) => {
            u.check_same_grid(w)?;
            w.values().to_vec()
        }
        None => vec![0.0; grid.len()],
    };
    let report = op.solve_weighted(&b, &mut x, tol)?;
    Ok((ScalarField::from_vec_unchecked(grid, x), report))
}

/// `xi_u`: zero-flux solution of `Laplace xi - q^2 u^2 xi = q^2 chi u^2`.
///
/// With `q = 0` the equation carries no information about `xi` and every
/// place `xi_u` enters is multiplied by `q^2`; the zero field is returned.
pub fn compute_xi(u: &ScalarField, lift: &LiftingPotential, q: f64, tol: f64) -> Result<ScalarField> {
    compute_xi_with(u, lift, q, tol, None).map(|(f, _)| f)
}

pub fn compute_xi_with(
    u: &ScalarField,
    lift: &LiftingPotential,
    q: f64,
    tol: f64,
    warm: Option<&ScalarField>,
) -> Result<(ScalarField, SolveReport)> {
    u.check_same_grid(lift.chi())?;
    if q == 0.0 || lift.chi_inf() == 0.0 {
        check_nonzero(u)?;
        return Ok((ScalarField::zeros(u.grid()), SolveReport::default()));
    }
    let q2 = q * q;
    let rho = ScalarField::from_vec_unchecked(
        u.grid(),
        u.values()
            .iter()
            .zip(lift.chi().values())
            .map(|(u, c)| -q2 * c * u * u)
            .collect(),
    );
    solve_screened_with(u, &rho, q, tol, warm)
}

/// `eta_u`: zero-flux solution of `Laplace eta - q^2 u^2 eta = -kappa`.
pub fn compute_eta(u: &ScalarField, kappa: f64, q: f64, tol: f64) -> Result<ScalarField> {
    compute_eta_with(u, kappa, q, tol, None).map(|(f, _)| f)
}

pub fn compute_eta_with(
    u: &ScalarField,
    kappa: f64,
    q: f64,
    tol: f64,
    warm: Option<&ScalarField>,
) -> Result<(ScalarField, SolveReport)> {
    if kappa == 0.0 {
        check_nonzero(u)?;
        return Ok((ScalarField::zeros(u.grid()), SolveReport::default()));
    }
    let rho = ScalarField::constant(u.grid(), kappa);
    solve_screened_with(u, &rho, q, tol, warm)
}

fn check_nonzero(u: &ScalarField) -> Result<()> {
    let integral = u.map(|v| v * v).integrate();
    if integral > degenerate_threshold(u.grid()) {
        Ok(())
    } else {
        Err(KgmError::DegenerateScreening { integral })
    }
}

/// `phi_u = xi_u + eta_u` with its two parts.
#[derive(Debug, Clone)]
pub struct PhiSplit {
    pub phi_u: ScalarField,
    pub xi: ScalarField,
    pub eta: ScalarField,
    pub xi_report: SolveReport,
    pub eta_report: SolveReport,
}

pub fn compute_phi_u(u: &ScalarField, lift: &LiftingPotential, q: f64, tol: f64) -> Result<PhiSplit> {
    compute_phi_u_with(u, lift, q, tol, None)
}

pub fn compute_phi_u_with(
    u: &ScalarField,
    lift: &LiftingPotential,
    q: f64,
    tol: f64,
    warm: Option<(&ScalarField, &ScalarField)>,
) -> Result<PhiSplit> {
    let (xi, xi_report) = compute_xi_with(u, lift, q, tol, warm.map(|w| w.0))?;
    let (eta, eta_report) = compute_eta_with(u, lift.kappa(), q, tol, warm.map(|w| w.1))?;
    let phi_u = xi.add(&eta)?;
    Ok(PhiSplit {
        phi_u,
        xi,
        eta,
        xi_report,
        eta_report,
    })
}

/// Undo the frequency gauge: the static potential `phi` of the reduced
/// system corresponds to `phi + omega / q` for a standing wave of frequency `omega`.
pub fn gauge_shift(phi: &ScalarField, omega: f64, q: f64) -> Result<ScalarField> {
    if q == 0.0 {
        return Err(KgmError::InvalidParameter("gauge shift needs q != 0".into()));
    }
    let shift = omega / q;
    Ok(phi.map(|v| v + shift))
}
