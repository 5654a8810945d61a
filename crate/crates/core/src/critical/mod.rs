//! Critical points of the reduced functional: Sobolev-gradient descent for
//! the linear problem, a mountain-pass search for the superlinear one, a
//! symmetry-class multistart for several solutions, and the Dirichlet
//! spectrum used by the smallness conditions.

mod eigen;
mod mountain;
mod multi;

pub use eigen::{dirichlet_eigenpairs, lambda1, lambda_k, smallness_check, EigenPair, SmallnessReport};
pub use mountain::{
    find_endpoint, mountain_pass, mountain_pass_from, Barrier, MountainPass, MountainPassOptions, PathState,
};
pub use multi::{multi_solutions, Attempt, MultiOptions, MultiOutcome, SymmetryClass};

use std::sync::Arc;

use serde::Serialize;

use crate::elliptic::{dirichlet_solve_weighted, LiftingPotential};
use crate::error::{KgmError, Result};
use crate::mesh::{Grid, NormKind, ScalarField};
use crate::reduced::{Evaluation, Nonlinearity, Params, ReducedFunctional};
use crate::verify::{
    check_growth_conditions, check_lemma_suite, check_necessary, check_nonexistence_identity,
    pointwise_tolerance, residual_system, trivial_threshold, Certificate, SuiteTolerances,
};

/// Backtracking parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Armijo {
    pub initial_step: f64,
    pub shrink: f64,
    pub slope: f64,
    pub min_step: f64,
}

impl Default for Armijo {
    fn default() -> Self {
        Self {
            initial_step: 1.0,
            shrink: 0.5,
            slope: 1e-4,
            min_step: 1e-14,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DescentOptions {
    /// Stop when the quadrature `L^2` norm of the gradient field is at most this.
    pub tol_grad: f64,
    pub max_iter: usize,
    /// Residual tolerance of the inner linear solves.
    pub linear_tol: f64,
    pub armijo: Armijo,
}

impl Default for DescentOptions {
    fn default() -> Self {
        Self {
            tol_grad: 1e-6,
            max_iter: 500,
            linear_tol: 1e-11,
            armijo: Armijo::default(),
        }
    }
}

/// One accepted iterate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistoryEntry {
    pub iteration: usize,
    pub value: f64,
    pub grad_norm: f64,
    /// Accepted step length taken from this iterate; 0 for the last one.
    pub step: f64,
}

/// Residual norms of the two equations at a critical point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residuals {
    pub matter: f64,
    pub potential: f64,
}

/// A converged solution `(u, phi_u)` with its diagnostics.
#[derive(Debug, Clone)]
pub struct CriticalPoint {
    pub u: ScalarField,
    pub phi_u: ScalarField,
    /// `J` or `J_g` at `u`.
    pub value: f64,
    /// Quadrature `L^2` norm of the gradient field, i.e. of the strong
    /// residual of the matter equation.
    pub grad_norm: f64,
    pub residuals: Residuals,
    pub certificates: Vec<Certificate>,
    pub nontrivial: bool,
    pub iterations: usize,
    pub history: Vec<HistoryEntry>,
}

impl CriticalPoint {
    pub fn grad_l2(&self) -> f64 {
        self.u.norm(NormKind::GradL2)
    }

    pub fn all_certificates_pass(&self) -> bool {
        self.certificates.iter().all(|c| c.passed)
    }

    /// Replace `u` by `-u`; `phi_u` is unchanged since it depends on `u^2`.
    pub fn negated(&self) -> Self {
        let mut out = self.clone();
        out.u = self.u.scale(-1.0);
        out
    }
}

/// Riesz map of `H^1_0`: `d` with `-Laplace d = r`, `d = 0` on the boundary,
/// and the dual norm `sqrt(<r, d>)`. Keeps its last solution as a warm start.
#[derive(Debug, Clone)]
pub(crate) struct SobolevMap {
    grid: Arc<Grid>,
    warm: Vec<f64>,
    tol: f64,
}

impl SobolevMap {
    pub fn new(grid: &Arc<Grid>, tol: f64) -> Self {
        Self {
            grid: grid.clone(),
            warm: vec![0.0; grid.len()],
            tol,
        }
    }

    pub fn apply(&mut self, r: &ScalarField) -> Result<(ScalarField, f64)> {
        let grid = &self.grid;
        let w = grid.volume_weights();
        let mut b: Vec<f64> = r.values().iter().zip(w).map(|(r, w)| r * w).collect();
        for &i in grid.boundary_nodes() {
            b[i] = 0.0;
        }
        dirichlet_solve_weighted(grid, &b, &mut self.warm, self.tol)?;
        let d = ScalarField::new(grid.clone(), self.warm.clone())?;
        let pairing = crate::mesh::dot(&b, d.values());
        Ok((d, pairing.max(0.0).sqrt()))
    }
}

/// Certificates every returned point carries: residuals, the necessary
/// condition, the lemma suite for nonzero `u`, the energy identity in the
/// linear mean-zero case, and the growth conditions of `nl`.
pub fn certify(
    point: &CriticalPoint,
    lift: &LiftingPotential,
    params: &Params,
    nl: &Nonlinearity,
    tol_grad: f64,
) -> Result<Vec<Certificate>> {
    let grid = point.u.grid();
    let tol = pointwise_tolerance(grid);
    let mut out = vec![
        Certificate::new("grad_norm", tol_grad - point.grad_norm, 0.0).with("grad_norm", point.grad_norm),
        Certificate::new("residual_matter", 10.0 * tol_grad - point.residuals.matter, 0.0)
            .with("r1", point.residuals.matter),
        Certificate::new("residual_potential", 10.0 * tol_grad - point.residuals.potential, 0.0)
            .with("r2", point.residuals.potential),
    ];
    let physical = point.phi_u.add(lift.chi())?;
    out.push(check_necessary(&point.u, &physical, lift.boundary(), params, tol)?);
    if point.u.map(|v| v * v).integrate() > crate::elliptic::degenerate_threshold(grid) {
        out.extend(check_lemma_suite(&point.u, lift, params, &SuiteTolerances::for_grid(grid))?);
    }
    if lift.kappa() == 0.0 && nl.is_none() {
        out.push(check_nonexistence_identity(&point.u, &point.phi_u, lift, params, tol)?);
    }
    let t_grid: Vec<f64> = (1..=100).flat_map(|k| [0.1 * k as f64, -0.1 * k as f64]).collect();
    out.extend(check_growth_conditions(nl, &t_grid));
    Ok(out)
}

pub(crate) fn finish(
    u: ScalarField,
    eval: Evaluation,
    grad_norm: f64,
    iterations: usize,
    history: Vec<HistoryEntry>,
    functional: &ReducedFunctional<'_>,
    tol_grad: f64,
) -> Result<CriticalPoint> {
    let lift = functional.lift();
    let params = functional.params();
    let nl = functional.nonlinearity();
    let (matter, potential) = residual_system(&u, &eval.phi.phi_u, lift, params, nl)?;
    let nontrivial = u.norm(NormKind::L2) >= trivial_threshold(u.grid(), params);
    let mut point = CriticalPoint {
        u,
        phi_u: eval.phi.phi_u,
        value: eval.value,
        grad_norm,
        residuals: Residuals { matter, potential },
        certificates: Vec::new(),
        nontrivial,
        iterations,
        history,
    };
    point.certificates = certify(&point, lift, params, nl, tol_grad)?;
    Ok(point)
}

/// Minimize `J` by Sobolev-gradient descent with Armijo backtracking.
///
/// With `kappa != 0` the functional blows up at `u = 0` and the minimizer is
/// nontrivial. With `kappa = 0` and small data the descent drives `u` to
/// zero; the result is then flagged trivial.
pub fn minimize_j(
    lift: &LiftingPotential,
    params: &Params,
    u0: &ScalarField,
    opts: &DescentOptions,
) -> Result<CriticalPoint> {
    u0.check_same_grid(lift.chi())?;
    let u0 = u0.to_dirichlet();
    if u0.map(|v| v * v).integrate() <= crate::elliptic::degenerate_threshold(u0.grid()) {
        return Err(KgmError::InvalidParameter("initial guess must be nonzero".into()));
    }
    let mut functional = ReducedFunctional::new(lift, *params, Nonlinearity::None, opts.linear_tol)?;
    descend(&mut functional, u0, opts)
}

/// Armijo test for a step with predicted decrease `predicted = alpha |r|_*^2`.
/// Once the predicted decrease is below the round-off of `J` the value test
/// carries no information, and the trial must instead lower the `L^2` norm
/// of the gradient field.
pub(crate) fn sufficient_decrease(
    current: &Evaluation,
    trial: &Evaluation,
    predicted: f64,
    grad_norm: f64,
    armijo: &Armijo,
) -> bool {
    let noise = 1e-12 * (1.0 + current.value.abs());
    let slack = 1e-14 * (1.0 + current.value.abs());
    if predicted > noise {
        trial.value <= current.value - armijo.slope * predicted + slack
    } else {
        trial.value <= current.value + noise && trial.gradient.norm(NormKind::L2) < grad_norm
    }
}

/// Sobolev-gradient descent on `functional` from `u`.
pub(crate) fn descend(
    functional: &mut ReducedFunctional<'_>,
    mut u: ScalarField,
    opts: &DescentOptions,
) -> Result<CriticalPoint> {
    let grid = u.grid().clone();
    let mut riesz = SobolevMap::new(&grid, (opts.linear_tol * 10.0).min(1e-9));
    let mut eval = functional.evaluate(&u)?;
    let mut history = Vec::new();
    for it in 0..=opts.max_iter {
        let (d, dual) = riesz.apply(&eval.gradient)?;
        let gn = eval.gradient.norm(NormKind::L2);
        history.push(HistoryEntry {
            iteration: it,
            value: eval.value,
            grad_norm: gn,
            step: 0.0,
        });
        if gn <= opts.tol_grad {
            return finish(u, eval, gn, it, history, functional, opts.tol_grad);
        }
        if it == opts.max_iter {
            break;
        }
        let mut alpha = opts.armijo.initial_step;
        loop {
            let trial = u.lin_comb(1.0, &d, -alpha)?;
            match functional.evaluate(&trial) {
                Ok(e) if sufficient_decrease(&eval, &e, alpha * dual * dual, gn, &opts.armijo) => {
                    u = trial;
                    eval = e;
                    break;
                }
                Ok(_) | Err(KgmError::DegenerateScreening { .. }) => {}
                Err(e) => return Err(e),
            }
            alpha *= opts.armijo.shrink;
            if alpha < opts.armijo.min_step {
                return Err(KgmError::LineSearchFailed { step: alpha });
            }
        }
        if let Some(h) = history.last_mut() {
            h.step = alpha;
        }
    }
    Err(KgmError::NotConverged {
        solver: "Sobolev gradient descent",
        iterations: opts.max_iter,
        residual: history.last().map_or(f64::NAN, |h| h.grad_norm),
    })
}
