use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Nonlinearity, Params};
use crate::elliptic::{compute_phi_u_with, degenerate_threshold, LiftingPotential, PhiSplit, SolveReport};
use crate::error::{KgmError, Result};
use crate::mesh::{NormKind, ScalarField};

/// `F(u, phi)` by quadrature:
/// `1/2 |grad u|^2 + 1/2 int (m^2 - q^2 (phi + chi)^2) u^2 - 1/2 |grad phi|^2 + kappa int phi`.
pub fn full_f(u: &ScalarField, phi: &ScalarField, lift: &LiftingPotential, params: &Params) -> Result<f64> {
    u.check_same_grid(phi)?;
    u.check_same_grid(lift.chi())?;
    let grid = u.grid();
    let (m2, q2, kappa) = (params.m * params.m, params.q2(), lift.kappa());
    let mut acc = 0.5 * grid.dirichlet_energy(u.values()) - 0.5 * grid.dirichlet_energy(phi.values());
    for (((w, u), p), c) in grid
        .volume_weights()
        .iter()
        .zip(u.values())
        .zip(phi.values())
        .zip(lift.chi().values())
    {
        let a = p + c;
        acc += w * (0.5 * (m2 - q2 * a * a) * u * u + kappa * p);
    }
    Ok(acc)
}

/// `F_g(u, phi) = F(u, phi) - int G(u)`.
pub fn full_f_g(
    u: &ScalarField,
    phi: &ScalarField,
    lift: &LiftingPotential,
    params: &Params,
    nl: &Nonlinearity,
) -> Result<f64> {
    Ok(full_f(u, phi, lift, params)? - u.map(|t| nl.antiderivative(t)).integrate())
}

/// Reduced functional value, potential and gradient at one point.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub value: f64,
    pub phi: PhiSplit,
    /// Strong residual `-Laplace u + (m^2 - q^2 (phi_u + chi)^2) u - g(u)`,
    /// zero on boundary nodes. Its quadrature pairing with a
    /// Dirichlet-conforming `v` is the directional derivative along `v`.
    pub gradient: ScalarField,
}

/// Evaluator of `J_g` that keeps the last potentials as initial guesses for
/// the next screened solves.
#[derive(Debug, Clone)]
pub struct ReducedFunctional<'a> {
    lift: &'a LiftingPotential,
    params: Params,
    nl: Nonlinearity,
    tol: f64,
    warm: Option<(ScalarField, ScalarField)>,
    evaluations: usize,
    linear_iterations: usize,
}

impl<'a> ReducedFunctional<'a> {
    /// A nonlinearity requires a mean-zero datum (`kappa = 0`).
    pub fn new(lift: &'a LiftingPotential, params: Params, nl: Nonlinearity, tol: f64) -> Result<Self> {
        params.validate()?;
        if !nl.is_none() && lift.kappa() != 0.0 {
            return Err(KgmError::Unsupported(format!(
                "a nonlinearity needs a mean-zero boundary datum, got kappa = {}",
                lift.kappa()
            )));
        }
        if !(tol > 0.0) {
            return Err(KgmError::InvalidParameter(format!("tolerance must be positive, got {tol}")));
        }
        Ok(Self {
            lift,
            params,
            nl,
            tol,
            warm: None,
            evaluations: 0,
            linear_iterations: 0,
        })
    }

    pub fn lift(&self) -> &'a LiftingPotential {
        self.lift
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nl
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    /// Total CG iterations spent in screened solves.
    pub fn linear_iterations(&self) -> usize {
        self.linear_iterations
    }

    /// `phi_u`, or zero potentials below the degenerate threshold when `kappa = 0`.
    pub fn phi(&mut self, u: &ScalarField) -> Result<PhiSplit> {
        u.check_same_grid(self.lift.chi())?;
        let mass = u.map(|v| v * v).integrate();
        if mass <= degenerate_threshold(u.grid()) {
            if self.lift.kappa() != 0.0 {
                return Err(KgmError::DegenerateScreening { integral: mass });
            }
            // xi_u is bounded by |chi|_inf and only enters multiplied by u^2.
            let z = ScalarField::zeros(u.grid());
            return Ok(PhiSplit {
                phi_u: z.clone(),
                xi: z.clone(),
                eta: z,
                xi_report: SolveReport::default(),
                eta_report: SolveReport::default(),
            });
        }
        let warm = self.warm.as_ref().map(|(x, e)| (x, e));
        let split = compute_phi_u_with(u, self.lift, self.params.q, self.tol, warm)?;
        self.linear_iterations += split.xi_report.iterations + split.eta_report.iterations;
        self.warm = Some((split.xi.clone(), split.eta.clone()));
        Ok(split)
    }

    pub fn evaluate(&mut self, u: &ScalarField) -> Result<Evaluation> {
        if !u.is_dirichlet_conforming() {
            return Err(KgmError::InvalidParameter(
                "u must vanish on the boundary".into(),
            ));
        }
        let split = self.phi(u)?;
        self.evaluations += 1;
        let value = self.value_with(u, &split);
        let gradient = self.gradient_with(u, &split.phi_u);
        Ok(Evaluation {
            value,
            phi: split,
            gradient,
        })
    }

    pub fn value(&mut self, u: &ScalarField) -> Result<f64> {
        if !u.is_dirichlet_conforming() {
            return Err(KgmError::InvalidParameter(
                "u must vanish on the boundary".into(),
            ));
        }
        let split = self.phi(u)?;
        self.evaluations += 1;
        Ok(self.value_with(u, &split))
    }

    /// Value through the closed form in `xi_u` and `eta_u`, which avoids the
    /// `|grad phi|^2` term of `F`.
    fn value_with(&self, u: &ScalarField, split: &PhiSplit) -> f64 {
        let grid = u.grid();
        let (m2, q2, kappa) = (self.params.m * self.params.m, self.params.q2(), self.lift.kappa());
        let mut acc = 0.5 * grid.dirichlet_energy(u.values());
        for ((((w, u), c), xi), eta) in grid
            .volume_weights()
            .iter()
            .zip(u.values())
            .zip(self.lift.chi().values())
            .zip(split.xi.values())
            .zip(split.eta.values())
        {
            let u2 = u * u;
            acc += w
                * (0.5 * (m2 - q2 * c * c) * u2 - 0.5 * q2 * xi * c * u2 + kappa * (xi + 0.5 * eta)
                    - self.nl.antiderivative(*u));
        }
        acc
    }

    fn gradient_with(&self, u: &ScalarField, phi: &ScalarField) -> ScalarField {
        let grid = u.grid();
        let (m2, q2) = (self.params.m * self.params.m, self.params.q2());
        let mut r = vec![0.0; grid.len()];
        grid.apply_stiffness(u.values(), &mut r);
        for (i, r) in r.iter_mut().enumerate() {
            if grid.is_boundary(i) {
                *r = 0.0;
                continue;
            }
            let a = phi.values()[i] + self.lift.chi().values()[i];
            let ui = u.values()[i];
            *r = *r / grid.volume_weights()[i] + (m2 - q2 * a * a) * ui - self.nl.g(ui);
        }
        ScalarField::new(grid.clone(), r).expect("length matches grid")
    }
}

fn check_admissible(u: &ScalarField) -> Result<()> {
    let mass = u.map(|v| v * v).integrate();
    if mass > degenerate_threshold(u.grid()) {
        Ok(())
    } else {
        Err(KgmError::DegenerateScreening { integral: mass })
    }
}

/// Reduced functional `J(u) = F(u, phi_u)` of the linear problem; `u` must be nonzero.
pub fn j(u: &ScalarField, lift: &LiftingPotential, params: &Params, tol: f64) -> Result<f64> {
    check_admissible(u)?;
    ReducedFunctional::new(lift, *params, Nonlinearity::None, tol)?.value(u)
}

/// Gradient field of [`j`]; see [`Evaluation::gradient`].
pub fn grad_j(u: &ScalarField, lift: &LiftingPotential, params: &Params, tol: f64) -> Result<ScalarField> {
    check_admissible(u)?;
    Ok(ReducedFunctional::new(lift, *params, Nonlinearity::None, tol)?
        .evaluate(u)?
        .gradient)
}

/// `J_g(u) = F_g(u, phi_u)`; requires `kappa = 0` unless `nl` is none, and
/// accepts `u = 0` with `J_g(0) = 0` when `kappa = 0`.
pub fn j_g(
    u: &ScalarField,
    lift: &LiftingPotential,
    params: &Params,
    nl: &Nonlinearity,
    tol: f64,
) -> Result<f64> {
    ReducedFunctional::new(lift, *params, *nl, tol)?.value(u)
}

pub fn grad_j_g(
    u: &ScalarField,
    lift: &LiftingPotential,
    params: &Params,
    nl: &Nonlinearity,
    tol: f64,
) -> Result<ScalarField> {
    Ok(ReducedFunctional::new(lift, *params, *nl, tol)?.evaluate(u)?.gradient)
}

/// Samples `n_samples` perturbations `psi` (random constants, smooth modes
/// and nodal noise at random amplitudes) and checks
/// `F(u, phi_u) >= F(u, phi_u + psi) - 1e-10` for each.
pub fn maximizer_check(
    u: &ScalarField,
    phi_u: &ScalarField,
    lift: &LiftingPotential,
    params: &Params,
    n_samples: usize,
    seed: u64,
) -> Result<bool> {
    let grid = u.grid();
    let base = full_f(u, phi_u, lift, params)?;
    let scale = 1.0 + phi_u.norm(NormKind::Linf);
    let lengths = grid.lengths();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..n_samples {
        let amp = scale * 10f64.powf(rng.random_range(-4.0..0.0));
        let c0: f64 = rng.random_range(-1.0..1.0);
        let k: [f64; 3] = std::array::from_fn(|_| rng.random_range(0..4) as f64);
        let mix: f64 = rng.random_range(0.0..1.0);
        let noise: Vec<f64> = (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let psi: Vec<f64> = (0..grid.len())
            .map(|i| {
                let x = grid.coords(i);
                let smooth: f64 = (0..3)
                    .map(|a| (std::f64::consts::PI * k[a] * x[a] / lengths[a]).cos())
                    .product();
                amp * (c0 + smooth + mix * noise[i])
            })
            .collect();
        let shifted = ScalarField::new(grid.clone(), psi)?.add(phi_u)?;
        if full_f(u, &shifted, lift, params)? > base + 1e-10 {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::elliptic::{compute_phi_u, solve_chi};
    use crate::mesh::{BoundaryData, Grid};

    fn setup(n: usize, h: f64) -> (Arc<Grid>, LiftingPotential) {
        let g = Arc::new(Grid::cube(1.0, n).unwrap());
        let lift = solve_chi(&BoundaryData::constant(&g, h), 1e-12).unwrap();
        (g, lift)
    }

    fn bump(g: &Arc<Grid>) -> ScalarField {
        ScalarField::dirichlet_from_fn(g, |p| p[0] * (1.0 - p[0]) * p[1] * (1.0 - p[1]) * p[2] * (1.0 - p[2]) * 40.0 + 0.3 * p[0] * p[1])
    }

    #[test]
    fn full_f_trivial_examples() {
        let (g, lift) = setup(5, 0.0);
        let p = Params::new(1.0, 0.5, 0.0).unwrap();
        let z = ScalarField::zeros(&g);
        assert_eq!(full_f(&z, &z, &lift, &p).unwrap(), 0.0);
        assert_eq!(full_f(&z, &ScalarField::constant(&g, 2.5), &lift, &p).unwrap(), 0.0);
    }

    #[test]
    fn j_without_datum_is_quadratic() {
        let (g, lift) = setup(7, 0.0);
        let p = Params::new(1.3, 0.5, 0.0).unwrap();
        let u = bump(&g);
        let expect = 0.5 * u.norm(NormKind::GradL2).powi(2) + 0.5 * 1.69 * u.norm(NormKind::L2).powi(2);
        assert!((j(&u, &lift, &p, 1e-10).unwrap() - expect).abs() < 1e-12 * expect);
        assert!(j(&ScalarField::zeros(&g), &lift, &p, 1e-10).is_err());
    }

    #[test]
    fn reduction_matches_full_functional() {
        let (g, lift) = setup(9, 0.05);
        let p = Params::new(1.0, 0.7, 0.0).unwrap();
        let u = bump(&g);
        let jv = j(&u, &lift, &p, 1e-12).unwrap();
        let split = compute_phi_u(&u, &lift, p.q, 1e-12).unwrap();
        let f = full_f(&u, &split.phi_u, &lift, &p).unwrap();
        assert!((jv - f).abs() <= 1e-8 * (1.0 + jv.abs()), "{jv} {f}");
        assert!(maximizer_check(&u, &split.phi_u, &lift, &p, 20, 7).unwrap());
    }

    #[test]
    fn j_blows_up_at_zero_with_flux() {
        let (g, lift) = setup(7, 0.05);
        let p = Params::new(1.0, 0.3, 0.0).unwrap();
        let u0 = bump(&g);
        let vals: Vec<f64> = (0..8)
            .map(|k| j(&u0.scale(0.5f64.powi(k)), &lift, &p, 1e-12).unwrap())
            .collect();
        assert!(vals.windows(2).rev().take(4).all(|w| w[1] > w[0]), "{vals:?}");
    }

    #[test]
    fn power_needs_mean_zero_datum() {
        let (g, lift) = setup(5, 0.05);
        let p = Params::new(1.0, 0.3, 0.0).unwrap();
        let nl = Nonlinearity::power(4.0).unwrap();
        let err = j_g(&bump(&g), &lift, &p, &nl, 1e-10).unwrap_err();
        assert!(matches!(err, KgmError::Unsupported(_)));
    }

    #[test]
    fn j_g_at_zero_and_linear_agreement() {
        let (g, lift) = setup(7, 0.0);
        let p = Params::new(1.0, 0.3, 0.0).unwrap();
        let nl = Nonlinearity::power(4.0).unwrap();
        let z = ScalarField::zeros(&g);
        assert_eq!(j_g(&z, &lift, &p, &nl, 1e-10).unwrap(), 0.0);
        assert!(grad_j_g(&z, &lift, &p, &nl, 1e-10).unwrap().values().iter().all(|&v| v == 0.0));
        let u = bump(&g);
        let a = j_g(&u, &lift, &p, &Nonlinearity::None, 1e-10).unwrap();
        assert_eq!(a, j(&u, &lift, &p, 1e-10).unwrap());
    }

    #[test]
    fn rejects_nonconforming_u() {
        let (g, lift) = setup(5, 0.0);
        let p = Params::new(1.0, 0.3, 0.0).unwrap();
        assert!(j(&ScalarField::constant(&g, 1.0), &lift, &p, 1e-10).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(Params::new(0.0, 1.0, 0.0).is_err());
        assert!(Params::new(1.0, f64::INFINITY, 0.0).is_err());
        assert!(Params::new(1.0, 0.0, 0.0).is_ok());
    }
}
