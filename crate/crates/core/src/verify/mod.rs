//! Certificates: each inequality, identity and necessary condition of the
//! model evaluated on a candidate, reported with a signed slack.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::elliptic::{compute_phi_u, LiftingPotential};
use crate::error::{KgmError, Result};
use crate::mesh::{BoundaryData, Grid, NormKind, ScalarField};
use crate::reduced::{Nonlinearity, Params};

/// Outcome of one check. `passed == (measured >= -tolerance)`; a positive
/// `measured` is the margin by which the check is satisfied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub tolerance: f64,
    pub context: BTreeMap<String, f64>,
}

impl Certificate {
    pub fn new(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            passed: measured >= -tolerance,
            measured,
            tolerance,
            context: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.context.insert(key.to_owned(), value);
        self
    }
}

pub fn all_passed(certs: &[Certificate]) -> bool {
    certs.iter().all(|c| c.passed)
}

/// `u` counts as zero when `|u|_2 < 1e-6 |Omega|^(1/2) m`.
pub fn trivial_threshold(grid: &Grid, params: &Params) -> f64 {
    1e-6 * grid.volume().sqrt() * params.m
}

/// Pointwise tolerance `1e-6 + 10 h^2` used for nodal inequalities and
/// converged-run checks.
pub fn pointwise_tolerance(grid: &Grid) -> f64 {
    let h = grid.max_spacing();
    1e-6 + 10.0 * h * h
}

/// Quadrature norms `(r1, r2)` of the residuals of the matter equation
/// (interior rows, plus `u` itself on the Dirichlet rows) and of the
/// potential equation `Laplace phi = q^2 (phi + chi) u^2 - kappa` with zero flux.
pub fn residual_system(
    u: &ScalarField,
    phi: &ScalarField,
    lift: &LiftingPotential,
    params: &Params,
    nl: &Nonlinearity,
) -> Result<(f64, f64)> {
    u.check_same_grid(phi)?;
    u.check_same_grid(lift.chi())?;
    let grid = u.grid();
    let (m2, q2, kappa) = (params.m * params.m, params.q2(), lift.kappa());
    let mut ku = vec![0.0; grid.len()];
    let mut kphi = vec![0.0; grid.len()];
    grid.apply_stiffness(u.values(), &mut ku);
    grid.apply_stiffness(phi.values(), &mut kphi);
    let (mut r1, mut r2) = (0.0, 0.0);
    for i in 0..grid.len() {
        let w = grid.volume_weights()[i];
        let (ui, pi) = (u.values()[i], phi.values()[i]);
        let a = pi + lift.chi().values()[i];
        let e1 = if grid.is_boundary(i) {
            ui
        } else {
            ku[i] / w + (m2 - q2 * a * a) * ui - nl.g(ui)
        };
        let e2 = kphi[i] / w + q2 * a * ui * ui - kappa;
        r1 += w * e1 * e1;
        r2 += w * e2 * e2;
    }
    Ok((r1.sqrt(), r2.sqrt()))
}

/// Necessary condition `q^2 int phi u^2 = int_boundary h` for the physical
/// potential `phi = phi_u + chi`.
pub fn check_necessary(
    u: &ScalarField,
    phi_physical: &ScalarField,
    h: &BoundaryData,
    params: &Params,
    tol: f64,
) -> Result<Certificate> {
    let lhs = params.q2() * phi_physical.mul(&u.mul(u)?)?.integrate();
    let flux = h.boundary_integral();
    let measured = -(lhs - flux).abs() / (1.0 + flux.abs());
    Ok(Certificate::new("necessary", measured, tol)
        .with("q2_int_phi_u2", lhs)
        .with("boundary_integral", flux))
}

/// Energy identity of the mean-zero problem,
/// `|grad u|^2 + q^2 int u^2 phi^2 + int (m^2 - q^2 chi^2) u^2 + 2 |grad phi|^2 = 0`.
/// Under the smallness condition every term is nonnegative, so the check
/// passes only when the value vanishes or `u` is trivial.
pub fn check_nonexistence_identity(
    u: &ScalarField,
    phi: &ScalarField,
    lift: &LiftingPotential,
    params: &Params,
    tol: f64,
) -> Result<Certificate> {
    if lift.kappa() != 0.0 {
        return Err(KgmError::Unsupported(format!(
            "the energy identity needs kappa = 0, got {}",
            lift.kappa()
        )));
    }
    u.check_same_grid(phi)?;
    u.check_same_grid(lift.chi())?;
    let grid = u.grid();
    let (m2, q2) = (params.m * params.m, params.q2());
    let mut value = grid.dirichlet_energy(u.values()) + 2.0 * grid.dirichlet_energy(phi.values());
    for (((w, u), p), c) in grid
        .volume_weights()
        .iter()
        .zip(u.values())
        .zip(phi.values())
        .zip(lift.chi().values())
    {
        value += w * (q2 * p * p + m2 - q2 * c * c) * u * u;
    }
    let u_norm = u.norm(NormKind::L2);
    let trivial = u_norm < trivial_threshold(grid, params);
    let measured = if trivial { 0.0 } else { -value.abs() };
    Ok(Certificate::new("nonexistence_identity", measured, tol)
        .with("value", value)
        .with("u_l2", u_norm))
}

/// Tolerances of the lemma suite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteTolerances {
    /// Residual tolerance of the screened solves for `xi_u`, `eta_u`.
    pub linear: f64,
    /// Absolute tolerance of nodal inequalities.
    pub pointwise: f64,
    /// Relative tolerance of integral inequalities and identities.
    pub integral: f64,
}

impl SuiteTolerances {
    pub fn for_grid(grid: &Grid) -> Self {
        Self {
            linear: 1e-12,
            pointwise: pointwise_tolerance(grid),
            integral: 1e-8,
        }
    }
}

/// Properties of `xi_u` and `eta_u` for a nonzero `u`.
///
/// `spezz` compares `|grad eta_u|_2` with `c1 |mean eta_u| |u|_4^2` for
/// `c1 = q^2 c_PW`, `c_PW` the zero-flux Poincare-Wirtinger constant of the
/// grid; the ratio itself is reported as `c1_measured`.
pub fn check_lemma_suite(
    u: &ScalarField,
    lift: &LiftingPotential,
    params: &Params,
    tols: &SuiteTolerances,
) -> Result<Vec<Certificate>> {
    let grid = u.grid();
    let q2 = params.q2();
    let kappa = lift.kappa();
    let chi = lift.chi();
    let split = compute_phi_u(u, lift, params.q, tols.linear)?;
    let (xi, eta) = (&split.xi, &split.eta);
    let u2 = u.mul(u)?;
    let rel = |a: f64, b: f64| tols.integral * (a.abs() + b.abs()) + 1e-14;
    let (chi_max, chi_min) = (lift.chi_max(), lift.chi_min());
    let tp = tols.pointwise;
    let mut out = Vec::new();

    // int xi chi u^2 <= 0
    let xcu = xi.mul(chi)?.mul(&u2)?;
    let intmeno = xcu.integrate();
    let scale = xcu.map(f64::abs).integrate();
    out.push(Certificate::new("intmeno", -intmeno, rel(scale, 0.0)).with("integral", intmeno));

    // -max chi <= xi <= -min chi
    out.push(Certificate::new("m_lower", xi.min() + chi_max, tp).with("xi_min", xi.min()));
    out.push(Certificate::new("m_upper", -chi_min - xi.max(), tp).with("xi_max", xi.max()));

    let xi_inf = xi.norm(NormKind::Linf);
    let h_sup = lift.boundary().sup_norm();
    out.push(
        Certificate::new("stimaphi", lift.chi_inf() - xi_inf, tp)
            .with("xi_inf", xi_inf)
            .with("chi_inf", lift.chi_inf())
            .with("chi_over_h", if h_sup > 0.0 { lift.chi_inf() / h_sup } else { 0.0 }),
    );

    let xi_grad = xi.norm(NormKind::GradL2);
    out.push(
        Certificate::new("stima_gradfi", lift.chi_grad() - xi_grad, rel(lift.chi_grad(), xi_grad))
            .with("xi_grad", xi_grad)
            .with("chi_grad", lift.chi_grad()),
    );

    let phys = xi.add(chi)?;
    let phys_inf = phys.norm(NormKind::Linf);
    out.push(
        Certificate::new("unifbound", (chi_max - chi_min) - phys_inf, tp)
            .with("xi_plus_chi_inf", phys_inf)
            .with("chi_oscillation", chi_max - chi_min),
    );

    let u4sq = u.norm(NormKind::L4).powi(2);
    let eta_l2 = eta.norm(NormKind::L2);
    let eta1_bound = if kappa == 0.0 {
        0.0
    } else {
        kappa.abs() * grid.volume() / (q2 * u4sq)
    };
    out.push(
        Certificate::new("eta1", eta_l2 - eta1_bound, rel(eta_l2, eta1_bound))
            .with("eta_l2", eta_l2)
            .with("bound", eta1_bound),
    );

    let eta2 = eta.values().iter().map(|e| kappa * e).fold(f64::INFINITY, f64::min);
    out.push(Certificate::new("eta2", eta2, tp * kappa.abs()).with("min_kappa_eta", eta2));

    let eta_grad = eta.norm(NormKind::GradL2);
    let eta_mean = eta.average();
    let c1 = q2 * grid.poincare_wirtinger_constant();
    let spezz_bound = c1 * eta_mean.abs() * u4sq;
    let c1_measured = if eta_mean != 0.0 {
        eta_grad / (eta_mean.abs() * u4sq)
    } else {
        0.0
    };
    out.push(
        Certificate::new("spezz", spezz_bound - eta_grad, rel(spezz_bound, eta_grad))
            .with("c1_measured", c1_measured)
            .with("c1", c1)
            .with("eta_grad", eta_grad),
    );

    // q^2 int chi eta u^2 = -kappa |Omega| mean xi
    let lhs = q2 * chi.mul(eta)?.mul(&u2)?.integrate();
    let rhs = -kappa * xi.integrate();
    out.push(
        Certificate::new("misto", -(lhs - rhs).abs(), rel(lhs, rhs))
            .with("lhs", lhs)
            .with("rhs", rhs),
    );
    Ok(out)
}

/// Samples the growth conditions of `nl` on `t_grid` with its catalog
/// constants. Returns no certificates for the linear case.
pub fn check_growth_conditions(nl: &Nonlinearity, t_grid: &[f64]) -> Vec<Certificate> {
    let Some(c) = nl.growth_constants() else {
        return Vec::new();
    };
    let eps = 1e-12;
    let ts: Vec<f64> = t_grid.iter().copied().filter(|t| t.is_finite()).collect();
    let mut out = Vec::new();

    let g1 = ts
        .iter()
        .map(|&t| {
            let bound = c.a1 + c.a2 * t.abs().powf(c.p - 1.0);
            (bound - nl.g(t).abs()) / (1.0 + bound)
        })
        .fold(f64::INFINITY, f64::min);
    out.push(
        Certificate::new("g1", finite_or_zero(g1), eps)
            .with("a1", c.a1)
            .with("a2", c.a2)
            .with("p", c.p),
    );

    // g(t)/|t| along t = 10^-k decays geometrically: every decade divides it
    // by at least 10^(1e-3), so it tends to zero
    let ratios: Vec<f64> = (1..=12)
        .map(|k| {
            let t = 10f64.powi(-k);
            nl.g(t).abs() / t
        })
        .collect();
    let decay = ratios
        .windows(2)
        .map(|w| if w[1] == 0.0 { f64::INFINITY } else { (w[0] / w[1]).log10() })
        .fold(f64::INFINITY, f64::min);
    let last = *ratios.last().expect("nonempty");
    out.push(
        Certificate::new("g2", finite_or_zero(decay - 1e-3), 0.0)
            .with("decay_per_decade", decay)
            .with("ratio_at_1e-12", last),
    );

    let g3 = ts
        .iter()
        .filter(|t| t.abs() >= c.r && **t != 0.0)
        .map(|&t| {
            let sg = c.s * nl.antiderivative(t);
            let tg = t * nl.g(t);
            sg.min(tg - sg) / tg.abs().max(f64::MIN_POSITIVE)
        })
        .fold(f64::INFINITY, f64::min);
    out.push(
        Certificate::new("g3", finite_or_zero(g3), eps)
            .with("s", c.s)
            .with("r", c.r),
    );

    let epsilon = 1e-3;
    let big_g1 = ts
        .iter()
        .map(|&t| {
            let bound = 0.5 * epsilon * t * t + c.big_a * t.abs().powf(c.p);
            (bound - nl.antiderivative(t).abs()) / (1.0 + bound)
        })
        .fold(f64::INFINITY, f64::min);
    out.push(
        Certificate::new("G1", finite_or_zero(big_g1), eps)
            .with("epsilon", epsilon)
            .with("A", c.big_a),
    );

    let big_g2 = ts
        .iter()
        .map(|&t| {
            let bound = c.b1 * t.abs().powf(c.s) - c.b2;
            (nl.antiderivative(t) - bound) / (1.0 + bound.abs())
        })
        .fold(f64::INFINITY, f64::min);
    out.push(
        Certificate::new("G2", finite_or_zero(big_g2), eps)
            .with("b1", c.b1)
            .with("b2", c.b2),
    );
    out
}

fn finite_or_zero(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        0.0
    }
}
