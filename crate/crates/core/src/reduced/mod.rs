//! The functional `F(u, phi)` of the homogenized system and its reduction
//! `J(u) = F(u, phi_u)`, where `phi_u` is the unique critical point of the
//! concave map `phi -> F(u, phi)`.
//!
//! Everything is evaluated with the same quadrature and stiffness as the
//! elliptic solves, so the discrete `phi_u` is the exact discrete maximizer
//! and the reduced gradient is the partial derivative in `u` alone.

mod functional;
mod nonlinearity;

pub use functional::{
    full_f, full_f_g, grad_j, grad_j_g, j, j_g, maximizer_check, Evaluation, ReducedFunctional,
};
pub use nonlinearity::{eval_G, eval_g, GrowthConstants, Nonlinearity};

use serde::{Deserialize, Serialize};

use crate::error::{KgmError, Result};

/// Physical constants, in the units where the `4 pi` of the potential
/// equation has been absorbed into `q^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    /// Mass, `m > 0`.
    pub m: f64,
    /// Coupling. `q = 0` is accepted and means the decoupled problem.
    pub q: f64,
    /// Frequency; only used to rebuild the standing-wave potential.
    pub omega: f64,
}

impl Params {
    pub fn new(m: f64, q: f64, omega: f64) -> Result<Self> {
        let p = Self { m, q, omega };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m.is_finite() && self.m > 0.0) {
            return Err(KgmError::InvalidParameter(format!("mass m = {} must be positive", self.m)));
        }
        if !self.q.is_finite() || !self.omega.is_finite() {
            return Err(KgmError::InvalidParameter("q and omega must be finite".into()));
        }
        Ok(())
    }

    pub fn q2(&self) -> f64 {
        self.q * self.q
    }
}
