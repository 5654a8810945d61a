//! The JSON run report. Everything except `timings` is a function of the
//! config and seed.

use std::collections::BTreeMap;

use kgm_core::critical::{Attempt, Barrier, SmallnessReport};
use kgm_core::elliptic::LiftingSummary;
use kgm_core::Certificate;
use serde::{Deserialize, Serialize};

use crate::config::{BoundarySpec, NonlinearitySpec, RunConfig};
use crate::{exit, Mode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Error,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Pass => exit::SUCCESS,
            Status::Fail => exit::CHECK_FAILED,
            Status::Error => exit::SOLVER_FAILED,
        }
    }
}

/// A certificate with the solution it belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateRow {
    /// `run` or `solution N`.
    pub scope: String,
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub tolerance: f64,
    #[serde(default)]
    pub context: BTreeMap<String, f64>,
}

impl CertificateRow {
    pub fn new(scope: &str, c: Certificate) -> Self {
        Self {
            scope: scope.to_owned(),
            name: c.name,
            passed: c.passed,
            measured: c.measured,
            tolerance: c.tolerance,
            context: c.context,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSummary {
    pub lengths: [f64; 3],
    pub counts: [usize; 3],
    pub spacing: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamsSummary {
    pub m: f64,
    pub q: f64,
    pub omega: f64,
    /// `q / sqrt(4 pi)`: the charge for which the potential equation reads
    /// `Laplace phi = 4 pi q^2 (phi + chi) u^2 - kappa`. Only in physical units.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_physical: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionSummary {
    pub index: usize,
    pub value: f64,
    pub grad_norm: f64,
    pub grad_l2: f64,
    pub u_l2: f64,
    pub u_inf: f64,
    /// `|phi + chi|_inf` of the physical potential.
    pub potential_sup: f64,
    pub residual_matter: f64,
    pub residual_potential: f64,
    pub nontrivial: bool,
    pub iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub class: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub barrier: Option<Barrier>,
    pub u_file: String,
    pub phi_file: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub mode: Mode,
    pub status: Status,
    pub error: Option<String>,
    pub seed: u64,
    /// `rescaled` or `physical`.
    pub units: &'static str,
    pub grid: GridSummary,
    pub params: ParamsSummary,
    pub boundary: BoundarySpec,
    pub nonlinearity: NonlinearitySpec,
    pub lifting: Option<LiftingSummary>,
    pub smallness: Option<SmallnessReport>,
    pub eigenvalues: Vec<f64>,
    pub solutions: Vec<SolutionSummary>,
    /// Values of `J_g` along the initial mountain-pass path.
    pub path_values: Vec<f64>,
    pub attempts: Vec<Attempt>,
    pub warning: Option<String>,
    pub certificates: Vec<CertificateRow>,
    pub files: Vec<String>,
    /// Wall-clock seconds per phase.
    pub timings: BTreeMap<String, f64>,
}

impl Report {
    pub fn new(cfg: &RunConfig, mode: Mode) -> Self {
        let counts = cfg.grid.counts;
        let spacing = std::array::from_fn(|a| cfg.grid.lengths[a] / counts[a].saturating_sub(1).max(1) as f64);
        let physical = cfg.output.physical_units;
        Self {
            mode,
            status: Status::Pass,
            error: None,
            seed: cfg.seed,
            units: if physical { "physical" } else { "rescaled" },
            grid: GridSummary {
                lengths: cfg.grid.lengths,
                counts,
                spacing,
            },
            params: ParamsSummary {
                m: cfg.params.m,
                q: cfg.params.q,
                omega: cfg.params.omega,
                q_physical: physical.then(|| cfg.params.q / (4.0 * std::f64::consts::PI).sqrt()),
            },
            boundary: cfg.boundary.clone(),
            nonlinearity: cfg.nonlinearity,
            lifting: None,
            smallness: None,
            eigenvalues: Vec::new(),
            solutions: Vec::new(),
            path_values: Vec::new(),
            attempts: Vec::new(),
            warning: None,
            certificates: Vec::new(),
            files: Vec::new(),
            timings: BTreeMap::new(),
        }
    }

    pub fn all_passed(&self) -> bool {
        self.certificates.iter().all(|c| c.passed)
    }

    /// Set `status` from the error and the certificates.
    pub fn settle(&mut self) {
        self.status = if self.error.is_some() {
            Status::Error
        } else if self.all_passed() {
            Status::Pass
        } else {
            Status::Fail
        };
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// The report JSON with the `timings` object removed, for comparing runs.
pub fn without_timings(json: &str) -> Result<String, serde_json::Error> {
    let mut v: serde_json::Value = serde_json::from_str(json)?;
    if let Some(obj) = v.as_object_mut() {
        obj.remove("timings");
    }
    serde_json::to_string_pretty(&v)
}
