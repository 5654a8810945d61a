//! Run configuration: a TOML file plus command-line overrides.
//!
//! ```toml
//! seed = 7
//!
//! [grid]
//! lengths = [1.0, 1.0, 1.0]
//! counts = [17, 17, 17]
//!
//! [params]
//! m = 1.0
//! q = 0.1
//!
//! [boundary]
//! kind = "dipole"
//! amplitude = 0.05
//!
//! [nonlinearity]
//! kind = "power"
//! p = 4.0
//! ```
//!
//! Relative paths are resolved against the directory of the config file.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use kgm_core::critical::{Armijo, DescentOptions, MountainPassOptions, MultiOptions};
use kgm_core::mesh::io::{read_field_on, FieldFormat};
use kgm_core::{BoundaryData, Grid, Nonlinearity, Params};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    SolveLinear,
    SolveNonlinear,
    Multi,
    Verify,
    Spectrum,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::SolveLinear => "solve-linear",
            Mode::SolveNonlinear => "solve-nonlinear",
            Mode::Multi => "multi",
            Mode::Verify => "verify",
            Mode::Spectrum => "spectrum",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Must agree with the subcommand when present.
    #[serde(default)]
    pub mode: Option<Mode>,
    #[serde(default)]
    pub seed: u64,
    pub grid: GridSpec,
    pub params: ParamSpec,
    pub boundary: BoundarySpec,
    #[serde(default)]
    pub nonlinearity: NonlinearitySpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub verify: VerifySpec,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "unit_box")]
    pub lengths: [f64; 3],
    pub counts: [usize; 3],
}

fn unit_box() -> [f64; 3] {
    [1.0; 3]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamSpec {
    pub m: f64,
    pub q: f64,
    #[serde(default)]
    pub omega: f64,
}

/// Neumann datum profiles. `dipole` and `cosines` have zero boundary mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum BoundarySpec {
    Constant {
        value: f64,
    },
    /// Order `x-, x+, y-, y+, z-, z+`.
    Faces {
        values: [f64; 6],
    },
    /// `+amplitude` on the lower face of `axis`, `-amplitude` on the upper one.
    Dipole {
        amplitude: f64,
        #[serde(default)]
        axis: usize,
    },
    /// `amplitude * prod_a cos(k_a pi x_a / L_a)`; at least two `k_a` must be
    /// nonzero so that every face has zero mean.
    Cosines {
        amplitude: f64,
        modes: [u32; 3],
    },
    /// Boundary values of a stored field on the run grid.
    File {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum NonlinearitySpec {
    #[default]
    None,
    /// `g(t) = |t|^(p-2) t`, `2 < p < 6`.
    Power { p: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSpec {
    pub tol_grad: f64,
    pub max_iter: usize,
    pub linear_tol: f64,
    /// Tolerance of the lifting potential solve.
    pub lifting_tol: f64,
    pub armijo_step: f64,
    pub armijo_shrink: f64,
    pub armijo_slope: f64,
    pub n_path: usize,
    pub n_targets: usize,
    pub beta: f64,
    pub n_modes: usize,
    pub max_candidates: usize,
    pub distinctness: f64,
    pub level_tol: f64,
    /// Eigenvalues reported by `spectrum`.
    pub n_eigen: usize,
    pub eigen_tol: f64,
    pub initial: InitialGuess,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let mp = MountainPassOptions::default();
        let multi = MultiOptions::default();
        let armijo = Armijo::default();
        Self {
            tol_grad: mp.tol_grad,
            max_iter: mp.max_iter,
            linear_tol: mp.linear_tol,
            lifting_tol: 1e-12,
            armijo_step: armijo.initial_step,
            armijo_shrink: armijo.shrink,
            armijo_slope: armijo.slope,
            n_path: mp.n_path,
            n_targets: multi.n_targets,
            beta: multi.beta,
            n_modes: multi.n_modes,
            max_candidates: multi.max_candidates,
            distinctness: multi.distinctness,
            level_tol: multi.level_tol,
            n_eigen: 6,
            eigen_tol: 1e-10,
            initial: InitialGuess::Bump,
        }
    }
}

/// Initial guess of `solve-linear`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialGuess {
    /// `prod_a sin(pi x_a / L_a)`.
    Bump,
    /// Seeded nodal noise of unit amplitude.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySpec {
    /// Stored `u`; required by `verify`.
    pub u: Option<PathBuf>,
    /// Stored physical potential `phi`; computed from `u` when absent.
    pub phi: Option<PathBuf>,
    /// Perturbations sampled by the maximizer check.
    pub samples: usize,
}

impl Default for VerifySpec {
    fn default() -> Self {
        Self {
            u: None,
            phi: None,
            samples: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub dir: PathBuf,
    pub format: FieldFormat,
    /// Report `q` in the units where the potential equation carries `4 pi`.
    pub physical_units: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("kgm-out"),
            format: FieldFormat::Csv,
            physical_units: false,
        }
    }
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub tol: Option<f64>,
    pub grid: Option<[usize; 3]>,
    pub physical_units: bool,
}

/// `NX,NY,NZ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridCounts(pub [usize; 3]);

impl FromStr for GridCounts {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let [x, y, z] = parts.as_slice() else {
            return Err(format!("expected NX,NY,NZ, got {s:?}"));
        };
        let parse = |t: &str| t.parse::<usize>().map_err(|e| format!("{t:?}: {e}"));
        Ok(GridCounts([parse(x)?, parse(y)?, parse(z)?]))
    }
}

fn invalid(field: &str, message: impl Into<String>) -> CliError {
    CliError::Config {
        field: field.to_owned(),
        message: message.into(),
    }
}

impl RunConfig {
    /// Parse a config file; relative paths inside it become relative to its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid("--config", format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text).map_err(|e| match e {
            CliError::Config { field, message } => CliError::Config {
                field,
                message: format!("{}: {message}", path.display()),
            },
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let BoundarySpec::File { path } = &mut cfg.boundary {
            resolve(path);
        }
        if let Some(p) = cfg.verify.u.as_mut() {
            resolve(p);
        }
        if let Some(p) = cfg.verify.phi.as_mut() {
            resolve(p);
        }
        resolve(&mut cfg.output.dir);
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        // toml errors carry the line, column and offending key
        toml::from_str(text).map_err(|e| invalid("toml", e.to_string()))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(d) = &o.out {
            self.output.dir = d.clone();
        }
        if let Some(t) = o.tol {
            self.solver.tol_grad = t;
        }
        if let Some(c) = o.grid {
            self.grid.counts = c;
        }
        self.output.physical_units |= o.physical_units;
    }

    /// Checks that need no solve. Mode-specific checks that need the
    /// sampled datum live in [`Setup::new`].
    pub fn validate(&self, mode: Mode) -> Result<(), CliError> {
        if let Some(m) = self.mode {
            if m != mode {
                return Err(invalid("mode", format!("config is for {m}, subcommand is {mode}")));
            }
        }
        Params::new(self.params.m, self.params.q, self.params.omega).map_err(|e| invalid("params", e.to_string()))?;
        let s = &self.solver;
        for (name, v) in [
            ("solver.tol_grad", s.tol_grad),
            ("solver.linear_tol", s.linear_tol),
            ("solver.lifting_tol", s.lifting_tol),
            ("solver.armijo_step", s.armijo_step),
            ("solver.armijo_slope", s.armijo_slope),
            ("solver.eigen_tol", s.eigen_tol),
            ("solver.distinctness", s.distinctness),
            ("solver.level_tol", s.level_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be positive, got {v}")));
            }
        }
        if !(s.armijo_shrink > 0.0 && s.armijo_shrink < 1.0) {
            return Err(invalid("solver.armijo_shrink", "must lie in (0, 1)"));
        }
        if !(s.beta >= 0.0) {
            return Err(invalid("solver.beta", "must be nonnegative"));
        }
        if s.n_eigen == 0 {
            return Err(invalid("solver.n_eigen", "must be positive"));
        }
        match &self.boundary {
            BoundarySpec::Dipole { axis, .. } if *axis > 2 => {
                return Err(invalid("boundary.axis", format!("must be 0, 1 or 2, got {axis}")));
            }
            BoundarySpec::Cosines { modes, .. } if modes.iter().filter(|&&k| k > 0).count() < 2 => {
                return Err(invalid("boundary.modes", "at least two modes must be nonzero for a mean-zero datum"));
            }
            _ => {}
        }
        let nl = self.nonlinearity()?;
        match mode {
            Mode::SolveLinear if !nl.is_none() => {
                return Err(invalid("nonlinearity", "solve-linear takes no nonlinearity"));
            }
            Mode::SolveNonlinear if nl.is_none() => {
                return Err(invalid("nonlinearity", "solve-nonlinear needs a power nonlinearity"));
            }
            Mode::Multi if nl.is_none() || !nl.is_odd() => {
                return Err(invalid("nonlinearity", "multi needs an odd power nonlinearity"));
            }
            Mode::Multi if s.n_targets == 0 => {
                return Err(invalid("solver.n_targets", "must be positive"));
            }
            Mode::Verify if self.verify.u.is_none() => {
                return Err(invalid("verify.u", "verify needs a stored field u"));
            }
            _ => {}
        }
        if matches!(mode, Mode::SolveNonlinear | Mode::Multi) && s.n_path < 3 {
            return Err(invalid("solver.n_path", "a path needs at least 3 points"));
        }
        Ok(())
    }

    pub fn params(&self) -> Params {
        Params {
            m: self.params.m,
            q: self.params.q,
            omega: self.params.omega,
        }
    }

    pub fn nonlinearity(&self) -> Result<Nonlinearity, CliError> {
        match self.nonlinearity {
            NonlinearitySpec::None => Ok(Nonlinearity::None),
            NonlinearitySpec::Power { p } => Nonlinearity::power(p).map_err(|e| invalid("nonlinearity.p", e.to_string())),
        }
    }

    pub fn grid(&self) -> Result<Arc<Grid>, CliError> {
        Grid::new(self.grid.lengths, self.grid.counts)
            .map(Arc::new)
            .map_err(|e| invalid("grid", e.to_string()))
    }

    pub fn boundary(&self, grid: &Arc<Grid>) -> Result<BoundaryData, CliError> {
        Ok(match &self.boundary {
            BoundarySpec::Constant { value } => BoundaryData::constant(grid, *value),
            BoundarySpec::Faces { values } => BoundaryData::per_face(grid, *values),
            BoundarySpec::Dipole { amplitude, axis } => {
                let mut faces = [0.0; 6];
                faces[2 * axis] = *amplitude;
                faces[2 * axis + 1] = -amplitude;
                BoundaryData::per_face(grid, faces)
            }
            BoundarySpec::Cosines { amplitude, modes } => {
                let lengths = grid.lengths();
                BoundaryData::from_fn(grid, |x, _| {
                    amplitude
                        * (0..3)
                            .map(|a| (std::f64::consts::PI * f64::from(modes[a]) * x[a] / lengths[a]).cos())
                            .product::<f64>()
                })
            }
            BoundarySpec::File { path } => {
                let field = read_field_on(grid, path).map_err(|e| invalid("boundary.path", format!("{}: {e}", path.display())))?;
                BoundaryData::from_field(&field)
            }
        })
    }

    pub fn descent_options(&self) -> DescentOptions {
        DescentOptions {
            tol_grad: self.solver.tol_grad,
            max_iter: self.solver.max_iter,
            linear_tol: self.solver.linear_tol,
            armijo: self.armijo(),
        }
    }

    pub fn mountain_options(&self) -> MountainPassOptions {
        MountainPassOptions {
            n_path: self.solver.n_path,
            tol_grad: self.solver.tol_grad,
            max_iter: self.solver.max_iter,
            linear_tol: self.solver.linear_tol,
            armijo: self.armijo(),
        }
    }

    pub fn multi_options(&self) -> MultiOptions {
        MultiOptions {
            n_targets: self.solver.n_targets,
            mountain: self.mountain_options(),
            beta: self.solver.beta,
            n_modes: self.solver.n_modes,
            max_candidates: self.solver.max_candidates,
            distinctness: self.solver.distinctness,
            level_tol: self.solver.level_tol,
        }
    }

    fn armijo(&self) -> Armijo {
        Armijo {
            initial_step: self.solver.armijo_step,
            shrink: self.solver.armijo_shrink,
            slope: self.solver.armijo_slope,
            ..Armijo::default()
        }
    }
}
