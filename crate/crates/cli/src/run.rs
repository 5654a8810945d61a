//! Execution of one configured run.

use std::fs;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use kgm_core::critical::{
    certify, lambda_k, minimize_j, mountain_pass, multi_solutions, smallness_check, CriticalPoint, HistoryEntry,
    Residuals,
};
use kgm_core::elliptic::solve_chi;
use kgm_core::mesh::io::{read_field_on, write_field, FieldFormat};
use kgm_core::reduced::{maximizer_check, ReducedFunctional};
use kgm_core::verify::{residual_system, trivial_threshold};
use kgm_core::{BoundaryData, Certificate, Grid, LiftingPotential, NormKind, ScalarField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{InitialGuess, Mode, RunConfig};
use crate::report::{CertificateRow, Report, SolutionSummary};
use crate::CliError;

/// Run `mode` and write its artifacts to `cfg.output.dir`.
///
/// Config problems are returned as errors before anything is written.
/// Solver failures are recorded in the returned report, which is still
/// written, with status `error`.
pub fn run(cfg: &RunConfig, mode: Mode) -> Result<Report, CliError> {
    let start = Instant::now();
    cfg.validate(mode)?;
    let grid = cfg.grid()?;
    let h = cfg.boundary(&grid)?;
    if matches!(mode, Mode::SolveNonlinear | Mode::Multi) && !h.is_mean_zero() {
        return Err(CliError::Config {
            field: "boundary".into(),
            message: format!(
                "{mode} needs a boundary datum with zero mean, got boundary integral {:e}",
                h.boundary_integral()
            ),
        });
    }
    let dir = &cfg.output.dir;
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.clone(),
        source,
    })?;

    let mut ctx = Context {
        cfg,
        report: Report::new(cfg, mode),
        history: Vec::new(),
    };
    if let Err(e) = ctx.execute(mode, &grid, &h) {
        match e {
            CliError::Config { .. } => return Err(e),
            other => ctx.report.error = Some(other.to_string()),
        }
    }
    ctx.write_history()?;
    ctx.report.settle();
    ctx.report.timings.insert("total".into(), start.elapsed().as_secs_f64());
    let path = dir.join("report.json");
    fs::write(&path, ctx.report.to_json()).map_err(|source| CliError::Io { path, source })?;
    Ok(ctx.report)
}

#[derive(Serialize)]
struct HistoryRow {
    solution: usize,
    iteration: usize,
    value: f64,
    grad_norm: f64,
    step: f64,
}

struct Context<'c> {
    cfg: &'c RunConfig,
    report: Report,
    history: Vec<HistoryRow>,
}

fn timed<T>(report: &mut Report, phase: &str, f: impl FnOnce() -> T) -> T {
    let t = Instant::now();
    let out = f();
    *report.timings.entry(phase.to_owned()).or_default() += t.elapsed().as_secs_f64();
    out
}

impl Context<'_> {
    fn execute(&mut self, mode: Mode, grid: &Arc<Grid>, h: &BoundaryData) -> Result<(), CliError> {
        let lift = timed(&mut self.report, "lifting", || solve_chi(h, self.cfg.solver.lifting_tol))?;
        self.report.lifting = Some(lift.summary());
        self.write("chi", lift.chi())?;
        match mode {
            Mode::SolveLinear => self.solve_linear(grid, &lift),
            Mode::SolveNonlinear => self.solve_nonlinear(&lift),
            Mode::Multi => self.multi(&lift),
            Mode::Verify => self.verify(grid, &lift),
            Mode::Spectrum => self.spectrum(&lift),
        }
    }

    fn smallness(&mut self, lift: &LiftingPotential, k: usize) -> Result<(), CliError> {
        let cfg = self.cfg;
        let lambdas = timed(&mut self.report, "eigen", || lambda_k(lift.grid(), k, cfg.solver.eigen_tol))?;
        self.report.smallness = Some(smallness_check(lift, &cfg.params(), &lambdas)?);
        self.report.eigenvalues = lambdas;
        Ok(())
    }

    fn solve_linear(&mut self, grid: &Arc<Grid>, lift: &LiftingPotential) -> Result<(), CliError> {
        self.smallness(lift, 1)?;
        let u0 = match self.cfg.solver.initial {
            InitialGuess::Bump => {
                let l = grid.lengths();
                ScalarField::dirichlet_from_fn(grid, |x| {
                    (0..3).map(|a| (std::f64::consts::PI * x[a] / l[a]).sin()).product()
                })
            }
            InitialGuess::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
                let v = (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
                ScalarField::new(grid.clone(), v)?.to_dirichlet()
            }
        };
        let opts = self.cfg.descent_options();
        let params = self.cfg.params();
        let point = timed(&mut self.report, "solve", || minimize_j(lift, &params, &u0, &opts))?;
        self.push_solution(1, &point, lift, None, None)
    }

    fn solve_nonlinear(&mut self, lift: &LiftingPotential) -> Result<(), CliError> {
        self.smallness(lift, 1)?;
        let nl = self.cfg.nonlinearity()?;
        let (params, opts) = (self.cfg.params(), self.cfg.mountain_options());
        let mp = timed(&mut self.report, "solve", || mountain_pass(&nl, lift, &params, &opts))?;
        self.report.path_values = mp.path.values.clone();
        self.push_solution(1, &mp.point, lift, None, Some(mp.barrier))?;
        let level = mp.point.value;
        self.certify_run(
            Certificate::new("positive_level", level - mp.barrier.alpha, 1e-9 * level.abs())
                .with("value", level)
                .with("alpha", mp.barrier.alpha),
        );
        Ok(())
    }

    fn multi(&mut self, lift: &LiftingPotential) -> Result<(), CliError> {
        let nl = self.cfg.nonlinearity()?;
        let (params, opts) = (self.cfg.params(), self.cfg.multi_options());
        let out = timed(&mut self.report, "solve", || multi_solutions(&nl, lift, &params, &opts))?;
        self.report.attempts = out.attempts.clone();
        self.report.warning = out.warning.clone();
        for (i, point) in out.solutions.iter().enumerate() {
            self.push_solution(i + 1, point, lift, Some(out.classes[i].to_string()), Some(out.barriers[i]))?;
        }
        let found = out.solutions.len();
        self.certify_run(
            Certificate::new("levels_found", found as f64 - opts.n_targets as f64, 0.0)
                .with("found", found as f64)
                .with("requested", opts.n_targets as f64),
        );
        let grads: Vec<f64> = out.solutions.iter().map(CriticalPoint::grad_l2).collect();
        let values: Vec<f64> = out.solutions.iter().map(|p| p.value).collect();
        let min_gap = |v: &[f64]| v.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        if found >= 2 {
            self.certify_run(Certificate::new("increasing_grad", min_gap(&grads), 0.0));
            self.certify_run(Certificate::new("increasing_value", min_gap(&values), 0.0));
        }
        let slack = 10.0 * lift.grid().max_spacing().powi(2);
        for (i, sup) in out.potential_sup.iter().enumerate() {
            self.report.certificates.push(CertificateRow::new(
                &format!("solution {}", i + 1),
                Certificate::new("potential_bound", out.oscillation + slack - sup, 0.0)
                    .with("potential_sup", *sup)
                    .with("chi_oscillation", out.oscillation),
            ));
        }
        Ok(())
    }

    fn verify(&mut self, grid: &Arc<Grid>, lift: &LiftingPotential) -> Result<(), CliError> {
        let cfg = self.cfg;
        let read = |field: &str, path: &Path| {
            read_field_on(grid, path).map_err(|e| CliError::Config {
                field: field.into(),
                message: format!("{}: {e}", path.display()),
            })
        };
        let u = read("verify.u", cfg.verify.u.as_deref().expect("checked by validate"))?;
        let params = cfg.params();
        let nl = cfg.nonlinearity()?;
        let mut functional = ReducedFunctional::new(lift, params, nl, cfg.solver.linear_tol)?;
        let eval = timed(&mut self.report, "solve", || functional.evaluate(&u))?;
        let phi_u = match cfg.verify.phi.as_deref() {
            Some(p) => read("verify.phi", p)?.sub(lift.chi())?,
            None => eval.phi.phi_u.clone(),
        };
        let (matter, potential) = residual_system(&u, &phi_u, lift, &params, &nl)?;
        let mut point = CriticalPoint {
            nontrivial: u.norm(NormKind::L2) >= trivial_threshold(grid, &params),
            u,
            phi_u,
            value: eval.value,
            grad_norm: eval.gradient.norm(NormKind::L2),
            residuals: Residuals { matter, potential },
            certificates: Vec::new(),
            iterations: 0,
            history: Vec::new(),
        };
        point.certificates = certify(&point, lift, &params, &nl, cfg.solver.tol_grad)?;
        self.push_solution(1, &point, lift, None, None)
    }

    fn spectrum(&mut self, lift: &LiftingPotential) -> Result<(), CliError> {
        self.smallness(lift, self.cfg.solver.n_eigen)?;
        let lambdas = &self.report.eigenvalues;
        let ordered = lambdas.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        let first = lambdas[0];
        // degenerate eigenvalues may come out in either order up to the solver tolerance
        let tol = 1e-8 * first;
        self.certify_run(Certificate::new("ordered", if ordered.is_finite() { ordered } else { 0.0 }, tol));
        self.certify_run(Certificate::new("positive", first, 0.0).with("lambda1", first));
        Ok(())
    }

    fn certify_run(&mut self, c: Certificate) {
        self.report.certificates.push(CertificateRow::new("run", c));
    }

    fn push_solution(
        &mut self,
        index: usize,
        point: &CriticalPoint,
        lift: &LiftingPotential,
        class: Option<String>,
        barrier: Option<kgm_core::critical::Barrier>,
    ) -> Result<(), CliError> {
        let scope = format!("solution {index}");
        let physical = point.phi_u.add(lift.chi())?;
        let params = self.cfg.params();
        let max_ok = maximizer_check(
            &point.u,
            &point.phi_u,
            lift,
            &params,
            self.cfg.verify.samples,
            self.cfg.seed,
        )?;
        let u_file = self.write(&format!("u_{index}"), &point.u)?;
        let phi_file = self.write(&format!("phi_{index}"), &physical)?;
        for c in point.certificates.iter().cloned() {
            self.report.certificates.push(CertificateRow::new(&scope, c));
        }
        self.report.certificates.push(CertificateRow::new(
            &scope,
            Certificate::new("maximizer", if max_ok { 0.0 } else { -1.0 }, 0.0)
                .with("samples", self.cfg.verify.samples as f64),
        ));
        self.history.extend(point.history.iter().map(|h: &HistoryEntry| HistoryRow {
            solution: index,
            iteration: h.iteration,
            value: h.value,
            grad_norm: h.grad_norm,
            step: h.step,
        }));
        self.report.solutions.push(SolutionSummary {
            index,
            value: point.value,
            grad_norm: point.grad_norm,
            grad_l2: point.grad_l2(),
            u_l2: point.u.norm(NormKind::L2),
            u_inf: point.u.norm(NormKind::Linf),
            potential_sup: physical.norm(NormKind::Linf),
            residual_matter: point.residuals.matter,
            residual_potential: point.residuals.potential,
            nontrivial: point.nontrivial,
            iterations: point.iterations,
            class,
            barrier,
            u_file,
            phi_file,
        });
        Ok(())
    }

    /// Write a field into the output directory; returns its file name.
    fn write(&mut self, stem: &str, field: &ScalarField) -> Result<String, CliError> {
        let format = self.cfg.output.format;
        let name = match format {
            FieldFormat::Csv => format!("{stem}.csv"),
            FieldFormat::F64le => format!("{stem}.bin"),
        };
        let path = self.cfg.output.dir.join(&name);
        timed(&mut self.report, "write", || write_field(&path, field, format))?;
        self.report.files.push(name.clone());
        Ok(name)
    }

    fn write_history(&mut self) -> Result<(), CliError> {
        let name = "history.csv";
        let path = self.cfg.output.dir.join(name);
        let mut w = csv::Writer::from_path(&path)?;
        if self.history.is_empty() {
            w.write_record(["solution", "iteration", "value", "grad_norm", "step"])?;
        }
        for row in &self.history {
            w.serialize(row)?;
        }
        w.flush().map_err(|source| CliError::Io { path, source })?;
        self.report.files.push(name.to_owned());
        Ok(())
    }
}
