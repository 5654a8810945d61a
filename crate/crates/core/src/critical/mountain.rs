use serde::Serialize;

use super::{
    dirichlet_eigenpairs, finish, smallness_check, sufficient_decrease, Armijo, CriticalPoint, HistoryEntry,
    SobolevMap,
};
use crate::elliptic::LiftingPotential;
use crate::error::{KgmError, Result};
use crate::mesh::{NormKind, ScalarField};
use crate::reduced::{Evaluation, Nonlinearity, Params, ReducedFunctional};

/// Largest multiplier tried by the endpoint search, `2^60`.
const MAX_ENDPOINT_SCALE: f64 = 1.152_921_504_606_847e18;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MountainPassOptions {
    /// Number of points on the discrete path, endpoints included.
    pub n_path: usize,
    pub tol_grad: f64,
    pub max_iter: usize,
    pub linear_tol: f64,
    pub armijo: Armijo,
}

impl Default for MountainPassOptions {
    fn default() -> Self {
        Self {
            n_path: 21,
            tol_grad: 1e-6,
            max_iter: 500,
            linear_tol: 1e-11,
            armijo: Armijo::default(),
        }
    }
}

/// Straight discrete path `t_k e`, `t_k = k / (n - 1)`, from `0` to the endpoint `e`.
#[derive(Debug, Clone)]
pub struct PathState {
    pub points: Vec<ScalarField>,
    pub values: Vec<f64>,
}

impl PathState {
    /// Index of the largest value; the lowest index wins ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (k, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = k;
            }
        }
        best
    }
}

/// Lower bound of `J_g` on the sphere `|grad u|_2 = rho`, sampled along the
/// seed and solution directions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Barrier {
    pub rho: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone)]
pub struct MountainPass {
    pub point: CriticalPoint,
    pub path: PathState,
    pub barrier: Barrier,
}

/// Restrictions of a search: an invariant subspace and previously found
/// solutions to deflate.
pub(crate) struct SearchConstraints<'c> {
    pub project: Option<&'c dyn Fn(&ScalarField) -> ScalarField>,
    pub known: &'c [ScalarField],
    pub beta: f64,
}

impl SearchConstraints<'_> {
    pub const NONE: SearchConstraints<'static> = SearchConstraints {
        project: None,
        known: &[],
        beta: 0.0,
    };

    fn project(&self, f: ScalarField) -> ScalarField {
        match self.project {
            Some(p) => p(&f),
            None => f,
        }
    }

    /// `prod_i (1 + beta / (|u - u_i|^2 |u + u_i|^2))` in the `H^1_0` norm.
    fn deflation(&self, u: &ScalarField) -> Result<f64> {
        let mut m = 1.0;
        for known in self.known {
            let a = u.sub(known)?.norm(NormKind::GradL2).powi(2);
            let b = u.add(known)?.norm(NormKind::GradL2).powi(2);
            m *= 1.0 + self.beta / (a * b).max(f64::MIN_POSITIVE);
        }
        Ok(m)
    }
}

/// Deflation factor beyond which a search is treated as rediscovering a known solution.
const REDISCOVERY: f64 = 1e6;

pub fn find_endpoint(
    direction: &ScalarField,
    nl: &Nonlinearity,
    lift: &LiftingPotential,
    params: &Params,
) -> Result<ScalarField> {
    if nl.is_none() {
        return Err(KgmError::Unsupported(
            "the linear functional has no negative endpoint".into(),
        ));
    }
    let mut functional = ReducedFunctional::new(lift, *params, *nl, 1e-10)?;
    let v = direction.to_dirichlet();
    let t = endpoint_scale(&mut functional, &v)?;
    Ok(v.scale(t))
}

/// Smallest `t = 2^j`, `j >= 0`, with `J_g(t v) < 0`.
fn endpoint_scale(functional: &mut ReducedFunctional<'_>, v: &ScalarField) -> Result<f64> {
    if v.norm(NormKind::L2) == 0.0 {
        return Err(KgmError::InvalidParameter("direction must be nonzero".into()));
    }
    let mut t = 1.0;
    loop {
        if functional.value(&v.scale(t))? < 0.0 {
            return Ok(t);
        }
        t *= 2.0;
        if t > MAX_ENDPOINT_SCALE {
            return Err(KgmError::EndpointNotFound { t });
        }
    }
}

fn build_path(functional: &mut ReducedFunctional<'_>, v: &ScalarField, n_path: usize) -> Result<(PathState, f64)> {
    let t_end = endpoint_scale(functional, v)?;
    let mut points = Vec::with_capacity(n_path);
    let mut values = Vec::with_capacity(n_path);
    for k in 0..n_path {
        let t = t_end * k as f64 / (n_path - 1) as f64;
        let p = v.scale(t);
        values.push(if k == 0 { 0.0 } else { functional.value(&p)? });
        points.push(p);
    }
    Ok((PathState { points, values }, t_end))
}

struct RayPoint {
    t: f64,
    eval: Evaluation,
}

/// Evaluate at `t v` and return the slope `d/dt J_g(t v) = <r(t v), v>`.
fn ray_eval(functional: &mut ReducedFunctional<'_>, v: &ScalarField, t: f64) -> Result<(Evaluation, f64)> {
    let e = functional.evaluate(&v.scale(t))?;
    let slope = e.gradient.inner(v)?;
    Ok((e, slope))
}

/// Maximize `t -> J_g(t v)` for `t > 0`. Starts from the bracket `[lo, hi]`
/// when its slopes have opposite signs, otherwise searches geometrically
/// around `guess`. The slope is driven below `slope_tol`.
fn ray_max(
    functional: &mut ReducedFunctional<'_>,
    v: &ScalarField,
    bracket: Option<(f64, f64)>,
    guess: f64,
    slope_tol: f64,
) -> Result<RayPoint> {
    let mut found = None;
    if let Some((lo, hi)) = bracket {
        let (_, s_lo) = ray_eval(functional, v, lo)?;
        let (_, s_hi) = ray_eval(functional, v, hi)?;
        if s_lo > 0.0 && s_hi < 0.0 {
            found = Some((lo, s_lo, hi, s_hi));
        }
    }
    let (mut lo, mut s_lo, mut hi, mut s_hi) = match found {
        Some(b) => b,
        None => {
            let (e, s) = ray_eval(functional, v, guess)?;
            if s.abs() <= slope_tol {
                return Ok(RayPoint { t: guess, eval: e });
            }
            let factor = 1.5;
            let (mut t, mut st) = (guess, s);
            let mut steps = 0;
            loop {
                steps += 1;
                let t2 = if s > 0.0 { t * factor } else { t / factor };
                if t2 > MAX_ENDPOINT_SCALE {
                    return Err(KgmError::EndpointNotFound { t: t2 });
                }
                if steps > 200 {
                    return Err(KgmError::PathCollapse { index: 0 });
                }
                let (_, s2) = ray_eval(functional, v, t2)?;
                if s > 0.0 && s2 < 0.0 {
                    break (t, st, t2, s2);
                }
                if s < 0.0 && s2 > 0.0 {
                    break (t2, s2, t, st);
                }
                t = t2;
                st = s2;
            }
        }
    };

    // Illinois variant of regula falsi on the slope.
    let mut side = 0i8;
    let mut best: Option<(f64, RayPoint)> = None;
    for _ in 0..200 {
        let t = (lo * s_hi - hi * s_lo) / (s_hi - s_lo);
        let t = t.clamp(lo + 1e-3 * (hi - lo), hi - 1e-3 * (hi - lo));
        let (e, s) = ray_eval(functional, v, t)?;
        if best.as_ref().is_none_or(|(b, _)| s.abs() < *b) {
            best = Some((s.abs(), RayPoint { t, eval: e }));
        }
        if s.abs() <= slope_tol || hi - lo <= 1e-14 * hi {
            break;
        }
        if s > 0.0 {
            lo = t;
            s_lo = s;
            if side == 1 {
                s_hi *= 0.5;
            }
            side = 1;
        } else {
            hi = t;
            s_hi = s;
            if side == -1 {
                s_lo *= 0.5;
            }
            side = -1;
        }
    }
    Ok(best.expect("at least one iteration").1)
}

/// Mountain pass from `0` towards the first Dirichlet eigenmode.
///
/// Requires a power nonlinearity, `kappa = 0` and the smallness condition
/// `q^2 |chi|_inf^2 < lambda_1 + m^2`.
pub fn mountain_pass(
    nl: &Nonlinearity,
    lift: &LiftingPotential,
    params: &Params,
    opts: &MountainPassOptions,
) -> Result<MountainPass> {
    if nl.is_none() {
        return Err(KgmError::Unsupported("mountain pass needs a power nonlinearity".into()));
    }
    let pairs = dirichlet_eigenpairs(lift.grid(), 1, 1e-10)?;
    let small = smallness_check(lift, params, &[pairs[0].value])?;
    if !small.spectral_condition {
        return Err(KgmError::Unsupported(format!(
            "smallness condition fails: q^2 |chi|^2 = {} >= lambda_1 + m^2",
            small.q_chi_inf * small.q_chi_inf
        )));
    }
    mountain_pass_from(&pairs[0].vector, nl, lift, params, opts)
}

/// Mountain pass whose initial path runs along `seed`.
pub fn mountain_pass_from(
    seed: &ScalarField,
    nl: &Nonlinearity,
    lift: &LiftingPotential,
    params: &Params,
    opts: &MountainPassOptions,
) -> Result<MountainPass> {
    let mut functional = ReducedFunctional::new(lift, *params, *nl, opts.linear_tol)?;
    search(&mut functional, seed, opts, &SearchConstraints::NONE)
}

/// Local minimax iteration on rays: the path maximizer `w` is moved along
/// the `H^1_0` gradient projected orthogonally to `w`, and the new ray is
/// accepted when its maximum decreases sufficiently.
pub(crate) fn search(
    functional: &mut ReducedFunctional<'_>,
    seed: &ScalarField,
    opts: &MountainPassOptions,
    constraints: &SearchConstraints<'_>,
) -> Result<MountainPass> {
    if functional.nonlinearity().is_none() {
        return Err(KgmError::Unsupported("mountain pass needs a power nonlinearity".into()));
    }
    if opts.n_path < 3 {
        return Err(KgmError::InvalidParameter("a path needs at least 3 points".into()));
    }
    let grid = seed.grid().clone();
    let seed = constraints.project(seed.to_dirichlet());
    let seed_grad = seed.norm(NormKind::GradL2);
    if seed_grad == 0.0 {
        return Err(KgmError::InvalidParameter("seed direction vanishes".into()));
    }
    let mut riesz = SobolevMap::new(&grid, (opts.linear_tol * 10.0).min(1e-9));
    let slope_tol = |v: &ScalarField| 0.05 * opts.tol_grad * v.norm(NormKind::L2);

    let (path, t_end) = build_path(functional, &seed, opts.n_path)?;
    let k = path.argmax();
    if k == 0 || k == opts.n_path - 1 {
        return Err(KgmError::PathCollapse { index: k });
    }
    let t_step = t_end / (opts.n_path - 1) as f64;
    let lo = (t_step * (k - 1) as f64).max(1e-3 * t_step * k as f64);
    let hi = t_step * (k + 1) as f64;
    let start = ray_max(functional, &seed, Some((lo, hi)), t_step * k as f64, slope_tol(&seed))?;
    let mut w = seed.scale(start.t);
    let mut eval = start.eval;
    let mut history = Vec::new();

    for it in 0..=opts.max_iter {
        // reflections commute with the Riesz map, so projecting d projects the gradient
        let (d, _) = riesz.apply(&eval.gradient)?;
        let gn = eval.gradient.norm(NormKind::L2);
        let d = constraints.project(d);
        let m = constraints.deflation(&w)?;
        history.push(HistoryEntry {
            iteration: it,
            value: eval.value,
            grad_norm: gn,
            step: 0.0,
        });
        if m > REDISCOVERY {
            return Err(KgmError::NotConverged {
                solver: "deflated mountain pass",
                iterations: it,
                residual: gn,
            });
        }
        if gn * m <= opts.tol_grad {
            let (path, _) = build_path(functional, &w, opts.n_path)?;
            let barrier = barrier(functional, &[&seed, &w], 0.25 * w.norm(NormKind::GradL2))?;
            let point = finish(w, eval, gn, it, history, functional, opts.tol_grad)?;
            return Ok(MountainPass {
                point,
                path,
                barrier,
            });
        }
        if it == opts.max_iter {
            break;
        }
        let w_grad2 = w.norm(NormKind::GradL2).powi(2);
        let coef = grid.energy_product(d.values(), w.values()) / w_grad2;
        let dp = d.lin_comb(1.0, &w, -coef)?;
        let gp2 = grid.dirichlet_energy(dp.values()).max(0.0);
        let mut alpha = opts.armijo.initial_step * m;
        loop {
            let trial = constraints.project(w.lin_comb(1.0, &dp, -alpha)?);
            let outcome = ray_max(functional, &trial, None, 1.0, slope_tol(&trial));
            match outcome {
                Ok(r) if sufficient_decrease(&eval, &r.eval, alpha * gp2, gn, &opts.armijo) => {
                    w = trial.scale(r.t);
                    eval = r.eval;
                    break;
                }
                Ok(_)
                | Err(KgmError::PathCollapse { .. })
                | Err(KgmError::EndpointNotFound { .. })
                | Err(KgmError::DegenerateScreening { .. }) => {}
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
        solver: "mountain pass",
        iterations: opts.max_iter,
        residual: history.last().map_or(f64::NAN, |h| h.grad_norm),
    })
}

/// `alpha = min J_g(rho v / |grad v|)` over `dirs`.
fn barrier(functional: &mut ReducedFunctional<'_>, dirs: &[&ScalarField], rho: f64) -> Result<Barrier> {
    let mut alpha = f64::INFINITY;
    for d in dirs {
        let v = d.scale(rho / d.norm(NormKind::GradL2));
        alpha = alpha.min(functional.value(&v)?);
    }
    Ok(Barrier { rho, alpha })
}
