use std::fmt;

use serde::Serialize;

use super::mountain::{search, Barrier, MountainPassOptions, SearchConstraints};
use super::{dirichlet_eigenpairs, CriticalPoint};
use crate::elliptic::LiftingPotential;
use crate::error::{KgmError, Result};
use crate::mesh::{NormKind, ScalarField};
use crate::reduced::{Nonlinearity, Params, ReducedFunctional};

/// Reflection parities about the mid-planes of the box. `Some(true)` means
/// even, `Some(false)` odd, `None` that the axis is not a symmetry of the
/// functional.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct SymmetryClass {
    pub parity: [Option<bool>; 3],
}

impl SymmetryClass {
    /// Orthogonal projection onto the class: average over the reflections
    /// with the class signs.
    pub fn project(&self, f: &ScalarField) -> ScalarField {
        let grid = f.grid();
        let mut v = f.values().to_vec();
        for (axis, p) in self.parity.iter().enumerate() {
            let Some(even) = *p else { continue };
            let sign = if even { 1.0 } else { -1.0 };
            let src = v.clone();
            for (i, out) in v.iter_mut().enumerate() {
                *out = 0.5 * (src[i] + sign * src[grid.reflect(i, axis)]);
            }
        }
        ScalarField::new(grid.clone(), v).expect("grid length")
    }
}

impl fmt::Display for SymmetryClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in self.parity {
            f.write_str(match p {
                Some(true) => "E",
                Some(false) => "O",
                None => "-",
            })?;
        }
        Ok(())
    }
}

/// Axes under which `chi` is even or odd; on those the reduced functional
/// is invariant under `u -> u o R`.
fn symmetric_axes(lift: &LiftingPotential) -> [bool; 3] {
    let chi = lift.chi();
    let grid = chi.grid();
    let scale = lift.chi_inf().max(f64::MIN_POSITIVE);
    std::array::from_fn(|axis| {
        let (mut even, mut odd) = (0.0f64, 0.0f64);
        for (i, c) in chi.values().iter().enumerate() {
            let r = chi.values()[grid.reflect(i, axis)];
            even = even.max((c - r).abs());
            odd = odd.max((c + r).abs());
        }
        even.min(odd) <= 1e-6 * scale
    })
}

fn classes(axes: [bool; 3]) -> Vec<SymmetryClass> {
    let sym: Vec<usize> = (0..3).filter(|&a| axes[a]).collect();
    (0..1usize << sym.len())
        .map(|mask| {
            let mut parity = [None; 3];
            for (bit, &a) in sym.iter().enumerate() {
                parity[a] = Some(mask & (1 << bit) == 0);
            }
            SymmetryClass { parity }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MultiOptions {
    pub n_targets: usize,
    pub mountain: MountainPassOptions,
    /// Deflation strength.
    pub beta: f64,
    /// Dirichlet eigenmodes used as seeds.
    pub n_modes: usize,
    /// Searches attempted before giving up.
    pub max_candidates: usize,
    /// Minimum of `min(|u - u_i|, |u + u_i|) / |u_i|` against accepted solutions.
    pub distinctness: f64,
    /// Solutions whose `|grad u|_2` agree to this relative tolerance share a level.
    pub level_tol: f64,
}

impl Default for MultiOptions {
    fn default() -> Self {
        Self {
            n_targets: 3,
            mountain: MountainPassOptions::default(),
            beta: 1.0,
            n_modes: 10,
            max_candidates: 12,
            distinctness: 0.05,
            level_tol: 1e-3,
        }
    }
}

/// One search of the multistart.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Attempt {
    pub class: String,
    pub mode: usize,
    pub eigenvalue: f64,
    pub outcome: String,
}

#[derive(Debug, Clone)]
pub struct MultiOutcome {
    /// One solution per level, sorted by `|grad u|_2` strictly increasing.
    pub solutions: Vec<CriticalPoint>,
    pub classes: Vec<SymmetryClass>,
    pub barriers: Vec<Barrier>,
    /// `max chi - min chi`.
    pub oscillation: f64,
    /// `|phi_i + chi|_inf` per solution.
    pub potential_sup: Vec<f64>,
    pub attempts: Vec<Attempt>,
    /// Set when fewer than `n_targets` levels were found.
    pub warning: Option<String>,
}

struct Candidate {
    eigenvalue: f64,
    mode: usize,
    class: SymmetryClass,
    seed: ScalarField,
}

fn candidates(lift: &LiftingPotential, n_modes: usize) -> Result<Vec<Candidate>> {
    let pairs = dirichlet_eigenpairs(lift.grid(), n_modes, 1e-8)?;
    let mut kept: Vec<Candidate> = Vec::new();
    for class in classes(symmetric_axes(lift)) {
        for (mode, pair) in pairs.iter().enumerate() {
            let mut s = class.project(&pair.vector);
            for c in kept.iter().filter(|c| c.class == class) {
                let p = s.inner(&c.seed)?;
                s = s.lin_comb(1.0, &c.seed, -p)?;
            }
            let norm = s.norm(NormKind::L2);
            if norm >= 0.1 {
                kept.push(Candidate {
                    eigenvalue: pair.value,
                    mode: mode + 1,
                    class,
                    seed: s.scale(1.0 / norm),
                });
            }
        }
    }
    kept.sort_by(|a, b| a.eigenvalue.total_cmp(&b.eigenvalue).then(a.mode.cmp(&b.mode)));
    Ok(kept)
}

fn distinct_from(u: &ScalarField, known: &[ScalarField]) -> Result<f64> {
    let mut d = f64::INFINITY;
    for k in known {
        let nk = k.norm(NormKind::GradL2);
        let minus = u.sub(k)?.norm(NormKind::GradL2);
        let plus = u.add(k)?.norm(NormKind::GradL2);
        d = d.min(minus.min(plus) / nk);
    }
    Ok(d)
}

/// Indices of one representative per level, by increasing `|grad u|_2`.
fn levels(points: &[CriticalPoint], level_tol: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].grad_l2().total_cmp(&points[b].grad_l2()));
    let mut out: Vec<usize> = Vec::new();
    for i in order {
        let g = points[i].grad_l2();
        match out.last() {
            Some(&j) if (g - points[j].grad_l2()) <= level_tol * g => {}
            _ => out.push(i),
        }
    }
    out
}

/// Several solutions of the mean-zero superlinear problem.
///
/// Mountain-pass searches run inside the reflection classes of the box that
/// leave the functional invariant, seeded with class projections of the
/// Dirichlet eigenmodes in increasing order, and deflated against the
/// solutions already found. Solutions on a common level (symmetric copies)
/// count once.
pub fn multi_solutions(
    nl: &Nonlinearity,
    lift: &LiftingPotential,
    params: &Params,
    opts: &MultiOptions,
) -> Result<MultiOutcome> {
    if nl.is_none() || !nl.is_odd() {
        return Err(KgmError::Unsupported("multiple solutions need an odd power nonlinearity".into()));
    }
    if opts.n_targets == 0 {
        return Err(KgmError::InvalidParameter("n_targets must be positive".into()));
    }
    let mut functional = ReducedFunctional::new(lift, *params, *nl, opts.mountain.linear_tol)?;
    let mut found: Vec<CriticalPoint> = Vec::new();
    let mut found_classes = Vec::new();
    let mut barriers = Vec::new();
    let mut attempts = Vec::new();

    for cand in candidates(lift, opts.n_modes)?.into_iter().take(opts.max_candidates) {
        if levels(&found, opts.level_tol).len() >= opts.n_targets {
            break;
        }
        let known: Vec<ScalarField> = found.iter().map(|p| p.u.clone()).collect();
        let class = cand.class;
        let project = move |f: &ScalarField| class.project(f);
        let constraints = SearchConstraints {
            project: Some(&project),
            known: &known,
            beta: opts.beta,
        };
        let outcome = match search(&mut functional, &cand.seed, &opts.mountain, &constraints) {
            Ok(mp) => {
                let d = distinct_from(&mp.point.u, &known)?;
                if d >= opts.distinctness && mp.point.nontrivial {
                    found.push(mp.point);
                    found_classes.push(class);
                    barriers.push(mp.barrier);
                    "accepted".to_owned()
                } else {
                    format!("rejected: distinctness {d:.3e}")
                }
            }
            Err(e) => format!("failed: {e}"),
        };
        attempts.push(Attempt {
            class: class.to_string(),
            mode: cand.mode,
            eigenvalue: cand.eigenvalue,
            outcome,
        });
    }

    let keep = levels(&found, opts.level_tol);
    let oscillation = lift.chi_max() - lift.chi_min();
    let mut solutions = Vec::with_capacity(keep.len());
    let mut classes_out = Vec::with_capacity(keep.len());
    let mut barriers_out = Vec::with_capacity(keep.len());
    let mut potential_sup = Vec::with_capacity(keep.len());
    for i in keep {
        potential_sup.push(found[i].phi_u.add(lift.chi())?.norm(NormKind::Linf));
        solutions.push(found[i].clone());
        classes_out.push(found_classes[i]);
        barriers_out.push(barriers[i]);
    }
    let warning = (solutions.len() < opts.n_targets).then(|| {
        format!(
            "found {} of {} requested solution levels",
            solutions.len(),
            opts.n_targets
        )
    });
    Ok(MultiOutcome {
        solutions,
        classes: classes_out,
        barriers: barriers_out,
        oscillation,
        potential_sup,
        attempts,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::mesh::Grid;

    #[test]
    fn class_projection_is_idempotent_and_splits_unity() {
        let g = Arc::new(Grid::new([1.0, 1.2, 0.8], [5, 6, 7]).unwrap());
        let f = ScalarField::from_fn(&g, |p| (p[0] * 3.0).sin() + p[1] * p[2] + p[0].powi(3));
        let all = classes([true, true, false]);
        assert_eq!(all.len(), 4);
        let mut sum = ScalarField::zeros(&g);
        for c in &all {
            let p = c.project(&f);
            let pp = c.project(&p);
            assert!(p.sub(&pp).unwrap().norm(NormKind::Linf) < 1e-14);
            sum = sum.add(&p).unwrap();
        }
        assert!(sum.sub(&f).unwrap().norm(NormKind::Linf) < 1e-14);
        assert_eq!(all[0].to_string(), "EE-");
    }
}
