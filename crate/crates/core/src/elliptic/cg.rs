//! Preconditioned conjugate gradients for the symmetric weighted systems.

use serde::{Deserialize, Serialize};

use crate::error::{KgmError, Result};
use crate::mesh::dot;

pub trait LinearOperator {
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

pub trait Preconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

/// Iteration count and final relative residual of a linear solve.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub residual: f64,
}

/// Default iteration cap: `20 * n^(1/3) * 100`.
pub fn default_max_iter(n: usize) -> usize {
    (2000.0 * (n as f64).cbrt()).ceil() as usize
}

pub(crate) struct Jacobi {
    pub inv_diag: Vec<f64>,
}

impl Preconditioner for Jacobi {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        for ((z, r), d) in z.iter_mut().zip(r).zip(&self.inv_diag) {
            *z = r * d;
        }
    }
}

/// Jacobi plus an additive coarse correction on the constant vector. The
/// screened operator's softest mode is nearly constant when `q^2 u^2` is
/// small, and this handles it exactly.
pub(crate) struct JacobiWithConstants {
    pub inv_diag: Vec<f64>,
    /// `1^T A 1`.
    pub constant_energy: f64,
}

impl Preconditioner for JacobiWithConstants {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let c = r.iter().sum::<f64>() / self.constant_energy;
        for ((z, r), d) in z.iter_mut().zip(r).zip(&self.inv_diag) {
            *z = r * d + c;
        }
    }
}

pub(crate) struct CgSettings<'a> {
    pub tol: f64,
    pub max_iter: usize,
    /// Residuals are measured as `sqrt(sum r_i^2 * inv_weight_i)`, i.e. the
    /// quadrature norm of the strong-form residual.
    pub inv_weight: &'a [f64],
    /// Applied to `(x, r)` after every update; used for the singular
    /// zero-flux system to stay in the range of the operator.
    pub project: Option<&'a Projection<'a>>,
    pub name: &'static str,
}

/// In-place map of `(x, r)`.
pub(crate) type Projection<'a> = dyn Fn(&mut [f64], &mut [f64]) + 'a;

fn measure(r: &[f64], iw: &[f64]) -> f64 {
    r.iter().zip(iw).map(|(r, w)| r * r * w).sum::<f64>().sqrt()
}

/// Solve `A x = b` starting from the contents of `x`.
pub(crate) fn pcg(
    op: &dyn LinearOperator,
    pre: &dyn Preconditioner,
    b: &[f64],
    x: &mut [f64],
    settings: &CgSettings<'_>,
) -> Result<SolveReport> {
    let n = b.len();
    let b_norm = measure(b, settings.inv_weight);
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(SolveReport::default());
    }

    let mut r = vec![0.0; n];
    op.apply(x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    if let Some(p) = settings.project {
        p(x, &mut r);
    }
    let mut res = measure(&r, settings.inv_weight) / b_norm;
    if res <= settings.tol {
        return Ok(SolveReport {
            iterations: 0,
            residual: res,
        });
    }

    let mut z = vec![0.0; n];
    pre.apply(&r, &mut z);
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);

    for it in 1..=settings.max_iter {
        op.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            // Only reachable when the residual already lies in the kernel.
            return Err(KgmError::NotConverged {
                solver: settings.name,
                iterations: it,
                residual: res,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if let Some(proj) = settings.project {
            proj(x, &mut r);
        }
        res = measure(&r, settings.inv_weight) / b_norm;
        if res <= settings.tol {
            return Ok(SolveReport {
                iterations: it,
                residual: res,
            });
        }
        pre.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(KgmError::NotConverged {
        solver: settings.name,
        iterations: settings.max_iter,
        residual: res,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Tridiag(usize);

    impl LinearOperator for Tridiag {
        fn apply(&self, x: &[f64], y: &mut [f64]) {
            for i in 0..self.0 {
                let mut v = 4.0 * x[i];
                if i > 0 {
                    v -= x[i - 1];
                }
                if i + 1 < self.0 {
                    v -= x[i + 1];
                }
                y[i] = v;
            }
        }
    }

    #[test]
    fn solves_small_spd_system() {
        let n = 20;
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut x = vec![0.0; n];
        let iw = vec![1.0; n];
        let pre = Jacobi {
            inv_diag: vec![0.25; n],
        };
        let rep = pcg(
            &Tridiag(n),
            &pre,
            &b,
            &mut x,
            &CgSettings {
                tol: 1e-12,
                max_iter: 100,
                inv_weight: &iw,
                project: None,
                name: "test",
            },
        )
        .unwrap();
        assert!(rep.residual <= 1e-12);
        let mut ax = vec![0.0; n];
        Tridiag(n).apply(&x, &mut ax);
        for i in 0..n {
            assert!((ax[i] - b[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn reports_iteration_cap() {
        let n = 50;
        let b = vec![1.0; n];
        let mut x = vec![0.0; n];
        let iw = vec![1.0; n];
        let pre = Jacobi {
            inv_diag: vec![0.25; n],
        };
        let err = pcg(
            &Tridiag(n),
            &pre,
            &b,
            &mut x,
            &CgSettings {
                tol: 1e-15,
                max_iter: 2,
                inv_weight: &iw,
                project: None,
                name: "test",
            },
        )
        .unwrap_err();
        assert!(matches!(err, KgmError::NotConverged { iterations: 2, .. }));
    }
}
