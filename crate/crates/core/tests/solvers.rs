//! Descent and mountain-pass solvers on small grids.

mod common;

use kgm_core::critical::{
    find_endpoint, minimize_j, mountain_pass, mountain_pass_from, DescentOptions, MountainPassOptions,
};
use kgm_core::elliptic::solve_chi;
use kgm_core::mesh::{BoundaryData, NormKind, ScalarField};
use kgm_core::reduced::{j_g, Nonlinearity, Params};
use kgm_core::KgmError;

fn bump(grid: &std::sync::Arc<kgm_core::mesh::Grid>) -> ScalarField {
    ScalarField::dirichlet_from_fn(grid, |x| (x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1]) * x[2] * (1.0 - x[2])) * 64.0)
}

#[test]
fn minimizer_with_flux_is_nontrivial_and_sign_symmetric() {
    let grid = common::cube(9);
    let lift = solve_chi(&BoundaryData::constant(&grid, 0.05), 1e-12).unwrap();
    let params = Params::new(1.0, 0.1, 0.0).unwrap();
    let opts = DescentOptions::default();
    let a = minimize_j(&lift, &params, &bump(&grid), &opts).unwrap();
    let b = minimize_j(&lift, &params, &bump(&grid).scale(-1.0), &opts).unwrap();
    assert!(a.nontrivial && a.all_certificates_pass(), "{:?}", a.certificates);
    assert!((a.value - b.value).abs() <= 1e-8 * a.value.abs());
    let diff = a.u.add(&b.u).unwrap().norm(NormKind::L2);
    assert!(diff <= 1e-4 * a.u.norm(NormKind::L2), "{diff}");
    assert!(a.history.windows(2).all(|w| w[1].value <= w[0].value + 1e-12 * w[0].value.abs()));
}

#[test]
fn minimizer_rejects_zero_guess() {
    let grid = common::cube(5);
    let lift = solve_chi(&BoundaryData::constant(&grid, 0.05), 1e-12).unwrap();
    let params = Params::new(1.0, 0.1, 0.0).unwrap();
    let err = minimize_j(&lift, &params, &ScalarField::zeros(&grid), &DescentOptions::default());
    assert!(matches!(err, Err(KgmError::InvalidParameter(_))));
}

#[test]
fn endpoint_is_negative_and_none_is_unsupported() {
    let grid = common::cube(7);
    let lift = solve_chi(&BoundaryData::per_face(&grid, [0.05, -0.05, 0.0, 0.0, 0.0, 0.0]), 1e-12).unwrap();
    let params = Params::new(1.0, 0.2, 0.0).unwrap();
    let nl = Nonlinearity::power(4.0).unwrap();
    let e = find_endpoint(&bump(&grid), &nl, &lift, &params).unwrap();
    assert!(j_g(&e, &lift, &params, &nl, 1e-12).unwrap() < 0.0);
    // the endpoint is the first power of two along the ray with negative value
    let t = e.norm(NormKind::L2) / bump(&grid).norm(NormKind::L2);
    assert!((t.log2() - t.log2().round()).abs() < 1e-9);
    if t > 1.5 {
        assert!(j_g(&e.scale(0.5), &lift, &params, &nl, 1e-12).unwrap() >= 0.0);
    }
    assert!(matches!(
        find_endpoint(&bump(&grid), &Nonlinearity::None, &lift, &params),
        Err(KgmError::Unsupported(_))
    ));
}

#[test]
fn mountain_pass_is_even_in_the_seed() {
    let grid = common::cube(9);
    let lift = solve_chi(&BoundaryData::per_face(&grid, [0.05, -0.05, 0.0, 0.0, 0.0, 0.0]), 1e-12).unwrap();
    let params = Params::new(1.0, 0.1, 0.0).unwrap();
    let nl = Nonlinearity::power(4.0).unwrap();
    let opts = MountainPassOptions::default();
    let a = mountain_pass(&nl, &lift, &params, &opts).unwrap();
    let b = mountain_pass_from(&bump(&grid).scale(-1.0), &nl, &lift, &params, &opts).unwrap();
    assert!(a.point.nontrivial && a.point.all_certificates_pass(), "{:?}", a.point.certificates);
    assert!(b.point.nontrivial);
    assert!((a.point.value - b.point.value).abs() <= 1e-5 * a.point.value);
    assert!(a.point.value > 0.0);
    assert!(a.barrier.alpha > 0.0 && a.point.value >= a.barrier.alpha * (1.0 - 1e-9));
    let path = &a.path;
    let top = path.argmax();
    assert!(top > 0 && top + 1 < path.values.len());
}

#[test]
fn mountain_pass_refuses_the_linear_problem() {
    let grid = common::cube(5);
    let lift = solve_chi(&BoundaryData::constant(&grid, 0.0), 1e-12).unwrap();
    let params = Params::new(1.0, 0.1, 0.0).unwrap();
    let r = mountain_pass(&Nonlinearity::None, &lift, &params, &MountainPassOptions::default());
    assert!(matches!(r, Err(KgmError::Unsupported(_))));
}
