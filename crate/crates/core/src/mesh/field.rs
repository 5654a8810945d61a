use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use super::{dot, Face, Grid, NodeClass};
use crate::error::{KgmError, Result};

/// Nodal values on a shared grid.
#[derive(Debug, Clone)]
pub struct ScalarField {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl PartialEq for ScalarField {
    fn eq(&self, other: &Self) -> bool {
        self.same_grid(other) && self.values == other.values
    }
}

impl ScalarField {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        grid.check_len(values.len())?;
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &Arc<Grid>, c: f64) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![c; grid.len()],
        }
    }

    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn([f64; 3]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.coords(i))).collect();
        Self {
            grid: grid.clone(),
            values,
        }
    }

    /// Like [`ScalarField::from_fn`] but forced to zero on the boundary.
    pub fn dirichlet_from_fn(grid: &Arc<Grid>, f: impl Fn([f64; 3]) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|i| if grid.is_boundary(i) { 0.0 } else { f(grid.coords(i)) })
            .collect();
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub(crate) fn from_vec_unchecked(grid: &Arc<Grid>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn same_grid(&self, other: &ScalarField) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    pub(crate) fn check_same_grid(&self, other: &ScalarField) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(KgmError::GridMismatch {
                expected: self.grid.len(),
                actual: other.grid.len(),
            })
        }
    }

    pub fn is_dirichlet_conforming(&self) -> bool {
        self.grid.boundary_nodes().iter().all(|&i| self.values[i] == 0.0)
    }

    /// Copy with boundary values set to zero.
    pub fn to_dirichlet(&self) -> Self {
        let mut out = self.clone();
        for &i in self.grid.boundary_nodes() {
            out.values[i] = 0.0;
        }
        out
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&self, a: f64) -> Self {
        self.map(|v| a * v)
    }

    /// `a * self + b * other`.
    pub fn lin_comb(&self, a: f64, other: &ScalarField, b: f64) -> Result<Self> {
        self.check_same_grid(other)?;
        Ok(Self {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        })
    }

    pub fn add(&self, other: &ScalarField) -> Result<Self> {
        self.lin_comb(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &ScalarField) -> Result<Self> {
        self.lin_comb(1.0, other, -1.0)
    }

    /// Nodewise product.
    pub fn mul(&self, other: &ScalarField) -> Result<Self> {
        self.check_same_grid(other)?;
        Ok(Self {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(x, y)| x * y).collect(),
        })
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Trapezoidal volume quadrature `sum w_i f_i`.
    pub fn integrate(&self) -> f64 {
        dot(self.grid.volume_weights(), &self.values)
    }

    pub fn average(&self) -> f64 {
        self.integrate() / self.grid.volume()
    }

    /// Weighted inner product `sum w_i f_i g_i`.
    pub fn inner(&self, other: &ScalarField) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(weighted_inner(self.grid.volume_weights(), &self.values, &other.values))
    }

    pub fn norm(&self, kind: NormKind) -> f64 {
        let w = self.grid.volume_weights();
        match kind {
            NormKind::L2 => w.iter().zip(&self.values).map(|(w, v)| w * v * v).sum::<f64>().sqrt(),
            NormKind::L4 => w
                .iter()
                .zip(&self.values)
                .map(|(w, v)| w * (v * v) * (v * v))
                .sum::<f64>()
                .sqrt()
                .sqrt(),
            NormKind::Linf => self.values.iter().fold(0.0, |m, v| m.max(v.abs())),
            NormKind::GradL2 => self.grid.dirichlet_energy(&self.values).max(0.0).sqrt(),
            NormKind::H1 => {
                let g2 = self.grid.dirichlet_energy(&self.values).max(0.0);
                let avg = self.average();
                (g2 + avg * avg).sqrt()
            }
        }
    }
}

pub(crate) fn weighted_inner(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    w.iter().zip(a).zip(b).map(|((w, x), y)| w * x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    L2,
    L4,
    Linf,
    #[serde(rename = "gradl2")]
    GradL2,
    H1,
}

impl FromStr for NormKind {
    type Err = KgmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l2" => Ok(NormKind::L2),
            "l4" => Ok(NormKind::L4),
            "linf" => Ok(NormKind::Linf),
            "gradl2" => Ok(NormKind::GradL2),
            "h1" => Ok(NormKind::H1),
            other => Err(KgmError::InvalidParameter(format!("unknown norm kind `{other}`"))),
        }
    }
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            NormKind::L2 => "l2",
            NormKind::L4 => "l4",
            NormKind::Linf => "linf",
            NormKind::GradL2 => "gradl2",
            NormKind::H1 => "h1",
        };
        f.write_str(s)
    }
}

/// Neumann datum `h` sampled on boundary nodes, with `kappa = (int h) / |Omega|`.
#[derive(Debug, Clone)]
pub struct BoundaryData {
    grid: Arc<Grid>,
    values: Vec<f64>,
    kappa: f64,
}

impl BoundaryData {
    /// `values` follows `grid.boundary_nodes()`.
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.boundary_nodes().len() {
            return Err(KgmError::GridMismatch {
                expected: grid.boundary_nodes().len(),
                actual: values.len(),
            });
        }
        let mut out = Self {
            grid,
            values,
            kappa: 0.0,
        };
        out.kappa = out.boundary_integral() / out.grid.volume();
        Ok(out)
    }

    /// Sample `h(x, face)` at every boundary node, `face` being the node's canonical face.
    pub fn from_fn(grid: &Arc<Grid>, h: impl Fn([f64; 3], Face) -> f64) -> Self {
        let values = grid
            .boundary_nodes()
            .iter()
            .map(|&i| match grid.node_class(i) {
                NodeClass::Boundary(face) => h(grid.coords(i), face),
                NodeClass::Interior => unreachable!("interior node in boundary list"),
            })
            .collect();
        Self::new(grid.clone(), values).expect("length matches by construction")
    }

    pub fn constant(grid: &Arc<Grid>, c: f64) -> Self {
        Self::from_fn(grid, |_, _| c)
    }

    pub fn per_face(grid: &Arc<Grid>, faces: [f64; 6]) -> Self {
        Self::from_fn(grid, |_, face| faces[face.index()])
    }

    /// Boundary values of a full-grid field.
    pub fn from_field(field: &ScalarField) -> Self {
        let grid = field.grid();
        let values = grid.boundary_nodes().iter().map(|&i| field.values()[i]).collect();
        Self::new(grid.clone(), values).expect("length matches by construction")
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// `sum over boundary nodes of surface_weight * h`.
    pub fn boundary_integral(&self) -> f64 {
        let sw = self.grid.surface_weights();
        self.grid
            .boundary_nodes()
            .iter()
            .zip(&self.values)
            .map(|(&i, h)| sw[i] * h)
            .sum()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Whether `int h` vanishes up to round-off of the quadrature.
    pub fn is_mean_zero(&self) -> bool {
        let sw = self.grid.surface_weights();
        let scale: f64 = self
            .grid
            .boundary_nodes()
            .iter()
            .zip(&self.values)
            .map(|(&i, h)| (sw[i] * h).abs())
            .sum();
        self.boundary_integral().abs() <= 1e-12 * scale
    }

    /// Full-grid flux source `s_i = surface_weight_i * h_i` (zero inside).
    pub(crate) fn flux_source(&self) -> Vec<f64> {
        let sw = self.grid.surface_weights();
        let mut s = vec![0.0; self.grid.len()];
        for (&i, h) in self.grid.boundary_nodes().iter().zip(&self.values) {
            s[i] = sw[i] * h;
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit(n: usize) -> Arc<Grid> {
        Arc::new(Grid::cube(1.0, n).unwrap())
    }

    #[test]
    fn integrate_examples() {
        let g = unit(9);
        assert_eq!(ScalarField::zeros(&g).integrate(), 0.0);
        assert!((ScalarField::constant(&g, 1.0).integrate() - 1.0).abs() < 1e-14);
        let x = ScalarField::from_fn(&g, |p| p[0]);
        assert!((x.integrate() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn average_examples() {
        let g = unit(9);
        assert!((ScalarField::constant(&g, 5.0).average() - 5.0).abs() < 1e-13);
        assert_eq!(ScalarField::zeros(&g).average(), 0.0);
        let f = ScalarField::from_fn(&g, |p| p[0] - 0.5);
        assert!(f.average().abs() < 1e-12);
    }

    #[test]
    fn boundary_integral_examples() {
        let g = unit(7);
        assert_eq!(BoundaryData::constant(&g, 0.0).boundary_integral(), 0.0);
        let c = 0.3;
        let h = BoundaryData::constant(&g, c);
        assert!((h.boundary_integral() - 6.0 * c).abs() < 1e-12);
        assert!((h.kappa() - 6.0 * c).abs() < 1e-12);
        let dip = BoundaryData::per_face(&g, [-1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(dip.boundary_integral().abs() < 1e-12);
        assert!(dip.is_mean_zero());
        assert!(!h.is_mean_zero());
    }

    #[test]
    fn norm_examples() {
        let g = unit(9);
        for kind in [NormKind::L2, NormKind::L4, NormKind::Linf, NormKind::GradL2, NormKind::H1] {
            assert_eq!(ScalarField::zeros(&g).norm(kind), 0.0);
        }
        let c = ScalarField::constant(&g, -3.0);
        assert!((c.norm(NormKind::L2) - 3.0).abs() < 1e-12);
        assert!(c.norm(NormKind::GradL2) < 1e-12);
        assert!((c.norm(NormKind::H1) - 3.0).abs() < 1e-12);

        let g = unit(33);
        let s = ScalarField::from_fn(&g, |p| (std::f64::consts::PI * p[0]).sin());
        assert!((s.norm(NormKind::L2) - 0.5f64.sqrt()).abs() < 2e-3);
    }

    #[test]
    fn unknown_norm_kind_is_rejected() {
        assert!("l3".parse::<NormKind>().is_err());
        assert_eq!("GradL2".parse::<NormKind>().unwrap(), NormKind::GradL2);
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = ScalarField::zeros(&unit(5));
        let b = ScalarField::zeros(&unit(6));
        assert!(matches!(a.add(&b), Err(KgmError::GridMismatch { .. })));
        assert!(ScalarField::new(unit(5), vec![0.0; 3]).is_err());
    }

    fn field_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, f64, f64)> {
        let n = 5 * 6 * 4;
        (
            prop::collection::vec(-10.0f64..10.0, n),
            prop::collection::vec(-10.0f64..10.0, n),
            -5.0f64..5.0,
            -5.0f64..5.0,
        )
    }

    proptest! {
        #[test]
        fn integrate_is_linear((f, h, a, b) in field_strategy()) {
            let g = Arc::new(Grid::new([1.0, 1.5, 0.8], [5, 6, 4]).unwrap());
            let f = ScalarField::new(g.clone(), f).unwrap();
            let h = ScalarField::new(g.clone(), h).unwrap();
            let lhs = f.lin_comb(a, &h, b).unwrap().integrate();
            let rhs = a * f.integrate() + b * h.integrate();
            let scale = a.abs() * f.map(f64::abs).integrate() + b.abs() * h.map(f64::abs).integrate();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * scale.max(1e-300));
        }

        #[test]
        fn l2_norm_squares_to_integral((f, _h, _a, _b) in field_strategy()) {
            let g = Arc::new(Grid::new([1.0, 1.5, 0.8], [5, 6, 4]).unwrap());
            let f = ScalarField::new(g, f).unwrap();
            let n2 = f.norm(NormKind::L2).powi(2);
            let i = f.map(|v| v * v).integrate();
            prop_assert!((n2 - i).abs() <= 1e-12 * i.max(1e-300));
        }

        #[test]
        fn dirichlet_average_bounded_by_sup((f, _h, _a, _b) in field_strategy()) {
            let g = Arc::new(Grid::new([1.0, 1.5, 0.8], [5, 6, 4]).unwrap());
            let f = ScalarField::new(g, f).unwrap().to_dirichlet();
            prop_assert!(f.is_dirichlet_conforming());
            prop_assert!(f.average() <= f.norm(NormKind::Linf) + 1e-15);
        }
    }
}
