//! Variational solver for the electrostatic Klein-Gordon-Maxwell system on a
//! box, with homogeneous Dirichlet data on the matter field `u` and Neumann
//! data `h` on the potential `phi`.
//!
//! The pipeline:
//!
//! * [`mesh`]: the box grid, quadrature, fields and field files;
//! * [`elliptic`]: the lifting potential `chi` and the screened zero-flux
//!   solves giving `phi_u = xi_u + eta_u`;
//! * [`reduced`]: the full functional `F`, the reduced functionals `J`, `J_g`
//!   and their gradients;
//! * [`critical`]: minimization, mountain pass, deflated multistart and the
//!   Dirichlet spectrum;
//! * [`verify`]: certificates for the estimates satisfied by every solution.

pub mod critical;
pub mod elliptic;
pub mod error;
pub mod mesh;
pub mod reduced;
pub mod verify;

pub use critical::{CriticalPoint, PathState};
pub use elliptic::{LiftingPotential, NeumannOperator, SolveReport};
pub use error::{KgmError, Result};
pub use mesh::{BoundaryData, Face, Grid, NormKind, ScalarField};
pub use reduced::{Nonlinearity, Params};
pub use verify::Certificate;
