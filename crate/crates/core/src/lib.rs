//! Global solution curves of three self-similar radial p-Laplace problems.
//!
//! Every positive radial solution of the generalized Gelfand, MEMS and
//! Joseph-Lundgren problems on the unit ball is a rescaling of one solution
//! of a singular initial value problem (the *generating* solution). This crate
//! integrates that IVP, rebuilds the `(lambda, u(0))` curve from it, locates its
//! folds, and checks convergence to the explicit singular solution.
//!
//! * [`model`]: closed forms, named conditions, characteristic roots.
//! * [`ivp`]: the generating IVPs with dense output.
//! * [`curve`]: the solution curve, turning points and the shooting oracle.
//! * [`verify`]: the acceptance matrix.
//! * [`io`]: CSV and JSON output.

pub mod curve;
pub mod io;
pub mod ivp;
pub mod model;
pub mod verify;

pub use ivp::{integrate, IntegratorConfig, IvpError, Trajectory};
pub use model::{
    check_conditions, closed_forms, ClosedForms, ModelError, Params, ProblemClass, RegimeReport,
};
