//! Dense LP and MILP solver.
//!
//! [`solve_lp`] runs a bounded-variable two-phase primal simplex on the
//! continuous relaxation. [`solve_mip`] adds best-first branch and bound on
//! the most fractional integer variable. Both are generic over [`Scalar`]
//! (`f32` or `f64`); the unparameterized aliases below use `f64`.

mod branch;
mod error;
pub mod problem;
pub mod scalar;
mod simplex;

pub use branch::solve_mip;
pub use error::{MilpError, Result};
pub use problem::{add_cardinality, Pricing, Status, VarKind};
pub use scalar::Scalar;
pub use simplex::solve_lp;

pub type LinearProgram = problem::LinearProgram<f64>;
pub type Solution = problem::Solution<f64>;
pub type SolverOptions = problem::SolverOptions<f64>;
