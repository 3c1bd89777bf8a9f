//! Pulse-sequence search for Hamiltonian engineering in qubit and qutrit
//! spin ensembles.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the aliases
//! at the bottom fix `f64`.

pub mod algebra;
pub mod avgham;
mod error;
pub mod groups;
pub mod model;
pub mod search;
pub mod sequences;
pub mod sim;

pub use error::{Error, Result};
pub use pulseforge_milp::Scalar as Real;

pub type Operator = algebra::Operator<f64>;
pub type ProjectionVector = algebra::ProjectionVector<f64>;
pub type EnsembleModel = model::EnsembleModel<f64>;
pub type CouplingDistribution = model::CouplingDistribution<f64>;
pub type PrunedDictionary = groups::PrunedDictionary<f64>;
pub type PulseSequence = avgham::PulseSequence<f64>;
pub type AverageHamiltonianReport = avgham::AverageHamiltonianReport<f64>;
pub type SearchResult = search::SearchResult<f64>;
pub type SimConfig = sim::SimConfig<f64>;
pub type Trace = sim::Trace<f64>;
pub type Spectrum = sim::Spectrum<f64>;

/// Tolerance `x`, floored at a few hundred ulps of `T`.
pub(crate) fn tol<T: Real>(x: f64) -> T {
    T::of(x).max(T::epsilon() * T::of(1e3))
}
