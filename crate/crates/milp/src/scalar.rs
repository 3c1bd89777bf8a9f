use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign};

/// Floating point type the solver is generic over.
///
/// Implemented for `f32` and `f64`. Default tolerances scale with the
/// precision of the type.
pub trait Scalar: 'static + Send + Sync + Float + FromPrimitive + NumAssign + Default + Sum + Debug + Display {
    /// Primal feasibility tolerance used when none is given.
    fn default_feas_tol() -> Self;
    /// Integrality tolerance used when none is given.
    fn default_int_tol() -> Self;
    /// Smallest pivot magnitude the simplex accepts.
    fn pivot_tol() -> Self;
    /// Reduced-cost magnitude below which a column counts as optimal.
    fn opt_tol() -> Self;

    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant representable")
    }
}

impl Scalar for f64 {
    fn default_feas_tol() -> Self {
        1e-7
    }
    fn default_int_tol() -> Self {
        1e-6
    }
    fn pivot_tol() -> Self {
        1e-7
    }
    fn opt_tol() -> Self {
        1e-9
    }
}

impl Scalar for f32 {
    fn default_feas_tol() -> Self {
        1e-4
    }
    fn default_int_tol() -> Self {
        1e-3
    }
    fn pivot_tol() -> Self {
        1e-4
    }
    fn opt_tol() -> Self {
        1e-5
    }
}
