//! Scalar abstraction for the numerical kernels.
//!
//! Everything numeric in this crate is written against [`Scalar`] so the
//! same code instantiates at `f64` (the default everywhere in the pipeline)
//! and `f32`. Validation tolerances live on the trait because a sensible
//! symmetry or orthonormality check is necessarily coarser in single
//! precision.

use ndarray::ScalarOperand;
use num_traits::{Float, NumAssignOps};
use std::fmt::{Debug, Display};
use std::iter::Sum;

pub trait Scalar:
    Float + NumAssignOps + ScalarOperand + Sum + Debug + Display + Send + Sync + 'static
{
    /// Absolute tolerance for structural validation (symmetry, simplex
    /// feasibility, nonnegativity slack).
    const CHECK_TOL: Self;
    /// Absolute tolerance for orthonormality checks on partition matrices.
    const ORTHO_TOL: Self;
    /// Relative cutoff under which a singular value or eigenvalue counts as
    /// zero when forming pseudo-inverses.
    const RANK_TOL: Self;

    fn from_f64(x: f64) -> Self;
    fn from_usize(x: usize) -> Self;
    fn to_f64_lossy(self) -> f64;
}

impl Scalar for f64 {
    const CHECK_TOL: Self = 1e-10;
    const ORTHO_TOL: Self = 1e-8;
    const RANK_TOL: Self = 1e-12;

    fn from_f64(x: f64) -> Self {
        x
    }

    fn from_usize(x: usize) -> Self {
        x as f64
    }

    fn to_f64_lossy(self) -> f64 {
        self
    }
}

impl Scalar for f32 {
    const CHECK_TOL: Self = 1e-4;
    const ORTHO_TOL: Self = 1e-3;
    const RANK_TOL: Self = 1e-6;

    fn from_f64(x: f64) -> Self {
        x as f32
    }

    fn from_usize(x: usize) -> Self {
        x as f32
    }

    fn to_f64_lossy(self) -> f64 {
        self as f64
    }
}
