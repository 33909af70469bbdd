//! Scattered-data approximation in a vector-valued reproducing-kernel
//! Hilbert space by projected stochastic gradient descent.
//!
//! The crate fits a function f: R^d -> R^m to data pairs (x_i, y_i) by
//! minimizing
//!
//! ```text
//! u(f) = q/2 |f|_H^2 + (1 - q)/(2n) sum_i |f(x_i) - y_i|^2
//! ```
//!
//! over a closed ball of an RKHS with a separable matrix kernel
//! k(x, x') I. Two solvers are provided: an exact one (`exact`), which
//! reduces the problem to a regularized linear system plus a scalar
//! search for the ball multiplier, and a randomized one (`sgd`), which
//! samples one loss term per step and keeps the iterate as a growing
//! kernel expansion. The `harness` module measures the randomized
//! solver's expected squared error against the exact minimizer over many
//! independent trials, checks the observed O(1/k) decay, and `verify`
//! replays the supporting identities and inequalities on seeded random
//! instances.
//!
//! Everything is generic over the scalar type through [`scalar::Real`].
//! The `*64` aliases below are the supported configuration; f32 compiles
//! and runs but the stated tolerances assume f64 arithmetic.

// Validation paths write `!(x > 0)` on purpose: unlike `x <= 0` it also
// rejects NaN. Matrix kernels keep indexed loops because the index feeds
// strided address arithmetic; iterator forms hide that.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod error;
pub mod exact;
pub mod harness;
pub mod kernel;
pub mod linalg;
pub mod objective;
pub mod rkhs;
pub mod scalar;
pub mod sgd;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Real;

pub type KernelSpec64 = kernel::KernelSpec<f64>;
pub type GramMatrix64 = kernel::GramMatrix<f64>;
pub type Dataset64 = rkhs::Dataset<f64>;
pub type Rkhs64 = rkhs::Rkhs<f64>;
pub type Expansion64 = rkhs::Expansion<f64>;
pub type AtomList64 = rkhs::AtomList<f64>;
pub type Problem64 = objective::Problem<f64>;
pub type Constants64 = objective::Constants<f64>;
pub type ExactSolution64 = exact::ExactSolution<f64>;
pub type ScalingLaw64 = sgd::ScalingLaw<f64>;
pub type StepSchedule64 = sgd::StepSchedule<f64>;
pub type SgdState64 = sgd::SgdState<f64>;
pub type ErrorCurve64 = harness::ErrorCurve<f64>;
pub type RateFit64 = harness::RateFit<f64>;
pub type ExperimentConfig64 = harness::ExperimentConfig<f64>;
