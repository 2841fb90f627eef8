//! Lindblad rate equations: generator assembly, deterministic evolution,
//! memory kernels, stationary states and the equivalent stochastic
//! random walk over channels.
//!
//! Every engine is generic over [`scalar::Real`] (`f32` or `f64`); the
//! aliases below fix the common choices.

pub mod error;
pub mod linalg;
pub mod model;
pub mod qubit;
pub mod scalar;
pub mod solver;
pub mod stochastic;

pub use error::{Error, Result};

pub type Model = model::LindbladRateModel<f64>;
pub type ModelF32 = model::LindbladRateModel<f32>;
pub type WalkModel = stochastic::StochasticModel<f64>;
pub type WalkModelF32 = stochastic::StochasticModel<f32>;
pub type Basis = model::OperatorBasis<f64>;
pub type BasisF32 = model::OperatorBasis<f32>;
pub type Matrix = linalg::CMatrix<f64>;
pub type MatrixF32 = linalg::CMatrix<f32>;
pub type Complex = scalar::C<f64>;
pub type ComplexF32 = scalar::C<f32>;
