//! Quantum Bhattacharyya variance lower bounds (Types S, R, L) for
//! one-parameter quantum statistical models on truncated Fock spaces,
//! with the closed-form optimal unbiased estimators of the quantum
//! Gaussian (displaced thermal) model.

pub mod bhatt;
pub mod error;
pub mod estimators;
pub mod fock;
pub mod logderiv;
pub mod model;
pub mod poly;

pub use bhatt::{GFunction, InfoMatrix, JFlavor, JSource};
pub use error::Error;
pub use fock::{DensityOperator, FockOperator};
pub use logderiv::{LogDerivFlavor, LogDerivVector};
pub use model::{DerivativeStack, StackKind};
pub use poly::NormalOrderedPoly;

pub type Result<T> = std::result::Result<T, Error>;
