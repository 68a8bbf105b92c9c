//! LAAD-penalized least squares and a claims-reserving pipeline built on it.
//!
//! The crate is organised bottom-up: [`penalty`] holds the univariate
//! thresholding operators, [`solver`] the coordinate-descent fitter,
//! [`select`] cross-validation and degrees of freedom, [`reserve`] the
//! loss-triangle models, [`uncertainty`] the parametric bootstrap and
//! [`sim`] the simulation study.

pub mod data;
pub mod error;
pub mod penalty;
pub mod reserve;
pub mod select;
pub mod sim;
pub mod solver;
pub mod uncertainty;

pub use error::{Error, Result};
pub use penalty::{PenaltyKind, PenaltySpec, ProxResult};
pub use solver::{CdOptions, Dataset, FitResult, Init, LossScale, PenaltyScale, Sigma2};
