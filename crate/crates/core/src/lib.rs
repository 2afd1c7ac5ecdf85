//! Coupled Stokes-Darcy finite elements with a Neumann-Neumann interface
//! preconditioner whose weights are tuned by Fourier analysis.

pub mod dense;
pub mod error;
pub mod exec;
pub mod fem;
pub mod krylov;
pub mod manufactured;
pub mod mesh;
pub mod report;
pub mod schur;
pub mod sparse;
pub mod subdomain;
pub mod weights;

pub use error::{Error, Result};
pub use exec::Execution;
