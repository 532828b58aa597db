//! Compact VQE ansatz construction with ExcitationSolve landscapes and Energy Sorting.
//!
//! Everything runs on an exact state-vector simulator; ground-state references
//! come from the built-in Lanczos eigensolver in [`fci`].

pub mod driver;
pub mod error;
pub mod fci;
pub mod integrals;
pub mod landscape;
pub mod molecule;
pub mod pauli;
pub mod pools;
pub mod preselect;
pub mod selection;
pub mod simulator;
pub mod trace;

pub use error::{Error, Result};
