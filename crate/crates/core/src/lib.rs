//! Pinning analysis for one-body reduced density operators of pure states.
//!
//! The crate computes natural occupation numbers and orbitals, evaluates
//! affine spectral constraints, checks the selection rules implied by their
//! saturation, computes local symmetry algebras, and certifies the
//! combinatorial hull condition used to extend the rules to degenerate
//! spectra.

pub mod combinat;
pub mod constraints;
pub mod error;
pub mod fockstate;
pub mod geometry;
pub mod linalg;
pub mod marginals;
pub mod rdm;
pub mod selection;
pub mod symmetry;

pub use error::{PinError, Result};

/// Library version embedded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
