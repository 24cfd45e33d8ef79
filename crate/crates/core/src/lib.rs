//! Numerical toolkit for the matrix models of the classical bounded
//! symmetric domains: flag moduli of characteristic subspaces, the CR
//! hypersurfaces sitting over boundary strata, adapted moving frames,
//! varieties of minimal rational tangents, jet-induced moduli maps of
//! proper holomorphic maps, and the rigidity detectors built on top.

pub mod config;
pub mod error;
pub mod linalg;

pub mod forms;
pub mod subspace;

pub mod domains;
pub mod moduli;
pub mod sampling;
pub mod frames;
pub mod sigma_chart;
pub mod modulimap;
pub mod poly;
pub mod rigidity;
pub mod vmrt;

pub use error::{Error, Result};
pub use subspace::Subspace;
