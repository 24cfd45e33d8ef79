//! Global numerical tolerances.
//!
//! Every rank/zero decision in the crate goes through these constants so a
//! report is reproducible from a single knob.

/// Tolerance for rank and zero decisions (relative to the matrix scale).
pub const TOL: f64 = 1e-9;

/// A singular value within this distance of 1 counts as a unit singular
/// value when classifying boundary points.  Strictly wider than [`TOL`] so
/// stratum indices stay stable under the sampling noise used elsewhere.
pub const BOUNDARY_BAND: f64 = 1e-6;

/// Entrywise tolerance when comparing canonical forms of subspaces.
pub const EQ_TOL: f64 = 1e-8;

/// Residual budget for frame pairing relations after correction.
pub const FRAME_TOL: f64 = 1e-10;

/// Maximum admissible drift of a user-supplied frame curve from the exact
/// pairing relations.
pub const FRAME_DRIFT: f64 = 1e-6;

/// Central-difference step for structure-equation residuals.
pub const FD_STEP: f64 = 1e-4;

/// Cap on the Pluecker-space dimension used by linear-section witnesses.
pub const PLUECKER_CAP: usize = 20_000;

/// Residual threshold for trivial-embedding and decomposition fits.
pub const FIT_TOL: f64 = 1e-7;
