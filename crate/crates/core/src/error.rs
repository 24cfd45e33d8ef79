//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("ambiguous numerical rank: singular value gap {gap:.3e} below threshold {threshold:.3e}")]
    AmbiguousRank { gap: f64, threshold: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("matrix violates the symmetry class of the domain: residual {0:.3e}")]
    SymmetryViolation(f64),
    #[error("point is not on the boundary")]
    NotOnBoundary,
    #[error("type II boundary point with an odd number of unit singular values")]
    OddUnitCount,
    #[error("matrix does not preserve the form: residual {0:.3e}")]
    NotAnIsometry(f64),
    #[error("Moebius denominator block is singular")]
    SingularDenominator,
    #[error("invalid flag: {0}")]
    InvalidFlag(String),
    #[error("bad dimension: {0}")]
    BadDimension(String),
    #[error("subspace is not isotropic: residual {0:.3e}")]
    NotIsotropic(f64),
    #[error("level order violated: {0}")]
    LevelOrderViolation(String),
    #[error("point does not satisfy the Sigma_r chart equations: residual {0:.3e}")]
    PointNotOnSigma(f64),
    #[error("vector does not satisfy the linearized chart equations: residual {0:.3e}")]
    TangentNotTangent(f64),
    #[error("frame guess cannot be corrected: {0}")]
    Degenerate(String),
    #[error("frame curve drifts from the pairing relations: residual {0:.3e}")]
    FrameDriftTooLarge(f64),
    #[error("invalid frame-change parameters: {0}")]
    InvalidParams(String),
    #[error("tangent is not on the VMRT")]
    NotOnVMRT,
    #[error("tangent is a singular point of the VMRT")]
    SingularPoint,
    #[error("Pluecker dimension {0} exceeds the configured cap")]
    DimensionTooLarge(usize),
    #[error("dilation parameter must be nonzero")]
    ZeroParameter,
    #[error("bad minimal-curve seed: {0}")]
    BadSeed(String),
    #[error("point does not lie on the characteristic slice")]
    PointNotOnSlice,
    #[error("chart failure: {0}")]
    ChartFailure(String),
    #[error("degenerate jet: {0}")]
    DegenerateJet(String),
    #[error("index sequence is not strictly increasing: {0}")]
    MonotonicityViolation(String),
    #[error("moduli map depends on both flag legs")]
    InconsistentDependence,
    #[error("insufficient samples: need {need}, got {got}")]
    InsufficientSamples { need: usize, got: usize },
    #[error("rank hypothesis of the decomposition fails: {0}")]
    RegimeViolation(String),
    #[error("orthogonality identity fails: residual {0:.3e}")]
    OrthogonalityResidual(f64),
    #[error("map is degenerate: {0}")]
    DegenerateMap(String),
    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
    #[error("input error: {0}")]
    Input(String),
}

impl Error {
    pub fn in_stage(self, stage: &str) -> Error {
        Error::Stage {
            stage: stage.to_string(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
