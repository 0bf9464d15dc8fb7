use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    #[error("quadrature did not converge after {nodes} nodes (defect {defect:.3e})")]
    NonConvergence { nodes: usize, defect: f64 },

    #[error("evaluation point lies within {distance:.3e} of the contour")]
    TooCloseToContour { distance: f64 },

    #[error("extracted coefficients are inconsistent with degree {degree} (defect {defect:.3e})")]
    DegreeMismatch { degree: usize, defect: f64 },

    #[error("moment system is singular or ill-conditioned (condition estimate {condition:.3e})")]
    SingularMomentSystem { condition: f64 },

    #[error("det(P W) winds {winding} times around the contour (det W has {expected} zeros inside)")]
    ZeroInsideContour { winding: i64, expected: usize },

    #[error("kernel routes disagree (relative defect {defect:.3e})")]
    RouteDisagreement { defect: f64 },

    #[error("no circle separates the points: max enclosed {max_enclosed:.6e} >= min excluded {min_excluded:.6e}")]
    ContourGeometryImpossible { max_enclosed: f64, min_excluded: f64 },

    #[error("spectral curve has genus zero: x2 = {x2:.15e}, x1 = {x1:.15e}")]
    GenusZero { x2: f64, x1: f64 },

    #[error("branch point {re:.6e}{im:+.6e}i is not real")]
    NonRealBranchPoint { re: f64, im: f64 },

    #[error("period normalization failed: {detail}")]
    PeriodNormalizationFailure { detail: String },

    #[error("integration path to {re:.6e}{im:+.6e}i would cross a cut")]
    PathCrossesCut { re: f64, im: f64 },

    #[error("degenerate position: {detail}")]
    DegeneratePosition { detail: String },

    #[error("normalizing matrix is not lower triangular (off-triangle mass {mass:.3e})")]
    TriangularityViolation { mass: f64 },

    #[error("invalid kernel query: {0}")]
    InvalidQuery(String),

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub fn domain(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            op,
            detail: detail.into(),
        }
    }

    /// Short machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain { .. } => "DomainError",
            Error::NonConvergence { .. } => "NonConvergence",
            Error::TooCloseToContour { .. } => "TooCloseToContour",
            Error::DegreeMismatch { .. } => "DegreeMismatch",
            Error::SingularMomentSystem { .. } => "SingularMomentSystem",
            Error::ZeroInsideContour { .. } => "ZeroInsideContour",
            Error::RouteDisagreement { .. } => "RouteDisagreement",
            Error::ContourGeometryImpossible { .. } => "ContourGeometryImpossible",
            Error::GenusZero { .. } => "GenusZero",
            Error::NonRealBranchPoint { .. } => "NonRealBranchPoint",
            Error::PeriodNormalizationFailure { .. } => "PeriodNormalizationFailure",
            Error::PathCrossesCut { .. } => "PathCrossesCut",
            Error::DegeneratePosition { .. } => "DegeneratePosition",
            Error::TriangularityViolation { .. } => "TriangularityViolation",
            Error::InvalidQuery(_) => "InvalidQuery",
            Error::Config(_) => "ConfigError",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
