use num_complex::Complex64;
use thiserror::Error;

use crate::angle::Angle;

/// Errors raised across the toolkit. Variant names follow the failure they
/// report, so CLI output and JSON reports can quote them directly.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("polynomial is not monic: leading coefficient is {0}")]
    NotMonic(Complex64),
    #[error("degree must be at least 2, got {0}")]
    DegreeTooSmall(usize),
    #[error("root finder did not converge after {iterations} iterations (worst correction {residual:e})")]
    RootFindingFailed { iterations: usize, residual: f64 },
    #[error("period {period} too large for degree {degree} (limit {limit} points)")]
    PeriodTooLarge { degree: usize, period: u32, limit: u64 },
    #[error("angle arithmetic overflow")]
    AngleOverflow,
    #[error("invalid angle: {0}")]
    InvalidAngle(String),
    #[error("duplicate source angle {0}")]
    DuplicateSourceAngle(Angle),
    #[error("angle set is not forward invariant: image of {0} is missing")]
    NotInvariant(Angle),
    #[error("point is too close to the Julia set for the Böttcher coordinate (G = {potential:e})")]
    TooCloseToJulia { potential: f64 },
    #[error("{0} is not a regular value of the Green function")]
    NotRegularValue(f64),
    #[error("seed lies outside the sublevel set (G(seed) = {0:e})")]
    SeedOutside(f64),
    #[error("grid resolution too coarse: mask touches the bounding box")]
    ResolutionTooCoarse,
    #[error("angle orbit has {0} elements, limit is 65536")]
    AngleOrbitTooLarge(usize),
    #[error("invalid potential range: {0}")]
    InvalidPotentialRange(String),
    #[error("potential grids of the two rays do not align")]
    LevelMismatch,
    #[error("ray {0} not present in traced set")]
    MissingRay(Angle),
    #[error("landing of ray {0} could not be decided")]
    LandingUndecided(Angle),
    #[error("collection too large: {0} rays")]
    CollectionTooLarge(usize),
    #[error("degenerate embedding: rays {0} and {1} overlap")]
    DegenerateEmbedding(Angle, Angle),
    #[error("census is empty")]
    CensusEmpty,
    #[error("no admissible regular value after {0} halvings")]
    NoAdmissibleValue(usize),
    #[error("inner region is not compactly contained in the outer region")]
    ContainmentFailed,
    #[error("restricted map has degree one (repelling fixed point case)")]
    DegreeOne,
    #[error("argument-principle quadrature unstable (value {0})")]
    QuadratureUnstable(f64),
    #[error("test value too close to the image of the inner boundary")]
    WTooCloseToImageBoundary,
    #[error("test value {0} lies outside the outer region")]
    WOutsideRegion(Complex64),
    #[error("seed is not periodic with period {period} (|f(z) - z| = {residual:e})")]
    NotPeriodic { period: u32, residual: f64 },
    #[error("seed has escaping orbit (G = {0:e})")]
    SeedEscapes(f64),
    #[error("{0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
