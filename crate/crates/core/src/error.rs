use thiserror::Error;

pub type Result<T> = std::result::Result<T, SimError>;

/// Every failure the simulator can report.
///
/// Messages start with the variant name so that command-line users and
/// scripts can match on them.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("AsymmetricInput: tidal entries ({i},{j}) and ({j},{i}) differ by {delta:e}")]
    AsymmetricInput { i: usize, j: usize, delta: f64 },

    #[error("TraceNotZero: vacuum requested but trace is {trace:e}")]
    TraceNotZero { trace: f64 },

    #[error("OutsideValidity: {0}")]
    OutsideValidity(String),

    #[error("SymmetryViolation: {0}")]
    SymmetryViolation(String),

    #[error("SizeMismatch: expected {expected} values, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },

    #[error("NonFinite: field value at index {index} is not finite")]
    NonFinite { index: usize },

    #[error("InvalidParameter: {0}")]
    InvalidParameter(String),

    #[error("PacketTooWide: {0}")]
    PacketTooWide(String),

    #[error("VelocityTooHigh: |v| = {speed} exceeds {limit}")]
    VelocityTooHigh { speed: f64, limit: f64 },

    #[error("AliasRisk: {0}")]
    AliasRisk(String),

    #[error("StepTooLarge: {0}")]
    StepTooLarge(String),

    #[error("BoundaryContact: probability {mass:e} inside the boundary band at step {step}")]
    BoundaryContact { step: usize, mass: f64 },

    #[error("TooFewRecords: need at least {needed}, got {actual}")]
    TooFewRecords { needed: usize, actual: usize },

    #[error("NonUniformRecords: record spacing varies at index {index}")]
    NonUniformRecords { index: usize },

    #[error("TimestampMismatch: {0}")]
    TimestampMismatch(String),

    #[error("PhaseWrapRisk: tidal phase {phase} at the domain edge is not below pi/4")]
    PhaseWrapRisk { phase: f64 },

    #[error("NotAdjacent: grid nodes {a} and {b} are not neighbours")]
    NotAdjacent { a: usize, b: usize },

    #[error("TooFewVariants: a sweep needs at least 2 variants, got {0}")]
    TooFewVariants(usize),

    #[error("InitialMomentMismatch: variant '{label}' starts {deviation:e} away from the reference moments")]
    InitialMomentMismatch { label: String, deviation: f64 },

    #[error("TooFewPoints: {0}")]
    TooFewPoints(String),

    #[error("Table: {0}")]
    Table(String),

    #[error("variant '{label}' failed: {source}")]
    VariantFailed {
        label: String,
        #[source]
        source: Box<SimError>,
    },
}

impl SimError {
    /// True for failures that happen while a run is under way (as opposed to
    /// rejected inputs).
    pub fn is_runtime(&self) -> bool {
        match self {
            SimError::BoundaryContact { .. } => true,
            SimError::VariantFailed { source, .. } => source.is_runtime(),
            _ => false,
        }
    }

    pub(crate) fn in_variant(self, label: impl Into<String>) -> SimError {
        SimError::VariantFailed {
            label: label.into(),
            source: Box::new(self),
        }
    }
}
