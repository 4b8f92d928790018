use alloc::string::String;

/// Errors raised by the model, certification and optimization routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("party index {party} out of range for {n_parties} parties")]
    PartyOutOfRange { party: usize, n_parties: usize },
    #[error("source {src} must feed exactly two parties, it feeds {parties}")]
    NotBipartite { src: usize, parties: usize },
    #[error("party {party} was given zero measurement settings")]
    EmptySettings { party: usize },
    #[error("invalid fractional independent set: {0}")]
    InvalidWeights(String),
    #[error("global dimension {dim} exceeds the cap {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid source state: {0}")]
    InvalidState(String),
    #[error("invalid POVM for party {party}: {reason}")]
    InvalidPovm { party: usize, reason: String },
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("enumeration of {combos} combinations exceeds the cap {cap}")]
    EnumerationCap { combos: u128, cap: u128 },
    #[error("probability of an all-conclusive outcome is zero")]
    ZeroSuccess,
    #[error("{what} = {value} is out of range")]
    OutOfRange { what: &'static str, value: f64 },
    #[error("response of party {party} is not an indicator function")]
    NotIndicator { party: usize },
    #[error("response table of party {party} holds a non-integral label")]
    NonIntegralLabel { party: usize },
    #[error("operator is not positive semidefinite (minimum eigenvalue {min_eigenvalue})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("party {party} is not fair-sampling: bipartition {bipartition} has second singular value {singular_value}")]
    NotFairSampling { party: usize, bipartition: usize, singular_value: f64 },
    #[error("party {party} never outputs a conclusive result")]
    DegenerateParty { party: usize },
    #[error("filtered state of source {src} vanishes")]
    SourceBlocked { src: usize },
    #[error("generating term denominator {0} is not positive")]
    InvalidRegime(f64),
    #[error("{n} sources exceed the enumeration cap of {cap}")]
    TooManySources { n: usize, cap: usize },
}

pub type Result<T> = core::result::Result<T, Error>;
