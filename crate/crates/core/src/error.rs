use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),

    #[error("coherence window needs at least 2 slots, got {0}")]
    TooFewSlots(usize),

    #[error("interferometer already applied to the {0} mode")]
    InterferometerAlreadyApplied(&'static str),

    #[error("both interferometers must be applied before post-selection")]
    InterferometersMissing,

    #[error("no non-negative pump power reproduces mu = {mu}")]
    NoPumpSolution { mu: f64 },

    #[error("CAR undefined: zero denominator (no photons and no dark counts)")]
    ZeroDenominator,

    #[error("visibility undefined: no coincidence signal or background")]
    NoCoincidences,

    #[error("insufficient statistics: {0}")]
    InsufficientStatistics(String),

    #[error("single-pair fringe sampling requires mu_c < 0.1, got {0}")]
    PairRateTooHigh(f64),

    #[error("interferometers_present must be {expected} for this run")]
    WrongSetup { expected: bool },

    #[error("negative mean photon number: {0}")]
    NegativeMean(f64),

    #[error("invalid fit input: {0}")]
    FitInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
