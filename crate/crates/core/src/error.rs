use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("negative weight {weight} at point {point}")]
    NegativeWeight { point: usize, weight: f64 },
    #[error("all weights are zero")]
    AllZero,
    #[error("region has zero probability mass")]
    ZeroMassRegion,
    #[error("{what} = {value} is out of range: {expected}")]
    OutOfRange {
        what: &'static str,
        value: f64,
        expected: &'static str,
    },
    #[error("dimension mismatch: expected {expected} points, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid hypothesis: {0}")]
    InvalidHypothesis(String),
    #[error("exact VC dimension needs n <= {limit}, got n = {n}; supply an override")]
    TooLargeForExactVc { n: usize, limit: usize },
    #[error("committee is empty")]
    EmptyCommittee,
    #[error("no hypothesis in the class is consistent with the samples")]
    NoConsistent,
    #[error("schedule needs {required} queries, budget is {budget}")]
    ScheduleInfeasible { required: u128, budget: u128 },
    #[error("f has zero risk; there is no error point to return")]
    NoErrorExists,
    #[error("f has zero risk; strength is undefined")]
    ZeroRiskFunction,
    #[error("bad mass vector: {0}")]
    BadMassVector(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_open_unit(what: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            what,
            value,
            expected: "must lie in (0, 1)",
        })
    }
}
