use thiserror::Error;

/// Failure modes shared by every engine in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CpfError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),
    #[error("invalid outcome {0}: must be +1 or -1")]
    InvalidOutcome(i64),
    #[error("invalid moment set: {0}")]
    InvalidMomentSet(String),
    #[error("correlation function is a delta at zero lag")]
    DeltaSingular,
    #[error("correlation function undefined for {0}")]
    Undefined(&'static str),
    #[error("zero-probability postselection")]
    ZeroProbabilityPostselection,
    #[error("empty postselection")]
    EmptyPostselection,
    #[error("bath too large: {n} spins (oracle limit {max})")]
    BathTooLarge { n: usize, max: usize },
    #[error("unreachable polarization: |omega/(2 g sqrt N)| = {0} > 1")]
    UnreachablePolarization(f64),
    #[error("step too coarse: dt = {dt} exceeds tau_c/10 = {limit}")]
    StepTooCoarse { dt: f64, limit: f64 },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
}

pub type Result<T> = std::result::Result<T, CpfError>;

pub(crate) fn ensure_finite(v: f64, what: &'static str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CpfError::NonFinite(what))
    }
}

pub(crate) fn ensure_time(v: f64, what: &'static str) -> Result<f64> {
    ensure_finite(v, what)?;
    if v < 0.0 {
        return Err(CpfError::InvalidParameter(format!(
            "{what} = {v} must be >= 0"
        )));
    }
    Ok(v)
}
