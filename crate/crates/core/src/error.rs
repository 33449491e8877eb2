use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("capacity exceeded: {what} needs {required}, cap is {cap}")]
    Capacity {
        what: &'static str,
        required: u128,
        cap: u128,
    },

    /// The selected subset touches its complement at some twist angle.
    #[error("gap closure at theta = {theta:.6} (gap {gap:.3e})")]
    GapClosure { theta: f64, gap: f64 },

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("no propagation front above threshold {threshold}")]
    NoFront { threshold: f64 },

    #[error("band identification failed: {0}")]
    BandIdentification(String),

    /// Strong-coupling effective theory evaluated at U = 0.
    #[error("effective model requires U > 0, got U = {0}")]
    ZeroCoupling(f64),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
