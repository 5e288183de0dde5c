use alloc::string::String;

/// Errors raised by the core algorithms.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A parameter or component list is outside its documented range.
    #[error("configuration error: {0}")]
    Config(String),
    /// An operation was invoked on state that cannot support it.
    #[error("state error: {0}")]
    State(String),
    /// Arguments violate an operation's contract (dimension, finiteness, ...).
    #[error("contract error: {0}")]
    Contract(String),
    /// A framework could not be initialised from its initial window.
    #[error("initialization error: {0}")]
    Initialization(String),
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! bail {
    ($kind:ident, $($arg:tt)*) => {
        return Err($crate::error::Error::$kind(alloc::format!($($arg)*)))
    };
}

pub(crate) use bail;

pub(crate) fn check_dimension(expected: usize, x: &[f64]) -> Result<()> {
    if x.len() != expected {
        bail!(
            Contract,
            "dimension mismatch: expected {}, got {}",
            expected,
            x.len()
        );
    }
    Ok(())
}

pub(crate) fn check_finite(x: &[f64]) -> Result<()> {
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        bail!(Contract, "non-finite feature at index {}", i);
    }
    Ok(())
}
